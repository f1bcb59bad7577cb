//! Exact combinatorial engine for the map calculus behind the determinantal
//! formulas: enumeration of the index maps `Phi_{n,d}` and `Phi_{k,l;d}`,
//! evaluation of the defining sum on discrete measures, the closed
//! `Ntilde` matrix it collapses to, and the mixed row/column determinant
//! expansion.
//!
//! On finite grids with counting measure every integral becomes a finite
//! sum, so the identity `sum = det` is an exact polynomial identity in the
//! matrix entries; the only tolerance needed is roundoff.

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Codomain element of a map: the pair index is 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    Unprimed(usize),
    Primed(usize),
}

impl Target {
    /// Inverse of the interleaved encoding 1, 1', 2, 2', ... that fixes the
    /// lexicographic enumeration order.
    fn from_code(c: usize) -> Target {
        if c % 2 == 0 {
            Target::Unprimed(c / 2)
        } else {
            Target::Primed(c / 2)
        }
    }

    pub fn pair(&self) -> usize {
        match *self {
            Target::Unprimed(i) | Target::Primed(i) => i,
        }
    }
}

/// An injective map from `n` labels into `{1,1';...;d,d'}` hitting every
/// pair at least once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhiMap {
    d: usize,
    targets: Vec<Target>,
}

impl PhiMap {
    /// Build a map by hand, checking injectivity, target range, and the
    /// pair-cover condition.
    pub fn new(d: usize, targets: Vec<Target>) -> Result<Self> {
        let mut hit = vec![0usize; d];
        let mut seen = std::collections::HashSet::new();
        for t in &targets {
            if t.pair() >= d {
                return Err(Error::Domain(format!(
                    "target pair {} out of range for d = {d}",
                    t.pair() + 1
                )));
            }
            if !seen.insert(*t) {
                return Err(Error::Domain("map must be injective".into()));
            }
            hit[t.pair()] += 1;
        }
        if hit.iter().any(|&h| h == 0) {
            return Err(Error::Domain("every pair must be hit by the map".into()));
        }
        Ok(PhiMap { d, targets })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.targets.len()
    }

    /// Image of label `k` (0-based).
    pub fn target(&self, k: usize) -> Target {
        self.targets[k]
    }

    pub fn targets(&self) -> &[Target] {
        &self.targets
    }
}

const ENUM_GUARD: usize = 8;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// All of `Phi_{n,d}` in lexicographic order of the interleaved target
/// codes. Empty outside `n/2 <= d <= n`.
pub fn enum_phi(n: usize, d: usize) -> Result<Vec<PhiMap>> {
    if n < 1 || d < 1 {
        return Err(Error::Domain("enum_phi requires n >= 1, d >= 1".into()));
    }
    if n > ENUM_GUARD {
        return Err(Error::SizeGuard(format!(
            "enum_phi limited to n <= {ENUM_GUARD}, got n = {n}"
        )));
    }
    let mut out = Vec::new();
    if 2 * d < n || d > n {
        return Ok(out);
    }
    let mut targets = Vec::with_capacity(n);
    let mut used = vec![false; 2 * d];
    let mut pair_hits = vec![0usize; d];
    enum_phi_rec(n, d, &mut targets, &mut used, &mut pair_hits, &mut out);
    Ok(out)
}

fn enum_phi_rec(
    n: usize,
    d: usize,
    targets: &mut Vec<Target>,
    used: &mut [bool],
    pair_hits: &mut [usize],
    out: &mut Vec<PhiMap>,
) {
    if targets.len() == n {
        if pair_hits.iter().all(|&h| h > 0) {
            out.push(PhiMap {
                d,
                targets: targets.clone(),
            });
        }
        return;
    }
    // Pruning: every still-uncovered pair needs one of the remaining labels.
    let uncovered = pair_hits.iter().filter(|&&h| h == 0).count();
    if uncovered > n - targets.len() {
        return;
    }
    for code in 0..2 * d {
        if used[code] {
            continue;
        }
        let t = Target::from_code(code);
        used[code] = true;
        pair_hits[t.pair()] += 1;
        targets.push(t);
        enum_phi_rec(n, d, targets, used, pair_hits, out);
        targets.pop();
        pair_hits[t.pair()] -= 1;
        used[code] = false;
    }
}

/// All of `Phi_{k,l;d}`: source labels are `k` row labels followed by `l`
/// column labels; row labels map into the unprimed half, column labels into
/// the primed half, injectively, covering every pair.
pub fn enum_phi_kl(k: usize, l: usize, d: usize) -> Result<Vec<PhiMap>> {
    if k + l < 1 {
        return Err(Error::Domain("enum_phi_kl requires k + l >= 1".into()));
    }
    if k + l > ENUM_GUARD {
        return Err(Error::SizeGuard(format!(
            "enum_phi_kl limited to k + l <= {ENUM_GUARD}, got {}",
            k + l
        )));
    }
    let mut out = Vec::new();
    if d < k.max(l).max(1) || d > k + l {
        return Ok(out);
    }
    // Choose ordered injective images for the rows and the columns, then
    // keep the pairs-covered ones.
    let mut rows = Vec::with_capacity(k);
    let mut cols = Vec::with_capacity(l);
    let mut row_used = vec![false; d];
    let mut col_used = vec![false; d];
    fn rec(
        k: usize,
        l: usize,
        d: usize,
        rows: &mut Vec<usize>,
        cols: &mut Vec<usize>,
        row_used: &mut [bool],
        col_used: &mut [bool],
        out: &mut Vec<PhiMap>,
    ) {
        if rows.len() < k {
            for i in 0..d {
                if row_used[i] {
                    continue;
                }
                row_used[i] = true;
                rows.push(i);
                rec(k, l, d, rows, cols, row_used, col_used, out);
                rows.pop();
                row_used[i] = false;
            }
            return;
        }
        if cols.len() < l {
            for j in 0..d {
                if col_used[j] {
                    continue;
                }
                col_used[j] = true;
                cols.push(j);
                rec(k, l, d, rows, cols, row_used, col_used, out);
                cols.pop();
                col_used[j] = false;
            }
            return;
        }
        if (0..d).all(|m| row_used[m] || col_used[m]) {
            let targets = rows
                .iter()
                .map(|&i| Target::Unprimed(i))
                .chain(cols.iter().map(|&j| Target::Primed(j)))
                .collect();
            out.push(PhiMap { d, targets });
        }
    }
    rec(k, l, d, &mut rows, &mut cols, &mut row_used, &mut col_used, &mut out);
    Ok(out)
}

/// Finite discrete data for the oracle: grids on the two half-lines and the
/// two coupling matrices. The support conditions (`N` lives on
/// positive-by-negative, `w` on negative-by-positive) are encoded by the
/// index sets themselves.
#[derive(Debug, Clone)]
pub struct DiscreteKernelPair {
    pos_grid: Vec<f64>,
    neg_grid: Vec<f64>,
    /// `n_mat[(i, j)] = N(pos_grid[i], neg_grid[j])`.
    n_mat: DenseMatrix,
    /// `w_mat[(j, i)] = w(neg_grid[j], pos_grid[i])`.
    w_mat: DenseMatrix,
}

impl DiscreteKernelPair {
    pub fn new(
        pos_grid: Vec<f64>,
        neg_grid: Vec<f64>,
        n_mat: DenseMatrix,
        w_mat: DenseMatrix,
    ) -> Result<Self> {
        if pos_grid.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::Domain("pos_grid entries must be > 0".into()));
        }
        if neg_grid.iter().any(|&x| !(x < 0.0)) {
            return Err(Error::Domain("neg_grid entries must be < 0".into()));
        }
        for (name, grid) in [("pos_grid", &pos_grid), ("neg_grid", &neg_grid)] {
            for i in 0..grid.len() {
                for j in (i + 1)..grid.len() {
                    if grid[i] == grid[j] {
                        return Err(Error::Domain(format!("{name} entries must be distinct")));
                    }
                }
            }
        }
        if n_mat.rows() != pos_grid.len() || n_mat.cols() != neg_grid.len() {
            return Err(Error::Shape("N must be pos_grid x neg_grid".into()));
        }
        if w_mat.rows() != neg_grid.len() || w_mat.cols() != pos_grid.len() {
            return Err(Error::Shape("w must be neg_grid x pos_grid".into()));
        }
        Ok(DiscreteKernelPair {
            pos_grid,
            neg_grid,
            n_mat,
            w_mat,
        })
    }

    pub fn pos_grid(&self) -> &[f64] {
        &self.pos_grid
    }

    pub fn neg_grid(&self) -> &[f64] {
        &self.neg_grid
    }

    pub fn n_entry(&self, pos_idx: usize, neg_idx: usize) -> f64 {
        self.n_mat[(pos_idx, neg_idx)]
    }

    pub fn w_entry(&self, neg_idx: usize, pos_idx: usize) -> f64 {
        self.w_mat[(neg_idx, pos_idx)]
    }

    fn pos_index(&self, x: f64) -> Result<usize> {
        self.pos_grid
            .iter()
            .position(|&g| g == x)
            .ok_or_else(|| Error::Domain(format!("point {x} is not on the positive grid")))
    }

    fn neg_index(&self, x: f64) -> Result<usize> {
        self.neg_grid
            .iter()
            .position(|&g| g == x)
            .ok_or_else(|| Error::Domain(format!("point {x} is not on the negative grid")))
    }
}

/// `H_d` at pinned grid indices:
/// `(1/d!) prod_i w(s_i, r_i) * det [N(r_i, s_j)]`.
pub fn eval_h_d(dk: &DiscreteKernelPair, r_idx: &[usize], s_idx: &[usize]) -> Result<f64> {
    if r_idx.len() != s_idx.len() {
        return Err(Error::Shape("r and s index lists must have equal length".into()));
    }
    let d = r_idx.len();
    let mut w_prod = 1.0;
    for i in 0..d {
        w_prod *= dk.w_entry(s_idx[i], r_idx[i]);
        if w_prod == 0.0 {
            return Ok(0.0);
        }
    }
    let n = DenseMatrix::from_fn(d, d, |i, j| dk.n_entry(r_idx[i], s_idx[j]));
    Ok(w_prod * n.det()? / factorial(d))
}

/// `(phi H_d)(points)`: pin the named variables to the given grid points and
/// sum `H_d` over all grid assignments of the mute variables.
pub fn apply_phi(dk: &DiscreteKernelPair, phi: &PhiMap, points: &[f64]) -> Result<f64> {
    if points.len() != phi.n() {
        return Err(Error::Shape(format!(
            "map has {} labels but {} points were given",
            phi.n(),
            points.len()
        )));
    }
    let d = phi.d();
    let mut r_pin: Vec<Option<usize>> = vec![None; d];
    let mut s_pin: Vec<Option<usize>> = vec![None; d];
    for (k, &x) in points.iter().enumerate() {
        match phi.target(k) {
            Target::Unprimed(i) => {
                if !(x > 0.0) {
                    return Err(Error::Domain(format!(
                        "label {} maps to an unprimed slot but point {x} is not positive",
                        k + 1
                    )));
                }
                r_pin[i] = Some(dk.pos_index(x)?);
            }
            Target::Primed(j) => {
                if !(x < 0.0) {
                    return Err(Error::Domain(format!(
                        "label {} maps to a primed slot but point {x} is not negative",
                        k + 1
                    )));
                }
                s_pin[j] = Some(dk.neg_index(x)?);
            }
        }
    }

    let mute_r: Vec<usize> = (0..d).filter(|&i| r_pin[i].is_none()).collect();
    let mute_s: Vec<usize> = (0..d).filter(|&j| s_pin[j].is_none()).collect();
    let np = dk.pos_grid.len();
    let nn = dk.neg_grid.len();

    let mut r_idx: Vec<usize> = r_pin.iter().map(|x| x.unwrap_or(0)).collect();
    let mut s_idx: Vec<usize> = s_pin.iter().map(|x| x.unwrap_or(0)).collect();

    // Odometer over grid assignments of the mute slots.
    let mut total = 0.0;
    let mut counters = vec![0usize; mute_r.len() + mute_s.len()];
    loop {
        for (c, &slot) in counters.iter().zip(&mute_r) {
            r_idx[slot] = *c;
        }
        for (c, &slot) in counters[mute_r.len()..].iter().zip(&mute_s) {
            s_idx[slot] = *c;
        }
        total += eval_h_d(dk, &r_idx, &s_idx)?;

        let mut pos = 0;
        loop {
            if pos == counters.len() {
                return Ok(total);
            }
            let limit = if pos < mute_r.len() { np } else { nn };
            counters[pos] += 1;
            if counters[pos] < limit {
                break;
            }
            counters[pos] = 0;
            pos += 1;
        }
    }
}

const LHS_GUARD: usize = 6;

/// Left-hand side of the determinantal identity: the full double sum over
/// `d` and all maps (the `1/d!` inside `H_d` absorbs the orbit overcount).
/// Maps whose slot signs disagree with the point signs are killed by the
/// support conditions and contribute zero.
pub fn necklace_lhs(dk: &DiscreteKernelPair, points: &[f64]) -> Result<f64> {
    let n = points.len();
    if n < 1 {
        return Err(Error::Domain("need at least one point".into()));
    }
    if n > LHS_GUARD {
        return Err(Error::SizeGuard(format!(
            "necklace sum limited to n <= {LHS_GUARD}, got n = {n}"
        )));
    }
    let mut total = 0.0;
    for d in n.div_ceil(2)..=n {
        for phi in enum_phi(n, d)? {
            let compatible = points.iter().enumerate().all(|(k, &x)| match phi.target(k) {
                Target::Unprimed(_) => x > 0.0,
                Target::Primed(_) => x < 0.0,
            });
            if !compatible {
                continue;
            }
            total += apply_phi(dk, &phi, points)?;
        }
    }
    Ok(total)
}

/// One entry of the collapsed `Ntilde` matrix on the grids (integrals are
/// counting-measure sums):
///
/// ```text
/// x>0, y>0:  sum_s N(x,s) w(s,y)
/// x>0, y<0:  N(x,y)
/// x<0, y>0:  sum_{r,s} w(x,r) N(r,s) w(s,y) - w(x,y)
/// x<0, y<0:  sum_r w(x,r) N(r,y)
/// ```
pub fn ntilde_discrete(dk: &DiscreteKernelPair, x: f64, y: f64) -> Result<f64> {
    let np = dk.pos_grid.len();
    let nn = dk.neg_grid.len();
    match (x > 0.0, y > 0.0) {
        (true, true) => {
            let (ix, iy) = (dk.pos_index(x)?, dk.pos_index(y)?);
            Ok((0..nn).map(|s| dk.n_entry(ix, s) * dk.w_entry(s, iy)).sum())
        }
        (true, false) => {
            let (ix, iy) = (dk.pos_index(x)?, dk.neg_index(y)?);
            Ok(dk.n_entry(ix, iy))
        }
        (false, true) => {
            let (ix, iy) = (dk.neg_index(x)?, dk.pos_index(y)?);
            let mut acc = 0.0;
            for r in 0..np {
                for s in 0..nn {
                    acc += dk.w_entry(ix, r) * dk.n_entry(r, s) * dk.w_entry(s, iy);
                }
            }
            Ok(acc - dk.w_entry(ix, iy))
        }
        (false, false) => {
            let (ix, iy) = (dk.neg_index(x)?, dk.neg_index(y)?);
            Ok((0..np).map(|r| dk.w_entry(ix, r) * dk.n_entry(r, iy)).sum())
        }
    }
}

/// Right-hand side of the identity: `det [Ntilde(x_i, x_j)]`.
pub fn necklace_rhs(dk: &DiscreteKernelPair, points: &[f64]) -> Result<f64> {
    let n = points.len();
    if n > LHS_GUARD {
        return Err(Error::SizeGuard(format!(
            "necklace determinant limited to n <= {LHS_GUARD}, got n = {n}"
        )));
    }
    let mut m = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = ntilde_discrete(dk, points[i], points[j])?;
        }
    }
    m.det()
}

const LAPLACE_N_GUARD: usize = 8;
const LAPLACE_KL_GUARD: usize = 4;

/// Parity sign of the permutation sending the paired rows `a_i` to the
/// paired columns `b_i` and the remaining rows, in ascending order, to the
/// remaining columns in ascending order. This is exactly the sign with
/// which `m_{a_1 b_1} ... m_{a_d b_d} * complementary minor` enters the
/// full determinant expansion.
fn pairing_sign(a: &[usize], b: &[usize], n: usize) -> f64 {
    let mut perm = vec![usize::MAX; n];
    let mut col_taken = vec![false; n];
    for (&ai, &bi) in a.iter().zip(b) {
        perm[ai] = bi;
        col_taken[bi] = true;
    }
    let free_cols: Vec<usize> = (0..n).filter(|&j| !col_taken[j]).collect();
    let mut next = 0;
    for row in perm.iter_mut() {
        if *row == usize::MAX {
            *row = free_cols[next];
            next += 1;
        }
    }
    // Parity by cycle count.
    let mut seen = vec![false; n];
    let mut transpositions = 0usize;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut cur = start;
        while !seen[cur] {
            seen[cur] = true;
            cur = perm[cur];
            len += 1;
        }
        transpositions += len - 1;
    }
    if transpositions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn ordered_tuples(pool: &[usize], len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(len);
    let mut used = vec![false; pool.len()];
    fn rec(
        pool: &[usize],
        len: usize,
        cur: &mut Vec<usize>,
        used: &mut [bool],
        out: &mut Vec<Vec<usize>>,
    ) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for i in 0..pool.len() {
            if used[i] {
                continue;
            }
            used[i] = true;
            cur.push(pool[i]);
            rec(pool, len, cur, used, out);
            cur.pop();
            used[i] = false;
        }
    }
    rec(pool, len, &mut cur, &mut used, &mut out);
    out
}

/// Expansion of `det M` along the first `k` rows and first `l` columns:
///
/// ```text
/// det M = sum_d sum_{phi in Phi_{k,l;d}} (1/d!) (phi M)
/// ```
///
/// where `(phi M)` sums signed products
/// `m_{a_1 b_1} ... m_{a_d b_d} * M(rows a dropped | cols b dropped)` over
/// all placements of the unspecified indices. `k = 1, l = 0` is the first
/// row expansion; `l = 0` with general `k` is the classical multi-row
/// expansion.
pub fn laplace_expand(m: &DenseMatrix, k: usize, l: usize) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::Shape("laplace_expand needs a square matrix".into()));
    }
    let n = m.rows();
    if n > LAPLACE_N_GUARD {
        return Err(Error::SizeGuard(format!(
            "laplace_expand limited to N <= {LAPLACE_N_GUARD}, got N = {n}"
        )));
    }
    if k + l < 1 || k + l > LAPLACE_KL_GUARD {
        return Err(Error::SizeGuard(format!(
            "laplace_expand limited to 1 <= k + l <= {LAPLACE_KL_GUARD}, got k = {k}, l = {l}"
        )));
    }
    if k > n || l > n {
        return Err(Error::Shape(format!(
            "cannot expand along {k} rows and {l} columns of a {n}x{n} matrix"
        )));
    }

    let mut total = 0.0;
    for d in k.max(l).max(1)..=(k + l).min(n) {
        for phi in enum_phi_kl(k, l, d)? {
            // Specified slots: phi maps row label r to Unprimed(i), meaning
            // a_i = r; column label c to Primed(j), meaning b_j = c.
            let mut a_slots: Vec<Option<usize>> = vec![None; d];
            let mut b_slots: Vec<Option<usize>> = vec![None; d];
            for (label, t) in phi.targets().iter().enumerate() {
                match *t {
                    Target::Unprimed(i) => a_slots[i] = Some(label),
                    Target::Primed(j) => b_slots[j] = Some(label - k),
                }
            }
            let free_a_slots: Vec<usize> = (0..d).filter(|&i| a_slots[i].is_none()).collect();
            let free_b_slots: Vec<usize> = (0..d).filter(|&j| b_slots[j].is_none()).collect();
            let a_pool: Vec<usize> = (k..n).collect();
            let b_pool: Vec<usize> = (l..n).collect();

            let mut phi_m = 0.0;
            for a_choice in ordered_tuples(&a_pool, free_a_slots.len()) {
                let mut a: Vec<usize> = a_slots.iter().map(|x| x.unwrap_or(0)).collect();
                for (slot, v) in free_a_slots.iter().zip(&a_choice) {
                    a[*slot] = *v;
                }
                for b_choice in ordered_tuples(&b_pool, free_b_slots.len()) {
                    let mut b: Vec<usize> = b_slots.iter().map(|x| x.unwrap_or(0)).collect();
                    for (slot, v) in free_b_slots.iter().zip(&b_choice) {
                        b[*slot] = *v;
                    }
                    let mut prod = 1.0;
                    for i in 0..d {
                        prod *= m[(a[i], b[i])];
                    }
                    if prod == 0.0 {
                        continue;
                    }
                    let minor = m.minor_removing(&a, &b).det()?;
                    phi_m += pairing_sign(&a, &b, n) * prod * minor;
                }
            }
            total += phi_m / factorial(d);
        }
    }
    Ok(total)
}

/// Diagnostic necklace built from a map and a pairing permutation: the white
/// bead `i` is followed by the black bead `sigma(i)'` and preceded by the
/// black bead `i'`.
#[derive(Debug, Clone)]
pub struct Necklace {
    components: Vec<Vec<Bead>>,
}

#[derive(Debug, Clone, Copy)]
pub struct Bead {
    pub white: bool,
    /// 1-based label, when the bead is named by a point.
    pub label: Option<usize>,
}

impl Necklace {
    pub fn from_phi_sigma(phi: &PhiMap, sigma: &[usize]) -> Result<Necklace> {
        let d = phi.d();
        if sigma.len() != d {
            return Err(Error::Shape("sigma must be a permutation of 0..d".into()));
        }
        let mut white_label = vec![None; d];
        let mut black_label = vec![None; d];
        for (k, t) in phi.targets().iter().enumerate() {
            match *t {
                Target::Unprimed(i) => white_label[i] = Some(k + 1),
                Target::Primed(j) => black_label[j] = Some(k + 1),
            }
        }
        let mut seen = vec![false; d];
        let mut components = Vec::new();
        for start in 0..d {
            if seen[start] {
                continue;
            }
            let mut beads = Vec::new();
            let mut cur = start;
            while !seen[cur] {
                seen[cur] = true;
                beads.push(Bead {
                    white: true,
                    label: white_label[cur],
                });
                beads.push(Bead {
                    white: false,
                    label: black_label[sigma[cur]],
                });
                cur = sigma[cur];
            }
            components.push(beads);
        }
        Ok(Necklace { components })
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }
}

impl std::fmt::Display for Necklace {
    /// One line per component; beads as `W`/`B` with 1-based labels in
    /// brackets.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, comp) in self.components.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            let mut first = true;
            for bead in comp {
                if !first {
                    write!(f, " ")?;
                }
                first = false;
                write!(f, "{}", if bead.white { "W" } else { "B" })?;
                if let Some(l) = bead.label {
                    write!(f, "[{l}]")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    fn random_dk(rng: &mut RngStream, np: usize, nn: usize) -> DiscreteKernelPair {
        let pos: Vec<f64> = (0..np).map(|i| 0.5 + i as f64).collect();
        let neg: Vec<f64> = (0..nn).map(|j| -0.5 - j as f64).collect();
        let n = DenseMatrix::from_fn(np, nn, |_, _| rng.uniform_in(-1.0, 1.0));
        let w = DenseMatrix::from_fn(nn, np, |_, _| rng.uniform_in(-1.0, 1.0));
        DiscreteKernelPair::new(pos, neg, n, w).unwrap()
    }

    #[test]
    fn phi_counts_small() {
        assert_eq!(enum_phi(1, 1).unwrap().len(), 2);
        assert_eq!(enum_phi(2, 2).unwrap().len(), 8);
        assert_eq!(enum_phi(3, 1).unwrap().len(), 0);
    }

    #[test]
    fn phi_counts_match_exhaustive_table() {
        // Frozen from an independent brute-force enumeration.
        let table: [(usize, usize, usize); 12] = [
            (2, 1, 2),
            (3, 2, 24),
            (3, 3, 48),
            (4, 2, 24),
            (4, 3, 288),
            (4, 4, 384),
            (5, 3, 720),
            (5, 4, 3840),
            (5, 5, 3840),
            (6, 4, 17280),
            (6, 5, 57600),
            (6, 6, 46080),
        ];
        for (n, d, count) in table {
            assert_eq!(enum_phi(n, d).unwrap().len(), count, "Phi_({n},{d})");
        }
    }

    #[test]
    fn phi_empty_iff_outside_band() {
        for n in 1..=6usize {
            for d in 1..=n {
                let nonempty = !enum_phi(n, d).unwrap().is_empty();
                assert_eq!(nonempty, 2 * d >= n, "n = {n}, d = {d}");
            }
        }
    }

    #[test]
    fn phi_guard_is_hard_error() {
        assert!(matches!(enum_phi(9, 5), Err(Error::SizeGuard(_))));
    }

    #[test]
    fn phi_kl_counts() {
        assert_eq!(enum_phi_kl(1, 1, 1).unwrap().len(), 1);
        assert_eq!(enum_phi_kl(1, 1, 2).unwrap().len(), 2);
        assert_eq!(enum_phi_kl(1, 0, 1).unwrap().len(), 1);
        assert_eq!(enum_phi_kl(2, 0, 2).unwrap().len(), 2);
        assert_eq!(enum_phi_kl(2, 2, 3).unwrap().len(), 24);
        assert_eq!(enum_phi_kl(2, 2, 4).unwrap().len(), 24);
    }

    #[test]
    fn eval_h_d_small_cases() {
        let mut rng = RngStream::new(11);
        let dk = random_dk(&mut rng, 2, 2);
        // d = 1: w(s1, r1) N(r1, s1).
        let v = eval_h_d(&dk, &[1], &[0]).unwrap();
        assert!((v - dk.w_entry(0, 1) * dk.n_entry(1, 0)).abs() < 1e-15);
        // d = 2 against the hand expansion (1/2) w w (N11 N22 - N12 N21).
        let v = eval_h_d(&dk, &[0, 1], &[0, 1]).unwrap();
        let byhand = 0.5
            * dk.w_entry(0, 0)
            * dk.w_entry(1, 1)
            * (dk.n_entry(0, 0) * dk.n_entry(1, 1) - dk.n_entry(0, 1) * dk.n_entry(1, 0));
        assert!((v - byhand).abs() <= 1e-15 * byhand.abs().max(1.0));
    }

    #[test]
    fn apply_phi_no_mutes_is_h_d() {
        let mut rng = RngStream::new(12);
        let dk = random_dk(&mut rng, 2, 2);
        // n = 2, d = 1, phi = (1 -> 1, 2 -> 1'): no mute variables.
        let phi = PhiMap {
            d: 1,
            targets: vec![Target::Unprimed(0), Target::Primed(0)],
        };
        let x = dk.pos_grid()[1];
        let y = dk.neg_grid()[0];
        let v = apply_phi(&dk, &phi, &[x, y]).unwrap();
        let h = eval_h_d(&dk, &[1], &[0]).unwrap();
        assert_eq!(v, h);
    }

    #[test]
    fn apply_phi_single_positive_point() {
        // n = 1, d = 1, phi(1) = 1: sum over the mute s of N(x,s) w(s,x).
        let mut rng = RngStream::new(13);
        let dk = random_dk(&mut rng, 3, 3);
        let phi = PhiMap::new(1, vec![Target::Unprimed(0)]).unwrap();
        let x = dk.pos_grid()[1];
        let v = apply_phi(&dk, &phi, &[x]).unwrap();
        let expected: f64 = (0..3).map(|s| dk.n_entry(1, s) * dk.w_entry(s, 1)).sum();
        assert!((v - expected).abs() < 1e-14 * expected.abs().max(1.0));
    }

    #[test]
    fn phi_map_constructor_validates() {
        assert!(PhiMap::new(1, vec![Target::Unprimed(1)]).is_err());
        assert!(PhiMap::new(2, vec![Target::Unprimed(0), Target::Unprimed(0)]).is_err());
        assert!(PhiMap::new(2, vec![Target::Unprimed(0), Target::Primed(0)]).is_err());
        assert!(PhiMap::new(2, vec![Target::Unprimed(0), Target::Primed(1)]).is_ok());
    }

    #[test]
    fn apply_phi_sign_mismatch_is_error() {
        let mut rng = RngStream::new(14);
        let dk = random_dk(&mut rng, 2, 2);
        let phi = PhiMap {
            d: 1,
            targets: vec![Target::Unprimed(0)],
        };
        assert!(apply_phi(&dk, &phi, &[dk.neg_grid()[0]]).is_err());
    }

    #[test]
    fn apply_phi_matches_nested_loop_reference() {
        // n = 2, d = 2, one mute r and one mute s; reference computed with
        // explicit nested loops.
        let mut rng = RngStream::new(15);
        let dk = random_dk(&mut rng, 3, 3);
        let phi = PhiMap {
            d: 2,
            targets: vec![Target::Unprimed(0), Target::Primed(1)],
        };
        let x = dk.pos_grid()[2];
        let y = dk.neg_grid()[1];
        let v = apply_phi(&dk, &phi, &[x, y]).unwrap();
        let mut reference = 0.0;
        for r2 in 0..3 {
            for s1 in 0..3 {
                let r = [2, r2];
                let s = [s1, 1];
                let det2 = dk.n_entry(r[0], s[0]) * dk.n_entry(r[1], s[1])
                    - dk.n_entry(r[0], s[1]) * dk.n_entry(r[1], s[0]);
                reference += 0.5 * dk.w_entry(s[0], r[0]) * dk.w_entry(s[1], r[1]) * det2;
            }
        }
        assert!((v - reference).abs() <= 1e-13 * reference.abs().max(1.0));
    }

    #[test]
    fn lhs_single_point_cases() {
        let mut rng = RngStream::new(16);
        let dk = random_dk(&mut rng, 3, 3);
        let x = dk.pos_grid()[0];
        let lhs = necklace_lhs(&dk, &[x]).unwrap();
        let expected: f64 = (0..3).map(|s| dk.n_entry(0, s) * dk.w_entry(s, 0)).sum();
        assert!((lhs - expected).abs() < 1e-14 * expected.abs().max(1.0));

        let y = dk.neg_grid()[2];
        let lhs = necklace_lhs(&dk, &[y]).unwrap();
        let expected: f64 = (0..3).map(|r| dk.w_entry(2, r) * dk.n_entry(r, 2)).sum();
        assert!((lhs - expected).abs() < 1e-14 * expected.abs().max(1.0));
    }

    #[test]
    fn rhs_matches_lhs_single_points() {
        let mut rng = RngStream::new(17);
        let dk = random_dk(&mut rng, 3, 3);
        for &x in &[dk.pos_grid()[1], dk.neg_grid()[0]] {
            let lhs = necklace_lhs(&dk, &[x]).unwrap();
            let rhs = necklace_rhs(&dk, &[x]).unwrap();
            assert!((lhs - rhs).abs() <= 1e-13 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn rhs_mixed_entry_contains_subtraction() {
        let mut rng = RngStream::new(18);
        let dk = random_dk(&mut rng, 2, 2);
        let x = dk.neg_grid()[0];
        let y = dk.pos_grid()[1];
        let entry = ntilde_discrete(&dk, x, y).unwrap();
        let mut double = 0.0;
        for r in 0..2 {
            for s in 0..2 {
                double += dk.w_entry(0, r) * dk.n_entry(r, s) * dk.w_entry(s, 1);
            }
        }
        assert!((entry - (double - dk.w_entry(0, 1))).abs() < 1e-15);
    }

    #[test]
    fn identity_on_random_instances() {
        let mut rng = RngStream::new(19);
        for trial in 0..10 {
            let dk = random_dk(&mut rng, 3, 3);
            for n in 1..=3usize {
                // Random sign pattern and random on-grid points.
                let points: Vec<f64> = (0..n)
                    .map(|_| {
                        if rng.uniform() < 0.5 {
                            dk.pos_grid()[(rng.next_u64() % 3) as usize]
                        } else {
                            dk.neg_grid()[(rng.next_u64() % 3) as usize]
                        }
                    })
                    .collect();
                let lhs = necklace_lhs(&dk, &points).unwrap();
                let rhs = necklace_rhs(&dk, &points).unwrap();
                let scale = lhs.abs().max(rhs.abs()).max(1e-12);
                assert!(
                    (lhs - rhs).abs() <= 1e-10 * scale,
                    "trial {trial}, n = {n}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn orbit_sum_consistency() {
        // Summing (phi H_d) over a full S_d orbit equals orbit size times
        // any representative (H_d is invariant under permuting the pairs).
        let mut rng = RngStream::new(20);
        let dk = random_dk(&mut rng, 3, 3);
        // phi in Phi_{2,2}: 1 -> 1, 2 -> 2'; its orbit partner: 1 -> 2, 2 -> 1'.
        let phi_a = PhiMap {
            d: 2,
            targets: vec![Target::Unprimed(0), Target::Primed(1)],
        };
        let phi_b = PhiMap {
            d: 2,
            targets: vec![Target::Unprimed(1), Target::Primed(0)],
        };
        let pts = [dk.pos_grid()[0], dk.neg_grid()[1]];
        let va = apply_phi(&dk, &phi_a, &pts).unwrap();
        let vb = apply_phi(&dk, &phi_b, &pts).unwrap();
        assert!((va - vb).abs() <= 1e-13 * va.abs().max(1e-12));
        assert!((va + vb - 2.0 * va).abs() <= 1e-13 * va.abs().max(1e-12));
    }

    #[test]
    fn laplace_first_row_expansion() {
        let mut rng = RngStream::new(21);
        let m = DenseMatrix::from_fn(4, 4, |_, _| rng.uniform_in(-1.0, 1.0));
        let det = m.det().unwrap();
        let exp = laplace_expand(&m, 1, 0).unwrap();
        assert!((det - exp).abs() <= 1e-13 * det.abs().max(1e-6));
    }

    #[test]
    fn laplace_k1_l1_formula() {
        // m11 M(1|1) + sum_{i,j >= 2} (-1)^{i+j+1} m_i1 m_1j M(1 i | 1 j).
        let mut rng = RngStream::new(22);
        let m = DenseMatrix::from_fn(4, 4, |_, _| rng.uniform_in(-1.0, 1.0));
        let mut expected = m[(0, 0)] * m.minor_removing(&[0], &[0]).det().unwrap();
        for i in 1..4 {
            for j in 1..4 {
                let sign = if (i + 1 + j + 1 + 1) % 2 == 0 { 1.0 } else { -1.0 };
                expected += sign
                    * m[(i, 0)]
                    * m[(0, j)]
                    * m.minor_removing(&[0, i], &[0, j]).det().unwrap();
            }
        }
        let det = m.det().unwrap();
        assert!((expected - det).abs() <= 1e-13 * det.abs().max(1e-6));
        let got = laplace_expand(&m, 1, 1).unwrap();
        assert!((got - det).abs() <= 1e-13 * det.abs().max(1e-6));
    }

    #[test]
    fn laplace_all_small_kl() {
        let mut rng = RngStream::new(23);
        for _ in 0..5 {
            let m = DenseMatrix::from_fn(5, 5, |_, _| rng.uniform_in(-1.0, 1.0));
            let det = m.det().unwrap();
            for k in 0..=4usize {
                for l in 0..=(4 - k) {
                    if k + l == 0 {
                        continue;
                    }
                    let got = laplace_expand(&m, k, l).unwrap();
                    assert!(
                        (got - det).abs() <= 1e-12 * det.abs().max(1e-6),
                        "(k,l) = ({k},{l}): {got} vs {det}"
                    );
                }
            }
        }
    }

    #[test]
    fn laplace_guards() {
        let m = DenseMatrix::identity(9);
        assert!(matches!(laplace_expand(&m, 1, 0), Err(Error::SizeGuard(_))));
        let m = DenseMatrix::identity(4);
        assert!(matches!(laplace_expand(&m, 3, 2), Err(Error::SizeGuard(_))));
        assert!(matches!(laplace_expand(&m, 0, 0), Err(Error::SizeGuard(_))));
    }

    #[test]
    fn necklace_dump_format() {
        // phi: 1 -> 1, 2 -> 2'; sigma = identity on two pairs. Components:
        // W[1] B and W B[2].
        let phi = PhiMap {
            d: 2,
            targets: vec![Target::Unprimed(0), Target::Primed(1)],
        };
        let neck = Necklace::from_phi_sigma(&phi, &[0, 1]).unwrap();
        assert_eq!(neck.component_count(), 2);
        assert_eq!(format!("{neck}"), "W[1] B\nW B[2]");

        // sigma a 2-cycle: a single component with 4 beads.
        let neck = Necklace::from_phi_sigma(&phi, &[1, 0]).unwrap();
        assert_eq!(neck.component_count(), 1);
        assert_eq!(format!("{neck}"), "W[1] B[2] W B");
    }
}
