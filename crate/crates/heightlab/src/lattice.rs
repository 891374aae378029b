//! Integer lattices with quadratic forms from trace data: exact LLL
//! reduction, orthogonality defects, k-volumes, and a budgeted Gromov-mass
//! search.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::matrix::QMatrix;
use crate::numfield::{FieldElement, Place};
use crate::rat;
use crate::{Error, Result};

/// A rank-k lattice carried by a symmetric positive-definite Gram matrix,
/// optionally together with ambient rational coordinates for its basis.
#[derive(Debug, Clone)]
pub struct QuadLattice {
    pub basis: Option<Vec<Vec<BigRational>>>,
    pub gram: QMatrix,
    /// Worst-case uncertainty on each Gram entry when the form came from
    /// numeric embeddings; `None` means the Gram matrix is exact.
    pub entry_radius: Option<BigRational>,
}

impl QuadLattice {
    /// Lattice from ambient basis vectors with the Euclidean form.
    pub fn from_basis_euclidean(basis: Vec<Vec<BigRational>>) -> Result<QuadLattice> {
        if basis.is_empty() {
            return Err(Error::InvalidInput("empty basis".into()));
        }
        let k = basis.len();
        let mut gram = QMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                gram[(i, j)] = basis[i].iter().zip(&basis[j]).map(|(a, b)| a * b).sum();
            }
        }
        let lat = QuadLattice { basis: Some(basis), gram, entry_radius: None };
        lat.check_positive_definite()?;
        Ok(lat)
    }

    /// Lattice from an exact Gram matrix.
    pub fn from_gram(gram: QMatrix) -> Result<QuadLattice> {
        let lat = QuadLattice { basis: None, gram, entry_radius: None };
        lat.check_positive_definite()?;
        Ok(lat)
    }

    /// Lattice from a Gram matrix whose entries are certified only up to
    /// `radius`; positive definiteness is then established for every matrix
    /// in the entrywise interval.
    pub fn from_gram_with_radius(gram: QMatrix, radius: BigRational) -> Result<QuadLattice> {
        let lat = QuadLattice { basis: None, gram, entry_radius: Some(radius) };
        lat.check_positive_definite()?;
        Ok(lat)
    }

    pub fn rank(&self) -> usize {
        self.gram.rows
    }

    /// Positive definiteness. With an entry radius r, an entrywise
    /// perturbation E has spectral norm at most k*r, so it suffices that
    /// `gram - k*r*I` is positive definite.
    pub fn check_positive_definite(&self) -> Result<()> {
        let k = self.gram.rows;
        if self.gram.cols != k {
            return Err(Error::InvalidInput("gram matrix must be square".into()));
        }
        for i in 0..k {
            for j in 0..i {
                if self.gram[(i, j)] != self.gram[(j, i)] {
                    return Err(Error::InvalidInput("gram matrix must be symmetric".into()));
                }
            }
        }
        let shifted = match &self.entry_radius {
            None => self.gram.clone(),
            Some(r) => {
                let mut m = self.gram.clone();
                let shift = r * BigRational::from_integer(rat::int(k as i64));
                for i in 0..k {
                    m[(i, i)] -= &shift;
                }
                m
            }
        };
        if shifted.ldlt_pivots().is_none() {
            return Err(Error::NotPositiveDefinite(
                "gram matrix is not positive definite (or straddles zero within its radius)"
                    .into(),
            ));
        }
        Ok(())
    }

    /// det(gram), the squared lattice covolume.
    pub fn gram_det(&self) -> BigRational {
        self.gram.det()
    }

    /// Squared product of the basis-vector norms, exact.
    pub fn norm_product_squared(&self) -> BigRational {
        let mut p = BigRational::one();
        for i in 0..self.rank() {
            p *= &self.gram[(i, i)];
        }
        p
    }
}

/// Apply an integer row transform `U` to a lattice (basis and Gram).
fn transformed(lat: &QuadLattice, u: &[Vec<BigInt>]) -> QuadLattice {
    let k = lat.rank();
    let uq = QMatrix::from_rows(
        u.iter()
            .map(|row| row.iter().map(|c| BigRational::from_integer(c.clone())).collect())
            .collect(),
    );
    let gram = uq.mul(&lat.gram).mul(&uq.transpose());
    let basis = lat.basis.as_ref().map(|b| {
        (0..k)
            .map(|i| {
                let n = b[0].len();
                let mut v = vec![BigRational::zero(); n];
                for (j, c) in u[i].iter().enumerate() {
                    let cq = BigRational::from_integer(c.clone());
                    for t in 0..n {
                        v[t] += &cq * &b[j][t];
                    }
                }
                v
            })
            .collect()
    });
    QuadLattice { basis, gram, entry_radius: lat.entry_radius.clone() }
}

/// Result of an LLL reduction: the reduced lattice and the unimodular
/// transform expressing the new basis in terms of the old.
#[derive(Debug, Clone)]
pub struct LllReduction {
    pub lattice: QuadLattice,
    pub transform: Vec<Vec<BigInt>>,
}

/// Exact LLL reduction at parameter `delta` in (1/4, 1).
pub fn lll_reduce(lat: &QuadLattice, delta: &BigRational) -> Result<LllReduction> {
    let quarter = rat::qq(1, 4);
    if *delta <= quarter || *delta >= rat::q(1) {
        return Err(Error::InvalidInput("delta must lie in (1/4, 1)".into()));
    }
    lat.check_positive_definite()?;
    let k = lat.rank();
    let mut u: Vec<Vec<BigInt>> = (0..k)
        .map(|i| (0..k).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect();
    let mut g = lat.gram.clone();

    // Gram–Schmidt data from the Gram matrix alone.
    let gso = |g: &QMatrix| -> (Vec<Vec<BigRational>>, Vec<BigRational>) {
        let k = g.rows;
        let mut mu = vec![vec![BigRational::zero(); k]; k];
        let mut bstar = vec![BigRational::zero(); k];
        for i in 0..k {
            for j in 0..i {
                let mut v = g[(i, j)].clone();
                for l in 0..j {
                    v -= &mu[j][l] * &mu[i][l] * &bstar[l];
                }
                mu[i][j] = v / &bstar[j];
            }
            let mut v = g[(i, i)].clone();
            for j in 0..i {
                v -= &mu[i][j] * &mu[i][j] * &bstar[j];
            }
            bstar[i] = v;
        }
        (mu, bstar)
    };

    let row_op = |g: &mut QMatrix, u: &mut Vec<Vec<BigInt>>, target: usize, src: usize, q: &BigInt| {
        // b_target -= q * b_src
        let qq = BigRational::from_integer(q.clone());
        for j in 0..g.cols {
            let t = &qq * &g[(src, j)];
            g[(target, j)] -= t;
        }
        for i in 0..g.rows {
            let t = &qq * &g[(i, src)];
            g[(i, target)] -= t;
        }
        for j in 0..u[0].len() {
            let t = q * &u[src][j];
            u[target][j] -= t;
        }
    };

    let swap = |g: &mut QMatrix, u: &mut Vec<Vec<BigInt>>, a: usize, b: usize| {
        g.swap_rows(a, b);
        let cols = g.cols;
        for i in 0..g.rows {
            g.data.swap(i * cols + a, i * cols + b);
        }
        u.swap(a, b);
    };

    let (mut mu, mut bstar) = gso(&g);
    let mut step = 1usize;
    let mut guard = 0usize;
    while step < k {
        guard += 1;
        if guard > 100_000 {
            return Err(Error::NumericalFailure("LLL did not terminate".into()));
        }
        // Size-reduce step against step-1.
        let q = rat::round_nearest(&mu[step][step - 1]);
        if !q.is_zero() {
            row_op(&mut g, &mut u, step, step - 1, &q);
            let r = gso(&g);
            mu = r.0;
            bstar = r.1;
        }
        // Lovász condition.
        let lhs = &bstar[step];
        let rhs = (delta - &mu[step][step - 1] * &mu[step][step - 1]) * &bstar[step - 1];
        if *lhs >= rhs {
            for j in (0..step.saturating_sub(1)).rev() {
                let q = rat::round_nearest(&mu[step][j]);
                if !q.is_zero() {
                    row_op(&mut g, &mut u, step, j, &q);
                    let r = gso(&g);
                    mu = r.0;
                    bstar = r.1;
                }
            }
            step += 1;
        } else {
            swap(&mut g, &mut u, step, step - 1);
            let r = gso(&g);
            mu = r.0;
            bstar = r.1;
            step = step.max(2) - 1;
        }
    }
    let lattice = transformed(lat, &u);
    debug_assert_eq!(lattice.gram, g);
    Ok(LllReduction { lattice, transform: u })
}

/// Check the size-reduction and Lovász conditions at `delta`.
pub fn is_lll_reduced(lat: &QuadLattice, delta: &BigRational) -> bool {
    let k = lat.rank();
    let mut mu = vec![vec![BigRational::zero(); k]; k];
    let mut bstar = vec![BigRational::zero(); k];
    for i in 0..k {
        for j in 0..i {
            let mut v = lat.gram[(i, j)].clone();
            for l in 0..j {
                v -= &mu[j][l] * &mu[i][l] * &bstar[l];
            }
            mu[i][j] = v / &bstar[j];
        }
        let mut v = lat.gram[(i, i)].clone();
        for j in 0..i {
            v -= &mu[i][j] * &mu[i][j] * &bstar[j];
        }
        bstar[i] = v;
    }
    let half = rat::qq(1, 2);
    for i in 0..k {
        for j in 0..i {
            if mu[i][j].abs() > half {
                return false;
            }
        }
    }
    for i in 1..k {
        let rhs = (delta - &mu[i][i - 1] * &mu[i][i - 1]) * &bstar[i - 1];
        if bstar[i] < rhs {
            return false;
        }
    }
    true
}

/// Orthogonality defect `prod ||v_i|| / sqrt(det gram)`; always >= 1.
pub fn orthogonality_defect(lat: &QuadLattice) -> Result<f64> {
    lat.check_positive_definite()?;
    let num = lat.norm_product_squared();
    let den = lat.gram_det();
    let ratio = num / den;
    Ok(rat::to_f64(&ratio).sqrt())
}

/// A k-volume value: float view plus the exact square when available.
#[derive(Debug, Clone)]
pub struct KVolume {
    pub value: f64,
    /// Exact value of (volume)^2.
    pub value_squared: BigRational,
    /// Volume from the LLL(0.99) route, for comparison when enumeration ran.
    pub lll_value: f64,
    /// True when the exact small-rank enumeration produced the result.
    pub enumerated: bool,
    /// Set when an enumeration budget forced a fallback to the LLL value.
    pub budget_exhausted: bool,
}

/// k-volume: product of basis-vector norms over an LLL(delta = 0.99)
/// reduced basis; for rank <= 4 with `exact_for_small`, a Fincke–Pohst
/// enumeration searches for a minimal-product basis.
pub fn k_volume(lat: &QuadLattice, exact_for_small: bool) -> Result<KVolume> {
    let delta = rat::qq(99, 100);
    let red = lll_reduce(lat, &delta)?;
    let lll_sq = red.lattice.norm_product_squared();
    let lll_value = rat::to_f64(&lll_sq).sqrt();
    if !exact_for_small || lat.rank() > 4 {
        return Ok(KVolume {
            value: lll_value,
            value_squared: lll_sq,
            lll_value,
            enumerated: false,
            budget_exhausted: false,
        });
    }
    match minimal_product_basis(&red.lattice, 200_000) {
        Some((best_sq, _)) => {
            let value = rat::to_f64(&best_sq).sqrt();
            Ok(KVolume {
                value,
                value_squared: best_sq,
                lll_value,
                enumerated: true,
                budget_exhausted: false,
            })
        }
        None => Ok(KVolume {
            value: lll_value,
            value_squared: lll_sq,
            lll_value,
            enumerated: false,
            budget_exhausted: true,
        }),
    }
}

/// Enumerate nonzero vectors `x` with `x^T G x <= c`, one per +-pair,
/// using float Cholesky bounds with exact final verification.
fn short_vectors(g: &QMatrix, c: &BigRational, cap: usize) -> Option<Vec<(Vec<BigInt>, BigRational)>> {
    let k = g.rows;
    let gf: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| rat::to_f64(&g[(i, j)])).collect())
        .collect();
    // Cholesky: Q(x) = sum_i d_i (x_i + sum_{j>i} m_ij x_j)^2.
    let mut d = vec![0.0f64; k];
    let mut m = vec![vec![0.0f64; k]; k];
    {
        let mut a = gf.clone();
        for i in 0..k {
            d[i] = a[i][i];
            if d[i] <= 0.0 {
                return None;
            }
            for j in i + 1..k {
                m[i][j] = a[i][j] / d[i];
            }
            for r in i + 1..k {
                for s in i + 1..k {
                    a[r][s] -= a[r][i] * a[i][s] / d[i];
                }
            }
        }
    }
    let cf = rat::to_f64(c) * 1.0000001 + 1e-12;
    let mut out: Vec<(Vec<BigInt>, BigRational)> = Vec::new();
    let mut x = vec![0i64; k];
    // Recursive enumeration from the last coordinate.
    fn recurse(
        level: isize,
        k: usize,
        d: &[f64],
        m: &[Vec<f64>],
        cf: f64,
        remaining: f64,
        x: &mut Vec<i64>,
        g: &QMatrix,
        c: &BigRational,
        out: &mut Vec<(Vec<BigInt>, BigRational)>,
        count: &mut usize,
        cap: usize,
    ) -> bool {
        if *count > cap {
            return false;
        }
        if level < 0 {
            if x.iter().all(|&v| v == 0) {
                return true;
            }
            // Sign canonicalization: first nonzero coordinate positive.
            if let Some(&first) = x.iter().find(|&&v| v != 0) {
                if first < 0 {
                    return true;
                }
            }
            let xb: Vec<BigInt> = x.iter().map(|&v| rat::int(v)).collect();
            let mut q = BigRational::zero();
            for i in 0..k {
                for j in 0..k {
                    q += BigRational::from_integer(&xb[i] * &xb[j]) * &g[(i, j)];
                }
            }
            if q <= *c {
                out.push((xb, q));
            }
            return true;
        }
        let i = level as usize;
        let offset: f64 = (i + 1..k).map(|j| m[i][j] * x[j] as f64).sum();
        let bound = (remaining / d[i]).max(0.0).sqrt();
        let lo = (-bound - offset).floor() as i64;
        let hi = (bound - offset).ceil() as i64;
        for v in lo..=hi {
            *count += 1;
            if *count > cap {
                return false;
            }
            x[i] = v;
            let t = v as f64 + offset;
            let used = d[i] * t * t;
            if used <= remaining + 1e-9 {
                if !recurse(level - 1, k, d, m, cf, remaining - used, x, g, c, out, count, cap) {
                    return false;
                }
            }
        }
        x[i] = 0;
        true
    }
    let mut count = 0usize;
    if !recurse(k as isize - 1, k, &d, &m, cf, cf, &mut x, g, c, &mut out, &mut count, cap) {
        return None;
    }
    out.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
    Some(out)
}

/// Search for a basis minimizing the squared norm product. Returns the
/// minimal product found and the coordinates (in the given basis) of the
/// vectors attaining it, or `None` when the budget is exhausted.
fn minimal_product_basis(
    lat: &QuadLattice,
    budget: usize,
) -> Option<(BigRational, Vec<Vec<BigInt>>)> {
    let k = lat.rank();
    let g = &lat.gram;
    // Any minimal-product basis vector has norm^2 at most
    // (prod ||b_i||)^2 / lambda_1^(2(k-1)), with lambda_1 bounded below by
    // the LLL guarantee lambda_1 >= ||b_1|| / 2^((k-1)/2).
    let prod_sq = lat.norm_product_squared();
    let b1_sq = g[(0, 0)].clone();
    let two_pow = BigRational::from_integer(BigInt::one() << (k - 1));
    let lambda1_sq_lower = &b1_sq / &two_pow;
    let mut cbound = prod_sq.clone();
    for _ in 0..k - 1 {
        cbound = cbound / &lambda1_sq_lower;
    }
    let cbound = cbound.max(g[(k - 1, k - 1)].clone());
    let vectors = short_vectors(g, &cbound, budget)?;
    if vectors.is_empty() {
        return None;
    }
    let mut best = lat.norm_product_squared();
    let mut best_coords: Vec<Vec<BigInt>> = (0..k)
        .map(|i| (0..k).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect();
    // DFS over ordered-by-norm candidates, pruning on the partial product.
    fn dfs(
        vectors: &[(Vec<BigInt>, BigRational)],
        start: usize,
        chosen: &mut Vec<usize>,
        partial: BigRational,
        k: usize,
        best: &mut BigRational,
        best_coords: &mut Vec<Vec<BigInt>>,
        nodes: &mut usize,
        budget: usize,
    ) -> bool {
        if *nodes > budget {
            return false;
        }
        *nodes += 1;
        if chosen.len() == k {
            // Basis iff the coordinate matrix is unimodular.
            let m = QMatrix::from_rows(
                chosen
                    .iter()
                    .map(|&i| {
                        vectors[i]
                            .0
                            .iter()
                            .map(|c| BigRational::from_integer(c.clone()))
                            .collect()
                    })
                    .collect(),
            );
            if m.det().abs().is_one() && partial < *best {
                *best = partial;
                *best_coords = chosen.iter().map(|&i| vectors[i].0.clone()).collect();
            }
            return true;
        }
        let remaining = k - chosen.len();
        for i in start..vectors.len() {
            // Lower bound: the remaining slots each cost at least this
            // vector's norm (list is sorted ascending).
            let mut lower = partial.clone() * &vectors[i].1;
            for _ in 1..remaining {
                lower = lower * &vectors[i].1;
            }
            if lower >= *best {
                break;
            }
            chosen.push(i);
            let next = partial.clone() * &vectors[i].1;
            if !dfs(vectors, i + 1, chosen, next, k, best, best_coords, nodes, budget) {
                chosen.pop();
                return false;
            }
            chosen.pop();
        }
        true
    }
    let mut nodes = 0usize;
    let complete = dfs(
        &vectors,
        0,
        &mut Vec::new(),
        BigRational::one(),
        k,
        &mut best,
        &mut best_coords,
        &mut nodes,
        budget,
    );
    if complete {
        Some((best, best_coords))
    } else {
        None
    }
}

/// Gromov-mass estimate of a simple k-vector `scale * v_1 ^ ... ^ v_k`.
#[derive(Debug, Clone)]
pub struct GromovMass {
    /// Upper estimate of the mass (infimum over factorizations).
    pub upper_estimate: f64,
    /// The factorization attaining the estimate (ambient coordinates).
    pub attained: Vec<Vec<BigRational>>,
    /// Always an upper bound: the search space is budgeted.
    pub is_upper_bound: bool,
}

/// Budgeted search for the Gromov mass of a simple k-vector with respect to
/// the Euclidean norm: minimizes `prod ||v_i'||` over unimodular
/// refactorizations of the spanned sublattice.
pub fn gromov_mass(
    vectors: &[Vec<BigRational>],
    scale: &BigRational,
    budget: usize,
) -> Result<GromovMass> {
    if vectors.is_empty() {
        return Err(Error::InvalidInput("empty wedge".into()));
    }
    let lat = QuadLattice::from_basis_euclidean(vectors.to_vec()).map_err(|_| {
        Error::InvalidInput("wedge vectors must be linearly independent".into())
    })?;
    let delta = rat::qq(99, 100);
    let red = lll_reduce(&lat, &delta)?;
    let mut best_sq = red.lattice.norm_product_squared();
    let mut attained = red.lattice.basis.clone().expect("basis present");
    if lat.rank() <= 4 {
        if let Some((b, coords)) = minimal_product_basis(&red.lattice, budget) {
            if b < best_sq {
                best_sq = b;
                attained = transformed(&red.lattice, &coords).basis.expect("basis present");
            }
        }
    }
    let scale_abs = scale.abs();
    let value = rat::to_f64(&(&best_sq * &scale_abs * &scale_abs)).sqrt();
    Ok(GromovMass { upper_estimate: value, attained, is_upper_bound: true })
}

/// Gram matrix from a trace form on number-field elements:
/// `gram_ij = Tr(x_i * rho * tau(x_j))` with `tau` either the identity or
/// quadratic conjugation. With a place, the single-embedding real form
/// `d_sigma * Re(sigma(...))` is used instead (certified numerically).
pub fn lattice_from_trace_form(
    elements: &[FieldElement],
    rho: &FieldElement,
    conjugate: bool,
    place: Option<&Place>,
) -> Result<QuadLattice> {
    if elements.is_empty() {
        return Err(Error::InvalidInput("empty element list".into()));
    }
    let field = elements[0].field().clone();
    for e in elements {
        if e.field() != &field {
            return Err(Error::FieldMismatch("elements of different fields".into()));
        }
    }
    let k = elements.len();
    let mut gram = QMatrix::zeros(k, k);
    match place {
        None => {
            for i in 0..k {
                for j in 0..k {
                    let xj = if conjugate {
                        field.conjugate(&elements[j])?
                    } else {
                        elements[j].clone()
                    };
                    let prod = elements[i].mul(rho)?.mul(&xj)?;
                    let (tr, _) = field.trace_norm(&prod);
                    gram[(i, j)] = tr;
                }
            }
            QuadLattice::from_gram(gram)
        }
        Some(place) => {
            if !place.is_archimedean() {
                return Err(Error::InvalidInput(
                    "trace-form lattices are archimedean objects".into(),
                ));
            }
            for i in 0..k {
                for j in 0..k {
                    let xj = if conjugate {
                        field.conjugate(&elements[j])?
                    } else {
                        elements[j].clone()
                    };
                    let prod = elements[i].mul(rho)?.mul(&xj)?;
                    let v = prod.embed(place)?;
                    let dv = place.local_degree as f64;
                    let entry = BigRational::from_float(dv * v.re)
                        .ok_or_else(|| Error::NumericalFailure("non-finite embedding".into()))?;
                    gram[(i, j)] = entry;
                }
            }
            // Symmetrize float asymmetry exactly.
            for i in 0..k {
                for j in 0..i {
                    let avg = (&gram[(i, j)] + &gram[(j, i)]) / rat::q(2);
                    gram[(i, j)] = avg.clone();
                    gram[(j, i)] = avg;
                }
            }
            QuadLattice::from_gram_with_radius(
                gram,
                BigRational::new(BigInt::one(), BigInt::one() << 40),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numfield::NumberField;

    fn vecq(v: &[i64]) -> Vec<BigRational> {
        v.iter().map(|&x| rat::q(x)).collect()
    }

    #[test]
    fn identity_basis_is_fixed_by_lll() {
        let lat = QuadLattice::from_basis_euclidean(vec![vecq(&[1, 0]), vecq(&[0, 1])]).unwrap();
        let red = lll_reduce(&lat, &rat::qq(3, 4)).unwrap();
        assert_eq!(red.lattice.gram, lat.gram);
        assert!(is_lll_reduced(&red.lattice, &rat::qq(3, 4)));
    }

    #[test]
    fn skewed_basis_reduces_to_identity() {
        let lat =
            QuadLattice::from_basis_euclidean(vec![vecq(&[1, 0]), vecq(&[100, 1])]).unwrap();
        let red = lll_reduce(&lat, &rat::qq(3, 4)).unwrap();
        assert_eq!(red.lattice.gram, QMatrix::identity(2));
        // Unimodular: same determinant.
        assert_eq!(red.lattice.gram_det(), lat.gram_det());
    }

    #[test]
    fn lll_preserves_determinant_random() {
        // A handful of fixed pseudo-random 5-dim bases.
        let seeds: [i64; 4] = [3, 7, 11, 19];
        for s in seeds {
            let mut rows = Vec::new();
            let mut state = s;
            for _ in 0..5 {
                let mut row = Vec::new();
                for _ in 0..5 {
                    state = (state * 1103515245 + 12345) % 1000;
                    row.push(rat::q(state % 21 - 10));
                }
                rows.push(row);
            }
            let Ok(lat) = QuadLattice::from_basis_euclidean(rows) else {
                continue; // singular draw
            };
            let red = lll_reduce(&lat, &rat::qq(3, 4)).unwrap();
            assert_eq!(red.lattice.gram_det(), lat.gram_det());
            assert!(is_lll_reduced(&red.lattice, &rat::qq(3, 4)));
        }
    }

    #[test]
    fn defect_examples() {
        let ortho = QuadLattice::from_basis_euclidean(vec![vecq(&[2, 0]), vecq(&[0, 3])]).unwrap();
        assert!((orthogonality_defect(&ortho).unwrap() - 1.0).abs() < 1e-15);

        let sheared = QuadLattice::from_basis_euclidean(vec![vecq(&[1, 0]), vecq(&[1, 1])]).unwrap();
        let d = orthogonality_defect(&sheared).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        assert!(d >= 1.0);
    }

    #[test]
    fn k_volume_examples() {
        let z3 = QuadLattice::from_basis_euclidean(vec![
            vecq(&[1, 0, 0]),
            vecq(&[0, 1, 0]),
            vecq(&[0, 0, 1]),
        ])
        .unwrap();
        let v = k_volume(&z3, true).unwrap();
        assert_eq!(v.value_squared, rat::q(1));

        let scaled =
            QuadLattice::from_basis_euclidean(vec![vecq(&[2, 0]), vecq(&[0, 3])]).unwrap();
        let v = k_volume(&scaled, true).unwrap();
        assert_eq!(v.value_squared, rat::q(36));
        assert!((v.value - 6.0).abs() < 1e-12);

        let skew =
            QuadLattice::from_basis_euclidean(vec![vecq(&[1, 0]), vecq(&[100, 1])]).unwrap();
        let v = k_volume(&skew, true).unwrap();
        assert_eq!(v.value_squared, rat::q(1));
    }

    #[test]
    fn k_volume_lower_bounds_det() {
        let lat = QuadLattice::from_basis_euclidean(vec![
            vecq(&[3, 1, 0]),
            vecq(&[1, 4, 1]),
            vecq(&[0, 1, 5]),
        ])
        .unwrap();
        let v = k_volume(&lat, false).unwrap();
        let det = rat::to_f64(&lat.gram_det()).sqrt();
        assert!(v.value >= det - 1e-9);
    }

    #[test]
    fn gromov_mass_examples() {
        // e1 ^ e2 in the Euclidean plane.
        let m = gromov_mass(&[vecq(&[1, 0]), vecq(&[0, 1])], &rat::q(1), 10_000).unwrap();
        assert!((m.upper_estimate - 1.0).abs() < 1e-12);
        // Homogeneity in the scalar.
        let m2 = gromov_mass(&[vecq(&[1, 0]), vecq(&[0, 1])], &rat::q(2), 10_000).unwrap();
        assert!((m2.upper_estimate - 2.0).abs() < 1e-12);
        // Alternation: e1 ^ (e1 + e2) = e1 ^ e2.
        let m3 = gromov_mass(&[vecq(&[1, 0]), vecq(&[1, 1])], &rat::q(1), 10_000).unwrap();
        assert!((m3.upper_estimate - 1.0).abs() < 1e-12);
        assert!(m3.is_upper_bound);
    }

    #[test]
    fn trace_form_lattices() {
        // Z in Q with the multiplication form.
        let q = NumberField::rationals();
        let lat = lattice_from_trace_form(&[q.one()], &q.one(), false, None).unwrap();
        assert_eq!(lat.gram[(0, 0)], rat::q(1));

        // Z[sqrt2] with the multiplication form: diag(2, 4).
        let k = NumberField::quadratic(2).unwrap();
        let lat =
            lattice_from_trace_form(&[k.one(), k.generator()], &k.one(), false, None).unwrap();
        assert_eq!(lat.gram[(0, 0)], rat::q(2));
        assert_eq!(lat.gram[(1, 1)], rat::q(4));
        assert_eq!(lat.gram[(0, 1)], rat::q(0));

        // Gaussian integers need the conjugation form to be positive.
        let gi = NumberField::quadratic(-1).unwrap();
        let err = lattice_from_trace_form(&[gi.one(), gi.generator()], &gi.one(), false, None);
        assert!(matches!(err, Err(Error::NotPositiveDefinite(_))));
        let ok = lattice_from_trace_form(&[gi.one(), gi.generator()], &gi.one(), true, None);
        assert!(ok.is_ok());
    }

    #[test]
    fn non_pd_gram_rejected() {
        let mut g = QMatrix::identity(2);
        g[(0, 1)] = rat::q(5);
        g[(1, 0)] = rat::q(5);
        assert!(matches!(QuadLattice::from_gram(g), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn interval_gram_straddling_zero_rejected() {
        // Nearly singular with a radius larger than the smallest pivot.
        let mut g = QMatrix::identity(2);
        g[(1, 1)] = rat::qq(1, 1_000_000);
        assert!(QuadLattice::from_gram(g.clone()).is_ok());
        let r = rat::qq(1, 100);
        assert!(matches!(
            QuadLattice::from_gram_with_radius(g, r),
            Err(Error::NotPositiveDefinite(_))
        ));
    }
}
