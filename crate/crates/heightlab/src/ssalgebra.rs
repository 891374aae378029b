//! Semisimple algebras `⊕_i M_{n_i}(L_i)` over Q with number-field blocks:
//! element arithmetic and involution, integral orders and their validation,
//! regular traces and norms, ideal norms through Smith normal form, HH_0
//! classes and Hattori–Stallings ranks.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::matrix::{QMatrix, ZMatrix};
use crate::numfield::{FieldElement, NumberField};
use crate::rat;
use crate::{Error, Result};

/// How the involution acts on a block's coefficient field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockInvolution {
    Identity,
    /// The nontrivial automorphism of a quadratic field.
    QuadraticConjugation,
}

/// One simple block `M_n(L)`.
#[derive(Debug, Clone)]
pub struct Block {
    pub n: usize,
    pub field: Arc<NumberField>,
    pub involution: BlockInvolution,
}

impl Block {
    /// Q-dimension of the block.
    pub fn dim(&self) -> usize {
        self.n * self.n * self.field.degree()
    }
}

/// A semisimple finite-dimensional algebra over Q, presented by its blocks.
#[derive(Debug)]
pub struct SemisimpleAlgebra {
    blocks: Vec<Block>,
}

impl PartialEq for SemisimpleAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.blocks.len() == other.blocks.len()
            && self.blocks.iter().zip(&other.blocks).all(|(a, b)| {
                a.n == b.n && a.field == b.field && a.involution == b.involution
            })
    }
}
impl Eq for SemisimpleAlgebra {}

/// Build an algebra together with its default order `⊕ M_n(O_L)`.
pub fn make_algebra(blocks: Vec<(usize, Arc<NumberField>)>) -> Result<(Arc<SemisimpleAlgebra>, Order)> {
    if blocks.is_empty() {
        return Err(Error::FieldError("an algebra needs at least one block".into()));
    }
    let blocks = blocks
        .into_iter()
        .map(|(n, field)| {
            if n == 0 {
                return Err(Error::FieldError("matrix size must be positive".into()));
            }
            let involution = if field.degree() == 2 {
                BlockInvolution::QuadraticConjugation
            } else if field.degree() == 1 {
                BlockInvolution::Identity
            } else {
                // Higher-degree fields keep the identity unless configured.
                BlockInvolution::Identity
            };
            Ok(Block { n, field, involution })
        })
        .collect::<Result<Vec<_>>>()?;
    let algebra = Arc::new(SemisimpleAlgebra { blocks });
    let order = Order::default_order(&algebra);
    Ok((algebra, order))
}

/// Same, with explicit involution modes per block.
pub fn make_algebra_with_involutions(
    blocks: Vec<(usize, Arc<NumberField>, BlockInvolution)>,
) -> Result<(Arc<SemisimpleAlgebra>, Order)> {
    if blocks.is_empty() {
        return Err(Error::FieldError("an algebra needs at least one block".into()));
    }
    for (_, field, inv) in &blocks {
        if *inv == BlockInvolution::QuadraticConjugation && field.degree() != 2 {
            return Err(Error::FieldError(
                "quadratic conjugation requires a quadratic block field".into(),
            ));
        }
    }
    let blocks = blocks
        .into_iter()
        .map(|(n, field, involution)| Block { n, field, involution })
        .collect();
    let algebra = Arc::new(SemisimpleAlgebra { blocks });
    let order = Order::default_order(&algebra);
    Ok((algebra, order))
}

impl SemisimpleAlgebra {
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim()).sum()
    }

    pub fn zero(self: &Arc<Self>) -> AlgElement {
        AlgElement {
            algebra: Arc::clone(self),
            blocks: self
                .blocks
                .iter()
                .map(|b| vec![vec![b.field.zero(); b.n]; b.n])
                .collect(),
        }
    }

    pub fn one(self: &Arc<Self>) -> AlgElement {
        let mut e = self.zero();
        for (bi, b) in self.blocks.iter().enumerate() {
            for r in 0..b.n {
                e.blocks[bi][r][r] = b.field.one();
            }
        }
        e
    }

    pub fn scalar(self: &Arc<Self>, q: &BigRational) -> AlgElement {
        let mut e = self.zero();
        for (bi, b) in self.blocks.iter().enumerate() {
            for r in 0..b.n {
                e.blocks[bi][r][r] = b.field.from_rational(q.clone());
            }
        }
        e
    }

    /// Element with a single nonzero entry `v` at block `bi`, row r, col c.
    pub fn matrix_unit(self: &Arc<Self>, bi: usize, r: usize, c: usize, v: FieldElement) -> AlgElement {
        let mut e = self.zero();
        e.blocks[bi][r][c] = v;
        e
    }

    /// The canonical Q-basis: matrix units tensored with the integral basis
    /// of each block field, in (block, row, col, basis) order.
    pub fn canonical_basis(self: &Arc<Self>) -> Vec<AlgElement> {
        let mut out = Vec::with_capacity(self.dim());
        for (bi, b) in self.blocks.iter().enumerate() {
            for r in 0..b.n {
                for c in 0..b.n {
                    for w in b.field.integral_basis() {
                        let v = b.field.element(w.clone()).expect("basis length");
                        out.push(self.matrix_unit(bi, r, c, v));
                    }
                }
            }
        }
        out
    }

    /// Flatten an element to coordinates in the canonical Q-basis.
    pub fn flatten(&self, x: &AlgElement) -> Vec<BigRational> {
        // The canonical basis is built from integral bases; power-basis
        // coordinates must be converted when the integral basis differs.
        let mut out = Vec::with_capacity(self.dim());
        for (bi, b) in self.blocks.iter().enumerate() {
            let power_default = b
                .field
                .integral_basis()
                .iter()
                .enumerate()
                .all(|(i, v)| v.iter().enumerate().all(|(j, c)| (i == j) == c.is_one() && (*c == BigRational::zero() || i == j)));
            let conv = if power_default {
                None
            } else {
                let m = QMatrix::from_rows(b.field.integral_basis().to_vec()).transpose();
                Some(m)
            };
            for r in 0..b.n {
                for c in 0..b.n {
                    let coeffs = x.blocks[bi][r][c].coeffs();
                    match &conv {
                        None => out.extend(coeffs.iter().cloned()),
                        Some(m) => {
                            let sol = m
                                .solve(coeffs)
                                .expect("integral basis is a Q-basis");
                            out.extend(sol);
                        }
                    }
                }
            }
        }
        out
    }
}

/// An element: one matrix with entries in the block field, per block.
#[derive(Clone, PartialEq, Eq)]
pub struct AlgElement {
    algebra: Arc<SemisimpleAlgebra>,
    /// blocks[b][r][c]
    blocks: Vec<Vec<Vec<FieldElement>>>,
}

impl fmt::Debug for AlgElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AlgElement({} blocks)", self.blocks.len())
    }
}

impl AlgElement {
    pub fn algebra(&self) -> &Arc<SemisimpleAlgebra> {
        &self.algebra
    }

    pub fn block(&self, bi: usize) -> &Vec<Vec<FieldElement>> {
        &self.blocks[bi]
    }

    pub fn block_mut(&mut self, bi: usize) -> &mut Vec<Vec<FieldElement>> {
        &mut self.blocks[bi]
    }

    pub fn from_blocks(
        algebra: &Arc<SemisimpleAlgebra>,
        blocks: Vec<Vec<Vec<FieldElement>>>,
    ) -> Result<AlgElement> {
        if blocks.len() != algebra.blocks().len() {
            return Err(Error::InvalidInput("wrong number of blocks".into()));
        }
        for (b, m) in algebra.blocks().iter().zip(&blocks) {
            if m.len() != b.n || m.iter().any(|row| row.len() != b.n) {
                return Err(Error::InvalidInput("block matrix has the wrong shape".into()));
            }
            for row in m {
                for v in row {
                    if v.field() != &b.field {
                        return Err(Error::FieldMismatch(
                            "entry from the wrong block field".into(),
                        ));
                    }
                }
            }
        }
        Ok(AlgElement { algebra: Arc::clone(algebra), blocks })
    }

    fn check_same(&self, other: &AlgElement) -> Result<()> {
        if self.algebra != other.algebra {
            return Err(Error::FieldMismatch("elements of different algebras".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &AlgElement) -> Result<AlgElement> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (bi, m) in out.blocks.iter_mut().enumerate() {
            for (r, row) in m.iter_mut().enumerate() {
                for (c, v) in row.iter_mut().enumerate() {
                    *v = v.add(&other.blocks[bi][r][c])?;
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &AlgElement) -> Result<AlgElement> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (bi, m) in out.blocks.iter_mut().enumerate() {
            for (r, row) in m.iter_mut().enumerate() {
                for (c, v) in row.iter_mut().enumerate() {
                    *v = v.sub(&other.blocks[bi][r][c])?;
                }
            }
        }
        Ok(out)
    }

    pub fn mul(&self, other: &AlgElement) -> Result<AlgElement> {
        self.check_same(other)?;
        let mut out = self.algebra.zero();
        for (bi, b) in self.algebra.blocks().iter().enumerate() {
            for r in 0..b.n {
                for c in 0..b.n {
                    let mut acc = b.field.zero();
                    for t in 0..b.n {
                        acc = acc.add(&self.blocks[bi][r][t].mul(&other.blocks[bi][t][c])?)?;
                    }
                    out.blocks[bi][r][c] = acc;
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&self, q: &BigRational) -> AlgElement {
        let mut out = self.clone();
        for m in out.blocks.iter_mut() {
            for row in m.iter_mut() {
                for v in row.iter_mut() {
                    *v = v.scale(q);
                }
            }
        }
        out
    }

    /// Blockwise conjugate transpose.
    pub fn star(&self) -> Result<AlgElement> {
        let mut out = self.algebra.zero();
        for (bi, b) in self.algebra.blocks().iter().enumerate() {
            for r in 0..b.n {
                for c in 0..b.n {
                    let v = &self.blocks[bi][c][r];
                    out.blocks[bi][r][c] = match b.involution {
                        BlockInvolution::Identity => v.clone(),
                        BlockInvolution::QuadraticConjugation => b.field.conjugate(v)?,
                    };
                }
            }
        }
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(|m| m.iter().all(|row| row.iter().all(|v| v.is_zero())))
    }

    /// Per-block determinant over the block field.
    pub fn block_dets(&self) -> Result<Vec<FieldElement>> {
        let mut out = Vec::new();
        for (bi, b) in self.algebra.blocks().iter().enumerate() {
            out.push(fieldmat_det(&b.field, &self.blocks[bi])?);
        }
        Ok(out)
    }

    pub fn is_invertible(&self) -> Result<bool> {
        Ok(self.block_dets()?.iter().all(|d| !d.is_zero()))
    }

    /// Inverse, blockwise over the block fields.
    pub fn inv(&self) -> Result<AlgElement> {
        let mut out = self.algebra.zero();
        for (bi, b) in self.algebra.blocks().iter().enumerate() {
            out.blocks[bi] = fieldmat_inv(&b.field, &self.blocks[bi])?;
        }
        Ok(out)
    }

    /// When every block is a scalar matrix, the vector of those scalars.
    pub fn central_values(&self) -> Option<Vec<FieldElement>> {
        let mut out = Vec::new();
        for (bi, b) in self.algebra.blocks().iter().enumerate() {
            let diag = self.blocks[bi][0][0].clone();
            for r in 0..b.n {
                for c in 0..b.n {
                    let v = &self.blocks[bi][r][c];
                    if r == c {
                        if *v != diag {
                            return None;
                        }
                    } else if !v.is_zero() {
                        return None;
                    }
                }
            }
            out.push(diag);
        }
        Some(out)
    }

    /// Class in `HH_0(A) = ⊕ L_i`: the blockwise matrix trace.
    pub fn hh0_class(&self) -> Result<CenterElement> {
        let mut comps = Vec::new();
        for (bi, b) in self.algebra.blocks().iter().enumerate() {
            let mut acc = b.field.zero();
            for r in 0..b.n {
                acc = acc.add(&self.blocks[bi][r][r])?;
            }
            comps.push(acc);
        }
        Ok(CenterElement { algebra: Arc::clone(&self.algebra), components: comps })
    }
}

/// Determinant of a matrix over a number field, by Gaussian elimination.
fn fieldmat_det(field: &Arc<NumberField>, m: &[Vec<FieldElement>]) -> Result<FieldElement> {
    let n = m.len();
    let mut a: Vec<Vec<FieldElement>> = m.to_vec();
    let mut det = field.one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Ok(field.zero());
        };
        if p != col {
            a.swap(p, col);
            det = det.neg();
        }
        let pivot = a[col][col].clone();
        det = det.mul(&pivot)?;
        let inv = pivot.inv()?;
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].mul(&inv)?;
            for c in col..n {
                let t = f.mul(&a[col][c])?;
                a[r][c] = a[r][c].sub(&t)?;
            }
        }
    }
    Ok(det)
}

/// Inverse of a matrix over a number field.
fn fieldmat_inv(
    field: &Arc<NumberField>,
    m: &[Vec<FieldElement>],
) -> Result<Vec<Vec<FieldElement>>> {
    let n = m.len();
    let mut a: Vec<Vec<FieldElement>> = m.to_vec();
    let mut inv: Vec<Vec<FieldElement>> = (0..n)
        .map(|r| (0..n).map(|c| if r == c { field.one() } else { field.zero() }).collect())
        .collect();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Err(Error::NotInvertible("singular block matrix".into()));
        };
        a.swap(p, col);
        inv.swap(p, col);
        let pinv = a[col][col].inv()?;
        for c in 0..n {
            a[col][c] = a[col][c].mul(&pinv)?;
            inv[col][c] = inv[col][c].mul(&pinv)?;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in 0..n {
                    let t = f.mul(&a[col][c])?;
                    a[r][c] = a[r][c].sub(&t)?;
                    let t = f.mul(&inv[col][c])?;
                    inv[r][c] = inv[r][c].sub(&t)?;
                }
            }
        }
    }
    Ok(inv)
}

/// An element of the center `Z(A) = ⊕ L_i`, one field element per block.
#[derive(Clone, Debug)]
pub struct CenterElement {
    algebra: Arc<SemisimpleAlgebra>,
    components: Vec<FieldElement>,
}

impl CenterElement {
    pub fn new(algebra: &Arc<SemisimpleAlgebra>, components: Vec<FieldElement>) -> Result<Self> {
        if components.len() != algebra.blocks().len() {
            return Err(Error::InvalidInput("one component per block required".into()));
        }
        for (b, c) in algebra.blocks().iter().zip(&components) {
            if c.field() != &b.field {
                return Err(Error::FieldMismatch("component from the wrong field".into()));
            }
        }
        Ok(CenterElement { algebra: Arc::clone(algebra), components })
    }

    pub fn components(&self) -> &[FieldElement] {
        &self.components
    }

    pub fn algebra(&self) -> &Arc<SemisimpleAlgebra> {
        &self.algebra
    }

    pub fn add(&self, other: &CenterElement) -> Result<CenterElement> {
        let comps = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        CenterElement::new(&self.algebra, comps)
    }

    pub fn mul(&self, other: &CenterElement) -> Result<CenterElement> {
        let comps = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.mul(b))
            .collect::<Result<Vec<_>>>()?;
        CenterElement::new(&self.algebra, comps)
    }

    /// The diagonal embedding of the center back into the algebra.
    pub fn to_element(&self) -> AlgElement {
        let mut e = self.algebra.zero();
        for (bi, b) in self.algebra.blocks().iter().enumerate() {
            for r in 0..b.n {
                e.blocks[bi][r][r] = self.components[bi].clone();
            }
        }
        e
    }
}

/// Deterministic policy for extending the real place of Q to each block
/// field: roots are ordered by (real part, imaginary part).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingPolicy {
    /// The largest root in the (Re, Im) order; for a real quadratic field
    /// this picks the positive image of the generator.
    Principal,
    /// The smallest root in the (Re, Im) order.
    LexSmallest,
}

/// Evaluate a center element under the embedding policy:
/// `sigma(r) = sum_i sigma_tilde(r_i)`.
pub fn embed_center(r: &CenterElement, policy: EmbeddingPolicy) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (b, c) in r.algebra.blocks().iter().zip(&r.components) {
        acc += embed_field_element(&b.field, c, policy)?;
    }
    Ok(acc)
}

/// Embedding of one block field under the policy.
pub fn embed_field_element(
    field: &Arc<NumberField>,
    x: &FieldElement,
    policy: EmbeddingPolicy,
) -> Result<Complex64> {
    if let Some(q) = x.as_rational() {
        return Ok(Complex64::new(rat::to_f64(&q), 0.0));
    }
    let places = field.archimedean_places(64)?;
    // All roots (conjugate pairs expanded), ordered by (Re, Im).
    let mut roots: Vec<Complex64> = Vec::new();
    for p in &places {
        let root = p.root.as_ref().expect("archimedean place").to_c64();
        roots.push(root);
        if p.local_degree == 2 {
            roots.push(root.conj());
        }
    }
    roots.sort_by(|a, b| {
        (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap_or(std::cmp::Ordering::Equal)
    });
    let root = match policy {
        EmbeddingPolicy::Principal => *roots.last().expect("at least one root"),
        EmbeddingPolicy::LexSmallest => roots[0],
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for c in x.coeffs().iter().rev() {
        acc = acc * root + Complex64::new(rat::to_f64(c), 0.0);
    }
    Ok(acc)
}

/// An order in the algebra, presented by a generating Z-basis.
#[derive(Debug, Clone)]
pub struct Order {
    algebra: Arc<SemisimpleAlgebra>,
    basis: Vec<AlgElement>,
}

impl Order {
    /// The default order `⊕ M_n(O_L)` from the declared integral bases.
    pub fn default_order(algebra: &Arc<SemisimpleAlgebra>) -> Order {
        Order { algebra: Arc::clone(algebra), basis: algebra.canonical_basis() }
    }

    pub fn algebra(&self) -> &Arc<SemisimpleAlgebra> {
        &self.algebra
    }

    pub fn basis(&self) -> &[AlgElement] {
        &self.basis
    }

    /// Coordinates of `x` in the order basis (a Q-basis of the algebra).
    pub fn coordinates(&self, x: &AlgElement) -> Result<Vec<BigRational>> {
        let dim = self.algebra.dim();
        let cols: Vec<Vec<BigRational>> =
            self.basis.iter().map(|b| self.algebra.flatten(b)).collect();
        let mut m = QMatrix::zeros(dim, dim);
        for (j, col) in cols.iter().enumerate() {
            for i in 0..dim {
                m[(i, j)] = col[i].clone();
            }
        }
        m.solve(&self.algebra.flatten(x))
            .ok_or_else(|| Error::InvalidInput("order basis does not span the algebra".into()))
    }
}

/// Outcome of validating a candidate order basis.
#[derive(Debug, Clone)]
pub struct OrderValidation {
    pub violations: Vec<String>,
}

impl OrderValidation {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check that a candidate basis spans a subring that is a full Z-lattice:
/// unit membership, multiplicative closure, fullness.
pub fn validate_order(
    algebra: &Arc<SemisimpleAlgebra>,
    candidate: &[AlgElement],
) -> Result<OrderValidation> {
    let mut violations = Vec::new();
    if candidate.is_empty() {
        return Ok(OrderValidation { violations: vec!["empty basis".into()] });
    }
    let dim = algebra.dim();
    let rows: Vec<Vec<BigRational>> = candidate.iter().map(|x| algebra.flatten(x)).collect();
    let rank = QMatrix::from_rows(rows.clone()).rank();
    if rank < dim {
        violations.push(format!("fullness violation: rank {} < dimension {}", rank, dim));
    }
    let span = ZSpan::new(&rows);
    if !span.contains(&algebra.flatten(&algebra.one())) {
        violations.push("unit is not in the integer span".into());
    }
    for (i, a) in candidate.iter().enumerate() {
        for (j, b) in candidate.iter().enumerate() {
            let p = a.mul(b)?;
            if !span.contains(&algebra.flatten(&p)) {
                violations.push(format!(
                    "closure violation: product of basis elements {} and {} leaves the span",
                    i, j
                ));
            }
        }
    }
    Ok(OrderValidation { violations })
}

/// Integer span of rational vectors, with exact membership tests through a
/// scaled Hermite normal form.
pub struct ZSpan {
    denom: BigInt,
    hnf: ZMatrix,
    pivots: Vec<usize>,
}

impl ZSpan {
    pub fn new(rows: &[Vec<BigRational>]) -> ZSpan {
        let mut denom = BigInt::one();
        for row in rows {
            for v in row {
                denom = denom.lcm(v.denom());
            }
        }
        let int_rows: Vec<Vec<BigInt>> = rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| (v * BigRational::from_integer(denom.clone())).to_integer())
                    .collect()
            })
            .collect();
        let hnf = ZMatrix::from_rows(int_rows).hermite_normal_form();
        let mut pivots = Vec::new();
        for i in 0..hnf.rows {
            let p = (0..hnf.cols).find(|&j| !hnf[(i, j)].is_zero()).expect("nonzero HNF row");
            pivots.push(p);
        }
        ZSpan { denom, hnf, pivots }
    }

    pub fn contains(&self, v: &[BigRational]) -> bool {
        let scaled: Vec<BigRational> =
            v.iter().map(|x| x * BigRational::from_integer(self.denom.clone())).collect();
        if scaled.iter().any(|x| !x.denom().is_one()) {
            return false;
        }
        let mut rem: Vec<BigInt> = scaled.iter().map(|x| x.to_integer()).collect();
        for (i, &p) in self.pivots.iter().enumerate() {
            let pivot = &self.hnf[(i, p)];
            if !(&rem[p] % pivot).is_zero() {
                return false;
            }
            let q = &rem[p] / pivot;
            if q.is_zero() {
                continue;
            }
            for j in 0..self.hnf.cols {
                let t = &q * &self.hnf[(i, j)];
                rem[j] -= t;
            }
        }
        rem.iter().all(|x| x.is_zero())
    }

    /// A Z-basis of the span, as rational coordinate vectors.
    pub fn basis_rows(&self) -> Vec<Vec<BigRational>> {
        (0..self.hnf.rows)
            .map(|i| {
                (0..self.hnf.cols)
                    .map(|j| {
                        BigRational::new(self.hnf[(i, j)].clone(), self.denom.clone())
                    })
                    .collect()
            })
            .collect()
    }

    pub fn rank(&self) -> usize {
        self.hnf.rows
    }
}

/// Trace and norm of `x` via the regular representation of the algebra on
/// itself as a Q-vector space.
pub fn regular_trace_norm(
    algebra: &Arc<SemisimpleAlgebra>,
    x: &AlgElement,
) -> Result<(BigRational, BigRational)> {
    let basis = algebra.canonical_basis();
    let dim = algebra.dim();
    let mut m = QMatrix::zeros(dim, dim);
    for (j, b) in basis.iter().enumerate() {
        let col = algebra.flatten(&x.mul(b)?);
        for i in 0..dim {
            m[(i, j)] = col[i].clone();
        }
    }
    Ok((m.trace(), m.det()))
}

/// Reduced rational trace: blockwise matrix trace composed with the field
/// trace down to Q. This is the bilinear-form convention used for
/// trace-form lattices.
pub fn reduced_trace(algebra: &Arc<SemisimpleAlgebra>, x: &AlgElement) -> Result<BigRational> {
    let mut acc = BigRational::zero();
    let class = x.hh0_class()?;
    for (b, c) in algebra.blocks().iter().zip(class.components()) {
        let (tr, _) = b.field.trace_norm(c);
        acc += tr;
    }
    Ok(acc)
}

/// Report from an ideal norm computation.
#[derive(Debug, Clone)]
pub struct IdealNormReport {
    /// `N(a) = #(O/a r) / #(O/O r)`, exact.
    pub norm: BigRational,
    /// `deg = -log N(a)`.
    pub degree: f64,
    /// Absolute norm including the archimedean component, when given.
    pub absolute_norm: Option<f64>,
    /// Elementary divisors of the quotient `O / a r`.
    pub elementary_divisors: Vec<BigInt>,
}

/// Norm and degree of a full left ideal, via Smith normal form of the
/// integer relation matrix. `r` must scale the ideal into the order; a
/// second scaling, when supplied, double-checks independence of `r`.
pub fn ideal_norm_degree(
    order: &Order,
    generators: &[AlgElement],
    r: &BigInt,
    second_r: Option<&BigInt>,
    arch_component: Option<&AlgElement>,
) -> Result<IdealNormReport> {
    if r.is_zero() {
        return Err(Error::InvalidScaling("r must be nonzero".into()));
    }
    let report = ideal_norm_once(order, generators, r)?;
    if let Some(r2) = second_r {
        let other = ideal_norm_once(order, generators, r2)?;
        if other.0 != report.0 {
            return Err(Error::InvalidScaling(
                "ideal norm differed between the two supplied scalings".into(),
            ));
        }
    }
    let (norm, divisors) = report;
    let degree = -rat::to_f64(&norm).ln();
    let absolute_norm = match arch_component {
        None => None,
        Some(a) => {
            if !a.is_invertible()? {
                return Err(Error::NotInvertible("archimedean component must be invertible".into()));
            }
            let (_, n) = regular_trace_norm(order.algebra(), a)?;
            Some(rat::to_f64(&norm) * rat::to_f64(&n).abs())
        }
    };
    Ok(IdealNormReport { norm, degree, absolute_norm, elementary_divisors: divisors })
}

fn ideal_norm_once(
    order: &Order,
    generators: &[AlgElement],
    r: &BigInt,
) -> Result<(BigRational, Vec<BigInt>)> {
    let algebra = order.algebra();
    let dim = algebra.dim();
    // Left O-module generated by the generators: Z-span of basis*generator.
    let mut rows: Vec<Vec<BigRational>> = Vec::new();
    for b in order.basis() {
        for g in generators {
            rows.push(order.coordinates(&b.mul(g)?)?);
        }
    }
    let span = ZSpan::new(&rows);
    if span.rank() < dim {
        return Err(Error::NotFullLattice(format!(
            "ideal has rank {} < {}",
            span.rank(),
            dim
        )));
    }
    // Scale by r and check containment in the order.
    let rq = BigRational::from_integer(r.clone());
    let scaled: Vec<Vec<BigRational>> = span
        .basis_rows()
        .iter()
        .map(|row| row.iter().map(|v| v * &rq).collect())
        .collect();
    for row in &scaled {
        if row.iter().any(|v| !v.denom().is_one()) {
            return Err(Error::InvalidScaling(
                "a r is not contained in the order for the supplied r".into(),
            ));
        }
    }
    let int_rows: Vec<Vec<BigInt>> = scaled
        .iter()
        .map(|row| row.iter().map(|v| v.to_integer()).collect())
        .collect();
    let divisors = ZMatrix::from_rows(int_rows).smith_diagonal();
    // #(O / a r) is the product of the elementary divisors.
    let mut count_ar = BigInt::one();
    for d in &divisors {
        count_ar *= d;
    }
    // #(O / O r) = r^dim.
    let count_or = r.abs().pow(dim as u32);
    Ok((BigRational::new(count_ar, count_or), divisors))
}

/// Module presentation accepted by the Hattori–Stallings rank.
pub enum ModuleSpec {
    /// An idempotent in `M_m(A)`, given as an m x m matrix of elements.
    Idempotent(Vec<Vec<AlgElement>>),
    /// Generators of a submodule of `A^m` together with a dual family:
    /// `xi_i(x) = sum_j duals[i][j] * x_j` must reproduce the generators.
    DualFamily { generators: Vec<Vec<AlgElement>>, duals: Vec<Vec<AlgElement>> },
}

/// The Hattori–Stallings rank: the class in `HH_0(A) = ⊕ L_i` of the trace
/// of the identity endomorphism.
pub fn hattori_stallings_rank(
    algebra: &Arc<SemisimpleAlgebra>,
    spec: &ModuleSpec,
) -> Result<CenterElement> {
    match spec {
        ModuleSpec::Idempotent(e) => {
            let m = e.len();
            if e.iter().any(|row| row.len() != m) {
                return Err(Error::InvalidInput("idempotent matrix must be square".into()));
            }
            // e^2 = e over A.
            for r in 0..m {
                for c in 0..m {
                    let mut acc = algebra.zero();
                    for t in 0..m {
                        acc = acc.add(&e[r][t].mul(&e[t][c])?)?;
                    }
                    if acc != e[r][c] {
                        return Err(Error::NotIdempotent("e^2 differs from e".into()));
                    }
                }
            }
            let mut tr = algebra.zero();
            for k in 0..m {
                tr = tr.add(&e[k][k])?;
            }
            tr.hh0_class()
        }
        ModuleSpec::DualFamily { generators, duals } => {
            if generators.len() != duals.len() || generators.is_empty() {
                return Err(Error::InvalidInput(
                    "generator and dual families must have equal nonzero length".into(),
                ));
            }
            let m = generators[0].len();
            if generators.iter().chain(duals.iter()).any(|v| v.len() != m) {
                return Err(Error::InvalidInput("ragged module vectors".into()));
            }
            // xi_i(x) for x in A^m.
            let apply = |xi: &Vec<AlgElement>, x: &Vec<AlgElement>| -> Result<AlgElement> {
                let mut acc = algebra.zero();
                for j in 0..m {
                    acc = acc.add(&xi[j].mul(&x[j])?)?;
                }
                Ok(acc)
            };
            // Reproduction: x_k = sum_i xi_i(x_k) x_i for every generator.
            for xk in generators {
                let mut recon: Vec<AlgElement> = vec![algebra.zero(); m];
                for (xi, xi_gen) in duals.iter().zip(generators.iter()) {
                    let c = apply(xi, xk)?;
                    for j in 0..m {
                        recon[j] = recon[j].add(&c.mul(&xi_gen[j])?)?;
                    }
                }
                if recon != *xk {
                    return Err(Error::NotReconstructing(
                        "dual family does not reproduce the generators".into(),
                    ));
                }
            }
            let mut tr = algebra.zero();
            for (xi, x) in duals.iter().zip(generators.iter()) {
                tr = tr.add(&apply(xi, x)?)?;
            }
            tr.hh0_class()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2q() -> (Arc<SemisimpleAlgebra>, Order) {
        make_algebra(vec![(2, NumberField::rationals())]).unwrap()
    }

    #[test]
    fn dimensions() {
        let (a, _) = make_algebra(vec![(1, NumberField::rationals())]).unwrap();
        assert_eq!(a.dim(), 1);
        let (a, _) = m2q();
        assert_eq!(a.dim(), 4);
        let (a, _) = make_algebra(vec![
            (1, NumberField::quadratic(-1).unwrap()),
            (2, NumberField::rationals()),
        ])
        .unwrap();
        assert_eq!(a.dim(), 6);
    }

    #[test]
    fn star_is_an_involution_and_antihomomorphism() {
        let (a, _) = make_algebra(vec![
            (2, NumberField::quadratic(-1).unwrap()),
            (2, NumberField::rationals()),
        ])
        .unwrap();
        // A couple of fixed elements with mixed entries.
        let k = &a.blocks()[0].field.clone();
        let mut x = a.zero();
        x.block_mut(0)[0][1] = k.generator();
        x.block_mut(0)[1][0] = k.element(vec![rat::q(2), rat::q(3)]).unwrap();
        x.block_mut(1)[0][0] = NumberField::rationals().from_rational(rat::q(5));
        let mut y = a.one();
        y.block_mut(0)[0][0] = k.element(vec![rat::q(1), rat::q(-1)]).unwrap();
        y.block_mut(1)[1][0] = NumberField::rationals().from_rational(rat::qq(1, 2));

        assert_eq!(x.star().unwrap().star().unwrap(), x);
        let lhs = x.mul(&y).unwrap().star().unwrap();
        let rhs = y.star().unwrap().mul(&x.star().unwrap()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn regular_trace_norm_on_m2() {
        let (a, _) = m2q();
        let (tr, n) = regular_trace_norm(&a, &a.one()).unwrap();
        assert_eq!(tr, rat::q(4));
        assert_eq!(n, rat::q(1));
        let (_, n) = regular_trace_norm(&a, &a.scalar(&rat::q(2))).unwrap();
        assert_eq!(n, rat::q(16));
        let (_, n) = regular_trace_norm(&a, &a.zero()).unwrap();
        assert_eq!(n, rat::q(0));
    }

    #[test]
    fn norm_is_multiplicative() {
        let (a, _) = make_algebra(vec![
            (2, NumberField::rationals()),
            (1, NumberField::quadratic(2).unwrap()),
        ])
        .unwrap();
        let k = a.blocks()[1].field.clone();
        let mut x = a.one();
        x.block_mut(0)[0][1] = NumberField::rationals().from_rational(rat::q(3));
        x.block_mut(1)[0][0] = k.element(vec![rat::q(1), rat::q(1)]).unwrap();
        let mut y = a.zero();
        y.block_mut(0)[0][0] = NumberField::rationals().from_rational(rat::q(2));
        y.block_mut(0)[1][1] = NumberField::rationals().from_rational(rat::q(1));
        y.block_mut(0)[1][0] = NumberField::rationals().from_rational(rat::q(-1));
        y.block_mut(1)[0][0] = k.generator();
        let (_, nx) = regular_trace_norm(&a, &x).unwrap();
        let (_, ny) = regular_trace_norm(&a, &y).unwrap();
        let (_, nxy) = regular_trace_norm(&a, &x.mul(&y).unwrap()).unwrap();
        assert_eq!(nxy, nx * ny);
    }

    #[test]
    fn validate_order_examples() {
        // M2(Z) in M2(Q): valid.
        let (a, order) = m2q();
        let v = validate_order(&a, order.basis()).unwrap();
        assert!(v.ok(), "{:?}", v.violations);

        // span{1, sqrt2/2} in Q(sqrt2): closure violation.
        let (a2, _) = make_algebra(vec![(1, NumberField::quadratic(2).unwrap())]).unwrap();
        let k = a2.blocks()[0].field.clone();
        let half_gen = a2.matrix_unit(0, 0, 0, k.generator().scale(&rat::qq(1, 2)));
        let v = validate_order(&a2, &[a2.one(), half_gen]).unwrap();
        assert!(v.violations.iter().any(|s| s.contains("closure")), "{:?}", v.violations);

        // span{1} in Q(sqrt2): fullness violation.
        let v = validate_order(&a2, &[a2.one()]).unwrap();
        assert!(v.violations.iter().any(|s| s.contains("fullness")), "{:?}", v.violations);
    }

    #[test]
    fn ideal_norms() {
        // a = O: norm 1.
        let (a, order) = m2q();
        let rep = ideal_norm_degree(&order, &[a.one()], &rat::int(1), Some(&rat::int(3)), None)
            .unwrap();
        assert_eq!(rep.norm, rat::q(1));
        assert_eq!(rep.degree, 0.0);

        // 2Z inside Z.
        let (zq, zorder) = make_algebra(vec![(1, NumberField::rationals())]).unwrap();
        let two = zq.scalar(&rat::q(2));
        let rep =
            ideal_norm_degree(&zorder, &[two], &rat::int(1), Some(&rat::int(5)), None).unwrap();
        assert_eq!(rep.norm, rat::q(2));

        // M2(Z) diag(1,2): index 4.
        let (a, order) = m2q();
        let mut d = a.zero();
        d.block_mut(0)[0][0] = NumberField::rationals().from_rational(rat::q(1));
        d.block_mut(0)[1][1] = NumberField::rationals().from_rational(rat::q(2));
        let rep = ideal_norm_degree(&order, &[d], &rat::int(1), None, None).unwrap();
        assert_eq!(rep.norm, rat::q(4));
    }

    #[test]
    fn ideal_norm_with_fractional_generators() {
        // a = (1/3) Z inside Z with r = 3: #(O/ar) = 1, #(O/Or) = 3.
        let (zq, zorder) = make_algebra(vec![(1, NumberField::rationals())]).unwrap();
        let third = zq.scalar(&rat::qq(1, 3));
        let rep = ideal_norm_degree(&zorder, &[third], &rat::int(3), Some(&rat::int(6)), None)
            .unwrap();
        assert_eq!(rep.norm, rat::qq(1, 3));
        // r = 1 fails containment.
        let third = zq.scalar(&rat::qq(1, 3));
        assert!(matches!(
            ideal_norm_degree(&zorder, &[third], &rat::int(1), None, None),
            Err(Error::InvalidScaling(_))
        ));
    }

    #[test]
    fn hs_rank_of_free_and_column_modules() {
        let (a, _) = make_algebra(vec![
            (2, NumberField::rationals()),
            (3, NumberField::rationals()),
        ])
        .unwrap();
        // E = A: e = 1 in M_1(A): per-block rank n_i.
        let r = hattori_stallings_rank(&a, &ModuleSpec::Idempotent(vec![vec![a.one()]])).unwrap();
        assert_eq!(r.components()[0].as_rational().unwrap(), rat::q(2));
        assert_eq!(r.components()[1].as_rational().unwrap(), rat::q(3));

        // Column module of the first block: e = e_11.
        let q = NumberField::rationals();
        let e11 = a.matrix_unit(0, 0, 0, q.one());
        let r = hattori_stallings_rank(&a, &ModuleSpec::Idempotent(vec![vec![e11]])).unwrap();
        assert_eq!(r.components()[0].as_rational().unwrap(), rat::q(1));
        assert_eq!(r.components()[1].as_rational().unwrap(), rat::q(0));

        // Zero module.
        let r = hattori_stallings_rank(&a, &ModuleSpec::Idempotent(vec![vec![a.zero()]])).unwrap();
        assert!(r.components().iter().all(|c| c.is_zero()));

        // Non-idempotent rejected.
        let bad = a.scalar(&rat::q(2));
        assert!(matches!(
            hattori_stallings_rank(&a, &ModuleSpec::Idempotent(vec![vec![bad]])),
            Err(Error::NotIdempotent(_))
        ));
    }

    #[test]
    fn hs_rank_is_conjugation_invariant() {
        let (a, _) = m2q();
        let q = NumberField::rationals();
        // e = e11, u invertible.
        let e = a.matrix_unit(0, 0, 0, q.one());
        let mut u = a.one();
        u.block_mut(0)[0][1] = q.from_rational(rat::q(7));
        let conj = u.mul(&e).unwrap().mul(&u.inv().unwrap()).unwrap();
        let r1 = hattori_stallings_rank(&a, &ModuleSpec::Idempotent(vec![vec![e]])).unwrap();
        let r2 = hattori_stallings_rank(&a, &ModuleSpec::Idempotent(vec![vec![conj]])).unwrap();
        assert_eq!(r1.components()[0], r2.components()[0]);
    }

    #[test]
    fn hs_rank_via_dual_family() {
        // E = A as a module over itself: generators {1}, duals {id}.
        let (a, _) = m2q();
        let r = hattori_stallings_rank(
            &a,
            &ModuleSpec::DualFamily {
                generators: vec![vec![a.one()]],
                duals: vec![vec![a.one()]],
            },
        )
        .unwrap();
        assert_eq!(r.components()[0].as_rational().unwrap(), rat::q(2));

        // A failing dual family.
        let bad = hattori_stallings_rank(
            &a,
            &ModuleSpec::DualFamily {
                generators: vec![vec![a.one()]],
                duals: vec![vec![a.scalar(&rat::q(2))]],
            },
        );
        assert!(matches!(bad, Err(Error::NotReconstructing(_))));
    }

    #[test]
    fn center_embedding() {
        // Z = Q: r = 3 -> 3.
        let (a, _) = make_algebra(vec![(1, NumberField::rationals())]).unwrap();
        let r = CenterElement::new(&a, vec![NumberField::rationals().from_rational(rat::q(3))])
            .unwrap();
        let v = embed_center(&r, EmbeddingPolicy::Principal).unwrap();
        assert!((v.re - 3.0).abs() < 1e-14 && v.im.abs() < 1e-14);

        // Z = Q(sqrt2), r = sqrt2, principal policy -> +1.4142...
        let (a, _) = make_algebra(vec![(1, NumberField::quadratic(2).unwrap())]).unwrap();
        let k = a.blocks()[0].field.clone();
        let r = CenterElement::new(&a, vec![k.generator()]).unwrap();
        let v = embed_center(&r, EmbeddingPolicy::Principal).unwrap();
        assert!((v.re - std::f64::consts::SQRT_2).abs() < 1e-12);
        let v = embed_center(&r, EmbeddingPolicy::LexSmallest).unwrap();
        assert!((v.re + std::f64::consts::SQRT_2).abs() < 1e-12);

        // Z = Q + Q: blockwise sum.
        let (a, _) = make_algebra(vec![
            (1, NumberField::rationals()),
            (1, NumberField::rationals()),
        ])
        .unwrap();
        let q = NumberField::rationals();
        let r = CenterElement::new(
            &a,
            vec![q.from_rational(rat::q(1)), q.from_rational(rat::q(2))],
        )
        .unwrap();
        let v = embed_center(&r, EmbeddingPolicy::Principal).unwrap();
        assert!((v.re - 3.0).abs() < 1e-14);
    }

    #[test]
    fn reduced_trace_convention() {
        // On M2(Q), reduced trace of e_11 is 1 (matrix trace), while the
        // regular trace is 2.
        let (a, _) = m2q();
        let q = NumberField::rationals();
        let e11 = a.matrix_unit(0, 0, 0, q.one());
        assert_eq!(reduced_trace(&a, &e11).unwrap(), rat::q(1));
        let (tr, _) = regular_trace_norm(&a, &e11).unwrap();
        assert_eq!(tr, rat::q(2));
    }

    #[test]
    fn inverse_in_blocks() {
        let (a, _) = make_algebra(vec![(2, NumberField::quadratic(-1).unwrap())]).unwrap();
        let k = a.blocks()[0].field.clone();
        let mut x = a.one();
        x.block_mut(0)[0][1] = k.generator();
        let xi = x.inv().unwrap();
        assert_eq!(x.mul(&xi).unwrap(), a.one());
        assert!(matches!(a.zero().inv(), Err(Error::NotInvertible(_))));
    }
}
