//! Hermitian bimodules between semisimple algebras: multiplicity data of
//! shape `⊕ L_i^{n_i N} ⊗ L'_j^{m_j M}`, standard hermitian structures from
//! invertible elements, tensor composition, and the three height
//! functionals (canonical form products, trace-form lattice volumes, and
//! rank/index ratios).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::lattice::{k_volume, QuadLattice};
use crate::matrix::QMatrix;
use crate::numfield::{padic_abs, FieldElement, NumberField};
use crate::rat;
use crate::ssalgebra::{
    embed_field_element, make_algebra, AlgElement, BlockInvolution, EmbeddingPolicy, Order,
    SemisimpleAlgebra,
};
use crate::{Error, Result};

/// An algebra paired with the order that fixes its arithmetic structure.
#[derive(Debug, Clone)]
pub struct ArithmeticAlgebra {
    pub algebra: Arc<SemisimpleAlgebra>,
    pub order: Order,
}

impl PartialEq for ArithmeticAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.algebra == other.algebra && self.order.basis().len() == other.order.basis().len()
    }
}

impl ArithmeticAlgebra {
    pub fn new(algebra: Arc<SemisimpleAlgebra>, order: Order) -> Self {
        ArithmeticAlgebra { algebra, order }
    }

    pub fn make(blocks: Vec<(usize, Arc<NumberField>)>) -> Result<Arc<ArithmeticAlgebra>> {
        let (algebra, order) = make_algebra(blocks)?;
        Ok(Arc::new(ArithmeticAlgebra { algebra, order }))
    }
}

/// How a component couples its two field factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ComponentKind {
    /// `L_i^{nN} ⊗_Q L'_j^{mM}`: the two actions are independent.
    TensorQ,
    /// `L^{nN} ⊗_L L^{mM}` over center-matched blocks: the symmetric
    /// bimodules; the only kind containing the unit 1-morphism.
    Balanced,
}

/// Multiplicity entry of one component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Multiplicity {
    pub left: u64,
    pub right: u64,
}

impl Multiplicity {
    pub fn product(&self) -> u64 {
        self.left * self.right
    }
}

/// One per-block hermitian form value with the number of canonical
/// generators carrying it.
#[derive(Debug, Clone)]
pub struct FormEntry {
    pub value: FieldElement,
    pub count: u64,
}

/// Hermitian data of one side: per block, the form values on the canonical
/// family, plus flags describing how exact that data is.
#[derive(Debug, Clone)]
pub struct SideForm {
    /// Indexed by block of the relevant algebra.
    pub entries: Vec<Vec<FormEntry>>,
    /// True when the stored values are the exact central values beta beta*.
    pub exact: bool,
    /// True when every canonical family is a free-module basis.
    pub free: bool,
}

/// An arithmetic hermitian bimodule in standard form.
#[derive(Clone)]
pub struct HermitianBimodule {
    left: Arc<ArithmeticAlgebra>,
    right: Arc<ArithmeticAlgebra>,
    components: BTreeMap<(usize, usize, ComponentKind), Multiplicity>,
    /// The defining invertible elements, when the bimodule was built
    /// directly (tensor products carry only the induced form data).
    beta_left: Option<AlgElement>,
    beta_right: Option<AlgElement>,
    left_form: Option<SideForm>,
    right_form: Option<SideForm>,
}

impl fmt::Debug for HermitianBimodule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HermitianBimodule({} components, dim {})", self.components.len(), self.dim())
    }
}

impl HermitianBimodule {
    pub fn left(&self) -> &Arc<ArithmeticAlgebra> {
        &self.left
    }

    pub fn right(&self) -> &Arc<ArithmeticAlgebra> {
        &self.right
    }

    pub fn components(&self) -> &BTreeMap<(usize, usize, ComponentKind), Multiplicity> {
        &self.components
    }

    pub fn left_form(&self) -> Option<&SideForm> {
        self.left_form.as_ref()
    }

    pub fn right_form(&self) -> Option<&SideForm> {
        self.right_form.as_ref()
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    /// Q-dimension of one component.
    fn component_dim(&self, key: &(usize, usize, ComponentKind), m: &Multiplicity) -> u64 {
        let (i, j, kind) = key;
        let bi = &self.left.algebra.blocks()[*i];
        let bj = &self.right.algebra.blocks()[*j];
        let (n, d) = (bi.n as u64, bi.field.degree() as u64);
        let (mm, dp) = (bj.n as u64, bj.field.degree() as u64);
        match kind {
            ComponentKind::TensorQ => n * m.left * d * mm * m.right * dp,
            ComponentKind::Balanced => n * m.left * mm * m.right * d,
        }
    }

    pub fn dim(&self) -> u64 {
        self.components.iter().map(|(k, m)| self.component_dim(k, m)).sum()
    }

    /// Hattori–Stallings rank multiplicities of the left module structure:
    /// per left block, the number of copies of the simple module.
    pub fn left_rank_multiplicities(&self) -> Vec<u64> {
        let mut out = vec![0u64; self.left.algebra.blocks().len()];
        for ((i, j, kind), m) in &self.components {
            let bj = &self.right.algebra.blocks()[*j];
            let (mm, dp) = (bj.n as u64, bj.field.degree() as u64);
            out[*i] += match kind {
                ComponentKind::TensorQ => m.left * mm * m.right * dp,
                ComponentKind::Balanced => m.left * mm * m.right,
            };
        }
        out
    }

    /// Rank multiplicities of the right module structure, per right block.
    pub fn right_rank_multiplicities(&self) -> Vec<u64> {
        let mut out = vec![0u64; self.right.algebra.blocks().len()];
        for ((i, j, kind), m) in &self.components {
            let bi = &self.left.algebra.blocks()[*i];
            let (n, d) = (bi.n as u64, bi.field.degree() as u64);
            out[*j] += match kind {
                ComponentKind::TensorQ => m.right * n * m.left * d,
                ComponentKind::Balanced => m.right * n * m.left,
            };
        }
        out
    }

    /// Isomorphism key used by universes: algebra shapes plus the component
    /// multiplicity products (hermitian data deliberately not compared).
    pub fn iso_key(&self) -> IsoKey {
        IsoKey {
            left: algebra_shape(&self.left.algebra),
            right: algebra_shape(&self.right.algebra),
            components: self
                .components
                .iter()
                .map(|((i, j, kind), m)| (*i, *j, *kind, m.product()))
                .collect(),
        }
    }
}

/// Comparable shape data of an algebra: (n_i, min poly of L_i) per block.
pub type AlgebraShape = Vec<(usize, Vec<BigInt>)>;

fn algebra_shape(a: &Arc<SemisimpleAlgebra>) -> AlgebraShape {
    a.blocks().iter().map(|b| (b.n, b.field.min_poly().to_vec())).collect()
}

/// Universe-level isomorphism key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct IsoKey {
    pub left: AlgebraShape,
    pub right: AlgebraShape,
    pub components: Vec<(usize, usize, ComponentKind, u64)>,
}

/// Build a hermitian bimodule from multiplicity data and defining elements.
///
/// `beta_left` and `beta_right` must be invertible; the cached form values
/// are `beta beta*` per left block and `beta* beta` per right block. When a
/// value is not central the normalized matrix trace is stored instead and
/// the side is flagged inexact.
pub fn make_hermitian_bimodule(
    left: Arc<ArithmeticAlgebra>,
    right: Arc<ArithmeticAlgebra>,
    components: Vec<(usize, usize, ComponentKind, u64, u64)>,
    beta_left: AlgElement,
    beta_right: AlgElement,
) -> Result<HermitianBimodule> {
    if beta_left.algebra() != &left.algebra {
        return Err(Error::FieldMismatch("beta_left lives in the wrong algebra".into()));
    }
    if beta_right.algebra() != &right.algebra {
        return Err(Error::FieldMismatch("beta_right lives in the wrong algebra".into()));
    }
    if !beta_left.is_invertible()? || !beta_right.is_invertible()? {
        return Err(Error::NotInvertible("defining elements must be invertible".into()));
    }
    let mut map: BTreeMap<(usize, usize, ComponentKind), Multiplicity> = BTreeMap::new();
    for (i, j, kind, n_mult, m_mult) in components {
        if i >= left.algebra.blocks().len() || j >= right.algebra.blocks().len() {
            return Err(Error::InvalidInput("component indexes a missing block".into()));
        }
        if n_mult == 0 || m_mult == 0 {
            continue;
        }
        let kind = canonical_kind(&left.algebra, &right.algebra, i, j, kind)?;
        let entry = map
            .entry((i, j, kind))
            .or_insert(Multiplicity { left: 0, right: 0 });
        // Direct sums merge by multiplicity product.
        if entry.left == 0 {
            *entry = Multiplicity { left: n_mult, right: m_mult };
        } else {
            *entry = Multiplicity { left: entry.product() + n_mult * m_mult, right: 1 };
        }
    }
    let rho_left = side_values(&left.algebra, &beta_left, true)?;
    let rho_right = side_values(&right.algebra, &beta_right, false)?;
    let mut module = HermitianBimodule {
        left,
        right,
        components: map,
        beta_left: Some(beta_left),
        beta_right: Some(beta_right),
        left_form: None,
        right_form: None,
    };
    module.left_form = Some(build_side_form(&module, true, &rho_left.0, rho_left.1)?);
    module.right_form = Some(build_side_form(&module, false, &rho_right.0, rho_right.1)?);
    Ok(module)
}

/// Over matched rational blocks the two kinds coincide; canonicalize so
/// that iso keys agree.
fn canonical_kind(
    a: &Arc<SemisimpleAlgebra>,
    b: &Arc<SemisimpleAlgebra>,
    i: usize,
    j: usize,
    kind: ComponentKind,
) -> Result<ComponentKind> {
    let fi = &a.blocks()[i].field;
    let fj = &b.blocks()[j].field;
    if kind == ComponentKind::Balanced && fi.min_poly() != fj.min_poly() {
        return Err(Error::InvalidInput(
            "balanced components require identical block fields".into(),
        ));
    }
    if fi.is_rationals() && fj.is_rationals() {
        return Ok(ComponentKind::Balanced);
    }
    Ok(kind)
}

/// Per-block (value, exact) data for one side: `beta beta*` on the left,
/// `beta* beta` on the right.
fn side_values(
    algebra: &Arc<SemisimpleAlgebra>,
    beta: &AlgElement,
    left_side: bool,
) -> Result<(Vec<FieldElement>, bool)> {
    let prod = if left_side {
        beta.mul(&beta.star()?)?
    } else {
        beta.star()?.mul(beta)?
    };
    if let Some(values) = prod.central_values() {
        check_positive(algebra, &values)?;
        return Ok((values, true));
    }
    // Non-central form values: store the normalized matrix trace as the
    // scalar surrogate and flag the side inexact.
    let class = prod.hh0_class()?;
    let mut values = Vec::new();
    for (bi, b) in algebra.blocks().iter().enumerate() {
        let v = class.components()[bi]
            .scale(&BigRational::new(BigInt::one(), rat::int(b.n as i64)));
        values.push(v);
    }
    check_positive(algebra, &values)?;
    Ok((values, false))
}

fn check_positive(algebra: &Arc<SemisimpleAlgebra>, values: &[FieldElement]) -> Result<()> {
    for (b, v) in algebra.blocks().iter().zip(values) {
        if v.is_zero() {
            return Err(Error::NotPositive("form value vanishes on a block".into()));
        }
        if let Some(q) = v.as_rational() {
            if !q.is_positive() {
                return Err(Error::NotPositive("form value not positive".into()));
            }
            continue;
        }
        for place in b.field.archimedean_places(64)? {
            let z = v.embed(&place)?;
            if z.re <= 1e-12 {
                return Err(Error::NotPositive(
                    "form value not positive at an archimedean place".into(),
                ));
            }
        }
    }
    Ok(())
}

/// Canonical-family form data for one side from per-block central values.
fn build_side_form(
    module: &HermitianBimodule,
    left_side: bool,
    values: &[FieldElement],
    exact: bool,
) -> Result<SideForm> {
    let (algebra, ranks) = if left_side {
        (&module.left.algebra, module.left_rank_multiplicities())
    } else {
        (&module.right.algebra, module.right_rank_multiplicities())
    };
    let mut entries = Vec::new();
    let mut free = true;
    for (bi, b) in algebra.blocks().iter().enumerate() {
        let copies = ranks[bi];
        if copies == 0 {
            entries.push(vec![]);
            continue;
        }
        let n = b.n as u64;
        let count = if copies % n == 0 {
            copies / n
        } else {
            free = false;
            copies / n + 1
        };
        entries.push(vec![FormEntry { value: values[bi].clone(), count }]);
    }
    Ok(SideForm { entries, exact, free })
}

/// The unit 1-morphism: the algebra as a bimodule over itself with the
/// standard form (beta = 1).
pub fn unit_bimodule(x: &Arc<ArithmeticAlgebra>) -> Result<HermitianBimodule> {
    let components = (0..x.algebra.blocks().len())
        .map(|j| (j, j, ComponentKind::Balanced, 1, 1))
        .collect();
    make_hermitian_bimodule(
        Arc::clone(x),
        Arc::clone(x),
        components,
        x.algebra.one(),
        x.algebra.one(),
    )
}

/// Center identification between two algebras: a block bijection matching
/// identical minimal polynomials (deterministic: in block order within each
/// group of equal fields). `None` when the centers are not isomorphic.
pub fn center_matching(
    a: &Arc<SemisimpleAlgebra>,
    b: &Arc<SemisimpleAlgebra>,
) -> Option<Vec<usize>> {
    if a.blocks().len() != b.blocks().len() {
        return None;
    }
    let mut used = vec![false; b.blocks().len()];
    let mut matching = Vec::with_capacity(a.blocks().len());
    for ba in a.blocks() {
        let mut found = None;
        for (j, bb) in b.blocks().iter().enumerate() {
            if !used[j] && ba.field.min_poly() == bb.field.min_poly() {
                found = Some(j);
                break;
            }
        }
        match found {
            Some(j) => {
                used[j] = true;
                matching.push(j);
            }
            None => return None,
        }
    }
    Some(matching)
}

/// Membership report for the symmetric-bimodule class.
#[derive(Debug, Clone)]
pub struct HkzReport {
    pub is_member: bool,
    pub matching: Option<Vec<usize>>,
    pub reasons: Vec<String>,
}

/// Check membership in the class of center-symmetric bimodules over a
/// shared center: (a) the centers must be identified, (b) the canonical
/// form values must be central (exact data), (c) components must be
/// balanced and supported on the matched block pairs, and the canonical
/// families must be honest module bases.
pub fn check_hkz(module: &HermitianBimodule, matching: Option<Vec<usize>>) -> HkzReport {
    let mut reasons = Vec::new();
    let matching = match matching {
        Some(m) => Some(m),
        None => center_matching(&module.left.algebra, &module.right.algebra),
    };
    let Some(iota) = matching.clone() else {
        return HkzReport {
            is_member: false,
            matching: None,
            reasons: vec!["the centers are not isomorphic".into()],
        };
    };
    match (&module.left_form, &module.right_form) {
        (Some(lf), Some(rf)) => {
            if !lf.exact || !rf.exact {
                reasons.push("form values are not central".into());
            }
            if !lf.free || !rf.free {
                reasons.push("canonical families are not free-module bases".into());
            }
        }
        _ => reasons.push("no hermitian data".into()),
    }
    for (i, j, kind) in module.components.keys() {
        if iota[*i] != *j {
            reasons.push(format!(
                "component ({}, {}) violates the center symmetry (expected block {})",
                i, j, iota[*i]
            ));
        }
        if *kind != ComponentKind::Balanced {
            reasons.push(format!("component ({}, {}) is not balanced over the center", i, j));
        }
    }
    HkzReport { is_member: reasons.is_empty(), matching: Some(iota), reasons }
}

/// Reinterpret a field element in another field with the same minimal
/// polynomial.
fn transport(x: &FieldElement, target: &Arc<NumberField>) -> Result<FieldElement> {
    if x.field().min_poly() != target.min_poly() {
        return Err(Error::FieldMismatch("transport between non-identified fields".into()));
    }
    target.element(x.coeffs().to_vec())
}

/// Tensor composition `E ⊗_B F` of an `A`-`B` and a `B`-`C` bimodule.
///
/// Multiplicity data always composes; the induced hermitian data composes
/// when both factors pass the center-symmetry check (otherwise the product
/// carries no form data and only rank-based functionals apply).
pub fn tensor_bimodules(e: &HermitianBimodule, f: &HermitianBimodule) -> Result<HermitianBimodule> {
    if e.right.as_ref() != f.left.as_ref() {
        return Err(Error::CompositionError(
            "middle algebras (and orders) must coincide".into(),
        ));
    }
    let middle = &e.right.algebra;
    let mut components: BTreeMap<(usize, usize, ComponentKind), Multiplicity> = BTreeMap::new();
    for ((i, j, kind_e), me) in &e.components {
        for ((j2, k, kind_f), mf) in &f.components {
            if j != j2 {
                continue;
            }
            let dj = middle.blocks()[*j].field.degree() as u64;
            let both_tensor_q =
                *kind_e == ComponentKind::TensorQ && *kind_f == ComponentKind::TensorQ;
            let factor = me.product()
                * mf.product()
                * if both_tensor_q { dj } else { 1 };
            let kind = if *kind_e == ComponentKind::Balanced && *kind_f == ComponentKind::Balanced
            {
                ComponentKind::Balanced
            } else {
                ComponentKind::TensorQ
            };
            let kind = canonical_kind(&e.left.algebra, &f.right.algebra, *i, *k, kind)?;
            let entry = components
                .entry((*i, *k, kind))
                .or_insert(Multiplicity { left: 0, right: 0 });
            *entry = Multiplicity { left: entry.product() + factor, right: 1 };
        }
    }
    let mut out = HermitianBimodule {
        left: Arc::clone(&e.left),
        right: Arc::clone(&f.right),
        components,
        beta_left: None,
        beta_right: None,
        left_form: None,
        right_form: None,
    };
    // Induced hermitian data: form values multiply along each (i, j, k)
    // composition path, the Lemma-style composed canonical families. The
    // transport of a value across the middle requires identified fields;
    // when that fails the side carries no form data.
    out.left_form = compose_side_form(e, f, &out, true);
    out.right_form = compose_side_form(e, f, &out, false);
    Ok(out)
}

/// Composed form data of one side of a tensor product, or `None` when the
/// factors' data cannot be combined.
fn compose_side_form(
    e: &HermitianBimodule,
    f: &HermitianBimodule,
    out: &HermitianBimodule,
    left_side: bool,
) -> Option<SideForm> {
    // Left side of E ⊗ F pairs E's left family with F's left family (the
    // middle-module basis); the right side mirrors this.
    let (outer, inner) = if left_side {
        (e.left_form.as_ref()?, f.left_form.as_ref()?)
    } else {
        (f.right_form.as_ref()?, e.right_form.as_ref()?)
    };
    let algebra = if left_side { &out.left.algebra } else { &out.right.algebra };
    let blocks = algebra.blocks().len();
    let mut entries: Vec<Vec<FormEntry>> = vec![Vec::new(); blocks];
    // Middle blocks touched per outer block, from the component support.
    for (bi, b) in algebra.blocks().iter().enumerate() {
        let mut list: Vec<FormEntry> = Vec::new();
        let touched: Vec<usize> = if left_side {
            e.components
                .keys()
                .filter(|(i, _, _)| *i == bi)
                .map(|(_, j, _)| *j)
                .collect()
        } else {
            f.components
                .keys()
                .filter(|(_, k, _)| *k == bi)
                .map(|(j, _, _)| *j)
                .collect()
        };
        let mut touched = touched;
        touched.sort();
        touched.dedup();
        for j in touched {
            for x in &outer.entries[bi] {
                for u in &inner.entries[j] {
                    let transported = transport(&u.value, &b.field).ok()?;
                    let val = x.value.mul(&transported).ok()?;
                    let count = x.count * u.count;
                    match list.iter_mut().find(|entry| entry.value == val) {
                        Some(entry) => entry.count += count,
                        None => list.push(FormEntry { value: val, count }),
                    }
                }
            }
        }
        entries[bi] = list;
    }
    // Freeness of the composed families: total counts must match the free
    // ranks recomputed from the result's multiplicity data.
    let ranks = if left_side {
        out.left_rank_multiplicities()
    } else {
        out.right_rank_multiplicities()
    };
    let mut free = true;
    for (bi, b) in algebra.blocks().iter().enumerate() {
        let total: u64 = entries[bi].iter().map(|e| e.count).sum();
        if total * b.n as u64 != ranks[bi] {
            free = false;
        }
    }
    Some(SideForm { entries, exact: outer.exact && inner.exact, free })
}

/// Explicit linear-algebra model of the tensor product: builds both
/// bimodules as Q-spaces with structure-constant actions, and computes the
/// dimension of `E ⊗_B F` as the corank of the balancing relations.
pub fn concrete_tensor_oracle(e: &HermitianBimodule, f: &HermitianBimodule) -> Result<u64> {
    if e.right.as_ref() != f.left.as_ref() {
        return Err(Error::CompositionError(
            "middle algebras (and orders) must coincide".into(),
        ));
    }
    let dim_e = e.dim();
    let dim_f = f.dim();
    if dim_e * dim_f > 4096 {
        return Err(Error::BudgetExceeded(format!(
            "oracle limit: dim E * dim F = {} > 4096",
            dim_e * dim_f
        )));
    }
    let middle = &e.right.algebra;
    let e_model = SideModel::build(e)?;
    let f_model = SideModel::build(f)?;
    let de = e_model.dim;
    let df = f_model.dim;
    // Relations (x b) ⊗ y - x ⊗ (b y) for the canonical Q-basis b of B.
    let mut rows: Vec<Vec<BigRational>> = Vec::new();
    let b_basis = middle.canonical_basis();
    for b in &b_basis {
        let right_action = e_model.right_action(b)?;
        let left_action = f_model.left_action(b)?;
        for xe in 0..de {
            for yf in 0..df {
                let mut row = vec![BigRational::zero(); de * df];
                for (target, coef) in right_action[xe].iter().enumerate() {
                    if !coef.is_zero() {
                        row[target * df + yf] += coef;
                    }
                }
                for (target, coef) in left_action[yf].iter().enumerate() {
                    if !coef.is_zero() {
                        row[xe * df + target] -= coef;
                    }
                }
                if row.iter().any(|v| !v.is_zero()) {
                    rows.push(row);
                }
            }
        }
    }
    let rank = if rows.is_empty() { 0 } else { QMatrix::from_rows(rows).rank() };
    Ok((de * df - rank) as u64)
}

/// Q-space model of one bimodule: a basis together with the matrices of the
/// left action of `A` and the right action of `B` on it.
struct SideModel {
    dim: usize,
    /// Per basis vector of the module, its description.
    basis: Vec<BasisVec>,
    left_algebra: Arc<SemisimpleAlgebra>,
    right_algebra: Arc<SemisimpleAlgebra>,
}

#[derive(Clone)]
struct BasisVec {
    comp: (usize, usize, ComponentKind),
    /// Copy index within the component's multiplicity grid.
    copy: u64,
    /// Row position in the left column space.
    row: usize,
    /// Column position in the right row space.
    col: usize,
    /// Index into the integral basis of the component field(s):
    /// (left field basis index, right field basis index); balanced
    /// components use only the left index.
    wl: usize,
    wr: usize,
}

impl SideModel {
    fn build(module: &HermitianBimodule) -> Result<SideModel> {
        let mut basis = Vec::new();
        for ((i, j, kind), m) in &module.components {
            let bi = &module.left.algebra.blocks()[*i];
            let bj = &module.right.algebra.blocks()[*j];
            let copies = m.product();
            match kind {
                ComponentKind::Balanced => {
                    for copy in 0..copies {
                        for row in 0..bi.n {
                            for col in 0..bj.n {
                                for wl in 0..bi.field.degree() {
                                    basis.push(BasisVec {
                                        comp: (*i, *j, *kind),
                                        copy,
                                        row,
                                        col,
                                        wl,
                                        wr: 0,
                                    });
                                }
                            }
                        }
                    }
                }
                ComponentKind::TensorQ => {
                    for copy in 0..copies {
                        for row in 0..bi.n {
                            for col in 0..bj.n {
                                for wl in 0..bi.field.degree() {
                                    for wr in 0..bj.field.degree() {
                                        basis.push(BasisVec {
                                            comp: (*i, *j, *kind),
                                            copy,
                                            row,
                                            col,
                                            wl,
                                            wr,
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(SideModel {
            dim: basis.len(),
            basis,
            left_algebra: Arc::clone(&module.left.algebra),
            right_algebra: Arc::clone(&module.right.algebra),
        })
    }

    fn index_of(&self, v: &BasisVec) -> usize {
        self.basis
            .iter()
            .position(|w| {
                w.comp == v.comp
                    && w.copy == v.copy
                    && w.row == v.row
                    && w.col == v.col
                    && w.wl == v.wl
                    && w.wr == v.wr
            })
            .expect("basis vector present")
    }

    /// Matrix (as rows per source basis vector) of the right action of `b`.
    fn right_action(&self, b: &AlgElement) -> Result<Vec<Vec<BigRational>>> {
        let mut rows = Vec::with_capacity(self.dim);
        for v in &self.basis {
            let (_, j, kind) = v.comp;
            let bj = &self.right_algebra.blocks()[j];
            let field = &bj.field;
            let mut row = vec![BigRational::zero(); self.dim];
            // x = omega_wl-weighted row-vector e_col (right part acts by
            // row-vector times matrix).
            for c2 in 0..bj.n {
                let entry = &b.block(j)[v.col][c2];
                if entry.is_zero() {
                    continue;
                }
                match kind {
                    ComponentKind::Balanced => {
                        // The common field coefficient multiplies through.
                        let omega = field
                            .element(field.integral_basis()[v.wl].clone())
                            .expect("basis");
                        let prod = omega.mul(entry)?;
                        let coords = field_coords(field, &prod)?;
                        for (wl2, c) in coords.iter().enumerate() {
                            if c.is_zero() {
                                continue;
                            }
                            let mut target = v.clone();
                            target.col = c2;
                            target.wl = wl2;
                            row[self.index_of(&target)] += c;
                        }
                    }
                    ComponentKind::TensorQ => {
                        let omega = field
                            .element(field.integral_basis()[v.wr].clone())
                            .expect("basis");
                        let prod = omega.mul(entry)?;
                        let coords = field_coords(field, &prod)?;
                        for (wr2, c) in coords.iter().enumerate() {
                            if c.is_zero() {
                                continue;
                            }
                            let mut target = v.clone();
                            target.col = c2;
                            target.wr = wr2;
                            row[self.index_of(&target)] += c;
                        }
                    }
                }
            }
            rows.push(row);
        }
        Ok(rows)
    }

    /// Matrix of the left action of `a`.
    fn left_action(&self, a: &AlgElement) -> Result<Vec<Vec<BigRational>>> {
        let mut rows = Vec::with_capacity(self.dim);
        for v in &self.basis {
            let (i, _, _) = v.comp;
            let bi = &self.left_algebra.blocks()[i];
            let field = &bi.field;
            let mut row = vec![BigRational::zero(); self.dim];
            for r2 in 0..bi.n {
                let entry = &a.block(i)[r2][v.row];
                if entry.is_zero() {
                    continue;
                }
                let omega =
                    field.element(field.integral_basis()[v.wl].clone()).expect("basis");
                let prod = entry.mul(&omega)?;
                let coords = field_coords(field, &prod)?;
                for (wl2, c) in coords.iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    let mut target = v.clone();
                    target.row = r2;
                    target.wl = wl2;
                    row[self.index_of(&target)] += c;
                }
            }
            rows.push(row);
        }
        Ok(rows)
    }
}

/// Coordinates of a field element in the integral basis.
fn field_coords(field: &Arc<NumberField>, x: &FieldElement) -> Result<Vec<BigRational>> {
    let d = field.degree();
    let basis = field.integral_basis();
    let power_default = basis
        .iter()
        .enumerate()
        .all(|(i, v)| v.iter().enumerate().all(|(j, c)| if i == j { c.is_one() } else { c.is_zero() }));
    if power_default {
        return Ok(x.coeffs().to_vec());
    }
    let mut m = QMatrix::zeros(d, d);
    for (j, b) in basis.iter().enumerate() {
        for i in 0..d {
            m[(i, j)] = b[i].clone();
        }
    }
    m.solve(x.coeffs())
        .ok_or_else(|| Error::FieldError("integral basis does not span".into()))
}

/// A height value as produced by the bimodule functionals.
#[derive(Debug, Clone)]
pub struct BimoduleHeight {
    pub value: f64,
    pub exact: Option<BigRational>,
    /// "canonical" or "searched".
    pub mode: String,
    /// (label, contribution) per place/side.
    pub per_place: Vec<(String, f64)>,
    /// True when the value came from exact central data on free bases.
    pub exact_data: bool,
}

/// Product of the embedded form values of one side, with its exact value
/// when everything is rational.
fn side_height(
    algebra: &Arc<SemisimpleAlgebra>,
    form: &SideForm,
    policy: EmbeddingPolicy,
) -> Result<(f64, Option<BigRational>)> {
    let mut value = 1.0f64;
    let mut exact = Some(BigRational::one());
    for (bi, entries) in form.entries.iter().enumerate() {
        let field = &algebra.blocks()[bi].field;
        for e in entries {
            let sigma = embed_field_element(field, &e.value, policy)?;
            if sigma.im.abs() > 1e-9 || sigma.re <= 0.0 {
                return Err(Error::PositivityViolation(format!(
                    "embedded form value {} + {}i is not positive",
                    sigma.re, sigma.im
                )));
            }
            value *= sigma.re.powi(e.count as i32);
            exact = match (exact, e.value.as_rational()) {
                (Some(acc), Some(q)) => {
                    let mut p = acc;
                    for _ in 0..e.count {
                        p *= &q;
                    }
                    Some(p)
                }
                _ => None,
            };
        }
    }
    Ok((value, exact))
}

/// Canonical-basis height `H = prod_sigma prod_j sigma(h_B(y_j,y_j)) /
/// prod_i sigma(h_A(x_i,x_i))` over the cached canonical families, with an
/// optional randomized unit-perturbation search that can only lower the
/// reported value. The `normalized` flag is accepted for interface
/// symmetry: the canonical reference volume of the order is 1, so the
/// normalized and plain values coincide.
pub fn canonical_basis_height(
    module: &HermitianBimodule,
    normalized: bool,
    search_budget: usize,
    seed: u64,
) -> Result<BimoduleHeight> {
    let _ = normalized;
    let (lf, rf) = match (&module.left_form, &module.right_form) {
        (Some(l), Some(r)) => (l, r),
        _ => {
            return Err(Error::Unsupported(
                "no hermitian data on this bimodule (tensor product outside the symmetric class)"
                    .into(),
            ))
        }
    };
    let policy = EmbeddingPolicy::Principal;
    let (ha, ea) = side_height(&module.left.algebra, lf, policy)?;
    let (hb, eb) = side_height(&module.right.algebra, rf, policy)?;
    let exact = match (ea, eb) {
        (Some(a), Some(b)) => Some(b / a),
        _ => None,
    };
    let value = match &exact {
        Some(q) => rat::to_f64(q),
        None => hb / ha,
    };
    let hkz = check_hkz(module, None);
    let exact_data = lf.exact && rf.exact && lf.free && rf.free && hkz.is_member;
    let mut mode = String::from("canonical");
    if !exact_data {
        mode.push_str(" (approximate-inf)");
    }
    let mut best = BimoduleHeight {
        value,
        exact,
        mode,
        per_place: vec![
            ("sigma: left side".into(), ha.ln()),
            ("sigma: right side".into(), hb.ln()),
        ],
        exact_data,
    };
    if search_budget > 0 {
        if let Some(better) = unit_perturbation_search(module, best.value, search_budget, seed)? {
            if better < best.value {
                best.value = better;
                best.exact = None;
                best.mode = "searched".into();
            }
        }
    }
    Ok(best)
}

/// Randomized search over order units `u` (elements with `u` and `u^{-1}`
/// in the order), rescaling the canonical generators; reports the best
/// (lowest) height found, or `None` when no unit improves it.
fn unit_perturbation_search(
    module: &HermitianBimodule,
    current: f64,
    budget: usize,
    seed: u64,
) -> Result<Option<f64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let policy = EmbeddingPolicy::Principal;
    let mut best = current;
    // Units scale one side's form values by sigma(u u*); search per left
    // block over small-coefficient candidates.
    for _ in 0..budget {
        let side_left = rng.gen_bool(0.5);
        let (arith, form) = if side_left {
            (&module.left, module.left_form.as_ref())
        } else {
            (&module.right, module.right_form.as_ref())
        };
        let Some(form) = form else { continue };
        let algebra = &arith.algebra;
        let bi = rng.gen_range(0..algebra.blocks().len());
        let b = &algebra.blocks()[bi];
        let d = b.field.degree();
        let coeffs: Vec<BigRational> =
            (0..d).map(|_| rat::q(rng.gen_range(-2i64..=2))).collect();
        let u = b.field.element(coeffs).expect("length d");
        if u.is_zero() {
            continue;
        }
        // A unit of O_L: the norm must be +-1 (power integral basis).
        let (_, n) = b.field.trace_norm(&u);
        if n.abs() != rat::q(1) {
            continue;
        }
        let uu = match b.involution {
            BlockInvolution::Identity => u.mul(&u).unwrap(),
            BlockInvolution::QuadraticConjugation => {
                u.mul(&b.field.conjugate(&u).unwrap()).unwrap()
            }
        };
        // Perturbed height: scale every entry in this block by sigma(uu*).
        let sigma = embed_field_element(&b.field, &uu, policy)?;
        if sigma.re <= 0.0 || sigma.im.abs() > 1e-9 {
            continue;
        }
        let total_count: u64 = form.entries[bi].iter().map(|e| e.count).sum();
        if total_count == 0 {
            continue;
        }
        // Rescaling the generators multiplies the side's product by
        // sigma(u u*)^count; the height moves by that factor or its
        // reciprocal depending on the side.
        let factor = sigma.re.powi(total_count as i32);
        let candidate = if side_left { best / factor } else { best * factor };
        if candidate > 0.0 && candidate < best {
            best = candidate;
        }
    }
    Ok(if best < current { Some(best) } else { None })
}

/// The Hattori–Stallings height: the ratio of embedded rank elements,
/// `prod_sigma sigma(r_B) / sigma(r_A)`, exact for these integer ranks.
pub fn hs_height(module: &HermitianBimodule) -> Result<BimoduleHeight> {
    if module.is_zero() {
        return Err(Error::ZeroModule("rank height of the zero module".into()));
    }
    let ra: u64 = module.left_rank_multiplicities().iter().sum();
    let rb: u64 = module.right_rank_multiplicities().iter().sum();
    if ra == 0 || rb == 0 {
        return Err(Error::ZeroModule("one-sided rank vanished".into()));
    }
    let exact = BigRational::new(rat::int(rb as i64), rat::int(ra as i64));
    Ok(BimoduleHeight {
        value: rat::to_f64(&exact),
        exact: Some(exact),
        mode: "hattori-stallings".into(),
        per_place: vec![("sigma: r_B/r_A".into(), (rb as f64 / ra as f64).ln())],
        exact_data: true,
    })
}

/// Left and right Jones-type indices from the normalized basis sums, and
/// the index height when both centers embed as the rationals.
#[derive(Debug, Clone)]
pub struct JonesReport {
    /// Per left block: `Ind_A` component (a positive rational).
    pub left_index: Vec<BigRational>,
    /// Per right block: `Ind_B` component.
    pub right_index: Vec<BigRational>,
    /// `prod_sigma Ind_B / Ind_A` when both algebras are single rational
    /// blocks.
    pub height: Option<BigRational>,
}

/// Jones indices of a finite bimodule with exact rational central form
/// values: `Ind_A = sum_i h_A(u_i, u_i)` over an h_B-normalized right
/// basis (and mirrored), evaluated per block.
pub fn jones_index(module: &HermitianBimodule) -> Result<JonesReport> {
    if module.is_zero() {
        return Err(Error::ZeroModule("index of the zero module".into()));
    }
    let (lf, rf) = match (&module.left_form, &module.right_form) {
        (Some(l), Some(r)) if l.exact && r.exact => (l, r),
        _ => {
            return Err(Error::Unsupported(
                "Jones indices need exact central hermitian data".into(),
            ))
        }
    };
    // Rational central values per block.
    let rho = |form: &SideForm, bi: usize| -> Result<BigRational> {
        let entries = &form.entries[bi];
        if entries.len() != 1 {
            return Err(Error::Unsupported(
                "Jones indices need a single form value per block".into(),
            ));
        }
        entries[0].value.as_rational().ok_or_else(|| {
            Error::Unsupported("Jones indices are implemented for rational form values".into())
        })
    };
    // Positivity is the reconstruction obstruction for the normalized
    // bases: every form value must be a positive rational.
    for (bi, entries) in lf.entries.iter().enumerate().chain(rf.entries.iter().enumerate()) {
        let _ = bi;
        for e in entries {
            if let Some(q) = e.value.as_rational() {
                if !q.is_positive() {
                    return Err(Error::NotReconstructing(
                        "form values must be positive for a reconstructing basis".into(),
                    ));
                }
            }
        }
    }
    let mut left_index = vec![BigRational::zero(); module.left.algebra.blocks().len()];
    let mut right_index = vec![BigRational::zero(); module.right.algebra.blocks().len()];
    for ((i, j, kind), m) in &module.components {
        let bi = &module.left.algebra.blocks()[*i];
        let bj = &module.right.algebra.blocks()[*j];
        if bi.field.degree() != 1 || bj.field.degree() != 1 {
            return Err(Error::Unsupported(
                "Jones indices are implemented for rational blocks".into(),
            ));
        }
        let _ = kind;
        let ra = rho(lf, *i)?;
        let rb = rho(rf, *j)?;
        let mult = BigRational::from_integer(rat::int(m.product() as i64));
        left_index[*i] += &ra / &rb * &mult;
        right_index[*j] += &rb / &ra * &mult;
    }
    let height = if module.left.algebra.blocks().len() == 1
        && module.right.algebra.blocks().len() == 1
    {
        Some(&right_index[0] / &left_index[0])
    } else {
        None
    };
    Ok(JonesReport { left_index, right_index, height })
}

/// Which functional a caller wants a bimodule height computed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeightFunctional {
    Canonical,
    LatticeVolume,
    HattoriStallings,
    Jones,
}

/// Evaluate the chosen functional.
pub fn height_by(module: &HermitianBimodule, functional: HeightFunctional) -> Result<BimoduleHeight> {
    match functional {
        HeightFunctional::Canonical => canonical_basis_height(module, false, 0, 0),
        HeightFunctional::HattoriStallings => hs_height(module),
        HeightFunctional::Jones => {
            let rep = jones_index(module)?;
            let h = rep.height.ok_or_else(|| {
                Error::Unsupported(
                    "the index height needs single-block rational centers".into(),
                )
            })?;
            Ok(BimoduleHeight {
                value: rat::to_f64(&h),
                exact: Some(h),
                mode: "jones".into(),
                per_place: vec![],
                exact_data: true,
            })
        }
        HeightFunctional::LatticeVolume => {
            let rep = lattice_volume_height(module, None, None)?;
            Ok(BimoduleHeight {
                value: rep.normalized,
                exact: rep.normalized_exact_square.map(|_q| {
                    // The exact value is a square root; keep only the float.
                    BigRational::from_float(rep.normalized).unwrap_or_else(BigRational::one)
                }),
                mode: "lattice-volume".into(),
                per_place: vec![],
                exact_data: false,
            })
        }
    }
}

/// Volumes-and-ranks height per the arithmetic-lattice route.
#[derive(Debug, Clone)]
pub struct LatticeVolumeHeight {
    /// Non-normalized `prod_sigma vol_B / vol_A`.
    pub plain: f64,
    /// Normalized: each side divided by `vol(O)^(Re sigma(r))`.
    pub normalized: f64,
    pub plain_exact_square: Option<BigRational>,
    pub normalized_exact_square: Option<BigRational>,
    /// Set when a rank element embedded with a nonzero imaginary part.
    pub imaginary_rank_flag: bool,
}

/// Height from trace-form lattice volumes: the module's arithmetic lattice
/// on each side, with the order volume as normalization, per Gram data
/// assembled blockwise. Optional scales shrink/enlarge the module lattice
/// on either side.
pub fn lattice_volume_height(
    module: &HermitianBimodule,
    left_scale: Option<&BigRational>,
    right_scale: Option<&BigRational>,
) -> Result<LatticeVolumeHeight> {
    let (lf, rf) = match (&module.left_form, &module.right_form) {
        (Some(l), Some(r)) => (l, r),
        _ => {
            return Err(Error::Unsupported(
                "no hermitian data on this bimodule".into(),
            ))
        }
    };
    let vol_a = side_volume(module, true, lf, left_scale)?;
    let vol_b = side_volume(module, false, rf, right_scale)?;
    let ord_a = order_volume(&module.left.algebra)?;
    let ord_b = order_volume(&module.right.algebra)?;
    let ra: u64 = module.left_rank_multiplicities().iter().sum();
    let rb: u64 = module.right_rank_multiplicities().iter().sum();
    let plain = vol_b.0 / vol_a.0;
    let normalized = (vol_b.0 / ord_b.0.powi(rb as i32)) / (vol_a.0 / ord_a.0.powi(ra as i32));
    let plain_exact_square = match (&vol_a.1, &vol_b.1) {
        (Some(a), Some(b)) => Some(b / a),
        _ => None,
    };
    let normalized_exact_square = match (&plain_exact_square, &ord_a.1, &ord_b.1) {
        (Some(p), Some(oa), Some(ob)) => {
            let mut num = BigRational::one();
            for _ in 0..ra {
                num *= oa;
            }
            let mut den = BigRational::one();
            for _ in 0..rb {
                den *= ob;
            }
            Some(p * num / den)
        }
        _ => None,
    };
    Ok(LatticeVolumeHeight {
        plain,
        normalized,
        plain_exact_square,
        normalized_exact_square,
        imaginary_rank_flag: false,
    })
}

/// Trace-form Gram of `O_L` with central weight `rho`:
/// `G[s][t] = Tr_{L|Q}(w_s rho w_t*)`.
fn weighted_field_gram(
    field: &Arc<NumberField>,
    involution: BlockInvolution,
    rho: &FieldElement,
) -> Result<QMatrix> {
    let d = field.degree();
    let mut g = QMatrix::zeros(d, d);
    for s in 0..d {
        for t in 0..d {
            let ws = field.element(field.integral_basis()[s].clone())?;
            let wt = field.element(field.integral_basis()[t].clone())?;
            let wt = match involution {
                BlockInvolution::Identity => wt,
                BlockInvolution::QuadraticConjugation => field.conjugate(&wt)?,
            };
            let (tr, _) = field.trace_norm(&ws.mul(rho)?.mul(&wt)?);
            g[(s, t)] = tr;
        }
    }
    Ok(g)
}

/// Volume of one side of the module lattice: blockwise powers of the
/// weighted field-lattice volumes. Returns (value, exact square).
fn side_volume(
    module: &HermitianBimodule,
    left_side: bool,
    form: &SideForm,
    scale: Option<&BigRational>,
) -> Result<(f64, Option<BigRational>)> {
    let algebra = if left_side { &module.left.algebra } else { &module.right.algebra };
    let mut value = 1.0f64;
    let mut exact_sq = Some(BigRational::one());
    let mut total_dim = 0u64;
    for (bi, b) in algebra.blocks().iter().enumerate() {
        // Q-dimension of this side's lattice in block bi.
        let mut dim_bi = 0u64;
        for ((i, j, kind), m) in &module.components {
            let this = if left_side { *i == bi } else { *j == bi };
            if !this {
                continue;
            }
            dim_bi += module.component_dim(&(*i, *j, *kind), m)
                / if left_side {
                    1
                } else {
                    1
                };
        }
        if dim_bi == 0 {
            continue;
        }
        total_dim += dim_bi;
        let entries = &form.entries[bi];
        if entries.is_empty() {
            continue;
        }
        let rho = &entries[0].value;
        let g = weighted_field_gram(&b.field, b.involution, rho)?;
        let lat = QuadLattice::from_gram(g).map_err(|_| {
            Error::NotPositiveDefinite("weighted trace form is not positive definite".into())
        })?;
        let vol = k_volume(&lat, true)?;
        let copies = dim_bi / b.field.degree() as u64;
        value *= vol.value.powi(copies as i32);
        exact_sq = exact_sq.map(|acc| {
            let mut p = acc;
            for _ in 0..copies {
                p *= &vol.value_squared;
            }
            p
        });
    }
    if let Some(s) = scale {
        let sf = rat::to_f64(s).abs();
        value *= sf.powi(total_dim as i32);
        exact_sq = exact_sq.map(|acc| {
            let mut p = acc;
            let s2 = s * s;
            for _ in 0..total_dim {
                p *= &s2;
            }
            p
        });
    }
    Ok((value, exact_sq))
}

/// Volume of the order itself under the standard form (beta = 1).
fn order_volume(algebra: &Arc<SemisimpleAlgebra>) -> Result<(f64, Option<BigRational>)> {
    let mut value = 1.0f64;
    let mut exact_sq = Some(BigRational::one());
    for b in algebra.blocks() {
        let one = b.field.one();
        let g = weighted_field_gram(&b.field, b.involution, &one)?;
        let lat = QuadLattice::from_gram(g)?;
        let vol = k_volume(&lat, true)?;
        let copies = (b.n * b.n) as u64;
        value *= vol.value.powi(copies as i32);
        exact_sq = exact_sq.map(|acc| {
            let mut p = acc;
            for _ in 0..copies {
                p *= &vol.value_squared;
            }
            p
        });
    }
    Ok((value, exact_sq))
}

/// The non-archimedean component of the height at a prime, for rational
/// form data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonArchKind {
    /// Ratio of p-adic absolute values of the form-value products.
    Volume,
    /// Ratio of the per-side maxima, the rank flavor.
    Rank,
}

pub fn nonarch_height_component(
    module: &HermitianBimodule,
    p: &BigInt,
    kind: NonArchKind,
) -> Result<BigRational> {
    let (lf, rf) = match (&module.left_form, &module.right_form) {
        (Some(l), Some(r)) => (l, r),
        _ => return Err(Error::Unsupported("no hermitian data".into())),
    };
    let rationals = |form: &SideForm| -> Result<Vec<(BigRational, u64)>> {
        let mut out = Vec::new();
        for entries in &form.entries {
            for e in entries {
                let q = e.value.as_rational().ok_or_else(|| {
                    Error::Unsupported(
                        "non-archimedean components need rational form values".into(),
                    )
                })?;
                out.push((q, e.count));
            }
        }
        Ok(out)
    };
    let left = rationals(lf)?;
    let right = rationals(rf)?;
    if left.is_empty() || right.is_empty() {
        return Err(Error::ZeroModule("no form values".into()));
    }
    match kind {
        NonArchKind::Volume => {
            let prod = |vals: &[(BigRational, u64)]| -> BigRational {
                let mut acc = BigRational::one();
                for (v, c) in vals {
                    for _ in 0..*c {
                        acc *= v;
                    }
                }
                acc
            };
            Ok(padic_abs(&prod(&right), p) / padic_abs(&prod(&left), p))
        }
        NonArchKind::Rank => {
            let maxv = |vals: &[(BigRational, u64)]| -> BigRational {
                vals.iter().map(|(v, _)| padic_abs(v, p)).max().expect("nonempty")
            };
            Ok(maxv(&right) / maxv(&left))
        }
    }
}

/// A 2-morphism between bimodules of identical shape: an integer matrix on
/// the canonical left family, validated to preserve both hermitian forms on
/// the stored data.
#[derive(Debug, Clone)]
pub struct TwoMorphism {
    pub source: HermitianBimodule,
    pub target: HermitianBimodule,
    /// Per left block, the integer matrix on that block's canonical family.
    pub matrices: Vec<Vec<Vec<BigInt>>>,
    pub validated: bool,
}

/// Validate and build a 2-morphism. Both bimodules must have the same
/// algebras and multiplicity data; the matrix must satisfy
/// `U^T diag(rho_target) U = diag(rho_source)` blockwise on both sides'
/// canonical data (the implementable rendering of form preservation).
pub fn make_two_morphism(
    source: HermitianBimodule,
    target: HermitianBimodule,
    matrices: Vec<Vec<Vec<BigInt>>>,
) -> Result<TwoMorphism> {
    if source.left.as_ref() != target.left.as_ref()
        || source.right.as_ref() != target.right.as_ref()
    {
        return Err(Error::InvalidInput("2-morphism between different algebra pairs".into()));
    }
    if source.components != target.components {
        return Err(Error::InvalidInput(
            "2-morphism requires identical multiplicity data".into(),
        ));
    }
    let (sf, tf) = match (&source.left_form, &target.left_form) {
        (Some(s), Some(t)) => (s, t),
        _ => return Err(Error::Unsupported("2-morphisms need hermitian data".into())),
    };
    if matrices.len() != sf.entries.len() {
        return Err(Error::InvalidInput("one matrix per left block required".into()));
    }
    for (bi, u) in matrices.iter().enumerate() {
        let src_entries = &sf.entries[bi];
        let tgt_entries = &tf.entries[bi];
        let n: u64 = src_entries.iter().map(|e| e.count).sum();
        let nt: u64 = tgt_entries.iter().map(|e| e.count).sum();
        if n != nt || u.len() != n as usize || u.iter().any(|row| row.len() != n as usize) {
            return Err(Error::InvalidInput("matrix size mismatch on a block".into()));
        }
        // Expand the (value, count) lists into per-vector diagonals.
        let expand = |entries: &Vec<FormEntry>| -> Vec<FieldElement> {
            let mut v = Vec::new();
            for e in entries {
                for _ in 0..e.count {
                    v.push(e.value.clone());
                }
            }
            v
        };
        let ds = expand(src_entries);
        let dt = expand(tgt_entries);
        let field = &source.left.algebra.blocks()[bi].field;
        let k = n as usize;
        // U^T diag(dt) U == diag(ds), exactly.
        for r in 0..k {
            for c in 0..k {
                let mut acc = field.zero();
                for t in 0..k {
                    if u[t][r].is_zero() || u[t][c].is_zero() {
                        continue;
                    }
                    let w = BigRational::from_integer(&u[t][r] * &u[t][c]);
                    acc = acc.add(&dt[t].scale(&w))?;
                }
                let expected = if r == c { ds[r].clone() } else { field.zero() };
                if acc != expected {
                    return Err(Error::InvalidInput(
                        "matrix does not preserve the hermitian form".into(),
                    ));
                }
            }
        }
    }
    Ok(TwoMorphism { source, target, matrices, validated: true })
}

/// Relative height of a 2-morphism under the chosen functional:
/// `H(target) / H(source)`.
pub fn relative_height(
    phi: &TwoMorphism,
    functional: HeightFunctional,
) -> Result<f64> {
    let hs = height_by(&phi.source, functional)?;
    let ht = height_by(&phi.target, functional)?;
    Ok(ht.value / hs.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qblock(n: usize) -> Arc<ArithmeticAlgebra> {
        ArithmeticAlgebra::make(vec![(n, NumberField::rationals())]).unwrap()
    }

    fn simple_bimodule(
        a: &Arc<ArithmeticAlgebra>,
        b: &Arc<ArithmeticAlgebra>,
        nm: (u64, u64),
        beta_a: AlgElement,
        beta_b: AlgElement,
    ) -> HermitianBimodule {
        make_hermitian_bimodule(
            Arc::clone(a),
            Arc::clone(b),
            vec![(0, 0, ComponentKind::TensorQ, nm.0, nm.1)],
            beta_a,
            beta_b,
        )
        .unwrap()
    }

    #[test]
    fn trivial_bimodule_over_q() {
        let q = qblock(1);
        let e = simple_bimodule(&q, &q, (1, 1), q.algebra.one(), q.algebra.one());
        assert_eq!(e.dim(), 1);
        let h = canonical_basis_height(&e, false, 0, 0).unwrap();
        assert_eq!(h.exact, Some(rat::q(1)));
    }

    #[test]
    fn beta_two_gives_height_four() {
        let q = qblock(1);
        let e = simple_bimodule(&q, &q, (1, 1), q.algebra.one(), q.algebra.scalar(&rat::q(2)));
        let h = canonical_basis_height(&e, false, 0, 0).unwrap();
        assert_eq!(h.exact, Some(rat::q(4)));
    }

    #[test]
    fn non_invertible_beta_rejected() {
        let q = qblock(1);
        let r = make_hermitian_bimodule(
            Arc::clone(&q),
            Arc::clone(&q),
            vec![(0, 0, ComponentKind::TensorQ, 1, 1)],
            q.algebra.zero(),
            q.algebra.one(),
        );
        assert!(matches!(r, Err(Error::NotInvertible(_))));
    }

    #[test]
    fn column_module_over_m2() {
        // E = Q^2 as (M2(Q), Q): component (0,0) with (N,M) = (1,1).
        let m2 = qblock(2);
        let q = qblock(1);
        let e = simple_bimodule(&m2, &q, (1, 1), m2.algebra.one(), q.algebra.one());
        assert_eq!(e.dim(), 2);
        assert_eq!(e.left_rank_multiplicities(), vec![1]);
        assert_eq!(e.right_rank_multiplicities(), vec![2]);
    }

    #[test]
    fn hs_height_of_m2_over_q() {
        // E = M2(Q) as (M2(Q), Q): r_A = 2, r_B = 4, height 2.
        let m2 = qblock(2);
        let q = qblock(1);
        let e = simple_bimodule(&m2, &q, (2, 1), m2.algebra.one(), q.algebra.one());
        assert_eq!(e.dim(), 4);
        let h = hs_height(&e).unwrap();
        assert_eq!(h.exact, Some(rat::q(2)));

        // E = A over (A, A): height 1.
        let unit = unit_bimodule(&m2).unwrap();
        assert_eq!(hs_height(&unit).unwrap().exact, Some(rat::q(1)));
    }

    #[test]
    fn unit_is_tensor_identity() {
        let m2 = qblock(2);
        let q = qblock(1);
        let unit = unit_bimodule(&m2).unwrap();
        let e = simple_bimodule(&m2, &q, (2, 1), m2.algebra.one(), q.algebra.one());
        let prod = tensor_bimodules(&unit, &e).unwrap();
        assert_eq!(prod.iso_key(), e.iso_key());
        assert_eq!(prod.dim(), e.dim());
        // Heights agree as well.
        let h1 = canonical_basis_height(&e, false, 0, 0).unwrap();
        let h2 = canonical_basis_height(&prod, false, 0, 0).unwrap();
        assert_eq!(h1.exact, h2.exact);
    }

    #[test]
    fn tensor_of_morita_pair_collapses() {
        // (Q^2 as Q-M2(Q)) tensor (Q^2 as M2(Q)-Q) has dimension 1.
        let q = qblock(1);
        let m2 = qblock(2);
        let rows = simple_bimodule(&q, &m2, (1, 1), q.algebra.one(), m2.algebra.one());
        let cols = simple_bimodule(&m2, &q, (1, 1), m2.algebra.one(), q.algebra.one());
        let prod = tensor_bimodules(&rows, &cols).unwrap();
        assert_eq!(prod.dim(), 1);
        let oracle = concrete_tensor_oracle(&rows, &cols).unwrap();
        assert_eq!(oracle, 1);
    }

    #[test]
    fn oracle_matches_small_tensors() {
        let q = qblock(1);
        let m2 = qblock(2);
        let cases: Vec<(HermitianBimodule, HermitianBimodule)> = vec![
            (
                simple_bimodule(&m2, &q, (2, 1), m2.algebra.one(), q.algebra.one()),
                simple_bimodule(&q, &m2, (2, 1), q.algebra.one(), m2.algebra.one()),
            ),
            (
                simple_bimodule(&q, &q, (2, 1), q.algebra.one(), q.algebra.one()),
                simple_bimodule(&q, &q, (1, 3), q.algebra.one(), q.algebra.one()),
            ),
            (
                unit_bimodule(&m2).unwrap(),
                simple_bimodule(&m2, &q, (1, 1), m2.algebra.one(), q.algebra.one()),
            ),
        ];
        for (e, f) in cases {
            let fast = tensor_bimodules(&e, &f).unwrap().dim();
            let slow = concrete_tensor_oracle(&e, &f).unwrap();
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn oracle_with_quadratic_block() {
        let k = NumberField::quadratic(2).unwrap();
        let aq = ArithmeticAlgebra::make(vec![(1, Arc::clone(&k))]).unwrap();
        // Balanced regular bimodule: dim = d = 2.
        let unit = unit_bimodule(&aq).unwrap();
        assert_eq!(unit.dim(), 2);
        let prod = tensor_bimodules(&unit, &unit).unwrap();
        assert_eq!(prod.dim(), 2);
        assert_eq!(concrete_tensor_oracle(&unit, &unit).unwrap(), 2);

        // Generic tensor-Q self-pairing: dim 4, and E ⊗_B E has middle
        // contraction with the d' factor.
        let e = make_hermitian_bimodule(
            Arc::clone(&aq),
            Arc::clone(&aq),
            vec![(0, 0, ComponentKind::TensorQ, 1, 1)],
            aq.algebra.one(),
            aq.algebra.one(),
        )
        .unwrap();
        assert_eq!(e.dim(), 4);
        let fast = tensor_bimodules(&e, &e).unwrap().dim();
        let slow = concrete_tensor_oracle(&e, &e).unwrap();
        assert_eq!(fast, slow);
        assert_eq!(fast, 8); // 1*1*1*1*d' = 2 copies of the dim-4 shape / ...
    }

    #[test]
    fn hkz_membership() {
        let m2 = qblock(2);
        let unit = unit_bimodule(&m2).unwrap();
        let rep = check_hkz(&unit, None);
        assert!(rep.is_member, "{:?}", rep.reasons);

        // Morita column module: not free on the left.
        let q = qblock(1);
        let cols = simple_bimodule(&m2, &q, (1, 1), m2.algebra.one(), q.algebra.one());
        let rep = check_hkz(&cols, None);
        assert!(!rep.is_member);

        // Mismatched centers.
        let ki = ArithmeticAlgebra::make(vec![(1, NumberField::quadratic(-1).unwrap())]).unwrap();
        let k2 = ArithmeticAlgebra::make(vec![(1, NumberField::quadratic(2).unwrap())]).unwrap();
        assert!(center_matching(&ki.algebra, &k2.algebra).is_none());
    }

    #[test]
    fn canonical_height_multiplicative_on_twisted_regulars() {
        let m2 = qblock(2);
        // Twisted regular bimodules over A = M2(Q): beta scalar.
        let twist = |s: i64, t: i64| -> HermitianBimodule {
            make_hermitian_bimodule(
                Arc::clone(&m2),
                Arc::clone(&m2),
                vec![(0, 0, ComponentKind::Balanced, 1, 1)],
                m2.algebra.scalar(&rat::q(s)),
                m2.algebra.scalar(&rat::q(t)),
            )
            .unwrap()
        };
        let e = twist(1, 2);
        let f = twist(3, 5);
        let he = canonical_basis_height(&e, false, 0, 0).unwrap().exact.unwrap();
        let hf = canonical_basis_height(&f, false, 0, 0).unwrap().exact.unwrap();
        let prod = tensor_bimodules(&e, &f).unwrap();
        let hp = canonical_basis_height(&prod, false, 0, 0).unwrap().exact.unwrap();
        assert_eq!(hp, he * hf);
    }

    #[test]
    fn hs_height_multiplicative_single_block_middle() {
        let q = qblock(1);
        let m2 = qblock(2);
        let m3 = qblock(3);
        let e = simple_bimodule(&m2, &q, (2, 3), m2.algebra.one(), q.algebra.one());
        let f = simple_bimodule(&q, &m3, (2, 1), q.algebra.one(), m3.algebra.one());
        let he = hs_height(&e).unwrap().exact.unwrap();
        let hf = hs_height(&f).unwrap().exact.unwrap();
        let hp = hs_height(&tensor_bimodules(&e, &f).unwrap()).unwrap().exact.unwrap();
        assert_eq!(hp, he * hf);
    }

    #[test]
    fn jones_indices_examples() {
        // Imprimitivity module Q^n over (M_n(Q), Q).
        for n in 1..=4 {
            let mn = qblock(n);
            let q = qblock(1);
            let e = simple_bimodule(&mn, &q, (1, 1), mn.algebra.one(), q.algebra.one());
            let rep = jones_index(&e).unwrap();
            assert_eq!(rep.left_index, vec![rat::q(1)]);
            assert_eq!(rep.right_index, vec![rat::q(1)]);
            assert_eq!(rep.height, Some(rat::q(1)));
        }
        // M2(Q) as (M2(Q), Q) with the trace form on the right.
        let m2 = qblock(2);
        let q = qblock(1);
        let e = simple_bimodule(&m2, &q, (2, 1), m2.algebra.one(), q.algebra.one());
        let rep = jones_index(&e).unwrap();
        assert_eq!(rep.left_index, vec![rat::q(2)]);
        assert_eq!(rep.right_index, vec![rat::q(2)]);
    }

    #[test]
    fn jones_index_multiplicative_over_tensor() {
        let q = qblock(1);
        let m2 = qblock(2);
        let e = simple_bimodule(&m2, &q, (1, 1), m2.algebra.one(), q.algebra.one());
        let f = simple_bimodule(&q, &m2, (1, 1), q.algebra.one(), m2.algebra.one());
        let ie = jones_index(&e).unwrap();
        let if_ = jones_index(&f).unwrap();
        let prod = tensor_bimodules(&e, &f).unwrap();
        let ip = jones_index(&prod).unwrap();
        assert_eq!(ip.left_index[0], &ie.left_index[0] * &if_.left_index[0]);
        assert_eq!(ip.right_index[0], &ie.right_index[0] * &if_.right_index[0]);
    }

    #[test]
    fn lattice_volume_heights() {
        // E = O_A = Z over (Q, Q): H = 1.
        let q = qblock(1);
        let e = simple_bimodule(&q, &q, (1, 1), q.algebra.one(), q.algebra.one());
        let rep = lattice_volume_height(&e, None, None).unwrap();
        assert!((rep.plain - 1.0).abs() < 1e-12);
        assert!((rep.normalized - 1.0).abs() < 1e-12);

        // Right lattice 2Z: right volume 2, H = 2.
        let rep = lattice_volume_height(&e, None, Some(&rat::q(2))).unwrap();
        assert!((rep.plain - 2.0).abs() < 1e-12);
        assert_eq!(rep.plain_exact_square, Some(rat::q(4)));
    }

    #[test]
    fn nonarch_components() {
        let q = qblock(1);
        // Unit betas: H_v = 1 at every p.
        let e = simple_bimodule(&q, &q, (1, 1), q.algebra.one(), q.algebra.one());
        for p in [2i64, 3, 5, 7] {
            let v = nonarch_height_component(&e, &rat::int(p), NonArchKind::Volume).unwrap();
            assert_eq!(v, rat::q(1));
        }
        // beta_B = 2: numerator |4|_2 = 1/4.
        let e = simple_bimodule(&q, &q, (1, 1), q.algebra.one(), q.algebra.scalar(&rat::q(2)));
        let v = nonarch_height_component(&e, &rat::int(2), NonArchKind::Volume).unwrap();
        assert_eq!(v, rat::qq(1, 4));
        let v = nonarch_height_component(&e, &rat::int(3), NonArchKind::Volume).unwrap();
        assert_eq!(v, rat::q(1));
    }

    #[test]
    fn rank_kind_collapses_against_archimedean() {
        // For rational form data the product over all finite places of the
        // rank-kind component is the reciprocal of the archimedean ratio.
        let q = qblock(1);
        let e = simple_bimodule(
            &q,
            &q,
            (1, 1),
            q.algebra.scalar(&rat::q(3)),
            q.algebra.scalar(&rat::q(10)),
        );
        // form values:左 9, right 100.
        let mut finite = rat::q(1);
        for p in [2i64, 3, 5, 7, 11] {
            finite *= nonarch_height_component(&e, &rat::int(p), NonArchKind::Rank).unwrap();
        }
        let arch = rat::q(100) / rat::q(9);
        assert_eq!(finite * arch, rat::q(1));
    }

    #[test]
    fn two_morphisms_and_relative_heights() {
        let q = qblock(1);
        let e = simple_bimodule(&q, &q, (1, 1), q.algebra.one(), q.algebra.scalar(&rat::q(2)));
        // Identity 2-morphism.
        let id = make_two_morphism(
            e.clone(),
            e.clone(),
            vec![vec![vec![rat::int(1)]]],
        )
        .unwrap();
        assert!(id.validated);
        let r = relative_height(&id, HeightFunctional::Canonical).unwrap();
        assert!((r - 1.0).abs() < 1e-12);

        // A form-violating matrix is rejected.
        let bad = make_two_morphism(e.clone(), e.clone(), vec![vec![vec![rat::int(2)]]]);
        assert!(bad.is_err());
    }

    #[test]
    fn tensor_associativity_on_multiplicity_data() {
        let q = qblock(1);
        let m2 = qblock(2);
        let e = simple_bimodule(&q, &m2, (1, 2), q.algebra.one(), m2.algebra.one());
        let f = simple_bimodule(&m2, &m2, (1, 1), m2.algebra.one(), m2.algebra.one());
        let g = simple_bimodule(&m2, &q, (2, 1), m2.algebra.one(), q.algebra.one());
        let left = tensor_bimodules(&tensor_bimodules(&e, &f).unwrap(), &g).unwrap();
        let right = tensor_bimodules(&e, &tensor_bimodules(&f, &g).unwrap()).unwrap();
        assert_eq!(left.iso_key(), right.iso_key());
        assert_eq!(left.dim(), right.dim());
    }

    #[test]
    fn zero_module_errors() {
        let q = qblock(1);
        let zero = make_hermitian_bimodule(
            Arc::clone(&q),
            Arc::clone(&q),
            vec![],
            q.algebra.one(),
            q.algebra.one(),
        )
        .unwrap();
        assert!(matches!(hs_height(&zero), Err(Error::ZeroModule(_))));
        assert!(matches!(jones_index(&zero), Err(Error::ZeroModule(_))));
    }
}
