//! Positive definite functions: the exponential-length family `α^{l_S}`,
//! the Haagerup witnesses `e^{-l_S/n}`, explicit tables, Gram-matrix PSD
//! checks and the truncated GNS construction.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::TermRecord;
use crate::error::{Error, Result};
use crate::group::{GroupElem, Word};
use crate::model::{GroupoidElement, GroupoidModel, UnitId};

pub const DEFAULT_PSD_TOL: f64 = 1e-9;
pub const DEFAULT_NULL_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-12;

/// Explicit kernel values on a ball; zero inside the ball where unlisted.
#[derive(Clone, Debug)]
pub struct TableKernel {
    radius: usize,
    values: BTreeMap<GroupoidElement, Complex64>,
}

impl TableKernel {
    /// The radius is the largest length among the entries. Entries must
    /// satisfy `F(x⁻¹) = conj F(x)`.
    pub fn new(model: &GroupoidModel, entries: Vec<(GroupoidElement, Complex64)>) -> Result<Self> {
        let mut values = BTreeMap::new();
        let mut radius = 0;
        for (g, v) in entries {
            radius = radius.max(model.length(&g));
            values.insert(g, v);
        }
        for (g, v) in &values {
            let back = values.get(&model.inverse(g)).copied().unwrap_or_default();
            if (back - v.conj()).norm() > HERMITIAN_TOL {
                return Err(Error::NotHermitian(format!("({}, {:?})", g.range(), model.label(g))));
            }
        }
        Ok(TableKernel { radius, values })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }
}

#[derive(Clone, Debug)]
pub enum Kernel {
    /// `φ_α(x) = α^{l_S(x)}`, α ∈ (0, 1].
    ExpLength(f64),
    /// `F_n(x) = e^{-l_S(x)/n}`.
    HaagerupWitness(u32),
    Table(TableKernel),
}

/// JSON descriptor: `{"exp_length": 0.65}`, `{"haagerup": 4}` or `{"table": [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum KernelSpec {
    ExpLength(f64),
    Haagerup(u32),
    Table(Vec<TermRecord>),
}

impl Kernel {
    pub fn exp_length(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("α = {alpha} must lie in (0, 1]")));
        }
        Ok(Kernel::ExpLength(alpha))
    }

    pub fn haagerup(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("Haagerup witness index must be positive".into()));
        }
        Ok(Kernel::HaagerupWitness(n))
    }

    pub fn from_spec(model: &GroupoidModel, spec: &KernelSpec) -> Result<Self> {
        match spec {
            KernelSpec::ExpLength(a) => Kernel::exp_length(*a),
            KernelSpec::Haagerup(n) => Kernel::haagerup(*n),
            KernelSpec::Table(records) => {
                let mut entries = Vec::with_capacity(records.len());
                for r in records {
                    entries.push((model.parse_element(UnitId(r.unit), &r.word)?, Complex64::new(r.re, r.im)));
                }
                Ok(Kernel::Table(TableKernel::new(model, entries)?))
            }
        }
    }

    /// Value as a function of length, for the length-radial kernels.
    pub fn radial_value(&self, length: usize) -> Option<f64> {
        match self {
            Kernel::ExpLength(a) => Some(a.powi(length as i32)),
            Kernel::HaagerupWitness(n) => Some((-(length as f64) / *n as f64).exp()),
            Kernel::Table(_) => None,
        }
    }

    pub fn eval(&self, model: &GroupoidModel, g: &GroupoidElement) -> Result<Complex64> {
        let len = model.length(g);
        match self {
            Kernel::Table(t) => {
                if len > t.radius {
                    return Err(Error::TableOutOfBall { length: len, radius: t.radius });
                }
                Ok(t.values.get(g).copied().unwrap_or_default())
            }
            _ => Ok(Complex64::new(self.radial_value(len).unwrap(), 0.0)),
        }
    }
}

fn common_range(tuple: &[GroupoidElement]) -> Result<Option<UnitId>> {
    let Some(first) = tuple.first() else { return Ok(None) };
    let u = first.range();
    for g in tuple {
        if g.range() != u {
            return Err(Error::RangeMismatch { left: u.0, right: g.range().0 });
        }
    }
    Ok(Some(u))
}

/// `G_{ij} = F(x_i⁻¹ x_j)` for a tuple in one range fiber.
pub fn gram_matrix(kernel: &Kernel, model: &GroupoidModel, tuple: &[GroupoidElement]) -> Result<DMatrix<Complex64>> {
    common_range(tuple)?;
    let n = tuple.len();
    let inverses: Vec<_> = tuple.iter().map(|g| model.inverse(g)).collect();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = kernel.eval(model, &model.compose_unchecked(&inverses[i], &tuple[j]))?;
        }
    }
    Ok(m)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct PsdReport {
    pub size: usize,
    pub min_eig: f64,
    pub pass: bool,
}

/// Passes iff the smallest Gram eigenvalue is at least `-tol`.
pub fn psd_check(kernel: &Kernel, model: &GroupoidModel, tuple: &[GroupoidElement], tol: f64) -> Result<PsdReport> {
    let gram = gram_matrix(kernel, model, tuple)?;
    Ok(psd_of(&gram, tol))
}

fn psd_of(gram: &DMatrix<Complex64>, tol: f64) -> PsdReport {
    let ev = hermitian_eigenvalues(gram);
    let min_eig = ev.first().copied().unwrap_or(0.0);
    PsdReport {
        size: gram.nrows(),
        min_eig,
        pass: min_eig >= -tol,
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct WitnessDeviation {
    pub n: u32,
    pub k: usize,
    pub sup_deviation: f64,
    pub bound: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct WitnessSupport {
    pub n: u32,
    pub eps: f64,
    pub radius: usize,
    /// `F_n` at the first length outside the ball; `None` when no such arrow exists.
    pub value_outside: Option<f64>,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct HaagerupReport {
    pub units_normalized: bool,
    pub deviations: Vec<WitnessDeviation>,
    pub deviation_decreasing_in_n: bool,
    pub supports: Vec<WitnessSupport>,
    pub pass: bool,
}

/// Smallest integer radius with `e^{-t/n} < ε` for every length `t` beyond it.
pub fn witness_support_radius(n: u32, eps: f64) -> usize {
    (n as f64 * (1.0 / eps).ln()).ceil() as usize
}

/// Checks the three Haagerup-witness conditions for `F_n = e^{-l_S/n}`:
/// normalization on units, uniform convergence to 1 on balls, and decay
/// outside a ball of radius `⌈n ln(1/ε)⌉`.
pub fn haagerup_witness_check(model: &GroupoidModel, n_list: &[u32], k_list: &[usize], eps_list: &[f64]) -> Result<HaagerupReport> {
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let kernels = ns.iter().map(|&n| Kernel::haagerup(n)).collect::<Result<Vec<_>>>()?;

    let mut units_normalized = true;
    for k in &kernels {
        for u in model.unit_ids() {
            if k.eval(model, &model.unit(u))? != Complex64::new(1.0, 0.0) {
                units_normalized = false;
            }
        }
    }

    let mut deviations = Vec::new();
    let mut decreasing = true;
    for &k in k_list {
        let mut ball = Vec::new();
        for u in model.unit_ids() {
            ball.extend(model.enumerate_ball(u, k)?);
        }
        let mut prev = f64::INFINITY;
        for (kern, &n) in kernels.iter().zip(&ns) {
            let mut sup: f64 = 0.0;
            for g in &ball {
                sup = sup.max((Complex64::new(1.0, 0.0) - kern.eval(model, g)?).norm());
            }
            let bound = 1.0 - (-(k as f64) / n as f64).exp();
            if sup > prev {
                decreasing = false;
            }
            prev = sup;
            deviations.push(WitnessDeviation {
                n,
                k,
                sup_deviation: sup,
                bound,
                ok: sup <= bound,
            });
        }
    }

    let mut supports = Vec::new();
    for &eps in eps_list {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!("ε = {eps} must lie in (0, 1)")));
        }
        for (kern, &n) in kernels.iter().zip(&ns) {
            let radius = witness_support_radius(n, eps);
            let outside = first_arrow_of_length(model, radius + 1);
            let value_outside = match outside {
                Some(g) => Some(kern.eval(model, &g)?.re),
                None => None,
            };
            supports.push(WitnessSupport {
                n,
                eps,
                radius,
                value_outside,
                ok: value_outside.map_or(true, |v| v < eps),
            });
        }
    }

    let pass = units_normalized
        && decreasing
        && deviations.iter().all(|d| d.ok)
        && supports.iter().all(|s| s.ok);
    Ok(HaagerupReport {
        units_normalized,
        deviations,
        deviation_decreasing_in_n: decreasing,
        supports,
        pass,
    })
}

fn first_arrow_of_length(model: &GroupoidModel, len: usize) -> Option<GroupoidElement> {
    let u = UnitId(0);
    match model.backend() {
        crate::group::GroupBackend::Free { .. } => Some(model.element(u, GroupElem::Word(Word::from_letters(std::iter::repeat(0).take(len))))),
        crate::group::GroupBackend::Finite(g) => g.sphere(len).first().map(|&x| model.element(u, GroupElem::Id(x))),
    }
}

/// Truncated GNS data at one unit: the delta basis of `B_k ∩ G^u` and the
/// Gram matrix `⟨δ_x, δ_y⟩ = F(y⁻¹x)`.
#[derive(Clone, Debug)]
pub struct GnsData {
    pub unit: UnitId,
    pub radius: usize,
    pub basis: Vec<GroupoidElement>,
    pub gram: DMatrix<Complex64>,
    pub eigenvalues: Vec<f64>,
    pub null_tol: f64,
    /// Number of eigenvalues below `null_tol`: null directions of the pre-inner product.
    pub null_dimension: usize,
    index: HashMap<GroupoidElement, usize>,
}

impl GnsData {
    pub fn quotient_dimension(&self) -> usize {
        self.basis.len() - self.null_dimension
    }

    pub fn min_eig(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn index_of(&self, g: &GroupoidElement) -> Option<usize> {
        self.index.get(g).copied()
    }

    /// `⟨f, g⟩_u = Σ f(x) conj g(y) F(y⁻¹x)` for coordinate vectors.
    pub fn inner(&self, f: &[Complex64], g: &[Complex64]) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        for (i, fi) in f.iter().enumerate() {
            if *fi == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (j, gj) in g.iter().enumerate() {
                total += fi * gj.conj() * self.gram[(i, j)];
            }
        }
        total
    }
}

pub fn gns_build(kernel: &Kernel, model: &GroupoidModel, u: UnitId, k: usize, null_tol: f64) -> Result<GnsData> {
    gns_build_with_tol(kernel, model, u, k, null_tol, DEFAULT_PSD_TOL)
}

pub fn gns_build_with_tol(kernel: &Kernel, model: &GroupoidModel, u: UnitId, k: usize, null_tol: f64, psd_tol: f64) -> Result<GnsData> {
    let basis = model.enumerate_ball(u, k)?;
    let n = basis.len();
    let inverses: Vec<_> = basis.iter().map(|g| model.inverse(g)).collect();
    let mut gram = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            gram[(i, j)] = kernel.eval(model, &model.compose_unchecked(&inverses[j], &basis[i]))?;
        }
    }
    let eigenvalues = hermitian_eigenvalues(&gram);
    let min_eig = eigenvalues.first().copied().unwrap_or(0.0);
    if min_eig < -psd_tol {
        return Err(Error::NotPositive { min_eig, tol: psd_tol });
    }
    let null_dimension = eigenvalues.iter().filter(|&&e| e < null_tol).count();
    let index = basis.iter().enumerate().map(|(i, g)| (g.clone(), i)).collect();
    Ok(GnsData {
        unit: u,
        radius: k,
        basis,
        gram,
        eigenvalues,
        null_tol,
        null_dimension,
        index,
    })
}

/// Matrix of `π_F(x): δ_a ↦ δ_{xa}` from `B_k ∩ G^{s(x)}` into
/// `B_{k+|x|} ∩ G^{r(x)}`, with the GNS data of both fibers.
#[derive(Clone, Debug)]
pub struct RepMatrix {
    pub domain: GnsData,
    pub codomain: GnsData,
    /// Rows index the codomain basis, columns the domain basis.
    pub matrix: DMatrix<Complex64>,
}

impl RepMatrix {
    /// `max |M† G_cod M − G_dom|`; zero up to rounding when `π_F(x)` is isometric.
    pub fn isometry_deviation(&self) -> f64 {
        let pulled = self.matrix.adjoint() * &self.codomain.gram * &self.matrix;
        (pulled - &self.domain.gram).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn gns_rep_matrix(kernel: &Kernel, model: &GroupoidModel, x: &GroupoidElement, k: usize) -> Result<RepMatrix> {
    let len = model.length(x);
    let domain = gns_build(kernel, model, model.source(x), k, DEFAULT_NULL_TOL)?;
    let codomain = gns_build(kernel, model, x.range(), k + len, DEFAULT_NULL_TOL)?;
    let mut matrix = DMatrix::zeros(codomain.basis.len(), domain.basis.len());
    for (j, a) in domain.basis.iter().enumerate() {
        let xa = model.compose(x, a)?;
        let i = codomain
            .index_of(&xa)
            .expect("xa lies in the enlarged codomain ball");
        matrix[(i, j)] = Complex64::new(1.0, 0.0);
    }
    Ok(RepMatrix { domain, codomain, matrix })
}

/// Recovers `F(x) = ⟨π_F(x) ξ(s(x)), ξ(r(x))⟩` with `ξ(u) = δ_u`.
pub fn matrix_coeff_recovery(kernel: &Kernel, model: &GroupoidModel, x: &GroupoidElement, k: usize) -> Result<Complex64> {
    let len = model.length(x);
    if len > k {
        return Err(Error::Precondition(format!("arrow of length {len} lies outside the truncation radius {k}")));
    }
    let rep = gns_rep_matrix(kernel, model, x, k)?;
    let src = rep.domain.index_of(&model.unit(model.source(x))).unwrap();
    let dst = rep.codomain.index_of(&model.unit(x.range())).unwrap();
    let image: Vec<Complex64> = rep.matrix.column(src).iter().copied().collect();
    let mut target = vec![Complex64::new(0.0, 0.0); rep.codomain.basis.len()];
    target[dst] = Complex64::new(1.0, 0.0);
    Ok(rep.codomain.inner(&image, &target))
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ProductReport {
    pub tuples: Vec<PsdReport>,
    /// For two exponential-length kernels: max relative gap between
    /// `φ_α φ_β` and `φ_{αβ}` over all tuple differences.
    pub exp_identity_rel_err: Option<f64>,
    pub pass: bool,
}

/// PSD check of the pointwise product `F_1 F_2` (Schur product of Gram matrices).
pub fn pointwise_product_check(
    k1: &Kernel,
    k2: &Kernel,
    model: &GroupoidModel,
    tuples: &[Vec<GroupoidElement>],
    tol: f64,
) -> Result<ProductReport> {
    let combined = match (k1, k2) {
        (Kernel::ExpLength(a), Kernel::ExpLength(b)) => Some(Kernel::ExpLength(a * b)),
        _ => None,
    };
    let mut reports = Vec::with_capacity(tuples.len());
    let mut rel_err: f64 = 0.0;
    for tuple in tuples {
        let g1 = gram_matrix(k1, model, tuple)?;
        let g2 = gram_matrix(k2, model, tuple)?;
        let prod = g1.component_mul(&g2);
        if let Some(c) = &combined {
            let gc = gram_matrix(c, model, tuple)?;
            for (p, q) in prod.iter().zip(gc.iter()) {
                rel_err = rel_err.max((p - q).norm() / q.norm().max(f64::MIN_POSITIVE));
            }
        }
        reports.push(psd_of(&prod, tol));
    }
    let exp_identity_rel_err = combined.map(|_| rel_err);
    let pass = reports.iter().all(|r| r.pass) && exp_identity_rel_err.map_or(true, |e| e <= 1e-15);
    Ok(ProductReport {
        tuples: reports,
        exp_identity_rel_err,
        pass,
    })
}

/// Kernel bundled with a shared model, for callers that keep both together.
#[derive(Clone, Debug)]
pub struct BoundKernel {
    pub model: Arc<GroupoidModel>,
    pub kernel: Kernel,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2() -> GroupoidModel {
        GroupoidModel::free_group(2).unwrap()
    }

    #[test]
    fn eval_examples() {
        let m = f2();
        let u = UnitId(0);
        let half = Kernel::exp_length(0.5).unwrap();
        assert_eq!(half.eval(&m, &m.unit(u)).unwrap().re, 1.0);
        assert_eq!(half.eval(&m, &m.parse_element(u, "a b a").unwrap()).unwrap().re, 0.125);
        let h2 = Kernel::haagerup(2).unwrap();
        let v = h2.eval(&m, &m.parse_element(u, "a b").unwrap()).unwrap().re;
        assert!((v - 0.36787944117144233).abs() < 1e-15);
        assert!(Kernel::exp_length(1.5).is_err());
        assert!(Kernel::haagerup(0).is_err());
    }

    #[test]
    fn table_kernel_checks() {
        let m = f2();
        let u = UnitId(0);
        let a = m.parse_element(u, "a").unwrap();
        let ai = m.inverse(&a);
        let t = TableKernel::new(
            &m,
            vec![
                (m.unit(u), Complex64::new(1.0, 0.0)),
                (a.clone(), Complex64::new(0.2, 0.3)),
                (ai.clone(), Complex64::new(0.2, -0.3)),
            ],
        )
        .unwrap();
        let k = Kernel::Table(t);
        assert_eq!(k.eval(&m, &m.parse_element(u, "b").unwrap()).unwrap(), Complex64::new(0.0, 0.0));
        assert!(matches!(
            k.eval(&m, &m.parse_element(u, "a b").unwrap()),
            Err(Error::TableOutOfBall { length: 2, radius: 1 })
        ));
        let bad = TableKernel::new(&m, vec![(a, Complex64::new(0.2, 0.3)), (ai, Complex64::new(0.2, 0.3))]);
        assert!(matches!(bad, Err(Error::NotHermitian(_))));
    }

    #[test]
    fn psd_examples() {
        let m = f2();
        let u = UnitId(0);
        let ball = m.enumerate_ball(u, 2).unwrap();
        let ones = psd_check(&Kernel::exp_length(1.0).unwrap(), &m, &ball, DEFAULT_PSD_TOL).unwrap();
        assert!(ones.pass && ones.min_eig.abs() < 1e-9);
        let single = psd_check(&Kernel::exp_length(0.3).unwrap(), &m, &ball[3..4], DEFAULT_PSD_TOL).unwrap();
        assert_eq!(single.min_eig, 1.0);
        let r = psd_check(&Kernel::exp_length(0.6).unwrap(), &m, &ball, DEFAULT_PSD_TOL).unwrap();
        assert_eq!(r.size, 17);
        assert!(r.pass);
    }

    #[test]
    fn psd_rejects_mixed_ranges() {
        let m = GroupoidModel::random_free_action(2, 3, 5).unwrap();
        let t = vec![m.unit(UnitId(0)), m.unit(UnitId(1))];
        assert!(matches!(
            psd_check(&Kernel::exp_length(0.5).unwrap(), &m, &t, DEFAULT_PSD_TOL),
            Err(Error::RangeMismatch { .. })
        ));
    }

    #[test]
    fn non_positive_table_fails_gns() {
        let m = GroupoidModel::free_group(1).unwrap();
        let u = UnitId(0);
        let a = m.parse_element(u, "a").unwrap();
        let t = TableKernel::new(
            &m,
            vec![
                (m.unit(u), Complex64::new(1.0, 0.0)),
                (a.clone(), Complex64::new(2.0, 0.0)),
                (m.inverse(&a), Complex64::new(2.0, 0.0)),
                (m.parse_element(u, "a a").unwrap(), Complex64::new(0.0, 0.0)),
            ],
        )
        .unwrap();
        assert!(matches!(
            gns_build(&Kernel::Table(t), &m, u, 1, DEFAULT_NULL_TOL),
            Err(Error::NotPositive { .. })
        ));
    }

    #[test]
    fn haagerup_closed_forms() {
        assert_eq!(witness_support_radius(3, 0.01), 14);
        let m = f2();
        let r = haagerup_witness_check(&m, &[4], &[2], &[0.01]).unwrap();
        assert!((r.deviations[0].sup_deviation - 0.3934693402873666).abs() < 1e-15);
        let r = haagerup_witness_check(&m, &[1], &[0], &[0.1]).unwrap();
        assert_eq!(r.deviations[0].sup_deviation, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn gns_small_cases() {
        let m = f2();
        let u = UnitId(0);
        let k = Kernel::exp_length(0.4).unwrap();
        let g0 = gns_build(&k, &m, u, 0, DEFAULT_NULL_TOL).unwrap();
        assert_eq!(g0.gram.nrows(), 1);
        assert_eq!(g0.gram[(0, 0)].re, 1.0);
        let g1 = gns_build(&k, &m, u, 1, DEFAULT_NULL_TOL).unwrap();
        assert_eq!(g1.basis.len(), 5);
        let e = g1.index_of(&m.unit(u)).unwrap();
        let a = g1.index_of(&m.parse_element(u, "a").unwrap()).unwrap();
        let b = g1.index_of(&m.parse_element(u, "b").unwrap()).unwrap();
        assert_eq!(g1.gram[(e, a)].re, 0.4);
        assert!((g1.gram[(a, b)].re - 0.16).abs() < 1e-16);
        assert_eq!(g1.null_dimension, 0);
        let ones = gns_build(&Kernel::exp_length(1.0).unwrap(), &m, u, 1, DEFAULT_NULL_TOL).unwrap();
        assert_eq!(ones.quotient_dimension(), 1);
    }

    #[test]
    fn rep_matrix_unit_and_generator() {
        let m = f2();
        let u = UnitId(0);
        let k = Kernel::exp_length(0.7).unwrap();
        let id = gns_rep_matrix(&k, &m, &m.unit(u), 1).unwrap();
        assert_eq!(id.matrix, DMatrix::identity(5, 5));
        let a = m.parse_element(u, "a").unwrap();
        let rep = gns_rep_matrix(&k, &m, &a, 1).unwrap();
        let src = rep.domain.index_of(&m.unit(m.source(&a))).unwrap();
        let dst = rep.codomain.index_of(&a).unwrap();
        assert_eq!(rep.matrix[(dst, src)].re, 1.0);
        assert!(rep.isometry_deviation() < 1e-12);
    }

    #[test]
    fn recovery_examples() {
        let m = f2();
        let u = UnitId(0);
        let x = m.parse_element(u, "a B").unwrap();
        let half = Kernel::exp_length(0.5).unwrap();
        assert_eq!(matrix_coeff_recovery(&half, &m, &m.unit(u), 0).unwrap().re, 1.0);
        assert!((matrix_coeff_recovery(&half, &m, &x, 2).unwrap().re - 0.25).abs() < 1e-15);
        let h3 = Kernel::haagerup(3).unwrap();
        let a = m.parse_element(u, "a").unwrap();
        assert!((matrix_coeff_recovery(&h3, &m, &a, 1).unwrap().re - (-1.0f64 / 3.0).exp()).abs() < 1e-12);
        assert!(matches!(matrix_coeff_recovery(&half, &m, &x, 1), Err(Error::Precondition(_))));
    }

    #[test]
    fn pointwise_products() {
        let m = f2();
        let ball = m.enumerate_ball(UnitId(0), 2).unwrap();
        let r = pointwise_product_check(
            &Kernel::exp_length(0.5).unwrap(),
            &Kernel::exp_length(0.8).unwrap(),
            &m,
            &[ball.clone()],
            DEFAULT_PSD_TOL,
        )
        .unwrap();
        assert!(r.pass);
        assert!(r.exp_identity_rel_err.unwrap() <= 1e-15);
        let r = pointwise_product_check(
            &Kernel::exp_length(0.5).unwrap(),
            &Kernel::exp_length(1.0).unwrap(),
            &m,
            &[ball],
            DEFAULT_PSD_TOL,
        )
        .unwrap();
        assert_eq!(r.exp_identity_rel_err, Some(0.0));
    }
}
