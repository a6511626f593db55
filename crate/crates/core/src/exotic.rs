//! The state-extension dichotomy for `ω_{φ_α}` on `L^p_μ` completions:
//! extension criteria with certified geometric tails, threshold bands and the
//! two-leg non-injectivity certificate.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::GroupBackend;
use crate::metric::{hyperbolicity_delta, overlap_constant, GrowthReport};
use crate::model::{GroupoidModel, MeasureContext, UnitId};

pub const DEFAULT_BETA_GRID: [f64; 3] = [0.9, 0.99, 0.999];
pub const DEFAULT_K_FREE: usize = 64;
pub const DEFAULT_K_FINITE: usize = 16;
const CERTIFICATE_DELTA_RADIUS: usize = 3;

pub fn default_k(m: &GroupoidModel) -> usize {
    if m.backend().is_free() {
        DEFAULT_K_FREE
    } else {
        DEFAULT_K_FINITE
    }
}

/// `|W_k ∩ G^u|` for `k = 0..=k_max`, identical for every unit.
pub fn sphere_counts(m: &GroupoidModel, k_max: usize) -> Vec<f64> {
    (0..=k_max).map(|k| m.backend().sphere_size_f64(k)).collect()
}

/// `|φ_α χ_k|_p = (Σ_u μ(u) |W_k ∩ G^u| α^{kp})^{1/p} = α^k |W_k|^{1/p}`.
pub fn phi_chi_norm(m: &GroupoidModel, mu: &MeasureContext, alpha: f64, p: f64, k: usize) -> f64 {
    let count = m.backend().sphere_size_f64(k);
    let mass: f64 = mu.weights().iter().sum::<f64>() * count;
    alpha.powi(k as i32) * mass.powf(1.0 / p)
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
pub enum Verdict {
    Extends,
    FailsToExtend,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Cond2Point {
    pub k: usize,
    /// `|φ_α χ_k|_p / (k+1)`.
    pub value: f64,
}

/// Certified growing geometric lower bound on the condition-(2) sequence:
/// `a_{k+1}/a_k ≥ rho > 1` for all `k ≥ k0`.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Minorant {
    pub k0: usize,
    pub rho: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Cond4Point {
    pub beta: f64,
    /// Bound on the term ratio of `Σ_k |φ_{αβ} χ_k|_p^p` for `k ≥ 1`.
    pub ratio: f64,
    pub partial_sum: f64,
    /// Geometric majorant of the tail beyond `K`; `None` when not certified.
    pub tail_bound: Option<f64>,
    pub converges: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ExtensionReport {
    pub alpha: f64,
    pub p: f64,
    pub k_max: usize,
    pub rate_upper: f64,
    pub rate_lower: f64,
    pub rates_exact: bool,
    /// `rate_upper · α^p`, the majorant ratio that covers every `β < 1`.
    pub majorant_ratio: f64,
    pub cond2_trace: Vec<Cond2Point>,
    pub cond2_minorant: Option<Minorant>,
    pub cond3_partial: Vec<f64>,
    pub cond4_grid: Vec<Cond4Point>,
    pub verdict: Verdict,
}

struct Rates {
    upper: f64,
    lower: f64,
    exact: bool,
    finite: bool,
}

fn tail_rates(m: &GroupoidModel, counts: &[f64]) -> Rates {
    let k_max = counts.len() - 1;
    let ratios: Vec<f64> = (1..k_max)
        .map(|k| if counts[k] == 0.0 { 0.0 } else { counts[k + 1] / counts[k] })
        .collect();
    let upper = ratios.iter().copied().fold(0.0, f64::max);
    let lower = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    match m.backend() {
        GroupBackend::Free { .. } => Rates {
            upper,
            lower,
            exact: true,
            finite: false,
        },
        GroupBackend::Finite(_) => {
            let saturated = counts[k_max] == 0.0;
            Rates {
                upper,
                lower,
                exact: saturated,
                finite: saturated,
            }
        }
    }
}

/// Evaluates the growth, integrability and summability conditions for extending the state of `φ_α`, from exact sphere counts.
pub fn extension_criteria(
    m: &GroupoidModel,
    mu: &MeasureContext,
    alpha: f64,
    p: f64,
    k_max: usize,
    beta_grid: &[f64],
) -> Result<ExtensionReport> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p = {p} must be finite and at least 2")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("α = {alpha} must lie in (0, 1)")));
    }
    if k_max < 8 {
        return Err(Error::InvalidParameter(format!("K = {k_max} must be at least 8")));
    }
    if beta_grid.iter().any(|b| !(*b > 0.0 && *b < 1.0)) {
        return Err(Error::InvalidParameter("β grid must lie in (0, 1)".into()));
    }
    let counts = sphere_counts(m, k_max + 1);
    let rates = tail_rates(m, &counts);

    let cond2_trace: Vec<Cond2Point> = (0..=k_max)
        .map(|k| Cond2Point {
            k,
            value: phi_chi_norm(m, mu, alpha, p, k) / (k + 1) as f64,
        })
        .collect();

    let mut cond3_partial = Vec::with_capacity(k_max + 1);
    let mut acc = 0.0;
    for (k, c) in counts.iter().take(k_max + 1).enumerate() {
        acc += alpha.powf(k as f64 * p) * c * ((1 + k) as f64).powf(-p - 2.0);
        cond3_partial.push(acc);
    }

    let cond4_grid: Vec<Cond4Point> = beta_grid
        .iter()
        .map(|&beta| {
            let ab = alpha * beta;
            let terms: Vec<f64> = (0..=k_max).map(|k| ab.powf(k as f64 * p) * counts[k]).collect();
            let partial_sum: f64 = terms.iter().sum();
            let ratio = rates.upper * ab.powf(p);
            let (tail_bound, converges) = if rates.finite {
                (Some(0.0), true)
            } else if rates.exact && ratio < 1.0 {
                (Some(terms[k_max] * ratio / (1.0 - ratio)), true)
            } else {
                (None, false)
            };
            Cond4Point {
                beta,
                ratio,
                partial_sum,
                tail_bound,
                converges,
            }
        })
        .collect();

    let majorant_ratio = rates.upper * alpha.powf(p);
    let cond2_minorant = if rates.exact && !rates.finite && rates.lower > 0.0 {
        find_minorant(alpha, p, rates.lower, &cond2_trace)
    } else {
        None
    };

    let verdict = if rates.finite || (rates.exact && majorant_ratio <= 1.0 && cond4_grid.iter().all(|c| c.converges)) {
        Verdict::Extends
    } else if cond2_minorant.is_some() {
        Verdict::FailsToExtend
    } else {
        Verdict::Inconclusive
    };

    Ok(ExtensionReport {
        alpha,
        p,
        k_max,
        rate_upper: rates.upper,
        rate_lower: rates.lower,
        rates_exact: rates.exact,
        majorant_ratio,
        cond2_trace,
        cond2_minorant,
        cond3_partial,
        cond4_grid,
        verdict,
    })
}

/// Smallest `k0 ≥ 1` with `ρ0 = α·rate^{1/p}·(k0+1)/(k0+2) > 1`. The bound is
/// increasing in `k`, so it holds for every later ratio; the exact trace on
/// `[k0, K]` is checked against it as well.
fn find_minorant(alpha: f64, p: f64, rate_lower: f64, trace: &[Cond2Point]) -> Option<Minorant> {
    let k_max = trace.len() - 1;
    let base = alpha * rate_lower.powf(1.0 / p);
    let k0 = (1..k_max).find(|&k| base * (k + 1) as f64 / (k + 2) as f64 > 1.0)?;
    let rho = base * (k0 + 1) as f64 / (k0 + 2) as f64;
    let holds = (k0..k_max).all(|k| trace[k + 1].value >= rho * trace[k].value * (1.0 - 1e-12));
    holds.then_some(Minorant { k0, rho })
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ThresholdBand {
    pub q: f64,
    pub p: f64,
    /// `rate_lower^{-1/q}`: above this, exponent `q` fails.
    pub lower: f64,
    /// `rate_upper^{-1/p}`: below this, exponent `p` extends.
    pub upper: f64,
    pub nonempty: bool,
    pub sample_alpha: Option<f64>,
    pub certified: bool,
}

impl ThresholdBand {
    pub fn contains(&self, alpha: f64) -> bool {
        self.nonempty && self.lower < alpha && alpha < self.upper
    }
}

pub fn threshold_band(growth: &GrowthReport, q: f64, p: f64) -> Result<ThresholdBand> {
    if !(q >= 2.0 && q <= p && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("need 2 ≤ q ≤ p < ∞, got q = {q}, p = {p}")));
    }
    if !growth.exponential {
        return Err(Error::Subexponential { rate: growth.rate_lower });
    }
    let lower = growth.rate_lower.powf(-1.0 / q);
    let upper = growth.rate_upper.powf(-1.0 / p);
    let nonempty = lower < upper;
    Ok(ThresholdBand {
        q,
        p,
        lower,
        upper,
        nonempty,
        sample_alpha: nonempty.then(|| 0.5 * (lower + upper)),
        certified: growth.rates_exact,
    })
}

/// `|φ_α χ_k|_p / (2C(k+1))`; a value above 1 rules out extension to the
/// `L^p_μ` completion.
pub fn witness_ratio(m: &GroupoidModel, mu: &MeasureContext, alpha: f64, p: f64, k: usize, c: u64) -> f64 {
    phi_chi_norm(m, mu, alpha, p, k) / (2.0 * c as f64 * (k + 1) as f64)
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
pub enum CertificateStatus {
    Certified,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct WitnessPoint {
    pub k: usize,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Certificate {
    pub q: f64,
    pub p: f64,
    pub alpha: f64,
    pub band: ThresholdBand,
    pub in_band: bool,
    pub delta: f64,
    pub delta_radius: usize,
    pub c: u64,
    /// `ω_{φ_α}` extends to the `L^p_μ` completion.
    pub extension_leg: ExtensionReport,
    pub extension_leg_passes: bool,
    /// `ω_{φ_α}` does not extend to the `L^q_μ` completion.
    pub divergence_leg: ExtensionReport,
    pub witness_ratios: Vec<WitnessPoint>,
    pub witness_exceeds_one_at: Option<usize>,
    pub divergence_leg_passes: bool,
    pub status: CertificateStatus,
}

/// Four-point δ at radius 3 (smaller if the quadruple budget forces it) and
/// the overlap constant it yields: `(δ, radius, C)`.
pub fn measured_overlap(m: &GroupoidModel) -> Result<(f64, usize, u64)> {
    let mut radius = CERTIFICATE_DELTA_RADIUS;
    let delta = loop {
        match hyperbolicity_delta(m, UnitId(0), radius) {
            Ok(d) => break d.delta,
            Err(e) if e.is_budget() && radius > 1 => radius -= 1,
            Err(e) => return Err(e),
        }
    };
    Ok((delta, radius, overlap_constant(m, delta)?))
}

/// Bundles the two legs separating the `L^q_μ` and `L^p_μ` completions.
pub fn certificate(
    m: &GroupoidModel,
    mu: &MeasureContext,
    growth: &GrowthReport,
    q: f64,
    p: f64,
    alpha: f64,
    k_max: usize,
) -> Result<Certificate> {
    let band = threshold_band(growth, q, p)?;
    let in_band = band.contains(alpha);

    let (delta, radius, c) = measured_overlap(m)?;

    let extension_leg = extension_criteria(m, mu, alpha, p, k_max, &DEFAULT_BETA_GRID)?;
    let divergence_leg = extension_criteria(m, mu, alpha, q, k_max, &DEFAULT_BETA_GRID)?;
    let witness_ratios: Vec<WitnessPoint> = (0..=k_max)
        .map(|k| WitnessPoint {
            k,
            ratio: witness_ratio(m, mu, alpha, q, k, c),
        })
        .collect();
    let witness_exceeds_one_at = witness_ratios.iter().find(|w| w.ratio > 1.0).map(|w| w.k);

    let extension_leg_passes = extension_leg.verdict == Verdict::Extends;
    let divergence_leg_passes = divergence_leg.verdict == Verdict::FailsToExtend && witness_exceeds_one_at.is_some();
    let status = if in_band && extension_leg_passes && divergence_leg_passes {
        CertificateStatus::Certified
    } else {
        CertificateStatus::Inconclusive
    };
    Ok(Certificate {
        q,
        p,
        alpha,
        band,
        in_band,
        delta,
        delta_radius: radius,
        c,
        extension_leg,
        extension_leg_passes,
        divergence_leg,
        witness_ratios,
        witness_exceeds_one_at,
        divergence_leg_passes,
        status,
    })
}
