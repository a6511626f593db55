//! Fiber word metrics, growth statistics, four-point hyperbolicity and the
//! convolution band lemma.

use std::collections::BTreeMap;
use std::io;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::CcFunction;
use crate::error::{Error, Result};
use crate::group::GroupBackend;
use crate::model::{GroupoidElement, GroupoidModel, UnitId};

pub const DEFAULT_QUADRUPLE_BUDGET: u128 = 100_000_000;
/// Units examined exhaustively up to this count; larger unit spaces are sampled.
pub const UNIT_SAMPLE_SIZE: usize = 64;
pub const DEFAULT_SAMPLE_SEED: u64 = 0x5eed;

/// `d(g, h) = l_S(g⁻¹h)` on a common range fiber.
pub fn fiber_distance(m: &GroupoidModel, g: &GroupoidElement, h: &GroupoidElement) -> Result<usize> {
    if g.range() != h.range() {
        return Err(Error::RangeMismatch {
            left: g.range().0,
            right: h.range().0,
        });
    }
    Ok(m.length(&m.compose_unchecked(&m.inverse(g), h)))
}

/// All units when there are at most 64, else a seeded sample of 64 (sorted).
pub fn sample_units(m: &GroupoidModel, seed: u64) -> (Vec<UnitId>, bool) {
    let n = m.units();
    if n <= UNIT_SAMPLE_SIZE {
        return (m.unit_ids().collect(), false);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<UnitId> = rand::seq::index::sample(&mut rng, n, UNIT_SAMPLE_SIZE)
        .into_iter()
        .map(|i| UnitId(i as u32))
        .collect();
    picked.sort();
    (picked, true)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct GrowthRow {
    pub k: usize,
    pub sup_sphere: u64,
    pub inf_sphere: u64,
    pub inf_ball: u64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct GrowthReport {
    pub rows: Vec<GrowthRow>,
    pub k_min: usize,
    pub k_max: usize,
    /// Certified envelope: `sup_sphere(k) ≤ R^k` on the fit range.
    pub r: f64,
    /// Least-squares rate with `D` lowered until `inf_ball(k) ≥ D R'^k` on the fit range.
    pub r_prime: f64,
    pub d: f64,
    /// `max sup_sphere(k+1)/sup_sphere(k)` over the fit range.
    pub rate_upper: f64,
    /// `min inf_sphere(k+1)/inf_sphere(k)` over the fit range.
    pub rate_lower: f64,
    /// True when the tail ratios are exact for all larger `k`: free backends,
    /// whose sphere ratio is constant from `k = 1`, or saturated finite groups.
    pub rates_exact: bool,
    pub exponential: bool,
    pub units_examined: Vec<UnitId>,
    pub sampled: bool,
}

impl GrowthReport {
    pub fn row(&self, k: usize) -> Option<&GrowthRow> {
        self.rows.get(k)
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["k", "sup_sphere", "inf_ball"])?;
        for row in &self.rows {
            wr.write_record([row.k.to_string(), row.sup_sphere.to_string(), row.inf_ball.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}

pub fn growth_stats(m: &GroupoidModel, k_max: usize, k_min: usize) -> Result<GrowthReport> {
    growth_stats_seeded(m, k_max, k_min, DEFAULT_SAMPLE_SEED)
}

/// Exact per-unit sphere and ball counts for `k ∈ [0, K]`, then the fitted constants.
pub fn growth_stats_seeded(m: &GroupoidModel, k_max: usize, k_min: usize, seed: u64) -> Result<GrowthReport> {
    if k_min < 1 || k_max < k_min {
        return Err(Error::InvalidParameter(format!("need K ≥ k_min ≥ 1, got K = {k_max}, k_min = {k_min}")));
    }
    let (units, sampled) = sample_units(m, seed);
    let per_unit: Vec<Vec<u64>> = units
        .par_iter()
        .map(|&u| {
            let mut counts = vec![0u64; k_max + 1];
            for g in m.enumerate_ball(u, k_max)? {
                counts[m.length(&g)] += 1;
            }
            Ok(counts)
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let sup_sphere = per_unit.iter().map(|c| c[k]).max().unwrap_or(0);
        let inf_sphere = per_unit.iter().map(|c| c[k]).min().unwrap_or(0);
        let inf_ball = per_unit.iter().map(|c| c[..=k].iter().sum::<u64>()).min().unwrap_or(0);
        rows.push(GrowthRow {
            k,
            sup_sphere,
            inf_sphere,
            inf_ball,
        });
    }
    let fit = &rows[k_min..=k_max];

    let mut r = fit
        .iter()
        .map(|row| (row.sup_sphere as f64).powf(1.0 / row.k as f64))
        .fold(1.0, f64::max);
    while fit.iter().any(|row| row.sup_sphere as f64 > r.powi(row.k as i32)) {
        r = next_up(r);
    }

    let (r_prime, mut d) = least_squares_exponential(fit);
    for row in fit {
        d = d.min(row.inf_ball as f64 / r_prime.powi(row.k as i32));
    }
    while fit.iter().any(|row| (row.inf_ball as f64) < d * r_prime.powi(row.k as i32)) {
        d = next_down(d);
    }

    let ratio = |a: u64, b: u64| if a == 0 { 0.0 } else { b as f64 / a as f64 };
    let pairs = || fit.windows(2);
    let rate_upper = pairs()
        .map(|w| ratio(w[0].sup_sphere, w[1].sup_sphere))
        .fold(0.0, f64::max);
    let rate_lower = pairs()
        .map(|w| ratio(w[0].inf_sphere, w[1].inf_sphere))
        .fold(f64::INFINITY, f64::min);
    let (rate_upper, rate_lower) = if fit.len() < 2 { (r, 1.0) } else { (rate_upper, rate_lower) };
    let rates_exact = match m.backend() {
        GroupBackend::Free { .. } => true,
        GroupBackend::Finite(_) => rows[k_max].sup_sphere == 0,
    };

    Ok(GrowthReport {
        rows,
        k_min,
        k_max,
        r,
        r_prime,
        d,
        rate_upper,
        rate_lower,
        rates_exact,
        exponential: rate_lower > 1.0,
        units_examined: units,
        sampled,
    })
}

/// Fits `log inf_ball = log D + k log R'` by ordinary least squares.
fn least_squares_exponential(fit: &[GrowthRow]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = fit
        .iter()
        .filter(|row| row.inf_ball > 0)
        .map(|row| (row.k as f64, (row.inf_ball as f64).ln()))
        .collect();
    if pts.len() < 2 {
        let y = pts.first().map_or(0.0, |p| p.1);
        return (1.0, y.exp());
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    (slope.exp(), (my - slope * mx).exp())
}

fn next_up(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1)
}

fn next_down(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        f64::from_bits(x.to_bits() - 1)
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct DeltaEstimate {
    pub delta: f64,
    pub radius: usize,
    pub units: Vec<UnitId>,
    pub exhaustive: bool,
    pub quadruples_checked: u128,
}

/// Exact four-point δ over all quadruples of `B_radius ∩ G^u`.
pub fn hyperbolicity_delta(m: &GroupoidModel, u: UnitId, radius: usize) -> Result<DeltaEstimate> {
    hyperbolicity_delta_budget(m, u, radius, DEFAULT_QUADRUPLE_BUDGET)
}

pub fn hyperbolicity_delta_budget(m: &GroupoidModel, u: UnitId, radius: usize, budget: u128) -> Result<DeltaEstimate> {
    let required = m.ball_size(u, radius).saturating_pow(4);
    if required > budget {
        return Err(Error::QuadrupleBudget { required, budget });
    }
    let ball = m.enumerate_ball(u, radius)?;
    let n = ball.len();
    let inverses: Vec<_> = ball.iter().map(|g| m.inverse(g)).collect();
    let dist: Vec<u32> = (0..n * n)
        .into_par_iter()
        .map(|ij| m.length(&m.compose_unchecked(&inverses[ij / n], &ball[ij % n])) as u32)
        .collect();
    let d = |i: usize, j: usize| dist[i * n + j];

    // The four-point defect is symmetric under permuting the quadruple, so
    // multisets i ≤ j ≤ k ≤ l cover every case.
    let (delta, checked) = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut worst = 0u32;
            let mut count = 0u128;
            for j in i..n {
                for k in j..n {
                    for l in k..n {
                        let mut s = [d(i, j) + d(k, l), d(i, k) + d(j, l), d(i, l) + d(j, k)];
                        s.sort_unstable();
                        worst = worst.max(s[2] - s[1]);
                        count += 1;
                    }
                }
            }
            (worst, count)
        })
        .reduce(|| (0, 0), |a, b| (a.0.max(b.0), a.1 + b.1));

    Ok(DeltaEstimate {
        delta: delta as f64,
        radius,
        units: vec![u],
        exhaustive: true,
        quadruples_checked: checked,
    })
}

/// Maximum of the per-unit estimates over all (or 64 sampled) units.
pub fn model_hyperbolicity_delta(m: &GroupoidModel, radius: usize, budget: u128, seed: u64) -> Result<DeltaEstimate> {
    let (units, sampled) = sample_units(m, seed);
    let mut out = DeltaEstimate {
        delta: 0.0,
        radius,
        units: Vec::new(),
        exhaustive: !sampled,
        quadruples_checked: 0,
    };
    for u in units {
        let est = hyperbolicity_delta_budget(m, u, radius, budget)?;
        out.delta = out.delta.max(est.delta);
        out.quadruples_checked += est.quadruples_checked;
        out.units.push(u);
    }
    Ok(out)
}

/// `C = sup_u |B_{⌈2δ+1⌉} ∩ G^u|`.
pub fn overlap_constant(m: &GroupoidModel, delta: f64) -> Result<u64> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("δ = {delta} must be finite and nonnegative")));
    }
    let radius = (2.0 * delta + 1.0).ceil() as usize;
    let size = m.ball_size(UnitId(0), radius);
    if size > m.enumeration_limit() as u128 {
        return Err(Error::EnumerationLimit {
            required: size,
            limit: m.enumeration_limit() as u128,
        });
    }
    Ok(size as u64)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BandRow {
    pub m: usize,
    pub in_band: bool,
    pub l1_mass: f64,
    /// `l1_mass / |f|_{ℓ¹(G^u)}`.
    pub ratio: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BandReport {
    pub k: usize,
    pub n: usize,
    pub unit: UnitId,
    pub c: u64,
    pub f_l1: f64,
    pub rows: Vec<BandRow>,
    pub support_in_band: bool,
    pub l1_bound_holds: bool,
    pub pass: bool,
}

/// Checks that `(f∗g)χ_m` vanishes off `m ∈ [|k−n|, k+n]` and that
/// `|(f∗g)χ_m|_{ℓ¹(G^u)} ≤ C |f|_{ℓ¹(G^u)}` for each `m`.
pub fn band_check(f: &CcFunction, g: &CcFunction, k: usize, n: usize, u: UnitId, c: u64) -> Result<BandReport> {
    let model = f.model().clone();
    model.unit_check(u)?;
    for (x, _) in f.iter() {
        if model.length(x) != k {
            return Err(Error::Precondition(format!("f is not supported on W_{k}: {}", model.label(x))));
        }
    }
    for (x, v) in g.iter() {
        if model.length(x) != n {
            return Err(Error::Precondition(format!("g is not supported on W_{n}: {}", model.label(x))));
        }
        if v.norm() > 1.0 {
            return Err(Error::Precondition(format!("|g| = {} > 1 at {}", v.norm(), model.label(x))));
        }
    }
    let prod = f.convolve(g)?;
    let f_l1 = f.l1_fiber(u);
    let lo = k.abs_diff(n);
    let hi = k + n;

    let mut mass: BTreeMap<usize, f64> = (0..=hi).map(|m| (m, 0.0)).collect();
    for (x, v) in prod.fiber(u) {
        *mass.entry(model.length(x)).or_insert(0.0) += v.norm();
    }
    let bound = c as f64 * f_l1;
    let rows: Vec<BandRow> = mass
        .into_iter()
        .map(|(m, l1_mass)| {
            let in_band = (lo..=hi).contains(&m);
            let ok = if in_band { l1_mass <= bound } else { l1_mass == 0.0 };
            BandRow {
                m,
                in_band,
                l1_mass,
                ratio: if f_l1 > 0.0 { l1_mass / f_l1 } else { 0.0 },
                ok,
            }
        })
        .collect();
    let support_in_band = rows.iter().filter(|r| !r.in_band).all(|r| r.l1_mass == 0.0);
    let l1_bound_holds = rows.iter().all(|r| r.l1_mass <= bound);
    Ok(BandReport {
        k,
        n,
        unit: u,
        c,
        f_l1,
        rows,
        support_in_band,
        l1_bound_holds,
        pass: support_in_band && l1_bound_holds,
    })
}
