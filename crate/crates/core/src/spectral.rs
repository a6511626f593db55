//! Reduced-norm estimates: truncated left-convolution operators on source
//! fibers, the spectral-radius power sequence, and the `2C(k+1)|f|_q` bound.

use std::collections::HashMap;
use std::io;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::CcFunction;
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::model::{GroupoidModel, MeasureContext, UnitId};

pub const DEFAULT_LADDER: [usize; 5] = [4, 6, 8, 10, 12];
pub const DEFAULT_MAX_ITER: usize = 2000;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const SUPPORT_BUDGET: u128 = 10_000_000;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct NormParams {
    pub ladder: Vec<usize>,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for NormParams {
    fn default() -> Self {
        NormParams {
            ladder: DEFAULT_LADDER.to_vec(),
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
        }
    }
}

impl NormParams {
    pub fn single(l: usize) -> Self {
        NormParams {
            ladder: vec![l],
            ..NormParams::default()
        }
    }

    pub fn with_ladder(ladder: &[usize]) -> Self {
        NormParams {
            ladder: ladder.to_vec(),
            ..NormParams::default()
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct TracePoint {
    pub l: usize,
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub truncation_radius: usize,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub trace: Vec<TracePoint>,
    pub monotone: bool,
    /// Aitken extrapolation of the last three trace values; advisory only.
    pub extrapolated: Option<f64>,
    pub unit: UnitId,
}

impl NormEstimate {
    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["L", "value"])?;
        for t in &self.trace {
            wr.write_record([t.l.to_string(), format!("{:.17e}", t.value)])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Sparse complex matrix in compressed-row form.
struct Csr {
    offsets: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<Complex64>,
}

impl Csr {
    fn rows(&self) -> usize {
        self.offsets.len() - 1
    }

    fn matvec(&self, x: &[Complex64], out: &mut [Complex64]) {
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for p in self.offsets[i]..self.offsets[i + 1] {
                acc += self.vals[p] * x[self.cols[p] as usize];
            }
            *o = acc;
        });
    }

    /// Conjugate transpose.
    fn adjoint(&self, ncols: usize) -> Csr {
        let mut counts = vec![0usize; ncols + 1];
        for &c in &self.cols {
            counts[c as usize + 1] += 1;
        }
        for i in 0..ncols {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0u32; self.cols.len()];
        let mut vals = vec![Complex64::new(0.0, 0.0); self.vals.len()];
        for r in 0..self.rows() {
            for p in self.offsets[r]..self.offsets[r + 1] {
                let c = self.cols[p] as usize;
                cols[next[c]] = r as u32;
                vals[next[c]] = self.vals[p].conj();
                next[c] += 1;
            }
        }
        Csr { offsets: counts, cols, vals }
    }
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `M[y, y'] = f(y y'⁻¹)` on `B_L ∩ G_u`.
fn truncated_operator(f: &CcFunction, u: UnitId, l: usize) -> Result<Csr> {
    let model = f.model();
    let ball = model.enumerate_source_ball(u, l)?;
    let index: HashMap<_, u32> = ball.iter().enumerate().map(|(i, g)| (g.clone(), i as u32)).collect();
    let mut by_range: HashMap<UnitId, Vec<_>> = HashMap::new();
    for (a, v) in f.iter() {
        by_range.entry(a.range()).or_default().push((model.inverse(a), *v));
    }
    let rows: Vec<Vec<(u32, Complex64)>> = ball
        .par_iter()
        .map(|y| {
            let mut row = Vec::new();
            if let Some(terms) = by_range.get(&y.range()) {
                for (a_inv, v) in terms {
                    let y2 = model.compose_unchecked(a_inv, y);
                    if model.length(&y2) <= l {
                        row.push((index[&y2], *v));
                    }
                }
            }
            row.sort_by_key(|e| e.0);
            row
        })
        .collect();
    let mut offsets = Vec::with_capacity(rows.len() + 1);
    offsets.push(0);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    for row in rows {
        for (c, v) in row {
            cols.push(c);
            vals.push(v);
        }
        offsets.push(cols.len());
    }
    Ok(Csr { offsets, cols, vals })
}

/// Largest singular value by power iteration on `M†M` from the normalized
/// all-ones vector; stops when `‖z − λv‖/λ < tol`.
fn top_singular_value(m: &Csr, max_iter: usize, tol: f64) -> (f64, usize, f64, bool) {
    let n = m.rows();
    if n == 0 || m.vals.is_empty() {
        return (0.0, 0, 0.0, true);
    }
    let adj = m.adjoint(n);
    let mut v = vec![Complex64::new(1.0 / (n as f64).sqrt(), 0.0); n];
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    let mut z = vec![Complex64::new(0.0, 0.0); n];
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        m.matvec(&v, &mut w);
        adj.matvec(&w, &mut z);
        lambda = v.iter().zip(&z).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
        if lambda <= 0.0 {
            return (0.0, it, 0.0, true);
        }
        residual = v
            .iter()
            .zip(&z)
            .map(|(a, b)| (b - a * lambda).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / lambda;
        let nz = norm2(&z);
        for (vi, zi) in v.iter_mut().zip(&z) {
            *vi = zi / nz;
        }
        if residual < tol {
            return (lambda.sqrt(), it, residual, true);
        }
    }
    (lambda.sqrt(), max_iter, residual, false)
}

fn aitken(trace: &[TracePoint]) -> Option<f64> {
    if trace.len() < 3 {
        return None;
    }
    let t = &trace[trace.len() - 3..];
    let (a, b, c) = (t[0].value, t[1].value, t[2].value);
    let denom = c - 2.0 * b + a;
    if denom.abs() < 1e-14 {
        return Some(c);
    }
    Some(c - (c - b).powi(2) / denom)
}

pub fn reduced_norm_at_unit(f: &CcFunction, u: UnitId, params: &NormParams) -> Result<NormEstimate> {
    f.model().unit_check(u)?;
    if params.ladder.is_empty() {
        return Err(Error::InvalidParameter("truncation ladder is empty".into()));
    }
    let mut ladder = params.ladder.clone();
    ladder.sort_unstable();
    ladder.dedup();
    let mut trace = Vec::with_capacity(ladder.len());
    for &l in &ladder {
        let m = truncated_operator(f, u, l)?;
        let (value, iterations, residual, converged) = top_singular_value(&m, params.max_iter, params.tol);
        trace.push(TracePoint {
            l,
            value,
            iterations,
            residual,
            converged,
        });
    }
    let last = trace.last().unwrap().clone();
    Ok(NormEstimate {
        value: last.value,
        truncation_radius: last.l,
        iterations: last.iterations,
        residual: last.residual,
        converged: last.converged,
        monotone: trace.windows(2).all(|w| w[1].value >= w[0].value),
        extrapolated: aitken(&trace),
        trace,
        unit: u,
    })
}

/// `sup_u` of the per-unit estimates; ties keep the smallest unit.
pub fn reduced_norm(f: &CcFunction, params: &NormParams) -> Result<NormEstimate> {
    let mut best: Option<NormEstimate> = None;
    for u in f.model().unit_ids() {
        let est = reduced_norm_at_unit(f, u, params)?;
        if best.as_ref().map_or(true, |b| est.value > b.value) {
            best = Some(est);
        }
    }
    Ok(best.expect("models have at least one unit"))
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct PowerSeqEntry {
    pub n: usize,
    pub value: f64,
    pub support: usize,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct PowerSeq {
    pub entries: Vec<PowerSeqEntry>,
    pub weights: Vec<f64>,
}

impl PowerSeq {
    pub fn value(&self, n: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.n == n).map(|e| e.value)
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["n", "value"])?;
        for e in &self.entries {
            wr.write_record([e.n.to_string(), format!("{:.17e}", e.value)])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// `value_n = |(f*∗f)^{∗2n}|_2^{1/4n}` for `n = 1..=n_max`. With an invariant
/// measure the `L²(ν⁻¹)` and `L²(ν)` norms coincide.
pub fn power_sequence_norm(f: &CcFunction, n_max: usize, mu: &MeasureContext) -> Result<PowerSeq> {
    let model = f.model().clone();
    let h = f.involution().convolve(f)?;
    let h2 = h.convolve(&h)?;
    let mut cur = h2.clone();
    let mut entries = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        if n > 1 {
            let radius = cur.max_length() + h2.max_length();
            let bound = model.units() as u128 * model.ball_size(UnitId(0), radius);
            let required = (cur.support_len() as u128 * h2.support_len() as u128).min(bound);
            if required > SUPPORT_BUDGET {
                return Err(Error::SupportBudget {
                    n,
                    required,
                    budget: SUPPORT_BUDGET,
                });
            }
            cur = cur.convolve(&h2)?;
        }
        let l2 = cur.lp_norm(2.0, mu)?.value;
        entries.push(PowerSeqEntry {
            n,
            value: l2.powf(1.0 / (4 * n) as f64),
            support: cur.support_len(),
        });
    }
    Ok(PowerSeq {
        entries,
        weights: mu.weights().to_vec(),
    })
}

/// `α^k χ_{W_k}` over every unit.
pub fn weighted_sphere(model: &std::sync::Arc<GroupoidModel>, alpha: f64, k: usize) -> Result<CcFunction> {
    let phi = Kernel::exp_length(alpha)?;
    let sphere = CcFunction::sphere_indicator(model, k)?;
    let mut out = sphere.clone();
    for (g, _) in sphere.iter() {
        out.set(g.clone(), phi.eval(model, g)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct NormBoundReport {
    pub alpha: f64,
    pub k: usize,
    pub p: f64,
    pub q: f64,
    pub c: u64,
    pub lhs: f64,
    pub lq_norm: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
    pub estimate: NormEstimate,
}

/// `‖φ_α χ_k‖_r ≤ 2C(k+1)|φ_α χ_k|_q` with `1/p + 1/q = 1`.
pub fn verify_norm_bound(
    model: &std::sync::Arc<GroupoidModel>,
    mu: &MeasureContext,
    alpha: f64,
    k: usize,
    p: f64,
    c: u64,
    params: &NormParams,
) -> Result<NormBoundReport> {
    if !(p >= 2.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p = {p} must be finite and at least 2")));
    }
    let q = p / (p - 1.0);
    let f = weighted_sphere(model, alpha, k)?;
    let estimate = reduced_norm(&f, params)?;
    let lq_norm = f.lp_norm(q, mu)?.value;
    let rhs = 2.0 * c as f64 * (k + 1) as f64 * lq_norm;
    let lhs = estimate.value;
    Ok(NormBoundReport {
        alpha,
        k,
        p,
        q,
        c,
        lhs,
        lq_norm,
        rhs,
        slack: rhs - lhs,
        pass: lhs <= rhs,
        estimate,
    })
}
