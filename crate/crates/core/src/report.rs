//! Operation runners behind the command-line tool. Each produces a JSON
//! envelope plus CSV tables, deterministic for a fixed seed.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebra::{CcFunction, TermRecord};
use crate::error::{Error, Result};
use crate::exotic::{self, certificate, extension_criteria, measured_overlap, threshold_band, Verdict};
use crate::kernels::{self, Kernel, KernelSpec};
use crate::metric::{self, band_check, growth_stats_seeded, overlap_constant};
use crate::model::{GroupoidElement, GroupoidModel, MeasureContext, UnitId};
use crate::spectral::{self, NormParams};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operation {
    Growth,
    Delta,
    Pdcheck,
    Gns,
    Haagerup,
    Bandcheck,
    Norm,
    Powerseq,
    Normbound,
    Extend,
    Band,
    Certify,
}

impl Operation {
    pub const ALL: [Operation; 12] = [
        Operation::Growth,
        Operation::Delta,
        Operation::Pdcheck,
        Operation::Gns,
        Operation::Haagerup,
        Operation::Bandcheck,
        Operation::Norm,
        Operation::Powerseq,
        Operation::Normbound,
        Operation::Extend,
        Operation::Band,
        Operation::Certify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Operation::Growth => "growth",
            Operation::Delta => "delta",
            Operation::Pdcheck => "pdcheck",
            Operation::Gns => "gns",
            Operation::Haagerup => "haagerup",
            Operation::Bandcheck => "bandcheck",
            Operation::Norm => "norm",
            Operation::Powerseq => "powerseq",
            Operation::Normbound => "normbound",
            Operation::Extend => "extend",
            Operation::Band => "band",
            Operation::Certify => "certify",
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Report {
    pub tool_version: String,
    pub model_digest: String,
    pub operation: String,
    pub parameters: Value,
    pub results: Value,
    pub verdict: String,
}

/// A finished run: the envelope, named CSV tables, and whether every
/// asserted property held.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: Report,
    pub tables: Vec<(String, String)>,
    pub pass: bool,
}

impl RunOutput {
    pub fn report_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&self.report)?;
        s.push('\n');
        Ok(s)
    }

    /// Writes `report.json` and `tables/*.csv` under `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir.join("tables"))?;
        fs::write(dir.join("report.json"), self.report_json()?)?;
        for (name, body) in &self.tables {
            fs::write(dir.join("tables").join(format!("{name}.csv")), body)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub seed: u64,
    /// Overrides the enumeration limit and, for `delta`, the quadruple budget.
    pub budget: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            seed: 0,
            budget: None,
        }
    }
}

/// A function on the groupoid as written in configuration files.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum FunctionSpec {
    /// `χ_{W_k}` over every unit.
    Sphere(usize),
    /// `α^k χ_{W_k}`.
    WeightedSphere { alpha: f64, k: usize },
    /// Explicit `(unit, word, re, im)` terms.
    Terms(Vec<TermRecord>),
}

impl FunctionSpec {
    pub fn build(&self, model: &Arc<GroupoidModel>) -> Result<CcFunction> {
        match self {
            FunctionSpec::Sphere(k) => CcFunction::sphere_indicator(model, *k),
            FunctionSpec::WeightedSphere { alpha, k } => spectral::weighted_sphere(model, *alpha, *k),
            FunctionSpec::Terms(records) => CcFunction::from_records(model, records),
        }
    }
}

fn measure(model: &GroupoidModel, weights: &Option<Vec<f64>>) -> Result<MeasureContext> {
    match weights {
        Some(w) => MeasureContext::new(model, w.clone()),
        None => Ok(MeasureContext::uniform(model)),
    }
}

fn parse_config<T: DeserializeOwned>(config: &Value) -> Result<T> {
    let value = if config.is_null() { json!({}) } else { config.clone() };
    serde_json::from_value(value).map_err(|e| Error::Parse(format!("config: {e}")))
}

fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    wr.write_record(header)?;
    for row in rows {
        wr.write_record(row)?;
    }
    let bytes = wr.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn table_from<F>(write: F) -> Result<String>
where
    F: FnOnce(&mut Vec<u8>) -> Result<()>,
{
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

fn pass_label(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

/// Each element of `W_k ∩ G^u` kept with probability 1/2 (retried until
/// nonempty). `f` gets real and imaginary parts uniform in [-1, 1]; `g` gets
/// `r e^{iθ}` with `r` uniform in [0, 1], so `|g| ≤ 1`.
pub fn random_band_pair(
    model: &Arc<GroupoidModel>,
    k: usize,
    n: usize,
    u: UnitId,
    rng: &mut ChaCha8Rng,
) -> Result<(CcFunction, CcFunction)> {
    let wk = model.enumerate_sphere(u, k)?;
    let mut f = CcFunction::zero(model);
    while f.is_zero() {
        for x in &wk {
            if rng.gen_bool(0.5) {
                let v = Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
                f.set(x.clone(), v);
            }
        }
    }
    // g lives on the source side of f: arrows starting where f's arrows end.
    let mut g = CcFunction::zero(model);
    let starts: std::collections::BTreeSet<UnitId> = wk.iter().map(|x| model.source(x)).collect();
    let mut wn = Vec::new();
    for s in starts {
        wn.extend(model.enumerate_sphere(s, n)?);
    }
    while g.is_zero() {
        for x in &wn {
            if rng.gen_bool(0.5) {
                let r: f64 = rng.gen_range(0.0..=1.0);
                let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                g.set(x.clone(), Complex64::from_polar(r, theta));
            }
        }
    }
    Ok((f, g))
}

/// Tuples of distinct elements of `ball`, sizes uniform in `1..=max_size`.
pub fn random_tuples(ball: &[GroupoidElement], count: usize, max_size: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<GroupoidElement>> {
    let cap = max_size.min(ball.len()).max(1);
    (0..count)
        .map(|_| {
            let size = rng.gen_range(1..=cap);
            rand::seq::index::sample(rng, ball.len(), size)
                .into_iter()
                .map(|i| ball[i].clone())
                .collect()
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct GrowthConfig {
    k_max: usize,
    k_min: usize,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        GrowthConfig { k_max: 6, k_min: 1 }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct DeltaConfig {
    radius: usize,
    unit: Option<u32>,
}

impl Default for DeltaConfig {
    fn default() -> Self {
        DeltaConfig { radius: 3, unit: None }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct PdConfig {
    kernel: KernelSpec,
    radius: usize,
    unit: u32,
    random_tuples: usize,
    max_tuple: usize,
    tol: f64,
}

impl Default for PdConfig {
    fn default() -> Self {
        PdConfig {
            kernel: KernelSpec::ExpLength(0.5),
            radius: 2,
            unit: 0,
            random_tuples: 100,
            max_tuple: 10,
            tol: kernels::DEFAULT_PSD_TOL,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct GnsConfig {
    kernel: KernelSpec,
    radius: usize,
    unit: u32,
    null_tol: f64,
}

impl Default for GnsConfig {
    fn default() -> Self {
        GnsConfig {
            kernel: KernelSpec::ExpLength(0.5),
            radius: 2,
            unit: 0,
            null_tol: kernels::DEFAULT_NULL_TOL,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct HaagerupConfig {
    n: Vec<u32>,
    k: Vec<usize>,
    eps: Vec<f64>,
}

impl Default for HaagerupConfig {
    fn default() -> Self {
        HaagerupConfig {
            n: vec![1, 2, 4, 8],
            k: vec![0, 2, 4],
            eps: vec![0.1, 0.01],
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct BandCheckConfig {
    k: usize,
    n: usize,
    unit: u32,
    pairs: usize,
    /// Overlap constant; defaults to the one for `delta`.
    c: Option<u64>,
    delta: f64,
}

impl Default for BandCheckConfig {
    fn default() -> Self {
        BandCheckConfig {
            k: 3,
            n: 2,
            unit: 0,
            pairs: 50,
            c: None,
            delta: 0.0,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct NormConfig {
    function: FunctionSpec,
    ladder: Vec<usize>,
    max_iter: usize,
    tol: f64,
    unit: Option<u32>,
}

impl Default for NormConfig {
    fn default() -> Self {
        let p = NormParams::default();
        NormConfig {
            function: FunctionSpec::Sphere(1),
            ladder: p.ladder,
            max_iter: p.max_iter,
            tol: p.tol,
            unit: None,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct PowerSeqConfig {
    function: FunctionSpec,
    n_max: usize,
    weights: Option<Vec<f64>>,
}

impl Default for PowerSeqConfig {
    fn default() -> Self {
        PowerSeqConfig {
            function: FunctionSpec::Sphere(1),
            n_max: 3,
            weights: None,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct NormBoundConfig {
    alpha: Vec<f64>,
    k: Vec<usize>,
    p: Vec<f64>,
    ladder: Vec<usize>,
    c: Option<u64>,
    weights: Option<Vec<f64>>,
}

impl Default for NormBoundConfig {
    fn default() -> Self {
        NormBoundConfig {
            alpha: vec![0.3, 0.5, 0.7],
            k: vec![1, 2, 3],
            p: vec![2.0, 4.0],
            ladder: vec![4, 6],
            c: None,
            weights: None,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ExtendConfig {
    alpha: f64,
    p: f64,
    k_max: Option<usize>,
    beta: Vec<f64>,
    weights: Option<Vec<f64>>,
}

impl Default for ExtendConfig {
    fn default() -> Self {
        ExtendConfig {
            alpha: 0.65,
            p: 6.0,
            k_max: None,
            beta: exotic::DEFAULT_BETA_GRID.to_vec(),
            weights: None,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct BandConfig {
    q: f64,
    p: f64,
    k_max: usize,
    k_min: usize,
}

impl Default for BandConfig {
    fn default() -> Self {
        BandConfig {
            q: 2.0,
            p: 4.0,
            k_max: 6,
            k_min: 1,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct CertifyConfig {
    q: f64,
    p: f64,
    alpha: f64,
    k_max: Option<usize>,
    growth_k_max: usize,
    weights: Option<Vec<f64>>,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            q: 2.0,
            p: 6.0,
            alpha: 0.65,
            k_max: None,
            growth_k_max: 6,
            weights: None,
        }
    }
}

struct Outcome {
    parameters: Value,
    results: Value,
    verdict: String,
    pass: bool,
    tables: Vec<(String, String)>,
}

/// Runs one operation on `model` with a JSON configuration (`null` or `{}`
/// selects every default).
pub fn run(op: Operation, model: GroupoidModel, config: &Value, opts: RunOptions) -> Result<RunOutput> {
    let model = match opts.budget {
        Some(b) => model.with_enumeration_limit(b as usize),
        None => model,
    };
    let model = model.into_shared();
    let out = match op {
        Operation::Growth => run_growth(&model, parse_config(config)?, opts)?,
        Operation::Delta => run_delta(&model, parse_config(config)?, opts)?,
        Operation::Pdcheck => run_pdcheck(&model, parse_config(config)?, opts)?,
        Operation::Gns => run_gns(&model, parse_config(config)?)?,
        Operation::Haagerup => run_haagerup(&model, parse_config(config)?)?,
        Operation::Bandcheck => run_bandcheck(&model, parse_config(config)?, opts)?,
        Operation::Norm => run_norm(&model, parse_config(config)?)?,
        Operation::Powerseq => run_powerseq(&model, parse_config(config)?)?,
        Operation::Normbound => run_normbound(&model, parse_config(config)?)?,
        Operation::Extend => run_extend(&model, parse_config(config)?)?,
        Operation::Band => run_band(&model, parse_config(config)?, opts)?,
        Operation::Certify => run_certify(&model, parse_config(config)?, opts)?,
    };
    let mut parameters = out.parameters;
    if let Value::Object(map) = &mut parameters {
        map.insert("seed".into(), json!(opts.seed));
        map.insert("budget".into(), json!(opts.budget));
    }
    Ok(RunOutput {
        report: Report {
            tool_version: TOOL_VERSION.to_string(),
            model_digest: model.digest().to_string(),
            operation: op.name().to_string(),
            parameters,
            results: out.results,
            verdict: out.verdict,
        },
        tables: out.tables,
        pass: out.pass,
    })
}

fn run_growth(m: &Arc<GroupoidModel>, cfg: GrowthConfig, opts: RunOptions) -> Result<Outcome> {
    let g = growth_stats_seeded(m, cfg.k_max, cfg.k_min, opts.seed)?;
    let fit = &g.rows[g.k_min..=g.k_max];
    let pass = fit.iter().all(|r| r.sup_sphere as f64 <= g.r.powi(r.k as i32))
        && fit.iter().all(|r| r.inf_ball as f64 >= g.d * g.r_prime.powi(r.k as i32));
    let flag = if g.exponential { "exponential" } else { "subexponential, growth hypotheses unmet" };
    let mut results = serde_json::to_value(&g)?;
    results["growth_class"] = json!(flag);
    Ok(Outcome {
        parameters: serde_json::to_value(&cfg)?,
        results,
        verdict: pass_label(pass).into(),
        pass,
        tables: vec![("growth".into(), table_from(|w| g.write_csv(w))?)],
    })
}

fn run_delta(m: &Arc<GroupoidModel>, cfg: DeltaConfig, opts: RunOptions) -> Result<Outcome> {
    let budget = opts.budget.map_or(metric::DEFAULT_QUADRUPLE_BUDGET, |b| b as u128);
    let est = match cfg.unit {
        Some(u) => metric::hyperbolicity_delta_budget(m, UnitId(u), cfg.radius, budget)?,
        None => metric::model_hyperbolicity_delta(m, cfg.radius, budget, opts.seed)?,
    };
    let pass = est.delta >= 0.0;
    Ok(Outcome {
        parameters: serde_json::to_value(&cfg)?,
        results: serde_json::to_value(&est)?,
        verdict: pass_label(pass).into(),
        pass,
        tables: Vec::new(),
    })
}

fn run_pdcheck(m: &Arc<GroupoidModel>, cfg: PdConfig, opts: RunOptions) -> Result<Outcome> {
    let kernel = Kernel::from_spec(m, &cfg.kernel)?;
    let ball = m.enumerate_ball(UnitId(cfg.unit), cfg.radius)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut tuples = vec![ball.clone()];
    tuples.extend(random_tuples(&ball, cfg.random_tuples, cfg.max_tuple, &mut rng));
    let reports = tuples
        .iter()
        .map(|t| kernels::psd_check(&kernel, m, t, cfg.tol))
        .collect::<Result<Vec<_>>>()?;
    let pass = reports.iter().all(|r| r.pass);
    let min_eig = reports.iter().map(|r| r.min_eig).fold(f64::INFINITY, f64::min);
    let table = csv_table(
        &["tuple", "size", "min_eig", "pass"],
        reports
            .iter()
            .enumerate()
            .map(|(i, r)| vec![i.to_string(), r.size.to_string(), format!("{:.17e}", r.min_eig), r.pass.to_string()]),
    )?;
    Ok(Outcome {
        parameters: serde_json::to_value(&cfg)?,
        results: json!({ "tuples": reports.len(), "exhaustive_size": ball.len(), "min_eig": min_eig, "reports": reports }),
        verdict: pass_label(pass).into(),
        pass,
        tables: vec![("psd".into(), table)],
    })
}

fn run_gns(m: &Arc<GroupoidModel>, cfg: GnsConfig) -> Result<Outcome> {
    let kernel = Kernel::from_spec(m, &cfg.kernel)?;
    let u = UnitId(cfg.unit);
    let data = kernels::gns_build(&kernel, m, u, cfg.radius, cfg.null_tol)?;
    let mut rows = Vec::new();
    let mut max_recovery: f64 = 0.0;
    let mut max_isometry: f64 = 0.0;
    for x in &data.basis {
        let recovered = kernels::matrix_coeff_recovery(&kernel, m, x, cfg.radius)?;
        let err = (recovered - kernel.eval(m, x)?).norm();
        let dev = kernels::gns_rep_matrix(&kernel, m, x, cfg.radius)?.isometry_deviation();
        max_recovery = max_recovery.max(err);
        max_isometry = max_isometry.max(dev);
        rows.push(vec![m.label(x), format!("{:.17e}", err), format!("{:.17e}", dev)]);
    }
    let pass = max_recovery <= 1e-12 && max_isometry < 1e-10;
    Ok(Outcome {
        parameters: serde_json::to_value(&cfg)?,
        results: json!({
            "basis_size": data.basis.len(),
            "min_eig": data.min_eig(),
            "null_dimension": data.null_dimension,
            "quotient_dimension": data.quotient_dimension(),
            "eigenvalues": data.eigenvalues,
            "max_recovery_error": max_recovery,
            "max_isometry_deviation": max_isometry,
        }),
        verdict: pass_label(pass).into(),
        pass,
        tables: vec![("gns".into(), csv_table(&["element", "recovery_error", "isometry_deviation"], rows)?)],
    })
}

fn run_haagerup(m: &Arc<GroupoidModel>, cfg: HaagerupConfig) -> Result<Outcome> {
    let r = kernels::haagerup_witness_check(m, &cfg.n, &cfg.k, &cfg.eps)?;
    let table = csv_table(
        &["n", "k", "sup_deviation", "bound"],
        r.deviations
            .iter()
            .map(|d| vec![d.n.to_string(), d.k.to_string(), format!("{:.17e}", d.sup_deviation), format!("{:.17e}", d.bound)]),
    )?;
    Ok(Outcome {
        parameters: serde_json::to_value(&cfg)?,
        results: serde_json::to_value(&r)?,
        verdict: pass_label(r.pass).into(),
        pass: r.pass,
        tables: vec![("haagerup".into(), table)],
    })
}

fn run_bandcheck(m: &Arc<GroupoidModel>, cfg: BandCheckConfig, opts: RunOptions) -> Result<Outcome> {
    let c = match cfg.c {
        Some(c) => c,
        None => overlap_constant(m, cfg.delta)?,
    };
    let u = UnitId(cfg.unit);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut reports = Vec::with_capacity(cfg.pairs);
    let mut rows = Vec::new();
    for i in 0..cfg.pairs {
        let (f, g) = random_band_pair(m, cfg.k, cfg.n, u, &mut rng)?;
        let r = band_check(&f, &g, cfg.k, cfg.n, u, c)?;
        for row in &r.rows {
            rows.push(vec![i.to_string(), row.m.to_string(), format!("{:.17e}", row.l1_mass), format!("{:.17e}", row.ratio)]);
        }
        reports.push(r);
    }
    let support_ok = reports.iter().all(|r| r.support_in_band);
    let bound_ok = reports.iter().all(|r| r.l1_bound_holds);
    let max_ratio = reports
        .iter()
        .flat_map(|r| r.rows.iter().map(|x| x.ratio))
        .fold(0.0, f64::max);
    let pass = support_ok && bound_ok;
    Ok(Outcome {
        parameters: serde_json::to_value(&cfg)?,
        results: json!({
            "c": c,
            "pairs": reports.len(),
            "support_in_band": support_ok,
            "l1_bound_holds": bound_ok,
            "bound_violations": reports.iter().filter(|r| !r.l1_bound_holds).count(),
            "max_ratio": max_ratio,
        }),
        verdict: pass_label(pass).into(),
        pass,
        tables: vec![("band".into(), csv_table(&["pair", "m", "l1_mass", "ratio"], rows)?)],
    })
}

fn run_norm(m: &Arc<GroupoidModel>, cfg: NormConfig) -> Result<Outcome> {
    let f = cfg.function.build(m)?;
    let params = NormParams {
        ladder: cfg.ladder.clone(),
        max_iter: cfg.max_iter,
        tol: cfg.tol,
    };
    let est = match cfg.unit {
        Some(u) => spectral::reduced_norm_at_unit(&f, UnitId(u), &params)?,
        None => spectral::reduced_norm(&f, &params)?,
    };
    let pass = est.monotone;
    Ok(Outcome {
        parameters: serde_json::to_value(&cfg)?,
        results: serde_json::to_value(&est)?,
        verdict: pass_label(pass).into(),
        pass,
        tables: vec![("norm_trace".into(), table_from(|w| est.write_csv(w))?)],
    })
}

fn run_powerseq(m: &Arc<GroupoidModel>, cfg: PowerSeqConfig) -> Result<Outcome> {
    let f = cfg.function.build(m)?;
    let mu = measure(m, &cfg.weights)?;
    let ps = spectral::power_sequence_norm(&f, cfg.n_max, &mu)?;
    let pass = f.is_zero() || ps.entries.iter().all(|e| e.value.is_finite() && e.value > 0.0);
    Ok(Outcome {
        parameters: serde_json::to_value(&cfg)?,
        results: serde_json::to_value(&ps)?,
        verdict: pass_label(pass).into(),
        pass,
        tables: vec![("powerseq".into(), table_from(|w| ps.write_csv(w))?)],
    })
}

fn run_normbound(m: &Arc<GroupoidModel>, cfg: NormBoundConfig) -> Result<Outcome> {
    let mu = measure(m, &cfg.weights)?;
    let c = match cfg.c {
        Some(c) => c,
        None => measured_overlap(m)?.2,
    };
    let params = NormParams::with_ladder(&cfg.ladder);
    let mut reports = Vec::new();
    for &alpha in &cfg.alpha {
        for &k in &cfg.k {
            for &p in &cfg.p {
                reports.push(spectral::verify_norm_bound(m, &mu, alpha, k, p, c, &params)?);
            }
        }
    }
    let pass = reports.iter().all(|r| r.pass);
    let table = csv_table(
        &["alpha", "k", "p", "lhs", "rhs", "slack"],
        reports.iter().map(|r| {
            vec![
                r.alpha.to_string(),
                r.k.to_string(),
                r.p.to_string(),
                format!("{:.17e}", r.lhs),
                format!("{:.17e}", r.rhs),
                format!("{:.17e}", r.slack),
            ]
        }),
    )?;
    let summary: Vec<Value> = reports
        .iter()
        .map(|r| json!({ "alpha": r.alpha, "k": r.k, "p": r.p, "q": r.q, "lhs": r.lhs, "rhs": r.rhs, "slack": r.slack, "pass": r.pass }))
        .collect();
    Ok(Outcome {
        parameters: serde_json::to_value(&cfg)?,
        results: json!({ "c": c, "checks": summary }),
        verdict: pass_label(pass).into(),
        pass,
        tables: vec![("normbound".into(), table)],
    })
}

fn run_extend(m: &Arc<GroupoidModel>, cfg: ExtendConfig) -> Result<Outcome> {
    let mu = measure(m, &cfg.weights)?;
    let k_max = cfg.k_max.unwrap_or_else(|| exotic::default_k(m));
    let r = extension_criteria(m, &mu, cfg.alpha, cfg.p, k_max, &cfg.beta)?;
    let table = csv_table(
        &["k", "cond2", "cond3_partial"],
        r.cond2_trace
            .iter()
            .zip(&r.cond3_partial)
            .map(|(c2, c3)| vec![c2.k.to_string(), format!("{:.17e}", c2.value), format!("{:.17e}", c3)]),
    )?;
    let verdict = match r.verdict {
        Verdict::Extends => "Extends",
        Verdict::FailsToExtend => "FailsToExtend",
        Verdict::Inconclusive => "Inconclusive",
    };
    Ok(Outcome {
        parameters: serde_json::to_value(&cfg)?,
        results: serde_json::to_value(&r)?,
        verdict: verdict.into(),
        pass: true,
        tables: vec![("extension".into(), table)],
    })
}

fn run_band(m: &Arc<GroupoidModel>, cfg: BandConfig, opts: RunOptions) -> Result<Outcome> {
    let g = growth_stats_seeded(m, cfg.k_max, cfg.k_min, opts.seed)?;
    let band = threshold_band(&g, cfg.q, cfg.p)?;
    Ok(Outcome {
        parameters: serde_json::to_value(&cfg)?,
        results: serde_json::to_value(&band)?,
        verdict: if band.nonempty { "nonempty" } else { "empty" }.into(),
        pass: true,
        tables: vec![("growth".into(), table_from(|w| g.write_csv(w))?)],
    })
}

fn run_certify(m: &Arc<GroupoidModel>, cfg: CertifyConfig, opts: RunOptions) -> Result<Outcome> {
    let mu = measure(m, &cfg.weights)?;
    let g = growth_stats_seeded(m, cfg.growth_k_max, 1, opts.seed)?;
    let k_max = cfg.k_max.unwrap_or_else(|| exotic::default_k(m));
    let cert = certificate(m, &mu, &g, cfg.q, cfg.p, cfg.alpha, k_max)?;
    let pass = cert.status == exotic::CertificateStatus::Certified;
    let table = csv_table(
        &["k", "witness_ratio"],
        cert.witness_ratios
            .iter()
            .map(|w| vec![w.k.to_string(), format!("{:.17e}", w.ratio)]),
    )?;
    Ok(Outcome {
        parameters: serde_json::to_value(&cfg)?,
        results: serde_json::to_value(&cert)?,
        verdict: if pass { "Certified" } else { "Inconclusive" }.into(),
        pass,
        tables: vec![("witness".into(), table)],
    })
}
