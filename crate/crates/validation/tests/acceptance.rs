//! Acceptance criteria, one line per criterion. Each check uses an oracle
//! computed independently of the library path it tests.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use exotic_core::exotic::{self, extension_criteria, phi_chi_norm, witness_ratio, CertificateStatus, Verdict, DEFAULT_BETA_GRID};
use exotic_core::group::Word;
use exotic_core::kernels::{self, Kernel};
use exotic_core::metric::{self, band_check, growth_stats, overlap_constant};
use exotic_core::report::{self, random_band_pair, random_tuples, Operation, RunOptions};
use exotic_core::spectral::{self, NormParams};
use exotic_core::{CcFunction, GroupElem, GroupoidModel, MeasureContext, UnitId};
use nalgebra::DMatrix;
use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

const SEED: u64 = 20_240_601;
const ACTION_SEED: u64 = 32;

type Outcome = Result<String, String>;

fn f2() -> Arc<GroupoidModel> {
    GroupoidModel::free_group(2).unwrap().into_shared()
}

fn z() -> Arc<GroupoidModel> {
    GroupoidModel::free_group(1).unwrap().into_shared()
}

/// `F_2` acting on 32 points by seeded random permutations.
fn f2_on_32() -> Arc<GroupoidModel> {
    GroupoidModel::random_free_action(2, 32, ACTION_SEED).unwrap().into_shared()
}

fn check(cond: bool, what: String, failures: &mut Vec<String>) {
    if !cond {
        failures.push(what);
    }
}

fn finish(detail: String, failures: Vec<String>) -> Outcome {
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", failures.join("; ")))
    }
}

fn within(elapsed: Duration, limit_s: u64, failures: &mut Vec<String>) -> String {
    check(
        elapsed.as_secs_f64() < limit_s as f64,
        format!("runtime {:.2}s exceeds {limit_s}s", elapsed.as_secs_f64()),
        failures,
    );
    format!("{:.2}s", elapsed.as_secs_f64())
}

/// Reduced words of length `k` in `rank` generators, listed by direct
/// recursion over letter codes `2i` (generator) and `2i + 1` (inverse).
fn oracle_reduced_words(rank: u8, k: usize) -> Vec<Vec<u8>> {
    fn extend(rank: u8, k: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        for l in 0..2 * rank {
            if prefix.last().is_some_and(|&p| p ^ 1 == l) {
                continue;
            }
            prefix.push(l);
            extend(rank, k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    extend(rank, k, &mut Vec::new(), &mut out);
    out
}

fn binomial(n: u64, k: u64) -> BigUint {
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// `C(8n, 4n)^{1/8n}` evaluated through the decimal digits of the exact integer.
fn central_binomial_root(n: u64) -> f64 {
    let c = binomial(8 * n, 4 * n).to_string();
    let digits = c.len() as f64;
    let mantissa: f64 = format!("0.{}", &c[..c.len().min(17)]).parse().unwrap();
    ((mantissa.ln() + digits * std::f64::consts::LN_10) / (8 * n) as f64).exp()
}

/// Top eigenvalue of the radial reduction of `χ_{W_1}` on the `F_2` ball of
/// radius `l`: tridiagonal with off-diagonal `2, √3, √3, …`.
fn radial_tree_norm(l: usize) -> f64 {
    let mut t = DMatrix::<f64>::zeros(l + 1, l + 1);
    for j in 0..l {
        let w = if j == 0 { 2.0 } else { 3f64.sqrt() };
        t[(j, j + 1)] = w;
        t[(j + 1, j)] = w;
    }
    t.symmetric_eigenvalues().iter().copied().fold(f64::MIN, f64::max)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let m = f2();
    for k in 1..=8 {
        let sphere = m.enumerate_sphere(UnitId(0), k).unwrap();
        let oracle: BTreeSet<Word> = oracle_reduced_words(2, k).into_iter().map(Word::from_letters).collect();
        let got: BTreeSet<Word> = sphere
            .iter()
            .map(|g| match g.group_elem() {
                GroupElem::Word(w) => w.clone(),
                GroupElem::Id(_) => unreachable!(),
            })
            .collect();
        check(sphere.len() == 4 * 3usize.pow(k as u32 - 1), format!("|W_{k}| = {}", sphere.len()), &mut failures);
        check(got == oracle && got.len() == sphere.len(), format!("W_{k} differs from the recursive oracle"), &mut failures);
    }
    let t = f2_on_32();
    for u in t.unit_ids() {
        for k in 1..=8 {
            let n = t.enumerate_sphere(u, k).unwrap().len();
            check(n == oracle_reduced_words(2, k).len(), format!("unit {u}: |W_{k}| = {n}"), &mut failures);
        }
    }
    let time = within(start.elapsed(), 10, &mut failures);
    finish(format!("|W_k| = 4·3^(k-1) for k = 1..8 on F_2 and all 32 units ({time})"), failures)
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let d_f2 = metric::hyperbolicity_delta(&f2(), UnitId(0), 3).unwrap();
    let d_z = metric::hyperbolicity_delta(&z(), UnitId(0), 4).unwrap();
    check(d_f2.delta == 0.0 && d_f2.exhaustive, format!("F_2 δ = {}", d_f2.delta), &mut failures);
    check(d_z.delta == 0.0 && d_z.exhaustive, format!("Z δ = {}", d_z.delta), &mut failures);
    let time = within(start.elapsed(), 60, &mut failures);
    finish(
        format!("δ(F_2, r=3) = {} over {} quadruples, δ(Z, r=4) = {} ({time})", d_f2.delta, d_f2.quadruples_checked, d_z.delta),
        failures,
    )
}

fn criterion_3() -> Outcome {
    let mut failures = Vec::new();
    let m = f2();
    let b2 = m.enumerate_ball(UnitId(0), 2).unwrap();
    let b3 = m.enumerate_ball(UnitId(0), 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let tuples = random_tuples(&b3, 100, 10, &mut rng);
    let mut worst = f64::INFINITY;
    for alpha in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let k = Kernel::exp_length(alpha).unwrap();
        for t in std::iter::once(&b2).chain(tuples.iter()) {
            let r = kernels::psd_check(&k, &m, t, kernels::DEFAULT_PSD_TOL).unwrap();
            worst = worst.min(r.min_eig);
            check(r.pass, format!("α = {alpha}, size {}: min_eig {:e}", r.size, r.min_eig), &mut failures);
        }
    }
    finish(
        format!("B_2 ({} elements) and 100 random tuples for 5 values of α; min eigenvalue {worst:.3e}", b2.len()),
        failures,
    )
}

fn criterion_4() -> Outcome {
    let mut failures = Vec::new();
    let m = f2();
    let c = overlap_constant(&m, 0.0).unwrap();
    check(c == 5, format!("C = {c}"), &mut failures);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut max_ratio: f64 = 0.0;
    let mut violations = 0;
    for i in 0..50 {
        let (f, g) = random_band_pair(&m, 3, 2, UnitId(0), &mut rng).unwrap();
        let r = band_check(&f, &g, 3, 2, UnitId(0), c).unwrap();
        // Independent recount of the support from the raw product.
        let prod = f.convolve(&g).unwrap();
        let outside = prod.iter().filter(|(x, _)| !(1..=5).contains(&m.length(x))).count();
        check(outside == 0 && r.support_in_band, format!("pair {i}: {outside} terms outside [1, 5]"), &mut failures);
        for row in &r.rows {
            max_ratio = max_ratio.max(row.ratio);
        }
        if !r.l1_bound_holds {
            violations += 1;
        }
    }
    check(violations == 0, format!("ℓ¹ bound with C = 5 violated in {violations} of 50 pairs"), &mut failures);
    finish(format!("50 pairs, C = {c}, max |(f∗g)χ_m|₁/|f|₁ = {max_ratio:.4}"), failures)
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let m = z();
    let mu = MeasureContext::uniform(&m);
    let f = CcFunction::sphere_indicator(&m, 1).unwrap();
    let ps = spectral::power_sequence_norm(&f, 5, &mu).unwrap();
    for e in &ps.entries {
        let oracle = central_binomial_root(e.n as u64);
        check(
            (e.value - oracle).abs() <= 1e-9 * oracle,
            format!("value_{} = {} but the exact oracle gives {}", e.n, e.value, oracle),
            &mut failures,
        );
    }
    let v1 = ps.value(1).unwrap();
    let v5 = ps.value(5).unwrap();
    check((v1 - 70f64.powf(0.125)).abs() <= 1e-9 * v1, format!("value_1 = {v1}"), &mut failures);
    check(
        (v5 - 2.0).abs() <= 0.05 * 2.0,
        format!("value_5 = {v5:.7} is {:.3}% from 2 (limit 5%)", 100.0 * (2.0 - v5).abs() / 2.0),
        &mut failures,
    );
    let est = spectral::reduced_norm(&f, &NormParams::single(64)).unwrap();
    check((est.value - 2.0).abs() <= 0.01 * 2.0, format!("L = 64 estimate {}", est.value), &mut failures);
    let time = within(start.elapsed(), 30, &mut failures);
    finish(
        format!("value_1 = {v1:.9}, value_5 = {v5:.7}, L=64 norm = {:.6} (converged: {}) ({time})", est.value, est.converged),
        failures,
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let m = f2();
    let mu = MeasureContext::uniform(&m);
    let f = CcFunction::sphere_indicator(&m, 1).unwrap();
    let est = spectral::reduced_norm(&f, &NormParams::default()).unwrap();
    let target = 2.0 * 3f64.sqrt();
    check(
        est.trace.windows(2).all(|w| w[1].value >= w[0].value),
        format!("trace not monotone: {:?}", est.trace.iter().map(|t| t.value).collect::<Vec<_>>()),
        &mut failures,
    );
    for t in &est.trace {
        let oracle = radial_tree_norm(t.l);
        check((t.value - oracle).abs() <= 1e-8, format!("L = {}: {} vs radial oracle {}", t.l, t.value, oracle), &mut failures);
    }
    check((est.value - target).abs() <= 0.05 * target, format!("L = 12 estimate {}", est.value), &mut failures);
    let v3 = spectral::power_sequence_norm(&f, 3, &mu).unwrap().value(3).unwrap();
    check((v3 - est.value).abs() <= 0.15 * est.value, format!("value_3 = {v3} vs {}", est.value), &mut failures);
    let time = within(start.elapsed(), 300, &mut failures);
    let trace: Vec<String> = est.trace.iter().map(|t| format!("{:.5}", t.value)).collect();
    finish(format!("trace [{}], value_3 = {v3:.5} ({time})", trace.join(", ")), failures)
}

fn criterion_7() -> Outcome {
    let mut failures = Vec::new();
    let mut count = 0;
    let mut min_slack = f64::INFINITY;
    for (name, m) in [("F_2", f2()), ("Z", z())] {
        let mu = MeasureContext::uniform(&m);
        let (_, _, c) = exotic::measured_overlap(&m).unwrap();
        for alpha in [0.3, 0.5, 0.7] {
            for k in [1, 2, 3] {
                for p in [2.0, 4.0] {
                    let r = spectral::verify_norm_bound(&m, &mu, alpha, k, p, c, &NormParams::with_ladder(&[6, 8])).unwrap();
                    count += 1;
                    min_slack = min_slack.min(r.slack);
                    check(r.pass, format!("{name} α={alpha} k={k} p={p}: {} > {}", r.lhs, r.rhs), &mut failures);
                }
            }
        }
    }
    finish(format!("{count} grid points, minimum slack {min_slack:.4}"), failures)
}

fn criterion_8() -> Outcome {
    let mut failures = Vec::new();
    let m = f2();
    let ball = m.enumerate_ball(UnitId(0), 2).unwrap();
    let mut worst_rec: f64 = 0.0;
    let mut worst_iso: f64 = 0.0;
    for k in [Kernel::exp_length(0.5).unwrap(), Kernel::exp_length(0.8).unwrap(), Kernel::haagerup(3).unwrap()] {
        for x in &ball {
            let rec = kernels::matrix_coeff_recovery(&k, &m, x, 2).unwrap();
            let err = (rec - k.eval(&m, x).unwrap()).norm();
            worst_rec = worst_rec.max(err);
            check(err <= 1e-12, format!("{:?} at {}: recovery error {err:e}", k, m.label(x)), &mut failures);
            let dev = kernels::gns_rep_matrix(&k, &m, x, 2).unwrap().isometry_deviation();
            worst_iso = worst_iso.max(dev);
            check(dev < 1e-10, format!("{:?} at {}: isometry deviation {dev:e}", k, m.label(x)), &mut failures);
        }
    }
    finish(format!("max recovery error {worst_rec:.2e}, max isometry deviation {worst_iso:.2e}"), failures)
}

fn criterion_9() -> Outcome {
    let mut failures = Vec::new();
    let r = kernels::haagerup_witness_check(&f2(), &[1, 2, 4, 8], &[0, 2, 4], &[0.1, 0.01]).unwrap();
    for s in &r.supports {
        let radius = (s.n as f64 * (1.0 / s.eps).ln()).ceil() as usize;
        check(s.radius == radius, format!("n={} ε={}: radius {} vs {radius}", s.n, s.eps, s.radius), &mut failures);
    }
    check(r.units_normalized, "units not normalized".into(), &mut failures);
    check(r.deviations.iter().all(|d| d.ok), "uniform convergence bound fails".into(), &mut failures);
    check(r.deviation_decreasing_in_n, "deviation not decreasing in n".into(), &mut failures);
    check(r.supports.iter().all(|s| s.ok), "decay outside the ball fails".into(), &mut failures);
    finish(format!("{} deviation checks, {} support checks", r.deviations.len(), r.supports.len()), failures)
}

fn criterion_10() -> Outcome {
    let mut failures = Vec::new();
    let mut details = Vec::new();
    for (name, m) in [("F_2", f2()), ("F_2 ⋉ 32", f2_on_32())] {
        let mu = MeasureContext::uniform(&m);
        let ext = extension_criteria(&m, &mu, 0.65, 6.0, 64, &DEFAULT_BETA_GRID).unwrap();
        check(ext.verdict == Verdict::Extends, format!("{name}: verdict {:?}", ext.verdict), &mut failures);
        check(ext.majorant_ratio < 0.23, format!("{name}: majorant ratio {}", ext.majorant_ratio), &mut failures);
        check(
            (ext.majorant_ratio - 3.0 * 0.65f64.powi(6)).abs() < 1e-15,
            format!("{name}: majorant ratio {} vs 3·0.65⁶", ext.majorant_ratio),
            &mut failures,
        );
        let (_, _, c) = exotic::measured_overlap(&m).unwrap();
        let ratios: Vec<f64> = (0..=64).map(|k| witness_ratio(&m, &mu, 0.65, 2.0, k, c)).collect();
        let first = ratios.iter().position(|&r| r > 1.0);
        check(first.is_some_and(|k| k <= 60), format!("{name}: witness ratio first exceeds 1 at {first:?}"), &mut failures);
        check(ratios[30..].windows(2).all(|w| w[1] > w[0]), format!("{name}: witness ratio not increasing from k = 30"), &mut failures);

        let growth = growth_stats(&m, 6, 1).unwrap();
        let cert = exotic::certificate(&m, &mu, &growth, 2.0, 6.0, 0.65, 64).unwrap();
        check(
            cert.status == CertificateStatus::Certified && cert.extension_leg_passes && cert.divergence_leg_passes,
            format!("{name}: certificate {:?}", cert.status),
            &mut failures,
        );
        let low = exotic::certificate(&m, &mu, &growth, 2.0, 6.0, 0.5, 64).unwrap();
        check(low.status == CertificateStatus::Inconclusive, format!("{name}: α = 0.5 gives {:?}", low.status), &mut failures);
        let band = exotic::threshold_band(&growth, 2.0, 4.0).unwrap();
        let (lo, hi) = (3f64.powf(-0.5), 3f64.powf(-0.25));
        check(
            (band.lower - lo).abs() <= 1e-9 && (band.upper - hi).abs() <= 1e-9,
            format!("{name}: band ({}, {})", band.lower, band.upper),
            &mut failures,
        );
        details.push(format!(
            "{name}: ratio {:.4}, witness > 1 at k = {}, band ({:.4}, {:.4})",
            ext.majorant_ratio,
            first.map_or("none".into(), |k| k.to_string()),
            band.lower,
            band.upper
        ));
    }
    finish(details.join("; "), failures)
}

fn criterion_11() -> Outcome {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let m = f2();
    let mu = MeasureContext::uniform(&m);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        use rand::Rng;
        let alpha: f64 = rng.gen_range(0.05..1.0);
        let k: usize = rng.gen_range(0..=6);
        let p: f64 = rng.gen_range(1.0..8.0);
        let closed = phi_chi_norm(&m, &mu, alpha, p, k);
        let direct = spectral::weighted_sphere(&m, alpha, k).unwrap().lp_norm(p, &mu).unwrap().value;
        let rel = (closed - direct).abs() / closed;
        worst = worst.max(rel);
        check(rel <= 1e-12, format!("α={alpha} k={k} p={p}: relative gap {rel:e}"), &mut failures);
    }
    finish(format!("20 triples, max relative gap {worst:.2e}"), failures)
}

fn criterion_12(suite_start: Instant) -> Outcome {
    let mut failures = Vec::new();
    let configs = [
        (Operation::Growth, json!({})),
        (Operation::Pdcheck, json!({"random_tuples": 20})),
        (Operation::Bandcheck, json!({"pairs": 10})),
        (Operation::Powerseq, json!({"n_max": 2})),
        (Operation::Extend, json!({})),
        (Operation::Certify, json!({})),
    ];
    for (op, cfg) in &configs {
        let opts = RunOptions { seed: SEED, budget: None };
        let model = || GroupoidModel::random_free_action(2, 4, ACTION_SEED).unwrap();
        let a = report::run(*op, model(), cfg, opts).unwrap();
        let b = report::run(*op, model(), cfg, opts).unwrap();
        check(
            a.report_json().unwrap() == b.report_json().unwrap() && a.tables == b.tables,
            format!("{} report differs between runs", op.name()),
            &mut failures,
        );
    }
    let time = within(suite_start.elapsed(), 600, &mut failures);
    finish(format!("{} operations byte-identical across runs; suite time {time}", configs.len()), failures)
}

fn main() -> ExitCode {
    let suite_start = Instant::now();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("sphere counts", Box::new(criterion_1)),
        ("hyperbolicity", Box::new(criterion_2)),
        ("PSD suite", Box::new(criterion_3)),
        ("band lemma", Box::new(criterion_4)),
        ("norm, Z oracle", Box::new(criterion_5)),
        ("norm, F_2", Box::new(criterion_6)),
        ("norm bound", Box::new(criterion_7)),
        ("GNS", Box::new(criterion_8)),
        ("Haagerup witnesses", Box::new(criterion_9)),
        ("exotic certificate", Box::new(criterion_10)),
        ("cross-path consistency", Box::new(criterion_11)),
        ("wall clock and reproducibility", Box::new(move || criterion_12(suite_start))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS criterion {:>2} ({name}): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {:>2} ({name}): {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
