//! Property suite: the library's invariants on fresh random instances.
//!
//! Every instance derives from the suite seed, so a report is reproducible.

use std::fmt;

use rand::Rng;
use rand_distr::{StandardNormal, Uniform};

use crate::error::Result;
use crate::models::{
    gen_lowrank, gen_sparse, project_lowrank, project_sparse, Signal, SignalModel,
};
use crate::pbp::{back_project, distance, ProjectionBound, SupportBound};
use crate::quantize::{quantize_scalar, DitherMode, QuantizedMap};
use crate::rng::{derive_seed, seeded_rng};
use crate::sensing::{dot, norm, OperatorKind, SensingOperator};

/// Scalar quantizer under test, `(t, δ) ↦ Q(t)`.
pub type Quantizer = fn(f64, f64) -> f64;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "property suite, seed {}", self.seed)?;
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "[{tag}] {}: {}", c.name, c.detail)?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

fn library_quantizer(t: f64, delta: f64) -> f64 {
    quantize_scalar(t, delta).unwrap_or(f64::NAN)
}

/// Runs the suite with the library quantizer.
pub fn run_property_suite(seed: u64) -> Result<PropertyReport> {
    run_property_suite_with(seed, library_quantizer)
}

/// Runs the suite with `quantizer` substituted in the quantizer checks.
pub fn run_property_suite_with(seed: u64, quantizer: Quantizer) -> Result<PropertyReport> {
    let sub = |tag: u64| derive_seed(seed, &[tag]);
    let checks = vec![
        check_bracket(sub(1), quantizer),
        check_unbiased(sub(2), quantizer),
        check_rational_identity(sub(3), quantizer),
        check_adjoint(sub(4))?,
        check_dct(sub(5))?,
        check_hard_threshold(sub(6))?,
        check_svd_truncation(sub(7))?,
        check_support_step(sub(8))?,
        check_projection_bound(sub(9))?,
    ];
    Ok(PropertyReport { seed, checks })
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        name,
        passed,
        detail,
    }
}

fn random_delta(rng: &mut impl Rng) -> f64 {
    2f64.powf(rng.random_range(-4.0..4.0))
}

fn check_bracket(seed: u64, q: Quantizer) -> CheckOutcome {
    let mut rng = seeded_rng(seed);
    let n = 10_000;
    let mut bad = 0;
    for _ in 0..n {
        let delta = random_delta(&mut rng);
        let t: f64 = rng.random_range(-50.0..50.0);
        let v = q(t, delta);
        let k = (v / delta).round();
        let on_lattice = (v - k * delta).abs() <= 1e-9 * delta.max(v.abs());
        if !(t - delta < v && v <= t && on_lattice) {
            bad += 1;
        }
    }
    outcome(
        "quantizer-bracket",
        bad == 0,
        format!("t - delta < Q(t) <= t on the lattice: {bad}/{n} violations"),
    )
}

fn check_unbiased(seed: u64, q: Quantizer) -> CheckOutcome {
    const PAIRS: u64 = 20;
    const DRAWS: usize = 1_000_000;
    let mut worst: f64 = 0.0;
    for i in 0..PAIRS {
        let mut rng = seeded_rng(derive_seed(seed, &[i]));
        let delta = random_delta(&mut rng);
        let t: f64 = rng.random_range(-10.0..10.0);
        let dist = Uniform::new(0.0, delta).expect("positive resolution");
        let sum: f64 = (&mut rng)
            .sample_iter(dist)
            .take(DRAWS)
            .map(|xi| q(t + xi, delta))
            .sum();
        let dev = (sum / DRAWS as f64 - t).abs() / delta;
        worst = worst.max(dev);
    }
    outcome(
        "quantizer-unbiased",
        worst <= 0.002,
        format!("max |mean Q(t+xi) - t| / delta = {worst:.2e} over {PAIRS} pairs x {DRAWS} draws (limit 2e-3)"),
    )
}

/// `E⌊λ + d⌋` for `λ = p/q`, `d ~ U[0, 1)`, integrated exactly: the integrand
/// is constant between the breakpoints, and each constant is read off the
/// quantizer at the segment midpoint. Lengths are multiples of `1/q`, so the
/// result is the integer numerator `Σ value·len·q`, compared against `p`.
fn check_rational_identity(seed: u64, quant: Quantizer) -> CheckOutcome {
    let mut rng = seeded_rng(seed);
    let mut bad = Vec::new();
    for _ in 0..20 {
        let q: i64 = rng.random_range(1..=97);
        let p: i64 = rng.random_range(-500..=500);
        // ⌊λ + d⌋ steps up once, at d = b/q with b = q·⌈λ⌉ - p ∈ [0, q)
        let b = (q - p.rem_euclid(q)) % q;
        let mut numerator: i64 = 0;
        for (lo, hi) in [(0, b), (b, q)] {
            if hi > lo {
                let mid = (lo + hi) as f64 / (2 * q) as f64;
                let value = quant(p as f64 / q as f64 + mid, 1.0);
                numerator += value.round() as i64 * (hi - lo);
            }
        }
        if numerator != p {
            bad.push(format!("{p}/{q}"));
        }
    }
    outcome(
        "quantizer-rational-identity",
        bad.is_empty(),
        if bad.is_empty() {
            "E floor(lambda + d) = lambda exactly on 20 rationals".to_string()
        } else {
            format!("identity fails at {}", bad.join(", "))
        },
    )
}

fn gaussian_vec(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

fn check_adjoint(seed: u64) -> Result<CheckOutcome> {
    let mut rng = seeded_rng(seed);
    let mut worst: f64 = 0.0;
    let kinds = [
        OperatorKind::DenseGaussian,
        OperatorKind::DenseBernoulli,
        OperatorKind::PartialDct,
    ];
    for (i, kind) in kinds.into_iter().enumerate() {
        for j in 0..20 {
            let n = rng.random_range(2..=96);
            let m = rng.random_range(1..=n);
            let op = SensingOperator::build(kind, m, n, derive_seed(seed, &[i as u64, j]))?;
            let u = gaussian_vec(&mut rng, n);
            let v = gaussian_vec(&mut rng, m);
            let pu = op.apply(&u)?;
            let pv = op.apply_adjoint(&v)?;
            let rel =
                (dot(&pu, &v) - dot(&u, &pv)).abs() / (norm(&pu) * norm(&v)).max(f64::MIN_POSITIVE);
            worst = worst.max(rel);
        }
    }
    Ok(outcome(
        "adjoint-identity",
        worst <= 1e-9,
        format!(
            "max relative |<Phi u, v> - <u, Phi^T v>| = {worst:.2e} over 60 operators (limit 1e-9)"
        ),
    ))
}

fn check_dct(seed: u64) -> Result<CheckOutcome> {
    let mut rng = seeded_rng(seed);
    let mut iso: f64 = 0.0;
    let mut agree: f64 = 0.0;
    for j in 0..20 {
        let n = rng.random_range(1..=200);
        let full = SensingOperator::build(OperatorKind::PartialDct, n, n, derive_seed(seed, &[j]))?;
        let x = gaussian_vec(&mut rng, n);
        let y = full.apply(&x)?;
        iso = iso.max((norm(&y) / (n as f64).sqrt() - norm(&x)).abs() / norm(&x));

        let m = rng.random_range(1..=n);
        let part =
            SensingOperator::build(OperatorKind::PartialDct, m, n, derive_seed(seed, &[j, 1]))?;
        let fast = part.apply(&x)?;
        let slow = part.apply_by_rows(&x)?;
        agree = agree.max(distance(&fast, &slow) / norm(&slow).max(1e-300));
        let v = gaussian_vec(&mut rng, m);
        let fast = part.apply_adjoint(&v)?;
        let slow = part.apply_adjoint_by_rows(&v)?;
        agree = agree.max(distance(&fast, &slow) / norm(&slow).max(1e-300));
    }
    Ok(outcome(
        "dct-isometry",
        iso <= 1e-10 && agree <= 1e-10,
        format!("full-row isometry error {iso:.2e}, fast vs closed form {agree:.2e} (limit 1e-10)"),
    ))
}

/// Distance from `z` to its best k-sparse approximation, by enumerating
/// every support of size `k` (`n ≤ 20`).
fn best_sparse_exhaustive(z: &[f64], k: usize) -> f64 {
    (0u32..1 << z.len())
        .filter(|mask| mask.count_ones() as usize == k)
        .map(|mask| {
            z.iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) == 0)
                .map(|(_, v)| v * v)
                .sum::<f64>()
                .sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

fn check_hard_threshold(seed: u64) -> Result<CheckOutcome> {
    let mut rng = seeded_rng(seed);
    let mut worst: f64 = 0.0;
    let mut sparsity_ok = true;
    for _ in 0..1000 {
        let n = rng.random_range(1..=12);
        let k = rng.random_range(1..=n);
        let z = gaussian_vec(&mut rng, n);
        let p = project_sparse(&z, k)?;
        sparsity_ok &= p.iter().filter(|v| **v != 0.0).count() <= k;
        worst = worst.max((distance(&z, &p) - best_sparse_exhaustive(&z, k)).abs());
    }
    Ok(outcome(
        "hard-threshold-oracle",
        sparsity_ok && worst <= 1e-12,
        format!(
            "max distance gap to exhaustive search {worst:.2e} over 1000 instances (limit 1e-12)"
        ),
    ))
}

fn check_svd_truncation(seed: u64) -> Result<CheckOutcome> {
    let mut rng = seeded_rng(seed);
    let mut losses = 0;
    let mut min_margin = f64::INFINITY;
    for i in 0..50 {
        let n1 = rng.random_range(2..=8);
        let n2 = rng.random_range(2..=8);
        let r = rng.random_range(1..n1.min(n2));
        let z = Signal::matrix(gaussian_vec(&mut rng, n1 * n2), n1, n2)?;
        let best = distance(&z.data, &project_lowrank(&z, r)?.data);
        for j in 0..200u64 {
            let cand = if j % 2 == 0 {
                let scale = rng.random_range(0.1..3.0);
                let mut c = gen_lowrank(n1, n2, r, derive_seed(seed, &[i, j]))?;
                c.data.iter_mut().for_each(|v| *v *= scale);
                c
            } else {
                // near-optimal competitor: truncation of a perturbed matrix
                let eps = 10f64.powf(rng.random_range(-6.0..-1.0));
                let noisy: Vec<f64> = z
                    .data
                    .iter()
                    .map(|v| v + eps * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                project_lowrank(&Signal::matrix(noisy, n1, n2)?, r)?
            };
            let margin = distance(&z.data, &cand.data) - best;
            min_margin = min_margin.min(margin);
            if margin < -1e-12 {
                losses += 1;
            }
        }
    }
    Ok(outcome(
        "svd-truncation-dominance",
        losses == 0,
        format!(
            "{losses} of 10000 rank-r candidates beat the truncation; min margin {min_margin:.2e}"
        ),
    ))
}

fn random_map(rng: &mut impl Rng, seed: u64, n: usize) -> Result<QuantizedMap> {
    let kind = [
        OperatorKind::DenseGaussian,
        OperatorKind::DenseBernoulli,
        OperatorKind::PartialDct,
    ][rng.random_range(0..3)];
    let m = rng.random_range(1..=n);
    let op = SensingOperator::build(kind, m, n, derive_seed(seed, &[0]))?;
    let mode = if rng.random_bool(0.5) {
        DitherMode::Uniform
    } else {
        DitherMode::None
    };
    QuantizedMap::new(op, random_delta(rng), mode, derive_seed(seed, &[1]))
}

fn check_support_step(seed: u64) -> Result<CheckOutcome> {
    let mut rng = seeded_rng(seed);
    let trials = 300;
    let mut bad = 0;
    let mut tightest: f64 = 0.0;
    for i in 0..trials {
        let n = rng.random_range(4..=128);
        let k = rng.random_range(1..=n / 4);
        let map = random_map(&mut rng, derive_seed(seed, &[i, 0]), n)?;
        let x = gen_sparse(n, k, derive_seed(seed, &[i, 1]))?;
        let a = back_project(map.op(), &map.observe(&x.data)?)?;
        let xhat = project_sparse(&a, k)?;
        let b = SupportBound::compute(&x.data, &xhat, &a);
        if !b.holds() {
            bad += 1;
        }
        if b.bound > 0.0 {
            tightest = tightest.max(b.error / b.bound);
        }
    }
    Ok(outcome(
        "support-step-inequality",
        bad == 0,
        format!("||x - xhat|| <= 2||x - a_T||: {bad}/{trials} violations, max ratio {tightest:.3}"),
    ))
}

fn check_projection_bound(seed: u64) -> Result<CheckOutcome> {
    let mut rng = seeded_rng(seed);
    let trials = 60;
    let mut bad = 0;
    for i in 0..trials {
        let model = if i % 2 == 0 {
            let n = rng.random_range(4..=64);
            SignalModel::sparse(n, rng.random_range(1..=n / 2))?
        } else {
            let n1 = rng.random_range(2..=10);
            let n2 = rng.random_range(2..=10);
            SignalModel::low_rank(n1, n2, rng.random_range(1..=n1.min(n2)))?
        };
        let map = random_map(&mut rng, derive_seed(seed, &[i, 0]), model.dim())?;
        let x = model.generate(derive_seed(seed, &[i, 1]))?;
        let a = back_project(map.op(), &map.observe(&x.data)?)?;
        let xhat = model.project(&a)?;
        if !ProjectionBound::compute(&x.data, &xhat.data, &a).holds() {
            bad += 1;
        }
    }
    Ok(outcome(
        "projection-bound",
        bad == 0,
        format!("||xhat - a|| <= ||x - a||: {bad}/{trials} violations"),
    ))
}
