//! Empirical distortion estimators and sweep statistics.
//!
//! The RIP and LPD constants are suprema over infinite sets. The estimators
//! here take the maximum over a Monte Carlo sample drawn with the model
//! generators, so every [`DistortionEstimate`] is a lower bound of the true
//! constant. Per-sample seeds are `derive_seed(seed, [i, ..])`, which makes the
//! result independent of how the sampling loop is scheduled and makes longer
//! runs extend shorter ones.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::harness::{ExperimentKind, TrialRecord};
use crate::models::{Signal, SignalModel};
use crate::quantize::QuantizedMap;
use crate::rng::derive_seed;
use crate::sensing::{dot, norm, SensingOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistortionKind {
    Rip,
    Lpd,
    LocalLpd,
}

/// Sampled supremum of a distortion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionEstimate {
    pub kind: DistortionKind,
    pub value: f64,
    pub samples: usize,
    pub seed: u64,
}

fn unit(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let nrm = norm(&v);
    if nrm == 0.0 || !nrm.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= nrm);
    Some(v)
}

/// `|(1/m)‖Φu‖² - ‖u‖²|`.
pub fn rip_term(op: &SensingOperator, u: &[f64]) -> Result<f64> {
    let phi_u = op.apply(u)?;
    Ok((dot(&phi_u, &phi_u) / op.m() as f64 - dot(u, u)).abs())
}

/// Sample `i` of the RIP estimator: a generated signal for even `i`, the
/// normalized difference of two generated signals for odd `i`.
pub fn rip_sample(model: &SignalModel, seed: u64, i: usize) -> Result<Option<Vec<f64>>> {
    let s = derive_seed(seed, &[i as u64]);
    if i.is_multiple_of(2) {
        return Ok(Some(model.generate(s)?.data));
    }
    let a = model.generate(derive_seed(s, &[0]))?;
    let b = model.generate(derive_seed(s, &[1]))?;
    Ok(unit(
        a.data.iter().zip(&b.data).map(|(p, q)| p - q).collect(),
    ))
}

/// Empirical RIP distortion of `(1/√m)Φ` over `(K - K) ∩ B^n`.
pub fn empirical_rip(
    op: &SensingOperator,
    model: &SignalModel,
    samples: usize,
    seed: u64,
) -> Result<DistortionEstimate> {
    empirical_rip_with(op, model, samples, seed, &[])
}

/// [`empirical_rip`] with caller-supplied directions added to the sample
/// (each normalized to unit length first).
pub fn empirical_rip_with(
    op: &SensingOperator,
    model: &SignalModel,
    samples: usize,
    seed: u64,
    extra: &[&[f64]],
) -> Result<DistortionEstimate> {
    if samples == 0 {
        return Err(Error::InvalidDimension(
            "RIP estimate needs samples >= 1".into(),
        ));
    }
    check_len(op.n(), model.dim())?;
    let sampled = (0..samples)
        .into_par_iter()
        .map(|i| match rip_sample(model, seed, i)? {
            Some(u) => rip_term(op, &u),
            None => Ok(0.0),
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    let mut value = sampled;
    for u in extra {
        if let Some(u) = unit(u.to_vec()) {
            value = value.max(rip_term(op, &u)?);
        }
    }
    Ok(DistortionEstimate {
        kind: DistortionKind::Rip,
        value,
        samples: samples + extra.len(),
        seed,
    })
}

/// `(1/m)|⟨A(u), Φv⟩ - ⟨Φu, Φv⟩|`.
pub fn lpd_term(map: &QuantizedMap, u: &[f64], v: &[f64]) -> Result<f64> {
    let phi_u = map.observe_linear(u)?;
    let mut a_u = phi_u.clone();
    map.quantize_in_place(&mut a_u);
    let phi_v = map.op().apply(v)?;
    Ok(deviation_term(&a_u, &phi_u, &phi_v))
}

fn deviation_term(a_u: &[f64], phi_u: &[f64], phi_v: &[f64]) -> f64 {
    let s: f64 = a_u
        .iter()
        .zip(phi_u)
        .zip(phi_v)
        .map(|((a, p), q)| (a - p) * q)
        .sum();
    s.abs() / phi_v.len() as f64
}

/// Maximum of [`lpd_term`] over explicit pairs.
pub fn lpd_over_pairs(map: &QuantizedMap, pairs: &[(&[f64], &[f64])]) -> Result<f64> {
    pairs
        .iter()
        .try_fold(0.0f64, |acc, (u, v)| Ok(acc.max(lpd_term(map, u, v)?)))
}

/// Empirical LPD distortion of the quantized map over `K ∩ B^n`, from
/// `pairs` sampled pairs of unit-norm model signals.
pub fn empirical_lpd(
    map: &QuantizedMap,
    model: &SignalModel,
    pairs: usize,
    seed: u64,
) -> Result<DistortionEstimate> {
    if pairs == 0 {
        return Err(Error::InvalidDimension(
            "LPD estimate needs pairs >= 1".into(),
        ));
    }
    check_len(map.op().n(), model.dim())?;
    let value = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let u = model.generate(derive_seed(seed, &[i as u64, 0]))?;
            let v = model.generate(derive_seed(seed, &[i as u64, 1]))?;
            lpd_term(map, &u.data, &v.data)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    Ok(DistortionEstimate {
        kind: DistortionKind::Lpd,
        value,
        samples: pairs,
        seed,
    })
}

/// Local LPD distortion at a fixed `u`.
pub fn empirical_local_lpd(
    map: &QuantizedMap,
    u: &Signal,
    model: &SignalModel,
    directions: usize,
    seed: u64,
) -> Result<DistortionEstimate> {
    empirical_local_lpd_with(map, u, model, directions, seed, None)
}

/// Local LPD at `u` over `v = u`, an optional extra direction (normalized)
/// and `directions` sampled model signals. Sampled direction `j` is the same
/// signal as the `v` of pair `j` in [`empirical_lpd`] with the same seed.
pub fn empirical_local_lpd_with(
    map: &QuantizedMap,
    u: &Signal,
    model: &SignalModel,
    directions: usize,
    seed: u64,
    extra: Option<&[f64]>,
) -> Result<DistortionEstimate> {
    check_len(map.op().n(), u.len())?;
    check_len(map.op().n(), model.dim())?;
    if u.norm() > 1.0 + 1e-12 {
        return Err(Error::InvalidDimension(format!(
            "local LPD needs ‖u‖ <= 1, got {}",
            u.norm()
        )));
    }
    let phi_u = map.observe_linear(&u.data)?;
    let mut a_u = phi_u.clone();
    map.quantize_in_place(&mut a_u);
    let term = |v: &[f64]| -> Result<f64> { Ok(deviation_term(&a_u, &phi_u, &map.op().apply(v)?)) };

    let mut value = term(&u.data)?;
    let mut count = 1;
    if let Some(w) = extra.and_then(|w| unit(w.to_vec())) {
        value = value.max(term(&w)?);
        count += 1;
    }
    let sampled = (0..directions)
        .into_par_iter()
        .map(|j| term(&model.generate(derive_seed(seed, &[j as u64, 1]))?.data))
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    Ok(DistortionEstimate {
        kind: DistortionKind::LocalLpd,
        value: value.max(sampled),
        samples: count + directions,
        seed,
    })
}

/// Least-squares line through `(log x, log y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Slope of the fit.
    pub exponent: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

impl DecayFit {
    pub fn predict(&self, x: f64) -> f64 {
        (self.intercept + self.exponent * x.ln()).exp()
    }
}

/// Ordinary least squares of `ln(errors)` against `ln(ms)`.
pub fn fit_decay_exponent(ms: &[f64], errors: &[f64]) -> Result<DecayFit> {
    if ms.len() != errors.len() {
        return Err(Error::DegenerateFit(format!(
            "{} abscissae but {} values",
            ms.len(),
            errors.len()
        )));
    }
    if ms.len() < 2 {
        return Err(Error::DegenerateFit("need at least two points".into()));
    }
    for (index, &value) in ms.iter().chain(errors).enumerate() {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::NonPositive { index, value });
        }
    }
    let lx: Vec<f64> = ms.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= f64::EPSILON * n * mx.abs().max(1.0) {
        return Err(Error::DegenerateFit("all abscissae are equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let residual = (lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - exponent * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(DecayFit {
        exponent,
        intercept,
        residual,
    })
}

/// Variable a sweep is plotted and fitted against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Number of measurements `m`.
    M,
    /// Quantization resolution `δ`; fits use `1 + δ` as abscissa.
    Delta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointStats {
    pub m: usize,
    pub delta: f64,
    pub dither: bool,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (divides by `count - 1`; 0 for one trial).
    pub stddev: f64,
    pub count: usize,
}

/// Decay fit of one curve. Along `m`, a curve has fixed `delta`; along `δ`,
/// fixed `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFit {
    pub dither: bool,
    pub delta: Option<f64>,
    pub m: Option<usize>,
    pub points_used: usize,
    pub fit: Option<DecayFit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub experiment: ExperimentKind,
    pub axis: SweepAxis,
    /// Sorted by `(dither, delta, m)`.
    pub points: Vec<PointStats>,
    pub fits: Vec<SeriesFit>,
    /// Smallest `m` included in the fits along `m`.
    pub fit_min_m: Option<usize>,
}

impl SweepResult {
    /// Points of the curve with the given `(dither, δ)` along `m`.
    pub fn series_by_delta(&self, delta: f64, dither: bool) -> Vec<&PointStats> {
        self.points
            .iter()
            .filter(|p| p.delta == delta && p.dither == dither)
            .collect()
    }

    pub fn fit_for_delta(&self, delta: f64, dither: bool) -> Option<DecayFit> {
        self.fits
            .iter()
            .find(|f| f.delta == Some(delta) && f.dither == dither)
            .and_then(|f| f.fit)
    }

    pub fn point(&self, m: usize, delta: f64, dither: bool) -> Option<&PointStats> {
        self.points
            .iter()
            .find(|p| p.m == m && p.delta == delta && p.dither == dither)
    }

    /// Curves, each sorted along the sweep axis.
    pub fn series(&self) -> Vec<Vec<&PointStats>> {
        let mut groups: BTreeMap<(bool, u64), Vec<&PointStats>> = BTreeMap::new();
        for p in &self.points {
            let key = match self.axis {
                SweepAxis::M => p.delta.to_bits(),
                SweepAxis::Delta => p.m as u64,
            };
            groups.entry((p.dither, key)).or_default().push(p);
        }
        let mut out: Vec<Vec<&PointStats>> = groups.into_values().collect();
        for s in &mut out {
            match self.axis {
                SweepAxis::M => s.sort_by_key(|p| p.m),
                SweepAxis::Delta => s.sort_by(|a, b| a.delta.total_cmp(&b.delta)),
            }
        }
        out
    }
}

fn point_stats(m: usize, delta: f64, dither: bool, mut errors: Vec<f64>) -> PointStats {
    errors.sort_by(f64::total_cmp);
    let count = errors.len();
    let n = count as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let median = if count % 2 == 1 {
        errors[count / 2]
    } else {
        0.5 * (errors[count / 2 - 1] + errors[count / 2])
    };
    let stddev = if count > 1 {
        (errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    PointStats {
        m,
        delta,
        dither,
        mean,
        median,
        stddev,
        count,
    }
}

/// Groups trials by `(m, δ, dither)` and fits every curve. Along `m`, only
/// points with `m >= fit_min_m` enter the fit.
pub fn aggregate_trials(records: &[TrialRecord], fit_min_m: Option<usize>) -> Result<SweepResult> {
    let first = records
        .first()
        .ok_or_else(|| Error::EmptyInput("no trial records to aggregate".into()))?;
    if let Some(r) = records.iter().find(|r| !r.same_experiment(first)) {
        return Err(Error::Config(format!(
            "records from different experiments cannot be aggregated: {} vs {}",
            first.experiment_label(),
            r.experiment_label()
        )));
    }
    let axis = match first.experiment {
        ExperimentKind::DeltaSweep => SweepAxis::Delta,
        _ => SweepAxis::M,
    };

    let mut groups: BTreeMap<(bool, u64, usize), Vec<f64>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.dither, r.delta.to_bits(), r.m))
            .or_default()
            .push(r.error);
    }
    let points: Vec<PointStats> = groups
        .into_iter()
        .map(|((dither, bits, m), errs)| point_stats(m, f64::from_bits(bits), dither, errs))
        .collect();

    let mut result = SweepResult {
        experiment: first.experiment,
        axis,
        points,
        fits: Vec::new(),
        fit_min_m: match axis {
            SweepAxis::M => fit_min_m,
            SweepAxis::Delta => None,
        },
    };
    result.fits = result
        .series()
        .into_iter()
        .map(|s| {
            let used: Vec<&PointStats> = match axis {
                SweepAxis::M => s
                    .into_iter()
                    .filter(|p| fit_min_m.is_none_or(|min| p.m >= min))
                    .collect(),
                SweepAxis::Delta => s,
            };
            let (xs, ys): (Vec<f64>, Vec<f64>) = used
                .iter()
                .map(|p| match axis {
                    SweepAxis::M => (p.m as f64, p.mean),
                    SweepAxis::Delta => (1.0 + p.delta, p.mean),
                })
                .unzip();
            let head = used.first().copied();
            SeriesFit {
                dither: head.is_some_and(|p| p.dither),
                delta: head.filter(|_| axis == SweepAxis::M).map(|p| p.delta),
                m: head.filter(|_| axis == SweepAxis::Delta).map(|p| p.m),
                points_used: used.len(),
                fit: fit_decay_exponent(&xs, &ys).ok(),
            }
        })
        .filter(|f| f.points_used > 0)
        .collect();
    Ok(result)
}
