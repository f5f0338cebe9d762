//! Uniform scalar quantization with optional uniform dither.
//!
//! `Q(t) = δ⌊t/δ⌋` maps onto the lattice `δZ` and satisfies `t - δ < Q(t) ≤ t`.
//! Adding `ξ ~ U([0, δ))` before quantizing makes the output unbiased:
//! with `λ = t/δ`, `E⌊λ + d⌋ = ⌊λ⌋ + frac(λ) = λ`.

use std::sync::Arc;

use rand::Rng;
use rand_distr::Uniform;

use crate::error::{check_len, Error, Result};
use crate::rng::seeded_rng;
use crate::sensing::SensingOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DitherMode {
    None,
    Uniform,
}

impl DitherMode {
    pub fn is_on(self) -> bool {
        self == DitherMode::Uniform
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidResolution(delta))
    }
}

/// `δ⌊t/δ⌋`.
pub fn quantize_scalar(t: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(quantize_unchecked(t, delta))
}

#[inline]
fn quantize_unchecked(t: f64, delta: f64) -> f64 {
    delta * (t / delta).floor()
}

/// `m` iid draws from `U([0, δ))`.
pub fn draw_dither(m: usize, delta: f64, seed: u64) -> Result<Vec<f64>> {
    check_delta(delta)?;
    if m == 0 {
        return Err(Error::InvalidDimension("dither length must be >= 1".into()));
    }
    let dist = Uniform::new(0.0, delta).map_err(|_| Error::InvalidResolution(delta))?;
    Ok(seeded_rng(seed).sample_iter(dist).take(m).collect())
}

/// The observation map `A(x) = Q(Φx + ξ)`.
#[derive(Debug, Clone)]
pub struct QuantizedMap {
    op: Arc<SensingOperator>,
    delta: f64,
    mode: DitherMode,
    dither: Vec<f64>,
    dither_seed: u64,
}

impl QuantizedMap {
    /// Draws a fresh dither from `dither_seed` when `mode` is `Uniform`;
    /// `ξ = 0` otherwise. The operator may be shared between maps.
    pub fn new(
        op: impl Into<Arc<SensingOperator>>,
        delta: f64,
        mode: DitherMode,
        dither_seed: u64,
    ) -> Result<Self> {
        let op = op.into();
        check_delta(delta)?;
        let dither = match mode {
            DitherMode::Uniform => draw_dither(op.m(), delta, dither_seed)?,
            DitherMode::None => vec![0.0; op.m()],
        };
        Ok(Self {
            op,
            delta,
            mode,
            dither,
            dither_seed,
        })
    }

    /// Uses an explicit dither vector. Components must lie in `[0, δ)`, and
    /// must all be zero when `mode` is `None`.
    pub fn with_dither(
        op: impl Into<Arc<SensingOperator>>,
        delta: f64,
        mode: DitherMode,
        dither: Vec<f64>,
    ) -> Result<Self> {
        let op = op.into();
        check_delta(delta)?;
        check_len(op.m(), dither.len())?;
        let ok = match mode {
            DitherMode::Uniform => dither.iter().all(|&d| (0.0..delta).contains(&d)),
            DitherMode::None => dither.iter().all(|&d| d == 0.0),
        };
        if !ok {
            return Err(Error::InvalidResolution(delta));
        }
        Ok(Self {
            op,
            delta,
            mode,
            dither,
            dither_seed: 0,
        })
    }

    pub fn op(&self) -> &SensingOperator {
        &self.op
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn mode(&self) -> DitherMode {
        self.mode
    }

    pub fn dither(&self) -> &[f64] {
        &self.dither
    }

    pub fn dither_seed(&self) -> u64 {
        self.dither_seed
    }

    /// `Q(Φx + ξ)`.
    pub fn observe(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.op.apply(x)?;
        self.quantize_in_place(&mut y);
        Ok(y)
    }

    /// Quantizes already-computed linear measurements `Φx` in place.
    pub fn quantize_in_place(&self, phi_x: &mut [f64]) {
        for (v, &xi) in phi_x.iter_mut().zip(&self.dither) {
            *v = quantize_unchecked(*v + xi, self.delta);
        }
    }

    /// `Φx`: the undistorted baseline, no dither and no quantization.
    pub fn observe_linear(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.op.apply(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::OperatorKind;
    use proptest::prelude::{prop_assert, proptest};
    use rand_distr::StandardNormal;

    #[test]
    fn scalar_examples() {
        assert_eq!(quantize_scalar(3.7, 1.0).unwrap(), 3.0);
        assert_eq!(quantize_scalar(-0.2, 0.5).unwrap(), -0.5);
        assert_eq!(quantize_scalar(2.0, 0.5).unwrap(), 2.0);
        for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                quantize_scalar(1.0, bad),
                Err(Error::InvalidResolution(_))
            ));
        }
    }

    proptest! {
        #[test]
        fn quantizer_bracket(t in -1e6..1e6f64, delta in 1e-3..1e3f64) {
            let q = quantize_scalar(t, delta).unwrap();
            prop_assert!(q <= t);
            prop_assert!(q > t - delta);
        }
    }

    #[test]
    fn dither_support_mean_and_determinism() {
        let d = draw_dither(100_000, 1.0, 1234).unwrap();
        assert!(d.iter().all(|&v| (0.0..1.0).contains(&v)));
        // sd of the mean of 1e5 U(0,1) draws is 0.2887/316 = 9.1e-4; ±0.005 is ~5.5 sigma.
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        assert!((0.495..=0.505).contains(&mean), "{mean}");
        assert_eq!(d, draw_dither(100_000, 1.0, 1234).unwrap());

        let d = draw_dither(1000, 0.3, 5).unwrap();
        assert!(d.iter().all(|&v| (0.0..0.3).contains(&v)));
        assert!(draw_dither(0, 1.0, 0).is_err());
        assert!(draw_dither(3, 0.0, 0).is_err());
    }

    #[test]
    fn observe_by_hand() {
        let op = SensingOperator::from_dense(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let map = QuantizedMap::with_dither(op, 1.0, DitherMode::Uniform, vec![0.4, 0.9]).unwrap();
        assert_eq!(map.observe(&[0.5, 0.5]).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn undithered_lattice_points_are_fixed() {
        let op = SensingOperator::from_dense(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let map = QuantizedMap::new(op, 0.25, DitherMode::None, 0).unwrap();
        assert!(map.dither().iter().all(|&d| d == 0.0));
        let x = [1.75, -0.5];
        assert_eq!(map.observe(&x).unwrap(), map.observe_linear(&x).unwrap());
    }

    #[test]
    fn observe_on_lattice_and_within_delta() {
        let mut rng = seeded_rng(77);
        for trial in 0..1000u64 {
            let delta = 0.05 + 2.0 * rng.random::<f64>();
            let op = SensingOperator::build(OperatorKind::DenseGaussian, 6, 5, trial).unwrap();
            let map = QuantizedMap::new(op, delta, DitherMode::Uniform, trial + 1).unwrap();
            let x: Vec<f64> = (&mut rng).sample_iter(StandardNormal).take(5).collect();
            let y = map.observe(&x).unwrap();
            let lin = map.observe_linear(&x).unwrap();
            for (yi, li) in y.iter().zip(&lin) {
                assert!((yi - li).abs() < delta);
                let r = yi / delta;
                assert!((r - r.round()).abs() <= 1e-9 * r.abs().max(1.0));
            }
        }
    }

    #[test]
    fn undithered_error_at_most_delta() {
        let op = SensingOperator::build(OperatorKind::DenseGaussian, 50, 20, 3).unwrap();
        let map = QuantizedMap::new(op, 0.7, DitherMode::None, 0).unwrap();
        let x = vec![0.3; 20];
        let y = map.observe(&x).unwrap();
        for (yi, li) in y.iter().zip(map.observe_linear(&x).unwrap()) {
            assert!(li - yi >= 0.0 && li - yi <= 0.7);
        }
    }

    #[test]
    fn vanishing_resolution_approaches_linear() {
        let op = SensingOperator::build(OperatorKind::PartialDct, 16, 32, 1).unwrap();
        let map = QuantizedMap::new(op, 1e-6, DitherMode::Uniform, 2).unwrap();
        let x: Vec<f64> = (0..32).map(|i| (i as f64).cos()).collect();
        let y = map.observe(&x).unwrap();
        let lin = map.observe_linear(&x).unwrap();
        assert!(y.iter().zip(&lin).all(|(a, b)| (a - b).abs() <= 1e-6));
        assert!(map
            .observe_linear(&[0.0; 32])
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn dithered_quantizer_is_unbiased() {
        let mut rng = seeded_rng(2024);
        for i in 0..5 {
            let t = 10.0 * rng.random::<f64>() - 5.0;
            let delta = 0.1 + 3.0 * rng.random::<f64>();
            let d = draw_dither(1_000_000, delta, i).unwrap();
            let mean = d
                .iter()
                .map(|xi| quantize_scalar(t + xi, delta).unwrap())
                .sum::<f64>()
                / d.len() as f64;
            // sd of Q(t+ξ) is at most δ/2, so sd of the mean is δ/2000 = 0.0005δ.
            assert!(
                (mean - t).abs() <= 0.002 * delta,
                "t={t} δ={delta} mean={mean}"
            );
        }
    }

    #[test]
    fn explicit_dither_validated() {
        let op = SensingOperator::from_dense(1, 1, vec![1.0]).unwrap();
        assert!(
            QuantizedMap::with_dither(op.clone(), 1.0, DitherMode::Uniform, vec![1.0]).is_err()
        );
        assert!(QuantizedMap::with_dither(op.clone(), 1.0, DitherMode::None, vec![0.5]).is_err());
        assert!(QuantizedMap::with_dither(op, 1.0, DitherMode::Uniform, vec![0.0, 0.1]).is_err());
    }
}
