//! Random sensing operators `Φ ∈ R^{m×n}`.
//!
//! The operators are scaled so that `(1/√m)Φ` is expected to satisfy the
//! restricted isometry property, i.e. `(1/m)‖Φu‖² ≈ ‖u‖²` on structured `u`:
//!
//! * [`OperatorKind::DenseGaussian`]: iid standard normal entries.
//! * [`OperatorKind::DenseBernoulli`]: iid ±1 entries.
//! * [`OperatorKind::PartialDct`]: `m` rows drawn without replacement from the
//!   `n×n` orthonormal type-II DCT matrix, scaled by `√n`. Only the row indices
//!   are stored; the action is computed with a fast DCT.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustdct::{DctPlanner, TransformType2And3};

use crate::error::{check_len, Error, Result};
use crate::rng::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OperatorKind {
    DenseGaussian,
    PartialDct,
    DenseBernoulli,
}

impl OperatorKind {
    /// Name used in configuration files and CSV output.
    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::DenseGaussian => "gaussian",
            OperatorKind::PartialDct => "partial-dct",
            OperatorKind::DenseBernoulli => "bernoulli",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "gaussian" => Some(OperatorKind::DenseGaussian),
            "partial-dct" => Some(OperatorKind::PartialDct),
            "bernoulli" => Some(OperatorKind::DenseBernoulli),
            _ => None,
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone)]
enum Payload {
    /// Row-major `m×n` entries.
    Dense(Vec<f64>),
    PartialDct {
        rows: Vec<usize>,
        dct: Arc<dyn TransformType2And3<f64>>,
    },
}

/// A realized random measurement matrix. Immutable after construction.
#[derive(Clone)]
pub struct SensingOperator {
    kind: OperatorKind,
    m: usize,
    n: usize,
    seed: u64,
    payload: Payload,
}

impl fmt::Debug for SensingOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SensingOperator")
            .field("kind", &self.kind)
            .field("m", &self.m)
            .field("n", &self.n)
            .field("seed", &self.seed)
            .finish_non_exhaustive()
    }
}

fn check_dims(m: usize, n: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidDimension(format!(
            "operator must have m >= 1 and n >= 1, got m={m}, n={n}"
        )));
    }
    Ok(())
}

impl SensingOperator {
    pub fn build(kind: OperatorKind, m: usize, n: usize, seed: u64) -> Result<Self> {
        match kind {
            OperatorKind::DenseGaussian => Self::build_gaussian(m, n, seed),
            OperatorKind::PartialDct => Self::build_partial_dct(m, n, seed),
            OperatorKind::DenseBernoulli => Self::build_bernoulli(m, n, seed),
        }
    }

    /// Dense operator with iid `N(0, 1)` entries, filled row by row.
    pub fn build_gaussian(m: usize, n: usize, seed: u64) -> Result<Self> {
        check_dims(m, n)?;
        let mut rng = seeded_rng(seed);
        let data = (&mut rng).sample_iter(StandardNormal).take(m * n).collect();
        Ok(Self {
            kind: OperatorKind::DenseGaussian,
            m,
            n,
            seed,
            payload: Payload::Dense(data),
        })
    }

    /// Dense operator with iid Rademacher (±1) entries.
    pub fn build_bernoulli(m: usize, n: usize, seed: u64) -> Result<Self> {
        check_dims(m, n)?;
        let mut rng = seeded_rng(seed);
        let data = (0..m * n)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        Ok(Self {
            kind: OperatorKind::DenseBernoulli,
            m,
            n,
            seed,
            payload: Payload::Dense(data),
        })
    }

    /// `m` rows of `√n · D`, `D` the orthonormal DCT-II, sampled uniformly
    /// without replacement by a partial Fisher-Yates shuffle and stored sorted.
    pub fn build_partial_dct(m: usize, n: usize, seed: u64) -> Result<Self> {
        check_dims(m, n)?;
        if m > n {
            return Err(Error::InvalidDimension(format!(
                "partial DCT needs m <= n, got m={m}, n={n}"
            )));
        }
        let mut rng = seeded_rng(seed);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in 0..m {
            let j = rng.random_range(i..n);
            perm.swap(i, j);
        }
        let mut rows = perm[..m].to_vec();
        rows.sort_unstable();
        Ok(Self::partial_dct_from_rows(rows, n, seed))
    }

    /// Wraps an explicit row-major `m×n` matrix as a dense Gaussian-kind operator.
    pub fn from_dense(m: usize, n: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(m, n)?;
        check_len(m * n, data.len())?;
        Ok(Self {
            kind: OperatorKind::DenseGaussian,
            m,
            n,
            seed: 0,
            payload: Payload::Dense(data),
        })
    }

    /// Partial DCT on the given row set (sorted and deduplicated on entry).
    pub fn partial_dct_with_rows(mut rows: Vec<usize>, n: usize) -> Result<Self> {
        rows.sort_unstable();
        rows.dedup();
        check_dims(rows.len(), n)?;
        if rows.last().is_some_and(|&r| r >= n) {
            return Err(Error::InvalidDimension(format!(
                "partial DCT row index out of range for n={n}"
            )));
        }
        Ok(Self::partial_dct_from_rows(rows, n, 0))
    }

    fn partial_dct_from_rows(rows: Vec<usize>, n: usize, seed: u64) -> Self {
        let dct = DctPlanner::new().plan_dct2(n);
        Self {
            kind: OperatorKind::PartialDct,
            m: rows.len(),
            n,
            seed,
            payload: Payload::PartialDct { rows, dct },
        }
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Selected DCT rows (ascending), or `None` for dense operators.
    pub fn dct_rows(&self) -> Option<&[usize]> {
        match &self.payload {
            Payload::PartialDct { rows, .. } => Some(rows),
            Payload::Dense(_) => None,
        }
    }

    /// Row-major dense entries, or `None` for the implicit partial DCT.
    pub fn dense_entries(&self) -> Option<&[f64]> {
        match &self.payload {
            Payload::Dense(data) => Some(data),
            Payload::PartialDct { .. } => None,
        }
    }

    /// `Φx`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, x.len())?;
        Ok(match &self.payload {
            Payload::Dense(data) => data.chunks_exact(self.n).map(|row| dot(row, x)).collect(),
            Payload::PartialDct { rows, dct } => {
                // rustdct's DCT-II is unnormalized: X_k = Σ_j x_j cos(π(2j+1)k/2n).
                // √n·s_k·√(2/n) = √2·s_k, i.e. 1 for k = 0 and √2 otherwise.
                let mut buf = x.to_vec();
                dct.process_dct2(&mut buf);
                rows.iter()
                    .map(|&k| if k == 0 { buf[0] } else { SQRT_2 * buf[k] })
                    .collect()
            }
        })
    }

    /// `Φᵀy`.
    pub fn apply_adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len(self.m, y.len())?;
        Ok(match &self.payload {
            Payload::Dense(data) => {
                let mut out = vec![0.0; self.n];
                for (row, &yi) in data.chunks_exact(self.n).zip(y) {
                    if yi != 0.0 {
                        axpy(yi, row, &mut out);
                    }
                }
                out
            }
            Payload::PartialDct { rows, dct } => {
                // rustdct's DCT-III: x_j = z_0/2 + Σ_{k≥1} z_k cos(π(2j+1)k/2n),
                // so √n·Dᵀz = √2·DCT3(w) with w_0 = √2·z_0 and w_k = z_k.
                let mut buf = vec![0.0; self.n];
                for (&k, &yi) in rows.iter().zip(y) {
                    buf[k] = if k == 0 { SQRT_2 * yi } else { yi };
                }
                dct.process_dct3(&mut buf);
                buf.iter_mut().for_each(|v| *v *= SQRT_2);
                buf
            }
        })
    }

    /// `Φx` evaluated row by row from the closed-form entries. Same result as
    /// [`apply`](Self::apply), at `O(mn)` cost.
    pub fn apply_by_rows(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, x.len())?;
        match &self.payload {
            Payload::Dense(_) => self.apply(x),
            Payload::PartialDct { rows, .. } => {
                let table = CosineTable::new(self.n);
                Ok(rows
                    .iter()
                    .map(|&k| (0..self.n).map(|j| table.entry(k, j) * x[j]).sum())
                    .collect())
            }
        }
    }

    /// `Φᵀy` from the closed-form entries; see [`apply_by_rows`](Self::apply_by_rows).
    pub fn apply_adjoint_by_rows(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len(self.m, y.len())?;
        match &self.payload {
            Payload::Dense(_) => self.apply_adjoint(y),
            Payload::PartialDct { rows, .. } => {
                let table = CosineTable::new(self.n);
                let mut out = vec![0.0; self.n];
                for (&k, &yi) in rows.iter().zip(y) {
                    for (j, o) in out.iter_mut().enumerate() {
                        *o += table.entry(k, j) * yi;
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Entries of `√n · D` via a `cos(πt/2n)` table indexed by `(2j+1)k mod 4n`.
struct CosineTable {
    n: usize,
    cos: Vec<f64>,
}

impl CosineTable {
    fn new(n: usize) -> Self {
        let cos = (0..4 * n)
            .map(|t| (PI * t as f64 / (2 * n) as f64).cos())
            .collect();
        Self { n, cos }
    }

    #[inline]
    fn entry(&self, k: usize, j: usize) -> f64 {
        let c = self.cos[((2 * j + 1) * k) % (4 * self.n)];
        // √n · s_k · √(2/n) = √2 · s_k
        if k == 0 {
            c
        } else {
            c * SQRT_2
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
