//! Structured signal sets, their projectors and random generators.
//!
//! Two sets are supported: `Σ_k`, the k-sparse vectors of `R^n`, and `C_r`,
//! the `n1×n2` matrices of rank at most `r`. Matrices are handled in
//! vectorized form, stacking columns (`x[i + j*n1] = X[i][j]`).

use std::cmp::Ordering;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_len, Error, Result};
use crate::rng::seeded_rng;
use crate::sensing::norm;

const SVD_EPS: f64 = 1e-15;
const SVD_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignalModel {
    Sparse { n: usize, k: usize },
    LowRank { n1: usize, n2: usize, r: usize },
}

impl SignalModel {
    pub fn sparse(n: usize, k: usize) -> Result<Self> {
        let model = SignalModel::Sparse { n, k };
        model.validate()?;
        Ok(model)
    }

    pub fn low_rank(n1: usize, n2: usize, r: usize) -> Result<Self> {
        let model = SignalModel::LowRank { n1, n2, r };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SignalModel::Sparse { n, k } => {
                if k == 0 || k > n {
                    return Err(Error::InvalidSparsity { k, n });
                }
            }
            SignalModel::LowRank { n1, n2, r } => {
                if r == 0 || r > n1.min(n2) {
                    return Err(Error::InvalidRank { r, n1, n2 });
                }
            }
        }
        Ok(())
    }

    /// Ambient dimension `n` (`n1·n2` for matrices).
    pub fn dim(&self) -> usize {
        match *self {
            SignalModel::Sparse { n, .. } => n,
            SignalModel::LowRank { n1, n2, .. } => n1 * n2,
        }
    }

    /// The sparsity `k` or the rank `r`.
    pub fn order(&self) -> usize {
        match *self {
            SignalModel::Sparse { k, .. } => k,
            SignalModel::LowRank { r, .. } => r,
        }
    }

    pub fn shape(&self) -> Option<(usize, usize)> {
        match *self {
            SignalModel::Sparse { .. } => None,
            SignalModel::LowRank { n1, n2, .. } => Some((n1, n2)),
        }
    }

    /// Short descriptor without commas, used in CSV output.
    pub fn descriptor(&self) -> String {
        match *self {
            SignalModel::Sparse { .. } => "sparse".to_string(),
            SignalModel::LowRank { n1, n2, .. } => format!("lowrank-{n1}x{n2}"),
        }
    }

    /// A nearest point of the model set to `z`.
    pub fn project(&self, z: &[f64]) -> Result<Signal> {
        check_len(self.dim(), z.len())?;
        match *self {
            SignalModel::Sparse { k, .. } => Ok(Signal::vector(project_sparse(z, k)?)),
            SignalModel::LowRank { n1, n2, r } => {
                project_lowrank(&Signal::matrix(z.to_vec(), n1, n2)?, r)
            }
        }
    }

    /// A unit-norm random element of the model set.
    pub fn generate(&self, seed: u64) -> Result<Signal> {
        match *self {
            SignalModel::Sparse { n, k } => gen_sparse(n, k, seed),
            SignalModel::LowRank { n1, n2, r } => gen_lowrank(n1, n2, r, seed),
        }
    }
}

/// A vector signal, or a column-stacked matrix when `shape` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub data: Vec<f64>,
    pub shape: Option<(usize, usize)>,
}

impl Signal {
    pub fn vector(data: Vec<f64>) -> Self {
        Self { data, shape: None }
    }

    pub fn matrix(data: Vec<f64>, n1: usize, n2: usize) -> Result<Self> {
        if data.len() != n1 * n2 {
            return Err(Error::ShapeMismatch(format!(
                "{} values cannot form a {n1}x{n2} matrix",
                data.len()
            )));
        }
        Ok(Self {
            data,
            shape: Some((n1, n2)),
        })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Entry `(i, j)` of a matrix signal.
    pub fn at(&self, i: usize, j: usize) -> Option<f64> {
        let (n1, n2) = self.shape?;
        (i < n1 && j < n2).then(|| self.data[i + j * n1])
    }
}

/// Keeps the `k` largest-magnitude entries of `z`; ties go to the lower index.
pub fn project_sparse(z: &[f64], k: usize) -> Result<Vec<f64>> {
    if k == 0 || k > z.len() {
        return Err(Error::InvalidSparsity { k, n: z.len() });
    }
    let mut out = vec![0.0; z.len()];
    for i in top_k_indices(z, k) {
        out[i] = z[i];
    }
    Ok(out)
}

/// Indices of the `k` largest `|z_i|` (lower index first on ties), unordered.
pub(crate) fn top_k_indices(z: &[f64], k: usize) -> Vec<usize> {
    let by_magnitude =
        |&a: &usize, &b: &usize| -> Ordering { z[b].abs().total_cmp(&z[a].abs()).then(a.cmp(&b)) };
    let mut idx: Vec<usize> = (0..z.len()).collect();
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, by_magnitude);
        idx.truncate(k);
    }
    idx
}

/// Best rank-`r` approximation in Frobenius norm, by truncating the SVD.
pub fn project_lowrank(z: &Signal, r: usize) -> Result<Signal> {
    let (n1, n2) = z
        .shape
        .ok_or_else(|| Error::ShapeMismatch("low-rank projection needs a matrix signal".into()))?;
    if r == 0 || r > n1.min(n2) {
        return Err(Error::InvalidRank { r, n1, n2 });
    }
    let mat = DMatrix::from_column_slice(n1, n2, &z.data);
    let svd = mat
        .try_svd(true, true, SVD_EPS, SVD_MAX_ITER)
        .ok_or(Error::SvdFailure)?;
    let (u, v_t) = match (&svd.u, &svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::SvdFailure),
    };
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));

    let mut out = DMatrix::<f64>::zeros(n1, n2);
    for &i in order.iter().take(r) {
        out += (u.column(i) * sv[i]) * v_t.row(i);
    }
    Signal::matrix(out.as_slice().to_vec(), n1, n2)
}

fn normalize(data: &mut [f64]) -> Result<()> {
    let nrm = norm(data);
    if nrm == 0.0 || !nrm.is_finite() {
        return Err(Error::Degenerate("generated signal has zero norm".into()));
    }
    data.iter_mut().for_each(|v| *v /= nrm);
    Ok(())
}

/// Uniformly random support of size `k`, standard normal entries on it,
/// scaled to unit norm.
pub fn gen_sparse(n: usize, k: usize, seed: u64) -> Result<Signal> {
    SignalModel::sparse(n, k)?;
    let mut rng = seeded_rng(seed);
    let mut data = vec![0.0; n];
    for i in index::sample(&mut rng, n, k) {
        data[i] = rng.sample(StandardNormal);
    }
    normalize(&mut data)?;
    Ok(Signal::vector(data))
}

/// `X = c·B·Cᵀ` with `B ∈ R^{n1×r}`, `C ∈ R^{n2×r}` standard normal and
/// `c` chosen so that `‖X‖_F = 1`. A zero product is re-drawn once.
pub fn gen_lowrank(n1: usize, n2: usize, r: usize, seed: u64) -> Result<Signal> {
    SignalModel::low_rank(n1, n2, r)?;
    let mut rng = seeded_rng(seed);
    for _ in 0..2 {
        let b = DMatrix::<f64>::from_fn(n1, r, |_, _| rng.sample(StandardNormal));
        let c = DMatrix::<f64>::from_fn(n2, r, |_, _| rng.sample(StandardNormal));
        let mut data = (b * c.transpose()).as_slice().to_vec();
        if normalize(&mut data).is_ok() {
            return Signal::matrix(data, n1, n2);
        }
    }
    Err(Error::Degenerate("B·Cᵀ vanished twice".into()))
}
