//! Phase-space linear algebra.
//!
//! Quadratures are ordered `(q1, p1, ..., qN, pN)` and use the `hbar = 2`
//! convention throughout: the vacuum has covariance equal to the identity and
//! `[r_k, r_l] = 2i Omega_kl`. Every downstream constant (the `1/(4 pi)`
//! Wigner function of the identity, the `exp(-(x^2+p^2)/2)` vacuum profile)
//! depends on this choice.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Absolute tolerance on eigenvalues used by the PSD and symmetry tests.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Eigenvalues at or below this are treated as exactly zero (deterministic directions).
pub const EIGEN_CLAMP: f64 = 1e-12;

/// The block-diagonal symplectic form `Omega = (+) [[0, 1], [-1, 0]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticForm {
    modes: usize,
    matrix: DMatrix<f64>,
}

impl SymplecticForm {
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

pub fn make_symplectic_form(modes: usize) -> Result<SymplecticForm> {
    if modes == 0 {
        return Err(invalid("symplectic form needs at least one mode"));
    }
    let mut matrix = DMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        matrix[(2 * k, 2 * k + 1)] = 1.0;
        matrix[(2 * k + 1, 2 * k)] = -1.0;
    }
    Ok(SymplecticForm { modes, matrix })
}

/// Real symmetric matrix in quadrature-variance units.
///
/// Symmetry is checked on construction and the stored matrix is exactly
/// symmetrized. The dimension may be odd for purely classical use; the
/// quantum tests require an even dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct CovarianceMatrix {
    matrix: DMatrix<f64>,
}

impl CovarianceMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(invalid(format!(
                "covariance must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(invalid("covariance has non-finite entries"));
        }
        let scale = matrix.amax().max(1.0);
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > DEFAULT_TOL * scale {
            return Err(invalid(format!("covariance is not symmetric (max |V - V^T| = {asym:.3e})")));
        }
        let matrix = (&matrix + matrix.transpose()) * 0.5;
        Ok(Self { matrix })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(invalid("covariance rows must all have length equal to the row count"));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: DMatrix::identity(dim, dim) }
    }

    pub fn scaled_identity(dim: usize, t: f64) -> Self {
        Self { matrix: DMatrix::identity(dim, dim) * t }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { matrix: DMatrix::zeros(dim, dim) }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self { matrix: DMatrix::from_diagonal(&DVector::from_column_slice(values)) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of modes; fails for odd dimension.
    pub fn modes(&self) -> Result<usize> {
        if self.dim() % 2 != 0 || self.dim() == 0 {
            return Err(invalid(format!("dimension {} is not 2N for N >= 1", self.dim())));
        }
        Ok(self.dim() / 2)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.dim() == 0 {
            return Vec::new();
        }
        let mut ev: Vec<f64> = SymmetricEigen::new(self.matrix.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Smallest eigenvalue; `+inf` for the empty matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(f64::INFINITY)
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }

    pub fn direct_sum(&self, other: &Self) -> Self {
        let (n, m) = (self.dim(), other.dim());
        let mut matrix = DMatrix::zeros(n + m, n + m);
        matrix.view_mut((0, 0), (n, n)).copy_from(&self.matrix);
        matrix.view_mut((n, n), (m, m)).copy_from(&other.matrix);
        Self { matrix }
    }

    /// Square sub-block starting at `offset` along the diagonal.
    pub fn block(&self, offset: usize, size: usize) -> Self {
        Self { matrix: self.matrix.view((offset, offset), (size, size)).into_owned() }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        check_same_dim(self.dim(), other.dim())?;
        Ok(Self { matrix: &self.matrix + &other.matrix })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        check_same_dim(self.dim(), other.dim())?;
        Ok(Self { matrix: &self.matrix - &other.matrix })
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.matrix.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for CovarianceMatrix {
    type Error = crate::Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<CovarianceMatrix> for Vec<Vec<f64>> {
    fn from(c: CovarianceMatrix) -> Self {
        c.to_rows()
    }
}

fn check_same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(invalid(format!("dimension mismatch: {a} vs {b}")));
    }
    Ok(())
}

/// Quadrature means `(q1, p1, ..., qN, pN)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MeanVector {
    values: Vec<f64>,
}

impl MeanVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() % 2 != 0 {
            return Err(invalid(format!("mean vector length {} is not 2N", values.len())));
        }
        Ok(Self { values })
    }

    pub fn zeros(modes: usize) -> Self {
        Self { values: vec![0.0; 2 * modes] }
    }

    pub fn modes(&self) -> usize {
        self.values.len() / 2
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }
}

impl TryFrom<Vec<f64>> for MeanVector {
    type Error = crate::Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<MeanVector> for Vec<f64> {
    fn from(m: MeanVector) -> Self {
        m.values
    }
}

/// Smallest eigenvalue of the Hermitian matrix `V + i Omega`.
///
/// Computed through the real embedding `[[V, -Omega], [Omega, V]]`, whose
/// spectrum is that of `V + i Omega` with every eigenvalue doubled.
pub fn uncertainty_margin(v: &CovarianceMatrix) -> Result<f64> {
    let modes = v.modes()?;
    let omega = make_symplectic_form(modes)?;
    let n = v.dim();
    let mut embed = DMatrix::zeros(2 * n, 2 * n);
    embed.view_mut((0, 0), (n, n)).copy_from(v.matrix());
    embed.view_mut((n, n), (n, n)).copy_from(v.matrix());
    embed.view_mut((0, n), (n, n)).copy_from(&(-omega.matrix()));
    embed.view_mut((n, 0), (n, n)).copy_from(omega.matrix());
    Ok(SymmetricEigen::new(embed).eigenvalues.min())
}

/// True iff `V + i Omega` is PSD to within `tol`.
pub fn is_quantum_covariance(v: &CovarianceMatrix, tol: f64) -> Result<bool> {
    Ok(uncertainty_margin(v)? >= -tol)
}

/// Smallest eigenvalue of `V - (A (+) B)`.
pub fn psd_order_margin(v: &CovarianceMatrix, a: &CovarianceMatrix, b: &CovarianceMatrix) -> Result<f64> {
    if v.dim() != a.dim() + b.dim() {
        return Err(invalid(format!(
            "dimension mismatch: V is {}x{}, blocks are {} and {}",
            v.dim(),
            v.dim(),
            a.dim(),
            b.dim()
        )));
    }
    Ok(v.try_sub(&a.direct_sum(b))?.min_eigenvalue())
}

/// True iff `V >= A (+) B` in the PSD order, to within `tol`.
pub fn is_psd_ordered(v: &CovarianceMatrix, a: &CovarianceMatrix, b: &CovarianceMatrix, tol: f64) -> Result<bool> {
    Ok(psd_order_margin(v, a, b)? >= -tol)
}

/// Classical (possibly singular) multivariate normal distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianDistribution {
    mean: Vec<f64>,
    covariance: CovarianceMatrix,
}

impl GaussianDistribution {
    pub fn new(mean: Vec<f64>, covariance: CovarianceMatrix) -> Result<Self> {
        check_same_dim(mean.len(), covariance.dim())?;
        if !covariance.is_psd(DEFAULT_TOL) {
            return Err(invalid(format!(
                "covariance is not PSD (min eigenvalue {:.3e})",
                covariance.min_eigenvalue()
            )));
        }
        Ok(Self { mean, covariance })
    }

    pub fn standard(dim: usize) -> Self {
        Self { mean: vec![0.0; dim], covariance: CovarianceMatrix::identity(dim) }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &CovarianceMatrix {
        &self.covariance
    }

    /// Eigenbasis with eigenvalues clamped to zero below [`EIGEN_CLAMP`].
    pub(crate) fn principal_axes(&self) -> (DMatrix<f64>, Vec<f64>) {
        if self.dim() == 0 {
            return (DMatrix::zeros(0, 0), Vec::new());
        }
        let eig = SymmetricEigen::new(self.covariance.matrix().clone());
        let values = eig.eigenvalues.iter().map(|&l| if l <= EIGEN_CLAMP { 0.0 } else { l }).collect();
        (eig.eigenvectors, values)
    }
}

pub fn convolve_gaussians(g1: &GaussianDistribution, g2: &GaussianDistribution) -> Result<GaussianDistribution> {
    check_same_dim(g1.dim(), g2.dim())?;
    let mean = g1.mean.iter().zip(&g2.mean).map(|(a, b)| a + b).collect();
    Ok(GaussianDistribution { mean, covariance: g1.covariance.try_add(&g2.covariance)? })
}

/// Density of `g` at `point`.
///
/// Singular directions are exact constraints: points off the support get 0,
/// points on it get the density of the restricted distribution.
pub fn gaussian_density(g: &GaussianDistribution, point: &[f64]) -> Result<f64> {
    check_same_dim(g.dim(), point.len())?;
    let (axes, variances) = g.principal_axes();
    let diff = DVector::from_iterator(g.dim(), point.iter().zip(&g.mean).map(|(x, m)| x - m));
    let coords = axes.transpose() * diff;
    let mut log_density = 0.0;
    for (y, &var) in coords.iter().zip(&variances) {
        if var == 0.0 {
            if y.abs() > DEFAULT_TOL {
                return Ok(0.0);
            }
        } else {
            log_density -= 0.5 * (y * y / var + (2.0 * std::f64::consts::PI * var).ln());
        }
    }
    Ok(log_density.exp())
}

/// Draws `count` samples deterministically from `rng_seed`.
pub fn sample_gaussian(g: &GaussianDistribution, rng_seed: u64, count: usize) -> Result<Vec<Vec<f64>>> {
    let sampler = GaussianSampler::new(g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    Ok((0..count).map(|_| sampler.sample(&mut rng)).collect())
}

/// Precomputed `mean + U sqrt(Lambda) z` transform.
#[derive(Clone, Debug)]
pub(crate) struct GaussianSampler {
    mean: Vec<f64>,
    transform: DMatrix<f64>,
}

impl GaussianSampler {
    pub(crate) fn new(g: &GaussianDistribution) -> Result<Self> {
        if !g.covariance.is_psd(DEFAULT_TOL) {
            return Err(invalid("cannot sample from a covariance that is not PSD"));
        }
        let (axes, variances) = g.principal_axes();
        let mut transform = axes;
        for (j, var) in variances.iter().enumerate() {
            transform.column_mut(j).scale_mut(var.sqrt());
        }
        Ok(Self { mean: g.mean.clone(), transform })
    }

    pub(crate) fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.mean.len();
        let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        (0..n)
            .map(|i| self.mean[i] + (0..n).map(|j| self.transform[(i, j)] * z[j]).sum::<f64>())
            .collect()
    }
}
