//! Gaussian states used by the displaced-photodetection experiment: the
//! two-mode squeezed state, local pure loss, Wigner evaluation and the
//! partial-transpose entanglement test.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::symplectic::{
    gaussian_density, is_quantum_covariance, uncertainty_margin, CovarianceMatrix, GaussianDistribution, MeanVector,
    DEFAULT_TOL,
};

/// Mean and covariance of a Gaussian state together with its bipartition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateDocument", into = "StateDocument")]
pub struct GaussianState {
    mean: MeanVector,
    covariance: CovarianceMatrix,
    partition: Vec<usize>,
}

/// JSON layout: `{"mean": [...], "cov": [[...]], "partition": [1, 1]}`.
#[derive(Serialize, Deserialize)]
struct StateDocument {
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
    partition: Vec<usize>,
}

impl TryFrom<StateDocument> for GaussianState {
    type Error = crate::Error;

    fn try_from(doc: StateDocument) -> Result<Self> {
        GaussianState::new(MeanVector::new(doc.mean)?, CovarianceMatrix::from_rows(&doc.cov)?, doc.partition)
    }
}

impl From<GaussianState> for StateDocument {
    fn from(s: GaussianState) -> Self {
        StateDocument { mean: s.mean.into(), cov: s.covariance.to_rows(), partition: s.partition }
    }
}

impl GaussianState {
    pub fn new(mean: MeanVector, covariance: CovarianceMatrix, partition: Vec<usize>) -> Result<Self> {
        let modes = covariance.modes()?;
        if mean.modes() != modes {
            return Err(invalid(format!("mean has {} modes, covariance has {modes}", mean.modes())));
        }
        if partition.iter().sum::<usize>() != modes || partition.contains(&0) {
            return Err(invalid(format!("partition {partition:?} does not split {modes} modes")));
        }
        if !is_quantum_covariance(&covariance, DEFAULT_TOL)? {
            return Err(invalid(format!(
                "covariance violates the uncertainty principle (margin {:.3e})",
                uncertainty_margin(&covariance)?
            )));
        }
        Ok(Self { mean, covariance, partition })
    }

    pub fn mean(&self) -> &MeanVector {
        &self.mean
    }

    pub fn covariance(&self) -> &CovarianceMatrix {
        &self.covariance
    }

    pub fn partition(&self) -> &[usize] {
        &self.partition
    }

    pub fn modes(&self) -> usize {
        self.mean.modes()
    }

    pub fn is_one_by_one(&self) -> bool {
        self.partition == [1, 1]
    }

    pub(crate) fn require_one_by_one(&self) -> Result<()> {
        if !self.is_one_by_one() {
            return Err(invalid(format!("expected a 1x1-mode bipartition, got {:?}", self.partition)));
        }
        Ok(())
    }

    /// The Wigner function viewed as a classical distribution.
    pub fn wigner_distribution(&self) -> GaussianDistribution {
        GaussianDistribution::new(self.mean.as_slice().to_vec(), self.covariance.clone())
            .expect("quantum covariance is PSD")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Squeezing and loss of the lossy two-mode squeezed state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TmssParameters {
    pub nu: f64,
    pub eta: f64,
}

impl TmssParameters {
    pub fn new(nu: f64, eta: f64) -> Result<Self> {
        check_nu(nu)?;
        check_eta(eta)?;
        Ok(Self { nu, eta })
    }

    pub fn state(&self) -> Result<GaussianState> {
        apply_pure_loss(&make_tmss(self.nu)?, self.eta)
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if !(nu >= 1.0) || !nu.is_finite() {
        return Err(invalid(format!("nu must be >= 1, got {nu}")));
    }
    Ok(())
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(invalid(format!("eta must lie in [0, 1], got {eta}")));
    }
    Ok(())
}

/// Two-mode squeezed vacuum with symplectic parameter `nu`.
pub fn make_tmss(nu: f64) -> Result<GaussianState> {
    check_nu(nu)?;
    let c = (nu * nu - 1.0).sqrt();
    #[rustfmt::skip]
    let v = DMatrix::from_row_slice(4, 4, &[
        nu, 0.0, c, 0.0,
        0.0, nu, 0.0, -c,
        c, 0.0, nu, 0.0,
        0.0, -c, 0.0, nu,
    ]);
    GaussianState::new(MeanVector::zeros(2), CovarianceMatrix::new(v)?, vec![1, 1])
}

/// Same transmittance on every mode.
pub fn apply_pure_loss(state: &GaussianState, eta: f64) -> Result<GaussianState> {
    apply_pure_loss_per_mode(state, &vec![eta; state.modes()])
}

/// Pure-loss channel with per-mode transmittance: `V -> K V K + (I - K^2)`,
/// `K = diag(sqrt(eta_k) I_2)`, and means scaled by `sqrt(eta_k)`.
pub fn apply_pure_loss_per_mode(state: &GaussianState, etas: &[f64]) -> Result<GaussianState> {
    if etas.len() != state.modes() {
        return Err(invalid(format!("{} transmittances for {} modes", etas.len(), state.modes())));
    }
    for &eta in etas {
        check_eta(eta)?;
    }
    let n = 2 * state.modes();
    let scale: Vec<f64> = (0..n).map(|i| etas[i / 2].sqrt()).collect();
    let v = state.covariance.matrix();
    let out = DMatrix::from_fn(n, n, |i, j| {
        let noise = if i == j { 1.0 - etas[i / 2] } else { 0.0 };
        scale[i] * v[(i, j)] * scale[j] + noise
    });
    let mean = state.mean.as_slice().iter().zip(&scale).map(|(m, s)| m * s).collect();
    GaussianState::new(MeanVector::new(mean)?, CovarianceMatrix::new(out)?, state.partition.clone())
}

/// Covariance with mode B's momentum reflected, `Lambda V Lambda`.
pub fn partial_transpose(state: &GaussianState) -> Result<CovarianceMatrix> {
    state.require_one_by_one()?;
    let mut v = state.covariance.matrix().clone();
    for k in 0..4 {
        v[(3, k)] = -v[(3, k)];
    }
    for k in 0..4 {
        v[(k, 3)] = -v[(k, 3)];
    }
    CovarianceMatrix::new(v)
}

/// Simon criterion: entangled iff the partial transpose is not a bona fide covariance.
pub fn is_ppt_entangled(state: &GaussianState, tol: f64) -> Result<bool> {
    Ok(!is_quantum_covariance(&partial_transpose(state)?, tol)?)
}

/// Value of the state's Wigner function at `point`.
pub fn state_wigner(state: &GaussianState, point: &[f64]) -> Result<f64> {
    gaussian_density(&state.wigner_distribution(), point)
}

/// `(2 pi)^-N` for `N` modes: the peak of the vacuum Wigner function.
pub fn vacuum_peak(modes: usize) -> f64 {
    (2.0 * PI).powi(-(modes as i32))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn tmss_entries() {
        let s = make_tmss(1.0).unwrap();
        assert_eq!(s.covariance(), &CovarianceMatrix::identity(4));
        let s = make_tmss(1.4).unwrap();
        close(s.covariance().matrix()[(0, 2)], 0.96f64.sqrt(), 1e-15);
        close(s.covariance().matrix()[(1, 3)], -0.979_795_897, 1e-9);
        assert!(make_tmss(0.99).is_err());
    }

    #[test]
    fn lossy_tmss_entries() {
        let s = TmssParameters::new(1.4, 0.95).unwrap().state().unwrap();
        let v = s.covariance().matrix();
        close(v[(0, 0)], 1.38, 1e-12);
        close(v[(3, 3)], 1.38, 1e-12);
        close(v[(0, 2)], 0.930_806, 1e-6);
        close(v[(1, 3)], -0.930_806, 1e-6);

        let same = apply_pure_loss(&make_tmss(1.4).unwrap(), 1.0).unwrap();
        assert_eq!(same.covariance(), make_tmss(1.4).unwrap().covariance());
        let vac = apply_pure_loss(&make_tmss(1.4).unwrap(), 0.0).unwrap();
        assert_eq!(vac.covariance(), &CovarianceMatrix::identity(4));
        assert!(apply_pure_loss(&vac, 1.2).is_err());
    }

    #[test]
    fn asymmetric_loss() {
        let s = apply_pure_loss_per_mode(&make_tmss(1.2).unwrap(), &[1.0, 0.0]).unwrap();
        let v = s.covariance().matrix();
        close(v[(0, 0)], 1.2, 1e-15);
        close(v[(2, 2)], 1.0, 1e-15);
        close(v[(0, 2)], 0.0, 1e-15);
    }

    #[test]
    fn ppt_examples() {
        let vac = TmssParameters::new(1.0, 0.3).unwrap().state().unwrap();
        assert!(!is_ppt_entangled(&vac, DEFAULT_TOL).unwrap());
        let s = TmssParameters::new(1.4, 0.95).unwrap().state().unwrap();
        assert!(is_ppt_entangled(&s, DEFAULT_TOL).unwrap());
        let s = TmssParameters::new(1.05, 0.1).unwrap().state().unwrap();
        assert!(is_ppt_entangled(&s, DEFAULT_TOL).unwrap());
    }

    #[test]
    fn wigner_peaks() {
        let vac = make_tmss(1.0).unwrap();
        close(state_wigner(&vac, &[0.0; 4]).unwrap(), 1.0 / (4.0 * PI * PI), 1e-15);
        let s = make_tmss(1.4).unwrap();
        close(state_wigner(&s, &[0.0; 4]).unwrap(), 1.0 / (4.0 * PI * PI), 1e-12);
        assert!(state_wigner(&s, &[0.0; 2]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = TmssParameters::new(1.3, 0.7).unwrap().state().unwrap();
        let text = s.to_json().unwrap();
        assert!(text.contains("\"cov\"") && text.contains("\"partition\""));
        let back = GaussianState::from_json(&text).unwrap();
        for (a, b) in back.covariance().matrix().iter().zip(s.covariance().matrix().iter()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        assert!(GaussianState::from_json(r#"{"mean":[0,0],"cov":[[0.5,0],[0,0.5]],"partition":[1]}"#).is_err());
    }
}
