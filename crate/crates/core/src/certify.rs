//! Noise-transfer certificates of local-hidden-variable models.
//!
//! A splitting `V = omega + gamma_A (+) gamma_B` with `omega, gamma >= 0`
//! certifies locality when every measurement Wigner function convolved
//! with `G(0, gamma)` of its party is non-negative.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::born::{optimize_chsh_with, ChshConstraint, ChshEvaluation, ChshSetting, OptimizerOptions};
use crate::error::{invalid, Result};
use crate::states::{is_ppt_entangled, GaussianState, TmssParameters};
use crate::symplectic::{is_quantum_covariance, psd_order_margin, CovarianceMatrix, DEFAULT_TOL};
use crate::wigner::{
    convolve_general, convolve_isotropic, make_click_povm, minimum_of_form, GridSpec, PovmFamily,
};

/// Non-negativity tolerance for closed-form minima.
pub const CLOSED_FORM_TOL: f64 = 1e-10;
/// Non-negativity tolerance for minima found on a quadrature grid.
pub const GRID_TOL: f64 = 1e-8;
/// `S` must exceed `2 + CHSH_MARGIN` to count as a violation.
pub const CHSH_MARGIN: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalityCertificate {
    pub gamma_a: CovarianceMatrix,
    pub gamma_b: CovarianceMatrix,
    pub omega: CovarianceMatrix,
    pub omega_eigenvalues: Vec<f64>,
    /// Minimum of every convolved element, keyed `"A<x>:<outcome>"` / `"B<y>:<outcome>"`.
    pub min_values: BTreeMap<String, f64>,
    /// Smallest of the omega eigenvalues and the element minima.
    pub margin: f64,
    /// Valid for every measurement (separable state with quantum-valid gammas).
    pub universal: bool,
}

impl LocalityCertificate {
    /// The common `t` when both gammas equal `t I_2`.
    pub fn isotropic_t(&self) -> Option<f64> {
        let t = self.gamma_a.matrix()[(0, 0)];
        let iso = |g: &CovarianceMatrix| {
            let m = g.matrix();
            m[(0, 1)] == 0.0 && m[(1, 0)] == 0.0 && m[(0, 0)] == t && m[(1, 1)] == t
        };
        (iso(&self.gamma_a) && iso(&self.gamma_b)).then_some(t)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn element_label(party: char, setting: usize, outcome: i32) -> String {
    format!("{party}{setting}:{outcome:+}")
}

fn splitting(state: &GaussianState, gamma_a: &CovarianceMatrix, gamma_b: &CovarianceMatrix) -> Result<CovarianceMatrix> {
    state.covariance().try_sub(&gamma_a.direct_sum(gamma_b))
}

/// Largest `t` with `V >= t I (+) t I`, i.e. the smallest eigenvalue of `V`.
pub fn isotropic_t_max(state: &GaussianState) -> f64 {
    state.covariance().min_eigenvalue().max(0.0)
}

/// Tests `gamma_A = gamma_B = t_max I_2`.
///
/// Minima only grow with `t` (heat-flow monotonicity), so `t_max` is the
/// only value worth testing.
pub fn certify_isotropic(
    state: &GaussianState,
    families_a: &[PovmFamily],
    families_b: &[PovmFamily],
) -> Result<Option<LocalityCertificate>> {
    state.require_one_by_one()?;
    let t = isotropic_t_max(state);
    let gamma = CovarianceMatrix::scaled_identity(2, t);
    let omega = splitting(state, &gamma, &gamma)?;
    let omega_eigenvalues = omega.eigenvalues();
    let mut min_values = BTreeMap::new();
    for (party, families) in [('A', families_a), ('B', families_b)] {
        for (x, fam) in families.iter().enumerate() {
            for e in fam.elements() {
                let m = minimum_of_form(&convolve_isotropic(&e.form, t)?);
                min_values.insert(element_label(party, x, e.outcome), m.value);
            }
        }
    }
    let margin = min_values.values().copied().fold(omega_eigenvalues[0], f64::min);
    if omega_eigenvalues[0] < -DEFAULT_TOL || min_values.values().any(|&v| v < -CLOSED_FORM_TOL) {
        return Ok(None);
    }
    Ok(Some(LocalityCertificate {
        gamma_a: gamma.clone(),
        gamma_b: gamma,
        omega,
        omega_eigenvalues,
        min_values,
        margin,
        universal: false,
    }))
}

/// Checks user-supplied `(gamma_A, gamma_B)` pairs in order and returns the
/// first that certifies. Convolutions are numerical on `grid` (or a default
/// grid sized from the largest eigenvalue of gamma), with [`GRID_TOL`].
pub fn certify_with_candidates(
    state: &GaussianState,
    families_a: &[PovmFamily],
    families_b: &[PovmFamily],
    candidates: &[(CovarianceMatrix, CovarianceMatrix)],
    grid: Option<GridSpec>,
) -> Result<Option<LocalityCertificate>> {
    state.require_one_by_one()?;
    'candidates: for (gamma_a, gamma_b) in candidates {
        if gamma_a.dim() != 2 || gamma_b.dim() != 2 {
            return Err(invalid("candidate gammas must be 2x2"));
        }
        if !gamma_a.is_psd(DEFAULT_TOL) || !gamma_b.is_psd(DEFAULT_TOL) {
            continue;
        }
        if psd_order_margin(state.covariance(), gamma_a, gamma_b)? < -DEFAULT_TOL {
            continue;
        }
        let omega = splitting(state, gamma_a, gamma_b)?;
        let omega_eigenvalues = omega.eigenvalues();
        let mut min_values = BTreeMap::new();
        for (party, families, gamma) in [('A', families_a, gamma_a), ('B', families_b, gamma_b)] {
            let spread = gamma.eigenvalues()[1];
            for (x, fam) in families.iter().enumerate() {
                for e in fam.elements() {
                    let center = e.form.terms().first().map_or([0.0, 0.0], |t| t.center);
                    let spec = grid.map_or_else(|| GridSpec::around(center, spread), |g| GridSpec { center, ..g });
                    let (_, grid_min) = convolve_general(&e.form, gamma, &spec)?.minimum();
                    let value = grid_min.min(e.form.constant());
                    if value < -GRID_TOL {
                        continue 'candidates;
                    }
                    min_values.insert(element_label(party, x, e.outcome), value);
                }
            }
        }
        let margin = min_values.values().copied().fold(omega_eigenvalues[0], f64::min);
        return Ok(Some(LocalityCertificate {
            gamma_a: gamma_a.clone(),
            gamma_b: gamma_b.clone(),
            omega,
            omega_eigenvalues,
            min_values,
            margin,
            universal: false,
        }));
    }
    Ok(None)
}

/// Universal certificate for separable states.
///
/// Tries `gamma = t_max I` when `t_max >= 1`, then the local blocks of a
/// product state. Both choices are quantum-valid, so every convolved
/// Wigner function is an expectation value and non-negative. Returns
/// `None` for entangled states, and for separable states outside these
/// two families.
pub fn certify_separable(state: &GaussianState) -> Result<Option<LocalityCertificate>> {
    state.require_one_by_one()?;
    if is_ppt_entangled(state, DEFAULT_TOL)? {
        return Ok(None);
    }
    let t = isotropic_t_max(state);
    let mut candidates = Vec::new();
    if t >= 1.0 - DEFAULT_TOL {
        let g = CovarianceMatrix::scaled_identity(2, t.max(1.0));
        candidates.push((g.clone(), g));
    }
    let v = state.covariance().matrix();
    if v.view((0, 2), (2, 2)).iter().all(|&c| c == 0.0) {
        candidates.push((state.covariance().block(0, 2), state.covariance().block(2, 2)));
    }
    for (gamma_a, gamma_b) in candidates {
        if !is_quantum_covariance(&gamma_a, DEFAULT_TOL)? || !is_quantum_covariance(&gamma_b, DEFAULT_TOL)? {
            continue;
        }
        let omega = splitting(state, &gamma_a, &gamma_b)?;
        let omega_eigenvalues = omega.eigenvalues();
        if omega_eigenvalues[0] < -DEFAULT_TOL {
            continue;
        }
        return Ok(Some(LocalityCertificate {
            gamma_a,
            gamma_b,
            margin: omega_eigenvalues[0],
            omega,
            omega_eigenvalues,
            min_values: BTreeMap::new(),
            universal: true,
        }));
    }
    Ok(None)
}

/// `1 + eta (nu - 1 - sqrt(nu^2 - 1)) >= sqrt(max(0, 1 - 4 eps))`.
pub fn region_condition(eta: f64, nu: f64, epsilon: f64) -> bool {
    region_lhs(eta, nu) >= (1.0 - 4.0 * epsilon).max(0.0).sqrt()
}

/// Smallest eigenvalue of the lossy two-mode squeezed covariance.
pub fn region_lhs(eta: f64, nu: f64) -> f64 {
    1.0 + eta * (nu - 1.0 - (nu * nu - 1.0).sqrt())
}

/// Loss `eta*` above which the isotropic certificate fails; `None` when it
/// holds on all of `[0, 1]` (including `nu = 1`).
pub fn boundary_eta(nu: f64, epsilon: f64) -> Option<f64> {
    if !(nu > 1.0) {
        return None;
    }
    let numerator = 1.0 - (1.0 - 4.0 * epsilon).max(0.0).sqrt();
    let denominator = (nu * nu - 1.0).sqrt() - (nu - 1.0);
    let eta = numerator / denominator;
    (0.0..=1.0).contains(&eta).then_some(eta)
}

/// Click families for the certifier; the minima do not depend on the displacement.
pub fn click_families(epsilon: f64, displacements: &[Complex64]) -> Result<Vec<PovmFamily>> {
    displacements.iter().map(|&a| make_click_povm(epsilon, a)).collect()
}

/// Isotropic certificate for the lossy two-mode squeezed state and click detectors.
pub fn certify_lossy_tmss(params: TmssParameters, epsilon: f64) -> Result<Option<LocalityCertificate>> {
    let fams = click_families(epsilon, &[Complex64::new(0.0, 0.0)])?;
    certify_isotropic(&params.state()?, &fams, &fams)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionStatus {
    LhvCertified,
    ChshViolating,
    Undetermined,
}

impl RegionStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegionStatus::LhvCertified => "lhv_certified",
            RegionStatus::ChshViolating => "chsh_violating",
            RegionStatus::Undetermined => "undetermined",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Certificate(LocalityCertificate),
    Chsh { setting: ChshSetting, evaluation: ChshEvaluation },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionVerdict {
    pub eta: f64,
    pub nu: f64,
    pub status: RegionStatus,
    /// Certificate margin, or the best `S` found.
    pub value: f64,
    pub witness: Witness,
}

/// Certifies locality if possible, otherwise searches for a CHSH violation.
pub fn classify_point(eta: f64, nu: f64, epsilon: f64, optimizer: &OptimizerOptions) -> Result<RegionVerdict> {
    let params = TmssParameters::new(nu, eta)?;
    if let Some(cert) = certify_lossy_tmss(params, epsilon)? {
        return Ok(RegionVerdict {
            eta,
            nu,
            status: RegionStatus::LhvCertified,
            value: cert.margin,
            witness: Witness::Certificate(cert),
        });
    }
    let (setting, evaluation) = optimize_chsh_with(&params.state()?, epsilon, ChshConstraint::Mirrored, optimizer)?;
    let status = if evaluation.s > 2.0 + CHSH_MARGIN { RegionStatus::ChshViolating } else { RegionStatus::Undetermined };
    Ok(RegionVerdict { eta, nu, status, value: evaluation.s, witness: Witness::Chsh { setting, evaluation } })
}
