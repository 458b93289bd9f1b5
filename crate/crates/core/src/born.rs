//! Quantum probabilities for displaced click detection on a Gaussian state,
//! CHSH evaluation and displacement optimization.
//!
//! `p(ab|xy) = (4 pi)^2 int W(r) Q_a(r_A) R_b(r_B) dr` is evaluated exactly:
//! a product of Gaussians is Gaussian, and the remaining polynomial factor
//! is integrated with Gaussian moments.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::simplex::{self, NelderMeadOptions};
use crate::states::GaussianState;
use crate::wigner::{check_epsilon, make_click_povm, GaussianTerm, WignerForm};

const FOUR_PI: f64 = 4.0 * PI;

/// Moments `E[z^k]` of a Gaussian vector of dimension at most 4.
struct Moments {
    dim: usize,
    mean: [f64; 4],
    cov: [[f64; 4]; 4],
}

impl Moments {
    /// Stein recursion: `E[z_i M] = mu_i E[M] + sum_j S_ij E[d M / d z_j]`.
    fn moment(&self, exps: [u8; 4]) -> f64 {
        let Some(i) = (0..self.dim).find(|&i| exps[i] > 0) else {
            return 1.0;
        };
        let mut rest = exps;
        rest[i] -= 1;
        let mut acc = self.mean[i] * self.moment(rest);
        for j in 0..self.dim {
            if rest[j] > 0 && self.cov[i][j] != 0.0 {
                let mut lower = rest;
                lower[j] -= 1;
                acc += self.cov[i][j] * f64::from(rest[j]) * self.moment(lower);
            }
        }
        acc
    }
}

/// `int N(r; m, V) prod_t [coef_t P_t(r_t - c_t) N(r_t; c_t, w_t I)] dr` over the
/// coordinates covered by `terms` (one single-mode term per block of 2).
fn gaussian_overlap(mean: &DVector<f64>, cov: &DMatrix<f64>, terms: &[&GaussianTerm]) -> f64 {
    let k = mean.len();
    debug_assert_eq!(k, 2 * terms.len());
    let center = DVector::from_iterator(k, terms.iter().flat_map(|t| t.center));
    let width = DVector::from_iterator(k, terms.iter().flat_map(|t| [t.width, t.width]));
    let mut s = cov.clone();
    for i in 0..k {
        s[(i, i)] += width[i];
    }
    let chol = s.cholesky().expect("V + D is positive definite");
    let diff = mean - &center;
    let solved = chol.solve(&diff);
    let det = chol.l().diagonal().product().powi(2);
    let prefactor = (-0.5 * diff.dot(&solved)).exp() / ((2.0 * PI).powi(k as i32 / 2) * det.sqrt());

    // posterior of r - c: mean D S^-1 (m - c), covariance D - D S^-1 D
    let d = DMatrix::from_diagonal(&width);
    let shift = &d * solved;
    let post = &d - &d * chol.solve(&d);
    let mut moments = Moments { dim: k, mean: [0.0; 4], cov: [[0.0; 4]; 4] };
    for i in 0..k {
        moments.mean[i] = shift[i];
        for j in 0..k {
            moments.cov[i][j] = 0.5 * (post[(i, j)] + post[(j, i)]);
        }
    }

    let mut poly = 0.0;
    match terms {
        [a] => {
            for (i, j, c) in a.poly.monomials() {
                poly += c * moments.moment([i as u8, j as u8, 0, 0]);
            }
        }
        [a, b] => {
            for (i, j, ca) in a.poly.monomials() {
                for (l, m, cb) in b.poly.monomials() {
                    poly += ca * cb * moments.moment([i as u8, j as u8, l as u8, m as u8]);
                }
            }
        }
        _ => unreachable!("one or two single-mode terms"),
    }
    prefactor * poly * terms.iter().map(|t| t.coef).product::<f64>()
}

fn marginal(state: &GaussianState, offset: usize) -> (DVector<f64>, DMatrix<f64>) {
    let mean = DVector::from_column_slice(&state.mean().as_slice()[offset..offset + 2]);
    (mean, state.covariance().block(offset, 2).into_matrix())
}

/// `(4 pi) int W_A(r_A) Q(r_A) dr_A`: the expectation of a single-party element.
pub fn marginal_probability(state: &GaussianState, party: usize, element: &WignerForm) -> Result<f64> {
    state.require_one_by_one()?;
    if party > 1 {
        return Err(invalid(format!("party index {party} out of range")));
    }
    let (mean, cov) = marginal(state, 2 * party);
    let terms: f64 = element.terms().iter().map(|t| gaussian_overlap(&mean, &cov, &[t])).sum();
    Ok(FOUR_PI * (element.constant() + terms))
}

/// `Tr[rho (Q (x) R)]` for single-mode elements on a 1x1-mode state.
pub fn probability_phase_space(state: &GaussianState, element_a: &WignerForm, element_b: &WignerForm) -> Result<f64> {
    state.require_one_by_one()?;
    let (ma, va) = marginal(state, 0);
    let (mb, vb) = marginal(state, 2);
    let full_mean = state.mean().to_dvector();
    let full_cov = state.covariance().matrix();
    let (ca, cb) = (element_a.constant(), element_b.constant());

    let mut total = ca * cb;
    for t in element_b.terms() {
        total += ca * gaussian_overlap(&mb, &vb, &[t]);
    }
    for t in element_a.terms() {
        total += cb * gaussian_overlap(&ma, &va, &[t]);
        for u in element_b.terms() {
            total += gaussian_overlap(&full_mean, full_cov, &[t, u]);
        }
    }
    Ok(FOUR_PI * FOUR_PI * total)
}

/// Displacements `(alpha_0, alpha_1)`, `(beta_0, beta_1)` and detector noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshSetting {
    pub alpha: [Complex64; 2],
    pub beta: [Complex64; 2],
    pub epsilon: f64,
}

impl ChshSetting {
    pub fn new(alpha: [Complex64; 2], beta: [Complex64; 2], epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self { alpha, beta, epsilon })
    }

    /// Real displacements with `beta_y = -alpha_y`.
    pub fn mirrored(alpha0: f64, alpha1: f64, epsilon: f64) -> Result<Self> {
        let a = [Complex64::new(alpha0, 0.0), Complex64::new(alpha1, 0.0)];
        Self::new(a, [-a[0], -a[1]], epsilon)
    }
}

/// Outcome `+1` maps to index 0, `-1` to index 1.
pub const OUTCOMES: [i32; 2] = [1, -1];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshEvaluation {
    /// `probabilities[x][y][a][b]`.
    pub probabilities: [[[[f64; 2]; 2]; 2]; 2],
    /// `correlators[x][y] = <a_x b_y>`.
    pub correlators: [[f64; 2]; 2],
    pub s: f64,
}

fn chsh_combination(c: &[[f64; 2]; 2]) -> f64 {
    c[0][0] + c[0][1] + c[1][0] - c[1][1]
}

/// Full 16-entry probability table, correlators and `S`.
pub fn evaluate_chsh(state: &GaussianState, setting: &ChshSetting) -> Result<ChshEvaluation> {
    let fam_a = setting.alpha.map(|a| make_click_povm(setting.epsilon, a));
    let fam_b = setting.beta.map(|b| make_click_povm(setting.epsilon, b));
    let mut probabilities = [[[[0.0; 2]; 2]; 2]; 2];
    let mut correlators = [[0.0; 2]; 2];
    for x in 0..2 {
        let fa = fam_a[x].as_ref().map_err(|e| invalid(e.to_string()))?;
        for y in 0..2 {
            let fb = fam_b[y].as_ref().map_err(|e| invalid(e.to_string()))?;
            for (ia, &a) in OUTCOMES.iter().enumerate() {
                for (ib, &b) in OUTCOMES.iter().enumerate() {
                    let p = probability_phase_space(state, fa.element(a).unwrap(), fb.element(b).unwrap())?;
                    probabilities[x][y][ia][ib] = p;
                    correlators[x][y] += f64::from(a * b) * p;
                }
            }
        }
    }
    Ok(ChshEvaluation { probabilities, correlators, s: chsh_combination(&correlators) })
}

/// `S` from the four joint no-click probabilities and the four marginals,
/// `<a b> = 1 - 2 p_A - 2 p_B + 4 p_AB`.
pub fn chsh_value(state: &GaussianState, setting: &ChshSetting) -> Result<f64> {
    let no_click = |alpha| -> Result<WignerForm> {
        Ok(make_click_povm(setting.epsilon, alpha)?.element(1).cloned().expect("no-click outcome"))
    };
    let qa = [no_click(setting.alpha[0])?, no_click(setting.alpha[1])?];
    let rb = [no_click(setting.beta[0])?, no_click(setting.beta[1])?];
    let pa = [marginal_probability(state, 0, &qa[0])?, marginal_probability(state, 0, &qa[1])?];
    let pb = [marginal_probability(state, 1, &rb[0])?, marginal_probability(state, 1, &rb[1])?];
    let mut c = [[0.0; 2]; 2];
    for x in 0..2 {
        for y in 0..2 {
            let joint = probability_phase_space(state, &qa[x], &rb[y])?;
            c[x][y] = 1.0 - 2.0 * pa[x] - 2.0 * pb[y] + 4.0 * joint;
        }
    }
    Ok(chsh_combination(&c))
}

/// Which displacements the optimizer may vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChshConstraint {
    /// Real `alpha_x in [-1, 1]`, `beta_y = -alpha_y`.
    Mirrored,
    /// All four displacements complex and independent.
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    pub grid_step: f64,
    /// Evaluation budget of the local refinement (per real parameter pair in free mode).
    pub budget: usize,
    pub tol: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self { grid_step: 0.05, budget: 200, tol: 1e-6 }
    }
}

pub fn optimize_chsh(
    state: &GaussianState,
    epsilon: f64,
    constraint: ChshConstraint,
) -> Result<(ChshSetting, ChshEvaluation)> {
    optimize_chsh_with(state, epsilon, constraint, &OptimizerOptions::default())
}

/// Grid search over `alpha_0, alpha_1 in [-1, 1]` under the mirrored
/// constraint, then Nelder-Mead refinement. Free mode refines all eight
/// real parameters starting from the mirrored optimum.
pub fn optimize_chsh_with(
    state: &GaussianState,
    epsilon: f64,
    constraint: ChshConstraint,
    opts: &OptimizerOptions,
) -> Result<(ChshSetting, ChshEvaluation)> {
    check_epsilon(epsilon)?;
    state.require_one_by_one()?;
    if !(opts.grid_step > 0.0) {
        return Err(invalid("optimizer grid step must be positive"));
    }
    let n = (2.0 / opts.grid_step).round() as usize + 1;
    let axis: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
    let mirrored_s = |a0: f64, a1: f64| -> f64 {
        ChshSetting::mirrored(a0, a1, epsilon).and_then(|s| chsh_value(state, &s)).unwrap_or(f64::NEG_INFINITY)
    };
    let scores: Vec<f64> = (0..n * n).into_par_iter().map(|k| mirrored_s(axis[k / n], axis[k % n])).collect();
    // strict improvement keeps the lexicographically first point on ties
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = k;
        }
    }
    let start = [axis[best / n], axis[best % n]];
    let nm = NelderMeadOptions {
        max_evals: opts.budget,
        f_tol: opts.tol,
        initial_step: opts.grid_step,
        lower: Some(vec![-1.0; 2]),
        upper: Some(vec![1.0; 2]),
    };
    let refined = simplex::minimize(|x| -mirrored_s(x[0], x[1]), &start, &nm);
    let (a0, a1) = if -refined.f >= scores[best] { (refined.x[0], refined.x[1]) } else { (start[0], start[1]) };
    // a zero-mean state is invariant under r -> -r, so (alpha, beta) and
    // (-alpha, -beta) give the same S; report the twin with alpha_0 >= 0
    let flip = state.mean().as_slice().iter().all(|&m| m == 0.0) && a0 < 0.0;
    let (a0, a1) = if flip { (-a0, -a1) } else { (a0, a1) };
    let mut setting = ChshSetting::mirrored(a0, a1, epsilon)?;

    if constraint == ChshConstraint::Free {
        let pack = |s: &ChshSetting| -> Vec<f64> {
            s.alpha.iter().chain(&s.beta).flat_map(|c| [c.re, c.im]).collect()
        };
        let unpack = |v: &[f64]| -> ChshSetting {
            let c = |k: usize| Complex64::new(v[2 * k], v[2 * k + 1]);
            ChshSetting { alpha: [c(0), c(1)], beta: [c(2), c(3)], epsilon }
        };
        let free_s = |v: &[f64]| chsh_value(state, &unpack(v)).unwrap_or(f64::NEG_INFINITY);
        let x0 = pack(&setting);
        let s0 = free_s(&x0);
        let nm = NelderMeadOptions {
            max_evals: opts.budget * 4,
            f_tol: opts.tol,
            initial_step: opts.grid_step,
            lower: Some(vec![-1.0; 8]),
            upper: Some(vec![1.0; 8]),
        };
        let refined = simplex::minimize(|x| -free_s(x), &x0, &nm);
        if -refined.f > s0 {
            setting = unpack(&refined.x);
        }
    }
    let eval = evaluate_chsh(state, &setting)?;
    Ok((setting, eval))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{make_tmss, TmssParameters};
    use crate::wigner::wigner_identity;

    fn zero() -> Complex64 {
        Complex64::new(0.0, 0.0)
    }

    #[test]
    fn stein_moments() {
        let m = Moments { dim: 2, mean: [0.5, -1.0, 0.0, 0.0], cov: [[2.0, 0.3, 0.0, 0.0], [0.3, 1.0, 0.0, 0.0], [0.0; 4], [0.0; 4]] };
        assert!((m.moment([2, 0, 0, 0]) - 2.25).abs() < 1e-15);
        // E[x y] = mu_x mu_y + S_xy
        assert!((m.moment([1, 1, 0, 0]) - (-0.5 + 0.3)).abs() < 1e-15);
        // zero-mean x^4 = 3 s^2
        let c = Moments { dim: 1, mean: [0.0; 4], cov: [[2.0, 0.0, 0.0, 0.0], [0.0; 4], [0.0; 4], [0.0; 4]] };
        assert!((c.moment([4, 0, 0, 0]) - 12.0).abs() < 1e-14);
    }

    #[test]
    fn vacuum_probabilities() {
        let vac = make_tmss(1.0).unwrap();
        let fam = make_click_povm(0.0, zero()).unwrap();
        let p = probability_phase_space(&vac, fam.element(1).unwrap(), fam.element(1).unwrap()).unwrap();
        assert!((p - 1.0).abs() < 1e-14);
        let p = probability_phase_space(&vac, fam.element(-1).unwrap(), fam.element(1).unwrap()).unwrap();
        assert!(p.abs() < 1e-14);
        let p = probability_phase_space(&vac, &wigner_identity(), &wigner_identity()).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
    }

    #[test]
    fn chsh_value_matches_full_table() {
        let state = TmssParameters::new(1.4, 0.95).unwrap().state().unwrap();
        let setting = ChshSetting::mirrored(0.12, -0.48, 0.02).unwrap();
        let full = evaluate_chsh(&state, &setting).unwrap();
        let fast = chsh_value(&state, &setting).unwrap();
        assert!((full.s - fast).abs() < 1e-12);
    }

    #[test]
    fn product_state_is_local() {
        let vac = make_tmss(1.0).unwrap();
        let setting = ChshSetting::mirrored(0.3, -0.7, 0.05).unwrap();
        assert!(evaluate_chsh(&vac, &setting).unwrap().s <= 2.0 + 1e-9);
    }

    #[test]
    fn rejects_unsupported_partition() {
        let s = crate::states::GaussianState::new(
            crate::symplectic::MeanVector::zeros(2),
            crate::symplectic::CovarianceMatrix::identity(4),
            vec![2],
        )
        .unwrap();
        let f = wigner_identity();
        assert!(probability_phase_space(&s, &f, &f).is_err());
    }
}
