//! Executable form of the noise-transfer LHV model.
//!
//! Hidden variable `r ~ G(mean, omega)`; party A answers setting `x` with
//! probabilities `(4 pi) (Q_{a|x} * G(0, gamma_A))(r_A)`, party B likewise
//! from `r_B` only.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::born::probability_phase_space;
use crate::certify::{LocalityCertificate, CLOSED_FORM_TOL};
use crate::error::{Error, Result};
use crate::states::GaussianState;
use crate::symplectic::{GaussianDistribution, GaussianSampler, DEFAULT_TOL};
use crate::wigner::{minimum_of_form, PovmFamily};

const CHUNK: usize = 1 << 16;

/// One party's response functions: a convolved family per setting.
#[derive(Clone, Debug)]
pub struct LocalResponses {
    families: Vec<PovmFamily>,
}

impl LocalResponses {
    pub fn families(&self) -> &[PovmFamily] {
        &self.families
    }

    /// Outcome probabilities for `setting` at local phase-space point `r`,
    /// clamped at zero and renormalized.
    pub fn probabilities(&self, setting: usize, r: [f64; 2]) -> Vec<f64> {
        let mut p: Vec<f64> =
            self.families[setting].elements().iter().map(|e| (4.0 * PI * e.form.eval(r)).max(0.0)).collect();
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= total);
        p
    }

    /// Unclamped `(4 pi) sum_a Q~_a(r)`; equals 1 by completeness.
    pub fn raw_total(&self, setting: usize, r: [f64; 2]) -> f64 {
        self.families[setting].elements().iter().map(|e| 4.0 * PI * e.form.eval(r)).sum()
    }
}

#[derive(Clone, Debug)]
pub struct LhvModel {
    hidden: GaussianDistribution,
    responses_a: LocalResponses,
    responses_b: LocalResponses,
    state: GaussianState,
    families_a: Vec<PovmFamily>,
    families_b: Vec<PovmFamily>,
}

impl LhvModel {
    pub fn hidden(&self) -> &GaussianDistribution {
        &self.hidden
    }

    pub fn responses_a(&self) -> &LocalResponses {
        &self.responses_a
    }

    pub fn responses_b(&self) -> &LocalResponses {
        &self.responses_b
    }

    /// Born-rule table `[x][y][a][b]` for the wrapped state and measurements.
    pub fn target_table(&self) -> Result<Vec<Vec<Vec<Vec<f64>>>>> {
        self.families_a
            .iter()
            .map(|fa| {
                self.families_b
                    .iter()
                    .map(|fb| {
                        fa.elements()
                            .iter()
                            .map(|ea| {
                                fb.elements()
                                    .iter()
                                    .map(|eb| probability_phase_space(&self.state, &ea.form, &eb.form))
                                    .collect()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }
}

/// Builds the model of a certificate with isotropic gammas.
pub fn build_lhv_model(
    certificate: &LocalityCertificate,
    state: &GaussianState,
    families_a: &[PovmFamily],
    families_b: &[PovmFamily],
) -> Result<LhvModel> {
    state.require_one_by_one()?;
    let t = certificate
        .isotropic_t()
        .ok_or_else(|| Error::Precondition("sampling needs gamma_A = gamma_B = t I".into()))?;
    let omega = state.covariance().try_sub(&certificate.gamma_a.direct_sum(&certificate.gamma_b))?;
    if omega.min_eigenvalue() < -DEFAULT_TOL {
        return Err(Error::Precondition(format!(
            "certificate does not fit this state: V - gamma has eigenvalue {:.3e}",
            omega.min_eigenvalue()
        )));
    }
    let convolve = |fams: &[PovmFamily]| -> Result<LocalResponses> {
        let families = fams.iter().map(|f| f.convolved(t)).collect::<Result<Vec<_>>>()?;
        for fam in &families {
            for e in fam.elements() {
                let m = minimum_of_form(&e.form);
                if m.value < -CLOSED_FORM_TOL {
                    return Err(Error::Precondition(format!(
                        "convolved element {} of {} is negative ({:.3e})",
                        e.outcome,
                        fam.setting(),
                        m.value
                    )));
                }
            }
        }
        Ok(LocalResponses { families })
    };
    let hidden = GaussianDistribution::new(state.mean().as_slice().to_vec(), clamp_psd(omega))?;
    Ok(LhvModel {
        hidden,
        responses_a: convolve(families_a)?,
        responses_b: convolve(families_b)?,
        state: state.clone(),
        families_a: families_a.to_vec(),
        families_b: families_b.to_vec(),
    })
}

/// Removes round-off negativity from a boundary splitting.
fn clamp_psd(m: crate::symplectic::CovarianceMatrix) -> crate::symplectic::CovarianceMatrix {
    let lo = m.min_eigenvalue();
    if lo >= 0.0 {
        return m;
    }
    m.try_add(&crate::symplectic::CovarianceMatrix::scaled_identity(m.dim(), -lo)).expect("same dimension")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub samples: usize,
    pub seed: u64,
    /// `[x][y][a][b]`, outcomes in family order.
    pub empirical: Vec<Vec<Vec<Vec<f64>>>>,
    pub target: Vec<Vec<Vec<Vec<f64>>>>,
    pub z_scores: Vec<Vec<Vec<Vec<f64>>>>,
    pub max_abs_deviation: f64,
    pub max_abs_z: f64,
    pub outcomes_a: Vec<Vec<i32>>,
    pub outcomes_b: Vec<Vec<i32>>,
}

impl SimulationReport {
    fn chsh(&self, table: &[Vec<Vec<Vec<f64>>>]) -> Option<f64> {
        if table.len() != 2 || table[0].len() != 2 {
            return None;
        }
        let mut c = [[0.0; 2]; 2];
        for x in 0..2 {
            for y in 0..2 {
                for (ia, &a) in self.outcomes_a[x].iter().enumerate() {
                    for (ib, &b) in self.outcomes_b[y].iter().enumerate() {
                        c[x][y] += f64::from(a * b) * table[x][y][ia][ib];
                    }
                }
            }
        }
        Some(c[0][0] + c[0][1] + c[1][0] - c[1][1])
    }

    pub fn empirical_s(&self) -> Option<f64> {
        self.chsh(&self.empirical)
    }

    pub fn target_s(&self) -> Option<f64> {
        self.chsh(&self.target)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn draw(p: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, &pk) in p.iter().enumerate() {
        acc += pk;
        if u < acc {
            return k;
        }
    }
    p.len() - 1
}

/// Runs `samples` trials. Each trial draws one hidden value and one local
/// outcome per setting on each side, so every setting pair is tallied from
/// the same hidden value.
pub fn simulate(model: &LhvModel, samples: usize, seed: u64) -> Result<SimulationReport> {
    let sampler = GaussianSampler::new(&model.hidden)?;
    let fa = &model.responses_a.families;
    let fb = &model.responses_b.families;
    let (nx, ny) = (fa.len(), fb.len());
    let na: Vec<usize> = fa.iter().map(|f| f.elements().len()).collect();
    let nb: Vec<usize> = fb.iter().map(|f| f.elements().len()).collect();
    // dense [x][y][4][4] layout
    let offset = |x: usize, y: usize, a: usize, b: usize| (x * ny + y) * 16 + a * 4 + b;
    if na.iter().chain(&nb).any(|&n| n > 4) {
        return Err(Error::Precondition("simulation supports at most 4 outcomes per setting".into()));
    }
    let chunks = samples.div_ceil(CHUNK);
    let counts: Vec<u64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut counts = vec![0u64; nx * ny * 16];
            let n = CHUNK.min(samples - c * CHUNK);
            let mut outcome_a = vec![0usize; nx];
            let mut outcome_b = vec![0usize; ny];
            for _ in 0..n {
                let r = sampler.sample(&mut rng);
                for (x, o) in outcome_a.iter_mut().enumerate() {
                    *o = draw(&model.responses_a.probabilities(x, [r[0], r[1]]), rng.gen::<f64>());
                }
                for (y, o) in outcome_b.iter_mut().enumerate() {
                    *o = draw(&model.responses_b.probabilities(y, [r[2], r[3]]), rng.gen::<f64>());
                }
                for x in 0..nx {
                    for y in 0..ny {
                        counts[offset(x, y, outcome_a[x], outcome_b[y])] += 1;
                    }
                }
            }
            counts
        })
        .reduce(|| vec![0u64; nx * ny * 16], |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        });

    let target = model.target_table()?;
    let n = samples as f64;
    let mut empirical = target.clone();
    let mut z_scores = target.clone();
    let (mut max_dev, mut max_z) = (0.0f64, 0.0f64);
    for x in 0..nx {
        for y in 0..ny {
            for a in 0..na[x] {
                for b in 0..nb[y] {
                    let p = target[x][y][a][b];
                    let phat = counts[offset(x, y, a, b)] as f64 / n;
                    let sigma = (p * (1.0 - p) / n).max(0.0).sqrt();
                    let dev = phat - p;
                    let z = if sigma > 0.0 {
                        dev / sigma
                    } else if dev.abs() < 1e-12 {
                        0.0
                    } else {
                        f64::INFINITY.copysign(dev)
                    };
                    empirical[x][y][a][b] = phat;
                    z_scores[x][y][a][b] = z;
                    max_dev = max_dev.max(dev.abs());
                    max_z = max_z.max(z.abs());
                }
            }
        }
    }
    let outcomes = |fams: &[PovmFamily]| fams.iter().map(|f| f.elements().iter().map(|e| e.outcome).collect()).collect();
    Ok(SimulationReport {
        samples,
        seed,
        empirical,
        target,
        z_scores,
        max_abs_deviation: max_dev,
        max_abs_z: max_z,
        outcomes_a: outcomes(&model.families_a),
        outcomes_b: outcomes(&model.families_b),
    })
}
