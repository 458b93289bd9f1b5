//! Brute-force Born-rule oracle in a truncated Fock basis.
//!
//! Independent of the phase-space route: the lossy two-mode squeezed state
//! is built from its Schmidt form and beam-splitter Kraus operators, and the
//! detector elements from an exponentiated displacement generator.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::states::TmssParameters;
use crate::wigner::check_epsilon;

/// Largest tolerated truncated Schmidt weight.
pub const MAX_TAIL_BOUND: f64 = 1e-6;

/// Extra Fock levels used while exponentiating the displacement generator.
const DISPLACEMENT_PADDING: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FockOracleConfig {
    /// Highest photon number kept per mode.
    pub cutoff: usize,
}

impl Default for FockOracleConfig {
    fn default() -> Self {
        Self { cutoff: 25 }
    }
}

/// Weight of the two-mode squeezed state above `cutoff` photons:
/// `sum_{n > cutoff} (1 - l^2) l^(2n) = l^(2 (cutoff + 1))`, `l^2 = (nu-1)/(nu+1)`.
pub fn tail_bound(nu: f64, cutoff: usize) -> f64 {
    ((nu - 1.0) / (nu + 1.0)).powi(cutoff as i32 + 1)
}

/// `D(alpha)` restricted to the first `dim` levels, computed with padding.
fn displacement(alpha: Complex64, dim: usize) -> DMatrix<Complex64> {
    let big = dim + DISPLACEMENT_PADDING;
    let mut generator = DMatrix::<Complex64>::zeros(big, big);
    for n in 1..big {
        let s = (n as f64).sqrt();
        generator[(n, n - 1)] += alpha * s;
        generator[(n - 1, n)] -= alpha.conj() * s;
    }
    generator.exp().view((0, 0), (dim, dim)).into_owned()
}

/// Truncated matrix of `X_{+1}(eps, alpha)` or `X_{-1}` (`outcome = -1`).
fn click_operator(epsilon: f64, alpha: Complex64, outcome: i32, dim: usize) -> DMatrix<Complex64> {
    let d = displacement(alpha, dim);
    let (v0, v1) = (d.column(0), d.column(1));
    let no_click = (v0 * v0.adjoint()) * Complex64::from(1.0 - epsilon) + (v1 * v1.adjoint()) * Complex64::from(epsilon);
    if outcome == 1 {
        no_click
    } else {
        DMatrix::identity(dim, dim) - no_click
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `Tr[rho' (X_a(eps, alpha) (x) X_b(eps, beta))]` for the lossy two-mode squeezed state.
pub fn probability_fock(
    params: TmssParameters,
    epsilon: f64,
    alpha: Complex64,
    beta: Complex64,
    outcome: (i32, i32),
    config: FockOracleConfig,
) -> Result<f64> {
    check_epsilon(epsilon)?;
    for o in [outcome.0, outcome.1] {
        if o != 1 && o != -1 {
            return Err(invalid(format!("click outcomes are +1 or -1, got {o}")));
        }
    }
    let tail = tail_bound(params.nu, config.cutoff);
    if tail > MAX_TAIL_BOUND || config.cutoff == 0 {
        return Err(Error::Truncation { cutoff: config.cutoff, tail_bound: tail, limit: MAX_TAIL_BOUND });
    }
    let dim = config.cutoff + 1;
    let lambda2 = (params.nu - 1.0) / (params.nu + 1.0);
    let schmidt: Vec<f64> = (0..dim).map(|n| ((1.0 - lambda2) * lambda2.powi(n as i32)).sqrt()).collect();
    let eta = params.eta;
    // kraus[k][n] = <n-k| A_k |n>
    let kraus: Vec<Vec<f64>> = (0..dim)
        .map(|k| {
            (0..dim)
                .map(|n| {
                    if n < k {
                        0.0
                    } else {
                        (binomial(n, k) * eta.powi((n - k) as i32) * (1.0 - eta).powi(k as i32)).sqrt()
                    }
                })
                .collect()
        })
        .collect();

    let xa = click_operator(epsilon, alpha, outcome.0, dim);
    let xb = click_operator(epsilon, beta, outcome.1, dim);

    // rho' = sum_{k,l} |psi_kl><psi_kl|, psi_kl = sum_n c_n A_k(n) A_l(n) |n-k, n-l>
    let mut total = Complex64::new(0.0, 0.0);
    for k in 0..dim {
        for l in 0..dim {
            let start = k.max(l);
            let amp: Vec<f64> = (start..dim).map(|n| schmidt[n] * kraus[k][n] * kraus[l][n]).collect();
            for (i, &an) in amp.iter().enumerate() {
                if an == 0.0 {
                    continue;
                }
                let n = start + i;
                for (j, &am) in amp.iter().enumerate() {
                    let m = start + j;
                    total += xa[(n - k, m - k)] * xb[(n - l, m - l)] * (an * am);
                }
            }
        }
    }
    Ok(total.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero() -> Complex64 {
        Complex64::new(0.0, 0.0)
    }

    #[test]
    fn displacement_is_unitary_on_low_levels() {
        let d = displacement(Complex64::new(0.7, -0.4), 26);
        // coherent amplitude |<0|alpha>|^2 = exp(-|alpha|^2)
        assert!((d[(0, 0)].norm_sqr() - (-0.65f64).exp()).abs() < 1e-12);
        let col: f64 = d.column(0).iter().map(|c| c.norm_sqr()).sum();
        assert!((col - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vacuum_expectations() {
        let p = TmssParameters::new(1.0, 0.4).unwrap();
        let v = probability_fock(p, 0.0, zero(), zero(), (1, 1), FockOracleConfig::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let v = probability_fock(p, 0.0, zero(), zero(), (-1, 1), FockOracleConfig::default()).unwrap();
        assert!(v.abs() < 1e-12);
        let alpha = Complex64::new(0.5, 0.0);
        let v = probability_fock(p, 0.0, alpha, zero(), (1, 1), FockOracleConfig::default()).unwrap();
        assert!((v - (-0.25f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn schmidt_overlap() {
        let p = TmssParameters::new(1.4, 1.0).unwrap();
        let v = probability_fock(p, 0.0, zero(), zero(), (1, 1), FockOracleConfig::default()).unwrap();
        assert!((v - 5.0 / 6.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn truncation_error() {
        let p = TmssParameters::new(3.0, 0.5).unwrap();
        let err = probability_fock(p, 0.0, zero(), zero(), (1, 1), FockOracleConfig { cutoff: 5 }).unwrap_err();
        assert!(matches!(err, Error::Truncation { .. }));
        assert!(tail_bound(1.5, 25) <= 1e-8);
    }
}
