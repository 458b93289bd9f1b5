use std::f64::consts::PI;

use gaussian_lhv::born::{evaluate_chsh, marginal_probability, probability_phase_space, ChshSetting};
use gaussian_lhv::certify::{
    certify_isotropic, certify_lossy_tmss, certify_separable, click_families, region_condition,
};
use gaussian_lhv::fock::{probability_fock, FockOracleConfig};
use gaussian_lhv::sampler::{build_lhv_model, simulate};
use gaussian_lhv::states::{apply_pure_loss, is_ppt_entangled, make_tmss, GaussianState, TmssParameters};
use gaussian_lhv::symplectic::{
    convolve_gaussians, is_psd_ordered, is_quantum_covariance, CovarianceMatrix, GaussianDistribution, MeanVector,
    DEFAULT_TOL,
};
use gaussian_lhv::wigner::{convolve_isotropic, make_click_povm, minimum_of_form, wigner_identity};
use gaussian_lhv::Complex64;
use proptest::prelude::*;

fn spd2() -> impl Strategy<Value = CovarianceMatrix> {
    (0.1f64..3.0, 0.1f64..3.0, -0.9f64..0.9).prop_map(|(a, b, r)| {
        let c = r * (a * b).sqrt();
        CovarianceMatrix::from_rows(&[vec![a, c], vec![c, b]]).unwrap()
    })
}

fn gaussian2() -> impl Strategy<Value = GaussianDistribution> {
    (spd2(), -2.0f64..2.0, -2.0f64..2.0).prop_map(|(c, x, p)| GaussianDistribution::new(vec![x, p], c).unwrap())
}

fn close(a: &GaussianDistribution, b: &GaussianDistribution, tol: f64) -> bool {
    a.mean().iter().zip(b.mean()).all(|(x, y)| (x - y).abs() < tol)
        && (a.covariance().matrix() - b.covariance().matrix()).abs().max() < tol
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn lossy(nu: f64, eta: f64) -> GaussianState {
    TmssParameters::new(nu, eta).unwrap().state().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn convolution_commutes_and_associates(a in gaussian2(), b in gaussian2(), c in gaussian2()) {
        let ab = convolve_gaussians(&a, &b).unwrap();
        prop_assert!(close(&ab, &convolve_gaussians(&b, &a).unwrap(), 1e-12));
        let left = convolve_gaussians(&ab, &c).unwrap();
        let right = convolve_gaussians(&a, &convolve_gaussians(&b, &c).unwrap()).unwrap();
        prop_assert!(close(&left, &right, 1e-12));
    }

    #[test]
    fn psd_ordering_is_monotone(nu in 1.0f64..2.0, eta in 0.0f64..1.0, t in 0.0f64..1.0, s in 0.0f64..1.0) {
        let v = lossy(nu, eta).covariance().clone();
        let (lo, hi) = (t.min(s), t.max(s));
        let big = CovarianceMatrix::scaled_identity(2, hi);
        let small = CovarianceMatrix::scaled_identity(2, lo);
        if is_psd_ordered(&v, &big, &big, DEFAULT_TOL).unwrap() {
            prop_assert!(is_psd_ordered(&v, &small, &small, DEFAULT_TOL).unwrap());
        }
    }

    #[test]
    fn quantum_covariances_are_positive(nu in 1.0f64..3.0, eta in 0.0f64..1.0) {
        let v = lossy(nu, eta).covariance().clone();
        prop_assert!(is_quantum_covariance(&v, DEFAULT_TOL).unwrap());
        prop_assert!(v.is_psd(0.0));
    }

    #[test]
    fn loss_composes(nu in 1.0f64..3.0, e1 in 0.0f64..1.0, e2 in 0.0f64..1.0) {
        let twice = apply_pure_loss(&apply_pure_loss(&make_tmss(nu).unwrap(), e1).unwrap(), e2).unwrap();
        let once = apply_pure_loss(&make_tmss(nu).unwrap(), e1 * e2).unwrap();
        prop_assert!((twice.covariance().matrix() - once.covariance().matrix()).abs().max() < 1e-12);
    }

    #[test]
    fn ppt_entanglement_needs_squeezing_and_transmission(nu in 1.0f64..3.0, eta in 0.0f64..1.0) {
        let expected = nu > 1.0 + 1e-6 && eta > 1e-6;
        if (nu - 1.0) * eta > 1e-5 || !expected {
            prop_assert_eq!(is_ppt_entangled(&lossy(nu, eta), DEFAULT_TOL).unwrap(), expected);
        }
    }

    #[test]
    fn loss_purity(nu in 1.01f64..3.0, eta in 0.0f64..0.99) {
        let pure = make_tmss(nu).unwrap().covariance().matrix().determinant();
        prop_assert!((pure - 1.0).abs() < 1e-9);
        prop_assert!(lossy(nu, eta).covariance().matrix().determinant() > 1.0);
    }

    #[test]
    fn convolution_preserves_completeness(eps in 0.0f64..0.25, a in complex(), t in 0.0f64..2.0) {
        let fam = make_click_povm(eps, a).unwrap().convolved(t).unwrap();
        prop_assert!(fam.completeness_defect() < 1e-12);
    }

    #[test]
    fn minimum_ignores_displacement(eps in 0.0f64..0.25, t in 0.0f64..1.0) {
        let mins: Vec<f64> = [Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.0), Complex64::new(-0.48, 0.0)]
            .iter()
            .map(|&a| {
                let form = convolve_isotropic(make_click_povm(eps, a).unwrap().element(-1).unwrap(), t).unwrap();
                minimum_of_form(&form).value
            })
            .collect();
        prop_assert!((mins[0] - mins[1]).abs() < 1e-10 && (mins[0] - mins[2]).abs() < 1e-10);
    }

    #[test]
    fn noise_raises_the_minimum(eps in 0.0f64..0.25, t1 in 0.0f64..1.5, t2 in 0.0f64..1.5) {
        let click = make_click_povm(eps, Complex64::new(0.0, 0.0)).unwrap().element(-1).unwrap().clone();
        let m = |t| minimum_of_form(&convolve_isotropic(&click, t).unwrap()).value;
        prop_assert!(m(t1.max(t2)) >= m(t1.min(t2)) - 1e-12);
    }

    #[test]
    fn click_element_integrates_to_minus_identity_trace(eps in 0.0f64..0.25, a in complex()) {
        let click = make_click_povm(eps, a).unwrap().element(-1).unwrap().clone();
        prop_assert!((click.minus(&wigner_identity()).term_integral() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn tables_are_normalized_no_signaling_and_bounded(
        nu in 1.0f64..2.0, eta in 0.0f64..1.0, eps in 0.0f64..0.25,
        a0 in complex(), a1 in complex(), b0 in complex(), b1 in complex(),
    ) {
        let state = lossy(nu, eta);
        let eval = evaluate_chsh(&state, &ChshSetting::new([a0, a1], [b0, b1], eps).unwrap()).unwrap();
        let fa = click_families(eps, &[a0, a1]).unwrap();
        let fb = click_families(eps, &[b0, b1]).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                let table = eval.probabilities[x][y];
                let total: f64 = table.iter().flatten().sum();
                prop_assert!((total - 1.0).abs() < 1e-9);
                for i in 0..2 {
                    let pa = marginal_probability(&state, 0, &fa[x].elements()[i].form).unwrap();
                    let pb = marginal_probability(&state, 1, &fb[y].elements()[i].form).unwrap();
                    prop_assert!((table[i][0] + table[i][1] - pa).abs() < 1e-9);
                    prop_assert!((table[0][i] + table[1][i] - pb).abs() < 1e-9);
                }
            }
        }
        prop_assert!(eval.s.abs() <= 2.0 * 2f64.sqrt() + 1e-9);
    }

    #[test]
    fn fock_and_phase_space_agree(
        nu in 1.0f64..1.5, eta in 0.0f64..1.0, eps in 0.0f64..0.25,
        a in complex(), b in complex(), oa in prop::sample::select(vec![1, -1]), ob in prop::sample::select(vec![1, -1]),
    ) {
        let params = TmssParameters::new(nu, eta).unwrap();
        let fock = probability_fock(params, eps, a, b, (oa, ob), FockOracleConfig::default()).unwrap();
        let qa = make_click_povm(eps, a).unwrap();
        let qb = make_click_povm(eps, b).unwrap();
        let phase = probability_phase_space(&params.state().unwrap(), qa.element(oa).unwrap(), qb.element(ob).unwrap())
            .unwrap();
        prop_assert!((fock - phase).abs() < 1e-6);
    }

    #[test]
    fn separable_states_get_isotropic_certificates(na in 1.0f64..3.0, nb in 1.0f64..3.0, x in -1.0f64..1.0) {
        // product of two thermal states
        let v = CovarianceMatrix::diagonal(&[na, na, nb, nb]);
        let state = GaussianState::new(MeanVector::new(vec![x, 0.0, 0.0, -x]).unwrap(), v, vec![1, 1]).unwrap();
        let cert = certify_separable(&state).unwrap();
        prop_assert!(cert.is_some_and(|c| c.isotropic_t().is_some()));
    }

    #[test]
    fn certification_is_monotone_in_loss(nu in 1.0f64..2.0, e1 in 0.0f64..1.0, e2 in 0.0f64..1.0, eps in 0.0f64..0.25) {
        let (lo, hi) = (e1.min(e2), e1.max(e2));
        let c = |eta| certify_lossy_tmss(TmssParameters::new(nu, eta).unwrap(), eps).unwrap().is_some();
        if c(hi) {
            prop_assert!(c(lo));
        }
    }

    #[test]
    fn responses_form_distributions(
        nu in 1.0f64..1.3, eta in 0.0f64..0.2, a in complex(), x in -6.0f64..6.0, p in -6.0f64..6.0,
    ) {
        let state = lossy(nu, eta);
        let fams = click_families(0.02, &[a]).unwrap();
        if let Some(cert) = certify_isotropic(&state, &fams, &fams).unwrap() {
            let model = build_lhv_model(&cert, &state, &fams, &fams).unwrap();
            let probs = model.responses_a().probabilities(0, [x, p]);
            prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(probs.iter().all(|&v| (0.0..=1.0).contains(&v)));
            prop_assert!((model.responses_a().raw_total(0, [x, p]) - 1.0).abs() < 1e-9);
            let raw = 4.0 * PI * model.responses_a().families()[0].elements()[1].form.eval([x, p]);
            prop_assert!(raw >= -1e-9);
        }
    }
}

#[test]
fn certifier_agrees_with_closed_form_region() {
    for eps in [0.0, 0.02, 0.1] {
        for i in 0..=20 {
            for j in 0..=20 {
                let (eta, nu) = (i as f64 / 20.0, 1.0 + j as f64 / 40.0);
                let margin = gaussian_lhv::certify::region_lhs(eta, nu) - (1.0f64 - 4.0 * eps).sqrt();
                if margin.abs() < 1e-8 {
                    continue;
                }
                let certified = certify_lossy_tmss(TmssParameters::new(nu, eta).unwrap(), eps).unwrap().is_some();
                assert_eq!(certified, region_condition(eta, nu, eps), "eta={eta} nu={nu} eps={eps}");
            }
        }
    }
}

#[test]
fn quarter_efficiency_noise_certifies_everything() {
    for i in 0..=10 {
        for j in 0..=10 {
            let params = TmssParameters::new(1.0 + j as f64 / 10.0, i as f64 / 10.0).unwrap();
            assert!(certify_lossy_tmss(params, 0.25).unwrap().is_some());
        }
    }
}

#[test]
fn sampler_marginals_do_not_signal() {
    let state = lossy(1.05, 0.1);
    let fa = click_families(0.02, &[Complex64::new(0.12, 0.0), Complex64::new(-0.48, 0.0)]).unwrap();
    let fb = click_families(0.02, &[Complex64::new(-0.12, 0.0), Complex64::new(0.48, 0.0)]).unwrap();
    let cert = certify_isotropic(&state, &fa, &fb).unwrap().unwrap();
    let model = build_lhv_model(&cert, &state, &fa, &fb).unwrap();
    let report = simulate(&model, 40_000, 11).unwrap();
    let e = &report.empirical;
    // within one trial, Alice's outcome for x is reused across y, so marginals agree exactly
    for x in 0..2 {
        for a in 0..2 {
            let m0 = e[x][0][a][0] + e[x][0][a][1];
            let m1 = e[x][1][a][0] + e[x][1][a][1];
            assert!((m0 - m1).abs() < 1e-12);
        }
    }
    for y in 0..2 {
        for b in 0..2 {
            let m0 = e[0][y][0][b] + e[0][y][1][b];
            let m1 = e[1][y][0][b] + e[1][y][1][b];
            assert!((m0 - m1).abs() < 1e-12);
        }
    }
}
