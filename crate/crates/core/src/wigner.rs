//! Closed-form Wigner functions of the click/no-click measurement operators.
//!
//! A [`WignerForm`] is a constant plus a sum of terms
//! `coef * P(r - c) * exp(-|r - c|^2 / (2w)) / (2 pi w)` with `P` a bivariate
//! polynomial of degree at most 2 in each variable. The family is closed
//! under convolution with isotropic Gaussians, so convolved measurement
//! Wigner functions stay exact.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::simplex::{self, NelderMeadOptions};
use crate::symplectic::{CovarianceMatrix, DEFAULT_TOL, EIGEN_CLAMP};

/// Wigner function of the single-mode identity, `1/(4 pi)`.
pub const IDENTITY_LEVEL: f64 = 1.0 / (4.0 * PI);

/// Coefficients `c[i][j]` of `dx^i dp^j`, `i, j <= 2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Polynomial {
    coeffs: [[f64; 3]; 3],
}

impl Polynomial {
    pub fn constant(c: f64) -> Self {
        let mut p = Self::default();
        p.coeffs[0][0] = c;
        p
    }

    /// `a + b (dx^2 + dp^2)`.
    pub fn radial(a: f64, b: f64) -> Self {
        let mut p = Self::constant(a);
        p.coeffs[2][0] = b;
        p.coeffs[0][2] = b;
        p
    }

    pub fn from_monomials(monomials: &[(usize, usize, f64)]) -> Result<Self> {
        let mut p = Self::default();
        for &(i, j, c) in monomials {
            if i > 2 || j > 2 {
                return Err(invalid(format!("monomial x^{i} p^{j} exceeds degree 2 per variable")));
            }
            p.coeffs[i][j] += c;
        }
        Ok(p)
    }

    pub fn coefficient(&self, deg_x: usize, deg_p: usize) -> f64 {
        self.coeffs[deg_x][deg_p]
    }

    /// Non-zero monomials as `(deg_x, deg_p, coef)`.
    pub fn monomials(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..3).flat_map(move |i| (0..3).map(move |j| (i, j, self.coeffs[i][j]))).filter(|m| m.2 != 0.0)
    }

    pub fn eval(&self, dx: f64, dp: f64) -> f64 {
        let xs = [1.0, dx, dx * dx];
        let ps = [1.0, dp, dp * dp];
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                acc += self.coeffs[i][j] * xs[i] * ps[j];
            }
        }
        acc
    }

    /// `(a, b)` when the polynomial is `a + b (dx^2 + dp^2)`.
    pub fn as_radial(&self) -> Option<(f64, f64)> {
        let c = &self.coeffs;
        let zero_rest = c[0][1] == 0.0
            && c[1][0] == 0.0
            && c[1][1] == 0.0
            && c[1][2] == 0.0
            && c[2][1] == 0.0
            && c[2][2] == 0.0;
        (zero_rest && c[2][0] == c[0][2]).then_some((c[0][0], c[2][0]))
    }

    fn add_scaled(&mut self, other: &Self, k: f64) {
        for i in 0..3 {
            for j in 0..3 {
                self.coeffs[i][j] += k * other.coeffs[i][j];
            }
        }
    }

    /// Polynomial part after convolving `P * N(0, w I)` with `N(0, t I)`.
    ///
    /// Per axis, `x N_w * N_t = (w/W) x N_W` and
    /// `x^2 N_w * N_t = ((w/W)^2 x^2 + w t / W) N_W` with `W = w + t`.
    fn blurred(&self, w: f64, t: f64) -> Self {
        let big = w + t;
        let r = w / big;
        // rows: source degree, columns: coefficients of 1, x, x^2
        let axis = [[1.0, 0.0, 0.0], [0.0, r, 0.0], [w * t / big, 0.0, r * r]];
        let mut out = Self::default();
        for i in 0..3 {
            for j in 0..3 {
                let c = self.coeffs[i][j];
                if c == 0.0 {
                    continue;
                }
                for k in 0..3 {
                    for l in 0..3 {
                        out.coeffs[k][l] += c * axis[i][k] * axis[j][l];
                    }
                }
            }
        }
        out
    }
}

/// `coef * P(r - center) * exp(-|r - center|^2 / (2 width)) / (2 pi width)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianTerm {
    pub coef: f64,
    pub center: [f64; 2],
    pub width: f64,
    pub poly: Polynomial,
}

impl GaussianTerm {
    pub fn eval(&self, point: [f64; 2]) -> f64 {
        let dx = point[0] - self.center[0];
        let dp = point[1] - self.center[1];
        let g = (-(dx * dx + dp * dp) / (2.0 * self.width)).exp() / (2.0 * PI * self.width);
        self.coef * self.poly.eval(dx, dp) * g
    }
}

/// Symbolic single-mode Wigner function: constant plus Gaussian-polynomial terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FormDocument", into = "FormDocument")]
pub struct WignerForm {
    constant: f64,
    terms: Vec<GaussianTerm>,
}

impl WignerForm {
    pub fn new(constant: f64, terms: Vec<GaussianTerm>) -> Result<Self> {
        if !constant.is_finite() {
            return Err(invalid("form constant must be finite"));
        }
        for t in &terms {
            if !(t.width > 0.0) || !t.width.is_finite() {
                return Err(invalid(format!("term width must be positive, got {}", t.width)));
            }
            if !t.coef.is_finite() || t.center.iter().any(|c| !c.is_finite()) {
                return Err(invalid("term has non-finite coefficient or center"));
            }
        }
        Ok(Self { constant, terms })
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn terms(&self) -> &[GaussianTerm] {
        &self.terms
    }

    pub fn eval(&self, point: [f64; 2]) -> f64 {
        self.constant + self.terms.iter().map(|t| t.eval(point)).sum::<f64>()
    }

    pub fn scaled(&self, k: f64) -> Self {
        let terms = self.terms.iter().map(|t| GaussianTerm { coef: t.coef * k, ..t.clone() }).collect();
        Self { constant: self.constant * k, terms }
    }

    /// `self - other`, concatenating terms.
    pub fn minus(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.scaled(-1.0).terms);
        Self { constant: self.constant - other.constant, terms }
    }

    /// Phase-space translation by `shift`.
    pub fn shifted(&self, shift: [f64; 2]) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| GaussianTerm { center: [t.center[0] + shift[0], t.center[1] + shift[1]], ..t.clone() })
            .collect();
        Self { constant: self.constant, terms }
    }

    /// Integral of the non-constant part over the plane.
    pub fn term_integral(&self) -> f64 {
        // E[P(z)] under N(0, w I): E[x^2] = w, odd moments vanish.
        self.terms
            .iter()
            .map(|t| {
                let w = t.width;
                let axis = [1.0, 0.0, w];
                let mut e = 0.0;
                for (i, j, c) in t.poly.monomials() {
                    e += c * axis[i] * axis[j];
                }
                t.coef * e
            })
            .sum()
    }

    /// Sum of terms merged by identical center and width, for exact cancellation checks.
    fn merged_terms(forms: &[&WignerForm]) -> Vec<([f64; 2], f64, Polynomial)> {
        let mut merged: Vec<([f64; 2], f64, Polynomial)> = Vec::new();
        for form in forms {
            for t in &form.terms {
                match merged.iter_mut().find(|m| m.0 == t.center && m.1 == t.width) {
                    Some(m) => m.2.add_scaled(&t.poly, t.coef),
                    None => {
                        let mut p = Polynomial::default();
                        p.add_scaled(&t.poly, t.coef);
                        merged.push((t.center, t.width, p));
                    }
                }
            }
        }
        merged
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[derive(Serialize, Deserialize)]
struct FormDocument {
    #[serde(rename = "const")]
    constant: f64,
    terms: Vec<TermDocument>,
}

#[derive(Serialize, Deserialize)]
struct TermDocument {
    coef: f64,
    center: [f64; 2],
    width: f64,
    poly: Vec<(usize, usize, f64)>,
}

impl TryFrom<FormDocument> for WignerForm {
    type Error = crate::Error;

    fn try_from(doc: FormDocument) -> Result<Self> {
        let terms = doc
            .terms
            .into_iter()
            .map(|t| {
                Ok(GaussianTerm {
                    coef: t.coef,
                    center: t.center,
                    width: t.width,
                    poly: Polynomial::from_monomials(&t.poly)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        WignerForm::new(doc.constant, terms)
    }
}

impl From<WignerForm> for FormDocument {
    fn from(f: WignerForm) -> Self {
        FormDocument {
            constant: f.constant,
            terms: f
                .terms
                .iter()
                .map(|t| TermDocument {
                    coef: t.coef,
                    center: t.center,
                    width: t.width,
                    poly: t.poly.monomials().collect(),
                })
                .collect(),
        }
    }
}

pub fn wigner_identity() -> WignerForm {
    WignerForm { constant: IDENTITY_LEVEL, terms: Vec::new() }
}

/// `exp(-(x^2+p^2)/2) / (2 pi)`.
pub fn wigner_fock0() -> WignerForm {
    WignerForm {
        constant: 0.0,
        terms: vec![GaussianTerm { coef: 1.0, center: [0.0, 0.0], width: 1.0, poly: Polynomial::constant(1.0) }],
    }
}

/// `-(1 - x^2 - p^2) exp(-(x^2+p^2)/2) / (2 pi)`.
pub fn wigner_fock1() -> WignerForm {
    WignerForm {
        constant: 0.0,
        terms: vec![GaussianTerm { coef: 1.0, center: [0.0, 0.0], width: 1.0, poly: Polynomial::radial(-1.0, 1.0) }],
    }
}

/// One outcome of a measurement and the Wigner function of its POVM element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PovmElement {
    pub outcome: i32,
    pub form: WignerForm,
}

/// POVM elements of one measurement setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PovmFamily {
    setting: String,
    elements: Vec<PovmElement>,
}

impl PovmFamily {
    pub fn new(setting: impl Into<String>, elements: Vec<PovmElement>) -> Result<Self> {
        if elements.is_empty() {
            return Err(invalid("a POVM needs at least one element"));
        }
        let family = Self { setting: setting.into(), elements };
        let defect = family.completeness_defect();
        if defect > 1e-12 {
            return Err(invalid(format!("POVM elements do not sum to the identity (defect {defect:.3e})")));
        }
        Ok(family)
    }

    pub fn setting(&self) -> &str {
        &self.setting
    }

    pub fn elements(&self) -> &[PovmElement] {
        &self.elements
    }

    pub fn element(&self, outcome: i32) -> Option<&WignerForm> {
        self.elements.iter().find(|e| e.outcome == outcome).map(|e| &e.form)
    }

    /// Largest coefficient by which `sum_a element_a` differs from `1/(4 pi)`.
    ///
    /// Exact on coefficients: terms are merged by center and width before comparing.
    pub fn completeness_defect(&self) -> f64 {
        let forms: Vec<&WignerForm> = self.elements.iter().map(|e| &e.form).collect();
        let constant: f64 = forms.iter().map(|f| f.constant).sum();
        WignerForm::merged_terms(&forms)
            .iter()
            .flat_map(|m| m.2.monomials().map(|(_, _, c)| c.abs()).collect::<Vec<_>>())
            .fold((constant - IDENTITY_LEVEL).abs(), f64::max)
    }

    pub fn convolved(&self, t: f64) -> Result<Self> {
        let elements = self
            .elements
            .iter()
            .map(|e| Ok(PovmElement { outcome: e.outcome, form: convolve_isotropic(&e.form, t)? }))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { setting: self.setting.clone(), elements })
    }
}

/// Phase-space center `(2 Re alpha, 2 Im alpha)` of the coherent state `|alpha>`.
pub fn displacement_center(alpha: Complex64) -> [f64; 2] {
    [2.0 * alpha.re, 2.0 * alpha.im]
}

/// Click detector after displacement `alpha` with excitation noise `epsilon`.
///
/// Outcome `+1` (no click) is `D[(1-eps)|0><0| + eps|1><1|]D^dag`, outcome `-1`
/// is the identity minus it.
pub fn make_click_povm(epsilon: f64, alpha: Complex64) -> Result<PovmFamily> {
    check_epsilon(epsilon)?;
    let no_click = WignerForm {
        constant: 0.0,
        terms: vec![GaussianTerm {
            coef: 1.0,
            center: displacement_center(alpha),
            width: 1.0,
            poly: Polynomial::radial(1.0 - 2.0 * epsilon, epsilon),
        }],
    };
    let click = wigner_identity().minus(&no_click);
    PovmFamily::new(
        format!("click(eps={epsilon}, alpha={}{:+}i)", alpha.re, alpha.im),
        vec![PovmElement { outcome: 1, form: no_click }, PovmElement { outcome: -1, form: click }],
    )
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(invalid(format!("epsilon must lie in [0, 1], got {epsilon}")));
    }
    Ok(())
}

/// Exact convolution with `G(0, t I_2)`.
pub fn convolve_isotropic(form: &WignerForm, t: f64) -> Result<WignerForm> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(invalid(format!("noise variance t must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(form.clone());
    }
    let terms = form
        .terms
        .iter()
        .map(|term| GaussianTerm {
            coef: term.coef,
            center: term.center,
            width: term.width + t,
            poly: term.poly.blurred(term.width, t),
        })
        .collect();
    Ok(WignerForm { constant: form.constant, terms })
}

/// Square evaluation grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub center: [f64; 2],
    pub half_width: f64,
    pub step: f64,
}

impl GridSpec {
    /// Half-width `max(6, 6 sqrt(1+t))` and step `0.02 sqrt(1+t)` around `center`.
    pub fn around(center: [f64; 2], t: f64) -> Self {
        let s = (1.0 + t.max(0.0)).sqrt();
        Self { center, half_width: (6.0 * s).max(6.0), step: 0.02 * s }
    }

    pub fn points_per_axis(&self) -> usize {
        2 * (self.half_width / self.step).ceil() as usize + 1
    }

    pub fn coordinate(&self, index: usize) -> f64 {
        let n = self.points_per_axis();
        let offset = (n / 2) as f64;
        (index as f64 - offset) * self.step
    }

    pub fn point(&self, ix: usize, ip: usize) -> [f64; 2] {
        [self.center[0] + self.coordinate(ix), self.center[1] + self.coordinate(ip)]
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !(self.half_width > 0.0) {
            return Err(invalid("grid needs positive step and half-width"));
        }
        Ok(())
    }
}

/// Values on a [`GridSpec`], row-major with `x` as the slow index.
#[derive(Clone, Debug, PartialEq)]
pub struct GridValues {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl GridValues {
    pub fn get(&self, ix: usize, ip: usize) -> f64 {
        self.values[ix * self.spec.points_per_axis() + ip]
    }

    pub fn minimum(&self) -> ([f64; 2], f64) {
        let n = self.spec.points_per_axis();
        let (idx, &v) = self
            .values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("grid is never empty");
        (self.spec.point(idx / n, idx % n), v)
    }
}

/// Samples `form` on `grid`.
pub fn sample_on_grid(form: &WignerForm, grid: &GridSpec) -> Result<GridValues> {
    grid.validate()?;
    let n = grid.points_per_axis();
    let values = (0..n * n).map(|k| form.eval(grid.point(k / n, k % n))).collect();
    Ok(GridValues { spec: *grid, values })
}

const HERMITE_NODES: usize = 40;

/// Probabilists' Gauss-Hermite rule: `E[f(Z)] ~ sum w_i f(z_i)`, `Z ~ N(0,1)`.
fn hermite_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = HERMITE_NODES;
        let jacobi = DMatrix::from_fn(n, n, |i, j| if i.abs_diff(j) == 1 { (i.max(j) as f64).sqrt() } else { 0.0 });
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> =
            (0..n).map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2))).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.into_iter().unzip()
    })
}

/// Numerical convolution of `form` with `G(0, gamma)` on `grid`.
///
/// Integrates along the principal axes of `gamma` with Gauss-Hermite
/// quadrature; singular axes are skipped exactly. Accurate when the
/// principal variances are comparable to or smaller than the term widths.
pub fn convolve_general(form: &WignerForm, gamma: &CovarianceMatrix, grid: &GridSpec) -> Result<GridValues> {
    if gamma.dim() != 2 {
        return Err(invalid(format!("single-mode gamma must be 2x2, got {}x{}", gamma.dim(), gamma.dim())));
    }
    if !gamma.is_psd(DEFAULT_TOL) {
        return Err(invalid(format!("gamma is not PSD (min eigenvalue {:.3e})", gamma.min_eigenvalue())));
    }
    grid.validate()?;
    let eig = SymmetricEigen::new(gamma.matrix().clone());
    let (nodes, weights) = hermite_rule();
    let trivial = (vec![0.0], vec![1.0]);
    let mut axes: Vec<([f64; 2], &[f64], &[f64])> = Vec::new();
    for k in 0..2 {
        let lambda = eig.eigenvalues[k];
        if lambda > EIGEN_CLAMP {
            let s = lambda.sqrt();
            axes.push(([s * eig.eigenvectors[(0, k)], s * eig.eigenvectors[(1, k)]], nodes, weights));
        } else {
            axes.push(([0.0, 0.0], &trivial.0, &trivial.1));
        }
    }
    let terms_only = WignerForm { constant: 0.0, terms: form.terms.clone() };
    let n = grid.points_per_axis();
    let values = (0..n * n)
        .map(|k| {
            let r = grid.point(k / n, k % n);
            let mut acc = 0.0;
            for (z1, w1) in axes[0].1.iter().zip(axes[0].2) {
                for (z2, w2) in axes[1].1.iter().zip(axes[1].2) {
                    let s = [
                        r[0] - z1 * axes[0].0[0] - z2 * axes[1].0[0],
                        r[1] - z1 * axes[0].0[1] - z2 * axes[1].0[1],
                    ];
                    acc += w1 * w2 * terms_only.eval(s);
                }
            }
            form.constant + acc
        })
        .collect();
    Ok(GridValues { spec: *grid, values })
}

/// Global minimum (or infimum) of a form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormMinimum {
    pub point: [f64; 2],
    pub value: f64,
    /// The infimum is the constant part, approached far from every center.
    pub at_infinity: bool,
}

/// Minimum of a form over the plane.
///
/// Forms whose terms share one center and width and have radial
/// polynomials reduce to `c + (A + B s) exp(-s/(2w)) / (2 pi w)` in
/// `s = |r - center|^2`, minimized in closed form. Anything else falls back
/// to a grid scan refined by Nelder-Mead.
pub fn minimum_of_form(form: &WignerForm) -> FormMinimum {
    let at_infinity = FormMinimum { point: [f64::INFINITY, f64::INFINITY], value: form.constant, at_infinity: true };
    if form.terms.is_empty() {
        return FormMinimum { point: [0.0, 0.0], value: form.constant, at_infinity: false };
    }
    let candidate = radial_minimum(form).unwrap_or_else(|| grid_minimum(form));
    if candidate.value <= form.constant {
        candidate
    } else {
        at_infinity
    }
}

fn radial_minimum(form: &WignerForm) -> Option<FormMinimum> {
    let first = &form.terms[0];
    let (mut a, mut b) = (0.0, 0.0);
    for t in &form.terms {
        if t.center != first.center || t.width != first.width {
            return None;
        }
        let (ta, tb) = t.poly.as_radial()?;
        a += t.coef * ta;
        b += t.coef * tb;
    }
    let w = first.width;
    let g = |s: f64| form.constant + (a + b * s) * (-s / (2.0 * w)).exp() / (2.0 * PI * w);
    let mut best = (0.0, g(0.0));
    // d/ds [(a + b s) exp(-s/2w)] = 0  =>  s = 2w - a/b
    if b != 0.0 {
        let s = 2.0 * w - a / b;
        if s > 0.0 && g(s) < best.1 {
            best = (s, g(s));
        }
    }
    let point = [first.center[0] + best.0.sqrt(), first.center[1]];
    Some(FormMinimum { point, value: best.1, at_infinity: false })
}

fn grid_minimum(form: &WignerForm) -> FormMinimum {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    let mut widest: f64 = 0.0;
    for t in &form.terms {
        for k in 0..2 {
            lo[k] = lo[k].min(t.center[k]);
            hi[k] = hi[k].max(t.center[k]);
        }
        widest = widest.max(t.width);
    }
    let center = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]) / 2.0;
    let mut grid = GridSpec::around(center, widest - 1.0);
    grid.half_width += span;
    let (start, _) = sample_on_grid(form, &grid).expect("grid spec is valid").minimum();
    let opts = NelderMeadOptions { max_evals: 400, f_tol: 1e-16, initial_step: grid.step, ..Default::default() };
    let refined = simplex::minimize(|x| form.eval([x[0], x[1]]), &start, &opts);
    FormMinimum { point: [refined.x[0], refined.x[1]], value: refined.f, at_infinity: false }
}

/// Isotropic noise needed to make the click Wigner function non-negative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseThreshold {
    pub epsilon: f64,
    pub t_star: f64,
}

/// `t* = sqrt(1 - 4 eps)` for `eps <= 1/4`, else 0.
pub fn noise_threshold(epsilon: f64) -> Result<NoiseThreshold> {
    check_epsilon(epsilon)?;
    let t_star = (1.0 - 4.0 * epsilon).max(0.0).sqrt();
    Ok(NoiseThreshold { epsilon, t_star })
}

/// Smallest `t` for which the convolved click element is non-negative,
/// found by bisection on the sign of its global minimum.
pub fn bisect_positivity_threshold(epsilon: f64, tol: f64) -> Result<f64> {
    let click = make_click_povm(epsilon, Complex64::new(0.0, 0.0))?.element(-1).cloned().expect("click outcome");
    let nonnegative = |t: f64| -> Result<bool> { Ok(minimum_of_form(&convolve_isotropic(&click, t)?).value >= 0.0) };
    if nonnegative(0.0)? {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while !nonnegative(hi)? {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if nonnegative(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
