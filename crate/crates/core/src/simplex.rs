//! Box-constrained Nelder-Mead with a fixed evaluation budget.

#[derive(Clone, Debug)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop when the spread of function values over the simplex drops below this.
    pub f_tol: f64,
    pub initial_step: f64,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_evals: 200, f_tol: 1e-6, initial_step: 0.05, lower: None, upper: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

struct Bounded<'a, F> {
    f: F,
    lower: Option<&'a [f64]>,
    upper: Option<&'a [f64]>,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Bounded<'_, F> {
    fn project(&self, x: &mut [f64]) {
        if let Some(lo) = self.lower {
            x.iter_mut().zip(lo).for_each(|(v, l)| *v = v.max(*l));
        }
        if let Some(hi) = self.upper {
            x.iter_mut().zip(hi).for_each(|(v, h)| *v = v.min(*h));
        }
    }

    fn eval(&mut self, mut x: Vec<f64>) -> (Vec<f64>, f64) {
        self.project(&mut x);
        self.evals += 1;
        let v = (self.f)(&x);
        (x, if v.is_nan() { f64::INFINITY } else { v })
    }
}

/// Minimizes `f` starting from `x0`. Deterministic for a deterministic `f`.
pub fn minimize<F: FnMut(&[f64]) -> f64>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult {
    let n = x0.len();
    let mut obj = Bounded { f, lower: opts.lower.as_deref(), upper: opts.upper.as_deref(), evals: 0 };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push(obj.eval(x0.to_vec()));
    for i in 0..n {
        let mut x = simplex[0].0.clone();
        x[i] += opts.initial_step;
        // step inward when the vertex would sit on the upper bound
        if let Some(hi) = obj.upper {
            if x[i] > hi[i] {
                x[i] = simplex[0].0[i] - opts.initial_step;
            }
        }
        simplex.push(obj.eval(x));
    }

    let mut converged = false;
    while obj.evals < opts.max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (simplex[n].1 - simplex[0].1).abs() <= opts.f_tol {
            converged = true;
            break;
        }
        let centroid: Vec<f64> =
            (0..n).map(|j| simplex[..n].iter().map(|v| v.0[j]).sum::<f64>() / n as f64).collect();
        let along = |coef: f64, worst: &[f64]| -> Vec<f64> {
            centroid.iter().zip(worst).map(|(c, w)| c + coef * (c - w)).collect()
        };
        let worst = simplex[n].0.clone();
        let reflected = obj.eval(along(1.0, &worst));
        if reflected.1 < simplex[0].1 {
            let expanded = obj.eval(along(2.0, &worst));
            simplex[n] = if expanded.1 < reflected.1 { expanded } else { reflected };
        } else if reflected.1 < simplex[n - 1].1 {
            simplex[n] = reflected;
        } else {
            let contracted = if reflected.1 < simplex[n].1 {
                obj.eval(along(0.5, &worst))
            } else {
                obj.eval(along(-0.5, &worst))
            };
            if contracted.1 < simplex[n].1.min(reflected.1) {
                simplex[n] = contracted;
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x = best.iter().zip(&vertex.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
                    *vertex = obj.eval(x);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    NelderMeadResult { x, f, evals: obj.evals, converged }
}
