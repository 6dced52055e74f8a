//! Maximum likelihood estimate as the minimizer of the convex function
//! `F(theta) = sum_e exp(a_e . theta) - (A u) . theta` over the pivot rows of
//! the design matrix. At the minimum `p_e = exp(a_e . theta)` lies on the
//! toric variety and matches the marginals `A p = A u`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::binomials::{enumerate_binomials, evaluate_binomial};
use crate::blockmodel::{design_matrix, enumerate_dyads, rank_exact, BlockSpec};
use crate::error::{Error, Result};
use crate::homotopy::relative_distance;
use crate::likelihood::{assemble, full_residual};
use crate::linalg::cholesky_solve;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleConfig {
    /// Stop when `|grad|_inf <= grad_tol * max(1, |A u|_inf)`.
    pub grad_tol: f64,
    pub max_iters: usize,
}

impl Default for MleConfig {
    fn default() -> Self {
        Self { grad_tol: 1e-12, max_iters: 200 }
    }
}

#[derive(Clone, Debug)]
pub struct MleFit<T> {
    pub spec: BlockSpec,
    /// Parameters for the pivot rows, labelled in `theta_labels`.
    pub theta: Vec<T>,
    pub theta_labels: Vec<String>,
    pub p_hat: Vec<T>,
    pub grad_norm: T,
    pub iterations: usize,
}

struct Problem<T> {
    /// Pivot-row supports of each column.
    columns: Vec<Vec<usize>>,
    b: Vec<T>,
    r: usize,
}

impl<T: Real> Problem<T> {
    fn p(&self, theta: &[T]) -> Vec<T> {
        self.columns.iter().map(|rows| rows.iter().fold(T::zero(), |s, &i| s + theta[i]).exp()).collect()
    }

    fn objective(&self, theta: &[T]) -> T {
        let total = self.p(theta).iter().fold(T::zero(), |s, &x| s + x);
        total - self.b.iter().zip(theta).fold(T::zero(), |s, (&b, &t)| s + b * t)
    }

    fn gradient(&self, p: &[T]) -> Vec<T> {
        let mut g: Vec<T> = self.b.iter().map(|&b| -b).collect();
        for (rows, &pe) in self.columns.iter().zip(p) {
            for &i in rows {
                g[i] += pe;
            }
        }
        g
    }

    fn hessian(&self, p: &[T]) -> Vec<T> {
        let r = self.r;
        let mut h = vec![T::zero(); r * r];
        for (rows, &pe) in self.columns.iter().zip(p) {
            for &i in rows {
                for &j in rows {
                    h[i * r + j] += pe;
                }
            }
        }
        h
    }
}

fn inf_norm<T: Real>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |m, v| m.max(v.abs()))
}

pub fn fit<T: Real>(spec: &BlockSpec, u: &[f64], config: &MleConfig) -> Result<MleFit<T>> {
    fit_from(spec, u, None, config)
}

/// As [`fit`], starting from `theta0` instead of zero.
pub fn fit_from<T: Real>(spec: &BlockSpec, u: &[f64], theta0: Option<&[T]>, config: &MleConfig) -> Result<MleFit<T>> {
    if u.len() != spec.num_dyads() {
        return Err(Error::DimensionMismatch { expected: spec.num_dyads(), got: u.len() });
    }
    if let Some((index, &value)) = u.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::NonPositiveData { index, value });
    }
    let design = design_matrix(spec);
    let pivots = rank_exact(&design).pivot_rows;
    let r = pivots.len();
    let columns: Vec<Vec<usize>> = (0..design.ncols())
        .map(|e| (0..r).filter(|&i| design.get(pivots[i], e) == 1).collect())
        .collect();
    let b: Vec<T> = pivots
        .iter()
        .map(|&row| {
            design.row(row).iter().zip(u).filter(|(&a, _)| a == 1).fold(T::zero(), |s, (_, &x)| s + T::of(x))
        })
        .collect();
    let scale = T::one().max(inf_norm(&b));
    let problem = Problem { columns, b, r };

    let mut theta = match theta0 {
        Some(t) if t.len() == r => t.to_vec(),
        Some(t) => return Err(Error::DimensionMismatch { expected: r, got: t.len() }),
        None => vec![T::zero(); r],
    };
    let tol = T::of(config.grad_tol) * scale;
    let floor = T::epsilon() * T::of(100.0) * scale;
    let mut p = problem.p(&theta);
    let mut g = problem.gradient(&p);
    let mut iterations = 0;
    let stuck = |iterations, g: &[T]| Error::NoConvergence { iterations, grad_norm: inf_norm(g).to_f64().unwrap_or(f64::NAN) };
    while inf_norm(&g) > tol {
        if iterations == config.max_iters {
            return Err(stuck(iterations, &g));
        }
        iterations += 1;
        let h = problem.hessian(&p);
        let neg: Vec<T> = g.iter().map(|&x| -x).collect();
        let Some(d) = cholesky_solve(&h, r, &neg) else {
            return Err(stuck(iterations, &g));
        };
        let f0 = problem.objective(&theta);
        let slope = g.iter().zip(&d).fold(T::zero(), |s, (&a, &b)| s + a * b);
        let step_to = |step: T| -> Vec<T> { theta.iter().zip(&d).map(|(&t, &di)| t + step * di).collect() };
        // Once the predicted decrease is lost in the rounding of F, the
        // objective can no longer rank steps; take the full Newton step.
        let next = if -slope <= T::epsilon() * T::of(1e3) * (f0.abs() + T::one()) {
            Some(step_to(T::one()))
        } else {
            let mut step = T::one();
            let mut found = None;
            for _ in 0..60 {
                let trial = step_to(step);
                let f = problem.objective(&trial);
                if f.is_finite() && f <= f0 + T::of(1e-4) * step * slope {
                    found = Some(trial);
                    break;
                }
                step = step * T::of(0.5);
            }
            found
        };
        match next {
            Some(t) => theta = t,
            // No decrease left to find: accept if the gradient is at roundoff.
            None if inf_norm(&g) <= floor => break,
            None => return Err(stuck(iterations, &g)),
        }
        p = problem.p(&theta);
        g = problem.gradient(&p);
    }
    let labels = design.row_labels();
    Ok(MleFit {
        spec: spec.clone(),
        theta,
        theta_labels: pivots.iter().map(|&i| labels[i].to_string()).collect(),
        p_hat: p,
        grad_norm: inf_norm(&g),
        iterations,
    })
}

impl<T: Real> MleFit<T> {
    /// `|A p_hat - A u|_inf / max(1, |A u|_inf)` over all design rows.
    pub fn marginal_residual(&self, u: &[f64]) -> f64 {
        let a = design_matrix(&self.spec);
        let p: Vec<f64> = self.p_hat.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
        let ap = a.apply(&p);
        let au = a.apply(u);
        let scale = au.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        ap.iter().zip(&au).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
    }

    /// Largest binomial value at `p_hat`, relative to `max(1, |p_hat|_inf)^2`.
    pub fn binomial_residual(&self) -> f64 {
        let p = self.complex_p_hat();
        let scale = p.iter().fold(1.0f64, |m, z| m.max(z.norm()));
        enumerate_binomials(&self.spec)
            .iter()
            .map(|b| evaluate_binomial(b, &p).norm() / (scale * scale))
            .fold(0.0, f64::max)
    }

    pub fn complex_p_hat(&self) -> Vec<Complex<f64>> {
        self.p_hat.iter().map(|x| Complex::new(x.to_f64().unwrap_or(f64::NAN), 0.0)).collect()
    }

    /// Residual of `p_hat` in the full likelihood system for data `u`.
    pub fn full_residual(&self, u: &[f64]) -> Result<f64> {
        let system = assemble(&self.spec, u)?;
        Ok(full_residual(&system, &self.complex_p_hat()))
    }

    pub fn to_json(&self, u: &[f64]) -> FitJson {
        let f = |x: T| x.to_f64().unwrap_or(f64::NAN);
        let dyads = enumerate_dyads(&self.spec);
        FitJson {
            blocks: self.spec.sizes().to_vec(),
            theta: self.theta_labels.iter().zip(&self.theta).map(|(l, &t)| Labelled { label: l.clone(), value: f(t) }).collect(),
            p_hat: dyads
                .iter()
                .zip(&self.p_hat)
                .map(|(d, &p)| Labelled { label: format!("p_{}{}", d.first(), d.second()), value: f(p) })
                .collect(),
            grad_norm: f(self.grad_norm),
            iterations: self.iterations,
            marginal_residual: self.marginal_residual(u),
            binomial_residual: self.binomial_residual(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Labelled {
    pub label: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitJson {
    pub blocks: Vec<usize>,
    pub theta: Vec<Labelled>,
    pub p_hat: Vec<Labelled>,
    pub grad_norm: f64,
    pub iterations: usize,
    pub marginal_residual: f64,
    pub binomial_residual: f64,
}

/// Index of the solution matching `p_hat` within `tol` (relative distance),
/// provided that solution is real and positive up to `tol`.
pub fn reconcile_index<T: Real>(solutions: &[Vec<Complex<f64>>], fit: &MleFit<T>, tol: f64) -> Option<usize> {
    let p = fit.complex_p_hat();
    solutions.iter().position(|s| {
        let scale = s.iter().fold(1.0f64, |m, z| m.max(z.norm()));
        relative_distance(s, &p) <= tol && s.iter().all(|z| z.im.abs() <= tol * scale && z.re > 0.0)
    })
}

pub fn reconcile<T: Real>(solutions: &[Vec<Complex<f64>>], fit: &MleFit<T>, tol: f64) -> bool {
    reconcile_index(solutions, fit, tol).is_some()
}
