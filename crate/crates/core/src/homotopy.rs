//! Total-degree homotopy continuation for square systems of quadratics.
//!
//! Paths follow `H(y, t) = (1 - t) * gamma * G(y) + t * F(y)` from the roots
//! of `G(y) = (y_i^2 - 1)_i` at `t = 0` to `t = 1`. Each step is a fourth-order
//! Runge-Kutta prediction along the Davidenko equation
//! `dy/dt = -H_y^{-1} H_t` followed by Newton correction at fixed `t`.

use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::likelihood::SquareSystem;
use crate::linalg::ComplexLu;
use crate::scalar::Real;

/// A square polynomial system with an analytic Jacobian.
pub trait PolySystem<T: Real>: Sync {
    fn dim(&self) -> usize;

    fn evaluate(&self, y: &[Complex<T>], out: &mut [Complex<T>]);

    /// Row-major `dim x dim` Jacobian.
    fn jacobian(&self, y: &[Complex<T>], out: &mut [Complex<T>]);

    /// Evaluation with extra precision; defaults to plain evaluation.
    fn evaluate_compensated(&self, y: &[Complex<T>], out: &mut [Complex<T>]) {
        self.evaluate(y, out)
    }
}

impl<T: Real> PolySystem<T> for SquareSystem<T> {
    fn dim(&self) -> usize {
        SquareSystem::dim(self)
    }

    fn evaluate(&self, y: &[Complex<T>], out: &mut [Complex<T>]) {
        for (o, e) in out.iter_mut().zip(self.equations()) {
            *o = e.eval(y);
        }
    }

    fn jacobian(&self, y: &[Complex<T>], out: &mut [Complex<T>]) {
        let n = self.dim();
        for (i, e) in self.equations().iter().enumerate() {
            e.gradient(y, &mut out[i * n..(i + 1) * n]);
        }
    }

    fn evaluate_compensated(&self, y: &[Complex<T>], out: &mut [Complex<T>]) {
        for (o, e) in out.iter_mut().zip(self.equations()) {
            *o = e.eval_compensated(y);
        }
    }
}

/// `G(y) = (y_1^2 - 1, ..., y_n^2 - 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StartSystem {
    pub dim: usize,
}

impl<T: Real> PolySystem<T> for StartSystem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, y: &[Complex<T>], out: &mut [Complex<T>]) {
        for (o, &v) in out.iter_mut().zip(y) {
            *o = v * v - T::one();
        }
    }

    fn jacobian(&self, y: &[Complex<T>], out: &mut [Complex<T>]) {
        let n = self.dim;
        out.iter_mut().for_each(|x| *x = Complex::new(T::zero(), T::zero()));
        for i in 0..n {
            out[i * n + i] = y[i] * T::of(2.0);
        }
    }
}

/// Start system for `target` and its `2^n` roots, the sign vectors in
/// `{-1, +1}^n`. Root `m` has `-1` in coordinate `i` iff bit `i` of `m` is set.
pub fn total_degree_start<T: Real>(target: &impl PolySystem<T>) -> (StartSystem, Vec<Vec<Complex<T>>>) {
    let n = target.dim();
    let one = Complex::new(T::one(), T::zero());
    let points = (0..1usize << n)
        .map(|m| (0..n).map(|i| if m >> i & 1 == 1 { -one } else { one }).collect())
        .collect();
    (StartSystem { dim: n }, points)
}

/// Tracker settings. Plain `f64` so one config serves every scalar type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub corrector_tol: f64,
    pub max_corrector_iters: usize,
    pub divergence_norm: f64,
    pub max_steps: usize,
    /// Unit-modulus `gamma` as `[re, im]`.
    pub gamma: [f64; 2],
    pub seed: u64,
    /// Relative single-linkage distance for merging endpoints.
    pub dedup_tol: f64,
}

impl TrackerConfig {
    /// Defaults with `gamma` drawn from `seed`.
    pub fn with_seed(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let phi: f64 = rng.gen_range(0.0..TAU);
        Self {
            initial_step: 0.05,
            min_step: 1e-7,
            max_step: 0.1,
            corrector_tol: 1e-10,
            max_corrector_iters: 5,
            divergence_norm: 1e8,
            max_steps: 50_000,
            gamma: [phi.cos(), phi.sin()],
            seed,
            dedup_tol: 1e-6,
        }
    }

    /// Same settings with a fresh seed and the `gamma` it determines.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self { gamma: Self::with_seed(seed).gamma, seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("initial_step", self.initial_step),
            ("min_step", self.min_step),
            ("max_step", self.max_step),
            ("corrector_tol", self.corrector_tol),
            ("divergence_norm", self.divergence_norm),
            ("dedup_tol", self.dedup_tol),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(format!("{name} must be positive"));
        }
        if self.max_corrector_iters == 0 || self.max_steps == 0 {
            return Err("iteration limits must be positive".into());
        }
        if self.min_step >= self.initial_step {
            return Err("min_step must be below initial_step".into());
        }
        if (self.gamma[0].hypot(self.gamma[1]) - 1.0).abs() > 1e-12 {
            return Err("gamma must have unit modulus".into());
        }
        Ok(())
    }

    fn gamma<T: Real>(&self) -> Complex<T> {
        Complex::new(T::of(self.gamma[0]), T::of(self.gamma[1]))
    }
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self::with_seed(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathStatus {
    Converged,
    Diverged,
    Failed,
}

#[derive(Clone, Debug)]
pub struct Endpoint<T> {
    pub status: PathStatus,
    /// Last point reached; the solution when converged.
    pub point: Vec<Complex<T>>,
    /// Relative size of the final Newton correction at `t = 1`.
    pub residual: T,
    /// `max_i |F_i(y)|` at the final point.
    pub function_residual: T,
    pub steps: usize,
    /// Largest-to-smallest pivot ratio of the Jacobian at the final point.
    pub condition: T,
    pub t: T,
}

fn inf_norm<T: Real>(y: &[Complex<T>]) -> T {
    y.iter().fold(T::zero(), |m, z| m.max(z.norm()))
}

fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

struct Homotopy<'a, T: Real, F: PolySystem<T>> {
    target: &'a F,
    start: StartSystem,
    gamma: Complex<T>,
    n: usize,
}

impl<'a, T: Real, F: PolySystem<T>> Homotopy<'a, T, F> {
    fn value(&self, y: &[Complex<T>], t: T) -> Vec<Complex<T>> {
        let mut f = vec![czero(); self.n];
        let mut g = vec![czero(); self.n];
        self.target.evaluate(y, &mut f);
        self.start.evaluate(y, &mut g);
        let s = self.gamma * (T::one() - t);
        f.iter().zip(&g).map(|(&fi, &gi)| fi * t + gi * s).collect()
    }

    fn jacobian(&self, y: &[Complex<T>], t: T) -> Option<ComplexLu<T>> {
        let nn = self.n * self.n;
        let mut jf = vec![czero(); nn];
        let mut jg = vec![czero(); nn];
        self.target.jacobian(y, &mut jf);
        self.start.jacobian(y, &mut jg);
        let s = self.gamma * (T::one() - t);
        let j = jf.iter().zip(&jg).map(|(&a, &b)| a * t + b * s).collect();
        ComplexLu::factor(j, self.n)
    }

    /// `dy/dt = -H_y^{-1} (F - gamma G)`.
    fn velocity(&self, y: &[Complex<T>], t: T) -> Option<Vec<Complex<T>>> {
        let lu = self.jacobian(y, t)?;
        let mut f = vec![czero(); self.n];
        let mut g = vec![czero(); self.n];
        self.target.evaluate(y, &mut f);
        self.start.evaluate(y, &mut g);
        let rhs: Vec<Complex<T>> = f.iter().zip(&g).map(|(&fi, &gi)| -(fi - gi * self.gamma)).collect();
        let v = lu.solve(&rhs);
        v.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(v)
    }

    fn predict(&self, y: &[Complex<T>], t: T, dt: T) -> Option<Vec<Complex<T>>> {
        let half = dt / T::of(2.0);
        let axpy = |a: &[Complex<T>], s: T, b: &[Complex<T>]| -> Vec<Complex<T>> {
            a.iter().zip(b).map(|(&x, &v)| x + v * s).collect()
        };
        let k1 = self.velocity(y, t)?;
        let k2 = self.velocity(&axpy(y, half, &k1), t + half)?;
        let k3 = self.velocity(&axpy(y, half, &k2), t + half)?;
        let k4 = self.velocity(&axpy(y, dt, &k3), t + dt)?;
        let sixth = dt / T::of(6.0);
        let two = T::of(2.0);
        Some(
            (0..self.n)
                .map(|i| y[i] + (k1[i] + k2[i] * two + k3[i] * two + k4[i]) * sixth)
                .collect(),
        )
    }

    /// Newton at fixed `t`. Rejects on non-contraction, on a first correction
    /// that is large relative to the point, or on missing the tolerance.
    fn correct(&self, mut y: Vec<Complex<T>>, t: T, tol: T, max_iters: usize) -> Option<Vec<Complex<T>>> {
        let mut prev = T::infinity();
        for it in 0..max_iters {
            let h = self.value(&y, t);
            let lu = self.jacobian(&y, t)?;
            let rhs: Vec<Complex<T>> = h.iter().map(|&z| -z).collect();
            let dy = lu.solve(&rhs);
            let step = inf_norm(&dy);
            if !step.is_finite() {
                return None;
            }
            for (a, d) in y.iter_mut().zip(&dy) {
                *a += *d;
            }
            let scale = T::one() + inf_norm(&y);
            if step <= tol * scale {
                return Some(y);
            }
            if it == 0 && step > T::of(0.05) * scale {
                return None;
            }
            if it > 0 && step > prev * T::of(0.5) {
                return None;
            }
            prev = step;
        }
        None
    }
}

fn run_path<T: Real, F: PolySystem<T>>(
    target: &F,
    start: &[Complex<T>],
    config: &TrackerConfig,
    step_scale: f64,
) -> Endpoint<T> {
    let n = target.dim();
    let hom = Homotopy { target, start: StartSystem { dim: n }, gamma: config.gamma(), n };
    let tol = T::of(config.corrector_tol);
    let max_step = T::of(config.max_step);
    let min_step = T::of(config.min_step * step_scale);
    let divergence = T::of(config.divergence_norm);
    let mut h = T::of(config.initial_step * step_scale);
    let mut t = T::zero();
    let mut y = start.to_vec();
    let mut streak = 0;
    let mut steps = 0;
    let mut late_norm: Option<T> = None;

    let finish = |status, y: Vec<Complex<T>>, steps, t| Endpoint {
        status,
        point: y,
        residual: T::infinity(),
        function_residual: T::infinity(),
        steps,
        condition: T::infinity(),
        t,
    };

    while t < T::one() {
        if steps >= config.max_steps {
            return finish(PathStatus::Failed, y, steps, t);
        }
        steps += 1;
        let remaining = T::one() - t;
        let (dt, t_next) = if h >= remaining { (remaining, T::one()) } else { (h, t + h) };
        let accepted = hom
            .predict(&y, t, dt)
            .and_then(|yp| hom.correct(yp, t_next, tol, config.max_corrector_iters));
        match accepted {
            Some(yc) => {
                t = t_next;
                y = yc;
                streak += 1;
                if streak >= 3 {
                    h = (h * T::of(1.5)).min(max_step);
                    streak = 0;
                }
                let norm = inf_norm(&y);
                if norm > divergence {
                    return finish(PathStatus::Diverged, y, steps, t);
                }
                if late_norm.is_none() && t >= T::of(0.9) {
                    late_norm = Some(norm);
                }
            }
            None => {
                h = h * T::of(0.5);
                streak = 0;
                if h < min_step {
                    let norm = inf_norm(&y);
                    let reference = late_norm.unwrap_or(T::one()).max(T::one());
                    let status = if t >= T::of(0.9) && norm > reference * T::of(10.0) {
                        PathStatus::Diverged
                    } else {
                        PathStatus::Failed
                    };
                    return finish(status, y, steps, t);
                }
            }
        }
    }

    let refined = newton_refine(target, &y, 3, tol);
    let status = if refined.step <= tol { PathStatus::Converged } else { PathStatus::Failed };
    Endpoint {
        status,
        point: refined.point,
        residual: refined.step,
        function_residual: refined.residual,
        steps,
        condition: refined.condition,
        t,
    }
}

/// Tracks one path from `start` (a root of the start system) to `t = 1`.
/// A failed path is retried once with ten times smaller steps.
pub fn track_path<T: Real, F: PolySystem<T>>(target: &F, start: &[Complex<T>], config: &TrackerConfig) -> Endpoint<T> {
    let first = run_path(target, start, config, 1.0);
    if first.status != PathStatus::Failed {
        return first;
    }
    let mut retry = run_path(target, start, config, 0.1);
    retry.steps += first.steps;
    retry
}

/// Outcome of [`newton_refine`].
#[derive(Clone, Debug)]
pub struct Refinement<T> {
    pub point: Vec<Complex<T>>,
    /// `max_i |F_i|` at the returned point.
    pub residual: T,
    /// Relative size of the last Newton correction.
    pub step: T,
    pub condition: T,
    /// False when the Jacobian was singular and the input came back untouched.
    pub refined: bool,
    /// True if the residual had to be evaluated in double-double.
    pub compensated: bool,
}

/// Newton's method on `F` for at most `iterations` steps or until the
/// relative correction drops below `tol`. When the correction stagnates the
/// residual is switched to double-double evaluation.
pub fn newton_refine<T: Real, F: PolySystem<T>>(f: &F, point: &[Complex<T>], iterations: usize, tol: T) -> Refinement<T> {
    let n = f.dim();
    let mut y = point.to_vec();
    let mut val = vec![czero(); n];
    let mut jac = vec![czero(); n * n];
    let mut compensated = false;
    let mut prev = T::infinity();
    let mut step = T::infinity();
    let mut condition = T::infinity();
    let mut refined = false;
    let mut extra = 0;
    let mut it = 0;
    while it < iterations + extra {
        it += 1;
        if compensated {
            f.evaluate_compensated(&y, &mut val);
        } else {
            f.evaluate(&y, &mut val);
        }
        f.jacobian(&y, &mut jac);
        let Some(lu) = ComplexLu::factor(jac.clone(), n) else {
            break;
        };
        condition = lu.pivot_ratio();
        let rhs: Vec<Complex<T>> = val.iter().map(|&z| -z).collect();
        let dy = lu.solve(&rhs);
        let size = inf_norm(&dy);
        if !size.is_finite() {
            break;
        }
        refined = true;
        for (a, d) in y.iter_mut().zip(&dy) {
            *a += *d;
        }
        step = size / (T::one() + inf_norm(&y));
        if step <= tol {
            break;
        }
        if !compensated && step > prev * T::of(0.5) {
            compensated = true;
            extra = 2;
        }
        prev = step;
    }
    if !refined {
        f.evaluate(point, &mut val);
        return Refinement {
            point: point.to_vec(),
            residual: inf_norm(&val),
            step: T::infinity(),
            condition,
            refined: false,
            compensated,
        };
    }
    f.evaluate(&y, &mut val);
    Refinement { residual: inf_norm(&val), point: y, step, condition, refined, compensated }
}

/// A group of endpoints within the dedup tolerance of each other.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cluster {
    /// Index of the first member, used as the representative.
    pub representative: usize,
    pub members: Vec<usize>,
}

impl Cluster {
    pub fn multiplicity(&self) -> usize {
        self.members.len()
    }
}

/// Relative distance `|a - b|_inf / max(1, |a|_inf, |b|_inf)`.
pub fn relative_distance<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    let diff = a.iter().zip(b).fold(T::zero(), |m, (x, y)| m.max((x - y).norm()));
    diff / T::one().max(inf_norm(a)).max(inf_norm(b))
}

/// Single-linkage clustering under [`relative_distance`]. Clusters come out in
/// order of their smallest member index.
pub fn dedup<T: Real>(points: &[Vec<Complex<T>>], tol: T) -> Vec<Cluster> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if relative_distance(&points[i], &points[j]) <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = clusters.len();
            clusters.push(Cluster { representative: i, members: Vec::new() });
        }
        clusters[slot[root]].members.push(i);
    }
    clusters
}

/// Distinct finite solutions of a square system.
#[derive(Clone, Debug)]
pub struct SolutionSet<T> {
    pub points: Vec<Vec<Complex<T>>>,
    pub multiplicities: Vec<usize>,
    pub residuals: Vec<T>,
    pub paths_tracked: usize,
    pub converged: usize,
    pub diverged: usize,
    pub failed: usize,
    pub config: TrackerConfig,
    pub elapsed: Duration,
}

impl<T> SolutionSet<T> {
    pub fn count(&self) -> usize {
        self.points.len()
    }

    /// True if some cluster merged more than one path.
    pub fn has_multiple_clusters(&self) -> bool {
        self.multiplicities.iter().any(|&m| m > 1)
    }
}

/// Tracks all `2^n` total-degree paths (in parallel, merged in start order),
/// then deduplicates the converged endpoints.
pub fn solve<T: Real, F: PolySystem<T>>(target: &F, config: &TrackerConfig) -> SolutionSet<T> {
    let clock = Instant::now();
    let (_, starts) = total_degree_start(target);
    let endpoints: Vec<Endpoint<T>> = starts.par_iter().map(|s| track_path(target, s, config)).collect();

    let tally = |s| endpoints.iter().filter(|e| e.status == s).count();
    let finite: Vec<&Endpoint<T>> = endpoints.iter().filter(|e| e.status == PathStatus::Converged).collect();
    let pts: Vec<Vec<Complex<T>>> = finite.iter().map(|e| e.point.clone()).collect();
    let clusters = dedup(&pts, T::of(config.dedup_tol));
    SolutionSet {
        points: clusters.iter().map(|c| pts[c.representative].clone()).collect(),
        multiplicities: clusters.iter().map(Cluster::multiplicity).collect(),
        residuals: clusters.iter().map(|c| finite[c.representative].function_residual).collect(),
        paths_tracked: endpoints.len(),
        converged: tally(PathStatus::Converged),
        diverged: tally(PathStatus::Diverged),
        failed: tally(PathStatus::Failed),
        config: config.clone(),
        elapsed: clock.elapsed(),
    }
}

/// JSON report for one solve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverReport {
    pub config: TrackerConfig,
    pub paths_tracked: usize,
    pub converged: usize,
    pub diverged: usize,
    pub failed: usize,
    pub count: usize,
    pub solutions: Vec<Vec<[f64; 2]>>,
    pub multiplicities: Vec<usize>,
    pub residuals: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

impl<T: Real> SolutionSet<T> {
    pub fn report(&self, with_timing: bool) -> SolverReport {
        let f = |x: T| x.to_f64().unwrap_or(f64::NAN);
        SolverReport {
            config: self.config.clone(),
            paths_tracked: self.paths_tracked,
            converged: self.converged,
            diverged: self.diverged,
            failed: self.failed,
            count: self.count(),
            solutions: self.points.iter().map(|p| p.iter().map(|z| [f(z.re), f(z.im)]).collect()).collect(),
            multiplicities: self.multiplicities.clone(),
            residuals: self.residuals.iter().map(|&r| f(r)).collect(),
            elapsed_ms: with_timing.then_some(self.elapsed.as_secs_f64() * 1e3),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::QuadPoly;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    /// `a y^2 + b y + k` in one variable.
    fn univariate(a: f64, b: f64, k: f64) -> SquareSystem<f64> {
        SquareSystem::from_equations(vec![QuadPoly { constant: c(k, 0.0), linear: vec![c(b, 0.0)], quadratic: vec![c(a, 0.0)] }])
    }

    #[test]
    fn start_points() {
        let (_, pts) = total_degree_start::<f64>(&StartSystem { dim: 1 });
        assert_eq!(pts, vec![vec![c(1.0, 0.0)], vec![c(-1.0, 0.0)]]);
        let g = StartSystem { dim: 4 };
        let (_, pts) = total_degree_start::<f64>(&g);
        assert_eq!(pts.len(), 16);
        let mut out = vec![c(0.0, 0.0); 4];
        for p in &pts {
            g.evaluate(p, &mut out);
            assert!(out.iter().all(|z| *z == c(0.0, 0.0)));
        }
    }

    #[test]
    fn identity_homotopy_stays_put() {
        let g = StartSystem { dim: 2 };
        let cfg = TrackerConfig::with_seed(1);
        let start = vec![c(1.0, 0.0), c(-1.0, 0.0)];
        let e = track_path(&g, &start, &cfg);
        assert_eq!(e.status, PathStatus::Converged);
        assert!(relative_distance(&e.point, &start) < 1e-12);
    }

    #[test]
    fn known_roots_of_y2_minus_4() {
        let f = univariate(1.0, 0.0, -4.0);
        let cfg = TrackerConfig::with_seed(2);
        let e = track_path(&f, &[c(1.0, 0.0)], &cfg);
        assert_eq!(e.status, PathStatus::Converged);
        assert!((e.point[0].norm() - 2.0).abs() < 1e-10 && e.point[0].im.abs() < 1e-10);
        assert!(e.residual <= 1e-10);
    }

    #[test]
    fn solve_y2_minus_1() {
        let f = univariate(1.0, 0.0, -1.0);
        let s = solve(&f, &TrackerConfig::with_seed(3));
        assert_eq!(s.count(), 2);
    }

    #[test]
    fn solve_in_f32() {
        let f = SquareSystem::<f32>::from_equations(vec![QuadPoly {
            constant: Complex::new(-2.0, 0.0),
            linear: vec![Complex::new(0.0, 0.0)],
            quadratic: vec![Complex::new(1.0, 0.0)],
        }]);
        let mut cfg = TrackerConfig::with_seed(3);
        cfg.corrector_tol = 1e-5;
        let s = solve(&f, &cfg);
        assert_eq!(s.count(), 2);
        for p in &s.points {
            assert!((p[0].norm() - 2f32.sqrt()).abs() < 1e-4);
        }
    }

    #[test]
    fn newton_refine_examples() {
        let f = univariate(1.0, 0.0, -4.0);
        let r = newton_refine(&f, &[c(2.0, 0.0)], 5, 1e-14);
        assert_eq!(r.point, vec![c(2.0, 0.0)]);
        let r = newton_refine(&f, &[c(1.9, 0.0)], 5, 1e-14);
        assert!((r.point[0] - c(2.0, 0.0)).norm() < 1e-14);
        assert!(r.refined);
        // Jacobian 2y vanishes at 0.
        let r = newton_refine(&f, &[c(0.0, 0.0)], 5, 1e-14);
        assert!(!r.refined);
        assert_eq!(r.point, vec![c(0.0, 0.0)]);
    }

    #[test]
    fn dedup_examples() {
        let a = vec![c(1.0, 1.0), c(2.0, 0.0)];
        let same = dedup(&[a.clone(), a.clone()], 1e-6);
        assert_eq!(same.len(), 1);
        assert_eq!(same[0].multiplicity(), 2);
        let b = vec![c(1.0, 1.0), c(2.0 * (1.0 + 1e-2), 0.0)];
        assert_eq!(dedup(&[a, b], 1e-6).len(), 2);
    }

    #[test]
    fn dedup_is_single_linkage() {
        let pts: Vec<Vec<Complex<f64>>> = [0.0, 0.6e-6, 1.2e-6, 5.0].iter().map(|&x| vec![c(1.0 + x, 0.0)]).collect();
        let cl = dedup(&pts, 1e-6);
        assert_eq!(cl.len(), 2);
        assert_eq!(cl[0].members, vec![0, 1, 2]);
    }

    #[test]
    fn config_validation() {
        let mut cfg = TrackerConfig::with_seed(9);
        assert!(cfg.validate().is_ok());
        cfg.min_step = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = TrackerConfig::with_seed(9);
        cfg.corrector_tol = 0.0;
        assert!(cfg.validate().is_err());
    }
}
