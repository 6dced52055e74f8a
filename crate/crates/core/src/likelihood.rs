//! Likelihood equations `A(p - u) = 0` plus the quadratic binomials, their
//! exact affine chart `p = u + K y`, and the randomized square system handed
//! to the solver.

use std::f64::consts::TAU;

use num_complex::Complex;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::binomials::{enumerate_binomials, evaluate_binomial, QuadBinomial};
use crate::blockmodel::{design_matrix, rank_exact, BlockSpec, DesignMatrix, Dyad};
use crate::error::{Error, Result};
use crate::linalg::{kernel_basis, rational_to_f64};
use crate::scalar::{ComplexDD, Real};

/// Residual tolerance for "satisfies the full system".
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-8;

/// Data vector with coordinates in `[1, 2]`, reproducible from its seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenericData {
    pub u: Vec<f64>,
    pub seed: u64,
}

pub fn sample_generic_u(spec: &BlockSpec, seed: u64) -> GenericData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = (0..spec.num_dyads()).map(|_| rng.gen_range(1.0..=2.0)).collect();
    GenericData { u, seed }
}

/// Linear and quadratic likelihood equations for one data vector.
#[derive(Clone, Debug)]
pub struct LikelihoodSystem {
    spec: BlockSpec,
    design: DesignMatrix,
    u: Vec<f64>,
    pivot_rows: Vec<usize>,
    quadratics: Vec<QuadBinomial>,
}

pub fn assemble(spec: &BlockSpec, u: &[f64]) -> Result<LikelihoodSystem> {
    if u.len() != spec.num_dyads() {
        return Err(Error::DimensionMismatch { expected: spec.num_dyads(), got: u.len() });
    }
    if let Some((index, &value)) = u.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::NonPositiveData { index, value });
    }
    let design = design_matrix(spec);
    let pivot_rows = rank_exact(&design).pivot_rows;
    Ok(LikelihoodSystem {
        spec: spec.clone(),
        design,
        u: u.to_vec(),
        pivot_rows,
        quadratics: enumerate_binomials(spec),
    })
}

impl LikelihoodSystem {
    pub fn spec(&self) -> &BlockSpec {
        &self.spec
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn num_variables(&self) -> usize {
        self.design.ncols()
    }

    pub fn rank(&self) -> usize {
        self.pivot_rows.len()
    }

    pub fn codim(&self) -> usize {
        self.num_variables() - self.rank()
    }

    /// Rows of `A` kept in the reduced linear system.
    pub fn pivot_rows(&self) -> &[usize] {
        &self.pivot_rows
    }

    pub fn quadratics(&self) -> &[QuadBinomial] {
        &self.quadratics
    }

    /// Right-hand side `A_r . u` of one design row.
    pub fn rhs(&self, row: usize) -> f64 {
        self.design.row(row).iter().zip(&self.u).filter(|(&a, _)| a != 0).map(|(_, &x)| x).sum()
    }

    pub fn dyads(&self) -> &[Dyad] {
        self.design.dyads()
    }
}

/// Affine chart `p(y) = u + K y` on the solution space of the linear equations.
#[derive(Clone, Debug)]
pub struct KernelChart {
    particular: Vec<f64>,
    /// `|E|` rows by `c` columns.
    basis: Vec<Vec<BigRational>>,
    basis_f64: Vec<Vec<f64>>,
}

pub fn kernel_chart(system: &LikelihoodSystem) -> KernelChart {
    let vectors = kernel_basis(&system.design.integer_rows());
    let ncols = system.num_variables();
    let c = vectors.len();
    let basis: Vec<Vec<BigRational>> =
        (0..ncols).map(|e| (0..c).map(|j| vectors[j][e].clone()).collect()).collect();
    let basis_f64 = basis.iter().map(|r| r.iter().map(rational_to_f64).collect()).collect();
    KernelChart { particular: system.u.clone(), basis, basis_f64 }
}

impl KernelChart {
    pub fn dim(&self) -> usize {
        self.basis.first().map_or(0, Vec::len)
    }

    pub fn particular(&self) -> &[f64] {
        &self.particular
    }

    pub fn basis(&self) -> &[Vec<BigRational>] {
        &self.basis
    }

    pub fn basis_f64(&self) -> &[Vec<f64>] {
        &self.basis_f64
    }

    /// Coordinate `e` of `p(y)` as an affine form `(constant, coefficients)`.
    fn affine_form<T: Real>(&self, e: usize) -> (Complex<T>, Vec<Complex<T>>) {
        (
            Complex::new(T::of(self.particular[e]), T::zero()),
            self.basis_f64[e].iter().map(|&k| Complex::new(T::of(k), T::zero())).collect(),
        )
    }

    pub fn point<T: Real>(&self, y: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(y.len(), self.dim());
        self.particular
            .iter()
            .zip(&self.basis_f64)
            .map(|(&u, row)| {
                row.iter()
                    .zip(y)
                    .fold(Complex::new(T::of(u), T::zero()), |acc, (&k, &yj)| acc + yj * T::of(k))
            })
            .collect()
    }

    /// Recovers `y` from a point `p` on the chart by reading the free
    /// coordinates, where the basis restricts to the identity.
    pub fn coordinates<T: Real>(&self, p: &[Complex<T>]) -> Vec<Complex<T>> {
        let c = self.dim();
        let mut y = vec![Complex::new(T::zero(), T::zero()); c];
        for (e, row) in self.basis.iter().enumerate() {
            let ones: Vec<usize> = row.iter().enumerate().filter(|(_, x)| !num_traits::Zero::is_zero(*x)).map(|(j, _)| j).collect();
            if ones.len() == 1 && num_traits::One::is_one(&row[ones[0]]) {
                y[ones[0]] = p[e] - T::of(self.particular[e]);
            }
        }
        y
    }
}

/// Dense complex polynomial of degree at most two:
/// `constant + linear . y + y^T Q y` with symmetric `Q`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadPoly<T> {
    pub constant: Complex<T>,
    pub linear: Vec<Complex<T>>,
    /// Symmetric, row-major `n x n`.
    pub quadratic: Vec<Complex<T>>,
}

impl<T: Real> QuadPoly<T> {
    pub fn zero(n: usize) -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Self { constant: z, linear: vec![z; n], quadratic: vec![z; n * n] }
    }

    pub fn nvars(&self) -> usize {
        self.linear.len()
    }

    /// Product of two affine forms.
    pub fn product(a: &(Complex<T>, Vec<Complex<T>>), b: &(Complex<T>, Vec<Complex<T>>)) -> Self {
        let n = a.1.len();
        let two = T::of(2.0);
        let mut q = vec![Complex::new(T::zero(), T::zero()); n * n];
        for i in 0..n {
            for j in 0..n {
                q[i * n + j] = (a.1[i] * b.1[j] + a.1[j] * b.1[i]) / two;
            }
        }
        Self {
            constant: a.0 * b.0,
            linear: a.1.iter().zip(&b.1).map(|(&ai, &bi)| a.0 * bi + b.0 * ai).collect(),
            quadratic: q,
        }
    }

    pub fn add_scaled(&mut self, other: &Self, s: Complex<T>) {
        self.constant += other.constant * s;
        for (x, y) in self.linear.iter_mut().zip(&other.linear) {
            *x += *y * s;
        }
        for (x, y) in self.quadratic.iter_mut().zip(&other.quadratic) {
            *x += *y * s;
        }
    }

    pub fn eval(&self, y: &[Complex<T>]) -> Complex<T> {
        let n = self.nvars();
        let mut acc = self.constant;
        for i in 0..n {
            let mut row = self.linear[i];
            for j in 0..n {
                row += self.quadratic[i * n + j] * y[j];
            }
            acc += row * y[i];
        }
        acc
    }

    /// Gradient `linear + 2 Q y` written into `out`.
    pub fn gradient(&self, y: &[Complex<T>], out: &mut [Complex<T>]) {
        let n = self.nvars();
        let two = T::of(2.0);
        for i in 0..n {
            let mut g = self.linear[i];
            for j in 0..n {
                g += self.quadratic[i * n + j] * y[j] * two;
            }
            out[i] = g;
        }
    }

    /// Evaluation in double-double arithmetic.
    pub fn eval_compensated(&self, y: &[Complex<T>]) -> Complex<T> {
        let n = self.nvars();
        let ydd: Vec<ComplexDD<T>> = y.iter().map(|&z| ComplexDD::from_complex(z)).collect();
        let mut acc = ComplexDD::from_complex(self.constant);
        for i in 0..n {
            let mut row = ComplexDD::from_complex(self.linear[i]);
            for j in 0..n {
                row = row.add(ComplexDD::from_complex(self.quadratic[i * n + j]).mul(ydd[j]));
            }
            acc = acc.add(row.mul(ydd[i]));
        }
        acc.to_complex()
    }

    /// Total degree: 2 if any quadratic coefficient is nonzero, 1 if only
    /// linear ones are, 0 otherwise.
    pub fn degree(&self) -> usize {
        let nz = |z: &Complex<T>| z.norm() > T::zero();
        if self.quadratic.iter().any(nz) {
            2
        } else if self.linear.iter().any(nz) {
            1
        } else {
            0
        }
    }
}

/// Square system of quadratics in the chart coordinates.
#[derive(Clone, Debug)]
pub struct SquareSystem<T> {
    equations: Vec<QuadPoly<T>>,
    /// `c x (#binomials)` combination matrix; empty when built directly.
    combination: Vec<Vec<Complex<T>>>,
    seed: Option<u64>,
}

impl<T: Real> SquareSystem<T> {
    /// Wraps explicit equations; panics unless the system is square.
    pub fn from_equations(equations: Vec<QuadPoly<T>>) -> Self {
        let n = equations.len();
        assert!(equations.iter().all(|e| e.nvars() == n), "system must be square");
        Self { equations, combination: Vec::new(), seed: None }
    }

    pub fn equations(&self) -> &[QuadPoly<T>] {
        &self.equations
    }

    pub fn combination(&self) -> &[Vec<Complex<T>>] {
        &self.combination
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.equations.len()
    }
}

/// Substitutes the chart into every binomial.
pub fn restrict_binomials<T: Real>(system: &LikelihoodSystem, chart: &KernelChart) -> Vec<QuadPoly<T>> {
    system
        .quadratics
        .iter()
        .map(|b| {
            let [a, c] = b.plus_columns();
            let [d, e] = b.minus_columns();
            let mut poly = QuadPoly::product(&chart.affine_form(a), &chart.affine_form(c));
            let minus = QuadPoly::product(&chart.affine_form(d), &chart.affine_form(e));
            poly.add_scaled(&minus, Complex::new(-T::one(), T::zero()));
            poly
        })
        .collect()
}

/// Row `m` of the result is `sum_b matrix[m][b] * polys[b]`.
pub fn combine<T: Real>(polys: &[QuadPoly<T>], matrix: &[Vec<Complex<T>>]) -> Vec<QuadPoly<T>> {
    let n = polys.first().map_or(0, QuadPoly::nvars);
    matrix
        .iter()
        .map(|row| {
            assert_eq!(row.len(), polys.len());
            let mut acc = QuadPoly::zero(n);
            for (p, &s) in polys.iter().zip(row) {
                acc.add_scaled(p, s);
            }
            acc
        })
        .collect()
}

/// Random combination matrix with entries `r * e^{i phi}`, `r` in `[0.5, 1.5]`.
pub fn random_combination<T: Real>(rows: usize, cols: usize, seed: u64) -> Vec<Vec<Complex<T>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| {
                    let r: f64 = rng.gen_range(0.5..=1.5);
                    let phi: f64 = rng.gen_range(0.0..TAU);
                    Complex::from_polar(T::of(r), T::of(phi))
                })
                .collect()
        })
        .collect()
}

/// Restricts the binomials to the chart and forms `c` random combinations.
pub fn square_up<T: Real>(system: &LikelihoodSystem, chart: &KernelChart, seed: u64) -> Result<SquareSystem<T>> {
    let c = chart.dim();
    if c == 0 {
        return Err(Error::TrivialKernel);
    }
    let polys = restrict_binomials::<T>(system, chart);
    let combination = random_combination(c, polys.len(), seed);
    let equations = combine(&polys, &combination);
    Ok(SquareSystem { equations, combination, seed: Some(seed) })
}

/// Largest violation of the likelihood equations at `p`: linear rows are
/// measured relative to `max(1, |A_r u|)`, binomials relative to
/// `max(1, max|p_e|)^2`.
pub fn full_residual<T: Real>(system: &LikelihoodSystem, p: &[Complex<T>]) -> T {
    assert_eq!(p.len(), system.num_variables());
    let mut worst = T::zero();
    for &r in &system.pivot_rows {
        let lhs = system
            .design
            .row(r)
            .iter()
            .zip(p)
            .filter(|(&a, _)| a != 0)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (_, &x)| acc + x);
        let rhs = T::of(system.rhs(r));
        let res = (lhs - rhs).norm() / rhs.abs().max(T::one());
        worst = worst.max(res);
    }
    let scale = p.iter().fold(T::one(), |m, z| m.max(z.norm()));
    let scale2 = scale * scale;
    for b in &system.quadratics {
        worst = worst.max(evaluate_binomial(b, p).norm() / scale2);
    }
    if worst.is_nan() {
        T::infinity()
    } else {
        worst
    }
}

/// JSON export of a likelihood system.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemExport {
    pub blocks: Vec<usize>,
    pub variables: Vec<String>,
    pub u: Vec<f64>,
    pub linear: Vec<LinearRowExport>,
    pub quadratics: Vec<QuadBinomial>,
    pub chart: ChartExport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinearRowExport {
    pub label: String,
    pub coefficients: Vec<i64>,
    pub rhs: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChartExport {
    pub dim: usize,
    /// `|E|` rows of `[numerator, denominator]` pairs.
    pub basis: Vec<Vec<[String; 2]>>,
}

impl LikelihoodSystem {
    pub fn export(&self, chart: &KernelChart) -> SystemExport {
        SystemExport {
            blocks: self.spec.sizes().to_vec(),
            variables: self.design.column_labels(),
            u: self.u.clone(),
            linear: self
                .pivot_rows
                .iter()
                .map(|&r| LinearRowExport {
                    label: self.design.row_labels()[r].to_string(),
                    coefficients: self.design.row(r).iter().map(|&x| x as i64).collect(),
                    rhs: self.rhs(r),
                })
                .collect(),
            quadratics: self.quadratics.clone(),
            chart: ChartExport {
                dim: chart.dim(),
                basis: chart
                    .basis
                    .iter()
                    .map(|row| row.iter().map(|x| [x.numer().to_string(), x.denom().to_string()]).collect())
                    .collect(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn spec(s: &[usize]) -> BlockSpec {
        BlockSpec::new(s.to_vec()).unwrap()
    }

    #[test]
    fn sampling_is_deterministic_and_in_range() {
        let s = spec(&[3, 2]);
        let a = sample_generic_u(&s, 7);
        assert_eq!(a, sample_generic_u(&s, 7));
        let b = sample_generic_u(&s, 8);
        assert!(a.u.iter().zip(&b.u).all(|(x, y)| x != y));
        assert!(a.u.iter().all(|&x| (1.0..=2.0).contains(&x)));
    }

    #[test]
    fn assemble_small_models() {
        let s = spec(&[2]);
        let sys = assemble(&s, &[1.5]).unwrap();
        assert_eq!((sys.num_variables(), sys.rank(), sys.quadratics().len()), (1, 1, 0));

        let s = spec(&[1, 1, 1]);
        let sys = assemble(&s, &[1.0, 1.2, 1.4]).unwrap();
        assert_eq!((sys.num_variables(), sys.rank(), sys.quadratics().len()), (3, 3, 0));

        assert!(matches!(assemble(&s, &[1.0]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(assemble(&s, &[1.0, -1.0, 1.0]), Err(Error::NonPositiveData { index: 1, .. })));
    }

    #[test]
    fn chart_dimensions() {
        for (s, c) in [(vec![2], 0), (vec![4], 2), (vec![3, 2], 4)] {
            let s = spec(&s);
            let sys = assemble(&s, &sample_generic_u(&s, 1).u).unwrap();
            assert_eq!(kernel_chart(&sys).dim(), c, "{s}");
        }
    }

    #[test]
    fn chart_is_exactly_in_the_kernel() {
        let s = spec(&[3, 2, 1]);
        let sys = assemble(&s, &sample_generic_u(&s, 1).u).unwrap();
        let chart = kernel_chart(&sys);
        for j in 0..chart.dim() {
            let col: Vec<BigRational> = chart.basis().iter().map(|r| r[j].clone()).collect();
            for r in sys.design().rows() {
                let s: BigRational = r.iter().zip(&col).filter(|(&a, _)| a != 0).map(|(_, x)| x.clone()).sum();
                assert!(s.is_zero());
            }
        }
    }

    #[test]
    fn coordinates_invert_point() {
        let s = spec(&[4, 1]);
        let sys = assemble(&s, &sample_generic_u(&s, 2).u).unwrap();
        let chart = kernel_chart(&sys);
        let y: Vec<Complex<f64>> = (0..chart.dim()).map(|j| Complex::new(j as f64 - 1.0, 0.5)).collect();
        let back = chart.coordinates(&chart.point(&y));
        for (a, b) in y.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn square_up_shape() {
        let s = spec(&[4]);
        let sys = assemble(&s, &sample_generic_u(&s, 3).u).unwrap();
        let chart = kernel_chart(&sys);
        let sq: SquareSystem<f64> = square_up(&sys, &chart, 11).unwrap();
        assert_eq!(sq.dim(), 2);
        assert!(sq.equations().iter().all(|e| e.degree() == 2));
        assert_eq!(sq.combination().len(), 2);

        let s = spec(&[2, 1]);
        let sys = assemble(&s, &sample_generic_u(&s, 3).u).unwrap();
        assert!(matches!(square_up::<f64>(&sys, &kernel_chart(&sys), 1), Err(Error::TrivialKernel)));
    }

    #[test]
    fn identity_combination_reproduces_restricted_binomials() {
        let s = spec(&[3, 2]);
        let sys = assemble(&s, &sample_generic_u(&s, 4).u).unwrap();
        let chart = kernel_chart(&sys);
        let polys = restrict_binomials::<f64>(&sys, &chart);
        let nb = polys.len();
        let eye: Vec<Vec<Complex<f64>>> = (0..nb)
            .map(|i| (0..nb).map(|j| Complex::new((i == j) as u8 as f64, 0.0)).collect())
            .collect();
        assert_eq!(combine(&polys, &eye), polys);
    }

    #[test]
    fn restricted_binomials_match_direct_evaluation() {
        let s = spec(&[3, 2]);
        let sys = assemble(&s, &sample_generic_u(&s, 4).u).unwrap();
        let chart = kernel_chart(&sys);
        let polys = restrict_binomials::<f64>(&sys, &chart);
        let y: Vec<Complex<f64>> = (0..chart.dim()).map(|j| Complex::new(0.3 * j as f64, -0.2)).collect();
        let p = chart.point(&y);
        for (poly, b) in polys.iter().zip(sys.quadratics()) {
            assert!((poly.eval(&y) - evaluate_binomial(b, &p)).norm() < 1e-12);
            assert!((poly.eval_compensated(&y) - poly.eval(&y)).norm() < 1e-12);
        }
    }

    #[test]
    fn residual_examples() {
        let s = spec(&[2, 1]);
        let data = sample_generic_u(&s, 5);
        let sys = assemble(&s, &data.u).unwrap();
        let p: Vec<Complex<f64>> = data.u.iter().map(|&x| Complex::new(x, 0.0)).collect();
        assert_eq!(full_residual(&sys, &p), 0.0);

        let s = spec(&[4]);
        let data = sample_generic_u(&s, 5);
        let sys = assemble(&s, &data.u).unwrap();
        let p: Vec<Complex<f64>> = (0..6).map(|i| Complex::new(1.0 + 0.1 * i as f64, 0.3)).collect();
        assert!(full_residual(&sys, &p) > 0.0);
    }

    #[test]
    fn export_has_rational_pairs() {
        let s = spec(&[4]);
        let sys = assemble(&s, &sample_generic_u(&s, 1).u).unwrap();
        let chart = kernel_chart(&sys);
        let e = sys.export(&chart);
        assert_eq!(e.linear.len(), 4);
        assert_eq!(e.chart.dim, 2);
        assert_eq!(e.chart.basis.len(), 6);
        assert_eq!(e.quadratics.len(), 3);
    }
}
