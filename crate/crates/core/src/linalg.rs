//! Small dense linear algebra: exact elimination over any field-like
//! `Num` type, complex LU with partial pivoting, real Cholesky.

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Num, Zero};

use crate::scalar::Real;

/// Reduces `m` to reduced row echelon form in place and returns the pivot
/// columns. Pivots are the first nonzero entry in each column, so the
/// elimination is exact whenever `T` is.
pub fn rref<T: Clone + Num>(m: &mut [Vec<T>]) -> Vec<usize> {
    let nrows = m.len();
    let ncols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == nrows {
            break;
        }
        let Some(p) = (r..nrows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = T::one() / m[r][c].clone();
        for x in m[r].iter_mut() {
            *x = x.clone() * inv.clone();
        }
        for i in 0..nrows {
            if i == r || m[i][c].is_zero() {
                continue;
            }
            let f = m[i][c].clone();
            let (head, tail) = m.split_at_mut(r.max(i));
            let (pivot_row, row) = if i < r { (&tail[0], &mut head[i]) } else { (&head[r], &mut tail[0]) };
            for (x, y) in row.iter_mut().zip(pivot_row) {
                *x = x.clone() - f.clone() * y.clone();
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn to_rational(rows: &[Vec<i64>]) -> Vec<Vec<BigRational>> {
    rows.iter()
        .map(|r| r.iter().map(|&x| BigRational::from_integer(BigInt::from(x))).collect())
        .collect()
}

fn transpose<T: Clone>(rows: &[Vec<T>]) -> Vec<Vec<T>> {
    let ncols = rows.first().map_or(0, Vec::len);
    (0..ncols).map(|c| rows.iter().map(|r| r[c].clone()).collect()).collect()
}

/// Indices of a maximal set of linearly independent rows, chosen greedily in
/// row order.
pub fn independent_rows(rows: &[Vec<i64>]) -> Vec<usize> {
    let mut t = transpose(&to_rational(rows));
    if t.is_empty() {
        return Vec::new();
    }
    rref(&mut t)
}

pub fn rank(rows: &[Vec<i64>]) -> usize {
    let mut m = to_rational(rows);
    rref(&mut m).len()
}

/// Basis of the right kernel `{x : A x = 0}`; one vector per free column.
pub fn kernel_basis(rows: &[Vec<i64>]) -> Vec<Vec<BigRational>> {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut m = to_rational(rows);
    let pivots = rref(&mut m);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); ncols];
            v[f] = BigRational::from_integer(1.into());
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[r][f].clone();
            }
            v
        })
        .collect()
}

pub fn rational_to_f64(x: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().expect("finite rational")
}

/// LU factorization with partial pivoting of a square complex matrix stored
/// row-major.
#[derive(Clone, Debug)]
pub struct ComplexLu<T> {
    n: usize,
    lu: Vec<Complex<T>>,
    perm: Vec<usize>,
}

impl<T: Real> ComplexLu<T> {
    /// Returns `None` when a pivot is numerically zero relative to the
    /// largest entry, or when the matrix has non-finite entries.
    pub fn factor(mut a: Vec<Complex<T>>, n: usize) -> Option<Self> {
        assert_eq!(a.len(), n * n);
        let scale = a.iter().fold(T::zero(), |m, z| m.max(z.norm()));
        if !scale.is_finite() {
            return None;
        }
        let tiny = scale * T::epsilon() * T::of(n as f64);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, a[i * n + k].norm()))
                .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= tiny || pmax.is_zero() {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                a[i * n + k] = f;
                if f.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = a[k * n + j];
                    a[i * n + j] -= f * u;
                }
            }
        }
        Some(Self { n, lu: a, perm })
    }

    pub fn solve(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.n;
        let mut x: Vec<Complex<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[i * n + j];
                let xj = x[j];
                x[i] -= l * xj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[i * n + j];
                let xj = x[j];
                x[i] -= u * xj;
            }
            x[i] = x[i] / self.lu[i * n + i];
        }
        x
    }

    /// Ratio of the largest to the smallest pivot; a cheap conditioning proxy.
    pub fn pivot_ratio(&self) -> T {
        let n = self.n;
        let (lo, hi) = (0..n).map(|i| self.lu[i * n + i].norm()).fold(
            (T::infinity(), T::zero()),
            |(lo, hi), d| (lo.min(d), hi.max(d)),
        );
        if n == 0 {
            T::one()
        } else {
            hi / lo
        }
    }
}

/// Solves `H x = b` for symmetric positive definite `H` (row-major).
/// Returns `None` if `H` is not numerically positive definite.
pub fn cholesky_solve<T: Real>(h: &[T], n: usize, b: &[T]) -> Option<Vec<T>> {
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = h[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= T::zero() || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            let v = l[i * n + k] * y[k];
            y[i] -= v;
        }
        y[i] = y[i] / l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            let v = l[k * n + i] * y[k];
            y[i] -= v;
        }
        y[i] = y[i] / l[i * n + i];
    }
    Some(y)
}
