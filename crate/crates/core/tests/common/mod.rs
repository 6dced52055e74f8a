//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use itertools::Itertools;
use nalgebra::DMatrix;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sbm_mldeg::blockmodel::{design_matrix, BlockSpec};
use sbm_mldeg::likelihood::{QuadPoly, SquareSystem};

pub type C = Complex<f64>;

pub fn spec(s: &[usize]) -> BlockSpec {
    BlockSpec::new(s.to_vec()).unwrap()
}

/// Every unordered pair of unordered column pairs `{a, b} != {c, d}` with
/// `A(e_a + e_b) = A(e_c + e_d)`, found by exhaustive search over the design
/// matrix. Each move is returned as `(min side, max side)` of sorted columns.
pub fn brute_force_moves(spec: &BlockSpec) -> BTreeSet<([usize; 2], [usize; 2])> {
    let a = design_matrix(spec);
    let n = a.ncols();
    let image = |x: usize, y: usize| -> Vec<u8> { (0..a.nrows()).map(|r| a.get(r, x) + a.get(r, y)).collect() };
    let pairs: Vec<([usize; 2], Vec<u8>)> = (0..n).tuple_combinations().map(|(x, y)| ([x, y], image(x, y))).collect();
    let mut moves = BTreeSet::new();
    for (i, (p, ip)) in pairs.iter().enumerate() {
        for (q, iq) in &pairs[i + 1..] {
            if ip == iq {
                moves.insert((*p.min(q), *p.max(q)));
            }
        }
    }
    moves
}

/// Kind label from how the move's four vertices spread over blocks.
pub fn kind_of_blocks(mut blocks: Vec<usize>) -> &'static str {
    blocks.sort();
    let mut sizes: Vec<usize> = blocks.iter().dedup_with_count().map(|(c, _)| c).collect();
    sizes.sort_by(|a, b| b.cmp(a));
    match sizes.as_slice() {
        [4] => "within",
        [3, 1] => "3-1",
        [2, 2] => "2-2",
        [2, 1, 1] => "2-1-1",
        _ => "none",
    }
}

/// Number of ascents of a permutation.
fn ascents(p: &[usize]) -> usize {
    p.windows(2).filter(|w| w[0] < w[1]).count()
}

/// `A(n, k)` by enumerating all permutations of `1..=n`.
pub fn eulerian_brute(n: usize, k: usize) -> u64 {
    (1..=n).permutations(n).filter(|p| ascents(p) == k).count() as u64
}

/// Dense bivariate quadratic `c[0] + c[1] x + c[2] y + c[3] x^2 + c[4] x y + c[5] y^2`.
#[derive(Clone, Debug)]
pub struct Bivariate(pub [C; 6]);

impl Bivariate {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        let mut c = [C::new(0.0, 0.0); 6];
        for z in c.iter_mut() {
            *z = C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        Self(c)
    }

    pub fn eval(&self, x: C, y: C) -> C {
        let c = &self.0;
        c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y
    }

    fn dx(&self, x: C, y: C) -> C {
        self.0[1] + self.0[3] * 2.0 * x + self.0[4] * y
    }

    fn dy(&self, x: C, y: C) -> C {
        self.0[2] + self.0[4] * x + self.0[5] * 2.0 * y
    }

    /// Coefficients of `y^0, y^1, y^2` as polynomials in `x` (ascending).
    fn in_y(&self) -> [Vec<C>; 3] {
        let c = &self.0;
        [vec![c[0], c[1], c[3]], vec![c[2], c[4]], vec![c[5]]]
    }

    pub fn to_quad_poly(&self) -> QuadPoly<f64> {
        let c = &self.0;
        QuadPoly {
            constant: c[0],
            linear: vec![c[1], c[2]],
            quadratic: vec![c[3], c[4] * 0.5, c[4] * 0.5, c[5]],
        }
    }
}

pub fn square_system(f: &Bivariate, g: &Bivariate) -> SquareSystem<f64> {
    SquareSystem::from_equations(vec![f.to_quad_poly(), g.to_quad_poly()])
}

fn pmul(a: &[C], b: &[C]) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn psub(a: &[C], b: &[C]) -> Vec<C> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or_default() - b.get(i).copied().unwrap_or_default())
        .collect()
}

fn peval(a: &[C], x: C) -> C {
    a.iter().rev().fold(C::new(0.0, 0.0), |acc, &c| acc * x + c)
}

/// Roots of an ascending-coefficient polynomial from the eigenvalues of its
/// companion matrix.
pub fn companion_roots(coeffs: &[C]) -> Vec<C> {
    let mut c = coeffs.to_vec();
    while c.len() > 1 && c.last().unwrap().norm() < 1e-14 {
        c.pop();
    }
    let d = c.len() - 1;
    if d == 0 {
        return Vec::new();
    }
    let lead = c[d];
    let m = DMatrix::<C>::from_fn(d, d, |i, j| {
        if j == d - 1 {
            -c[i] / lead
        } else if i == j + 1 {
            C::new(1.0, 0.0)
        } else {
            C::new(0.0, 0.0)
        }
    });
    m.schur().eigenvalues().expect("complex Schur form is triangular").iter().copied().collect()
}

/// Common roots of `f = g = 0`: eliminate `y` with the Sylvester resultant of
/// two quadratics, solve the quartic in `x` by companion eigenvalues, recover
/// `y` from the linear combination `b2 f - a2 g`, then polish with Newton.
/// Also returns the degree of the resultant.
pub fn resultant_roots(f: &Bivariate, g: &Bivariate) -> (Vec<[C; 2]>, usize) {
    let [a0, a1, a2] = f.in_y();
    let [b0, b1, b2] = g.in_y();
    // Res = (a2 b0 - a0 b2)^2 - (a2 b1 - a1 b2)(a1 b0 - a0 b1)
    let u = psub(&pmul(&a2, &b0), &pmul(&a0, &b2));
    let v = psub(&pmul(&a2, &b1), &pmul(&a1, &b2));
    let w = psub(&pmul(&a1, &b0), &pmul(&a0, &b1));
    let res = psub(&pmul(&u, &u), &pmul(&v, &w));
    let mut degree = res.len() - 1;
    while degree > 0 && res[degree].norm() < 1e-14 {
        degree -= 1;
    }
    let roots = companion_roots(&res)
        .into_iter()
        .map(|x| {
            // b2 f - a2 g = -v(x) y - u(x) = 0
            let mut y = -peval(&u, x) / peval(&v, x);
            let mut x = x;
            for _ in 0..4 {
                let (fx, fy, gx, gy) = (f.dx(x, y), f.dy(x, y), g.dx(x, y), g.dy(x, y));
                let (fv, gv) = (f.eval(x, y), g.eval(x, y));
                let det = fx * gy - fy * gx;
                x -= (fv * gy - fy * gv) / det;
                y -= (fx * gv - fv * gx) / det;
            }
            [x, y]
        })
        .collect();
    (roots, degree)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Relative distance used for matching root sets.
pub fn rel_dist(a: &[C], b: &[C]) -> f64 {
    let n = |v: &[C]| v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let d = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
    d / 1f64.max(n(a)).max(n(b))
}

/// True if the two root multisets match one-to-one within `tol`.
pub fn root_sets_match(a: &[Vec<C>], b: &[Vec<C>], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    a.iter().all(|x| {
        let best = (0..b.len())
            .filter(|&j| !used[j])
            .min_by(|&i, &j| rel_dist(x, &b[i]).total_cmp(&rel_dist(x, &b[j])));
        match best {
            Some(j) if rel_dist(x, &b[j]) <= tol => {
                used[j] = true;
                true
            }
            _ => false,
        }
    })
}

/// Acceptance-suite models with their expected ML degrees.
pub const COUNT_SUITE: [(&[usize], u64); 15] = [
    (&[2], 1),
    (&[3], 1),
    (&[4], 4),
    (&[5], 11),
    (&[6], 26),
    (&[1, 1], 1),
    (&[2, 1], 1),
    (&[3, 1], 4),
    (&[4, 1], 11),
    (&[2, 2], 1),
    (&[3, 2], 4),
    (&[4, 2], 11),
    (&[3, 3], 16),
    (&[2, 1, 1], 1),
    (&[3, 2, 1], 4),
];

/// Edges of a sample graph on blocks of sizes 3, 4, 3.
pub const SAMPLE_GRAPH_EDGES: [((usize, usize), (usize, usize)); 15] = [
    ((1, 1), (1, 2)),
    ((1, 2), (1, 3)),
    ((1, 2), (3, 3)),
    ((1, 3), (3, 1)),
    ((2, 1), (1, 1)),
    ((2, 1), (2, 2)),
    ((2, 1), (1, 2)),
    ((2, 1), (3, 2)),
    ((2, 2), (1, 3)),
    ((2, 2), (2, 3)),
    ((2, 2), (3, 2)),
    ((2, 3), (2, 4)),
    ((2, 3), (3, 3)),
    ((2, 4), (3, 1)),
    ((3, 1), (3, 2)),
];

pub const SAMPLE_GRAPH_STATISTIC: [u64; 16] = [2, 4, 3, 4, 4, 3, 2, 3, 3, 2, 2, 3, 2, 3, 4, 1];

/// Reference 8 x 10 design matrix of M(3,2).
pub const M32_MATRIX: [&str; 8] = [
    "1111000000",
    "1000111000",
    "0100100110",
    "0010010101",
    "0001001011",
    "1100100000",
    "0011011110",
    "0000000001",
];
