//! Quadratic binomials of the toric ideal, one per graph move.
//!
//! Every move exchanges one pair of disjoint edges on four distinct vertices
//! for another pair on the same vertices, keeping degrees and block-pair edge
//! counts fixed. The four families are named by how the four vertices spread
//! over blocks: all in one block, 3+1, 2+2, and 2+1+1.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Mul, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::blockmodel::{BlockSpec, Dyad, DyadIndex, Graph, Vertex};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MoveKind {
    #[serde(rename = "within")]
    WithinBlock,
    #[serde(rename = "3-1")]
    ThreeOne,
    #[serde(rename = "2-2")]
    TwoTwo,
    #[serde(rename = "2-1-1")]
    TwoOneOne,
}

impl MoveKind {
    pub const ALL: [MoveKind; 4] = [MoveKind::WithinBlock, MoveKind::ThreeOne, MoveKind::TwoTwo, MoveKind::TwoOneOne];

    pub fn label(self) -> &'static str {
        match self {
            MoveKind::WithinBlock => "within",
            MoveKind::ThreeOne => "3-1",
            MoveKind::TwoTwo => "2-2",
            MoveKind::TwoOneOne => "2-1-1",
        }
    }
}

impl fmt::Display for MoveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// `p[plus0] p[plus1] - p[minus0] p[minus1]` in canonical form: each side is
/// sorted and `plus < minus` lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadBinomial {
    pub kind: MoveKind,
    pub plus: [Dyad; 2],
    pub minus: [Dyad; 2],
    #[serde(skip)]
    plus_cols: [usize; 2],
    #[serde(skip)]
    minus_cols: [usize; 2],
}

impl QuadBinomial {
    pub fn new(kind: MoveKind, plus: [Dyad; 2], minus: [Dyad; 2], index: &DyadIndex) -> Result<Self> {
        let mut plus = plus;
        let mut minus = minus;
        plus.sort();
        minus.sort();
        if plus == minus {
            return Err(Error::InvalidGraph(format!("binomial sides coincide: {}{}", plus[0], plus[1])));
        }
        if minus < plus {
            std::mem::swap(&mut plus, &mut minus);
        }
        let col = |d: &Dyad| {
            index
                .position(d)
                .ok_or_else(|| Error::InvalidGraph(format!("{d} is not a dyad of this model")))
        };
        Ok(Self {
            kind,
            plus_cols: [col(&plus[0])?, col(&plus[1])?],
            minus_cols: [col(&minus[0])?, col(&minus[1])?],
            plus,
            minus,
        })
    }

    pub fn plus_columns(&self) -> [usize; 2] {
        self.plus_cols
    }

    pub fn minus_columns(&self) -> [usize; 2] {
        self.minus_cols
    }

    /// The four vertices touched, sorted.
    pub fn vertices(&self) -> Vec<Vertex> {
        let mut v: Vec<Vertex> = self.plus.iter().flat_map(|d| [d.first(), d.second()]).collect();
        v.sort();
        v
    }

    /// `e(plus) - e(minus)` over the columns of the model.
    pub fn exponent_vector(&self, ncols: usize) -> Vec<i64> {
        let mut e = vec![0i64; ncols];
        for c in self.plus_cols {
            e[c] += 1;
        }
        for c in self.minus_cols {
            e[c] -= 1;
        }
        e
    }
}

impl fmt::Display for QuadBinomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "p_{} p_{} - p_{} p_{}",
            self.plus[0], self.plus[1], self.minus[0], self.minus[1]
        )
    }
}

fn dyad(a: Vertex, b: Vertex) -> Dyad {
    Dyad::new(a, b).expect("distinct vertices")
}

fn combinations(items: &[Vertex], r: usize) -> Vec<Vec<Vertex>> {
    fn go(items: &[Vertex], r: usize, start: usize, cur: &mut Vec<Vertex>, out: &mut Vec<Vec<Vertex>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            go(items, r, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(items, r, 0, &mut Vec::with_capacity(r), &mut out);
    out
}

/// All quadratic binomials of the four families, canonical and deduplicated,
/// sorted by kind and then by their dyads.
pub fn enumerate_binomials(spec: &BlockSpec) -> Vec<QuadBinomial> {
    let index = DyadIndex::new(spec);
    let k = spec.num_blocks();
    let blocks: Vec<Vec<Vertex>> = (1..=k)
        .map(|i| (1..=spec.block_size(i)).map(|v| Vertex::new(i, v)).collect())
        .collect();

    let mut out: BTreeSet<(MoveKind, [Dyad; 2], [Dyad; 2])> = BTreeSet::new();
    let mut push = |kind, plus: [Dyad; 2], minus: [Dyad; 2]| {
        let b = QuadBinomial::new(kind, plus, minus, &index).expect("valid binomial");
        out.insert((b.kind, b.plus, b.minus));
    };

    for (i, bi) in blocks.iter().enumerate() {
        // Four vertices in one block: the three perfect matchings, pairwise.
        for q in combinations(bi, 4) {
            let (t, u, v, w) = (q[0], q[1], q[2], q[3]);
            let m = [
                [dyad(t, u), dyad(v, w)],
                [dyad(t, v), dyad(u, w)],
                [dyad(t, w), dyad(u, v)],
            ];
            for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                push(MoveKind::WithinBlock, m[a], m[b]);
            }
        }

        // Three vertices in block i, one outside: the outside vertex can pair
        // with any of the three, giving three matchings with equal block pairs.
        for tri in combinations(bi, 3) {
            for (j, bj) in blocks.iter().enumerate() {
                if j == i {
                    continue;
                }
                for &x in bj {
                    let m: Vec<[Dyad; 2]> = (0..3)
                        .map(|s| {
                            let a = tri[s];
                            let rest: Vec<Vertex> = tri.iter().copied().filter(|&y| y != a).collect();
                            [dyad(a, x), dyad(rest[0], rest[1])]
                        })
                        .collect();
                    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                        push(MoveKind::ThreeOne, m[a], m[b]);
                    }
                }
            }
        }

        // Two vertices in block i, two in a later block j.
        for pair in combinations(bi, 2) {
            let (t, u) = (pair[0], pair[1]);
            for bj in blocks.iter().skip(i + 1) {
                for other in combinations(bj, 2) {
                    let (v, w) = (other[0], other[1]);
                    push(MoveKind::TwoTwo, [dyad(t, v), dyad(u, w)], [dyad(t, w), dyad(u, v)]);
                }
            }
            // Two in block i, one each in two other blocks j < l.
            for j in 0..k {
                for l in j + 1..k {
                    if j == i || l == i {
                        continue;
                    }
                    for &v in &blocks[j] {
                        for &w in &blocks[l] {
                            push(MoveKind::TwoOneOne, [dyad(t, v), dyad(u, w)], [dyad(t, w), dyad(u, v)]);
                        }
                    }
                }
            }
        }
    }

    out.into_iter()
        .map(|(kind, plus, minus)| QuadBinomial::new(kind, plus, minus, &index).expect("valid binomial"))
        .collect()
}

/// Binomial counts per kind, in [`MoveKind::ALL`] order.
pub fn count_by_kind(binomials: &[QuadBinomial]) -> [usize; 4] {
    let mut counts = [0; 4];
    for b in binomials {
        counts[MoveKind::ALL.iter().position(|&k| k == b.kind).unwrap()] += 1;
    }
    counts
}

/// `p[plus0] * p[plus1] - p[minus0] * p[minus1]`.
pub fn evaluate_binomial<T>(b: &QuadBinomial, p: &[T]) -> T
where
    T: Copy + Mul<Output = T> + Sub<Output = T>,
{
    let [a, c] = b.plus_cols;
    let [d, e] = b.minus_cols;
    p[a] * p[c] - p[d] * p[e]
}

/// Applies the move of `b` to `graph` if the graph contains both dyads of one
/// side and neither of the other; returns the swapped graph.
pub fn apply_move(graph: &Graph, b: &QuadBinomial) -> Option<Graph> {
    let has = |side: &[Dyad; 2]| side.iter().all(|d| graph.has_edge(d));
    let none = |side: &[Dyad; 2]| side.iter().all(|d| !graph.has_edge(d));
    let (remove, add) = if has(&b.minus) && none(&b.plus) {
        (&b.minus, &b.plus)
    } else if has(&b.plus) && none(&b.minus) {
        (&b.plus, &b.minus)
    } else {
        return None;
    };
    let mut edges = graph.edges().clone();
    for d in remove {
        edges.remove(d);
    }
    edges.extend(add.iter().copied());
    Some(graph.with_edges(edges))
}

/// Monomial parameters: one per vertex and one per block pair `i <= j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToricParams<T = f64> {
    pub beta_prime: Vec<T>,
    pub alpha_prime: Vec<T>,
}

impl<T: Real> ToricParams<T> {
    pub fn new(spec: &BlockSpec, beta_prime: Vec<T>, alpha_prime: Vec<T>) -> Result<Self> {
        if beta_prime.len() != spec.num_vertices() {
            return Err(Error::DimensionMismatch { expected: spec.num_vertices(), got: beta_prime.len() });
        }
        if alpha_prime.len() != spec.num_block_pairs() {
            return Err(Error::DimensionMismatch { expected: spec.num_block_pairs(), got: alpha_prime.len() });
        }
        if let Some((index, v)) = beta_prime.iter().chain(&alpha_prime).enumerate().find(|(_, v)| **v <= T::zero()) {
            return Err(Error::NonPositiveData { index, value: v.to_f64().unwrap_or(f64::NAN) });
        }
        Ok(Self { beta_prime, alpha_prime })
    }

    pub fn ones(spec: &BlockSpec) -> Self {
        Self {
            beta_prime: vec![T::one(); spec.num_vertices()],
            alpha_prime: vec![T::one(); spec.num_block_pairs()],
        }
    }

    /// Parameters drawn log-uniformly from `[1/4, 4]`.
    pub fn random<R: Rng>(spec: &BlockSpec, rng: &mut R) -> Self {
        let mut draw = || T::of((rng.gen_range(-1.0..1.0) * std::f64::consts::LN_2 * 2.0).exp());
        Self {
            beta_prime: (0..spec.num_vertices()).map(|_| draw()).collect(),
            alpha_prime: (0..spec.num_block_pairs()).map(|_| draw()).collect(),
        }
    }
}

/// `p_{(i,v)(j,w)} = beta'_{(i,v)} beta'_{(j,w)} alpha'_{i,j}` for every dyad.
pub fn toric_point<T: Real>(spec: &BlockSpec, theta: &ToricParams<T>) -> Vec<T> {
    crate::blockmodel::enumerate_dyads(spec)
        .iter()
        .map(|d| {
            let (i, j) = d.block_pair();
            theta.beta_prime[spec.vertex_position(d.first())]
                * theta.beta_prime[spec.vertex_position(d.second())]
                * theta.alpha_prime[spec.block_pair_position(i, j)]
        })
        .collect()
}
