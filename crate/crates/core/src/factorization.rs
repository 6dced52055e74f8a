//! Contraction of the last block: the models `M1 = (n_1, ..., n_{k-1}, 1)` and
//! `M2 = (1, n_k)`, the aggregation map `phi` from `M` to `M1 x M2`, its
//! inverse, and a numeric check that `phi` is a bijection of solution sets.

use num_complex::Complex;
use num_traits::Num;
use serde::{Deserialize, Serialize};

use crate::blockmodel::{BlockSpec, DyadIndex, Vertex};
use crate::error::{Error, Result};
use crate::homotopy::relative_distance;
use crate::likelihood::{assemble, full_residual, kernel_chart, sample_generic_u, LikelihoodSystem};
use crate::mldeg::{check_gate, solve_likelihood, NumericConfig, TrialSeeds};

/// Where a coordinate of `M` comes from under `phi^{-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Source {
    First(usize),
    Second(usize),
    /// `p1[first] * p2[second] / sum(p2 star)`.
    Cross { first: usize, second: usize },
}

/// Index tables relating `M` to its two contractions.
#[derive(Clone, Debug)]
pub struct ContractionPair {
    spec: BlockSpec,
    m1: BlockSpec,
    m2: BlockSpec,
    /// For each dyad of `M1`, the columns of `M` it sums.
    table1: Vec<Vec<usize>>,
    table2: Vec<Vec<usize>>,
    /// Star columns of `M1`, in order of the outside vertex.
    star1: Vec<usize>,
    /// Star columns of `M2`, in order of the block-`k` vertex.
    star2: Vec<usize>,
    sources: Vec<Source>,
}

impl ContractionPair {
    pub fn new(spec: &BlockSpec) -> Result<Self> {
        let k = spec.num_blocks();
        if k < 2 {
            return Err(Error::SingleBlock);
        }
        let nk = spec.block_size(k);
        let mut s1 = spec.sizes()[..k - 1].to_vec();
        s1.push(1);
        let m1 = BlockSpec::new(s1)?;
        let m2 = BlockSpec::new(vec![1, nk])?;
        let idx = DyadIndex::new(spec);
        let idx1 = DyadIndex::new(&m1);
        let idx2 = DyadIndex::new(&m2);
        let star1_vertex = Vertex::new(k, 1);
        let star2_vertex = Vertex::new(1, 1);
        let outside: Vec<Vertex> = spec.vertices().filter(|v| v.block < k).collect();

        let table1 = idx1
            .dyads()
            .iter()
            .map(|d| {
                let (a, b) = (d.first(), d.second());
                if b == star1_vertex {
                    (1..=nk).map(|w| idx.column(a, Vertex::new(k, w))).collect()
                } else {
                    vec![idx.column(a, b)]
                }
            })
            .collect();
        let table2 = idx2
            .dyads()
            .iter()
            .map(|d| {
                let (a, b) = (d.first(), d.second());
                let bk = Vertex::new(k, b.index);
                if a == star2_vertex {
                    outside.iter().map(|&v| idx.column(v, bk)).collect()
                } else {
                    vec![idx.column(Vertex::new(k, a.index), bk)]
                }
            })
            .collect();
        let star1: Vec<usize> = outside.iter().map(|&v| idx1.column(v, star1_vertex)).collect();
        let star2: Vec<usize> = (1..=nk).map(|w| idx2.column(star2_vertex, Vertex::new(2, w))).collect();
        let sources = idx
            .dyads()
            .iter()
            .map(|d| {
                let (a, b) = (d.first(), d.second());
                match (a.block == k, b.block == k) {
                    (false, false) => Source::First(idx1.column(a, b)),
                    (true, true) => Source::Second(idx2.column(Vertex::new(2, a.index), Vertex::new(2, b.index))),
                    (false, true) => Source::Cross {
                        first: idx1.column(a, star1_vertex),
                        second: idx2.column(star2_vertex, Vertex::new(2, b.index)),
                    },
                    (true, false) => unreachable!("dyads are ordered by block"),
                }
            })
            .collect();
        Ok(Self { spec: spec.clone(), m1, m2, table1, table2, star1, star2, sources })
    }

    pub fn spec(&self) -> &BlockSpec {
        &self.spec
    }

    pub fn m1(&self) -> &BlockSpec {
        &self.m1
    }

    pub fn m2(&self) -> &BlockSpec {
        &self.m2
    }

    /// Columns of `M` summed by each dyad of `M1`.
    pub fn table1(&self) -> &[Vec<usize>] {
        &self.table1
    }

    pub fn table2(&self) -> &[Vec<usize>] {
        &self.table2
    }

    pub fn star_columns1(&self) -> &[usize] {
        &self.star1
    }

    pub fn star_columns2(&self) -> &[usize] {
        &self.star2
    }

    fn aggregate<T: Copy + Num>(table: &[Vec<usize>], x: &[T]) -> Vec<T> {
        table.iter().map(|cols| cols.iter().fold(T::zero(), |acc, &c| acc + x[c])).collect()
    }

    /// `phi`: sums block-`k` columns per outside vertex for `M1` and sums all
    /// outside vertices per block-`k` vertex for `M2`.
    pub fn phi<T: Copy + Num>(&self, p: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        if p.len() != self.spec.num_dyads() {
            return Err(Error::DimensionMismatch { expected: self.spec.num_dyads(), got: p.len() });
        }
        Ok((Self::aggregate(&self.table1, p), Self::aggregate(&self.table2, p)))
    }

    pub fn phi_inverse<T: Copy + Num>(&self, p1: &[T], p2: &[T]) -> Result<Vec<T>> {
        if p1.len() != self.m1.num_dyads() {
            return Err(Error::DimensionMismatch { expected: self.m1.num_dyads(), got: p1.len() });
        }
        if p2.len() != self.m2.num_dyads() {
            return Err(Error::DimensionMismatch { expected: self.m2.num_dyads(), got: p2.len() });
        }
        let total = self.star2.iter().fold(T::zero(), |acc, &c| acc + p2[c]);
        if total.is_zero() {
            return Err(Error::NonGeneric("star coordinates of the second contraction sum to zero".into()));
        }
        Ok(self
            .sources
            .iter()
            .map(|s| match *s {
                Source::First(i) => p1[i],
                Source::Second(i) => p2[i],
                Source::Cross { first, second } => p1[first] * p2[second] / total,
            })
            .collect())
    }
}

/// Contracted data `(u1, u2)`; the same aggregation as `phi`.
pub fn contract_data(spec: &BlockSpec, u: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    ContractionPair::new(spec)?.phi(u)
}

pub fn phi<T: Copy + Num>(spec: &BlockSpec, p: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    ContractionPair::new(spec)?.phi(p)
}

pub fn phi_inverse<T: Copy + Num>(spec: &BlockSpec, p1: &[T], p2: &[T]) -> Result<Vec<T>> {
    ContractionPair::new(spec)?.phi_inverse(p1, p2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Verified,
    Failed,
    Inconclusive,
}

/// One data draw: `S`, `S1`, `S2` and the checks relating them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FactorizationTrial {
    pub seed: u64,
    pub size_s: usize,
    pub size_s1: usize,
    pub size_s2: usize,
    pub cardinality_ok: bool,
    /// `[i1, i2]` for each element of `S`: the nearest points of `S1`, `S2`
    /// to its image, or `null` when no unique match lies within tolerance.
    pub matches: Vec<Option<[usize; 2]>>,
    pub injective: bool,
    pub surjective: bool,
    pub max_membership_residual: f64,
    pub max_round_trip_s: f64,
    pub max_round_trip_pairs: f64,
    pub max_summation_error: f64,
    pub failed_paths: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub blocks: Vec<usize>,
    pub m1: Vec<usize>,
    pub m2: Vec<usize>,
    pub trials: Vec<FactorizationTrial>,
    pub verdict: Verdict,
    pub tolerance: f64,
    pub match_tolerance: f64,
}

/// Index of the unique point of `set` within `tol` of `x`.
fn unique_match(set: &[Vec<Complex<f64>>], x: &[Complex<f64>], tol: f64) -> Option<usize> {
    let mut hits = set.iter().enumerate().filter(|(_, q)| relative_distance(q, x) <= tol).map(|(i, _)| i);
    let first = hits.next()?;
    hits.next().is_none().then_some(first)
}

fn concat(a: &[Complex<f64>], b: &[Complex<f64>]) -> Vec<Complex<f64>> {
    a.iter().chain(b).copied().collect()
}

struct Solved {
    system: LikelihoodSystem,
    points: Vec<Vec<Complex<f64>>>,
    failed: usize,
}

fn solve_for(spec: &BlockSpec, u: &[f64], seed: u64, config: &NumericConfig) -> Result<Solved> {
    let seeds = TrialSeeds::derive(seed);
    let system = assemble(spec, u)?;
    let chart = kernel_chart(&system);
    let tracker = config.tracker.reseeded(seeds.gamma);
    let sols = solve_likelihood::<f64>(&system, &chart, seeds.squaring, &tracker, config.residual_tol)?;
    Ok(Solved { system, points: sols.points, failed: sols.failed })
}

fn verify_trial(pair: &ContractionPair, seed: u64, config: &NumericConfig) -> Result<FactorizationTrial> {
    let tol = config.residual_tol;
    let match_tol = config.tracker.dedup_tol;
    let u = sample_generic_u(pair.spec(), TrialSeeds::derive(seed).data).u;
    let (u1, u2) = pair.phi(&u)?;
    let s = solve_for(pair.spec(), &u, seed, config)?;
    let s1 = solve_for(pair.m1(), &u1, seed.wrapping_add(1), config)?;
    let s2 = solve_for(pair.m2(), &u2, seed.wrapping_add(2), config)?;

    let mut membership = 0.0f64;
    let mut round_trip_s = 0.0f64;
    let mut matches = Vec::with_capacity(s.points.len());
    for p in &s.points {
        let (p1, p2) = pair.phi(p)?;
        membership = membership.max(full_residual(&s1.system, &p1)).max(full_residual(&s2.system, &p2));
        let back = pair.phi_inverse(&p1, &p2)?;
        round_trip_s = round_trip_s.max(relative_distance(&back, p));
        let m1 = unique_match(&s1.points, &p1, match_tol);
        let m2 = unique_match(&s2.points, &p2, match_tol);
        matches.push(m1.zip(m2).map(|(a, b)| [a, b]));
    }

    let mut round_trip_pairs = 0.0f64;
    let mut summation = 0.0f64;
    for q1 in &s1.points {
        for q2 in &s2.points {
            let p = pair.phi_inverse(q1, q2)?;
            let (r1, r2) = pair.phi(&p)?;
            round_trip_pairs = round_trip_pairs.max(relative_distance(&concat(&r1, &r2), &concat(q1, q2)));
            let a: Complex<f64> = pair.star_columns2().iter().map(|&c| q2[c]).sum();
            let b: Complex<f64> = pair.star_columns1().iter().map(|&c| q1[c]).sum();
            summation = summation.max((a - b).norm() / a.norm().max(1.0));
        }
    }

    let cardinality_ok = s.points.len() == s1.points.len() * s2.points.len();
    let mut hit = vec![false; s1.points.len() * s2.points.len()];
    let mut injective = matches.iter().all(Option::is_some);
    for [a, b] in matches.iter().flatten() {
        let slot = &mut hit[a * s2.points.len() + b];
        if *slot {
            injective = false;
        }
        *slot = true;
    }
    let surjective = hit.iter().all(|&h| h);
    let passed = cardinality_ok
        && injective
        && surjective
        && membership <= tol
        && round_trip_s <= tol
        && round_trip_pairs <= tol
        && summation <= tol;
    Ok(FactorizationTrial {
        seed,
        size_s: s.points.len(),
        size_s1: s1.points.len(),
        size_s2: s2.points.len(),
        cardinality_ok,
        matches,
        injective,
        surjective,
        max_membership_residual: membership,
        max_round_trip_s: round_trip_s,
        max_round_trip_pairs: round_trip_pairs,
        max_summation_error: summation,
        failed_paths: s.failed + s1.failed + s2.failed,
        passed,
    })
}

/// Solves `M`, `M1`, `M2` on contracted data for each seed and checks that
/// `phi` is a bijection `S -> S1 x S2` with inverse `phi_inverse`.
pub fn verify_factorization(spec: &BlockSpec, seeds: &[u64], config: &NumericConfig) -> Result<FactorizationReport> {
    let pair = ContractionPair::new(spec)?;
    check_gate(spec, config)?;
    let trials = seeds.iter().map(|&s| verify_trial(&pair, s, config)).collect::<Result<Vec<_>>>()?;
    let sizes_stable = trials.windows(2).all(|w| (w[0].size_s, w[0].size_s1, w[0].size_s2) == (w[1].size_s, w[1].size_s1, w[1].size_s2));
    let verdict = if trials.iter().all(|t| t.passed) && sizes_stable {
        Verdict::Verified
    } else if !sizes_stable || trials.iter().any(|t| t.failed_paths > 0) {
        Verdict::Inconclusive
    } else {
        Verdict::Failed
    };
    Ok(FactorizationReport {
        blocks: spec.sizes().to_vec(),
        m1: pair.m1().sizes().to_vec(),
        m2: pair.m2().sizes().to_vec(),
        trials,
        verdict,
        tolerance: config.residual_tol,
        match_tolerance: config.tracker.dedup_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockmodel::Dyad;

    fn spec(s: &[usize]) -> BlockSpec {
        BlockSpec::new(s.to_vec()).unwrap()
    }

    #[test]
    fn contraction_shapes() {
        let pair = ContractionPair::new(&spec(&[3, 2])).unwrap();
        assert_eq!(pair.m1().sizes(), &[3, 1]);
        assert_eq!(pair.m2().sizes(), &[1, 2]);
        assert_eq!(pair.table1().len(), 3 + 3);
        assert_eq!(pair.table2().len(), 2 + 1);
        assert_eq!(pair.star_columns1().len(), 3);
        assert!(matches!(ContractionPair::new(&spec(&[4])), Err(Error::SingleBlock)));
    }

    #[test]
    fn all_ones_contraction() {
        let s = spec(&[3, 2]);
        let (u1, u2) = contract_data(&s, &vec![1.0; s.num_dyads()]).unwrap();
        let pair = ContractionPair::new(&s).unwrap();
        for &c in pair.star_columns1() {
            assert_eq!(u1[c], 2.0);
        }
        for &c in pair.star_columns2() {
            assert_eq!(u2[c], 3.0);
        }
    }

    #[test]
    fn star_entry_is_a_direct_sum() {
        let s = spec(&[2, 2]);
        let u: Vec<f64> = (0..s.num_dyads()).map(|i| 1.0 + i as f64 * 0.37).collect();
        let (u1, _) = contract_data(&s, &u).unwrap();
        let idx = DyadIndex::new(&s);
        let idx1 = DyadIndex::new(&spec(&[2, 1]));
        let star = u1[idx1.position(&Dyad::of((1, 1), (2, 1))).unwrap()];
        let direct = u[idx.position(&Dyad::of((1, 1), (2, 1))).unwrap()] + u[idx.position(&Dyad::of((1, 1), (2, 2))).unwrap()];
        assert_eq!(star, direct);
    }

    #[test]
    fn inverse_of_ones() {
        let s = spec(&[2, 2]);
        let pair = ContractionPair::new(&s).unwrap();
        let p = pair.phi_inverse(&vec![1.0; pair.m1().num_dyads()], &vec![1.0; pair.m2().num_dyads()]).unwrap();
        let idx = DyadIndex::new(&s);
        for (d, x) in idx.dyads().iter().zip(&p) {
            let expect = if d.block_pair() == (1, 2) { 0.5 } else { 1.0 };
            assert_eq!(*x, expect);
        }
    }

    #[test]
    fn zero_denominator_is_non_generic() {
        let pair = ContractionPair::new(&spec(&[2, 2])).unwrap();
        let p2 = vec![0.0; pair.m2().num_dyads()];
        assert!(matches!(pair.phi_inverse(&vec![1.0; pair.m1().num_dyads()], &p2), Err(Error::NonGeneric(_))));
    }

    #[test]
    fn singleton_last_block() {
        let pair = ContractionPair::new(&spec(&[3, 2, 1])).unwrap();
        assert_eq!(pair.m1().sizes(), &[3, 2, 1]);
        assert_eq!(pair.star_columns1().len(), 5);
    }
}
