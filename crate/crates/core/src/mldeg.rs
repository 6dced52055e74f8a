//! Closed-form ML degree and the numeric counting pipeline.

use num_bigint::BigUint;
use num_complex::Complex;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize, Serializer};

use crate::blockmodel::BlockSpec;
use crate::error::{Error, Result};
use crate::homotopy::{dedup, solve, TrackerConfig};
use crate::likelihood::{
    assemble, full_residual, kernel_chart, sample_generic_u, square_up, KernelChart, LikelihoodSystem,
    DEFAULT_RESIDUAL_TOL,
};
use crate::scalar::Real;

/// Largest kernel dimension counted without an explicit override.
pub const DEFAULT_MAX_CODIM: usize = 14;

/// Seeds used when none are given.
pub const DEFAULT_SEEDS: [u64; 3] = [20_240_101, 20_240_102, 20_240_103];

/// Eulerian number `A(n, k)`: permutations of `1..=n` with `k` ascents.
pub fn eulerian(n: usize, k: usize) -> Result<BigUint> {
    if n == 0 || k >= n {
        return Err(Error::EulerianRange { n, k });
    }
    let mut row = vec![BigUint::one()];
    for m in 2..=n {
        let mut next = vec![BigUint::zero(); m];
        for (j, slot) in next.iter_mut().enumerate() {
            if j < m - 1 {
                *slot += &row[j] * BigUint::from(j + 1);
            }
            if j > 0 {
                *slot += &row[j - 1] * BigUint::from(m - j);
            }
        }
        row = next;
    }
    Ok(row.swap_remove(k))
}

fn pow2_minus(n: usize, sub: usize) -> BigUint {
    (BigUint::one() << n) - BigUint::from(sub)
}

pub fn mldeg_formula(spec: &BlockSpec) -> BigUint {
    let sizes = spec.sizes();
    if sizes.len() == 1 {
        let n = sizes[0];
        return if n == 2 { BigUint::one() } else { pow2_minus(n - 1, n) };
    }
    sizes
        .iter()
        .filter(|&&n| n > 2)
        .fold(BigUint::one(), |acc, &n| acc * pow2_minus(n, n + 1))
}

/// Settings for the numeric pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericConfig {
    /// Base tracker settings; `seed` and `gamma` are replaced per trial.
    pub tracker: TrackerConfig,
    pub residual_tol: f64,
    pub max_codim: usize,
    pub allow_large: bool,
}

impl Default for NumericConfig {
    fn default() -> Self {
        Self {
            tracker: TrackerConfig::default(),
            residual_tol: DEFAULT_RESIDUAL_TOL,
            max_codim: DEFAULT_MAX_CODIM,
            allow_large: false,
        }
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Independent seeds for data, squaring and gamma, derived from one trial seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSeeds {
    pub data: u64,
    pub squaring: u64,
    pub gamma: u64,
}

impl TrialSeeds {
    pub fn derive(seed: u64) -> Self {
        Self { data: splitmix(seed), squaring: splitmix(seed ^ 0x5151), gamma: splitmix(seed ^ 0xa3a3) }
    }
}

/// Solutions of the full likelihood system in `p`-space.
#[derive(Clone, Debug)]
pub struct LikelihoodSolutions<T> {
    pub points: Vec<Vec<Complex<T>>>,
    pub multiplicities: Vec<usize>,
    pub residuals: Vec<T>,
    pub paths_tracked: usize,
    pub converged: usize,
    pub diverged: usize,
    pub failed: usize,
    /// Converged endpoints rejected by the full-system residual filter.
    pub filtered_out: usize,
}

/// Squares up, solves, maps endpoints to `p = u + K y`, keeps those with
/// `full_residual <= residual_tol`, then deduplicates in `p`-space.
pub fn solve_likelihood<T: Real>(
    system: &LikelihoodSystem,
    chart: &KernelChart,
    squaring_seed: u64,
    tracker: &TrackerConfig,
    residual_tol: f64,
) -> Result<LikelihoodSolutions<T>> {
    let tol = T::of(residual_tol);
    if chart.dim() == 0 {
        let p: Vec<Complex<T>> = chart.particular().iter().map(|&x| Complex::new(T::of(x), T::zero())).collect();
        let r = full_residual(system, &p);
        let ok = r <= tol;
        return Ok(LikelihoodSolutions {
            points: if ok { vec![p] } else { Vec::new() },
            multiplicities: if ok { vec![1] } else { Vec::new() },
            residuals: if ok { vec![r] } else { Vec::new() },
            paths_tracked: 0,
            converged: 0,
            diverged: 0,
            failed: 0,
            filtered_out: usize::from(!ok),
        });
    }
    let square = square_up::<T>(system, chart, squaring_seed)?;
    let set = solve(&square, tracker);
    let mut kept = Vec::new();
    let mut mults = Vec::new();
    let mut residuals = Vec::new();
    let mut filtered_out = 0;
    for (y, &m) in set.points.iter().zip(&set.multiplicities) {
        let p = chart.point(y);
        let r = full_residual(system, &p);
        if r <= tol {
            kept.push(p);
            mults.push(m);
            residuals.push(r);
        } else {
            filtered_out += 1;
        }
    }
    let clusters = dedup(&kept, T::of(tracker.dedup_tol));
    Ok(LikelihoodSolutions {
        points: clusters.iter().map(|c| kept[c.representative].clone()).collect(),
        multiplicities: clusters.iter().map(|c| c.members.iter().map(|&i| mults[i]).sum()).collect(),
        residuals: clusters.iter().map(|c| residuals[c.representative]).collect(),
        paths_tracked: set.paths_tracked,
        converged: set.converged,
        diverged: set.diverged,
        failed: set.failed,
        filtered_out,
    })
}

/// Checks the size gate and returns the kernel dimension.
pub fn check_gate(spec: &BlockSpec, config: &NumericConfig) -> Result<usize> {
    let system = assemble(spec, &vec![1.0; spec.num_dyads()])?;
    let codim = system.codim();
    if codim > config.max_codim && !config.allow_large {
        return Err(Error::AboveGate {
            codim,
            gate: config.max_codim,
            paths: 1u128.checked_shl(codim as u32).unwrap_or(u128::MAX),
        });
    }
    Ok(codim)
}

/// Everything needed to rerun one trial of the pipeline.
#[derive(Clone, Debug)]
pub struct Trial {
    pub seed: u64,
    pub seeds: TrialSeeds,
    pub system: LikelihoodSystem,
    pub chart: KernelChart,
    pub tracker: TrackerConfig,
    pub solutions: LikelihoodSolutions<f64>,
}

/// Runs the pipeline once: sample `u`, assemble, chart, square up, solve,
/// filter, dedup.
pub fn run_trial(spec: &BlockSpec, seed: u64, config: &NumericConfig) -> Result<Trial> {
    let seeds = TrialSeeds::derive(seed);
    let data = sample_generic_u(spec, seeds.data);
    let system = assemble(spec, &data.u)?;
    run_trial_on(system, seed, config)
}

/// As [`run_trial`] but on an already assembled system.
pub fn run_trial_on(system: LikelihoodSystem, seed: u64, config: &NumericConfig) -> Result<Trial> {
    let seeds = TrialSeeds::derive(seed);
    let chart = kernel_chart(&system);
    let tracker = config.tracker.reseeded(seeds.gamma);
    let solutions = solve_likelihood(&system, &chart, seeds.squaring, &tracker, config.residual_tol)?;
    Ok(Trial { seed, seeds, system, chart, tracker, solutions })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub seed: u64,
    pub count: usize,
    pub paths_tracked: usize,
    pub converged: usize,
    pub diverged: usize,
    pub failed: usize,
    pub filtered_out: usize,
    pub max_residual: f64,
    /// Multiplicities of clusters that merged more than one endpoint.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub multiple_clusters: Vec<usize>,
}

impl TrialReport {
    fn of(trial: &Trial) -> Self {
        let s = &trial.solutions;
        Self {
            seed: trial.seed,
            count: s.points.len(),
            paths_tracked: s.paths_tracked,
            converged: s.converged,
            diverged: s.diverged,
            failed: s.failed,
            filtered_out: s.filtered_out,
            max_residual: s.residuals.iter().fold(0.0, |m: f64, &r| m.max(r)),
            multiple_clusters: s.multiplicities.iter().copied().filter(|&m| m > 1).collect(),
        }
    }
}

fn serialize_big<S: Serializer>(x: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x.to_u64() {
        Some(v) => s.serialize_u64(v),
        None => s.serialize_str(&x.to_string()),
    }
}

/// Formula value next to the numeric count over several seeds.
#[derive(Clone, Debug, Serialize)]
pub struct MLDegreeReport {
    pub blocks: Vec<usize>,
    #[serde(serialize_with = "serialize_big")]
    pub formula: BigUint,
    pub codim: usize,
    /// Present when every trial produced the same count.
    pub numeric_count: Option<usize>,
    pub stable: bool,
    /// `numeric_count == formula`; absent when there is no numeric count.
    pub agreement: Option<bool>,
    pub seeds: Vec<u64>,
    pub paths_tracked: usize,
    pub diverged: usize,
    pub failed: usize,
    pub trials: Vec<TrialReport>,
    /// Set when the size gate skipped the numeric count.
    pub gated: bool,
    pub warnings: Vec<String>,
}

/// Numeric count over `seeds`. Errors above the size gate.
pub fn mldeg_numeric(spec: &BlockSpec, seeds: &[u64], config: &NumericConfig) -> Result<MLDegreeReport> {
    let codim = check_gate(spec, config)?;
    let mut trials = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        trials.push(TrialReport::of(&run_trial(spec, seed, config)?));
    }
    let formula = mldeg_formula(spec);
    let stable = !trials.is_empty() && trials.iter().all(|t| t.count == trials[0].count);
    let numeric_count = stable.then(|| trials[0].count);
    let mut warnings = Vec::new();
    if !stable {
        let counts: Vec<String> = trials.iter().map(|t| t.count.to_string()).collect();
        warnings.push(format!("counts differ across seeds: {}", counts.join(", ")));
    }
    for t in &trials {
        if t.failed > 0 {
            warnings.push(format!("seed {}: {} paths failed", t.seed, t.failed));
        }
        if !t.multiple_clusters.is_empty() {
            warnings.push(format!("seed {}: clusters with multiplicity {:?}", t.seed, t.multiple_clusters));
        }
    }
    Ok(MLDegreeReport {
        blocks: spec.sizes().to_vec(),
        agreement: numeric_count.map(|n| BigUint::from(n) == formula),
        formula,
        codim,
        numeric_count,
        stable,
        seeds: seeds.to_vec(),
        paths_tracked: trials.iter().map(|t| t.paths_tracked).sum(),
        diverged: trials.iter().map(|t| t.diverged).sum(),
        failed: trials.iter().map(|t| t.failed).sum(),
        trials,
        gated: false,
        warnings,
    })
}

/// Formula plus numeric count; above the gate the count is left absent.
pub fn mldeg_report(spec: &BlockSpec, seeds: &[u64], config: &NumericConfig) -> Result<MLDegreeReport> {
    match mldeg_numeric(spec, seeds, config) {
        Err(Error::AboveGate { codim, gate, paths }) => Ok(MLDegreeReport {
            blocks: spec.sizes().to_vec(),
            formula: mldeg_formula(spec),
            codim,
            numeric_count: None,
            stable: false,
            agreement: None,
            seeds: seeds.to_vec(),
            paths_tracked: 0,
            diverged: 0,
            failed: 0,
            trials: Vec::new(),
            gated: true,
            warnings: vec![format!("kernel dimension {codim} exceeds gate {gate} ({paths} paths); numeric count skipped")],
        }),
        other => other,
    }
}
