//! Witness construction and the separability bound.
//!
//! A witness here is the observable
//! `L = scale · Σ_k λ_k N^(1)(α_k) ⊗ ... ⊗ N^(K)(α_k) + shift·1`, where
//! `N^(ℓ)(α) = Σ_{j in block ℓ} q_j n^(j)(α^(j))` is the weighted displaced
//! photon number of one partition block. Over states separable with respect
//! to the partition, `<L>` is bounded below by the minimal separability
//! eigenvalue `g_min`; measuring `<L> < g_min` certifies entanglement.
//!
//! For this operator family the optimal separable state is a product of
//! coherent states, so `g_min` is the global minimum over coherent amplitudes
//! `β` of
//!
//! `g(β) = scale · Σ_k λ_k Π_ℓ [ Σ_{j in block ℓ} q_j |β^(j) − α_k^(j)|² ] + shift`.
//!
//! Each block update of the alternating solver minimizes its convex quadratic
//! factor exactly, so sweeps never increase the objective; a multistart over
//! structured and randomized seeds takes care of the global search. For
//! bipartite `m = 3` witnesses with collinear displacements the stationary
//! amplitudes are also available as the real roots of a degree-5 polynomial,
//! which serves as an exact cross-check of the multistart route.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::states::{self, StateModel};

const LAMBDA_SUM_TOL: f64 = 1e-12;
const DISTINCT_ROW_TOL: f64 = 1e-12;
const SWEEP_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 10_000;
const COLLINEAR_TOL: f64 = 1e-10;
const REAL_ROOT_TOL: f64 = 1e-8;
const CROSS_VALIDATION_TOL: f64 = 1e-9;
const STATIONARY_DEDUP_TOL: f64 = 1e-6;
const MAX_STORED_STATIONARY: usize = 32;
const CROSS_COMBO_CAP: usize = 1024;
const RESIDUAL_TARGET: f64 = 1e-9;

/// Disjoint, covering decomposition of the mode set into K blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSpec {
    n_modes: usize,
    blocks: Vec<Vec<usize>>,
}

impl PartitionSpec {
    /// Blocks hold 0-based mode indices.
    pub fn new(n_modes: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        if n_modes == 0 || blocks.is_empty() {
            return Err(Error::InvalidWitness(
                "partition needs at least one mode and one block".into(),
            ));
        }
        let mut seen = vec![false; n_modes];
        for block in &blocks {
            if block.is_empty() {
                return Err(Error::InvalidWitness("partition block is empty".into()));
            }
            for &j in block {
                if j >= n_modes {
                    return Err(Error::InvalidWitness(format!(
                        "mode index {} out of range for {} modes",
                        j + 1,
                        n_modes
                    )));
                }
                if seen[j] {
                    return Err(Error::InvalidWitness(format!(
                        "mode {} appears in two blocks",
                        j + 1
                    )));
                }
                seen[j] = true;
            }
        }
        if !seen.iter().all(|s| *s) {
            return Err(Error::InvalidWitness(
                "partition blocks do not cover all modes".into(),
            ));
        }
        Ok(Self { n_modes, blocks })
    }

    /// The finest partition: every mode its own block.
    pub fn full(n_modes: usize) -> Result<Self> {
        Self::new(n_modes, (0..n_modes).map(|j| vec![j]).collect())
    }

    /// The trivial one-block partition.
    pub fn trivial(n_modes: usize) -> Result<Self> {
        Self::new(n_modes, vec![(0..n_modes).collect()])
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Mode index -> block index map.
    pub fn block_of(&self) -> Vec<usize> {
        let mut out = vec![0usize; self.n_modes];
        for (l, block) in self.blocks.iter().enumerate() {
            for &j in block {
                out[j] = l;
            }
        }
        out
    }
}

/// Full parameterization of the test operator.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "WitnessSpecRepr", into = "WitnessSpecRepr")]
pub struct WitnessSpec {
    partition: PartitionSpec,
    lambdas: Vec<f64>,
    /// `displacements[k][j]` is the mode-`j` displacement of configuration `k`.
    displacements: Vec<Vec<Complex64>>,
    q_weights: Vec<f64>,
    scale: f64,
    shift: f64,
}

/// JSON shape: 1-based partition indices, optional `q_weights`, `scale`
/// defaulting to 1 and `shift` to 0.
#[derive(Serialize, Deserialize, Clone)]
struct WitnessSpecRepr {
    modes: usize,
    partition: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q_weights: Option<Vec<f64>>,
    lambda: Vec<f64>,
    #[serde(with = "crate::serde_complex::mat")]
    displacements: Vec<Vec<Complex64>>,
    #[serde(default = "default_scale")]
    scale: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    shift: f64,
}

fn default_scale() -> f64 {
    1.0
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl TryFrom<WitnessSpecRepr> for WitnessSpec {
    type Error = Error;

    fn try_from(repr: WitnessSpecRepr) -> Result<Self> {
        let blocks: Vec<Vec<usize>> = repr
            .partition
            .iter()
            .map(|b| {
                b.iter()
                    .map(|&j| {
                        if j == 0 {
                            Err(Error::InvalidWitness(
                                "partition indices are 1-based".into(),
                            ))
                        } else {
                            Ok(j - 1)
                        }
                    })
                    .collect::<Result<Vec<usize>>>()
            })
            .collect::<Result<_>>()?;
        let partition = PartitionSpec::new(repr.modes, blocks)?;
        WitnessSpec::with_scale_shift(
            partition,
            repr.lambda,
            repr.displacements,
            repr.q_weights,
            repr.scale,
            repr.shift,
        )
    }
}

impl From<WitnessSpec> for WitnessSpecRepr {
    fn from(w: WitnessSpec) -> Self {
        WitnessSpecRepr {
            modes: w.partition.n_modes(),
            partition: w
                .partition
                .blocks()
                .iter()
                .map(|b| b.iter().map(|j| j + 1).collect())
                .collect(),
            q_weights: Some(w.q_weights.clone()),
            lambda: w.lambdas.clone(),
            displacements: w.displacements.clone(),
            scale: w.scale,
            shift: w.shift,
        }
    }
}

impl WitnessSpec {
    /// `q_weights = None` applies the default `1/|block|` weighting.
    pub fn new(
        partition: PartitionSpec,
        lambdas: Vec<f64>,
        displacements: Vec<Vec<Complex64>>,
        q_weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        Self::with_scale_shift(partition, lambdas, displacements, q_weights, 1.0, 0.0)
    }

    pub fn with_scale_shift(
        partition: PartitionSpec,
        lambdas: Vec<f64>,
        displacements: Vec<Vec<Complex64>>,
        q_weights: Option<Vec<f64>>,
        scale: f64,
        shift: f64,
    ) -> Result<Self> {
        if scale <= 0.0 {
            return Err(Error::NonpositiveScale);
        }
        let m = lambdas.len();
        if m == 0 {
            return Err(Error::InvalidWitness("witness needs m >= 1".into()));
        }
        if lambdas.iter().any(|l| *l <= 0.0) {
            return Err(Error::InvalidWitness("weights must be positive".into()));
        }
        let sum: f64 = lambdas.iter().sum();
        if (sum - 1.0).abs() > LAMBDA_SUM_TOL {
            return Err(Error::InvalidWitness(format!(
                "weights must sum to 1 (got {sum:.15})"
            )));
        }
        if displacements.len() != m {
            return Err(Error::InvalidWitness(format!(
                "{} displacement rows for {} weights",
                displacements.len(),
                m
            )));
        }
        let n = partition.n_modes();
        for row in &displacements {
            if row.len() != n {
                return Err(Error::InvalidWitness(format!(
                    "displacement row has {} entries, expected {}",
                    row.len(),
                    n
                )));
            }
        }
        for i in 0..m {
            for k in (i + 1)..m {
                let dist = row_distance(&displacements[i], &displacements[k]);
                if dist <= DISTINCT_ROW_TOL {
                    return Err(Error::InvalidWitness(format!(
                        "displacement rows {} and {} coincide",
                        i + 1,
                        k + 1
                    )));
                }
            }
        }
        let q_weights = match q_weights {
            Some(q) => {
                if q.len() != n {
                    return Err(Error::InvalidWitness(format!(
                        "{} q-weights for {} modes",
                        q.len(),
                        n
                    )));
                }
                if q.iter().any(|x| *x < 0.0) {
                    return Err(Error::InvalidWitness(
                        "q-weights must be nonnegative".into(),
                    ));
                }
                q
            }
            None => {
                let mut q = vec![0.0; n];
                for block in partition.blocks() {
                    let w = 1.0 / block.len() as f64;
                    for &j in block {
                        q[j] = w;
                    }
                }
                q
            }
        };
        Ok(Self {
            partition,
            lambdas,
            displacements,
            q_weights,
            scale,
            shift,
        })
    }

    /// Bipartite two-mode witness with rows `(α_k, β_k)`.
    pub fn bipartite(alphas: &[Complex64], betas: &[Complex64], lambdas: Vec<f64>) -> Result<Self> {
        if alphas.len() != betas.len() {
            return Err(Error::InvalidWitness(
                "alpha and beta lists differ in length".into(),
            ));
        }
        let rows = alphas
            .iter()
            .zip(betas)
            .map(|(a, b)| vec![*a, *b])
            .collect();
        Self::new(PartitionSpec::full(2)?, lambdas, rows, None)
    }

    pub fn n_modes(&self) -> usize {
        self.partition.n_modes()
    }

    pub fn m(&self) -> usize {
        self.lambdas.len()
    }

    pub fn partition(&self) -> &PartitionSpec {
        &self.partition
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn row(&self, k: usize) -> &[Complex64] {
        &self.displacements[k]
    }

    pub fn rows(&self) -> &[Vec<Complex64>] {
        &self.displacements
    }

    pub fn q_weights(&self) -> &[f64] {
        &self.q_weights
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn max_displacement(&self) -> f64 {
        self.displacements
            .iter()
            .flat_map(|row| row.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Operator transform `μ·L + ν·1`; the separability bound follows as
    /// `μ·g_min + ν` with unchanged minimizing amplitudes.
    pub fn affine_rescaled(&self, mu: f64, nu: f64) -> Result<Self> {
        if mu <= 0.0 {
            return Err(Error::NonpositiveScale);
        }
        let mut out = self.clone();
        out.scale *= mu;
        out.shift = mu * out.shift + nu;
        Ok(out)
    }

    /// Shifts every displacement row by a fixed per-mode offset. Leaves the
    /// separability bound unchanged and moves the minimizer by the offset.
    pub fn translated(&self, offsets: &[Complex64]) -> Result<Self> {
        if offsets.len() != self.n_modes() {
            return Err(Error::ModelMismatch {
                expected: self.n_modes(),
                actual: offsets.len(),
            });
        }
        let mut out = self.clone();
        for row in &mut out.displacements {
            for (z, off) in row.iter_mut().zip(offsets) {
                *z += off;
            }
        }
        Ok(out)
    }
}

fn row_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Mean amplitude and variance offset of a convex combination of single-mode
/// displaced number operators: `Σ λ_k n(α_k) = n(Σ λ_k α_k) + offset·1`.
pub fn collapse_single_mode(lambdas: &[f64], alphas: &[Complex64]) -> Result<(Complex64, f64)> {
    if lambdas.len() != alphas.len() || lambdas.is_empty() {
        return Err(Error::InvalidWitness(
            "weights and amplitudes must pair up".into(),
        ));
    }
    let sum: f64 = lambdas.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidWitness("weights must sum to 1".into()));
    }
    let mean: Complex64 = lambdas
        .iter()
        .zip(alphas)
        .map(|(l, a)| a * Complex64::new(*l, 0.0))
        .sum();
    let offset: f64 = lambdas
        .iter()
        .zip(alphas)
        .map(|(l, a)| l * (a - mean).norm_sqr())
        .sum();
    Ok((mean, offset))
}

/// `m x K` table of block sums `T_kℓ = Σ_{j in block ℓ} q_j |β_j − α_k^(j)|²`.
fn block_sums(witness: &WitnessSpec, amps: &[Complex64]) -> Vec<Vec<f64>> {
    let blocks = witness.partition().blocks();
    (0..witness.m())
        .map(|k| {
            let row = witness.row(k);
            blocks
                .iter()
                .map(|block| {
                    block
                        .iter()
                        .map(|&j| witness.q_weights()[j] * (amps[j] - row[j]).norm_sqr())
                        .sum()
                })
                .collect()
        })
        .collect()
}

fn raw_objective_from_sums(witness: &WitnessSpec, t: &[Vec<f64>]) -> f64 {
    witness
        .lambdas()
        .iter()
        .enumerate()
        .map(|(k, l)| l * t[k].iter().product::<f64>())
        .sum()
}

fn raw_objective(witness: &WitnessSpec, amps: &[Complex64]) -> f64 {
    raw_objective_from_sums(witness, &block_sums(witness, amps))
}

/// The separability objective `g(β)`, including the witness scale and shift.
pub fn sev_objective(witness: &WitnessSpec, amplitudes: &[Complex64]) -> f64 {
    witness.scale() * raw_objective(witness, amplitudes) + witness.shift()
}

/// One exact block minimization: modes of `block` move to the weighted mean
/// of the displacement rows, weighted by `λ_k` times the other block factors.
///
/// Fails with [`Error::DegenerateWeights`] when every weight vanishes, which
/// only happens at exact zeros of the objective; callers keep the current
/// block in that case.
pub fn alternating_update(
    witness: &WitnessSpec,
    amplitudes: &[Complex64],
    block: usize,
) -> Result<Vec<Complex64>> {
    let t = block_sums(witness, amplitudes);
    let mut out = amplitudes.to_vec();
    update_block_in_place(witness, &mut out, &t, block)?;
    Ok(out)
}

fn update_block_in_place(
    witness: &WitnessSpec,
    amps: &mut [Complex64],
    t: &[Vec<f64>],
    block: usize,
) -> Result<()> {
    let k_blocks = witness.partition().k();
    let weights: Vec<f64> = (0..witness.m())
        .map(|k| {
            let mut w = witness.lambdas()[k];
            for l in 0..k_blocks {
                if l != block {
                    w *= t[k][l];
                }
            }
            w
        })
        .collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateWeights);
    }
    for &j in &witness.partition().blocks()[block] {
        if witness.q_weights()[j] == 0.0 {
            // a zero-weight mode never enters the objective; leave it alone
            continue;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, w) in weights.iter().enumerate() {
            acc += witness.row(k)[j] * Complex64::new(*w, 0.0);
        }
        amps[j] = acc / Complex64::new(total, 0.0);
    }
    Ok(())
}

/// Max norm of the stationarity expressions at `amps` (unscaled operator).
fn stationarity_residual(witness: &WitnessSpec, amps: &[Complex64]) -> f64 {
    let t = block_sums(witness, amps);
    let block_of = witness.partition().block_of();
    let k_blocks = witness.partition().k();
    let mut worst = 0.0f64;
    for j in 0..witness.n_modes() {
        let home = block_of[j];
        let mut grad = Complex64::new(0.0, 0.0);
        for k in 0..witness.m() {
            let mut w = witness.lambdas()[k];
            for l in 0..k_blocks {
                if l != home {
                    w *= t[k][l];
                }
            }
            grad += (amps[j] - witness.row(k)[j]) * Complex64::new(w, 0.0);
        }
        worst = worst.max((grad * Complex64::new(witness.q_weights()[j], 0.0)).norm());
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SevMethod {
    MultistartAlternating,
    CollinearQuintic,
}

/// A stationary point of the separability objective.
#[derive(Debug, Clone, Serialize)]
pub struct StationaryPoint {
    #[serde(with = "crate::serde_complex::vec")]
    pub amplitudes: Vec<Complex64>,
    pub value: f64,
}

/// Minimal separability eigenvalue with diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct SevSolution {
    pub g_min: f64,
    #[serde(with = "crate::serde_complex::vec")]
    pub argmin: Vec<Complex64>,
    pub stationary_points: Vec<StationaryPoint>,
    pub residual: f64,
    pub starts_used: usize,
    pub method: SevMethod,
}

impl SevSolution {
    /// Bound transform under `μ·L + ν·1`; the minimizer is unchanged.
    pub fn affine_rescaled(&self, mu: f64, nu: f64) -> Result<SevSolution> {
        if mu <= 0.0 {
            return Err(Error::NonpositiveScale);
        }
        let mut out = self.clone();
        out.g_min = mu * out.g_min + nu;
        for p in &mut out.stationary_points {
            p.value = mu * p.value + nu;
        }
        Ok(out)
    }
}

/// Solver knobs. The defaults match the documented policy: 64 starts seeded
/// at the displacement rows, their per-block cross combinations, the weighted
/// means, and random perturbations.
#[derive(Debug, Clone, Copy)]
pub struct SevOptions {
    pub n_starts: usize,
    pub seed: u64,
    pub max_sweeps: usize,
    pub tol: f64,
}

impl Default for SevOptions {
    fn default() -> Self {
        Self {
            n_starts: 64,
            seed: 0,
            max_sweeps: MAX_SWEEPS,
            tol: SWEEP_TOL,
        }
    }
}

/// Global minimization of the separability objective by cyclic exact block
/// updates from many starts.
pub fn solve_sev_multistart(
    witness: &WitnessSpec,
    n_starts: usize,
    seed: u64,
) -> Result<SevSolution> {
    solve_sev_with(
        witness,
        &SevOptions {
            n_starts,
            seed,
            ..SevOptions::default()
        },
    )
}

pub fn solve_sev_with(witness: &WitnessSpec, opts: &SevOptions) -> Result<SevSolution> {
    let starts = seed_points(witness, opts);
    let runs: Vec<Result<Descent>> = starts
        .par_iter()
        .map(|start| descend(witness, start.clone(), opts))
        .collect();

    let mut best: Option<Descent> = None;
    let mut stationary: Vec<StationaryPoint> = Vec::new();
    for run in runs {
        let descent = run?;
        // near-degenerate minima make some starts crawl; their endpoints are
        // upper-bound candidates but not stationary points
        if descent.converged {
            record_stationary(&mut stationary, &descent.amps, descent.value);
        }
        let better = match &best {
            None => true,
            Some(b) => descent.value < b.value,
        };
        if better {
            best = Some(descent);
        }
    }
    let best = best.expect("at least one start");
    let mut argmin = best.amps;
    let mut raw_min = best.value;
    // the objective criterion can fire while the gradient is still larger
    // than the residual budget; extra sweeps on the winner fix that
    let mut residual = stationarity_residual(witness, &argmin);
    let mut polish = 0;
    while residual > 0.5 * RESIDUAL_TARGET && polish < 2000 {
        cyclic_sweep(witness, &mut argmin)?;
        residual = stationarity_residual(witness, &argmin);
        polish += 1;
    }
    raw_min = raw_min.min(raw_objective(witness, &argmin));
    if residual > RESIDUAL_TARGET {
        // the winner cannot be certified stationary
        return Err(Error::NotConverged {
            sweeps: opts.max_sweeps,
        });
    }

    stationary.sort_by(|a, b| a.value.partial_cmp(&b.value).unwrap());
    stationary.truncate(MAX_STORED_STATIONARY);
    for p in &mut stationary {
        p.value = witness.scale() * p.value + witness.shift();
    }
    Ok(SevSolution {
        g_min: witness.scale() * raw_min + witness.shift(),
        residual,
        argmin,
        stationary_points: stationary,
        starts_used: starts.len(),
        method: SevMethod::MultistartAlternating,
    })
}

fn record_stationary(list: &mut Vec<StationaryPoint>, amps: &[Complex64], value: f64) {
    let known = list
        .iter()
        .any(|p| row_distance(&p.amplitudes, amps) < STATIONARY_DEDUP_TOL);
    if !known {
        list.push(StationaryPoint {
            amplitudes: amps.to_vec(),
            value,
        });
    }
}

fn seed_points(witness: &WitnessSpec, opts: &SevOptions) -> Vec<Vec<Complex64>> {
    let m = witness.m();
    let n = witness.n_modes();
    let blocks = witness.partition().blocks();
    let k_blocks = blocks.len();
    let mut seeds: Vec<Vec<Complex64>> = Vec::new();

    for k in 0..m {
        seeds.push(witness.row(k).to_vec());
    }
    // per-mode weighted mean
    let mean: Vec<Complex64> = (0..n)
        .map(|j| {
            witness
                .lambdas()
                .iter()
                .enumerate()
                .map(|(k, l)| witness.row(k)[j] * Complex64::new(*l, 0.0))
                .sum()
        })
        .collect();
    seeds.push(mean);
    // all block-wise row assignments; these include every exact zero of the
    // objective whenever m <= K
    if (m as f64).powi(k_blocks as i32) <= CROSS_COMBO_CAP as f64 {
        let mut choice = vec![0usize; k_blocks];
        loop {
            let mut amps = vec![Complex64::new(0.0, 0.0); n];
            for (l, block) in blocks.iter().enumerate() {
                for &j in block {
                    amps[j] = witness.row(choice[l])[j];
                }
            }
            seeds.push(amps);
            let mut l = k_blocks;
            let mut done = true;
            while l > 0 {
                l -= 1;
                choice[l] += 1;
                if choice[l] < m {
                    done = false;
                    break;
                }
                choice[l] = 0;
            }
            if done {
                break;
            }
        }
    }
    let deterministic = seeds.len();
    let random = opts.n_starts.saturating_sub(deterministic).max(4);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..random {
        let k = rng.gen_range(0..m);
        let mut amps = witness.row(k).to_vec();
        for z in amps.iter_mut() {
            let dre: f64 = rng.sample(StandardNormal);
            let dim: f64 = rng.sample(StandardNormal);
            *z += Complex64::new(0.5 * dre, 0.5 * dim);
        }
        seeds.push(amps);
    }
    seeds
}

/// One full cycle of exact block updates, refreshing the sums per block.
/// Degenerate weights keep the block (the objective is already at zero).
fn cyclic_sweep(witness: &WitnessSpec, amps: &mut [Complex64]) -> Result<f64> {
    let mut t = block_sums(witness, amps);
    for block in 0..witness.partition().k() {
        match update_block_in_place(witness, amps, &t, block) {
            Ok(()) => {
                for k in 0..witness.m() {
                    t[k][block] = witness.partition().blocks()[block]
                        .iter()
                        .map(|&j| witness.q_weights()[j] * (amps[j] - witness.row(k)[j]).norm_sqr())
                        .sum();
                }
            }
            Err(Error::DegenerateWeights) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(raw_objective_from_sums(witness, &t))
}

struct Descent {
    amps: Vec<Complex64>,
    value: f64,
    converged: bool,
}

fn descend(witness: &WitnessSpec, mut amps: Vec<Complex64>, opts: &SevOptions) -> Result<Descent> {
    let mut prev = raw_objective(witness, &amps);
    // exact minimization per block is monotone in exact arithmetic, but a
    // sweep can end an ulp above the seed at exact zeros; keep the best point
    let mut best_amps = amps.clone();
    let mut best_value = prev;
    for _ in 0..opts.max_sweeps {
        let cur = cyclic_sweep(witness, &mut amps)?;
        if cur < best_value {
            best_value = cur;
            best_amps.clone_from(&amps);
        }
        if (prev - cur).abs() < opts.tol {
            return Ok(Descent {
                amps: best_amps,
                value: best_value,
                converged: true,
            });
        }
        prev = cur;
    }
    // budget exhausted: the objective still upper-bounds the minimum, so
    // keep the endpoint as a candidate without certifying it
    Ok(Descent {
        amps: best_amps,
        value: best_value,
        converged: false,
    })
}

/// Exact bipartite `m = 3` path for collinear displacements
/// `α_k = a_k e^{iφ}`, `β_k = b_k e^{iθ}` with real `a_k`, `b_k`.
///
/// Stationary `b` values are the real roots of a quintic whose coefficients
/// are formed from the moments `R_{ℓj} = Σ_k λ_k (a_k − a_j) b_k^ℓ`; each root
/// determines `a` through the fixed-point formula. The result is
/// cross-validated against the multistart solver to 1e-9.
pub fn solve_sev_collinear_m3(witness: &WitnessSpec, phi: f64, theta: f64) -> Result<SevSolution> {
    if witness.n_modes() != 2 || witness.partition().k() != 2 || witness.m() != 3 {
        return Err(Error::InvalidWitness(
            "collinear path expects a bipartite two-mode witness with m = 3".into(),
        ));
    }
    let rot_a = Complex64::from_polar(1.0, -phi);
    let rot_b = Complex64::from_polar(1.0, -theta);
    let mut a = [0.0f64; 3];
    let mut b = [0.0f64; 3];
    for k in 0..3 {
        let za = witness.row(k)[0] * rot_a;
        let zb = witness.row(k)[1] * rot_b;
        if za.im.abs() > COLLINEAR_TOL * (1.0 + za.re.abs())
            || zb.im.abs() > COLLINEAR_TOL * (1.0 + zb.re.abs())
        {
            return Err(Error::NotCollinear);
        }
        a[k] = za.re;
        b[k] = zb.re;
    }
    let lam = witness.lambdas();

    // moments R_{ℓj}
    let mut r = [[0.0f64; 3]; 3];
    for l in 0..3 {
        for j in 0..3 {
            r[l][j] = (0..3)
                .map(|k| lam[k] * (a[k] - a[j]) * b[k].powi(l as i32))
                .sum();
        }
    }
    let sum3 = |f: &dyn Fn(usize) -> f64| (0..3).map(f).sum::<f64>();
    let coeffs = [
        -sum3(&|k| lam[k] * r[2][k] * r[2][k] * b[k]),
        sum3(&|k| lam[k] * r[2][k] * (r[2][k] + 4.0 * r[1][k] * b[k])),
        -2.0 * sum3(&|k| {
            lam[k]
                * ((2.0 * r[1][k] * r[1][k] + r[2][k] * r[0][k]) * b[k] + 2.0 * r[1][k] * r[2][k])
        }),
        2.0 * sum3(&|k| {
            lam[k] * (2.0 * r[1][k] * r[1][k] + r[2][k] * r[0][k] + 2.0 * r[1][k] * r[0][k] * b[k])
        }),
        -sum3(&|k| lam[k] * r[0][k] * (r[0][k] * b[k] + 4.0 * r[1][k])),
        sum3(&|k| lam[k] * r[0][k] * r[0][k]),
    ];

    let roots = real_polynomial_roots(&coeffs)?;
    if roots.is_empty() {
        return Err(Error::NoRealRoot);
    }

    let phase_a = Complex64::from_polar(1.0, phi);
    let phase_b = Complex64::from_polar(1.0, theta);
    let mut stationary: Vec<StationaryPoint> = Vec::new();
    let mut best: Option<(Vec<Complex64>, f64)> = None;
    for root in roots {
        let den: f64 = (0..3).map(|k| lam[k] * (root - b[k]).powi(2)).sum();
        if den <= f64::EPSILON {
            continue;
        }
        let a_val: f64 = (0..3)
            .map(|k| lam[k] * (root - b[k]).powi(2) * a[k])
            .sum::<f64>()
            / den;
        let amps = vec![phase_a * a_val, phase_b * root];
        let value = raw_objective(witness, &amps);
        record_stationary(&mut stationary, &amps, value);
        let better = best.as_ref().map(|(_, bv)| value < *bv).unwrap_or(true);
        if better {
            best = Some((amps, value));
        }
    }
    let (argmin, raw_min) = best.ok_or(Error::NoRealRoot)?;

    let multistart = solve_sev_with(witness, &SevOptions::default())?;
    let g_min = witness.scale() * raw_min + witness.shift();
    if (g_min - multistart.g_min).abs() > CROSS_VALIDATION_TOL * (1.0 + g_min.abs()) {
        return Err(Error::NotConverged { sweeps: 0 });
    }

    stationary.sort_by(|x, y| x.value.partial_cmp(&y.value).unwrap());
    for p in &mut stationary {
        p.value = witness.scale() * p.value + witness.shift();
    }
    Ok(SevSolution {
        g_min,
        residual: stationarity_residual(witness, &argmin),
        argmin,
        stationary_points: stationary,
        starts_used: multistart.starts_used,
        method: SevMethod::CollinearQuintic,
    })
}

/// Real roots of `Σ c_k x^k` via companion-matrix eigenvalues; roots with
/// |Im| below 1e-8 are accepted as real.
fn real_polynomial_roots(coeffs: &[f64]) -> Result<Vec<f64>> {
    let maxc = coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max);
    if maxc == 0.0 {
        // identically zero polynomial: every point is stationary; degenerate
        return Ok(vec![0.0]);
    }
    let mut degree = coeffs.len() - 1;
    while degree > 0 && coeffs[degree].abs() <= 1e-13 * maxc {
        degree -= 1;
    }
    if degree == 0 {
        return Err(Error::NoRealRoot);
    }
    let lead = coeffs[degree];
    let mut companion = nalgebra::DMatrix::<f64>::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..degree {
        companion[(i, degree - 1)] = -coeffs[i] / lead;
    }
    let eigs = companion.complex_eigenvalues();
    let scale = 1.0 + eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(eigs
        .iter()
        .filter(|z| z.im.abs() < REAL_ROOT_TOL * scale)
        .map(|z| z.re)
        .collect())
}

/// Constant-efficiency loss transform: displacements stretch to
/// `α_k^(j)/√η_j` and the detector weights absorb `η_j`. The separability
/// bound of the transformed operator equals the original one.
pub fn apply_loss(witness: &WitnessSpec, etas: &[f64]) -> Result<WitnessSpec> {
    if etas.len() != witness.n_modes() {
        return Err(Error::ModelMismatch {
            expected: witness.n_modes(),
            actual: etas.len(),
        });
    }
    for eta in etas {
        if *eta <= 0.0 {
            return Err(Error::ZeroEfficiency);
        }
        if *eta > 1.0 {
            return Err(Error::InvalidWitness(
                "efficiencies must lie in (0, 1]".into(),
            ));
        }
    }
    let displacements = witness
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .zip(etas)
                .map(|(z, eta)| z / Complex64::new(eta.sqrt(), 0.0))
                .collect()
        })
        .collect();
    let q_weights = witness
        .q_weights()
        .iter()
        .zip(etas)
        .map(|(q, eta)| q * eta)
        .collect();
    WitnessSpec::with_scale_shift(
        witness.partition().clone(),
        witness.lambdas().to_vec(),
        displacements,
        Some(q_weights),
        witness.scale(),
        witness.shift(),
    )
}

/// Verdict of an entanglement test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub expectation: f64,
    pub g_min: f64,
    /// `<L> − g_min`; negative certifies entanglement.
    pub witness_value: f64,
    pub entangled: bool,
    /// `g_min/<L> − 1` when `<L> > 0`; the relative detection margin.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin_relative: Option<f64>,
}

/// Full entanglement test: expectation value, separability bound, verdict.
pub fn evaluate(witness: &WitnessSpec, state: &StateModel) -> Result<EvaluationReport> {
    evaluate_with(witness, state, &SevOptions::default())
}

pub fn evaluate_with(
    witness: &WitnessSpec,
    state: &StateModel,
    opts: &SevOptions,
) -> Result<EvaluationReport> {
    let expectation = states::expectation_l(state, witness)?;
    let solution = solve_sev_with(witness, opts)?;
    Ok(report_from(expectation, &solution))
}

pub fn report_from(expectation: f64, solution: &SevSolution) -> EvaluationReport {
    let witness_value = expectation - solution.g_min;
    EvaluationReport {
        expectation,
        g_min: solution.g_min,
        witness_value,
        entangled: witness_value < 0.0,
        margin_relative: (expectation > 0.0).then(|| solution.g_min / expectation - 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{self, FockCutoff};
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn simple_bipartite(alphas: &[Complex64], betas: &[Complex64]) -> WitnessSpec {
        let m = alphas.len();
        WitnessSpec::bipartite(alphas, betas, vec![1.0 / m as f64; m]).unwrap()
    }

    #[test]
    fn collapse_examples() {
        let (mean, off) = collapse_single_mode(&[1.0], &[c(2.0, 0.0)]).unwrap();
        assert_eq!(mean, c(2.0, 0.0));
        assert_eq!(off, 0.0);
        let (mean, off) = collapse_single_mode(&[0.5, 0.5], &[c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        assert_relative_eq!(mean.norm(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(off, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn collapse_operator_identity_in_fock_space() {
        // random 5-term instance, checked entrywise against matrices
        let lambdas = [0.1, 0.25, 0.3, 0.2, 0.15];
        let alphas = [
            c(0.3, -0.4),
            c(-1.1, 0.2),
            c(0.7, 0.9),
            c(0.0, -0.6),
            c(1.4, 0.1),
        ];
        let (mean, offset) = collapse_single_mode(&lambdas, &alphas).unwrap();
        let cutoff = FockCutoff::new(12).unwrap();
        let dim = cutoff.dim();
        let mut lhs = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
        for (l, a) in lambdas.iter().zip(&alphas) {
            lhs += fock::displaced_number_matrix(*a, cutoff).data * c(*l, 0.0);
        }
        let rhs = fock::displaced_number_matrix(mean, cutoff).data
            + nalgebra::DMatrix::identity(dim, dim) * c(offset, 0.0);
        let diff = (&lhs - &rhs).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12, "operator identity violated by {diff}");
    }

    #[test]
    fn objective_special_values() {
        let alphas = [c(0.5, 0.0), c(-0.5, 0.3), c(0.1, -0.8)];
        let betas = [c(-0.2, 0.1), c(0.6, 0.0), c(0.3, 0.4)];
        let w = simple_bipartite(&alphas, &betas);
        // cross configuration of rows 0 and 1 annihilates every term it touches
        let cross = vec![alphas[0], betas[1]];
        let m2 = simple_bipartite(&alphas[..2], &betas[..2]);
        assert_eq!(sev_objective(&m2, &cross), 0.0);
        // sitting on row 0 leaves only the k >= 1 terms
        let at_row = vec![alphas[0], betas[0]];
        let expect: f64 = (1..3)
            .map(|k| {
                (1.0 / 3.0) * (alphas[0] - alphas[k]).norm_sqr() * (betas[0] - betas[k]).norm_sqr()
            })
            .sum();
        assert_relative_eq!(sev_objective(&w, &at_row), expect, epsilon = 1e-12);
    }

    #[test]
    fn update_is_exact_block_minimization() {
        let alphas = [c(1.0, 0.2), c(-0.7, -0.1), c(0.3, 0.9)];
        let betas = [c(0.4, -0.5), c(0.9, 0.3), c(-1.2, 0.0)];
        let w = simple_bipartite(&alphas, &betas);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let amps: Vec<Complex64> = (0..2)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    c(1.5 * re, 1.5 * im)
                })
                .collect();
            let before = sev_objective(&w, &amps);
            let block = rng.gen_range(0..2);
            let after = sev_objective(&w, &alternating_update(&w, &amps, block).unwrap());
            assert!(
                after <= before + 1e-12,
                "block update increased the objective: {before} -> {after}"
            );
        }
    }

    #[test]
    fn m1_witness_collapses_immediately() {
        let w = simple_bipartite(&[c(0.4, 0.1)], &[c(-0.3, 0.7)]);
        let updated = alternating_update(&w, &[c(5.0, 5.0), c(-5.0, 5.0)], 0).unwrap();
        assert_eq!(updated[0], c(0.4, 0.1));
        let sol = solve_sev_multistart(&w, 8, 1).unwrap();
        assert_eq!(sol.g_min, 0.0);
    }

    #[test]
    fn bipartite_m2_has_zero_bound() {
        let w = simple_bipartite(&[c(0.9, 0.0), c(-0.4, 0.3)], &[c(0.2, -0.6), c(1.1, 0.0)]);
        let sol = solve_sev_multistart(&w, 16, 7).unwrap();
        assert!(
            sol.g_min.abs() <= 1e-12,
            "m=2 bound must vanish: {}",
            sol.g_min
        );
        assert!(sol.residual <= 1e-9);
    }

    #[test]
    fn solution_invariants_hold() {
        let alphas = [c(1.0, 0.5), c(-0.8, 0.1), c(0.2, -1.1)];
        let betas = [c(0.5, -0.2), c(0.9, 0.8), c(-0.6, 0.3)];
        let w = simple_bipartite(&alphas, &betas);
        let sol = solve_sev_multistart(&w, 64, 3).unwrap();
        assert!(sol.g_min >= 0.0);
        assert!(sol.residual < 1e-9, "residual {}", sol.residual);
        assert_relative_eq!(sev_objective(&w, &sol.argmin), sol.g_min, epsilon = 1e-12);
        assert!(sol.starts_used >= 64);
        assert_eq!(sol.method, SevMethod::MultistartAlternating);
    }

    #[test]
    fn quintic_symmetric_configuration() {
        let pts = [c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        let w = simple_bipartite(&pts, &pts);
        let sol = solve_sev_collinear_m3(&w, 0.0, 0.0).unwrap();
        assert_eq!(sol.method, SevMethod::CollinearQuintic);
        // the symmetric stationary set contains the origin
        let has_zero = sol
            .stationary_points
            .iter()
            .any(|p| p.amplitudes[1].norm() < 1e-9);
        assert!(has_zero, "expected a stationary point at b = 0");
        let ms = solve_sev_multistart(&w, 64, 5).unwrap();
        assert_relative_eq!(sol.g_min, ms.g_min, epsilon = 1e-9);
    }

    #[test]
    fn quintic_rejects_non_collinear() {
        let alphas = [c(1.0, 0.4), c(-0.5, 0.0), c(0.2, 0.0)];
        let betas = [c(0.3, 0.0), c(0.8, 0.0), c(-0.9, 0.0)];
        let w = simple_bipartite(&alphas, &betas);
        assert!(matches!(
            solve_sev_collinear_m3(&w, 0.0, 0.0),
            Err(Error::NotCollinear)
        ));
    }

    #[test]
    fn merged_rows_are_rejected_at_construction() {
        let err = WitnessSpec::bipartite(
            &[c(0.5, 0.0), c(0.5, 0.0)],
            &[c(-0.5, 0.0), c(-0.5, 0.0)],
            vec![0.5, 0.5],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidWitness(_)));
    }

    #[test]
    fn loss_identity_and_invariance() {
        let alphas = [c(1.0, 0.5), c(-0.8, 0.1), c(0.2, -1.1)];
        let betas = [c(0.5, -0.2), c(0.9, 0.8), c(-0.6, 0.3)];
        let w = simple_bipartite(&alphas, &betas);
        let same = apply_loss(&w, &[1.0, 1.0]).unwrap();
        assert_eq!(same.rows(), w.rows());
        assert_eq!(same.q_weights(), w.q_weights());

        let lossy = apply_loss(&w, &[0.37, 0.82]).unwrap();
        let g0 = solve_sev_multistart(&w, 64, 2).unwrap().g_min;
        let g1 = solve_sev_multistart(&lossy, 64, 2).unwrap().g_min;
        assert_relative_eq!(g0, g1, epsilon = 1e-9);

        assert!(matches!(
            apply_loss(&w, &[0.0, 0.5]),
            Err(Error::ZeroEfficiency)
        ));
    }

    #[test]
    fn affine_rescale_matches_direct_resolve() {
        let alphas = [c(0.9, -0.3), c(-0.2, 0.8), c(0.5, 0.1)];
        let betas = [c(-0.7, 0.2), c(0.4, 0.6), c(1.0, -0.5)];
        let w = simple_bipartite(&alphas, &betas);
        let base = solve_sev_multistart(&w, 64, 9).unwrap();

        let identity = base.affine_rescaled(1.0, 0.0).unwrap();
        assert_eq!(identity.g_min, base.g_min);

        // doubling and shifting the circle-witness operator moves its bound
        // to 2 * 1.7575 + 1
        let circle = crate::configs::tmsv_reference_witness();
        let g = solve_sev_multistart(&circle, 64, 9).unwrap();
        let moved = g.affine_rescaled(2.0, 1.0).unwrap();
        assert_relative_eq!(moved.g_min, 2.0 * g.g_min + 1.0, epsilon = 1e-12);
        assert!((moved.g_min - 4.515).abs() < 2e-2);

        let (mu, nu) = (3.0, -1.0);
        let transformed = base.affine_rescaled(mu, nu).unwrap();
        let resolved = solve_sev_multistart(&w.affine_rescaled(mu, nu).unwrap(), 64, 9).unwrap();
        assert_relative_eq!(transformed.g_min, resolved.g_min, epsilon = 1e-9);
        assert_relative_eq!(
            row_distance(&transformed.argmin, &resolved.argmin),
            0.0,
            epsilon = 1e-6
        );
        assert!(matches!(
            base.affine_rescaled(0.0, 1.0),
            Err(Error::NonpositiveScale)
        ));
    }

    #[test]
    fn translation_covariance() {
        let alphas = [c(1.0, 0.5), c(-0.8, 0.1), c(0.2, -1.1)];
        let betas = [c(0.5, -0.2), c(0.9, 0.8), c(-0.6, 0.3)];
        let w = simple_bipartite(&alphas, &betas);
        let offsets = [c(0.7, -0.4), c(-0.3, 0.9)];
        let shifted = w.translated(&offsets).unwrap();
        let s0 = solve_sev_multistart(&w, 64, 4).unwrap();
        let s1 = solve_sev_multistart(&shifted, 64, 4).unwrap();
        assert_relative_eq!(s0.g_min, s1.g_min, epsilon = 1e-9);
        for j in 0..2 {
            assert_relative_eq!(
                (s1.argmin[j] - s0.argmin[j] - offsets[j]).norm(),
                0.0,
                epsilon = 1e-6
            );
        }
    }

    #[test]
    fn vacuum_is_never_flagged() {
        let alphas = [c(0.6, 0.1), c(-0.4, 0.5), c(0.9, -0.7)];
        let betas = [c(-0.1, 0.8), c(0.7, 0.0), c(-0.5, -0.3)];
        let w = simple_bipartite(&alphas, &betas);
        let vac = StateModel::coherent_product(&[c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let report = evaluate(&w, &vac).unwrap();
        assert!(!report.entangled, "separable state flagged: {report:?}");
        assert!(report.witness_value >= 0.0);
    }

    #[test]
    fn witness_json_round_trip_is_bit_exact() {
        let w = simple_bipartite(
            &[c(0.1234567890123, -0.9), c(1.0 / 3.0, 0.7)],
            &[c(-0.25, 1e-17), c(2.0_f64.sqrt(), -0.1)],
        );
        let js = serde_json::to_string(&w).unwrap();
        let back: WitnessSpec = serde_json::from_str(&js).unwrap();
        assert_eq!(w.rows(), back.rows());
        assert_eq!(w.lambdas(), back.lambdas());
        assert_eq!(w.q_weights(), back.q_weights());
        let js2 = serde_json::to_string(&back).unwrap();
        assert_eq!(js, js2);
    }

    #[test]
    fn witness_schema_accepts_spec_shape() {
        let js = r#"{
            "modes": 2,
            "partition": [[1], [2]],
            "lambda": [0.5, 0.5],
            "displacements": [
                [{"re": 0.5, "im": 0.0}, {"re": -0.5, "im": 0.0}],
                [{"re": 0.0, "im": 0.5}, {"re": 0.0, "im": -0.5}]
            ]
        }"#;
        let w: WitnessSpec = serde_json::from_str(js).unwrap();
        assert_eq!(w.m(), 2);
        assert_eq!(w.scale(), 1.0);
        assert_eq!(w.shift(), 0.0);
        assert_eq!(w.q_weights(), &[1.0, 1.0]);
    }
}
