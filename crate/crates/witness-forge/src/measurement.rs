//! Shot-level simulation of the randomized-displacement correlation
//! measurement.
//!
//! Each shot draws a displacement configuration `k` with probability `λ_k`,
//! samples joint photon numbers from the displaced distribution of the state
//! at that configuration, and records the product of the weighted per-block
//! photon sums. The average over shots is an unbiased estimator of `<L>`.
//!
//! Detection losses enter through the transformed operator (displacements
//! stretched by `1/√η`, weights scaled by `η`), never by thinning clicks.
//!
//! Shots are split into a fixed number of chunks with independent RNG
//! streams, so estimates are bit-for-bit reproducible regardless of how many
//! worker threads execute the chunks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{self, FockCutoff, JointDistribution};
use crate::states::StateModel;
use crate::witness::{apply_loss, WitnessSpec};

/// Number of independently seeded shot chunks; fixed so that results do not
/// depend on the thread count.
pub const DEFAULT_CHUNKS: u64 = 64;

/// Monte Carlo estimate of `<L>`.
#[derive(Debug, Clone, Serialize)]
pub struct MeasurementEstimate {
    pub mean: f64,
    /// Sample standard deviation over shots divided by √shots.
    pub stderr: f64,
    pub shots: u64,
    pub seed: u64,
    /// How often each displacement configuration was drawn.
    pub per_k_counts: Vec<u64>,
}

#[derive(Debug, Clone, Default)]
pub struct SimOptions {
    /// Explicit basis truncation; the cutoff policy picks one otherwise.
    pub cutoff: Option<FockCutoff>,
    /// Per-mode detection efficiencies in (0, 1].
    pub etas: Option<Vec<f64>>,
    /// Chunk count override; leave `None` for the default.
    pub chunks: Option<u64>,
}

/// Per-configuration sampling tables: outcome CDF and the per-outcome value
/// of the measured product.
struct ConfigTable {
    cdf: Vec<f64>,
    values: Vec<f64>,
}

fn build_table(witness: &WitnessSpec, dist: &JointDistribution) -> ConfigTable {
    let blocks = witness.partition().blocks();
    let q = witness.q_weights();
    let mut cdf = Vec::with_capacity(dist.probs.len());
    let mut acc = 0.0;
    for p in &dist.probs {
        acc += p;
        cdf.push(acc);
    }
    if let Some(last) = cdf.last_mut() {
        *last = 1.0;
    }
    let values = (0..dist.probs.len())
        .map(|flat| {
            let product: f64 = blocks
                .iter()
                .map(|block| {
                    block
                        .iter()
                        .map(|&j| q[j] * dist.photon_number(flat, j) as f64)
                        .sum::<f64>()
                })
                .product();
            witness.scale() * product + witness.shift()
        })
        .collect();
    ConfigTable { cdf, values }
}

/// Draws `shots` samples of the correlation measurement.
///
/// Deterministic for fixed `(witness, state, shots, seed, cutoff)`; the
/// estimator mean is unbiased for `<L>` of the (loss-transformed, when
/// `etas` are given) operator up to the reported truncation deficit.
pub fn simulate(
    witness: &WitnessSpec,
    state: &StateModel,
    shots: u64,
    seed: u64,
    opts: &SimOptions,
) -> Result<MeasurementEstimate> {
    if shots == 0 {
        return Err(Error::InvalidWitness(
            "at least one shot is required".into(),
        ));
    }
    if witness.n_modes() != state.n_modes() {
        return Err(Error::ModelMismatch {
            expected: witness.n_modes(),
            actual: state.n_modes(),
        });
    }
    let effective = match &opts.etas {
        Some(etas) => apply_loss(witness, etas)?,
        None => witness.clone(),
    };
    let cutoff = match opts.cutoff {
        Some(cutoff) => cutoff,
        None => fock::default_cutoff(state, effective.max_displacement())?,
    };

    // per-configuration displaced distributions, via the pure-state fast path
    // whenever the model admits one
    let pure = fock::state_to_vector(state, cutoff).ok();
    let density = if pure.is_none() {
        Some(fock::state_to_fock(state, cutoff)?)
    } else {
        None
    };
    let mut worst_deficit = 0.0f64;
    let tables: Vec<ConfigTable> = (0..effective.m())
        .map(|k| -> Result<ConfigTable> {
            let dist = match (&pure, &density) {
                (Some(v), _) => {
                    fock::joint_displaced_number_distribution_pure(v, effective.row(k))?
                }
                (None, Some(rho)) => {
                    fock::joint_displaced_number_distribution(rho, effective.row(k))?
                }
                _ => unreachable!(),
            };
            worst_deficit = worst_deficit.max(dist.deficit);
            Ok(build_table(&effective, &dist))
        })
        .collect::<Result<_>>()?;
    if worst_deficit > 0.0 {
        // systematic error from renormalizing the truncated distributions
        log::debug!(
            "sampling tables renormalized; worst truncation deficit {worst_deficit:.3e} at n_max {}",
            cutoff.n_max()
        );
    }

    let mut lambda_cdf = Vec::with_capacity(effective.m());
    let mut acc = 0.0;
    for l in effective.lambdas() {
        acc += l;
        lambda_cdf.push(acc);
    }
    if let Some(last) = lambda_cdf.last_mut() {
        *last = 1.0;
    }

    let chunks = opts.chunks.unwrap_or(DEFAULT_CHUNKS).min(shots).max(1);
    let base = shots / chunks;
    let remainder = shots % chunks;

    struct ChunkStats {
        sum: f64,
        sum_sq: f64,
        counts: Vec<u64>,
    }

    let stats: Vec<ChunkStats> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let chunk_shots = base + u64::from(chunk < remainder);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk + 1);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let mut counts = vec![0u64; tables.len()];
            for _ in 0..chunk_shots {
                let uk: f64 = rng.gen();
                let k = lambda_cdf
                    .partition_point(|c| *c < uk)
                    .min(tables.len() - 1);
                counts[k] += 1;
                let uo: f64 = rng.gen();
                let table = &tables[k];
                let outcome = table
                    .cdf
                    .partition_point(|c| *c < uo)
                    .min(table.values.len() - 1);
                let value = table.values[outcome];
                sum += value;
                sum_sq += value * value;
            }
            ChunkStats {
                sum,
                sum_sq,
                counts,
            }
        })
        .collect();

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut per_k_counts = vec![0u64; effective.m()];
    for s in &stats {
        sum += s.sum;
        sum_sq += s.sum_sq;
        for (tot, c) in per_k_counts.iter_mut().zip(&s.counts) {
            *tot += c;
        }
    }
    let n = shots as f64;
    let mean = sum / n;
    let variance = if shots > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(MeasurementEstimate {
        mean,
        stderr: (variance / n).sqrt(),
        shots,
        seed,
        per_k_counts,
    })
}
