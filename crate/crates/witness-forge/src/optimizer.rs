//! Witness optimization against a target state.
//!
//! The search space is the displacement configuration of a witness (and
//! optionally its weights); the fitness is the witness value
//! `<L> − g_min`, which the genetic algorithm minimizes. Sweeps and
//! bisection cover the one-parameter studies: noise thresholds, subtraction
//! balance, squeezing magnitude and the circle-radius analysis.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::configs;
use crate::error::{Error, Result};
use crate::states::StateModel;
use crate::witness::{evaluate_with, EvaluationReport, PartitionSpec, SevOptions, WitnessSpec};

const ROW_REPAIR_TOL: f64 = 1e-6;

/// Search-space parameterizations.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Ansatz {
    /// Every displacement entry is free: genes are (Re, Im) pairs.
    #[default]
    Free,
    /// Displacements confined to rays through the origin with one fixed
    /// phase per mode; genes are the real coordinates along those rays.
    Collinear { phases: Vec<f64> },
    /// Bipartite circle configuration `α_k = r e^{i(φ0 − 2πk/m)}`,
    /// `β_k = α_k*`; genes are `(r, φ0)`.
    ConjugateCircle,
}

/// Genetic-optimizer knobs. Defaults follow the documented policy:
/// population 64 for 200 generations, Gaussian mutation of width 0.1
/// decaying by 0.99 per generation, uniform crossover at rate 0.7, two
/// elites, genes bounded to ±5, and the separability bound solved with 16
/// multistarts during evolution and 64 for the final report.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub mutation_sigma: f64,
    pub mutation_decay: f64,
    pub crossover_rate: f64,
    pub elite_count: usize,
    pub tournament_size: usize,
    pub seed: u64,
    /// Per-gene bounds; `None` derives them from the ansatz.
    pub bounds: Option<Vec<(f64, f64)>>,
    pub optimize_lambdas: bool,
    pub ansatz: Ansatz,
    pub eval_starts: usize,
    /// Sweep budget per start during evolution; the final report always uses
    /// the full solver budget.
    pub eval_max_sweeps: usize,
    pub final_starts: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 64,
            generations: 200,
            mutation_sigma: 0.1,
            mutation_decay: 0.99,
            crossover_rate: 0.7,
            elite_count: 2,
            tournament_size: 3,
            seed: 0,
            bounds: None,
            optimize_lambdas: false,
            ansatz: Ansatz::Free,
            eval_starts: 16,
            eval_max_sweeps: 2000,
            final_starts: 64,
        }
    }
}

impl GaConfig {
    fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(Error::InvalidWitness(
                "population must be at least 4".into(),
            ));
        }
        if self.elite_count >= self.population {
            return Err(Error::InvalidWitness(
                "elite count must be smaller than the population".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::InvalidWitness(
                "crossover rate must lie in [0,1]".into(),
            ));
        }
        if self.tournament_size == 0 {
            return Err(Error::InvalidWitness(
                "tournament size must be positive".into(),
            ));
        }
        Ok(())
    }
}

struct Genome {
    ansatz: Ansatz,
    partition: PartitionSpec,
    m: usize,
    optimize_lambdas: bool,
    bounds: Vec<(f64, f64)>,
}

impl Genome {
    fn new(config: &GaConfig, partition: &PartitionSpec, m: usize) -> Result<Self> {
        let n = partition.n_modes();
        let displacement_genes = match &config.ansatz {
            Ansatz::Free => 2 * m * n,
            Ansatz::Collinear { phases } => {
                if phases.len() != n {
                    return Err(Error::InvalidWitness(format!(
                        "collinear ansatz needs {} phases, got {}",
                        n,
                        phases.len()
                    )));
                }
                m * n
            }
            Ansatz::ConjugateCircle => {
                if n != 2 || partition.k() != 2 {
                    return Err(Error::InvalidWitness(
                        "circle ansatz is defined for the bipartite two-mode case".into(),
                    ));
                }
                2
            }
        };
        let lambda_genes = if config.optimize_lambdas { m } else { 0 };
        let bounds = match &config.bounds {
            Some(b) => {
                if b.len() != displacement_genes + lambda_genes {
                    return Err(Error::InvalidWitness(format!(
                        "{} gene bounds provided, expected {}",
                        b.len(),
                        displacement_genes + lambda_genes
                    )));
                }
                b.clone()
            }
            None => {
                let mut b = Vec::with_capacity(displacement_genes + lambda_genes);
                match &config.ansatz {
                    Ansatz::ConjugateCircle => {
                        b.push((0.05, 5.0)); // radius
                        b.push((-std::f64::consts::PI, std::f64::consts::PI));
                    }
                    _ => b.extend(std::iter::repeat_n((-5.0, 5.0), displacement_genes)),
                }
                b.extend(std::iter::repeat_n((-3.0, 3.0), lambda_genes));
                b
            }
        };
        Ok(Self {
            ansatz: config.ansatz.clone(),
            partition: partition.clone(),
            m,
            optimize_lambdas: config.optimize_lambdas,
            bounds,
        })
    }

    fn len(&self) -> usize {
        self.bounds.len()
    }

    fn decode(&self, genes: &[f64]) -> Result<WitnessSpec> {
        let n = self.partition.n_modes();
        let mut rows: Vec<Vec<Complex64>> = match &self.ansatz {
            Ansatz::Free => (0..self.m)
                .map(|k| {
                    (0..n)
                        .map(|j| {
                            let base = 2 * (k * n + j);
                            Complex64::new(genes[base], genes[base + 1])
                        })
                        .collect()
                })
                .collect(),
            Ansatz::Collinear { phases } => (0..self.m)
                .map(|k| {
                    (0..n)
                        .map(|j| Complex64::from_polar(1.0, phases[j]) * genes[k * n + j])
                        .collect()
                })
                .collect(),
            Ansatz::ConjugateCircle => {
                let (r, phi0) = (genes[0], genes[1]);
                (0..self.m)
                    .map(|k| {
                        let alpha = Complex64::from_polar(
                            r,
                            phi0 - 2.0 * std::f64::consts::PI * k as f64 / self.m as f64,
                        );
                        vec![alpha, alpha.conj()]
                    })
                    .collect()
            }
        };
        repair_rows(&mut rows);
        let lambdas = if self.optimize_lambdas {
            let start = self.len() - self.m;
            softmax(&genes[start..])
        } else {
            vec![1.0 / self.m as f64; self.m]
        };
        WitnessSpec::new(self.partition.clone(), lambdas, rows, None)
    }
}

/// Rows closer than the repair tolerance get a deterministic nudge so the
/// pairwise-distinct invariant always holds after decoding.
fn repair_rows(rows: &mut [Vec<Complex64>]) {
    let m = rows.len();
    for i in 1..m {
        for _ in 0..8 {
            let clash = (0..i).any(|k| {
                rows[i]
                    .iter()
                    .zip(&rows[k])
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max)
                    <= ROW_REPAIR_TOL
            });
            if !clash {
                break;
            }
            rows[i][0] += Complex64::new(16.0 * ROW_REPAIR_TOL * i as f64, 0.0);
        }
    }
}

fn softmax(genes: &[f64]) -> Vec<f64> {
    let top = genes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = genes.iter().map(|g| (g - top).exp()).collect();
    let total: f64 = exps.iter().sum();
    let mut out: Vec<f64> = exps.iter().map(|e| e / total).collect();
    // force exact normalization for the witness invariant
    let sum: f64 = out.iter().sum();
    let last = out.len() - 1;
    out[last] += 1.0 - sum;
    out
}

/// Result of a genetic optimization run.
#[derive(Debug, Clone)]
pub struct GaResult {
    pub witness: WitnessSpec,
    pub report: EvaluationReport,
    /// Best fitness after each generation; entry 0 is the initial population.
    pub history: Vec<f64>,
}

/// Minimizes `<L> − g_min` over the witness family. Deterministic for a
/// fixed seed and config.
pub fn ga_optimize(
    state: &StateModel,
    partition: &PartitionSpec,
    m: usize,
    config: &GaConfig,
) -> Result<GaResult> {
    config.validate()?;
    if m < partition.k() + 1 {
        log::warn!(
            "m = {} does not exceed the partition count K = {}; the separability bound is 0 and nothing can be detected",
            m,
            partition.k()
        );
    }
    let genome = Genome::new(config, partition, m)?;
    let eval_opts = SevOptions {
        n_starts: config.eval_starts,
        seed: config.seed,
        max_sweeps: config.eval_max_sweeps,
        ..SevOptions::default()
    };
    let fitness = |genes: &[f64]| -> f64 {
        genome
            .decode(genes)
            .and_then(|w| evaluate_with(&w, state, &eval_opts))
            .map(|r| r.witness_value)
            .unwrap_or(f64::INFINITY)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut population: Vec<Vec<f64>> = (0..config.population)
        .map(|_| {
            genome
                .bounds
                .iter()
                .map(|(lo, hi)| rng.gen_range(*lo..=*hi))
                .collect()
        })
        .collect();

    let mut history = Vec::with_capacity(config.generations + 1);
    let mut scores: Vec<f64> = population.par_iter().map(|g| fitness(g)).collect();
    let mut best_idx = argmin(&scores);
    history.push(scores[best_idx]);

    for gen in 0..config.generations {
        let sigma = config.mutation_sigma * config.mutation_decay.powi(gen as i32);
        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

        let mut next: Vec<Vec<f64>> = order[..config.elite_count]
            .iter()
            .map(|&i| population[i].clone())
            .collect();
        while next.len() < config.population {
            let p1 = tournament(&scores, config.tournament_size, &mut rng);
            let p2 = tournament(&scores, config.tournament_size, &mut rng);
            let mut child = population[p1].clone();
            if rng.gen::<f64>() < config.crossover_rate {
                for (g, other) in child.iter_mut().zip(&population[p2]) {
                    if rng.gen::<bool>() {
                        *g = *other;
                    }
                }
            }
            for (g, (lo, hi)) in child.iter_mut().zip(&genome.bounds) {
                let step: f64 = rng.sample(StandardNormal);
                *g = (*g + sigma * step).clamp(*lo, *hi);
            }
            next.push(child);
        }
        population = next;
        scores = population.par_iter().map(|g| fitness(g)).collect();
        best_idx = argmin(&scores);
        history.push(scores[best_idx]);
    }

    let witness = genome.decode(&population[best_idx])?;
    let final_opts = SevOptions {
        n_starts: config.final_starts,
        seed: config.seed,
        ..SevOptions::default()
    };
    let report = evaluate_with(&witness, state, &final_opts)?;
    Ok(GaResult {
        witness,
        report,
        history,
    })
}

fn argmin(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = i;
        }
    }
    best
}

fn tournament(scores: &[f64], size: usize, rng: &mut ChaCha8Rng) -> usize {
    let mut best = rng.gen_range(0..scores.len());
    for _ in 1..size {
        let challenger = rng.gen_range(0..scores.len());
        if scores[challenger] < scores[best] {
            best = challenger;
        }
    }
    best
}

/// The swept parameter of a one-dimensional study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Noise width of the four-mode mixture.
    Sigma,
    /// Subtraction balance of the subtracted squeezed state.
    Kappa,
    /// Squeezing magnitude (the phase is kept).
    XiMagnitude,
    /// Radius of the conjugate-circle witness; the witness is rebuilt per
    /// grid point and the state is left untouched.
    CircleRadius,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub param: f64,
    pub expectation: f64,
    pub g_min: f64,
    pub witness_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// CSV with the fixed header `param,expectation,g_min,witness_value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("param,expectation,g_min,witness_value\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.param, row.expectation, row.g_min, row.witness_value
            ));
        }
        out
    }
}

fn state_at(state: &StateModel, axis: SweepAxis, value: f64) -> Result<StateModel> {
    match (axis, state) {
        (SweepAxis::Sigma, StateModel::NoisyFourModeCat { gamma, .. }) => {
            StateModel::noisy_four_mode_cat(*gamma, value)
        }
        (SweepAxis::Kappa, StateModel::PhotonSubtractedTmsv { xi, .. }) => {
            StateModel::photon_subtracted_tmsv(*xi, value)
        }
        (SweepAxis::XiMagnitude, StateModel::Tmsv { xi }) => {
            let phase = if xi.norm() == 0.0 { 0.0 } else { xi.arg() };
            Ok(StateModel::tmsv(Complex64::from_polar(value, phase)))
        }
        (SweepAxis::CircleRadius, _) => Ok(state.clone()),
        _ => Err(Error::InvalidState(format!(
            "axis {axis:?} does not apply to this state family"
        ))),
    }
}

fn witness_at(witness: Option<&WitnessSpec>, axis: SweepAxis, value: f64) -> Result<WitnessSpec> {
    match axis {
        SweepAxis::CircleRadius => configs::tmsv_circle_witness(value),
        _ => witness
            .cloned()
            .ok_or_else(|| Error::InvalidWitness("this sweep axis needs a witness".into())),
    }
}

/// Evaluates the witness along a sorted parameter grid.
pub fn sweep(
    state: &StateModel,
    witness: Option<&WitnessSpec>,
    axis: SweepAxis,
    grid: &[f64],
    opts: &SevOptions,
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::InvalidState("sweep grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidState(
            "sweep grid must be strictly increasing".into(),
        ));
    }
    // the bound only depends on the witness; solve once unless it changes
    let fixed_g_min = match axis {
        SweepAxis::CircleRadius => None,
        _ => {
            let w0 = witness_at(witness, axis, grid[0])?;
            Some(crate::witness::solve_sev_with(&w0, opts)?.g_min)
        }
    };
    let mut rows = Vec::with_capacity(grid.len());
    for &param in grid {
        let st = state_at(state, axis, param)?;
        let w = witness_at(witness, axis, param)?;
        let expectation = crate::states::expectation_l(&st, &w)?;
        let g_min = match fixed_g_min {
            Some(g) => g,
            None => crate::witness::solve_sev_with(&w, opts)?.g_min,
        };
        rows.push(SweepRow {
            param,
            expectation,
            g_min,
            witness_value: expectation - g_min,
        });
    }
    Ok(SweepResult { axis, rows })
}

/// Root of `witness_value(param)` inside `[lo, hi]` by bisection.
///
/// The endpoint values must differ in sign; the result is accurate to `tol`.
pub fn bisect_critical<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = (lo, hi);
    let flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoSignChange);
    }
    let mut flo = flo;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid)?;
        if fmid == 0.0 {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Critical parameter of a swept study: the zero of the witness value.
pub fn critical_parameter(
    state: &StateModel,
    witness: Option<&WitnessSpec>,
    axis: SweepAxis,
    interval: (f64, f64),
    tol: f64,
    opts: &SevOptions,
) -> Result<f64> {
    let fixed_g_min = match axis {
        SweepAxis::CircleRadius => None,
        _ => Some(
            crate::witness::solve_sev_with(&witness_at(witness, axis, interval.0)?, opts)?.g_min,
        ),
    };
    bisect_critical(
        |param| {
            let st = state_at(state, axis, param)?;
            let w = witness_at(witness, axis, param)?;
            let expectation = crate::states::expectation_l(&st, &w)?;
            let g_min = match fixed_g_min {
                Some(g) => g,
                None => crate::witness::solve_sev_with(&w, opts)?.g_min,
            };
            Ok(expectation - g_min)
        },
        interval.0,
        interval.1,
        tol,
    )
}

/// Outcome of the circle-radius study for a squeezed state.
#[derive(Debug, Clone, Serialize)]
pub struct RadiusAnalysis {
    /// Closed-form detection threshold.
    pub r_crit: f64,
    /// Closed-form radius of maximal relative margin, `√2 · r_crit`.
    pub r_max: f64,
    /// Grid point with the largest relative margin `g_min/<L> − 1`.
    pub grid_maximizer: f64,
    /// The relative margin at that grid point.
    pub best_relative_margin: f64,
}

/// Scans the circle-witness radius for `|ξ|` and reports the closed-form
/// thresholds next to the grid maximizer of the relative margin. For complex
/// squeezing, the circle is rotated by `arg(ξ)/2`.
pub fn radius_analysis(xi: Complex64, grid: &[f64], opts: &SevOptions) -> Result<RadiusAnalysis> {
    if xi.norm() == 0.0 {
        return Err(Error::InvalidState(
            "radius analysis needs nonzero squeezing".into(),
        ));
    }
    if grid.len() < 2 {
        return Err(Error::InvalidState(
            "radius grid needs at least two points".into(),
        ));
    }
    let state = StateModel::tmsv(xi);
    let rot = Complex64::from_polar(1.0, xi.arg() / 2.0);
    let mut best = (f64::NEG_INFINITY, grid[0]);
    for &r in grid {
        let base = configs::tmsv_circle_witness(r)?;
        let rows: Vec<Vec<Complex64>> = base
            .rows()
            .iter()
            .map(|row| row.iter().map(|z| z * rot).collect())
            .collect();
        let w = WitnessSpec::new(
            base.partition().clone(),
            base.lambdas().to_vec(),
            rows,
            None,
        )?;
        let expectation = crate::states::expectation_l(&state, &w)?;
        let g_min = crate::witness::solve_sev_with(&w, opts)?.g_min;
        if expectation > 0.0 {
            let margin = g_min / expectation - 1.0;
            if margin > best.0 {
                best = (margin, r);
            }
        }
    }
    Ok(RadiusAnalysis {
        r_crit: configs::critical_radius(xi.norm()),
        r_max: configs::optimal_radius(xi.norm()),
        grid_maximizer: best.1,
        best_relative_margin: best.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn softmax_normalizes_exactly() {
        let l = softmax(&[0.3, -1.2, 2.0]);
        assert_eq!(l.iter().sum::<f64>(), 1.0);
        assert!(l.iter().all(|x| *x > 0.0));
    }

    #[test]
    fn repair_separates_identical_rows() {
        let mut rows = vec![
            vec![Complex64::new(0.5, 0.0), Complex64::new(0.1, 0.0)],
            vec![Complex64::new(0.5, 0.0), Complex64::new(0.1, 0.0)],
        ];
        repair_rows(&mut rows);
        let d = rows[0]
            .iter()
            .zip(&rows[1])
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(d > ROW_REPAIR_TOL);
    }

    #[test]
    fn bisection_finds_a_simple_root() {
        let root = bisect_critical(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-10).unwrap();
        assert_relative_eq!(root, 2.0f64.sqrt(), epsilon = 1e-9);
        assert!(matches!(
            bisect_critical(|x| Ok(x * x + 1.0), 0.0, 2.0, 1e-10),
            Err(Error::NoSignChange)
        ));
    }

    #[test]
    fn bisection_is_stable_under_interval_refinement() {
        let state = StateModel::tmsv(Complex64::new(0.5, 0.0));
        let opts = SevOptions::default();
        let tol = 1e-4;
        let wide = critical_parameter(
            &state,
            None,
            SweepAxis::CircleRadius,
            (0.4, 1.4),
            tol,
            &opts,
        )
        .unwrap();
        let tight = critical_parameter(
            &state,
            None,
            SweepAxis::CircleRadius,
            (0.7, 0.95),
            tol,
            &opts,
        )
        .unwrap();
        assert!((wide - tight).abs() <= 2.0 * tol, "{wide} vs {tight}");
    }

    #[test]
    fn sweep_grid_must_increase() {
        let st = StateModel::tmsv(Complex64::new(0.5, 0.0));
        let err = sweep(
            &st,
            None,
            SweepAxis::CircleRadius,
            &[1.0, 0.5],
            &SevOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidState(_)));
    }

    #[test]
    fn ga_beats_reference_quality_on_the_superposition_state() {
        let state = crate::configs::bell_reference_state();
        let config = GaConfig::default();
        let result = ga_optimize(&state, &PartitionSpec::full(2).unwrap(), 3, &config).unwrap();
        // at least as good as the bundled reference configuration's -0.017
        assert!(
            result.report.witness_value <= -0.015,
            "GA stalled at {}",
            result.report.witness_value
        );
        assert!(result.report.entangled);
        // weights stayed fixed at 1/m
        for l in result.witness.lambdas() {
            assert!((l - 1.0 / 3.0).abs() < 1e-15);
        }
        // elitism: the final fitness is at least as good as every earlier best
        for window in result.history.windows(2) {
            assert!(window[1] <= window[0] + 1e-12, "history not monotone");
        }
        assert!(result.report.witness_value <= result.history[0]);
    }

    #[test]
    fn ga_circle_ansatz_detects_squeezed_state() {
        let state = StateModel::tmsv(Complex64::new(0.5, 0.0));
        let config = GaConfig {
            population: 32,
            generations: 60,
            ansatz: Ansatz::ConjugateCircle,
            ..GaConfig::default()
        };
        let result = ga_optimize(&state, &PartitionSpec::full(2).unwrap(), 3, &config).unwrap();
        assert!(
            result.report.witness_value <= -0.40,
            "circle ansatz reached only {}",
            result.report.witness_value
        );
        // conjugate structure survives decoding
        for k in 0..3 {
            let row = result.witness.row(k);
            assert!((row[1] - row[0].conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn ga_is_deterministic_per_seed() {
        let state = crate::configs::bell_reference_state();
        let config = GaConfig {
            population: 16,
            generations: 8,
            ..GaConfig::default()
        };
        let a = ga_optimize(&state, &PartitionSpec::full(2).unwrap(), 3, &config).unwrap();
        let b = ga_optimize(&state, &PartitionSpec::full(2).unwrap(), 3, &config).unwrap();
        assert_eq!(a.witness.rows(), b.witness.rows());
        assert_eq!(a.report.witness_value, b.report.witness_value);
        let other = GaConfig { seed: 1, ..config };
        let c_ = ga_optimize(&state, &PartitionSpec::full(2).unwrap(), 3, &other).unwrap();
        assert_ne!(a.witness.rows(), c_.witness.rows());
    }

    #[test]
    fn ga_with_too_few_configurations_is_honestly_nonnegative() {
        // m = K leaves a vanishing bound, so nothing can be detected
        let state = crate::configs::bell_reference_state();
        let config = GaConfig {
            population: 8,
            generations: 4,
            ..GaConfig::default()
        };
        let result = ga_optimize(&state, &PartitionSpec::full(2).unwrap(), 2, &config).unwrap();
        assert!(result.report.g_min.abs() <= 1e-12);
        assert!(result.report.witness_value >= 0.0);
        assert!(!result.report.entangled);
    }

    #[test]
    fn ga_optimized_lambdas_are_normalized() {
        let state = crate::configs::bell_reference_state();
        let config = GaConfig {
            population: 8,
            generations: 3,
            optimize_lambdas: true,
            ..GaConfig::default()
        };
        let result = ga_optimize(&state, &PartitionSpec::full(2).unwrap(), 3, &config).unwrap();
        let sum: f64 = result.witness.lambdas().iter().sum();
        assert_eq!(sum, 1.0);
        assert!(result.witness.lambdas().iter().all(|l| *l > 0.0));
    }

    #[test]
    fn single_point_circle_sweep_matches_evaluate() {
        let st = StateModel::tmsv(Complex64::new(0.5, 0.0));
        let r = configs::optimal_radius(0.5);
        let opts = SevOptions::default();
        let res = sweep(&st, None, SweepAxis::CircleRadius, &[r], &opts).unwrap();
        let w = configs::tmsv_circle_witness(r).unwrap();
        let direct = crate::witness::evaluate_with(&w, &st, &opts).unwrap();
        assert_relative_eq!(res.rows[0].expectation, direct.expectation, epsilon = 1e-12);
        assert_relative_eq!(res.rows[0].g_min, direct.g_min, epsilon = 1e-12);
    }
}
