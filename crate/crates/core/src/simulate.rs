//! Seedable Monte Carlo engine for synthetic subjective tests.
//!
//! Each repetition draws true qualities from the configured distribution,
//! rates every file with BinoVotes (optionally through per-subject bias),
//! forms MOS values, and measures realized MSE and sample correlation
//! against the hidden truth. Randomness comes from counter-style substreams
//! keyed by (seed, repetition, file), so results are bit-identical for any
//! worker count or execution order; repetitions run in parallel.

use crate::estimate::{FileRecord, MosDataset, VarianceConvention};
use crate::model::{BinoVotesModel, ModelError};
use crate::quality::{QualityDistribution, QualityError};
use crate::scale::{MosLattice, RatingScale, ScaleError};
use crate::stats;
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution as _, Normal};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Quality(#[from] QualityError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Scale(#[from] ScaleError),
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn absorb(state: u64, word: u64) -> u64 {
    mix64(state.wrapping_add(GOLDEN).wrapping_add(word))
}

/// Stream identifiers baked into the derivation paths so that quality
/// draws, votes, and bias draws can never alias.
mod lane {
    pub const QUALITY: u64 = 1;
    pub const VOTES: u64 = 2;
    pub const BIAS: u64 = 3;
}

/// A deterministic random stream with hierarchical splitting.
///
/// A stream is identified by the absorbed key of its derivation path from
/// the root seed. `substream` never advances the parent, so any number of
/// tasks can derive their own streams concurrently and reproducibly.
pub struct RandomStream {
    state: u64,
    rng: ChaCha12Rng,
}

impl RandomStream {
    fn from_state(state: u64) -> Self {
        let mut key = [0u8; 32];
        for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
            let w = mix64(state.wrapping_add(GOLDEN.wrapping_mul(i as u64 + 1)));
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        RandomStream {
            state,
            rng: ChaCha12Rng::from_seed(key),
        }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::from_state(absorb(0, seed))
    }

    /// An independent stream keyed by this stream's identity plus `path`.
    pub fn substream(&self, path: &[u64]) -> RandomStream {
        let mut s = absorb(self.state, path.len() as u64);
        for &w in path {
            s = absorb(s, w);
        }
        Self::from_state(s)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}

/// Configuration of one synthetic subjective test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub scale: RatingScale,
    pub quality_dist: QualityDistribution,
    pub n_files: usize,
    pub n_votes: usize,
    pub n_reps: usize,
    /// Standard deviation of the zero-mean per-subject bias; 0 disables it.
    pub bias_spread: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_files < 2 {
            return Err(SimError::InvalidConfig(format!(
                "need at least 2 files, got {}",
                self.n_files
            )));
        }
        if self.n_votes < 1 {
            return Err(SimError::InvalidConfig("need at least 1 vote".into()));
        }
        if self.n_reps < 1 {
            return Err(SimError::InvalidConfig("need at least 1 repetition".into()));
        }
        if !(self.bias_spread >= 0.0) {
            return Err(SimError::InvalidConfig(format!(
                "bias spread must be nonnegative, got {}",
                self.bias_spread
            )));
        }
        if self.quality_dist.is_moments_only() {
            return Err(SimError::InvalidConfig(
                "a moments-only quality distribution cannot be sampled".into(),
            ));
        }
        if self.quality_dist.lo() != self.scale.lo() || self.quality_dist.hi() != self.scale.hi() {
            return Err(SimError::InvalidConfig(
                "quality distribution support must match the rating scale".into(),
            ));
        }
        Ok(())
    }
}

/// Measurements from a single repetition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RepOutcome {
    pub rep: usize,
    /// Mean squared error between MOS and true quality.
    pub realized_mse: f64,
    /// Within-repetition standard error of that mean.
    pub mse_std_err: f64,
    /// Sample correlation between MOS and true quality; absent when either
    /// series has zero variance (e.g. point-mass quality).
    pub realized_pcc: Option<f64>,
    /// Unbiased sample variance of the MOS values.
    pub realized_mos_variance: f64,
    /// Unbiased sample variance of the drawn true qualities.
    pub quality_variance: f64,
}

/// Mean and standard error of a per-repetition quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregate {
    pub mean: f64,
    /// Standard error across repetitions; absent for a single repetition.
    pub std_err: Option<f64>,
}

fn aggregate(values: &[f64]) -> Option<Aggregate> {
    if values.is_empty() {
        return None;
    }
    let mean = stats::mean(values);
    let std_err = stats::standard_error(values).ok();
    Some(Aggregate { mean, std_err })
}

/// Results of a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimOutcome {
    pub reps: Vec<RepOutcome>,
    pub mse: Aggregate,
    /// Aggregate over the repetitions where the sample PCC was defined.
    pub pcc: Option<Aggregate>,
    pub pcc_undefined_reps: usize,
    pub mos_variance: Aggregate,
}

struct RepData {
    qualities: Vec<f64>,
    mos: Vec<f64>,
    vote_counts: Option<Vec<Vec<usize>>>,
}

/// Draws one repetition. Votes are stored as binomial counts when
/// `keep_votes` is set (the scale maps counts to levels).
fn generate_rep(cfg: &SimConfig, rep: usize, keep_votes: bool) -> Result<RepData, SimError> {
    let root = RandomStream::from_seed(cfg.seed);
    let model = BinoVotesModel::new(cfg.scale);
    let lattice = MosLattice::new(cfg.scale, cfg.n_votes)?;

    let mut quality_rng = root.substream(&[lane::QUALITY, rep as u64]);
    let qualities = cfg.quality_dist.sample(&mut quality_rng, cfg.n_files)?;

    let biases: Vec<f64> = if cfg.bias_spread > 0.0 {
        let mut bias_rng = root.substream(&[lane::BIAS, rep as u64]);
        let normal = Normal::new(0.0, cfg.bias_spread)
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        (0..cfg.n_votes)
            .map(|_| normal.sample(&mut bias_rng))
            .collect()
    } else {
        Vec::new()
    };

    let mut mos = Vec::with_capacity(cfg.n_files);
    let mut vote_counts = keep_votes.then(|| Vec::with_capacity(cfg.n_files));
    for (i, &y) in qualities.iter().enumerate() {
        let mut vote_rng = root.substream(&[lane::VOTES, rep as u64, i as u64]);
        let mut total = 0usize;
        let mut counts = keep_votes.then(|| Vec::with_capacity(cfg.n_votes));
        for j in 0..cfg.n_votes {
            let delta = if biases.is_empty() { 0.0 } else { biases[j] };
            let count = model.sample_vote_count(y, delta, &mut vote_rng)?;
            total += count;
            if let Some(c) = counts.as_mut() {
                c.push(count);
            }
        }
        mos.push(lattice.point(total));
        if let (Some(all), Some(c)) = (vote_counts.as_mut(), counts) {
            all.push(c);
        }
    }
    Ok(RepData {
        qualities,
        mos,
        vote_counts,
    })
}

fn measure_rep(cfg: &SimConfig, rep: usize) -> Result<RepOutcome, SimError> {
    let data = generate_rep(cfg, rep, false)?;
    let sq_errors: Vec<f64> = data
        .mos
        .iter()
        .zip(&data.qualities)
        .map(|(x, y)| (x - y).powi(2))
        .collect();
    let realized_mse = stats::mean(&sq_errors);
    let mse_std_err = stats::standard_error(&sq_errors).unwrap_or(f64::NAN);
    let realized_pcc = stats::sample_pcc(&data.mos, &data.qualities).ok();
    let realized_mos_variance = stats::sample_variance(&data.mos).unwrap_or(0.0);
    let quality_variance = stats::sample_variance(&data.qualities).unwrap_or(0.0);
    Ok(RepOutcome {
        rep,
        realized_mse,
        mse_std_err,
        realized_pcc,
        realized_mos_variance,
        quality_variance,
    })
}

/// Runs the configured number of repetitions (in parallel) and aggregates.
pub fn run_simulation(cfg: &SimConfig) -> Result<SimOutcome, SimError> {
    cfg.validate()?;
    let reps: Vec<RepOutcome> = (0..cfg.n_reps)
        .into_par_iter()
        .map(|rep| measure_rep(cfg, rep))
        .collect::<Result<_, _>>()?;
    let mses: Vec<f64> = reps.iter().map(|r| r.realized_mse).collect();
    let pccs: Vec<f64> = reps.iter().filter_map(|r| r.realized_pcc).collect();
    let mos_vars: Vec<f64> = reps.iter().map(|r| r.realized_mos_variance).collect();
    Ok(SimOutcome {
        mse: aggregate(&mses).expect("n_reps >= 1"),
        pcc: aggregate(&pccs),
        pcc_undefined_reps: reps.len() - pccs.len(),
        mos_variance: aggregate(&mos_vars).expect("n_reps >= 1"),
        reps,
    })
}

/// One grid point of the sample-correlation convergence experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n_files: usize,
    /// Mean sample PCC across the repetitions where it was defined.
    pub mean_sample_pcc: f64,
    pub std_err: Option<f64>,
    /// Population PCC bound for the same configuration.
    pub population_pcc: f64,
    /// Repetitions dropped because the sample PCC was undefined (possible
    /// at tiny file counts when all MOS or qualities tie).
    pub undefined_reps: usize,
}

/// Measures how fast the mean sample correlation approaches the population
/// correlation as the number of files grows.
pub fn convergence_experiment(
    scale: RatingScale,
    quality_dist: QualityDistribution,
    n_votes: usize,
    n_files_grid: &[usize],
    n_reps: usize,
    seed: u64,
) -> Result<Vec<ConvergenceRow>, SimError> {
    let population = crate::bounds::binovotes_bounds(
        scale,
        quality_dist.mean(),
        quality_dist.variance(),
        n_votes as f64,
    )
    .map_err(|e| SimError::InvalidConfig(e.to_string()))?
    .pcc_bound;
    n_files_grid
        .iter()
        .map(|&n_files| {
            // Every (n_files, n_votes) cell gets its own seed lane so grid
            // changes never shift other cells' draws.
            let cell_seed = absorb(absorb(absorb(0, seed), n_files as u64), n_votes as u64);
            let cfg = SimConfig {
                scale,
                quality_dist,
                n_files,
                n_votes,
                n_reps,
                bias_spread: 0.0,
                seed: cell_seed,
            };
            let outcome = run_simulation(&cfg)?;
            let agg = outcome.pcc.ok_or_else(|| {
                SimError::InvalidConfig("sample PCC undefined in every repetition".into())
            })?;
            Ok(ConvergenceRow {
                n_files,
                mean_sample_pcc: agg.mean,
                std_err: agg.std_err,
                population_pcc: population,
                undefined_reps: outcome.pcc_undefined_reps,
            })
        })
        .collect()
}

/// A synthetic dataset (with raw votes) plus the hidden truth it was drawn
/// from. Schema-compatible with ingested real data, so it can round-trip
/// through the file formats and the estimators.
pub fn synth_dataset(
    cfg: &SimConfig,
    rep: usize,
    convention: VarianceConvention,
) -> Result<(MosDataset, Vec<f64>), SimError> {
    cfg.validate()?;
    let data = generate_rep(cfg, rep, true)?;
    let counts = data.vote_counts.expect("keep_votes was set");
    let width = (cfg.n_files as f64).log10().ceil().max(1.0) as usize;
    let files = counts
        .into_iter()
        .enumerate()
        .map(|(i, file_counts)| {
            let votes: Vec<f64> = file_counts
                .into_iter()
                .map(|c| cfg.scale.level(c))
                .collect();
            FileRecord::from_votes(format!("f{i:0width$}"), votes, convention)
        })
        .collect();
    Ok((
        MosDataset {
            scale: cfg.scale,
            provenance: format!("synthetic seed={} rep={}", cfg.seed, rep),
            files,
        },
        data.qualities,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds;
    use crate::estimate;
    use approx::assert_abs_diff_eq;

    fn uniform_cfg(n_files: usize, n_votes: usize, n_reps: usize, seed: u64) -> SimConfig {
        SimConfig {
            scale: RatingScale::mos_1_to_5(),
            quality_dist: QualityDistribution::uniform(1.0, 5.0).unwrap(),
            n_files,
            n_votes,
            n_reps,
            bias_spread: 0.0,
            seed,
        }
    }

    #[test]
    fn identical_seeds_are_bit_identical() {
        let cfg = uniform_cfg(500, 4, 8, 42);
        let a = run_simulation(&cfg).unwrap();
        let b = run_simulation(&cfg).unwrap();
        assert_eq!(a, b);
        let other = run_simulation(&uniform_cfg(500, 4, 8, 43)).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = uniform_cfg(300, 4, 16, 7);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_simulation(&cfg).unwrap());
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap()
            .install(|| run_simulation(&cfg).unwrap());
        assert_eq!(single, many);
    }

    #[test]
    fn substreams_are_independent_of_derivation_order() {
        let root = RandomStream::from_seed(99);
        let mut a1 = root.substream(&[lane::VOTES, 3, 10]);
        let mut b1 = root.substream(&[lane::VOTES, 3, 11]);
        let x_a = a1.next_u64();
        let x_b = b1.next_u64();
        // Re-derive in the opposite order; outputs must not move.
        let mut b2 = root.substream(&[lane::VOTES, 3, 11]);
        let mut a2 = root.substream(&[lane::VOTES, 3, 10]);
        assert_eq!(a2.next_u64(), x_a);
        assert_eq!(b2.next_u64(), x_b);
        assert_ne!(x_a, x_b);
    }

    #[test]
    fn point_mass_quality_has_no_defined_pcc() {
        let cfg = SimConfig {
            quality_dist: QualityDistribution::point_mass(1.0, 5.0, 3.0).unwrap(),
            ..uniform_cfg(5000, 4, 4, 5)
        };
        let out = run_simulation(&cfg).unwrap();
        assert_eq!(out.pcc, None);
        assert_eq!(out.pcc_undefined_reps, 4);
        // Realized MSE still approaches v_r(3)/n_v = 1/4.
        let want = 0.25;
        let se = out.mse.std_err.unwrap();
        assert!((out.mse.mean - want).abs() < 3.0 * se.max(out.reps[0].mse_std_err));
    }

    #[test]
    fn realized_mse_matches_the_bound_for_uniform_quality() {
        let cfg = uniform_cfg(20_000, 16, 1, 11);
        let out = run_simulation(&cfg).unwrap();
        let want = (2.0 / 3.0) / 16.0;
        assert!(
            (out.mse.mean - want).abs() < 3.0 * out.reps[0].mse_std_err,
            "mse {} vs {want}",
            out.mse.mean
        );
    }

    #[test]
    fn realized_pcc_matches_the_bound_for_uniform_quality() {
        let cfg = uniform_cfg(50_000, 1, 1, 13);
        let out = run_simulation(&cfg).unwrap();
        let want = (2.0f64 / 3.0).sqrt();
        let got = out.pcc.unwrap().mean;
        assert!((got - want).abs() < 0.005, "pcc {got} vs {want}");
    }

    #[test]
    fn bound_validity_over_many_repetitions() {
        // Mean realized MSE across 200 repetitions sits within 3 s.e. of the
        // model bound (the bound is an expected value, not almost-sure).
        let cfg = uniform_cfg(2000, 8, 200, 17);
        let out = run_simulation(&cfg).unwrap();
        let bound = bounds::binovotes_bounds(cfg.scale, 3.0, 4.0 / 3.0, 8.0)
            .unwrap()
            .mse_bound;
        let se = out.mse.std_err.unwrap();
        assert!(
            (out.mse.mean - bound).abs() < 3.0 * se,
            "mean {} bound {bound} se {se}",
            out.mse.mean
        );
    }

    #[test]
    fn mos_variance_decomposition_holds() {
        // Var[X] - Var[Y] equals the realized MSE up to sampling noise.
        let cfg = uniform_cfg(2000, 4, 200, 23);
        let out = run_simulation(&cfg).unwrap();
        let diffs: Vec<f64> = out
            .reps
            .iter()
            .map(|r| r.realized_mos_variance - r.quality_variance - r.realized_mse)
            .collect();
        let mean = stats::mean(&diffs);
        let se = stats::standard_error(&diffs).unwrap();
        assert!(mean.abs() < 3.0 * se, "mean gap {mean} se {se}");
    }

    #[test]
    fn bias_inflates_vote_variance_but_data_driven_bound_tracks_it() {
        // Mid-scale-heavy quality keeps the clamp mostly inactive.
        let cfg = SimConfig {
            scale: RatingScale::mos_1_to_5(),
            quality_dist: QualityDistribution::triangular(1.0, 5.0, 3.0).unwrap(),
            n_files: 2000,
            n_votes: 8,
            n_reps: 200,
            bias_spread: 0.25,
            seed: 31,
        };
        let out = run_simulation(&cfg).unwrap();

        // Data-driven estimate per repetition, paired with realized MSE.
        let mut gaps = Vec::with_capacity(cfg.n_reps);
        for rep in 0..cfg.n_reps {
            let (ds, truth) = synth_dataset(&cfg, rep, VarianceConvention::Unbiased).unwrap();
            let report =
                estimate::estimate_bounds(&ds, estimate::VarianceMode::DataDriven).unwrap();
            let mos: Vec<f64> = ds.files.iter().map(|f| f.mos).collect();
            let realized = stats::mean_squared_error(&mos, &truth).unwrap();
            gaps.push(realized - report.mse_bound);
        }
        let mean_gap = stats::mean(&gaps);
        let se_gap = stats::standard_error(&gaps).unwrap();
        assert!(
            mean_gap.abs() < 3.0 * se_gap,
            "data-driven bound missed realized MSE: gap {mean_gap} se {se_gap}"
        );

        // The pure model bound ignores the bias and must undershoot.
        let model_bound = bounds::binovotes_bounds(
            cfg.scale,
            cfg.quality_dist.mean(),
            cfg.quality_dist.variance(),
            8.0,
        )
        .unwrap()
        .mse_bound;
        let se = out.mse.std_err.unwrap();
        assert!(
            out.mse.mean - model_bound > 3.0 * se,
            "expected bias to push realized MSE above the unbiased model bound"
        );
    }

    #[test]
    fn synth_dataset_round_trips_through_the_estimators() {
        let cfg = uniform_cfg(5000, 5, 1, 47);
        let (ds, truth) = synth_dataset(&cfg, 0, VarianceConvention::Unbiased).unwrap();
        assert_eq!(ds.files.len(), 5000);
        assert_eq!(truth.len(), 5000);
        // Every synthetic MOS sits on the 5-vote lattice.
        let lattice = MosLattice::new(cfg.scale, 5).unwrap();
        for f in &ds.files {
            assert!(lattice.contains_point(f.mos));
            assert_eq!(f.n_votes, 5);
        }
        // sample_stats reproduces the empirical moments exactly.
        let st = estimate::sample_stats(&ds).unwrap();
        let mos: Vec<f64> = ds.files.iter().map(|f| f.mos).collect();
        assert_abs_diff_eq!(st.mu_hat, stats::mean(&mos), epsilon = 1e-15);
        assert_abs_diff_eq!(
            st.var_hat,
            stats::sample_variance(&mos).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn synth_dataset_matches_measured_rep() {
        // The dataset generator and the measuring path share streams, so the
        // same (seed, rep) yields the same MOS values.
        let cfg = uniform_cfg(50, 3, 1, 53);
        let (ds, truth) = synth_dataset(&cfg, 0, VarianceConvention::Unbiased).unwrap();
        let out = run_simulation(&cfg).unwrap();
        let mos: Vec<f64> = ds.files.iter().map(|f| f.mos).collect();
        let realized = stats::mean_squared_error(&mos, &truth).unwrap();
        assert_abs_diff_eq!(realized, out.reps[0].realized_mse, epsilon = 1e-12);
    }

    #[test]
    fn convergence_rows_carry_population_bound() {
        let rows = convergence_experiment(
            RatingScale::mos_1_to_5(),
            QualityDistribution::uniform(1.0, 5.0).unwrap(),
            4,
            &[10, 50],
            200,
            61,
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        let want = bounds::binovotes_bounds(RatingScale::mos_1_to_5(), 3.0, 4.0 / 3.0, 4.0)
            .unwrap()
            .pcc_bound;
        for row in &rows {
            assert_eq!(row.population_pcc, want);
            assert!(row.mean_sample_pcc > 0.0 && row.mean_sample_pcc <= 1.0);
        }
        // Larger samples track the population value more closely.
        assert!((rows[1].mean_sample_pcc - want).abs() <= (rows[0].mean_sample_pcc - want).abs());
    }

    #[test]
    fn tiny_sample_correlation_sits_below_the_population_value() {
        // With two files the sample PCC is +-1 when defined; its mean over
        // repetitions lands well under the population bound.
        let rows = convergence_experiment(
            RatingScale::mos_1_to_5(),
            QualityDistribution::uniform(1.0, 5.0).unwrap(),
            1,
            &[2],
            2000,
            67,
        )
        .unwrap();
        assert!(rows[0].mean_sample_pcc < rows[0].population_pcc);
        assert!(rows[0].undefined_reps > 0, "ties at n_f=2 should occur");
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = uniform_cfg(1, 4, 1, 3);
        assert!(matches!(
            run_simulation(&cfg),
            Err(SimError::InvalidConfig(_))
        ));
        cfg = uniform_cfg(10, 0, 1, 3);
        assert!(matches!(
            run_simulation(&cfg),
            Err(SimError::InvalidConfig(_))
        ));
        cfg = uniform_cfg(10, 4, 0, 3);
        assert!(matches!(
            run_simulation(&cfg),
            Err(SimError::InvalidConfig(_))
        ));
        cfg = SimConfig {
            quality_dist: QualityDistribution::from_moments(1.0, 5.0, 3.0, 1.0).unwrap(),
            ..uniform_cfg(10, 4, 1, 3)
        };
        assert!(matches!(
            run_simulation(&cfg),
            Err(SimError::InvalidConfig(_))
        ));
        cfg = SimConfig {
            quality_dist: QualityDistribution::uniform(0.0, 10.0).unwrap(),
            ..uniform_cfg(10, 4, 1, 3)
        };
        assert!(matches!(
            run_simulation(&cfg),
            Err(SimError::InvalidConfig(_))
        ));
    }
}
