//! Photon-by-photon simulation of the experiment.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`). Photons are
//! grouped into fixed blocks of [`PHOTONS_PER_STREAM`] consecutive indices and
//! block `k` draws from stream `k` of the generator seeded with the run seed,
//! so a batch is a pure function of its configuration whatever the number of
//! worker threads.
//!
//! Postselection is modelled as photon loss: each emitted photon passes the
//! analyzer with the postselection probability, and only then is its screen
//! position drawn. Postselected positions are drawn by inverting the exact
//! CDF with bracketed bisection.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{ProbeDistribution, ProbeKind};
use crate::error::{Error, Result};
use crate::hypothesis::{Decision, DecisionRule};
use crate::numerics::{find_root, Tolerance};
use crate::optics::{ExperimentSetup, ShiftPair};

pub const PHOTONS_PER_STREAM: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Nps,
    Ps,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub setup: ExperimentSetup,
    pub shifts: ShiftPair,
    pub rule: DecisionRule,
    pub n_emitted: u64,
    pub seed: u64,
    pub mode: Mode,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        self.setup.validate()?;
        if self.n_emitted == 0 {
            return Err(Error::InvalidParameter {
                field: "n_emitted",
                reason: "must be >= 1".into(),
            });
        }
        Ok(())
    }
}

/// Detected photons of one run. Positions are adjusted (`y − gλ₊`).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub mode: Mode,
    pub seed: u64,
    pub n_emitted: u64,
    /// Emission index of each detected photon, increasing.
    pub photon_indices: Vec<u64>,
    pub positions: Vec<f64>,
    /// Detected photons for which the configured rule rejects H₀.
    pub n_rejected_h0: u64,
}

impl SampleBatch {
    pub fn n_detected(&self) -> u64 {
        self.positions.len() as u64
    }

    pub fn detection_fraction(&self) -> f64 {
        self.n_detected() as f64 / self.n_emitted as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalPower {
    pub estimate: f64,
    pub std_error: f64,
    pub n_detected: u64,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `per_photon` over every emitted photon, block-parallel, and gathers
/// the detected `(index, adjusted position)` pairs in emission order.
fn run_blocks<F>(n_emitted: u64, seed: u64, per_photon: F) -> Vec<(u64, f64)>
where
    F: Fn(&mut ChaCha8Rng) -> Option<f64> + Sync,
{
    let n_blocks = n_emitted.div_ceil(PHOTONS_PER_STREAM);
    let blocks: Vec<Vec<(u64, f64)>> = (0..n_blocks)
        .into_par_iter()
        .map(|block| {
            let mut rng = stream_rng(seed, block);
            let start = block * PHOTONS_PER_STREAM;
            let end = (start + PHOTONS_PER_STREAM).min(n_emitted);
            (start..end)
                .filter_map(|i| per_photon(&mut rng).map(|y| (i, y)))
                .collect()
        })
        .collect();
    blocks.into_iter().flatten().collect()
}

fn assemble(config: &SimulationConfig, detected: Vec<(u64, f64)>) -> SampleBatch {
    let w0 = config.setup.beam_waist_um;
    let (photon_indices, positions): (Vec<u64>, Vec<f64>) = detected.into_iter().unzip();
    let n_rejected_h0 = positions
        .iter()
        .filter(|&&y| config.rule.decide(y, w0) == Decision::RejectNull)
        .count() as u64;
    SampleBatch {
        mode: config.mode,
        seed: config.seed,
        n_emitted: config.n_emitted,
        photon_indices,
        positions,
        n_rejected_h0,
    }
}

/// Without the analyzer: every photon is detected, in branch H with
/// probability `cos²α`, at `N(gλ_branch, w₀²)`.
pub fn sample_nps(config: &SimulationConfig) -> Result<SampleBatch> {
    config.validate()?;
    if config.mode != Mode::Nps {
        return Err(Error::Domain(
            "sample_nps called with a postselected configuration".into(),
        ));
    }
    let w0 = config.setup.beam_waist_um;
    let weight_h = config.setup.alpha.cos().powi(2);
    let shifts = config.shifts;
    let plus = shifts.g_lambda_plus();
    let detected = run_blocks(config.n_emitted, config.seed, |rng| {
        let center = if rng.random::<f64>() < weight_h {
            shifts.shift_h
        } else {
            shifts.shift_v
        };
        let z: f64 = rng.sample(StandardNormal);
        Some(center + w0 * z - plus)
    });
    Ok(assemble(config, detected))
}

/// With the analyzer: Bernoulli survival, then an exact draw from the
/// postselected density.
pub fn sample_ps(config: &SimulationConfig) -> Result<SampleBatch> {
    config.validate()?;
    if config.mode != Mode::Ps {
        return Err(Error::Domain(
            "sample_ps called with an unpostselected configuration".into(),
        ));
    }
    let density = ProbeDistribution::new(ProbeKind::Ps, config.setup, config.shifts)?;
    let acceptance = density.acceptance();
    let plus = config.shifts.g_lambda_plus();
    let (lo, hi) = density.window();
    let tol = Tolerance {
        abs_tol: 1e-12,
        rel_tol: 0.0,
        max_iterations: 200,
    };
    let detected = run_blocks(config.n_emitted, config.seed, |rng| {
        if rng.random::<f64>() >= acceptance {
            return None;
        }
        let u: f64 = rng.random();
        let y = find_root(|y| density.cdf(y) - u, lo, hi, tol).expect("CDF spans [0, 1] over the density window");
        Some(y - plus)
    });
    Ok(assemble(config, detected))
}

pub fn simulate(config: &SimulationConfig) -> Result<SampleBatch> {
    match config.mode {
        Mode::Nps => sample_nps(config),
        Mode::Ps => sample_ps(config),
    }
}

/// Fraction of detected photons for which `rule` rejects H₀, with its
/// binomial standard error.
pub fn empirical_power(batch: &SampleBatch, w0: f64, rule: &DecisionRule) -> Result<EmpiricalPower> {
    let n = batch.n_detected();
    if n == 0 {
        return Err(Error::EmptyBatch {
            n_emitted: batch.n_emitted,
        });
    }
    let rejected = batch
        .positions
        .iter()
        .filter(|&&y| rule.decide(y, w0) == Decision::RejectNull)
        .count();
    let estimate = rejected as f64 / n as f64;
    let std_error = (estimate * (1.0 - estimate) / n as f64).sqrt();
    Ok(EmpiricalPower {
        estimate,
        std_error,
        n_detected: n,
    })
}

/// Either a usable batch or the "nothing passed the analyzer" outcome.
#[derive(Debug, Clone, PartialEq)]
pub enum SimulationOutcome {
    Detected { batch: SampleBatch, power: EmpiricalPower },
    NoData { n_emitted: u64, acceptance: f64 },
}

/// Simulate and estimate the power, folding both ways of getting no photons
/// (vanishing acceptance, or an empty draw) into [`SimulationOutcome::NoData`].
pub fn run(config: &SimulationConfig) -> Result<SimulationOutcome> {
    let batch = match simulate(config) {
        Ok(batch) => batch,
        Err(Error::DegeneratePostselection { probability }) => {
            return Ok(SimulationOutcome::NoData {
                n_emitted: config.n_emitted,
                acceptance: probability,
            })
        }
        Err(e) => return Err(e),
    };
    match empirical_power(&batch, config.setup.beam_waist_um, &config.rule) {
        Ok(power) => Ok(SimulationOutcome::Detected { batch, power }),
        Err(Error::EmptyBatch { n_emitted }) => {
            let acceptance = match config.mode {
                Mode::Nps => 1.0,
                Mode::Ps => crate::distributions::postselection_probability(&config.setup, &config.shifts),
            };
            Ok(SimulationOutcome::NoData { n_emitted, acceptance })
        }
        Err(e) => Err(e),
    }
}

/// One row per emitted photon: `photon_index,detected,y_adjusted_um,decision`.
/// Undetected photons leave the last two cells empty.
pub fn write_batch_csv<W: Write>(batch: &SampleBatch, w0: f64, rule: &DecisionRule, mut out: W) -> std::io::Result<()> {
    writeln!(out, "photon_index,detected,y_adjusted_um,decision")?;
    let mut detected = batch.photon_indices.iter().zip(&batch.positions).peekable();
    for i in 0..batch.n_emitted {
        match detected.peek() {
            Some((&idx, &y)) if idx == i => {
                writeln!(out, "{i},1,{y},{}", rule.decide(y, w0).as_bit())?;
                detected.next();
            }
            _ => writeln!(out, "{i},0,,")?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::postselection_probability;
    use crate::hypothesis::{power_nps, power_ps};
    use crate::numerics::erf;
    use crate::optics::Case;

    fn config(case: Case, mode: Mode, n: u64, seed: u64) -> SimulationConfig {
        SimulationConfig {
            setup: ExperimentSetup::reference_case(case),
            shifts: ShiftPair::new(67.92, 67.28),
            rule: DecisionRule::new(1.0).unwrap(),
            n_emitted: n,
            seed,
            mode,
        }
    }

    #[test]
    fn nps_pure_h_branch_mean() {
        let mut cfg = config(Case::A, Mode::Nps, 100_000, 7);
        cfg.setup = cfg.setup.with_angles(0.0, 0.0);
        let batch = sample_nps(&cfg).unwrap();
        assert_eq!(batch.n_detected(), batch.n_emitted);
        let mean = batch.positions.iter().sum::<f64>() / batch.positions.len() as f64;
        let tol = 4.0 * 55.0 / (100_000f64).sqrt();
        assert!((mean - 0.32).abs() < tol, "{mean}");
    }

    #[test]
    fn nps_size_under_h0() {
        let mut cfg = config(Case::A, Mode::Nps, 100_000, 11);
        cfg.shifts = ShiftPair::new(67.6, 67.6);
        let batch = sample_nps(&cfg).unwrap();
        let est = empirical_power(&batch, 55.0, &cfg.rule).unwrap();
        let size = 1.0 - erf(1.0 / std::f64::consts::SQRT_2);
        let sigma = (size * (1.0 - size) / 100_000.0).sqrt();
        assert!((est.estimate - size).abs() < 3.0 * sigma);
        assert!((est.estimate - power_nps(0.0, 55.0, &cfg.rule)).abs() < 3.0 * sigma);
    }

    #[test]
    fn batches_are_deterministic() {
        let cfg = config(Case::B, Mode::Ps, 300_000, 42);
        let a = sample_ps(&cfg).unwrap();
        let b = sample_ps(&cfg).unwrap();
        assert_eq!(a.photon_indices, b.photon_indices);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.positions), bits(&b.positions));
        let c = sample_ps(&SimulationConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.photon_indices, c.photon_indices);
    }

    #[test]
    fn mode_mismatch_is_rejected() {
        assert!(sample_ps(&config(Case::B, Mode::Nps, 10, 1)).is_err());
        assert!(sample_nps(&config(Case::B, Mode::Ps, 10, 1)).is_err());
        assert!(simulate(&config(Case::B, Mode::Ps, 0, 1)).is_err());
    }

    #[test]
    fn case_b_power_within_three_sigma() {
        let cfg = config(Case::B, Mode::Ps, 1_000_000, 3);
        let batch = sample_ps(&cfg).unwrap();
        let p = postselection_probability(&cfg.setup, &cfg.shifts);
        let n = cfg.n_emitted as f64;
        let count_sigma = (n * p * (1.0 - p)).sqrt();
        assert!((batch.n_detected() as f64 - n * p).abs() < 3.0 * count_sigma);
        let analytic = power_ps(0.32, &cfg.setup, &cfg.rule).unwrap();
        let est = empirical_power(&batch, 55.0, &cfg.rule).unwrap();
        let sigma = (analytic * (1.0 - analytic) / est.n_detected as f64).sqrt();
        assert!((est.estimate - analytic).abs() < 3.0 * sigma);
    }

    #[test]
    fn empirical_power_edge_batches() {
        let rule = DecisionRule::new(1.0).unwrap();
        let mut batch = SampleBatch {
            mode: Mode::Nps,
            seed: 0,
            n_emitted: 3,
            photon_indices: vec![0, 1, 2],
            positions: vec![0.0; 3],
            n_rejected_h0: 0,
        };
        let e = empirical_power(&batch, 55.0, &rule).unwrap();
        assert_eq!((e.estimate, e.std_error), (0.0, 0.0));
        batch.positions = vec![55.0, -60.0, 1e3];
        let e = empirical_power(&batch, 55.0, &rule).unwrap();
        assert_eq!((e.estimate, e.std_error), (1.0, 0.0));
        batch.positions.clear();
        batch.photon_indices.clear();
        assert!(matches!(
            empirical_power(&batch, 55.0, &rule),
            Err(Error::EmptyBatch { n_emitted: 3 })
        ));
    }

    #[test]
    fn crossed_h0_is_no_data() {
        let mut cfg = config(Case::C, Mode::Ps, 1000, 5);
        cfg.shifts = ShiftPair::new(67.6, 67.6);
        assert!(matches!(sample_ps(&cfg), Err(Error::DegeneratePostselection { .. })));
        match run(&cfg).unwrap() {
            SimulationOutcome::NoData { n_emitted, acceptance } => {
                assert_eq!(n_emitted, 1000);
                assert_eq!(acceptance, 0.0);
            }
            other => panic!("expected no data, got {other:?}"),
        }
    }

    #[test]
    fn csv_lists_every_emitted_photon() {
        let cfg = config(Case::C, Mode::Ps, 200_000, 9);
        let batch = sample_ps(&cfg).unwrap();
        assert!(batch.n_detected() > 0);
        let mut buf = Vec::new();
        write_batch_csv(&batch, 55.0, &cfg.rule, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len() as u64, cfg.n_emitted + 1);
        let detected = lines[1..].iter().filter(|l| l.split(',').nth(1) == Some("1")).count();
        assert_eq!(detected as u64, batch.n_detected());
        let first = batch.photon_indices[0] as usize;
        assert!(lines[first + 1].starts_with(&format!("{first},1,")));
    }
}
