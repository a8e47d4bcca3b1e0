//! Sequential measurement chains for the equal-overlap family.
//!
//! A chain plan fixes the overlap ladder `t⁽⁰⁾ = s <= t⁽¹⁾ <= ... <= t⁽ᴹ⁾ = 1`
//! and the per-stage failure probabilities `q⁽ˡ⁾ = t⁽ˡ⁻¹⁾/t⁽ˡ⁾`. Every
//! intermediate observer deliberately under-measures so information remains
//! for the next one; the last observer measures optimally, which pins
//! `t⁽ᴹ⁾ = 1`. The stage failures telescope: their product is `s`, whatever
//! the ladder, so the all-success probability `Π (1-q⁽ˡ⁾)` depends on the
//! split but never on the dimension.
//!
//! Simulation is by exact ray propagation: each trial tracks the actual
//! state vector, samples every stage from the operator sandwiches, and
//! hands the normalized post-measurement state to the next stage. Trials
//! are embarrassingly parallel; each one draws from its own counter-based
//! sub-stream keyed by `(seed, trial index)`, so results are reproducible
//! regardless of scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{sample_index, RngStream};
use crate::states::{build_equal_overlap, StateFamily};
use crate::usd::{build_measurement_with_post_overlap, UsdMeasurement};

/// Overlap schedule and stage failure probabilities for an M-observer chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainPlan {
    n: usize,
    s: f64,
    /// `t⁽⁰⁾ .. t⁽ᴹ⁾`, starting at `s` and ending at 1.
    overlaps: Vec<f64>,
    /// `q⁽¹⁾ .. q⁽ᴹ⁾`.
    stage_failures: Vec<f64>,
}

impl ChainPlan {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Number of observers M.
    pub fn observers(&self) -> usize {
        self.stage_failures.len()
    }

    /// The full ladder `t⁽⁰⁾..t⁽ᴹ⁾` (length M+1).
    pub fn overlaps(&self) -> &[f64] {
        &self.overlaps
    }

    pub fn stage_failures(&self) -> &[f64] {
        &self.stage_failures
    }
}

/// Plan with every stage sharing the same failure probability
/// `w = s^(1/M)`, so `t⁽ˡ⁾ = s^((M-l)/M)`.
pub fn plan_equal_split(n: usize, s: f64, observers: usize) -> Result<ChainPlan> {
    validate_chain_params(n, s, observers)?;
    let mf = observers as f64;
    let overlaps: Vec<f64> = (0..=observers)
        .map(|l| s.powf((mf - l as f64) / mf))
        .collect();
    plan_from_ladder(n, s, overlaps)
}

/// Plan from an explicit ladder of post-measurement overlaps
/// `t⁽¹⁾..t⁽ᴹ⁾`; the list must be monotone nondecreasing, start at or above
/// `s`, and end at exactly 1.
pub fn plan_custom(n: usize, s: f64, post_overlaps: &[f64]) -> Result<ChainPlan> {
    validate_chain_params(n, s, post_overlaps.len())?;
    let mut overlaps = Vec::with_capacity(post_overlaps.len() + 1);
    overlaps.push(s);
    overlaps.extend_from_slice(post_overlaps);
    let last = *overlaps.last().expect("nonempty");
    if (last - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidPlan(format!(
            "final overlap must be 1 (optimal last measurement), got {last}"
        )));
    }
    *overlaps.last_mut().expect("nonempty") = 1.0;
    for window in overlaps.windows(2) {
        if window[1] < window[0] || window[1] > 1.0 {
            return Err(Error::InvalidPlan(format!(
                "overlap ladder must be monotone within [s, 1], got {} after {}",
                window[1], window[0]
            )));
        }
    }
    plan_from_ladder(n, s, overlaps)
}

fn validate_chain_params(n: usize, s: f64, observers: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidSpec(format!(
            "need at least 2 states, got {n}"
        )));
    }
    if !(0.0..1.0).contains(&s) {
        return Err(Error::InvalidSpec(format!(
            "overlap s must be in [0,1), got {s}"
        )));
    }
    if observers == 0 {
        return Err(Error::InvalidPlan("need at least one observer".into()));
    }
    Ok(())
}

fn plan_from_ladder(n: usize, s: f64, overlaps: Vec<f64>) -> Result<ChainPlan> {
    let stage_failures: Vec<f64> = overlaps
        .windows(2)
        .map(|w| if w[0] == 0.0 { 0.0 } else { w[0] / w[1] })
        .collect();
    Ok(ChainPlan {
        n,
        s,
        overlaps,
        stage_failures,
    })
}

/// Probability that every observer in the chain succeeds:
/// `Π_{l=1..M} (1 - q⁽ˡ⁾)`.
pub fn exact_success(plan: &ChainPlan) -> f64 {
    plan.stage_failures.iter().map(|q| 1.0 - q).product()
}

/// Builds the input family and the per-stage measurements realizing a plan.
/// Stage `l` consumes the post-family of stage `l-1`; the final stage is
/// terminal (`t = 1`).
pub fn build_stage_measurements(plan: &ChainPlan) -> Result<(StateFamily, Vec<UsdMeasurement>)> {
    let family = build_equal_overlap(plan.n, plan.s)?;
    let mut measurements = Vec::with_capacity(plan.observers());
    let mut current = family.clone();
    for (stage, q) in plan.stage_failures.iter().enumerate() {
        let meas = build_measurement_with_post_overlap(&current, *q, plan.overlaps[stage + 1])?;
        current = meas.post_family().clone();
        measurements.push(meas);
    }
    Ok((family, measurements))
}

/// Tallies from a Monte Carlo chain run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainRunStats {
    pub trials: u64,
    pub seed: u64,
    /// Trials on which stage `l` (0-based) returned a conclusive outcome.
    pub per_stage_success: Vec<u64>,
    /// Trials on which every stage succeeded.
    pub all_success: u64,
    /// Conclusive outcomes that disagreed with the sent index. Always zero
    /// without an eavesdropper; kept as an explicit end-to-end check.
    pub mislabels: u64,
    /// Trials per sent state (1-based index maps to entry index-1).
    pub per_state_sent: Vec<u64>,
    /// All-success counts per sent state.
    pub per_state_all_success: Vec<u64>,
}

impl ChainRunStats {
    pub fn all_success_rate(&self) -> f64 {
        self.all_success as f64 / self.trials as f64
    }

    pub fn stage_success_rate(&self, stage: usize) -> f64 {
        self.per_stage_success[stage] as f64 / self.trials as f64
    }
}

#[derive(Clone)]
struct Tally {
    per_stage_success: Vec<u64>,
    all_success: u64,
    mislabels: u64,
    per_state_sent: Vec<u64>,
    per_state_all_success: Vec<u64>,
}

impl Tally {
    fn new(stages: usize, n: usize) -> Self {
        Self {
            per_stage_success: vec![0; stages],
            all_success: 0,
            mislabels: 0,
            per_state_sent: vec![0; n],
            per_state_all_success: vec![0; n],
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self
            .per_stage_success
            .iter_mut()
            .zip(&other.per_stage_success)
        {
            *a += b;
        }
        self.all_success += other.all_success;
        self.mislabels += other.mislabels;
        for (a, b) in self.per_state_sent.iter_mut().zip(&other.per_state_sent) {
            *a += b;
        }
        for (a, b) in self
            .per_state_all_success
            .iter_mut()
            .zip(&other.per_state_all_success)
        {
            *a += b;
        }
        self
    }
}

/// Runs `trials` independent chain transmissions.
///
/// `input_weights`, when given, must hold one nonnegative weight per state;
/// the default is the uniform distribution.
pub fn simulate_chain(
    plan: &ChainPlan,
    input_weights: Option<&[f64]>,
    trials: u64,
    seed: u64,
) -> Result<ChainRunStats> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let weights = input_distribution(plan.n, input_weights)?;
    let (family, measurements) = build_stage_measurements(plan)?;
    let stages = measurements.len();
    let root = RngStream::from_seed(seed);

    let tally = (0..trials)
        .into_par_iter()
        .fold(
            || Tally::new(stages, plan.n),
            |mut acc, trial| {
                let mut rng = root.substream(trial);
                let sent = sample_index(&weights, rng.next_f64());
                acc.per_state_sent[sent] += 1;

                let mut state = family.vector(sent).to_vec();
                let mut all_ok = true;
                for (stage, meas) in measurements.iter().enumerate() {
                    let outcome = meas.measure_state(&state, &mut rng);
                    if outcome.label == 0 {
                        all_ok = false;
                    } else {
                        acc.per_stage_success[stage] += 1;
                        if outcome.label != sent + 1 {
                            acc.mislabels += 1;
                        }
                    }
                    state = outcome.post_state;
                }
                if all_ok {
                    acc.all_success += 1;
                    acc.per_state_all_success[sent] += 1;
                }
                acc
            },
        )
        .reduce(|| Tally::new(stages, plan.n), Tally::merge);

    Ok(ChainRunStats {
        trials,
        seed,
        per_stage_success: tally.per_stage_success,
        all_success: tally.all_success,
        mislabels: tally.mislabels,
        per_state_sent: tally.per_state_sent,
        per_state_all_success: tally.per_state_all_success,
    })
}

fn input_distribution(n: usize, input_weights: Option<&[f64]>) -> Result<Vec<f64>> {
    match input_weights {
        None => Ok(vec![1.0; n]),
        Some(w) => {
            if w.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: w.len(),
                });
            }
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::InvalidParameter(
                    "input weights must be finite and nonnegative".into(),
                ));
            }
            if w.iter().sum::<f64>() <= 0.0 {
                return Err(Error::InvalidParameter("input weights sum to zero".into()));
            }
            Ok(w.to_vec())
        }
    }
}
