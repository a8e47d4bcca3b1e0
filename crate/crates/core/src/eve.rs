//! Minimum-error measurement and the intercept-resend attack.
//!
//! For the equal-overlap family the minimum-error strategy is the
//! square-root measurement: with `ρ = (1/N) Σ |η_j⟩⟨η_j|`, the elements
//! `Π_j = (1/N)·ρ^{-1/2}|η_j⟩⟨η_j|ρ^{-1/2}` are rank-one projectors onto the
//! orthonormal vectors `γ_j = ρ^{-1/2}η_j/√N`. The average success
//! probability has the closed form
//! `(1/N²)(sqrt(1+(N-1)s) + (N-1)·sqrt(1-s))²`, which decreases with N and
//! approaches `1-s` from above.
//!
//! The attack model: Eve captures the carrier on one link of a measurement
//! chain, applies the square-root measurement for the family in flight on
//! that link, re-prepares the state her outcome names, and forwards it.
//! Downstream unambiguous measurements can then return conclusive but wrong
//! labels, which is what the legitimate parties test for. Exact outcome
//! probabilities are computed from the constructed operators alongside the
//! Monte Carlo tallies, so nothing rests on sampling alone.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{build_stage_measurements, ChainPlan};
use crate::error::{Error, Result};
use crate::matrix::{self, Matrix, SymMatrix, DEFAULT_RANK_TOL};
use crate::rng::{sample_index, RngStream};
use crate::states::{OverlapSpec, StateFamily};
use crate::usd::UsdMeasurement;

/// The square-root (minimum-error) measurement for an equal-overlap family.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinErrorMeasurement {
    gammas: Vec<Vec<f64>>,
    projectors: Vec<SymMatrix>,
    rho: SymMatrix,
    success_prob: f64,
}

impl MinErrorMeasurement {
    /// Orthonormal measurement vectors `γ_j`.
    pub fn gammas(&self) -> &[Vec<f64>] {
        &self.gammas
    }

    /// Rank-one projectors `|γ_j⟩⟨γ_j|`, one per label.
    pub fn projectors(&self) -> &[SymMatrix] {
        &self.projectors
    }

    /// The ensemble average state `ρ`.
    pub fn rho(&self) -> &SymMatrix {
        &self.rho
    }

    /// Average probability of naming the prepared state correctly.
    pub fn success_prob(&self) -> f64 {
        self.success_prob
    }

    /// Outcome distribution for an arbitrary state, normalized over the
    /// family span.
    pub fn outcome_probabilities(&self, state: &[f64]) -> Vec<f64> {
        let mut probs: Vec<f64> = self
            .projectors
            .iter()
            .map(|p| p.quad_form(state).max(0.0))
            .collect();
        let total: f64 = probs.iter().sum();
        if total > 0.0 {
            for p in &mut probs {
                *p /= total;
            }
        }
        probs
    }

    /// Samples a label (1-based) for the given state.
    pub fn measure_state(&self, state: &[f64], rng: &mut RngStream) -> usize {
        let probs = self.outcome_probabilities(state);
        sample_index(&probs, rng.next_f64()) + 1
    }
}

/// Builds the square-root measurement for an equal-overlap family.
pub fn build_sqrt_measurement(family: &StateFamily) -> Result<MinErrorMeasurement> {
    let OverlapSpec::Equal { n, s } = *family.spec() else {
        return Err(Error::Unsupported(
            "square-root measurement is implemented for equal-overlap families".into(),
        ));
    };
    if !family.is_linearly_independent()? {
        return Err(Error::SingularGram {
            min_eigenvalue: family.gram_min_eigenvalue()?,
        });
    }
    let ambient = family.ambient_dim();
    let nf = n as f64;

    let mut rho_accum = Matrix::zeros(ambient, ambient);
    for eta in family.vectors() {
        rho_accum.add_assign(&Matrix::outer(eta, eta).scaled(1.0 / nf));
    }
    let rho = SymMatrix::symmetrized(&rho_accum)?;

    // spectral sanity: one eigenvalue (1+(N-1)s)/N above the (N-1)-fold
    // (1-s)/N (plus zeros if the ambient space is larger than the span)
    let eig = rho.sym_eigen()?;
    let lo = (1.0 - s) / nf;
    let hi = (1.0 + (nf - 1.0) * s) / nf;
    let nonzero: Vec<f64> = eig
        .eigenvalues
        .iter()
        .copied()
        .filter(|l| *l > 1e-10)
        .collect();
    if nonzero.len() != n
        || (nonzero[n - 1] - hi).abs() > 1e-10
        || nonzero[..n - 1].iter().any(|l| (l - lo).abs() > 1e-10)
    {
        return Err(Error::InvalidSpec(format!(
            "ensemble state spectrum does not match the equal-overlap structure: {nonzero:?}"
        )));
    }

    let inv_sqrt = rho.inv_sqrt_psd(DEFAULT_RANK_TOL)?;
    let mut gammas = Vec::with_capacity(n);
    let mut projectors = Vec::with_capacity(n);
    let mut success = 0.0;
    for eta in family.vectors() {
        let gamma: Vec<f64> = inv_sqrt.matvec(eta).iter().map(|x| x / nf.sqrt()).collect();
        let overlap = matrix::dot(&gamma, eta);
        success += overlap * overlap / nf;
        projectors.push(SymMatrix::from_fn(ambient, |i, j| gamma[i] * gamma[j]));
        gammas.push(gamma);
    }

    Ok(MinErrorMeasurement {
        gammas,
        projectors,
        rho,
        success_prob: success,
    })
}

/// Closed-form success probability of the square-root measurement:
/// `(1/N²)·(sqrt(1+(N-1)s) + (N-1)·sqrt(1-s))²`.
pub fn eve_success(n: usize, s: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidSpec(format!(
            "need at least 2 states, got {n}"
        )));
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidParameter(format!(
            "overlap s must be in [0,1], got {s}"
        )));
    }
    let nf = n as f64;
    let root = (1.0 + (nf - 1.0) * s).sqrt() + (nf - 1.0) * (1.0 - s).sqrt();
    Ok(root * root / (nf * nf))
}

/// Exact and sampled statistics of one intercept-resend experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackStats {
    pub trials: u64,
    pub seed: u64,
    /// Link index Eve taps (0 = between the sender and the first observer);
    /// `None` is the eavesdropper-free control run.
    pub link: Option<usize>,
    /// Trials on which Eve's label matched the sent state.
    pub eve_successes: u64,
    /// Exact probability of the above, from the constructed operators.
    pub eve_success_exact: f64,
    /// Conclusive outcomes per stage.
    pub stage_conclusive: Vec<u64>,
    /// Conclusive-but-wrong outcomes per stage.
    pub stage_errors: Vec<u64>,
    /// Exact per-stage conclusive probabilities.
    pub stage_conclusive_exact: Vec<f64>,
    /// Exact per-stage conclusive-error probabilities.
    pub stage_error_exact: Vec<f64>,
    /// Trials with at least one conclusive-but-wrong outcome downstream.
    pub trials_with_errors: u64,
}

impl AttackStats {
    pub fn eve_success_rate(&self) -> f64 {
        self.eve_successes as f64 / self.trials as f64
    }

    pub fn stage_error_rate(&self, stage: usize) -> f64 {
        self.stage_errors[stage] as f64 / self.trials as f64
    }

    pub fn total_errors(&self) -> u64 {
        self.stage_errors.iter().sum()
    }
}

/// Runs the intercept-resend experiment on an equal-overlap chain.
///
/// `link` picks where Eve sits: `Some(l)` intercepts the carrier between
/// stage `l` and stage `l+1` (0 = before the first observer); `None` runs
/// the clean chain through the same machinery as a control.
pub fn intercept_resend_sim(
    plan: &ChainPlan,
    link: Option<usize>,
    trials: u64,
    seed: u64,
) -> Result<AttackStats> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    if let Some(l) = link {
        if l >= plan.observers() {
            return Err(Error::InvalidParameter(format!(
                "invalid link index {l}: chain has {} observers",
                plan.observers()
            )));
        }
    }
    let (family, measurements) = build_stage_measurements(plan)?;
    let eve = match link {
        None => None,
        Some(l) => {
            let link_family = if l == 0 {
                &family
            } else {
                measurements[l - 1].post_family()
            };
            Some((l, build_sqrt_measurement(link_family)?, link_family.clone()))
        }
    };

    let exact = exact_attack_probabilities(&family, &measurements, eve.as_ref());
    let n = plan.n();
    let stages = measurements.len();
    let root = RngStream::from_seed(seed);

    let tally = (0..trials)
        .into_par_iter()
        .fold(
            || AttackTally::new(stages),
            |mut acc, trial| {
                let mut rng = root.substream(trial);
                let sent = sample_index(&vec![1.0; n], rng.next_f64());
                let mut state = family.vector(sent).to_vec();
                let mut any_error = false;
                for (stage, meas) in measurements.iter().enumerate() {
                    if let Some((l, eve_meas, link_family)) = eve.as_ref() {
                        if *l == stage {
                            let label = eve_meas.measure_state(&state, &mut rng);
                            if label == sent + 1 {
                                acc.eve_successes += 1;
                            }
                            state = link_family.vector(label - 1).to_vec();
                        }
                    }
                    let outcome = meas.measure_state(&state, &mut rng);
                    if outcome.label != 0 {
                        acc.stage_conclusive[stage] += 1;
                        if outcome.label != sent + 1 {
                            acc.stage_errors[stage] += 1;
                            any_error = true;
                        }
                    }
                    state = outcome.post_state;
                }
                if any_error {
                    acc.trials_with_errors += 1;
                }
                acc
            },
        )
        .reduce(|| AttackTally::new(stages), AttackTally::merge);

    Ok(AttackStats {
        trials,
        seed,
        link,
        eve_successes: tally.eve_successes,
        eve_success_exact: exact.eve_success,
        stage_conclusive: tally.stage_conclusive,
        stage_errors: tally.stage_errors,
        stage_conclusive_exact: exact.stage_conclusive,
        stage_error_exact: exact.stage_error,
        trials_with_errors: tally.trials_with_errors,
    })
}

#[derive(Clone)]
struct AttackTally {
    eve_successes: u64,
    stage_conclusive: Vec<u64>,
    stage_errors: Vec<u64>,
    trials_with_errors: u64,
}

impl AttackTally {
    fn new(stages: usize) -> Self {
        Self {
            eve_successes: 0,
            stage_conclusive: vec![0; stages],
            stage_errors: vec![0; stages],
            trials_with_errors: 0,
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.eve_successes += other.eve_successes;
        for (a, b) in self
            .stage_conclusive
            .iter_mut()
            .zip(&other.stage_conclusive)
        {
            *a += b;
        }
        for (a, b) in self.stage_errors.iter_mut().zip(&other.stage_errors) {
            *a += b;
        }
        self.trials_with_errors += other.trials_with_errors;
        self
    }
}

struct ExactAttack {
    eve_success: f64,
    stage_conclusive: Vec<f64>,
    stage_error: Vec<f64>,
}

/// Forward-propagates exact outcome probabilities through the chain using
/// operator sandwiches. Every carrier in flight is a member of the current
/// stage's input family whatever the earlier outcomes were (the detection
/// operators map `η_b` onto `φ_b` for success and failure alike), so a
/// branch is identified by its family index; Eve's measurement is the only
/// point where branches split.
fn exact_attack_probabilities(
    family: &StateFamily,
    measurements: &[UsdMeasurement],
    eve: Option<&(usize, MinErrorMeasurement, StateFamily)>,
) -> ExactAttack {
    let n = family.len();
    let stages = measurements.len();
    let mut stage_conclusive = vec![0.0; stages];
    let mut stage_error = vec![0.0; stages];
    let mut eve_success = 0.0;

    for sent in 0..n {
        // (probability weight, index into the stage input family)
        let mut branches: Vec<(f64, usize)> = vec![(1.0 / n as f64, sent)];
        for (stage, meas) in measurements.iter().enumerate() {
            if let Some((l, eve_meas, link_family)) = eve {
                if *l == stage {
                    let mut split = Vec::with_capacity(branches.len() * n);
                    for (weight, idx) in &branches {
                        let probs = eve_meas.outcome_probabilities(link_family.vector(*idx));
                        for (label, p) in probs.iter().enumerate() {
                            if *p == 0.0 {
                                continue;
                            }
                            if label == sent {
                                eve_success += weight * p;
                            }
                            split.push((weight * p, label));
                        }
                    }
                    branches = split;
                }
            }
            for (weight, idx) in &branches {
                let state = meas.input_family().vector(*idx);
                let probs = meas.outcome_probabilities(state);
                let conclusive: f64 = probs[1..].iter().sum();
                stage_conclusive[stage] += *weight * conclusive;
                // unambiguity confines conclusive labels to the branch index;
                // any label other than the sent one counts as an error
                for (label, p) in probs.iter().enumerate().skip(1) {
                    if label != sent + 1 {
                        stage_error[stage] += *weight * p;
                    }
                }
            }
        }
    }

    ExactAttack {
        eve_success,
        stage_conclusive,
        stage_error,
    }
}
