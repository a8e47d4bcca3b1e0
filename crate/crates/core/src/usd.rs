//! Unambiguous discrimination of the equal-overlap family.
//!
//! For N states `η_j` with pairwise overlap `s`, the detection elements are
//! `Π_j = c·|η⊥_j⟩⟨η⊥_j|` with a common constant `c`, and `Π_0 = I - Σ Π_j`
//! is the failure element. `Π_0` stays positive exactly when the failure
//! probability `q = 1 - c·r` satisfies `q >= s`, where
//! `r = ⟨η_j|η⊥_j⟩²`.
//!
//! The detection operators are chosen as `A_j = sqrt(c)·|φ_j⟩⟨η⊥_j|`, where
//! the post-measurement states `φ_j` form an equal-overlap family with
//! overlap `t`. Consistency of the failure operator forces `q·t = s`, so a
//! measurement that fails more often leaves more distinguishable states
//! behind; `t = 1` is the terminal, fully extracting choice.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{self, Matrix, SymMatrix};
use crate::rng::{sample_index, RngStream};
use crate::states::{self, reciprocal_closed_form, OverlapSpec, StateFamily, GRAM_SINGULAR_TOL};

/// Largest admissible detection constant: `(1+s(N-2)) / (1+s(N-1))`.
pub fn max_c(n: usize, s: f64) -> Result<f64> {
    OverlapSpec::equal(n, s)?;
    let nf = n as f64;
    Ok((1.0 + s * (nf - 2.0)) / (1.0 + s * (nf - 1.0)))
}

/// Failure probability at detection constant `c`:
/// `q = 1 - c·(1-s)(1+(N-1)s) / (1+(N-2)s)`. At `c = max_c` this equals `s`.
pub fn failure_prob_from_c(n: usize, s: f64, c: f64) -> Result<f64> {
    let cmax = max_c(n, s)?;
    if !(0.0..=cmax + 1e-12).contains(&c) {
        return Err(Error::InvalidParameter(format!(
            "detection constant c={c} outside [0, {cmax}]"
        )));
    }
    let r = states::reciprocal_equal_closed_form(n, s)?.r;
    Ok(1.0 - c * r)
}

/// An equal-overlap USD measurement: POVM elements `Π_0..Π_N` (0 is the
/// failure outcome), detection operators `A_0..A_N`, the input family and
/// the post-measurement family it maps onto.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UsdMeasurement {
    input_family: StateFamily,
    post_family: StateFamily,
    /// POVM elements indexed by outcome; index 0 is failure.
    povm: Vec<SymMatrix>,
    /// Detection (Kraus) operators matching `povm` index for index.
    kraus: Vec<Matrix>,
    c: f64,
    q: f64,
    t: f64,
    terminal: bool,
}

impl UsdMeasurement {
    pub fn input_family(&self) -> &StateFamily {
        &self.input_family
    }

    pub fn post_family(&self) -> &StateFamily {
        &self.post_family
    }

    /// POVM element for an outcome label (0 = failure).
    pub fn povm(&self, label: usize) -> &SymMatrix {
        &self.povm[label]
    }

    pub fn povm_elements(&self) -> &[SymMatrix] {
        &self.povm
    }

    /// Detection operator for an outcome label (0 = failure).
    pub fn kraus(&self, label: usize) -> &Matrix {
        &self.kraus[label]
    }

    pub fn kraus_operators(&self) -> &[Matrix] {
        &self.kraus
    }

    /// Detection constant shared by all conclusive outcomes.
    pub fn c(&self) -> f64 {
        self.c
    }

    /// Failure probability for every input state.
    pub fn q(&self) -> f64 {
        self.q
    }

    /// Pairwise overlap of the post-measurement family.
    pub fn t(&self) -> f64 {
        self.t
    }

    /// True when the post-measurement family is linearly dependent, so no
    /// further unambiguous measurement can follow this one.
    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    pub fn n(&self) -> usize {
        self.input_family.len()
    }

    /// Samples an outcome for input state `state_index` (1-based).
    pub fn measure(&self, state_index: usize, rng: &mut RngStream) -> Result<MeasurementOutcome> {
        if state_index == 0 || state_index > self.n() {
            return Err(Error::InvalidParameter(format!(
                "state index {state_index} outside 1..={}",
                self.n()
            )));
        }
        Ok(self.measure_state_with_fallback(
            self.input_family.vector(state_index - 1),
            Some(state_index),
            rng,
        ))
    }

    /// Samples an outcome for an arbitrary unit state vector.
    pub fn measure_state(&self, state: &[f64], rng: &mut RngStream) -> MeasurementOutcome {
        self.measure_state_with_fallback(state, None, rng)
    }

    fn measure_state_with_fallback(
        &self,
        state: &[f64],
        family_index: Option<usize>,
        rng: &mut RngStream,
    ) -> MeasurementOutcome {
        let probs = self.outcome_probabilities(state);
        // labels 1..N first, failure absorbs the residual
        let weights: Vec<f64> = probs[1..].iter().chain([&probs[0]]).copied().collect();
        let drawn = sample_index(&weights, rng.next_f64());
        let label = if drawn == self.n() { 0 } else { drawn + 1 };
        let post_state =
            matrix::normalized(&self.kraus[label].matvec(state)).unwrap_or_else(|| {
                // zero-probability branch; the post state is the family image
                let idx = family_index.unwrap_or(1) - 1;
                self.post_family.vector(idx).to_vec()
            });
        MeasurementOutcome { label, post_state }
    }

    /// Outcome probabilities `⟨ψ|Π_k|ψ⟩`, indexed by label, with the failure
    /// entry computed as one minus the conclusive total.
    pub fn outcome_probabilities(&self, state: &[f64]) -> Vec<f64> {
        let mut probs = vec![0.0];
        let mut conclusive = 0.0;
        for element in &self.povm[1..] {
            let p = element.quad_form(state).max(0.0);
            let p = if p < 1e-15 { 0.0 } else { p };
            probs.push(p);
            conclusive += p;
        }
        probs[0] = (1.0 - conclusive).max(0.0);
        probs
    }

    /// Residuals of every defining invariant, for tests and the CLI
    /// verification command.
    pub fn validate(&self) -> UsdValidation {
        let dim = self.input_family.ambient_dim();
        let n = self.n();

        let mut povm_sum = Matrix::zeros(dim, dim);
        for p in &self.povm {
            povm_sum.add_assign(&p.to_matrix());
        }
        let completeness = povm_sum.max_abs_diff(&Matrix::identity(dim));

        let kraus_consistency = (0..=n)
            .map(|j| {
                let ata = self.kraus[j].transpose().matmul(&self.kraus[j]);
                ata.max_abs_diff(&self.povm[j].to_matrix())
            })
            .fold(0.0, f64::max);

        let min_povm_eigenvalue = self
            .povm
            .iter()
            .map(|p| p.sym_eigen().map(|e| e.eigenvalues[0]))
            .try_fold(f64::INFINITY, |acc, e| e.map(|v| acc.min(v)))
            .unwrap_or(f64::NEG_INFINITY);

        let mut unambiguity = 0.0f64;
        for j in 1..=n {
            let eta = self.input_family.vector(j - 1);
            for k in 1..=n {
                if k != j {
                    unambiguity = unambiguity.max(self.povm[k].quad_form(eta).abs());
                }
            }
        }

        // failure operator in the input basis: diagonal q, off-diagonal q·t,
        // equivalently 1 - c·r and s
        let a0t_a0 = self.kraus[0].transpose().matmul(&self.kraus[0]);
        let mut failure_operator = 0.0f64;
        for j in 0..n {
            let row = a0t_a0.matvec(self.input_family.vector(j));
            for k in 0..n {
                let got = matrix::dot(&row, self.input_family.vector(k));
                let want = if j == k { self.q } else { self.q * self.t };
                failure_operator = failure_operator.max((got - want).abs());
            }
        }

        let mut success_uniformity = 0.0f64;
        let mut failure_sandwich = 0.0f64;
        for j in 1..=n {
            let eta = self.input_family.vector(j - 1);
            success_uniformity =
                success_uniformity.max((self.povm[j].quad_form(eta) - (1.0 - self.q)).abs());
            failure_sandwich = failure_sandwich.max((self.povm[0].quad_form(eta) - self.q).abs());
        }

        UsdValidation {
            completeness,
            kraus_consistency,
            min_povm_eigenvalue,
            unambiguity,
            failure_operator,
            success_uniformity,
            failure_sandwich,
        }
    }
}

/// Sampled measurement result: the outcome label (0 = failure) and the
/// normalized post-measurement state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementOutcome {
    pub label: usize,
    pub post_state: Vec<f64>,
}

/// Invariant residuals of a constructed measurement.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct UsdValidation {
    /// `max |Σ_j Π_j - I|` entrywise.
    pub completeness: f64,
    /// `max_j max |A_j†A_j - Π_j|` entrywise.
    pub kraus_consistency: f64,
    /// Smallest eigenvalue over all POVM elements.
    pub min_povm_eigenvalue: f64,
    /// `max |⟨η_j|Π_k|η_j⟩|` over conclusive `k ≠ j`.
    pub unambiguity: f64,
    /// Deviation of the input-basis failure operator from its two closed
    /// forms (diagonal `q` / off-diagonal `q·t`, equivalently `1-c·r` / `s`).
    pub failure_operator: f64,
    /// Spread of the per-state success probabilities around `1-q`.
    pub success_uniformity: f64,
    /// Deviation of `⟨η_j|Π_0|η_j⟩` from `q`.
    pub failure_sandwich: f64,
}

impl UsdValidation {
    pub const COMPLETENESS_TOL: f64 = 1e-12;
    pub const KRAUS_TOL: f64 = 1e-12;
    pub const PSD_TOL: f64 = 1e-10;
    pub const UNAMBIGUITY_TOL: f64 = 1e-12;

    pub fn is_valid(&self) -> bool {
        self.completeness <= Self::COMPLETENESS_TOL
            && self.kraus_consistency <= Self::KRAUS_TOL
            && self.min_povm_eigenvalue >= -Self::PSD_TOL
            && self.unambiguity <= Self::UNAMBIGUITY_TOL
            && self.failure_operator <= Self::KRAUS_TOL
            && self.success_uniformity <= Self::KRAUS_TOL
            && self.failure_sandwich <= Self::KRAUS_TOL
    }
}

/// Builds the measurement with failure probability `target_q`, deriving the
/// post-measurement overlap from the consistency condition `t = s/target_q`
/// (`t = 1` at the optimal point `target_q = s`).
pub fn build_measurement(family: &StateFamily, target_q: f64) -> Result<UsdMeasurement> {
    let s = equal_overlap_of(family)?;
    let t = if target_q == s { 1.0 } else { s / target_q };
    build_measurement_with_post_overlap(family, target_q, t)
}

/// Builds the measurement with an explicit post-measurement overlap `t`,
/// which must satisfy `target_q·t = s`. The freedom matters only at `s = 0`,
/// where any `t` is consistent with a perfect measurement.
pub fn build_measurement_with_post_overlap(
    family: &StateFamily,
    target_q: f64,
    t: f64,
) -> Result<UsdMeasurement> {
    let s = equal_overlap_of(family)?;
    let n = family.len();
    if target_q > 1.0 || !target_q.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "target failure probability must be at most 1, got {target_q}"
        )));
    }
    if target_q < s {
        return Err(Error::PositivityViolation {
            reason: format!("target failure probability {target_q} is below the overlap {s}"),
            min_eigenvalue: target_q - s,
        });
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter(format!(
            "post overlap t={t} outside [0,1]"
        )));
    }
    if (target_q * t - s).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "inconsistent parameters: target_q*t = {} but the family overlap is {s}",
            target_q * t
        )));
    }

    let reciprocal = reciprocal_closed_form(family)?;
    let r = states::reciprocal_equal_closed_form(n, s)?.r;
    let c = (1.0 - target_q) / r;
    let a = (target_q / r).sqrt();

    let ambient = family.ambient_dim();
    let post_family = states::equal_post_family(n, t, ambient)?;

    let mut povm = Vec::with_capacity(n + 1);
    let mut kraus = Vec::with_capacity(n + 1);
    let mut conclusive_sum = Matrix::zeros(ambient, ambient);
    let mut failure_kraus = Matrix::zeros(ambient, ambient);
    povm.push(SymMatrix::zeros(ambient)); // placeholder for Π_0
    kraus.push(Matrix::zeros(ambient, ambient));
    for k in 0..n {
        let perp = reciprocal.vector(k);
        let phi = post_family.vector(k);
        let pk = SymMatrix::from_fn(ambient, |i, j| c * perp[i] * perp[j]);
        conclusive_sum.add_assign(&pk.to_matrix());
        povm.push(pk);
        kraus.push(Matrix::outer(phi, perp).scaled(c.sqrt()));
        failure_kraus.add_assign(&Matrix::outer(phi, perp).scaled(a));
    }
    let pi0 = SymMatrix::symmetrized(&Matrix::identity(ambient).sub(&conclusive_sum))?;
    povm[0] = pi0;

    // When the family is embedded in a larger ambient space, Π_0 acts as the
    // identity on the orthogonal complement of the span; A_0 needs a branch
    // covering that block for A_0†A_0 = Π_0 to hold on the whole space.
    complete_failure_kraus(&mut failure_kraus, family.vectors(), post_family.vectors());
    kraus[0] = failure_kraus;

    let terminal = post_family.gram().sym_eigen()?.eigenvalues[0] <= GRAM_SINGULAR_TOL;

    Ok(UsdMeasurement {
        input_family: family.clone(),
        post_family,
        povm,
        kraus,
        c,
        q: target_q,
        t,
        terminal,
    })
}

fn equal_overlap_of(family: &StateFamily) -> Result<f64> {
    match *family.spec() {
        OverlapSpec::Equal { s, .. } if s < 1.0 => Ok(s),
        OverlapSpec::Equal { s, .. } => Err(Error::SingularGram {
            min_eigenvalue: 1.0 - s,
        }),
        OverlapSpec::TwoSet { .. } => Err(Error::Unsupported(
            "equal-overlap measurement requires an equal-overlap family".into(),
        )),
    }
}

/// Adds `Σ_i |χ_i⟩⟨u_i|` to the failure operator, pairing an orthonormal
/// basis `u_i` of the input-span complement with one of the post-span
/// complement. No-op when the input family spans the whole space.
pub(crate) fn complete_failure_kraus(
    failure: &mut Matrix,
    input_vectors: &[Vec<f64>],
    post_vectors: &[Vec<f64>],
) {
    let input_extra = orthonormal_complement(input_vectors);
    if input_extra.is_empty() {
        return;
    }
    let post_extra = orthonormal_complement(post_vectors);
    debug_assert!(post_extra.len() >= input_extra.len());
    for (u, chi) in input_extra.iter().zip(&post_extra) {
        failure.add_assign(&Matrix::outer(chi, u));
    }
}

/// Orthonormal basis of the orthogonal complement of `span(vectors)`, found
/// by Gram-Schmidt over the standard basis. Deterministic.
fn orthonormal_complement(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let ambient = vectors.first().map_or(0, Vec::len);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(ambient);
    let mut extras = Vec::new();
    let push_orthogonalized = |basis: &mut Vec<Vec<f64>>, v: &[f64]| -> Option<Vec<f64>> {
        let mut w = v.to_vec();
        for _ in 0..2 {
            // two passes keep the basis orthogonal to working precision
            for b in basis.iter() {
                let proj = matrix::dot(&w, b);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= proj * bi;
                }
            }
        }
        let unit = matrix::normalized(&w)?;
        basis.push(unit.clone());
        Some(unit)
    };
    for v in vectors {
        push_orthogonalized(&mut basis, v);
    }
    for i in 0..ambient {
        let mut e = vec![0.0; ambient];
        e[i] = 1.0;
        if let Some(unit) = push_orthogonalized(&mut basis, &e) {
            extras.push(unit);
        }
    }
    extras
}
