//! Unambiguous discrimination with two overlap classes.
//!
//! The first M states are built from `s1` and the rest from `s2`, and the
//! detection elements carry independent constants: `Π_j = c1·|η⊥_j⟩⟨η⊥_j|`
//! for the first group and `c2` for the second. Positivity of the failure
//! element reduces to the per-class conditions `q1 >= s1²` and `q2 >= s2²`,
//! where `q_i = 1 - c_i·Γ_i` are the class failure probabilities.
//!
//! The positivity analysis runs in the expansion-coefficient representation:
//! the operator inequality `⟨ψ|Π_0|ψ⟩ >= 0` over `ψ = Σ α_j η_j` becomes a
//! matrix inequality for `L̃` with entries `⟨η_j|Π_0|η_k⟩`. Its spectrum
//! consists of two roots of a quadratic plus `q1 - s1²` with multiplicity
//! M-1 and `q2 - s2²` with multiplicity N-M-1; the numerical route
//! diagonalizes the assembled operators and must reproduce it.
//!
//! Only the two-observer flow is exposed here (a first measurement plus
//! [`bob_charlie_product_law`] for an optimal follow-up). A per-class
//! overlap ladder for longer chains looks structurally analogous to the
//! single-class one in [`crate::chain`] but has not been validated, so it
//! is deliberately not offered.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Matrix, SymMatrix};
use crate::states::{self, reciprocal_closed_form, OverlapSpec, StateFamily, GRAM_SINGULAR_TOL};
use crate::usd::complete_failure_kraus;

/// The two-class USD measurement.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwoSetUsdMeasurement {
    input_family: StateFamily,
    post_family: StateFamily,
    povm: Vec<SymMatrix>,
    kraus: Vec<Matrix>,
    c1: f64,
    c2: f64,
    q1: f64,
    q2: f64,
    t1: f64,
    t2: f64,
    a1: f64,
    a2: f64,
    /// Positivity margins `F_i = 1 - Γ_i c_i - s_i²`.
    f1: f64,
    f2: f64,
    terminal: bool,
}

impl TwoSetUsdMeasurement {
    pub fn input_family(&self) -> &StateFamily {
        &self.input_family
    }

    pub fn post_family(&self) -> &StateFamily {
        &self.post_family
    }

    pub fn povm(&self, label: usize) -> &SymMatrix {
        &self.povm[label]
    }

    pub fn povm_elements(&self) -> &[SymMatrix] {
        &self.povm
    }

    pub fn kraus(&self, label: usize) -> &Matrix {
        &self.kraus[label]
    }

    pub fn kraus_operators(&self) -> &[Matrix] {
        &self.kraus
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn q1(&self) -> f64 {
        self.q1
    }

    pub fn q2(&self) -> f64 {
        self.q2
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn t2(&self) -> f64 {
        self.t2
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn a2(&self) -> f64 {
        self.a2
    }

    pub fn f1(&self) -> f64 {
        self.f1
    }

    pub fn f2(&self) -> f64 {
        self.f2
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    pub fn n(&self) -> usize {
        self.input_family.len()
    }

    /// Invariant residuals, mirroring [`crate::usd::UsdValidation`].
    pub fn validate(&self) -> TwoSetValidation {
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

        let m = class_split(&self.input_family);
        let mut unambiguity = 0.0f64;
        let mut failure_sandwich = 0.0f64;
        for j in 1..=n {
            let eta = self.input_family.vector(j - 1);
            for k in 1..=n {
                if k != j {
                    unambiguity = unambiguity.max(self.povm[k].quad_form(eta).abs());
                }
            }
            let want_q = if j <= m { self.q1 } else { self.q2 };
            failure_sandwich = failure_sandwich.max((self.povm[0].quad_form(eta) - want_q).abs());
        }

        TwoSetValidation {
            completeness,
            kraus_consistency,
            min_povm_eigenvalue,
            unambiguity,
            failure_sandwich,
            f1: self.f1,
            f2: self.f2,
        }
    }
}

fn class_split(family: &StateFamily) -> usize {
    match *family.spec() {
        OverlapSpec::TwoSet { m, .. } => m,
        OverlapSpec::Equal { .. } => family.len(),
    }
}

/// Invariant residuals of a two-class measurement.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TwoSetValidation {
    pub completeness: f64,
    pub kraus_consistency: f64,
    pub min_povm_eigenvalue: f64,
    pub unambiguity: f64,
    /// Deviation of `⟨η_j|Π_0|η_j⟩` from the class failure probability.
    pub failure_sandwich: f64,
    pub f1: f64,
    pub f2: f64,
}

impl TwoSetValidation {
    pub const MARGIN_TOL: f64 = 1e-10;

    pub fn is_valid(&self) -> bool {
        use crate::usd::UsdValidation as V;
        self.completeness <= V::COMPLETENESS_TOL
            && self.kraus_consistency <= V::KRAUS_TOL
            && self.min_povm_eigenvalue >= -V::PSD_TOL
            && self.unambiguity <= V::UNAMBIGUITY_TOL
            && self.failure_sandwich <= V::KRAUS_TOL
            && self.f1 >= -Self::MARGIN_TOL
            && self.f2 >= -Self::MARGIN_TOL
    }
}

/// Report of the failure-element positivity analysis at given detection
/// constants, combining the closed-form spectrum with numerical ones.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PositivityReport {
    /// True iff both class failure probabilities sit at or above their
    /// floors `s_i²`.
    pub ok: bool,
    pub q1: f64,
    pub q2: f64,
    pub f1: f64,
    pub f2: f64,
    /// Roots of the coupled-sector quadratic.
    pub quadratic_roots: [f64; 2],
    /// Closed-form spectrum of the coefficient-space matrix, sorted:
    /// the two roots plus `F1` (x M-1) and `F2` (x N-M-1).
    pub analytic_spectrum: Vec<f64>,
    /// Numerical spectrum of `[⟨η_j|Π_0|η_k⟩]`, sorted.
    pub eta_basis_spectrum: Vec<f64>,
    /// Numerical spectrum of the assembled `Π_0` in the ambient space.
    pub povm0_spectrum: Vec<f64>,
    pub min_povm0_eigenvalue: f64,
}

/// Runs the positivity analysis for detection constants `(c1, c2)`.
pub fn positivity_check(
    n: usize,
    m: usize,
    s1: f64,
    s2: f64,
    c1: f64,
    c2: f64,
) -> Result<PositivityReport> {
    let coeffs = states::reciprocal_twoset_closed_form(n, m, s1, s2)?;
    for (name, c) in [("c1", c1), ("c2", c2)] {
        if c.is_nan() || c < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "{name} must be >= 0, got {c}"
            )));
        }
    }
    let q1 = 1.0 - c1 * coeffs.gamma1;
    let q2 = 1.0 - c2 * coeffs.gamma2;
    let f1 = q1 - s1 * s1;
    let f2 = q2 - s2 * s2;

    let (mf, kf) = (m as f64, (n - m) as f64);
    let b = mf * s1 * s1 + kf * s2 * s2 + f1 + f2;
    let c = f1 * f2 + mf * s1 * s1 * f2 + kf * s2 * s2 * f1;
    let disc = (b * b - 4.0 * c).max(0.0).sqrt();
    let quadratic_roots = [(b - disc) / 2.0, (b + disc) / 2.0];

    let mut analytic_spectrum = Vec::with_capacity(n);
    analytic_spectrum.extend_from_slice(&quadratic_roots);
    analytic_spectrum.extend(std::iter::repeat_n(f1, m - 1));
    analytic_spectrum.extend(std::iter::repeat_n(f2, n - m - 1));
    analytic_spectrum.sort_by(|a, b| a.partial_cmp(b).expect("finite"));

    let family = states::build_two_set(n, m, s1, s2)?;
    let pi0 = failure_element(&family, c1, c2)?;
    let eta_matrix = SymMatrix::from_fn(n, |j, k| pi0.bilinear(family.vector(j), family.vector(k)));
    let eta_basis_spectrum = eta_matrix.sym_eigen()?.eigenvalues;
    let povm0_spectrum = pi0.sym_eigen()?.eigenvalues;
    let min_povm0_eigenvalue = povm0_spectrum[0];

    Ok(PositivityReport {
        ok: q1 >= s1 * s1 - 1e-12 && q2 >= s2 * s2 - 1e-12,
        q1,
        q2,
        f1,
        f2,
        quadratic_roots,
        analytic_spectrum,
        eta_basis_spectrum,
        povm0_spectrum,
        min_povm0_eigenvalue,
    })
}

fn failure_element(family: &StateFamily, c1: f64, c2: f64) -> Result<SymMatrix> {
    let m = class_split(family);
    let ambient = family.ambient_dim();
    let reciprocal = reciprocal_closed_form(family)?;
    let mut sum = Matrix::zeros(ambient, ambient);
    for (k, perp) in reciprocal.vectors().iter().enumerate() {
        let c = if k < m { c1 } else { c2 };
        sum.add_assign(&Matrix::outer(perp, perp).scaled(c));
    }
    SymMatrix::symmetrized(&Matrix::identity(ambient).sub(&sum))
}

/// Builds the two-class measurement for target failure probabilities
/// `(target_q1, target_q2)`. Post overlaps follow from `q_i = s_i²/t_i²`
/// (`t_i = 1` at the floor), the constants from `c_i = (1-q_i)/Γ_i`, and the
/// failure coefficients from `a_i = sqrt(q_i/Γ_i)`.
pub fn build_twoset_measurement(
    family: &StateFamily,
    target_q1: f64,
    target_q2: f64,
) -> Result<TwoSetUsdMeasurement> {
    let OverlapSpec::TwoSet { n, m, s1, s2 } = *family.spec() else {
        return Err(Error::Unsupported(
            "two-class measurement requires a two-set family".into(),
        ));
    };
    for (name, q, floor) in [("q1", target_q1, s1 * s1), ("q2", target_q2, s2 * s2)] {
        if q > 1.0 || !q.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "target {name} must be at most 1, got {q}"
            )));
        }
        if q < floor {
            return Err(Error::PositivityViolation {
                reason: format!("target {name}={q} is below the class floor {floor}"),
                min_eigenvalue: q - floor,
            });
        }
    }

    let coeffs = states::reciprocal_twoset_closed_form(n, m, s1, s2)?;
    let t1 = if target_q1 == s1 * s1 {
        1.0
    } else {
        s1 / target_q1.sqrt()
    };
    let t2 = if target_q2 == s2 * s2 {
        1.0
    } else {
        s2 / target_q2.sqrt()
    };
    let c1 = (1.0 - target_q1) / coeffs.gamma1;
    let c2 = (1.0 - target_q2) / coeffs.gamma2;
    let a1 = (target_q1 / coeffs.gamma1).sqrt();
    let a2 = (target_q2 / coeffs.gamma2).sqrt();

    let reciprocal = reciprocal_closed_form(family)?;
    let post_family = states::two_set_post_family(n, m, t1, t2)?;
    let ambient = family.ambient_dim();
    if post_family.ambient_dim() != ambient {
        return Err(Error::DimensionMismatch {
            expected: ambient,
            got: post_family.ambient_dim(),
        });
    }

    let mut povm = Vec::with_capacity(n + 1);
    let mut kraus = Vec::with_capacity(n + 1);
    let mut conclusive_sum = Matrix::zeros(ambient, ambient);
    let mut failure_kraus = Matrix::zeros(ambient, ambient);
    povm.push(SymMatrix::zeros(ambient));
    kraus.push(Matrix::zeros(ambient, ambient));
    for k in 0..n {
        let (c, a) = if k < m { (c1, a1) } else { (c2, a2) };
        let perp = reciprocal.vector(k);
        let phi = post_family.vector(k);
        let pk = SymMatrix::from_fn(ambient, |i, j| c * perp[i] * perp[j]);
        conclusive_sum.add_assign(&pk.to_matrix());
        povm.push(pk);
        kraus.push(Matrix::outer(phi, perp).scaled(c.sqrt()));
        failure_kraus.add_assign(&Matrix::outer(phi, perp).scaled(a));
    }
    povm[0] = SymMatrix::symmetrized(&Matrix::identity(ambient).sub(&conclusive_sum))?;
    complete_failure_kraus(&mut failure_kraus, family.vectors(), post_family.vectors());
    kraus[0] = failure_kraus;

    let terminal = post_family.gram().sym_eigen()?.eigenvalues[0] <= GRAM_SINGULAR_TOL;

    Ok(TwoSetUsdMeasurement {
        input_family: family.clone(),
        post_family,
        povm,
        kraus,
        c1,
        c2,
        q1: target_q1,
        q2: target_q2,
        t1,
        t2,
        a1,
        a2,
        f1: target_q1 - s1 * s1,
        f2: target_q2 - s2 * s2,
        terminal,
    })
}

/// Optimal second-observer failure rates and the resulting products.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductLaw {
    /// Charlie's class-1 failure probability `t1²`.
    pub q_c1: f64,
    /// Charlie's class-2 failure probability `t2²`.
    pub q_c2: f64,
    /// `q_B1 * q_C1`, equal to `s1²`.
    pub product1: f64,
    /// `q_B2 * q_C2`, equal to `s2²`.
    pub product2: f64,
}

/// For Bob failure targets `(q_b1, q_b2)` and an optimal Charlie, the class
/// products are pinned: `q_B,i * q_C,i = s_i²`. At the floor `q_b = s²` the
/// post states coincide (`t = 1`) and Charlie learns nothing (`q_c = 1`).
pub fn bob_charlie_product_law(s1: f64, s2: f64, q_b1: f64, q_b2: f64) -> Result<ProductLaw> {
    for (name, s) in [("s1", s1), ("s2", s2)] {
        if !(0.0..1.0).contains(&s) {
            return Err(Error::InvalidSpec(format!(
                "overlap {name} must be in [0,1), got {s}"
            )));
        }
    }
    for (name, q, s) in [("q_b1", q_b1, s1), ("q_b2", q_b2, s2)] {
        if !(s * s..=1.0).contains(&q) {
            return Err(Error::InvalidParameter(format!(
                "{name}={q} outside [{}, 1]",
                s * s
            )));
        }
    }
    let t_sq = |s: f64, q_b: f64| if q_b == s * s { 1.0 } else { s * s / q_b };
    let q_c1 = t_sq(s1, q_b1);
    let q_c2 = t_sq(s2, q_b2);
    Ok(ProductLaw {
        q_c1,
        q_c2,
        product1: q_b1 * q_c1,
        product2: q_b2 * q_c2,
    })
}
