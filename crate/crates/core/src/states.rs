//! Symmetric state families and their reciprocal (dual) vector sets.
//!
//! Two families are supported: `Equal`, N unit vectors in an N-dimensional
//! space with a single pairwise overlap `s`, and `TwoSet`, N unit vectors
//! split into a first group of M and a second group of N-M with overlaps
//! `s1²`, `s2²` inside the groups and `s1·s2` across them. The two-set
//! family is realized in a compact (N+1)-dimensional embedding
//! `η_j = s_i·e_0 + sqrt(1 - s_i²)·e_j`; every quantity used downstream is
//! determined by the Gram matrix, so the embedding choice is immaterial.
//!
//! Reciprocal vectors `η⊥_j` (orthogonal to every family member except the
//! j-th) are built two ways: generically from the inverse Gram matrix, and
//! from closed-form expansion coefficients. The two routes must agree and
//! are cross-checked in the test suites.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{self, gram, SymMatrix};

/// Minimum Gram eigenvalue below which a family counts as linearly dependent.
pub const GRAM_SINGULAR_TOL: f64 = 1e-12;

/// Overlap structure of a state family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum OverlapSpec {
    /// All pairwise overlaps equal `s`.
    Equal { n: usize, s: f64 },
    /// First `m` states built from `s1`, the rest from `s2`; pairwise
    /// overlaps are `s1²`, `s2²` within the groups and `s1·s2` across.
    TwoSet {
        n: usize,
        m: usize,
        s1: f64,
        s2: f64,
    },
}

impl OverlapSpec {
    pub fn equal(n: usize, s: f64) -> Result<Self> {
        let spec = Self::Equal { n, s };
        spec.validate()?;
        Ok(spec)
    }

    pub fn two_set(n: usize, m: usize, s1: f64, s2: f64) -> Result<Self> {
        let spec = Self::TwoSet { n, m, s1, s2 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn n(&self) -> usize {
        match *self {
            Self::Equal { n, .. } | Self::TwoSet { n, .. } => n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Equal { n, s } => {
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
            }
            Self::TwoSet { n, m, s1, s2 } => {
                if n < 2 {
                    return Err(Error::InvalidSpec(format!(
                        "need at least 2 states, got {n}"
                    )));
                }
                if m < 1 || m > n - 1 {
                    return Err(Error::InvalidSpec(format!(
                        "group size m must satisfy 1 <= m <= n-1, got m={m}, n={n}"
                    )));
                }
                for (name, v) in [("s1", s1), ("s2", s2)] {
                    if !(0.0..1.0).contains(&v) {
                        return Err(Error::InvalidSpec(format!(
                            "overlap {name} must be in [0,1), got {v}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Target Gram entry between states `i` and `j` (0-based).
    pub fn gram_entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 1.0;
        }
        match *self {
            Self::Equal { s, .. } => s,
            Self::TwoSet { m, s1, s2, .. } => {
                let si = if i < m { s1 } else { s2 };
                let sj = if j < m { s1 } else { s2 };
                si * sj
            }
        }
    }
}

/// A family of unit vectors together with its Gram matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFamily {
    spec: OverlapSpec,
    ambient_dim: usize,
    vectors: Vec<Vec<f64>>,
    gram: SymMatrix,
}

impl StateFamily {
    /// Validated construction from explicit vectors. The Gram matrix is
    /// recomputed and must match the spec pattern; the family must be
    /// linearly independent.
    pub fn from_parts(spec: OverlapSpec, vectors: Vec<Vec<f64>>) -> Result<Self> {
        spec.validate()?;
        let family = Self::from_parts_unchecked(spec, vectors)?;
        for (j, v) in family.vectors.iter().enumerate() {
            if (matrix::norm(v) - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidSpec(format!("vector {j} is not unit norm")));
            }
        }
        for i in 0..family.len() {
            for j in 0..family.len() {
                let want = spec.gram_entry(i, j);
                if (family.gram.get(i, j) - want).abs() > 1e-12 {
                    return Err(Error::InvalidSpec(format!(
                        "gram entry ({i},{j}) = {} does not match spec value {want}",
                        family.gram.get(i, j)
                    )));
                }
            }
        }
        let min_eig = family.gram.sym_eigen()?.eigenvalues[0];
        if min_eig <= GRAM_SINGULAR_TOL {
            return Err(Error::SingularGram {
                min_eigenvalue: min_eig,
            });
        }
        Ok(family)
    }

    /// Construction without the invariant checks. Used internally for
    /// post-measurement families, which may be linearly dependent in the
    /// terminal (overlap 1) case.
    pub(crate) fn from_parts_unchecked(spec: OverlapSpec, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if vectors.len() != spec.n() {
            return Err(Error::DimensionMismatch {
                expected: spec.n(),
                got: vectors.len(),
            });
        }
        let gram = gram(&vectors)?;
        let ambient_dim = vectors.first().map_or(0, Vec::len);
        Ok(Self {
            spec,
            ambient_dim,
            vectors,
            gram,
        })
    }

    pub fn spec(&self) -> &OverlapSpec {
        &self.spec
    }

    /// Number of states in the family.
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// State vector by 0-based index.
    pub fn vector(&self, idx: usize) -> &[f64] {
        &self.vectors[idx]
    }

    pub fn gram(&self) -> &SymMatrix {
        &self.gram
    }

    /// Smallest Gram eigenvalue; positive for linearly independent families.
    pub fn gram_min_eigenvalue(&self) -> Result<f64> {
        Ok(self.gram.sym_eigen()?.eigenvalues[0])
    }

    pub fn is_linearly_independent(&self) -> Result<bool> {
        Ok(self.gram_min_eigenvalue()? > GRAM_SINGULAR_TOL)
    }
}

/// Equal-overlap family: N unit vectors in N dimensions with pairwise
/// overlap exactly `s`, built by Cholesky factorization of the target Gram
/// matrix (the factor's rows are the state coordinates).
pub fn build_equal_overlap(n: usize, s: f64) -> Result<StateFamily> {
    let spec = OverlapSpec::equal(n, s)?;
    let vectors = equal_family_with_overlap(n, s, n)?;
    StateFamily::from_parts_unchecked(spec, vectors)
}

/// Equal-overlap vectors with the overlap allowed to reach the degenerate
/// value 1 and with the ambient dimension chosen by the caller (>= n).
pub(crate) fn equal_family_with_overlap(
    n: usize,
    overlap: f64,
    ambient_dim: usize,
) -> Result<Vec<Vec<f64>>> {
    if !(0.0..=1.0).contains(&overlap) {
        return Err(Error::InvalidSpec(format!(
            "overlap must be in [0,1], got {overlap}"
        )));
    }
    if ambient_dim < n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: ambient_dim,
        });
    }
    let target = SymMatrix::from_fn(n, |i, j| if i == j { 1.0 } else { overlap });
    let l = target.cholesky_psd(1e-12)?;
    Ok((0..n)
        .map(|j| {
            let mut v = vec![0.0; ambient_dim];
            v[..n].copy_from_slice(l.row(j));
            v
        })
        .collect())
}

/// Equal-overlap post-measurement family sharing a given ambient dimension.
pub(crate) fn equal_post_family(n: usize, overlap: f64, ambient_dim: usize) -> Result<StateFamily> {
    let spec = OverlapSpec::Equal { n, s: overlap };
    let vectors = equal_family_with_overlap(n, overlap, ambient_dim)?;
    StateFamily::from_parts_unchecked(spec, vectors)
}

/// Equal-overlap family built from a mixing pair `(alpha, beta)` over an
/// orthonormal basis: `η_j ∝ β|j⟩ + α Σ_{k≠j}|k⟩`. The resulting overlap is
/// `s = ((n-2)α² + 2αβ) / ((n-1)α² + β²)`; `alpha == beta` collapses every
/// state onto the same ray and is rejected as degenerate.
pub fn equal_overlap_from_mixing(n: usize, alpha: f64, beta: f64) -> Result<StateFamily> {
    if n < 2 {
        return Err(Error::InvalidSpec(format!(
            "need at least 2 states, got {n}"
        )));
    }
    let norm_sq = (n as f64 - 1.0) * alpha * alpha + beta * beta;
    if norm_sq <= 0.0 {
        return Err(Error::InvalidSpec(
            "alpha and beta cannot both be zero".into(),
        ));
    }
    let s = ((n as f64 - 2.0) * alpha * alpha + 2.0 * alpha * beta) / norm_sq;
    let spec = OverlapSpec::equal(n, s)?;
    let inv_norm = 1.0 / norm_sq.sqrt();
    let vectors: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|k| {
                    if k == j {
                        beta * inv_norm
                    } else {
                        alpha * inv_norm
                    }
                })
                .collect()
        })
        .collect();
    StateFamily::from_parts_unchecked(spec, vectors)
}

/// Two-set family in the compact (N+1)-dimensional embedding
/// `η_j = s_i·e_0 + sqrt(1-s_i²)·e_j` with `s_i = s1` for `j <= m`.
pub fn build_two_set(n: usize, m: usize, s1: f64, s2: f64) -> Result<StateFamily> {
    let spec = OverlapSpec::two_set(n, m, s1, s2)?;
    StateFamily::from_parts_unchecked(spec, two_set_vectors(n, m, s1, s2))
}

/// Two-set post-measurement family; overlap parameters may reach 1.
pub(crate) fn two_set_post_family(n: usize, m: usize, t1: f64, t2: f64) -> Result<StateFamily> {
    for (name, v) in [("t1", t1), ("t2", t2)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidSpec(format!(
                "{name} must be in [0,1], got {v}"
            )));
        }
    }
    let spec = OverlapSpec::TwoSet {
        n,
        m,
        s1: t1,
        s2: t2,
    };
    StateFamily::from_parts_unchecked(spec, two_set_vectors(n, m, t1, t2))
}

fn two_set_vectors(n: usize, m: usize, s1: f64, s2: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|j| {
            let s = if j < m { s1 } else { s2 };
            let mut v = vec![0.0; n + 1];
            v[0] = s;
            v[j + 1] = (1.0 - s * s).sqrt();
            v
        })
        .collect()
}

/// Reciprocal vectors of a family: `η⊥_j` is the unit vector orthogonal to
/// every `η_k` with `k ≠ j`, sign-fixed so `⟨η_j|η⊥_j⟩ > 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReciprocalSet {
    vectors: Vec<Vec<f64>>,
    overlaps_with_own: Vec<f64>,
    r_values: Vec<f64>,
    metadata: Option<TwoSetReciprocalMeta>,
}

impl ReciprocalSet {
    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn vector(&self, idx: usize) -> &[f64] {
        &self.vectors[idx]
    }

    /// `⟨η_j|η⊥_j⟩` for each j; positive by the sign convention.
    pub fn overlaps_with_own(&self) -> &[f64] {
        &self.overlaps_with_own
    }

    /// `r_j = ⟨η_j|η⊥_j⟩²`.
    pub fn r_values(&self) -> &[f64] {
        &self.r_values
    }

    /// Two-set closed-form metadata, when built from a two-set family.
    pub fn metadata(&self) -> Option<&TwoSetReciprocalMeta> {
        self.metadata.as_ref()
    }

    fn from_raw(
        family: &StateFamily,
        raw: Vec<Vec<f64>>,
        metadata: Option<TwoSetReciprocalMeta>,
    ) -> Result<Self> {
        let mut vectors = Vec::with_capacity(raw.len());
        let mut overlaps = Vec::with_capacity(raw.len());
        let mut r_values = Vec::with_capacity(raw.len());
        for (j, w) in raw.into_iter().enumerate() {
            let mut unit = matrix::normalized(&w).ok_or(Error::SingularGram {
                min_eigenvalue: 0.0,
            })?;
            let mut own = matrix::dot(family.vector(j), &unit);
            if own < 0.0 {
                for x in &mut unit {
                    *x = -*x;
                }
                own = -own;
            }
            overlaps.push(own);
            r_values.push(own * own);
            vectors.push(unit);
        }
        Ok(Self {
            vectors,
            overlaps_with_own: overlaps,
            r_values,
            metadata,
        })
    }
}

/// Closed-form data for the equal-overlap reciprocal expansion
/// `η⊥_j = d_diag·η_j + d_offdiag·Σ_{k≠j} η_k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EqualReciprocalCoefficients {
    /// Coefficient on the distinguished state.
    pub d_diag: f64,
    /// Coefficient on each of the other states.
    pub d_offdiag: f64,
    /// `r = ⟨η_j|η⊥_j⟩² = (1-s)(1+(N-1)s) / (1+(N-2)s)`.
    pub r: f64,
}

/// Closed-form reciprocal coefficients for the equal-overlap family.
pub fn reciprocal_equal_closed_form(n: usize, s: f64) -> Result<EqualReciprocalCoefficients> {
    OverlapSpec::equal(n, s)?;
    let nf = n as f64;
    let denom = 1.0 + s * (nf - 2.0);
    let d_diag = (denom / ((1.0 - s) * (1.0 + (nf - 1.0) * s))).sqrt();
    let d_offdiag = -s / denom * d_diag;
    let r = (1.0 - s) * (1.0 + (nf - 1.0) * s) / denom;
    Ok(EqualReciprocalCoefficients {
        d_diag,
        d_offdiag,
        r,
    })
}

/// Denominators, squared own-overlaps and the full expansion-coefficient
/// table for the two-set reciprocal vectors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoSetReciprocalCoefficients {
    /// `D1 = [1+s2²(N-M-1)](1-s1²) + (M-1)s1²(1-s2²)`.
    pub d1: f64,
    /// `D2 = s2²(1-s1²)(N-M-1) + (1-s2²)[1+s1²(M-1)]`.
    pub d2: f64,
    /// `Γ1 = ⟨η_j|η⊥_j⟩²` for j in the first group.
    pub gamma1: f64,
    /// `Γ2 = ⟨η_j|η⊥_j⟩²` for j in the second group.
    pub gamma2: f64,
    /// j in group 1: coefficient on `η_j` itself.
    pub diag1: f64,
    /// j in group 1: coefficient on the other group-1 states.
    pub same1: f64,
    /// j in group 1: coefficient on every group-2 state.
    pub cross1: f64,
    /// j in group 2: coefficient on `η_j` itself.
    pub diag2: f64,
    /// j in group 2: coefficient on the other group-2 states.
    pub same2: f64,
    /// j in group 2: coefficient on every group-1 state.
    pub cross2: f64,
}

/// Summary of the two-set closed form carried on a [`ReciprocalSet`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoSetReciprocalMeta {
    pub d1: f64,
    pub d2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

/// Closed-form reciprocal coefficients for the two-set family.
pub fn reciprocal_twoset_closed_form(
    n: usize,
    m: usize,
    s1: f64,
    s2: f64,
) -> Result<TwoSetReciprocalCoefficients> {
    OverlapSpec::two_set(n, m, s1, s2)?;
    let (mf, kf) = (m as f64, (n - m) as f64);
    let (a1, a2) = (s1 * s1, s2 * s2);
    let d1 = (1.0 + a2 * (kf - 1.0)) * (1.0 - a1) + (mf - 1.0) * a1 * (1.0 - a2);
    let d2 = a2 * (1.0 - a1) * (kf - 1.0) + (1.0 - a2) * (1.0 + a1 * (mf - 1.0));
    let gamma1 = (1.0 - a1) * (d1 + a1 * (1.0 - a2)) / d1;
    let gamma2 = (1.0 - a2) * (d2 + a2 * (1.0 - a1)) / d2;

    let diag1 = (d1 / ((1.0 - a1) * (d1 + a1 * (1.0 - a2)))).sqrt();
    let same1 = -a1 * (1.0 - a2) / d1 * diag1;
    let cross1 = -s1 * s2 * (1.0 - a1) / d1 * diag1;

    let diag2 = (d2 / ((1.0 - a2) * (d2 + a2 * (1.0 - a1)))).sqrt();
    let same2 = -a2 * (1.0 - a1) / d2 * diag2;
    let cross2 = -s1 * s2 * (1.0 - a2) / d2 * diag2;

    Ok(TwoSetReciprocalCoefficients {
        d1,
        d2,
        gamma1,
        gamma2,
        diag1,
        same1,
        cross1,
        diag2,
        same2,
        cross2,
    })
}

/// Reciprocal set from the inverse Gram matrix: `η⊥_j ∝ Σ_k (G⁻¹)_{kj} η_k`.
///
/// This is the generic route; it works for any linearly independent family
/// and serves as the oracle for the closed forms.
pub fn reciprocal_generic(family: &StateFamily) -> Result<ReciprocalSet> {
    let eig = family.gram().sym_eigen()?;
    let min_eig = eig.eigenvalues[0];
    if min_eig <= GRAM_SINGULAR_TOL {
        return Err(Error::SingularGram {
            min_eigenvalue: min_eig,
        });
    }
    let ginv = eig.map_eigenvalues(|l| 1.0 / l);
    let n = family.len();
    let raw: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut w = vec![0.0; family.ambient_dim()];
            for k in 0..n {
                let coeff = ginv.get(k, j);
                for (wi, xi) in w.iter_mut().zip(family.vector(k)) {
                    *wi += coeff * xi;
                }
            }
            w
        })
        .collect();
    ReciprocalSet::from_raw(family, raw, None)
}

/// Reciprocal set assembled from the closed-form expansion coefficients,
/// dispatching on the family variant.
pub fn reciprocal_closed_form(family: &StateFamily) -> Result<ReciprocalSet> {
    let n = family.len();
    match *family.spec() {
        OverlapSpec::Equal { s, .. } => {
            let coeffs = reciprocal_equal_closed_form(n, s)?;
            let raw: Vec<Vec<f64>> = (0..n)
                .map(|j| {
                    let mut w = vec![0.0; family.ambient_dim()];
                    for k in 0..n {
                        let c = if k == j {
                            coeffs.d_diag
                        } else {
                            coeffs.d_offdiag
                        };
                        for (wi, xi) in w.iter_mut().zip(family.vector(k)) {
                            *wi += c * xi;
                        }
                    }
                    w
                })
                .collect();
            ReciprocalSet::from_raw(family, raw, None)
        }
        OverlapSpec::TwoSet { m, s1, s2, .. } => {
            let coeffs = reciprocal_twoset_closed_form(n, m, s1, s2)?;
            let raw: Vec<Vec<f64>> = (0..n)
                .map(|j| {
                    let mut w = vec![0.0; family.ambient_dim()];
                    for k in 0..n {
                        let c = if j < m {
                            if k == j {
                                coeffs.diag1
                            } else if k < m {
                                coeffs.same1
                            } else {
                                coeffs.cross1
                            }
                        } else if k == j {
                            coeffs.diag2
                        } else if k >= m {
                            coeffs.same2
                        } else {
                            coeffs.cross2
                        };
                        for (wi, xi) in w.iter_mut().zip(family.vector(k)) {
                            *wi += c * xi;
                        }
                    }
                    w
                })
                .collect();
            let meta = TwoSetReciprocalMeta {
                d1: coeffs.d1,
                d2: coeffs.d2,
                gamma1: coeffs.gamma1,
                gamma2: coeffs.gamma2,
            };
            ReciprocalSet::from_raw(family, raw, Some(meta))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::dot;

    fn max_vec_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
        a.iter()
            .zip(b)
            .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
            .fold(0.0, f64::max)
    }

    #[test]
    fn equal_overlap_zero_is_orthonormal() {
        let fam = build_equal_overlap(3, 0.0).unwrap();
        assert!(fam.gram().max_abs_diff(&SymMatrix::identity(3)) < 1e-14);
    }

    #[test]
    fn equal_overlap_gram_matches_target() {
        let fam = build_equal_overlap(4, 0.3).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.3 };
                assert!((fam.gram().get(i, j) - want).abs() < 1e-12);
            }
        }
        for v in fam.vectors() {
            assert!((matrix::norm(v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_overlap_two_states() {
        let fam = build_equal_overlap(2, 0.25).unwrap();
        assert!((dot(fam.vector(0), fam.vector(1)) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn equal_overlap_rejects_bad_s() {
        assert!(build_equal_overlap(3, 1.0).is_err());
        assert!(build_equal_overlap(3, -0.1).is_err());
    }

    #[test]
    fn mixing_constructor_matches_its_overlap() {
        let fam = equal_overlap_from_mixing(4, 0.2, 0.9).unwrap();
        let OverlapSpec::Equal { s, .. } = *fam.spec() else {
            panic!("expected equal spec")
        };
        for i in 0..4 {
            for j in (i + 1)..4 {
                assert!((fam.gram().get(i, j) - s).abs() < 1e-12);
            }
        }
        // alpha == beta collapses all states onto one ray
        assert!(equal_overlap_from_mixing(4, 0.5, 0.5).is_err());
    }

    #[test]
    fn two_set_gram_blocks() {
        let fam = build_two_set(4, 2, 0.6, 0.3).unwrap();
        assert_eq!(fam.ambient_dim(), 5);
        let g = fam.gram();
        assert!((g.get(0, 1) - 0.36).abs() < 1e-12);
        assert!((g.get(2, 3) - 0.09).abs() < 1e-12);
        assert!((g.get(0, 2) - 0.18).abs() < 1e-12);
        for i in 0..4 {
            assert!((g.get(i, i) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_set_degenerate_matches_equal_overlap_gram() {
        let s: f64 = 0.55;
        let two = build_two_set(5, 2, s, s).unwrap();
        let equal = build_equal_overlap(5, s * s).unwrap();
        assert!(two.gram().max_abs_diff(equal.gram()) < 1e-12);
    }

    #[test]
    fn two_set_zero_overlaps_is_orthonormal() {
        let fam = build_two_set(3, 1, 0.0, 0.0).unwrap();
        assert!(fam.gram().max_abs_diff(&SymMatrix::identity(3)) < 1e-14);
    }

    #[test]
    fn reciprocal_generic_orthonormal_family_is_identity_map() {
        let fam = build_equal_overlap(4, 0.0).unwrap();
        let rec = reciprocal_generic(&fam).unwrap();
        assert!(max_vec_diff(rec.vectors(), fam.vectors()) < 1e-12);
        for r in rec.r_values() {
            assert!((r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reciprocal_equal_closed_form_examples() {
        let c = reciprocal_equal_closed_form(4, 0.0).unwrap();
        assert!((c.d_diag - 1.0).abs() < 1e-15);
        assert!(c.d_offdiag.abs() < 1e-15);
        assert!((c.r - 1.0).abs() < 1e-15);

        // N=2 reduces to r = 1 - s²
        let s = 0.37;
        let c2 = reciprocal_equal_closed_form(2, s).unwrap();
        assert!((c2.r - (1.0 - s * s)).abs() < 1e-15);

        // direct evaluation for N=5, s=0.4
        let c5 = reciprocal_equal_closed_form(5, 0.4).unwrap();
        assert!((c5.r - (0.6 * 2.6) / 2.2).abs() < 1e-15);
    }

    #[test]
    fn reciprocal_routes_agree_equal() {
        for n in [2usize, 3, 5, 8] {
            for s in [0.0, 0.1, 0.5, 0.9] {
                let fam = build_equal_overlap(n, s).unwrap();
                let gen = reciprocal_generic(&fam).unwrap();
                let closed = reciprocal_closed_form(&fam).unwrap();
                assert!(
                    max_vec_diff(gen.vectors(), closed.vectors()) < 1e-10,
                    "n={n} s={s}"
                );
                let want_r = reciprocal_equal_closed_form(n, s).unwrap().r;
                for r in gen.r_values() {
                    assert!((r - want_r).abs() < 1e-12, "n={n} s={s}");
                }
            }
        }
    }

    #[test]
    fn reciprocal_routes_agree_two_set() {
        let fam = build_two_set(4, 2, 0.6, 0.3).unwrap();
        let gen = reciprocal_generic(&fam).unwrap();
        let closed = reciprocal_closed_form(&fam).unwrap();
        assert!(max_vec_diff(gen.vectors(), closed.vectors()) < 1e-10);

        let coeffs = reciprocal_twoset_closed_form(4, 2, 0.6, 0.3).unwrap();
        for (j, r) in gen.r_values().iter().enumerate() {
            let want = if j < 2 { coeffs.gamma1 } else { coeffs.gamma2 };
            assert!((r - want).abs() < 1e-12, "j={j}");
        }
    }

    #[test]
    fn reciprocal_two_set_grid_matches_generic() {
        for (n, m) in [(3usize, 1usize), (4, 2), (5, 1), (5, 4), (6, 3)] {
            for (s1, s2) in [(0.0, 0.0), (0.3, 0.7), (0.8, 0.2), (0.5, 0.5)] {
                let fam = build_two_set(n, m, s1, s2).unwrap();
                let gen = reciprocal_generic(&fam).unwrap();
                let closed = reciprocal_closed_form(&fam).unwrap();
                assert!(
                    max_vec_diff(gen.vectors(), closed.vectors()) < 1e-10,
                    "n={n} m={m} s1={s1} s2={s2}"
                );
            }
        }
    }

    #[test]
    fn twoset_closed_form_reduces_to_equal() {
        // s1 = s2 = s: both gammas equal the equal-overlap r at overlap s²
        for s in [0.1, 0.4, 0.8] {
            for (n, m) in [(4usize, 2usize), (5, 1), (6, 4)] {
                let c = reciprocal_twoset_closed_form(n, m, s, s).unwrap();
                let r = reciprocal_equal_closed_form(n, s * s).unwrap().r;
                assert!((c.gamma1 - r).abs() < 1e-12, "n={n} m={m} s={s}");
                assert!((c.gamma2 - r).abs() < 1e-12, "n={n} m={m} s={s}");
            }
        }
    }

    #[test]
    fn twoset_lone_second_state_has_unit_gamma() {
        // s2 = 0 and m = n-1: the lone second-set state is orthogonal to the
        // rest only through vanishing cross terms, so gamma2 = 1
        let c = reciprocal_twoset_closed_form(5, 4, 0.6, 0.0).unwrap();
        assert!((c.gamma2 - 1.0).abs() < 1e-12);
        let fam = build_two_set(5, 4, 0.6, 0.0).unwrap();
        let gen = reciprocal_generic(&fam).unwrap();
        assert!((gen.r_values()[4] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn biorthogonality_holds() {
        let fam = build_two_set(5, 2, 0.5, 0.7).unwrap();
        let rec = reciprocal_generic(&fam).unwrap();
        for j in 0..5 {
            assert!((matrix::norm(rec.vector(j)) - 1.0).abs() < 1e-12);
            for k in 0..5 {
                let ov = dot(fam.vector(k), rec.vector(j));
                if j == k {
                    assert!(ov > 0.0);
                } else {
                    assert!(ov.abs() < 1e-10, "j={j} k={k} ov={ov}");
                }
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn reciprocal_biorthogonality_over_random_specs(
            n in 2usize..8,
            split in 0.0f64..1.0,
            s1 in 0.0f64..0.9,
            s2 in 0.0f64..0.9,
        ) {
            let m = (1 + (split * (n - 1) as f64) as usize).min(n - 1);
            let fam = build_two_set(n, m, s1, s2).unwrap();
            for rec in [reciprocal_generic(&fam).unwrap(), reciprocal_closed_form(&fam).unwrap()] {
                for j in 0..n {
                    proptest::prop_assert!((matrix::norm(rec.vector(j)) - 1.0).abs() < 1e-12);
                    proptest::prop_assert!(rec.overlaps_with_own()[j] > 0.0);
                    for k in 0..n {
                        if k != j {
                            let ov = dot(fam.vector(k), rec.vector(j));
                            proptest::prop_assert!(ov.abs() < 1e-10, "j={} k={} ov={}", j, k, ov);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn from_parts_validates() {
        let fam = build_equal_overlap(3, 0.2).unwrap();
        let rebuilt = StateFamily::from_parts(*fam.spec(), fam.vectors().to_vec()).unwrap();
        assert_eq!(&rebuilt, &fam);

        // wrong gram pattern
        let bad =
            StateFamily::from_parts(OverlapSpec::equal(3, 0.5).unwrap(), fam.vectors().to_vec());
        assert!(bad.is_err());
    }

    #[test]
    fn family_json_round_trip() {
        let fam = build_two_set(4, 2, 0.6, 0.3).unwrap();
        let json = serde_json::to_string(&fam).unwrap();
        assert!(json.contains("\"variant\":\"two_set\""));
        assert!(json.contains("\"ambient_dim\":5"));
        let back: StateFamily = serde_json::from_str(&json).unwrap();
        assert_eq!(back, fam);
    }
}
