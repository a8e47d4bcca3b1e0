//! Erasure-channel capacities for the discrimination channels.
//!
//! Unambiguous discrimination never mislabels, so from Alice's point of view
//! each receiver is an erasure channel: the symbol arrives intact with the
//! success probability or is erased with the failure probability. For a
//! uniform erasure rate the capacity is `(1-q_e)·log2 N`. With two failure
//! rates (one per state class) the mutual information is maximized over the
//! class-1 input mass `p1` numerically; a first-order series around
//! `q1 = q2` cross-checks the optimizer. All logarithms are base 2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eve;

/// Golden-section tolerance on the optimal `p1`.
const P1_TOL: f64 = 1e-9;
/// Iteration cap for the golden-section search.
const MAX_ITERS: usize = 200;

/// N-input erasure channel with per-class erasure rates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErasureChannelSpec {
    /// Input alphabet size.
    pub n: usize,
    /// Size of the first class; `m = n` collapses to the equal-rate channel.
    pub m: usize,
    /// Erasure probability for inputs in the first class.
    pub q1: f64,
    /// Erasure probability for inputs in the second class.
    pub q2: f64,
}

impl ErasureChannelSpec {
    pub fn new(n: usize, m: usize, q1: f64, q2: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSpec(format!(
                "need at least 2 inputs, got {n}"
            )));
        }
        if m < 1 || m > n {
            return Err(Error::InvalidSpec(format!(
                "class size must satisfy 1 <= m <= n, got m={m}, n={n}"
            )));
        }
        for (name, q) in [("q1", q1), ("q2", q2)] {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::InvalidParameter(format!(
                    "erasure rate {name} must be in [0,1], got {q}"
                )));
            }
        }
        Ok(Self { n, m, q1, q2 })
    }
}

/// Result of the two-rate capacity maximization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub capacity_bits: f64,
    pub optimal_p1: f64,
    pub iterations: usize,
    /// Width of the final search bracket.
    pub tolerance_achieved: f64,
}

/// Base-2 binary entropy; exactly 0 at the endpoints.
pub fn binary_entropy(q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!(
            "entropy argument {q} outside [0,1]"
        )));
    }
    if q == 0.0 || q == 1.0 {
        return Ok(0.0);
    }
    Ok(-q * q.log2() - (1.0 - q) * (1.0 - q).log2())
}

/// Capacity of the N-input erasure channel with uniform erasure rate:
/// `(1 - q_e)·log2 N`.
pub fn capacity_equal(n: usize, q_e: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidSpec(format!(
            "need at least 2 inputs, got {n}"
        )));
    }
    if !(0.0..=1.0).contains(&q_e) {
        return Err(Error::InvalidParameter(format!(
            "erasure rate must be in [0,1], got {q_e}"
        )));
    }
    Ok((1.0 - q_e) * (n as f64).log2())
}

/// Capacity of the channel whose receiver is the pair of consecutive
/// observers: an input survives unless both erase, so
/// `C = (1 - q_B·q_C)·log2 N`. With an optimal second observer
/// `q_B·q_C = s` and the capacity depends only on the initial overlap.
pub fn combined_capacity(n: usize, q_b: f64, q_c: f64) -> Result<f64> {
    for (name, q) in [("q_b", q_b), ("q_c", q_c)] {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidParameter(format!(
                "erasure rate {name} must be in [0,1], got {q}"
            )));
        }
    }
    if n < 2 {
        return Err(Error::InvalidSpec(format!(
            "need at least 2 inputs, got {n}"
        )));
    }
    Ok((1.0 - q_b * q_c) * (n as f64).log2())
}

/// Mutual information of the two-rate erasure channel at class-1 input mass
/// `p1`, with inputs uniform inside each class (which maximizes the output
/// entropy for fixed `p1`). Terms with vanishing weight contribute zero.
pub fn mutual_info_two_rate(spec: &ErasureChannelSpec, p1: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p1) {
        return Err(Error::InvalidParameter(format!(
            "p1 must be in [0,1], got {p1}"
        )));
    }
    let ErasureChannelSpec { n, m, q1, q2 } = *spec;
    let p2 = 1.0 - p1;
    let erased = p1 * q1 + p2 * q2;

    // each term is weight * log2(num/den); a zero weight kills the term
    let term = |weight: f64, num: f64, den: f64| -> f64 {
        if weight == 0.0 {
            0.0
        } else {
            weight * (num / den).log2()
        }
    };
    let g = term(p1 * q1, q1, erased) + term(p2 * q2, q2, erased)
        - term(p1 * (1.0 - q1), p1, m as f64)
        - term(p2 * (1.0 - q2), p2, (n - m) as f64);
    Ok(g)
}

/// Channel capacity of the two-rate erasure channel: maximizes
/// [`mutual_info_two_rate`] over `p1` by golden-section search (the mutual
/// information is concave in the input distribution).
pub fn capacity_two_rate(spec: &ErasureChannelSpec) -> Result<CapacityResult> {
    ErasureChannelSpec::new(spec.n, spec.m, spec.q1, spec.q2)?;
    if spec.m == spec.n {
        // empty second class: the only admissible input distribution has
        // p1 = 1 and the channel is the equal-rate one
        return Ok(CapacityResult {
            capacity_bits: mutual_info_two_rate(spec, 1.0)?,
            optimal_p1: 1.0,
            iterations: 0,
            tolerance_achieved: 0.0,
        });
    }
    let g = |p1: f64| mutual_info_two_rate(spec, p1).expect("p1 stays in [0,1]");

    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = g(x1);
    let mut f2 = g(x2);
    let mut iterations = 0;
    while hi - lo > P1_TOL && iterations < MAX_ITERS {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = g(x2);
        }
        iterations += 1;
    }
    let optimal_p1 = if f1 >= f2 { x1 } else { x2 };
    let mut capacity_bits = g(optimal_p1);
    if capacity_bits.abs() < 1e-15 {
        capacity_bits = 0.0;
    }
    Ok(CapacityResult {
        capacity_bits,
        optimal_p1,
        iterations,
        tolerance_achieved: hi - lo,
    })
}

/// First-order series for the capacity near the symmetric point: at
/// `q1 = q + dq`, `q2 = q - dq`,
/// `G_max = (1-q)·log2 N + dq·(1 - 2M/N)·log2 N + O(dq²)`.
pub fn series_gmax(n: usize, m: usize, q: f64, dq: f64) -> Result<f64> {
    ErasureChannelSpec::new(n, m, q, q)?;
    if q - dq.abs() <= 0.0 || q + dq.abs() >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "series point requires 0 < q-|dq| and q+|dq| < 1, got q={q}, dq={dq}"
        )));
    }
    let logn = (n as f64).log2();
    Ok((1.0 - q) * logn + dq * (1.0 - 2.0 * m as f64 / n as f64) * logn)
}

/// Figure datasets the CLI can emit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureId {
    /// Two-rate capacity against the class split M (N=10, fixed q1).
    Fig1,
    /// Two-rate capacity against q2 (N=6, fixed q1) for several splits.
    Fig2,
    /// Minimum-error success probability against the overlap for several N.
    Fig3,
}

impl std::str::FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1" => Ok(Self::Fig1),
            "fig2" => Ok(Self::Fig2),
            "fig3" => Ok(Self::Fig3),
            other => Err(Error::InvalidParameter(format!(
                "unknown figure id: {other}"
            ))),
        }
    }
}

impl std::fmt::Display for FigureId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Fig1 => write!(f, "fig1"),
            Self::Fig2 => write!(f, "fig2"),
            Self::Fig3 => write!(f, "fig3"),
        }
    }
}

/// Grid parameters for [`figure_data`], with defaults matching the desk
/// scale of the study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FigureGrid {
    /// N for the M-sweep dataset.
    pub fig1_n: usize,
    /// Fixed q1 for the M-sweep dataset.
    pub fig1_q1: f64,
    /// q2 series for the M-sweep dataset.
    pub fig1_q2: Vec<f64>,
    /// N for the q2-sweep dataset.
    pub fig2_n: usize,
    /// Fixed q1 for the q2-sweep dataset.
    pub fig2_q1: f64,
    /// M series for the q2-sweep dataset.
    pub fig2_m: Vec<usize>,
    /// Points in the q2 sweep (inclusive endpoints).
    pub fig2_points: usize,
    /// N series for the overlap sweep.
    pub fig3_n: Vec<usize>,
    /// Points in the overlap sweep (inclusive endpoints).
    pub fig3_points: usize,
}

impl Default for FigureGrid {
    fn default() -> Self {
        Self {
            fig1_n: 10,
            fig1_q1: 0.5,
            fig1_q2: vec![0.1, 0.5, 0.9],
            fig2_n: 6,
            fig2_q1: 0.5,
            fig2_m: vec![1, 3, 5],
            fig2_points: 51,
            fig3_n: vec![2, 4, 8, 16, 64],
            fig3_points: 51,
        }
    }
}

/// One row of a figure dataset: abscissa, series label, ordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FigureRow {
    pub x: f64,
    pub series: String,
    pub value: f64,
}

/// A labeled figure dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FigureTable {
    pub figure: FigureId,
    pub x_label: String,
    pub series_label: String,
    pub value_label: String,
    pub rows: Vec<FigureRow>,
}

/// Produces the dataset behind one of the three figures. Rows come out in
/// canonical order (series first, then abscissa).
pub fn figure_data(figure: FigureId, grid: &FigureGrid) -> Result<FigureTable> {
    match figure {
        FigureId::Fig1 => {
            let n = grid.fig1_n;
            let mut rows = Vec::new();
            for &q2 in &grid.fig1_q2 {
                for m in 1..n {
                    let spec = ErasureChannelSpec::new(n, m, grid.fig1_q1, q2)?;
                    let cap = capacity_two_rate(&spec)?;
                    rows.push(FigureRow {
                        x: m as f64,
                        series: format!("q2={q2}"),
                        value: cap.capacity_bits,
                    });
                }
            }
            Ok(FigureTable {
                figure,
                x_label: "m".into(),
                series_label: "q2".into(),
                value_label: "capacity_bits".into(),
                rows,
            })
        }
        FigureId::Fig2 => {
            if grid.fig2_points < 2 {
                return Err(Error::InvalidParameter(
                    "need at least 2 sweep points".into(),
                ));
            }
            let n = grid.fig2_n;
            let mut rows = Vec::new();
            for &m in &grid.fig2_m {
                for idx in 0..grid.fig2_points {
                    let q2 = idx as f64 / (grid.fig2_points - 1) as f64;
                    let spec = ErasureChannelSpec::new(n, m, grid.fig2_q1, q2)?;
                    let cap = capacity_two_rate(&spec)?;
                    rows.push(FigureRow {
                        x: q2,
                        series: format!("m={m}"),
                        value: cap.capacity_bits,
                    });
                }
            }
            Ok(FigureTable {
                figure,
                x_label: "q2".into(),
                series_label: "m".into(),
                value_label: "capacity_bits".into(),
                rows,
            })
        }
        FigureId::Fig3 => {
            if grid.fig3_points < 2 {
                return Err(Error::InvalidParameter(
                    "need at least 2 sweep points".into(),
                ));
            }
            let mut rows = Vec::new();
            for &n in &grid.fig3_n {
                for idx in 0..grid.fig3_points {
                    let s = idx as f64 / (grid.fig3_points - 1) as f64;
                    rows.push(FigureRow {
                        x: s,
                        series: format!("n={n}"),
                        value: eve::eve_success(n, s)?,
                    });
                }
            }
            Ok(FigureTable {
                figure,
                x_label: "s".into(),
                series_label: "n".into(),
                value_label: "eve_success".into(),
                rows,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Definition-level mutual information over the explicit joint
    /// distribution, independent of the closed-form expression.
    fn brute_force_mutual_info(spec: &ErasureChannelSpec, p1: f64) -> f64 {
        let ErasureChannelSpec { n, m, q1, q2 } = *spec;
        let p_in: Vec<f64> = (0..n)
            .map(|x| {
                if x < m {
                    p1 / m as f64
                } else {
                    (1.0 - p1) / (n - m) as f64
                }
            })
            .collect();
        // outputs: 0..n-1 plus the erasure symbol at index n
        let cond = |y: usize, x: usize| -> f64 {
            let q = if x < m { q1 } else { q2 };
            if y == n {
                q
            } else if y == x {
                1.0 - q
            } else {
                0.0
            }
        };
        let xlog2 = |v: f64| if v <= 0.0 { 0.0 } else { v * v.log2() };
        let mut h_y = 0.0;
        for y in 0..=n {
            let p_out: f64 = (0..n).map(|x| cond(y, x) * p_in[x]).sum();
            h_y -= xlog2(p_out);
        }
        let mut h_y_given_x = 0.0;
        for (x, p) in p_in.iter().enumerate() {
            for y in 0..=n {
                h_y_given_x -= p * xlog2(cond(y, x));
            }
        }
        h_y - h_y_given_x
    }

    #[test]
    fn binary_entropy_examples() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
        let h = binary_entropy(0.25).unwrap();
        let direct = -(0.25f64 * 0.25f64.log2() + 0.75 * 0.75f64.log2());
        assert!((h - direct).abs() < 1e-15);
        assert!((h - 0.811278124459).abs() < 1e-12);
        assert!(binary_entropy(1.5).is_err());
    }

    #[test]
    fn capacity_equal_examples() {
        assert!((capacity_equal(2, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(capacity_equal(5, 1.0).unwrap(), 0.0);
        assert!((capacity_equal(8, 0.5).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn capacity_equal_matches_numerical_maximization() {
        let (n, q) = (8usize, 0.5);
        let spec = ErasureChannelSpec::new(n, 4, q, q).unwrap();
        let cap = capacity_two_rate(&spec).unwrap();
        assert!((cap.capacity_bits - capacity_equal(n, q).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn combined_capacity_examples() {
        assert_eq!(combined_capacity(4, 1.0, 1.0).unwrap(), 0.0);
        // optimal second observer at s = 0.25: qB = qC = 0.5, 0.75 log2 N
        let s: f64 = 0.25;
        let q = s.sqrt();
        let c = combined_capacity(6, q, q).unwrap();
        assert!((c - 0.75 * 6f64.log2()).abs() < 1e-12);
        assert!((combined_capacity(4, 0.3, 0.5).unwrap() - 1.7).abs() < 1e-12);
    }

    #[test]
    fn mutual_info_reduces_to_equal_rate() {
        let spec = ErasureChannelSpec::new(6, 3, 0.4, 0.4).unwrap();
        let g = mutual_info_two_rate(&spec, 0.5).unwrap();
        assert!((g - capacity_equal(6, 0.4).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn mutual_info_single_class_limit() {
        // p1 = 1 uses only the first class: (1-q1) log2 M
        let spec = ErasureChannelSpec::new(6, 3, 0.5, 0.2).unwrap();
        let g = mutual_info_two_rate(&spec, 1.0).unwrap();
        assert!((g - 0.5 * 3f64.log2()).abs() < 1e-12);
        assert!((g - brute_force_mutual_info(&spec, 1.0)).abs() < 1e-12);
    }

    #[test]
    fn mutual_info_matches_brute_force() {
        let spec = ErasureChannelSpec::new(6, 3, 0.5, 0.2).unwrap();
        let g = mutual_info_two_rate(&spec, 0.4).unwrap();
        assert!((g - brute_force_mutual_info(&spec, 0.4)).abs() < 1e-12);

        for (n, m, q1, q2, p1) in [
            (4usize, 1usize, 0.3, 0.8, 0.2),
            (10, 5, 0.5, 0.5, 0.5),
            (5, 4, 0.0, 1.0, 0.7),
            (7, 2, 1.0, 0.1, 0.0),
            (3, 2, 0.6, 0.6, 1.0),
        ] {
            let spec = ErasureChannelSpec::new(n, m, q1, q2).unwrap();
            let a = mutual_info_two_rate(&spec, p1).unwrap();
            let b = brute_force_mutual_info(&spec, p1);
            assert!((a - b).abs() < 1e-12, "n={n} m={m} q1={q1} q2={q2} p1={p1}");
        }
    }

    #[test]
    fn symmetric_capacity_and_optimum() {
        for (n, m, q) in [(6usize, 3usize, 0.4), (10, 5, 0.5), (9, 2, 0.25)] {
            let spec = ErasureChannelSpec::new(n, m, q, q).unwrap();
            let cap = capacity_two_rate(&spec).unwrap();
            assert!(
                (cap.capacity_bits - capacity_equal(n, q).unwrap()).abs() < 1e-9,
                "n={n} m={m} q={q}"
            );
            assert!(
                (cap.optimal_p1 - m as f64 / n as f64).abs() < 1e-6,
                "n={n} m={m} q={q}: p1 {}",
                cap.optimal_p1
            );
        }
    }

    #[test]
    fn fully_erased_channel_has_zero_capacity() {
        let spec = ErasureChannelSpec::new(5, 2, 1.0, 1.0).unwrap();
        let cap = capacity_two_rate(&spec).unwrap();
        assert_eq!(cap.capacity_bits, 0.0);
    }

    #[test]
    fn single_class_split_collapses_to_equal_rate() {
        // m = n leaves the second class empty: all input mass goes to the
        // first class and the capacity is the equal-rate value
        let spec = ErasureChannelSpec::new(6, 6, 0.4, 0.7).unwrap();
        let cap = capacity_two_rate(&spec).unwrap();
        assert!((cap.capacity_bits - capacity_equal(6, 0.4).unwrap()).abs() < 1e-9);
        assert!((cap.optimal_p1 - 1.0).abs() < 1e-6);
        assert!(ErasureChannelSpec::new(6, 7, 0.4, 0.7).is_err());
    }

    #[test]
    fn concavity_along_p1() {
        let spec = ErasureChannelSpec::new(7, 3, 0.45, 0.15).unwrap();
        let g = |p: f64| mutual_info_two_rate(&spec, p).unwrap();
        let probe = [0.1, 0.25, 0.4, 0.55, 0.7, 0.85];
        for w in probe.windows(3) {
            let (a, b, c) = (w[0], w[1], w[2]);
            let chord = g(a) + (g(c) - g(a)) * (b - a) / (c - a);
            assert!(g(b) >= chord - 1e-12, "concavity violated at {b}");
        }
    }

    #[test]
    fn series_examples() {
        assert!((series_gmax(10, 5, 0.4, 0.0).unwrap() - 0.6 * 10f64.log2()).abs() < 1e-12);
        // balanced split: the first-order term vanishes
        let balanced = series_gmax(10, 5, 0.4, 0.07).unwrap();
        assert!((balanced - series_gmax(10, 5, 0.4, 0.0).unwrap()).abs() < 1e-12);
        // majority class failing more lowers the capacity
        let majority_worse = series_gmax(10, 7, 0.4, 0.05).unwrap();
        assert!(majority_worse < series_gmax(10, 7, 0.4, 0.0).unwrap());
        let spec_plus = ErasureChannelSpec::new(10, 7, 0.45, 0.35).unwrap();
        let spec_zero = ErasureChannelSpec::new(10, 7, 0.4, 0.4).unwrap();
        assert!(
            capacity_two_rate(&spec_plus).unwrap().capacity_bits
                < capacity_two_rate(&spec_zero).unwrap().capacity_bits
        );
        assert!(series_gmax(10, 5, 0.4, 0.5).is_err());
    }

    #[test]
    fn series_remainder_is_quadratic() {
        // the gap to the first-order series shrinks ~4x when dq halves
        for m in [3usize, 5, 7] {
            let mut gaps = Vec::new();
            for dq in [0.08, 0.04, 0.02] {
                let spec = ErasureChannelSpec::new(10, m, 0.4 + dq, 0.4 - dq).unwrap();
                let numeric = capacity_two_rate(&spec).unwrap().capacity_bits;
                let series = series_gmax(10, m, 0.4, dq).unwrap();
                gaps.push((numeric - series).abs());
            }
            assert!(gaps[0] / gaps[1] >= 3.5, "m={m} gaps={gaps:?}");
            assert!(gaps[1] / gaps[2] >= 3.5, "m={m} gaps={gaps:?}");
        }
    }

    #[test]
    fn figure_one_dataset_properties() {
        let table = figure_data(FigureId::Fig1, &FigureGrid::default()).unwrap();
        assert_eq!(table.rows.len(), 27);
        // the q2 = q1 curve is flat at (1-q1) log2 N
        let want = 0.5 * 10f64.log2();
        for row in table.rows.iter().filter(|r| r.series == "q2=0.5") {
            assert!((row.value - want).abs() < 1e-9);
        }
        // capacity is lowest for high q2 and low m
        let value_at = |series: &str, x: f64| {
            table
                .rows
                .iter()
                .find(|r| r.series == series && r.x == x)
                .map(|r| r.value)
                .unwrap()
        };
        let worst = value_at("q2=0.9", 1.0);
        for row in &table.rows {
            assert!(worst <= row.value + 1e-12);
        }
    }

    #[test]
    fn figure_two_dataset_is_monotone_in_q2() {
        let grid = FigureGrid {
            fig2_points: 21,
            ..FigureGrid::default()
        };
        let table = figure_data(FigureId::Fig2, &grid).unwrap();
        for m in &grid.fig2_m {
            let series = format!("m={m}");
            let values: Vec<f64> = table
                .rows
                .iter()
                .filter(|r| r.series == series)
                .map(|r| r.value)
                .collect();
            assert_eq!(values.len(), 21);
            for w in values.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "capacity must not increase with q2");
            }
        }
    }

    #[test]
    fn unknown_figure_id_is_rejected() {
        assert!("fig4".parse::<FigureId>().is_err());
        assert_eq!("fig3".parse::<FigureId>().unwrap(), FigureId::Fig3);
    }
}
