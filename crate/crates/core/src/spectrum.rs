//! Singular spectra of matricized tensors and the entanglement measures derived from them.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// Relative tolerance used when no other is supplied.
pub const DEFAULT_RANK_TOL: f64 = 1e-7;

/// Singular values sorted non-increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularSpectrum {
    values: Vec<f64>,
}

impl SingularSpectrum {
    /// Sorts `values` non-increasing; negative or non-finite values are rejected.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::NonFinite(
                "singular values must be finite and non-negative".into(),
            ));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

/// All `min(rows, cols)` singular values of an order-2 tensor.
pub fn svd_spectrum(m: &DenseTensor) -> Result<SingularSpectrum> {
    if m.order() != 2 {
        return Err(Error::Shape(format!(
            "singular values need a matrix, got order {}",
            m.order()
        )));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("matrix".into()));
    }
    let (rows, cols) = (m.shape()[0], m.shape()[1]);
    // Decompose the wide-or-square orientation; singular values are transpose invariant.
    let mat = if rows >= cols {
        DMatrix::from_row_slice(rows, cols, m.data())
    } else {
        DMatrix::from_column_slice(cols, rows, m.data())
    };
    let sv = mat.singular_values();
    SingularSpectrum::new(sv.iter().map(|v| v.max(0.0)).collect())
}

/// Number of singular values strictly above `tol * largest`.
pub fn numerical_rank(s: &SingularSpectrum, tol: f64) -> usize {
    let top = s.largest();
    if top <= 0.0 {
        return 0;
    }
    let cutoff = tol * top;
    s.values().iter().take_while(|&&v| v > cutoff).count()
}

/// How the rank cutoff is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankRule {
    /// Count values above `tol * largest`.
    Relative(f64),
    /// `max(rows, cols) * eps * largest`, the usual dense-LAPACK convention.
    Machine,
}

impl Default for RankRule {
    fn default() -> Self {
        RankRule::Relative(DEFAULT_RANK_TOL)
    }
}

impl RankRule {
    /// The relative tolerance for a `rows x cols` matrix.
    pub fn tolerance(&self, rows: usize, cols: usize) -> f64 {
        match *self {
            RankRule::Relative(t) => t,
            RankRule::Machine => rows.max(cols) as f64 * f64::EPSILON,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RankRule::Relative(t) if !(t > 0.0 && t < 1.0) => {
                Err(Error::Config(format!("rank tolerance {t} outside (0, 1)")))
            }
            _ => Ok(()),
        }
    }
}

impl std::str::FromStr for RankRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "machine" => Ok(RankRule::Machine),
            t => t
                .parse::<f64>()
                .map(RankRule::Relative)
                .map_err(|_| Error::Config(format!("expected a number or 'machine', got {t:?}"))),
        }
    }
}

impl std::fmt::Display for RankRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RankRule::Relative(t) => write!(f, "{t:e}"),
            RankRule::Machine => f.write_str("machine"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntanglementReport {
    /// Entanglement entropy in nats.
    pub entropy: f64,
    /// Geometric measure, in `[0, 1]`.
    pub geometric: f64,
    /// Schmidt number (numerical rank).
    pub schmidt: usize,
    pub tolerance_used: f64,
    /// How the squared spectrum was normalized before taking the entropy.
    pub normalization: String,
}

pub const ENTROPY_NORMALIZATION: &str = "squared values above tolerance rescaled to sum 1";

/// Entropy, geometric measure and Schmidt number of a spectrum.
///
/// The entropy is taken over the values counted by the Schmidt number, so
/// `entropy <= ln(schmidt)` holds exactly. Values at or below the tolerance
/// are treated as numerical zeros (`0 ln 0 = 0`).
pub fn entanglement_measures(s: &SingularSpectrum, tol: f64) -> Result<EntanglementReport> {
    if s.is_empty() {
        return Err(Error::Undefined("empty spectrum".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Undefined(format!("tolerance must be positive, got {tol}")));
    }
    if s.largest() <= 0.0 {
        return Err(Error::Undefined("all singular values are zero".into()));
    }
    let schmidt = numerical_rank(s, tol);

    // 1 - top^2/total, summed from the tail to avoid cancellation near rank one
    let tail: f64 = s.values()[1..].iter().map(|v| v * v).sum();
    let total = s.largest() * s.largest() + tail;
    let geometric = (tail / total).sqrt().min(1.0);

    let kept = &s.values()[..schmidt];
    let kept_total: f64 = kept.iter().map(|v| v * v).sum();
    let entropy = kept
        .iter()
        .map(|v| v * v / kept_total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum::<f64>()
        .max(0.0)
        .min((schmidt.max(1) as f64).ln());

    Ok(EntanglementReport {
        entropy,
        geometric,
        schmidt,
        tolerance_used: tol,
        normalization: ENTROPY_NORMALIZATION.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(v: &[f64]) -> SingularSpectrum {
        SingularSpectrum::new(v.to_vec()).unwrap()
    }

    #[test]
    fn identity_spectrum() {
        let m = DenseTensor::matrix(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let s = svd_spectrum(&m).unwrap();
        assert_relative_eq!(s.values()[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(s.values()[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn rank_one_matrix_spectrum() {
        let u = [1.0, 2.0, 2.0];
        let v = [3.0, 4.0];
        let rows: Vec<Vec<f64>> = u.iter().map(|a| v.iter().map(|b| a * b).collect()).collect();
        let s = svd_spectrum(&DenseTensor::matrix(&rows).unwrap()).unwrap();
        assert_eq!(s.len(), 2);
        assert_relative_eq!(s.values()[0], 15.0, max_relative = 1e-12);
        assert!(s.values()[1] < 1e-12);
        // wide orientation gives the same spectrum
        let wide: Vec<Vec<f64>> = v.iter().map(|b| u.iter().map(|a| a * b).collect()).collect();
        let sw = svd_spectrum(&DenseTensor::matrix(&wide).unwrap()).unwrap();
        assert_relative_eq!(sw.values()[0], 15.0, max_relative = 1e-12);
    }

    #[test]
    fn svd_rejects_non_finite_and_non_matrix() {
        let m = DenseTensor::matrix(&[vec![f64::NAN, 0.0]]).unwrap();
        assert!(matches!(svd_spectrum(&m), Err(Error::NonFinite(_))));
        let t = DenseTensor::zeros(vec![2, 2, 2]).unwrap();
        assert!(svd_spectrum(&t).is_err());
    }

    #[test]
    fn rank_with_tolerance() {
        assert_eq!(numerical_rank(&spec(&[1.0, 1e-12]), 1e-7), 1);
        assert_eq!(numerical_rank(&spec(&[3.0, 2.0, 1.0]), 1e-7), 3);
        assert_eq!(numerical_rank(&spec(&[0.0, 0.0]), 1e-7), 0);
    }

    #[test]
    fn separable_state_measures() {
        let r = entanglement_measures(&spec(&[1.0, 0.0]), 1e-7).unwrap();
        assert_eq!(r.entropy, 0.0);
        assert_eq!(r.geometric, 0.0);
        assert_eq!(r.schmidt, 1);
    }

    #[test]
    fn maximally_entangled_measures() {
        for r in 1..=16 {
            let rep = entanglement_measures(&spec(&vec![0.3; r]), 1e-7).unwrap();
            assert_relative_eq!(rep.entropy, (r as f64).ln(), epsilon = 1e-12);
            assert_eq!(rep.schmidt, r);
        }
        let h = 0.5f64.sqrt();
        let rep = entanglement_measures(&spec(&[h, h]), 1e-7).unwrap();
        assert_relative_eq!(rep.entropy, 0.693147, epsilon = 1e-6);
        assert_relative_eq!(rep.geometric, 0.707107, epsilon = 1e-6);
        assert_eq!(rep.schmidt, 2);
    }

    #[test]
    fn zero_spectrum_is_undefined() {
        assert!(entanglement_measures(&spec(&[0.0, 0.0]), 1e-7).is_err());
        assert!(entanglement_measures(&spec(&[]), 1e-7).is_err());
        assert!(entanglement_measures(&spec(&[1.0]), 0.0).is_err());
    }
}
