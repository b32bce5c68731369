//! Initial-state constructors: single excited atom, timed-Dicke states with
//! position-dependent phases, and the subradiant antisymmetric combination.

use crate::geometry::ChainGeometry;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone)]
pub enum StateError {
    Invalid(String),
}

impl fmt::Display for StateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateError::Invalid(msg) => write!(f, "invalid initial state: {msg}"),
        }
    }
}

impl std::error::Error for StateError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum StateLabel {
    SingleAtom { atom_index: usize },
    TimedDicke { k_over_k0: f64 },
    Subradiant,
    Custom,
}

/// A normalized single-excitation initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    pub amplitudes: Vec<Complex64>,
    pub label: StateLabel,
    /// Norm of the raw construction before the explicit renormalization
    /// (recorded in the run manifest; exactly 1 for the phase states).
    pub pre_normalization_norm: f64,
}

fn normalized(mut amplitudes: Vec<Complex64>, label: StateLabel) -> Result<InitialState, StateError> {
    let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    if !(norm_sq > 0.0) || !norm_sq.is_finite() {
        return Err(StateError::Invalid(format!(
            "state norm^2 = {norm_sq} is not positive and finite"
        )));
    }
    let norm = norm_sq.sqrt();
    for a in amplitudes.iter_mut() {
        *a /= norm;
    }
    Ok(InitialState {
        amplitudes,
        label,
        pre_normalization_norm: norm,
    })
}

/// All excitation on one atom.
pub fn single_atom(geometry: &ChainGeometry, atom_index: usize) -> Result<InitialState, StateError> {
    let n = geometry.n_atoms();
    if atom_index >= n {
        return Err(StateError::Invalid(format!(
            "atom_index {atom_index} out of range for {n} atoms"
        )));
    }
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); n];
    amplitudes[atom_index] = Complex64::new(1.0, 0.0);
    Ok(InitialState {
        amplitudes,
        label: StateLabel::SingleAtom { atom_index },
        pre_normalization_norm: 1.0,
    })
}

/// Timed-Dicke state: `alpha_j = e^{i k x_j} / sqrt(N)` with `k` in units
/// of `k0`. At `k = 1` this is the single-photon superradiant state.
pub fn timed_dicke(geometry: &ChainGeometry, k_over_k0: f64) -> Result<InitialState, StateError> {
    if !k_over_k0.is_finite() {
        return Err(StateError::Invalid(format!(
            "k_over_k0 must be finite, got {k_over_k0}"
        )));
    }
    let n = geometry.n_atoms() as f64;
    let inv = 1.0 / n.sqrt();
    let amplitudes = geometry
        .positions()
        .iter()
        .map(|&x| Complex64::new(0.0, k_over_k0 * x).exp() * inv)
        .collect();
    Ok(InitialState {
        amplitudes,
        label: StateLabel::TimedDicke { k_over_k0 },
        pre_normalization_norm: 1.0,
    })
}

/// Subradiant state: the antisymmetric combination of timed-Dicke states at
/// `±k` with `k d = pi N/(N+1)`, built on the chain's own coordinates
/// (first atom at the origin), then explicitly renormalized.
///
/// The raw `(|Psi_k> - |Psi_-k>)/sqrt(2)` is not exactly normalized on a
/// finite chain; the achieved pre-normalization norm is recorded.
pub fn subradiant_state(geometry: &ChainGeometry) -> Result<InitialState, StateError> {
    let n = geometry.n_atoms();
    if n < 2 {
        return Err(StateError::Invalid(
            "subradiant state needs at least 2 atoms".into(),
        ));
    }
    let d = geometry.uniform_spacing().ok_or_else(|| {
        StateError::Invalid("subradiant state requires a uniform chain (k d undefined otherwise)".into())
    })?;
    if d <= 0.0 {
        return Err(StateError::Invalid("chain spacing must be positive".into()));
    }
    let kd = std::f64::consts::PI * n as f64 / (n as f64 + 1.0);
    let k = kd / d;
    let pref = 1.0 / (2.0 * n as f64).sqrt();
    let amplitudes: Vec<Complex64> = geometry
        .positions()
        .iter()
        .map(|&x| {
            (Complex64::new(0.0, k * x).exp() - Complex64::new(0.0, -k * x).exp()) * pref
        })
        .collect();
    normalized(amplitudes, StateLabel::Subradiant)
}

/// User-supplied amplitudes, explicitly renormalized.
pub fn custom(geometry: &ChainGeometry, amplitudes: Vec<Complex64>) -> Result<InitialState, StateError> {
    if amplitudes.len() != geometry.n_atoms() {
        return Err(StateError::Invalid(format!(
            "got {} amplitudes for {} atoms",
            amplitudes.len(),
            geometry.n_atoms()
        )));
    }
    normalized(amplitudes, StateLabel::Custom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn timed_dicke_zero_phase() {
        let g = ChainGeometry::uniform(2, 0.5).unwrap();
        let s = timed_dicke(&g, 0.0).unwrap();
        let want = 1.0 / 2.0_f64.sqrt();
        assert_eq!(s.amplitudes[0], Complex64::new(want, 0.0));
        assert_eq!(s.amplitudes[1], Complex64::new(want, 0.0));
    }

    #[test]
    fn timed_dicke_resonant_phases() {
        let d = 0.1 * PI;
        let g = ChainGeometry::uniform(4, d).unwrap();
        let s = timed_dicke(&g, 1.0).unwrap();
        for (j, a) in s.amplitudes.iter().enumerate() {
            let want = Complex64::new(0.0, d * j as f64).exp() * 0.5;
            assert!((a - want).norm() < 1e-15);
        }
        let norm: f64 = s.amplitudes.iter().map(|a| a.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-14);
    }

    #[test]
    fn subradiant_wavenumber_and_pattern() {
        let n = 20;
        let d = 0.1 * PI;
        let g = ChainGeometry::uniform(n, d).unwrap();
        let s = subradiant_state(&g).unwrap();
        let kd = PI * n as f64 / (n as f64 + 1.0);
        assert!((kd - 20.0 * PI / 21.0).abs() < 1e-14);
        // Amplitudes follow the sin(k x_j) pattern with x_j = (j-1) d.
        let norm: f64 = s.amplitudes.iter().map(|a| a.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        let scale = s.amplitudes[1].norm() / (kd).sin().abs();
        for (j, a) in s.amplitudes.iter().enumerate() {
            let want = (kd * j as f64).sin().abs() * scale;
            assert!(
                (a.norm() - want).abs() < 1e-12,
                "atom {j}: |a| = {} vs sin pattern {want}",
                a.norm()
            );
        }
    }

    #[test]
    fn subradiant_two_atoms() {
        let d = 0.7;
        let g = ChainGeometry::uniform(2, d).unwrap();
        let s = subradiant_state(&g).unwrap();
        // kd = 2 pi/3; with the first atom at the origin its amplitude is 0.
        assert_eq!(s.amplitudes[0].norm(), 0.0);
        assert!((s.amplitudes[1].norm() - 1.0).abs() < 1e-14);
        // Raw antisymmetric combination has norm^2 = 3/4 at N = 2.
        assert!((s.pre_normalization_norm.powi(2) - 0.75).abs() < 1e-13);
    }

    #[test]
    fn subradiant_rejects_non_uniform_chain() {
        let g = ChainGeometry::from_positions(vec![0.0, 1.0, 2.5]).unwrap();
        assert!(subradiant_state(&g).is_err());
        let g1 = ChainGeometry::uniform(1, 1.0).unwrap();
        assert!(subradiant_state(&g1).is_err());
    }

    #[test]
    fn single_atom_and_custom() {
        let g = ChainGeometry::uniform(3, 0.4).unwrap();
        let s = single_atom(&g, 1).unwrap();
        assert_eq!(s.amplitudes[1], Complex64::new(1.0, 0.0));
        assert!(single_atom(&g, 3).is_err());
        let c = custom(&g, vec![Complex64::new(3.0, 0.0); 3]).unwrap();
        let norm: f64 = c.amplitudes.iter().map(|a| a.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-14);
        assert!((c.pre_normalization_norm - 27.0_f64.sqrt()).abs() < 1e-12);
        assert!(custom(&g, vec![Complex64::new(0.0, 0.0); 3]).is_err());
    }
}
