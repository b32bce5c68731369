//! Atom chain geometry and its decomposition into distance classes.

use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone)]
pub enum GeometryError {
    Invalid(String),
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::Invalid(msg) => write!(f, "invalid geometry: {msg}"),
        }
    }
}

impl std::error::Error for GeometryError {}

/// Positions of the atoms along the waveguide, in units of `1/k0`,
/// strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainGeometry {
    positions: Vec<f64>,
}

impl ChainGeometry {
    /// Uniform chain with the first atom at the origin: `x_i = (i-1) d`.
    pub fn uniform(n: usize, spacing: f64) -> Result<Self, GeometryError> {
        if n == 0 {
            return Err(GeometryError::Invalid("atom count must be >= 1".into()));
        }
        if n > 1 && !(spacing > 0.0 && spacing.is_finite()) {
            return Err(GeometryError::Invalid(format!(
                "spacing must be positive and finite, got {spacing}"
            )));
        }
        Ok(ChainGeometry {
            positions: (0..n).map(|i| i as f64 * spacing).collect(),
        })
    }

    pub fn from_positions(positions: Vec<f64>) -> Result<Self, GeometryError> {
        if positions.is_empty() {
            return Err(GeometryError::Invalid("atom count must be >= 1".into()));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(GeometryError::Invalid("positions must be finite".into()));
        }
        for w in positions.windows(2) {
            if !(w[1] > w[0]) {
                return Err(GeometryError::Invalid(format!(
                    "positions must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        Ok(ChainGeometry { positions })
    }

    pub fn n_atoms(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Uniform spacing if the chain is uniform (within 1e-12 relative).
    pub fn uniform_spacing(&self) -> Option<f64> {
        if self.positions.len() < 2 {
            return Some(0.0);
        }
        let d = self.positions[1] - self.positions[0];
        for w in self.positions.windows(2) {
            if ((w[1] - w[0]) - d).abs() > 1e-12 * d.max(1.0) {
                return None;
            }
        }
        Some(d)
    }

    pub fn pair_distance(&self, i: usize, j: usize) -> f64 {
        (self.positions[i] - self.positions[j]).abs()
    }

    /// Group atom pairs by distance so each kernel value is evaluated once
    /// per (distance class, lag) rather than per (i, j, lag).
    pub fn distance_classes(&self) -> DistanceClasses {
        let n = self.n_atoms();
        let mut distances: Vec<f64> = vec![0.0];
        let mut pairs: Vec<Vec<(u32, u32)>> = vec![(0..n as u32).map(|i| (i, i)).collect()];
        let mut raw: Vec<(f64, u32, u32)> = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                raw.push((self.pair_distance(i, j), i as u32, j as u32));
            }
        }
        raw.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for (r, i, j) in raw {
            let last = *distances.last().unwrap();
            if (r - last).abs() <= 1e-9 * r.max(1.0) {
                pairs.last_mut().unwrap().push((i, j));
            } else {
                distances.push(r);
                pairs.push(vec![(i, j)]);
            }
        }
        DistanceClasses { distances, pairs }
    }

    /// FNV-1a hash of the positions' bit patterns, for cache keys.
    pub fn content_hash(&self) -> u64 {
        let mut h = crate::fnv::Fnv1a::new();
        for x in &self.positions {
            h.write_u64(x.to_bits());
        }
        h.finish()
    }
}

/// Distinct pair distances of a geometry with the atom pairs sharing each.
///
/// Class 0 is always the coincidence class `r = 0` holding the diagonal
/// pairs `(i, i)`; classes with positive distance hold each unordered pair
/// `(i, j)`, `i < j`, exactly once.
#[derive(Debug, Clone)]
pub struct DistanceClasses {
    pub distances: Vec<f64>,
    pub pairs: Vec<Vec<(u32, u32)>>,
}

impl DistanceClasses {
    pub fn n_classes(&self) -> usize {
        self.distances.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_chain_positions() {
        let g = ChainGeometry::uniform(4, 0.5).unwrap();
        assert_eq!(g.positions(), &[0.0, 0.5, 1.0, 1.5]);
        assert_eq!(g.uniform_spacing(), Some(0.5));
    }

    #[test]
    fn twenty_equally_spaced_atoms_have_twenty_classes() {
        let d = 0.1 * std::f64::consts::PI;
        let g = ChainGeometry::uniform(20, d).unwrap();
        let cls = g.distance_classes();
        assert_eq!(cls.n_classes(), 20);
        for (m, r) in cls.distances.iter().enumerate() {
            assert!((r - m as f64 * d).abs() < 1e-9);
        }
        // 20 diagonal pairs in class 0, 19 nearest-neighbour pairs, ... 1 pair at 19 d.
        assert_eq!(cls.pairs[0].len(), 20);
        assert_eq!(cls.pairs[1].len(), 19);
        assert_eq!(cls.pairs[19].len(), 1);
    }

    #[test]
    fn rejects_bad_positions() {
        assert!(ChainGeometry::from_positions(vec![]).is_err());
        assert!(ChainGeometry::from_positions(vec![0.0, 0.0]).is_err());
        assert!(ChainGeometry::from_positions(vec![1.0, 0.5]).is_err());
        assert!(ChainGeometry::from_positions(vec![0.0, f64::NAN]).is_err());
        assert!(ChainGeometry::uniform(0, 1.0).is_err());
    }

    #[test]
    fn non_uniform_chain_detected() {
        let g = ChainGeometry::from_positions(vec![0.0, 1.0, 2.5]).unwrap();
        assert_eq!(g.uniform_spacing(), None);
        let cls = g.distance_classes();
        assert_eq!(cls.distances.len(), 4); // 0, 1.0, 1.5, 2.5
    }

    #[test]
    fn content_hash_is_stable_and_sensitive() {
        let g1 = ChainGeometry::uniform(3, 0.5).unwrap();
        let g2 = ChainGeometry::uniform(3, 0.5).unwrap();
        let g3 = ChainGeometry::uniform(3, 0.6).unwrap();
        assert_eq!(g1.content_hash(), g2.content_hash());
        assert_ne!(g1.content_hash(), g3.content_hash());
    }
}
