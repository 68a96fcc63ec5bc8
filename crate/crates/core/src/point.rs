use alloc::vec::Vec;

use crate::error::{usage, Result};

/// Coordinates of a state. What they mean is up to the space: a scalar for
/// CIR and OU, nodal values for Allen-Cahn, quantile values for Wasserstein-1D.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct StatePoint {
    coords: Vec<f64>,
}

impl StatePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(usage("state point needs at least one coordinate"));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(usage(alloc::format!("coordinate {i} is not finite")));
        }
        Ok(StatePoint { coords })
    }

    /// Internal constructor for coordinates known to be finite.
    pub(crate) fn from_vec(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        StatePoint { coords }
    }

    pub fn scalar(x: f64) -> Self {
        assert!(x.is_finite(), "scalar state must be finite");
        StatePoint { coords: alloc::vec![x] }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// First coordinate; the whole state for one-dimensional spaces.
    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}
