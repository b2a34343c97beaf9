//! ε-regularity detection of singular points.

use std::collections::BTreeSet;

use serde::Serialize;

use super::{normalized_energy, BallFamily};
use crate::error::{Error, Result};
use crate::field::VectorField;

/// Number of side-`r` grid boxes hit by the flagged centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoveringCount {
    pub r: f64,
    pub boxes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularSetReport {
    pub eps_threshold: f64,
    pub radius: f64,
    /// Indices into the family's centers.
    pub flagged: Vec<usize>,
    pub flagged_points: Vec<Vec<f64>>,
    pub flagged_count: usize,
    /// Largest normalized energy seen at each center.
    pub center_sup: Vec<f64>,
    pub covering: Vec<CoveringCount>,
}

/// Flags every family center `x` with `max_{ρ ≤ R} ρ^{p−n} ∫_{B(x,ρ)∩D} |∇u|^p ≥ eps`,
/// the maximum taken over the family radii not exceeding `R`.
pub fn singular_set(
    field: &VectorField,
    p: f64,
    eps_threshold: f64,
    radius: f64,
    family: &BallFamily,
) -> Result<SingularSetReport> {
    if !(eps_threshold > 0.0) {
        return Err(Error::InvalidParameter(format!("eps_threshold = {eps_threshold} must be > 0")));
    }
    let radii: Vec<f64> = family.radii().iter().copied().filter(|&r| r <= radius).collect();
    if radii.is_empty() {
        return Err(Error::InvalidParameter(format!("no family radius is <= {radius}")));
    }
    let center_sup: Vec<f64> = family
        .centers()
        .iter()
        .map(|c| radii.iter().map(|&r| normalized_energy(field, p, c, r)).fold(0.0, f64::max))
        .collect();
    let flagged: Vec<usize> = (0..center_sup.len()).filter(|&i| center_sup[i] >= eps_threshold).collect();
    let flagged_points: Vec<Vec<f64>> = flagged.iter().map(|&i| family.centers()[i].clone()).collect();
    let covering = radii
        .iter()
        .map(|&r| {
            let boxes: BTreeSet<Vec<i64>> = flagged_points
                .iter()
                .map(|x| x.iter().map(|t| (t / r).floor() as i64).collect())
                .collect();
            CoveringCount { r, boxes: boxes.len() }
        })
        .collect();
    Ok(SingularSetReport {
        eps_threshold,
        radius,
        flagged_count: flagged.len(),
        flagged,
        flagged_points,
        center_sup,
        covering,
    })
}
