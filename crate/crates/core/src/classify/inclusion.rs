//! Well labelling of every cell.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::StrainField;
use crate::wells::{build_wells, WellParams};

/// Entrywise tolerance for matching a cell to a well.
pub const WELL_MATCH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionMap {
    /// 1-based well index per cell, `None` for off-well cells.
    pub labels: Vec<Option<u8>>,
    /// Linear indices of all off-well cells, masked or not.
    pub defects: Vec<usize>,
    /// Number of cells per well.
    pub counts: [usize; 4],
}

impl InclusionMap {
    pub fn defect_fraction(&self) -> f64 {
        self.defects.len() as f64 / self.labels.len() as f64
    }

    /// Wells that occur at least once.
    pub fn wells_present(&self) -> Vec<usize> {
        (0..4).filter(|&w| self.counts[w] > 0).map(|w| w + 1).collect()
    }
}

/// An unmasked cell that matches no well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionViolation {
    pub cell: [usize; 3],
    pub distance: f64,
}

/// Labels each cell with its well. Off-well cells are allowed only under
/// the mask.
pub fn check_inclusion(e: &StrainField, params: WellParams) -> Result<InclusionMap, InclusionViolation> {
    let set = build_wells(params);
    let labels: Vec<Option<u8>> = (0..e.grid.len())
        .into_par_iter()
        .map(|idx| set.identify(&e.at(idx), WELL_MATCH_TOL).map(|w| w as u8))
        .collect();
    let mut counts = [0usize; 4];
    let mut defects = Vec::new();
    for (idx, label) in labels.iter().enumerate() {
        match label {
            Some(w) => counts[*w as usize - 1] += 1,
            None => {
                if !e.mask[idx] {
                    let m = e.at(idx);
                    let distance = set.wells.iter().map(|w| w.max_abs_diff(&m)).fold(f64::INFINITY, f64::min);
                    return Err(InclusionViolation { cell: e.grid.coords(idx), distance });
                }
                defects.push(idx);
            }
        }
    }
    Ok(InclusionMap { labels, defects, counts })
}
