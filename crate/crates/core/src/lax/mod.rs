//! Approximation of a measure-preserving map by a cell permutation.

mod cyclic;
mod matching;

pub use cyclic::{bicyclize, cyclic_displacement, cyclicize, Bicyclization};
pub use matching::{hall_matching, maximum_matching_size};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::DyadicGrid;
use crate::maps::{overlap_matrix, MeasureMap, Sampling};
use crate::perm::CellPermutation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LaxMode {
    Plain,
    Cyclic,
    Bicyclic,
}

impl std::str::FromStr for LaxMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "plain" => Ok(LaxMode::Plain),
            "cyclic" => Ok(LaxMode::Cyclic),
            "bicyclic" => Ok(LaxMode::Bicyclic),
            other => Err(Error::ConfigError(format!("unknown mode `{other}`"))),
        }
    }
}

/// What the pipeline can vouch for about its output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaxCertificate {
    pub mode: LaxMode,
    /// Per cell, whether the matched image cell has positive overlap.
    pub matched_overlap_ok: Vec<bool>,
    /// Same check for the returned permutation after the cycle surgery.
    pub final_overlap_ok: Vec<bool>,
    pub max_cell_diameter: f64,
    pub max_image_diameter: f64,
    /// `max_i diam(C_i) + diam(f(C_i))` for the matching itself.
    pub plain_bound: f64,
    /// Largest distance between the matched and the final image centers.
    pub shift_bound: f64,
    /// `plain_bound + shift_bound`, a bound on the sup distance between the
    /// map and the returned permutation.
    pub strong_bound: f64,
    pub cycle_lengths: Vec<usize>,
}

impl LaxCertificate {
    pub fn all_matched_positive(&self) -> bool {
        self.matched_overlap_ok.iter().all(|&b| b)
    }

    /// Fraction of cells whose final image has positive overlap.
    pub fn final_positive_fraction(&self) -> f64 {
        if self.final_overlap_ok.is_empty() {
            return 1.0;
        }
        self.final_overlap_ok.iter().filter(|&&b| b).count() as f64 / self.final_overlap_ok.len() as f64
    }
}

/// The grid a map is naturally approximated on.
pub fn grid_for(map: &MeasureMap, order: u32) -> Result<DyadicGrid> {
    DyadicGrid::new(map.dim(), order, map.topology())
}

/// Overlap matrix → max-weight matching → optional cycle surgery along the
/// snake order of `grid`.
pub fn lax_approximate(
    map: &MeasureMap,
    grid: &DyadicGrid,
    sampling: Sampling,
    mode: LaxMode,
) -> Result<(CellPermutation, LaxCertificate)> {
    let weights = overlap_matrix(map, grid, sampling)?;
    let matched = hall_matching(&weights)?;
    let q = grid.cell_count();
    let result = match mode {
        LaxMode::Plain => matched.clone(),
        LaxMode::Cyclic | LaxMode::Bicyclic => {
            let ordering = grid.snake_order()?;
            let (_, cyclic) = cyclicize(&matched, &ordering)?;
            if mode == LaxMode::Bicyclic {
                bicyclize(&cyclic, &ordering)?.perm
            } else {
                cyclic
            }
        }
    };
    let cell_diam = grid.cell_diameter();
    let image_diams = weights.image_diameters().map(<[f64]>::to_vec).unwrap_or_else(|| vec![cell_diam; q]);
    let max_image_diameter = image_diams.iter().cloned().fold(0.0, f64::max);
    let plain_bound = image_diams.iter().map(|d| cell_diam + d).fold(0.0, f64::max);
    let shift_bound = (0..q)
        .map(|i| grid.center_distance(matched.apply(i), result.apply(i)))
        .fold(0.0, f64::max);
    let certificate = LaxCertificate {
        mode,
        matched_overlap_ok: (0..q).map(|i| weights.count(i, matched.apply(i)) > 0).collect(),
        final_overlap_ok: (0..q).map(|i| weights.count(i, result.apply(i)) > 0).collect(),
        max_cell_diameter: cell_diam,
        max_image_diameter,
        plain_bound,
        shift_bound,
        strong_bound: plain_bound + shift_bound,
        cycle_lengths: result.cycle_lengths(),
    };
    Ok((result, certificate))
}

/// Cell-translation map of a permutation on `grid`.
pub fn as_map(perm: &CellPermutation, grid: &DyadicGrid) -> MeasureMap {
    MeasureMap::Dyadic { grid: *grid, perm: perm.clone() }
}
