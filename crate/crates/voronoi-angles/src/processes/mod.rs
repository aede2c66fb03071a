//! Extraction of the point processes living on the tessellation: the
//! prescribed-angle facet process, line crossings with angle marks, and
//! Palm statistics of the cell at the origin.

mod crossings;
mod psi;
mod typical_cell;

pub use crossings::{scan_crossings, Crossing, CrossingScan};
pub use psi::{extract_psi_theta, PsiExtraction, PsiPoint};
pub use typical_cell::{
    typical_cell_stats_2d, typical_cell_stats_3d, TypicalCellOutcome, TypicalCellStats,
};
