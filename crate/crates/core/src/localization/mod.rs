//! The k-plane: parametrization of the threshold neighbourhoods, sectors,
//! determinant-zero search and the localization checks.

pub mod checks;
pub mod equivalence;
mod param;
pub mod sector;
pub mod zeros;

pub use checks::{check_clusters, check_sectors, scan_counts, CheckModel, CheckOptions};
pub use equivalence::{check_equivalence, EquivalenceOptions, EquivalenceReport};
pub use param::{k_of_z, z_of_k, HalfPlane, KPoint};
pub use sector::{sector_contains, QuarterDisc, Region, SectorSpec};
pub use zeros::{
    counting_function, find_zeros, find_zeros_bs, SearchOutcome, ZeroRecord, ZeroSearch,
};
