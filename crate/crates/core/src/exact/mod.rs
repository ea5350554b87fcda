//! Exact finite-n laws through the Kolchin representation.

mod brute;
mod kolchin;
mod law;
mod product;
mod table;

pub use brute::{brute_force_partition_law, BruteForceLaws};
pub(crate) use kolchin::certified_ell_max;
pub use kolchin::{kolchin_rho, law_n, law_x, Kolchin, PrefixLaw};
pub use law::DiscreteLaw;
pub(crate) use product::convolve;
pub use product::{extended_regime, ExtendedLaw, ExtendedRegime, ProductLaw};
pub use table::ConvolutionTable;
