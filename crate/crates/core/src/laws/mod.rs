//! Limiting densities, distribution functions and constants.

pub mod dilute;
pub mod extremes;
pub mod point_process;
pub mod stable;

pub use dilute::DiluteParams;
pub use extremes::{gumbel_cdf, FrechetLaw};
pub use point_process::{pp_factorial_moment, pp_intensity};
pub use stable::{
    stable_cf, stable_density_inversion, stable_density_series, stable_moment, StableParams,
};
