//! Probability machinery: normal and non-central chi-square CDFs and
//! samplers, moment fitting for the non-central chi-square, and the Johnson
//! translation system.

mod johnson;
mod ncx2;
mod normal;

pub use johnson::{fit_johnson, johnson_forward, johnson_inverse, JohnsonFamily, JohnsonFit};
pub(crate) use johnson::quantile_sorted;
pub use ncx2::{
    fit_ncx2, ncx2_cdf, sample_ncx2, NoncentralChiSquareParams, SERIES_MAX_TERMS, SERIES_TOLERANCE,
};
pub use normal::{normal_cdf, std_normal_cdf, std_normal_quantile};
