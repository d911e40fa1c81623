pub mod cli;
pub mod deconv;
pub mod denoise;
pub mod error;
pub mod fixtures;
pub mod image;
pub mod io;
pub mod kernel;
pub mod kernel_solve;
pub mod metrics;
pub mod pyramid;
pub mod rng;
pub mod sharp;
pub mod spectral;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod chapter1 {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/forward_model.md")]
mod chapter2 {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/sharp_prediction.md")]
mod chapter3 {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/kernel_estimation.md")]
mod chapter4 {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/coarse_to_fine.md")]
mod chapter5 {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/deconvolution.md")]
mod chapter6 {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/evaluation.md")]
mod chapter7 {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod chapter8 {}
#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}
