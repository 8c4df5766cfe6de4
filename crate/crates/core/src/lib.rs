//! Statistical damage detection for active-sensing guided-wave structural
//! health monitoring.
//!
//! Healthy (baseline) and unknown-state pitch-catch responses are reduced to
//! Welch power spectral densities, and three hypothesis tests decide whether
//! the unknown state differs from the healthy one at a chosen false-alarm
//! probability:
//!
//! * [`detectors::f_statistic`]: ratio of one baseline PSD to the unknown PSD,
//!   `F(2K, 2K)` distributed under the null.
//! * [`detectors::fm_statistic`]: ratio of the mean of `M` baseline PSDs to the
//!   unknown PSD, `F(2KM, 2K)` distributed under the null.
//! * [`detectors::z_statistic`]: normalized difference between the baseline
//!   mean and the unknown PSD, compared with a standard normal critical point.
//!
//! Two time-domain damage indices ([`detectors::janapati_di`],
//! [`detectors::qiu_di`]) serve as references, [`pipeline`] runs the
//! baseline/inspection workflow over a dataset manifest, and [`simulate`]
//! produces synthetic pitch-catch datasets with known ground truth.

pub mod detectors;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod simulate;
pub mod spectral;
pub mod statdist;

pub use error::{Error, ErrorCategory, Result};
pub use spectral::{make_window, welch_psd, welch_psd_full, PsdEstimate, Signal, WelchConfig, WindowKind};
pub use statdist::Alpha;

// The guide's code blocks run as doctests through these empty modules.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/welch.md")]
    mod welch {}
    #[doc = include_str!("../../../book/src/statistics.md")]
    mod statistics {}
    #[doc = include_str!("../../../book/src/damage-indices.md")]
    mod damage_indices {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/roc.md")]
    mod roc {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
