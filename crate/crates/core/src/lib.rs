//! Spectral analysis, filtering and simulation of bivariate signals with the
//! quaternion Fourier transform.

pub mod decompose;
pub mod error;
pub mod filters;
pub mod formats;
pub mod oracle;
pub mod par;
pub mod qft;
pub mod quat;
pub mod spectral;
pub mod synthesis;
pub mod wiener;

pub use error::{Error, Result};
pub use par::Execution;
pub use qft::{qft_forward, qft_inverse, BivariateSignal, QSpectrum};
pub use quat::{PureUnitQuaternion, Quaternion};
pub use spectral::{PolarizationDensity, PolarizationState};
