//! Modulation index (MI) for phase-amplitude coupling, and a closed-form
//! white-noise null distribution for it.
//!
//! Under the null, MI between the phase of one white-noise signal and the
//! amplitude of another is approximately Beta(a, b), with shapes that depend
//! only on the sample length and the number of phase bins. That gives
//! p-values and critical values without surrogate resampling.
//!
//! ```
//! use pacnull::nullmodel::NullModelParams;
//!
//! let null = NullModelParams::new(7000, 18).unwrap();
//! let threshold = null.critical_value(0.01).unwrap();
//! assert!((threshold / 0.0002261 - 1.0).abs() < 0.01);
//! ```

pub mod error;
pub mod io;
pub mod mcval;
pub mod mi;
pub mod nullmodel;
pub mod scenarios;
pub mod sigproc;
pub mod specfun;

pub use error::{Error, Result};
