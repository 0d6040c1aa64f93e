//! Numerical calculus for higher-order q-Bessel functions.

pub mod error;
pub mod qbessel;
pub mod qcalc;
pub mod qcore;
pub mod qharmonic;
pub mod qheat;
pub mod qspecial;
pub mod series;
pub mod stencil;

pub use error::{QError, QResult};
