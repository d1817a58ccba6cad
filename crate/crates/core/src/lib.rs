//! Numerical core of the wheel-loader end-loader digital twin.
//!
//! The crate is `no_std` (it needs `alloc`) and carries every algorithm of the twin:
//!
//! * [`mechanism`]: closed-form inverse kinematics of the two-cylinder end-loader linkage and a
//!   numeric forward-kinematics solver over the same loop-closure residuals.
//! * [`statics`]: bucket free-body balance, load-pin shear integrals and cylinder pressures.
//! * [`terrain`]: a planar discrete-element soil bed with Hertz–Mindlin contacts, driven by the
//!   five calibratable terrain parameters.
//! * [`calibration`]: force/pose trace metrics and a bounded Nelder–Mead fit of the terrain
//!   parameters against a measured bucket-force trace.
//!
//! File formats, configuration and the command-line front-end live in the `loadertwin` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod calibration;
pub mod linalg;
pub mod mechanism;
pub mod statics;
pub mod terrain;
pub mod trace;

/// Standard gravity in m/s².
pub const GRAVITY: f64 = 9.80665;
