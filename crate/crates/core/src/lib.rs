//! Drift-free control systems on nilpotent Lie groups.
//!
//! The crate is organised bottom-up:
//!
//! - [`algebra`]: Lie algebras given by structure constants, `ad` and `exp(ad)`.
//! - [`integrate`]: control signals, adaptive quadrature and a Dormand–Prince
//!   integrator with dense output.
//! - [`weinorman`]: the Wei–Norman system for a product-of-exponentials
//!   factorisation, solved by iterated quadrature when it is triangular.
//! - [`groups`]: closed-form composition laws and charts for H(3), G₄ and Ḡ₄.
//! - [`reduction`]: reduction of a group equation through a homogeneous space
//!   to an equation on a subgroup.
//! - [`vfields`]: symbolic vector fields, Lie brackets and rank tests.
//! - [`models`]: the planar rigid body with two oscillators and the
//!   front-wheel driven kinematic car.
//! - [`verify`]: self-checks for one model, used by the command-line runner.

#![allow(clippy::needless_range_loop)]

pub mod algebra;
pub mod error;
pub mod groups;
pub mod integrate;
pub mod models;
pub mod reduction;
pub mod verify;
pub mod vfields;
pub mod weinorman;

pub use error::{Error, Result};
