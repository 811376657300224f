//! Finite-element simulation of a three-phase (silica skeleton, gas, fiber)
//! aerogel composite.
//!
//! Two independent models are provided:
//!
//! * [`mechanics`]: quasi-static poro-mechanics with separate skeleton and
//!   fiber displacements, strain coupling that switches off on debonding,
//!   and a storage/Darcy pressure equation, integrated with backward Euler.
//! * [`thermal`]: three temperatures in local non-equilibrium, coupled by
//!   cubic interphase exchange, with a pore-size dependent gas conductivity
//!   and convective (Robin) faces, integrated with backward Euler and Newton.

pub mod constitutive;
pub mod diagnostics;
pub mod fem;
pub mod io;
pub mod mechanics;
pub mod mesh;
pub mod mms;
pub mod run;
pub mod thermal;

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Tensor2 = nalgebra::Matrix2<f64>;
