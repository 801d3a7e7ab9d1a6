//! Bubble formation and transport.
//!
//! * [`bvp`]: linear two-point boundary value problems (midpoint block scheme
//!   and multiple shooting).
//! * [`young_laplace`]: the axisymmetric near-field profile and its Newton solver.
//! * [`shape_fit`]: ellipse parameters from a profile.
//! * [`levelset`]: far-field level-set transport and the cylindrical
//!   convection-diffusion reference solver.
//! * [`coupling`]: near-to-far initialization, the refresh cycle, bubble
//!   bookkeeping and breathing-mode formulas.
//! * [`experiment`]: run configuration, presets and output files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bvp;
pub mod coupling;
pub mod experiment;
pub mod levelset;
pub mod shape_fit;
pub mod young_laplace;
