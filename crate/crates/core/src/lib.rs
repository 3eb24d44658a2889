//! Numerical toolkit for the complex Ginzburg–Landau equation with
//! p-Laplacian diffusion,
//!
//! `∂t u − (λ + iα) Δ_p u + (κ + iβ)|u|^{q−2}u − γu = f`,
//!
//! written as a real system for `U = (Re u, Im u)` on Dirichlet boxes in one
//! or two dimensions. The core is generic over the scalar type through
//! [`scalar::Real`]; the aliases below fix it to `f64` or `f32`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amalgam;
pub mod cli;
pub mod config;
pub mod error;
pub mod exhaustion;
pub mod field;
pub mod functionals;
pub mod grid;
pub mod integrator;
pub mod io;
pub mod monitors;
pub mod region;
pub mod scalar;
pub mod solver;

pub use error::{PcglError, Result};

pub type Grid64 = grid::Grid<f64>;
pub type Field64 = field::Field<f64>;
pub type GradField64 = field::GradField<f64>;
pub type ParamSet64 = region::ParamSet<f64>;
pub type SchemeConfig64 = integrator::SchemeConfig<f64>;

pub type Grid32 = grid::Grid<f32>;
pub type Field32 = field::Field<f32>;
pub type GradField32 = field::GradField<f32>;
pub type ParamSet32 = region::ParamSet<f32>;
pub type SchemeConfig32 = integrator::SchemeConfig<f32>;
