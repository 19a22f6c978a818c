//! Numerical laboratory for modulating line solitons of the KP-II equation
//! `∂_x(∂_t u + ∂_x³u + 3∂_x(u²)) + 3∂_y²u = 0`.

pub mod burgers;
pub mod error;
pub mod experiment;
pub mod extract;
pub mod grid;
pub mod line;
pub mod linear;
pub mod modes;
pub mod soliton;
pub mod solver;

pub use error::{Error, Result};
