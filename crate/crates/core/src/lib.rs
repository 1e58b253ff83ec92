//! Spectral laboratory for transport-diffusion equations with Lévy-type
//! dissipation and singular-integral drifts on the 2-D periodic torus.
//!
//! Modules are layered bottom-up: [`field`] (grids, FFT, file format),
//! [`levy`] (operator symbols), [`drift`] (divergence-free multipliers),
//! [`spaces`] (norm estimators and lemma checks), [`solver`] (forward
//! integrating-factor RK4 and the Picard mild scheme), [`dual`] (backward
//! dual equation and molecules). [`exponents`] is the exact-rational algebra
//! that decides which parameter sets are admissible.

pub mod dual;
pub mod drift;
pub mod exponents;
pub mod field;
pub mod levy;
pub mod random;
pub mod solver;
pub mod spaces;

mod bessel;
mod quadrature;
