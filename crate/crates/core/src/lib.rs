//! Berezin–Toeplitz quantization on the Riemann sphere: holomorphic
//! sections of `O(p)`, Toeplitz operators of smooth and rough symbols, and
//! numerical checks of their large-`p` asymptotics.

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod hilbert;
pub mod par;
pub mod quadrature;
pub mod semiclassics;
pub mod symbols;
pub mod toeplitz;

pub use nalgebra::Complex;

pub type C64 = Complex<f64>;
pub type CMatrix = nalgebra::DMatrix<C64>;

pub use error::{Error, Result};
pub use geometry::{make_phase_space, Orientation, PhaseSpace, Point, QuadratureGrid};
pub use hilbert::{quantum_space, QuantumSpace, StateVector};
pub use symbols::{builtin_symbol, Regularity, Symbol};
pub use toeplitz::{toeplitz_auto, toeplitz_matrix, toeplitz_with, QuadSpec, ToeplitzMatrix};
