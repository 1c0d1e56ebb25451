//! Spectrally balanced two-way splits of circulant and product Cayley graphs.
//!
//! A split is encoded by signing generator pairs `±a_s`; its quality is the
//! worst relative deviation between the Laplacian eigenvalues of the two
//! halves, which for circulants is available in closed form.

pub mod angle;
pub mod ap;
pub mod discrepancy;
pub mod error;
pub mod lacunary;
pub mod products;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};
pub use spectral::{CirculantGraph, RatioMode, RatioSample, Signing, SpectralErrorReport};
