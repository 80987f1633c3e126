pub mod error;
pub mod fourier;
pub mod linalg;
pub mod model;
pub mod profile;
pub mod bloch;
pub mod semigroup;
pub mod evolve;
