pub mod coupling;
pub mod error;
pub mod field;
pub mod gamma;
pub mod generator;
pub mod geometry;
pub mod par;
pub mod point;
pub mod quadrature;
pub mod report;
pub mod semigroup;
pub mod sim;
pub mod stats;
pub mod verify;
