//! Descent, genus-parity and density computations for the twists
//! `E^(n): y^2 = x(x - n)(x + 3n)`.

pub mod arith;
pub mod classgroup;
pub mod crosscheck;
pub mod curveinv;
pub mod densitylab;
pub mod descent;
pub mod f2linalg;
pub mod shaparity;
pub mod ternary;
