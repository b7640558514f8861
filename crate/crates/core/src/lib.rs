pub mod expr;
pub mod jet;
pub mod numerics;
pub mod reduction;
pub mod sampling;
pub mod scenario;
pub mod symmetry;
