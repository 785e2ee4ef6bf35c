pub mod bench;
pub mod cost;
pub mod error;
pub mod he;
pub mod image;
pub mod joint;
pub mod linalg;
pub mod mpc;
pub mod optimizer;
pub mod protocol;
pub mod spline;
pub mod transform;
pub mod util;
