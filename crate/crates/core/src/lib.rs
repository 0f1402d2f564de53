pub mod angle_arith;
pub mod batch;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod landing;
pub mod measures;
pub mod rays;
pub mod roots;
