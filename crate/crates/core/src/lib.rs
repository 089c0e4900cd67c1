pub mod elements;
pub mod mesh;

pub mod data_assign;
mod dense;
pub mod forms;
pub mod manufactured;
pub mod postproc;
pub mod solver;
pub mod study;
