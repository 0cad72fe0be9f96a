pub mod graph;
pub mod instances;
pub mod lp;
pub mod pipeline;
pub mod rounding;
pub mod rsp;
pub mod spanner_lp;
pub mod verify;
