pub mod geodesy;
pub mod projection;
pub mod transition;
pub mod graph;
pub mod layout;
pub mod pipeline;
