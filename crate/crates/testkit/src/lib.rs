//! Test support for the trip planner: random instance generators and
//! reference implementations that decide the same questions as the core by
//! brute force.

pub mod gen;
pub mod ltl_oracle;
pub mod overlay_oracle;
pub mod route_oracle;
