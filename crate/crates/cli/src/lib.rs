//! Input/output schema of the `quadform` command-line front end, exposed as a
//! library so integration tests can validate emitted JSON against the same
//! types.

pub mod io;
pub mod render;
