//! Configuration, CSV output, and canned studies behind the `seqmht`
//! binary. Exposed as a library so integration tests drive the same code
//! paths as the executable.

pub mod config;
pub mod experiments;
pub mod output;
