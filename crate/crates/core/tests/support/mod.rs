//! Oracles and property checks shared by the integration tests and the
//! acceptance run. Not every test uses every helper.
#![allow(dead_code)]

pub mod executor;
pub mod path;
pub mod props;
pub mod sensor;
