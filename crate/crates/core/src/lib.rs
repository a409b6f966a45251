//! Crack detection and weld monitoring in a rectangular conductor from
//! electric boundary measurements.
//!
//! The pipeline: mesh the slab with rectangular cavities along the crack
//! line ([`mesh`]), solve the Neumann problem for an injected boundary
//! current ([`fem`]), pair the measured boundary data with a family of
//! probing exponentials and regress the indicator decay ([`probe`],
//! [`profile`]), and track the supported gap of a growing weld over
//! pressure rounds ([`monitor`]). The [`asymptotics`] module verifies the
//! underlying decay analysis independently of the finite element solver.

pub mod asymptotics;
pub mod config;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod monitor;
pub mod plot;
pub mod probe;
pub mod profile;

pub use config::{parse_config, parse_config_str, RunConfig};
pub use error::{Error, Result};
pub use fem::{CauchyData, NeumannData, Support};
pub use geometry::{CrackSet, ProbingLine, SlabGeometry};
pub use mesh::Mesh;
pub use monitor::{MonitorConfig, MonitorLog, SweepSettings};
pub use profile::{DetectParams, Profile, TipEstimate};
