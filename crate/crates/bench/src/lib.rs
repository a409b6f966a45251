//! Shared fixtures for the pipeline benchmarks.

use std::sync::Arc;
use weldprobe::fem::{neumann_sin3, solve_neumann, NeumannData, Support};
use weldprobe::mesh::build_mesh;
use weldprobe::{CauchyData, Mesh, RunConfig};

/// Reference geometry meshed at the given resolution.
pub fn reference_mesh(target_elements: usize) -> Arc<Mesh> {
    let cfg = RunConfig::default();
    Arc::new(
        build_mesh(
            &cfg.slab().expect("reference geometry"),
            &cfg.crack_set().expect("reference cracks"),
            cfg.cracks.width,
            target_elements,
        )
        .expect("reference mesh"),
    )
}

pub fn reference_forcing(mesh: &Arc<Mesh>) -> NeumannData {
    neumann_sin3(mesh, 0.0, Support::Horizontal).expect("reference forcing")
}

pub fn reference_cauchy(target_elements: usize) -> CauchyData {
    let mesh = reference_mesh(target_elements);
    let g = reference_forcing(&mesh);
    solve_neumann(&mesh, &g).expect("reference solve")
}
