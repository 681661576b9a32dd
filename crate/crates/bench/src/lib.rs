//! Benchmark fixtures.

use attoscatter_core::{
    solve_bound_states, BoundStateSet, Grid, LippmannSchwinger, PotentialParams, ScatteringConfig,
};

pub fn potential() -> PotentialParams {
    PotentialParams::default()
}

/// The default production lattice.
pub fn production_grid() -> Grid {
    Grid::new(-2048.0, 2048.0, 65536).expect("valid grid")
}

pub fn auxiliary_grid() -> Grid {
    Grid::with_spacing(-64.0, 0.0625, 2048).expect("valid grid")
}

pub fn bound_states() -> BoundStateSet {
    solve_bound_states(&potential(), &auxiliary_grid(), 2).expect("bound states")
}

pub fn scattering_solver() -> LippmannSchwinger {
    let v = potential();
    LippmannSchwinger::new(&v, 0.5 * v.q_r, &auxiliary_grid(), ScatteringConfig::default())
        .expect("solver")
}
