use attoscatter_core::scattering::table_momenta;
use attoscatter_core::{
    build_dipole_table, continuum_part, field_free_amplitude, momentum_spectrum, propagate,
    run_photoelectron, solve_bound_states, Drive, FieldSet, Flat, Fourier, Gauge, GreenPrefactor,
    Grid, LippmannSchwinger, Model, NirParams, NirPulse, PotentialParams, PropagationConfig,
    Propagator, QuadratureConfig, ScatteringConfig, Wavefunction, XuvPulse, XuvTargets,
};
use num_complex::Complex64;

fn width(psi: &Wavefunction) -> f64 {
    let grid = psi.grid();
    let n = psi.norm_sqr();
    let m1 = psi.expectation_position().unwrap();
    let m2: f64 = psi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(j, a)| grid.position(j).powi(2) * a.norm_sqr())
        .sum::<f64>()
        * grid.dq()
        / n;
    (m2 - m1 * m1).sqrt()
}

#[test]
fn free_gaussian_spreads_analytically() {
    // sigma(t) = sigma0 sqrt(1 + (t / (2 sigma0^2))^2)
    let grid = Grid::new(-200.0, 200.0, 4096).unwrap();
    let sigma0: f64 = 2.0;
    let psi = Wavefunction::from_position_fn(grid, |q| {
        Complex64::from_polar((-(q * q) / (4.0 * sigma0 * sigma0)).exp(), 0.5 * q)
    });
    let mut prop = Propagator::new(&grid, &Flat(0.0), 0.01, Gauge::Length).unwrap();
    let drive = Drive { nir: None, xuv: None };
    let (out, _) = propagate(&mut prop, &psi, 0.0, 4000, &drive, &PropagationConfig::default()).unwrap();
    let t = 40.0;
    let expect = sigma0 * (1.0 + (t / (2.0 * sigma0 * sigma0)).powi(2)).sqrt();
    assert!((width(&out) - expect).abs() < 1e-6, "{} vs {expect}", width(&out));
    assert!((out.expectation_position().unwrap() - 0.5 * t).abs() < 1e-6);
}

#[test]
fn initial_state_is_stationary() {
    let v = PotentialParams::default();
    let aux = Grid::with_spacing(-64.0, 0.0625, 2048).unwrap();
    let grid = Grid::new(-256.0, 256.0, 8192).unwrap();
    let bound = solve_bound_states(&v, &aux, 2).unwrap().embed(&grid).unwrap();
    let psi0 = bound.initial_state();
    let mut prop = Propagator::new(&grid, &v, 0.005, Gauge::Length).unwrap();
    let drive = Drive { nir: None, xuv: None };
    let (out, diag) = propagate(&mut prop, psi0, 0.0, 20000, &drive, &PropagationConfig::default()).unwrap();
    let overlap = psi0.inner_product(&out).unwrap().norm();
    assert!((overlap - 1.0).abs() < 1e-7, "{overlap}");
    assert!(diag.max_norm_drift < 1e-10);
}

/// XUV alone on a reduced box: the ionized yield matches the first-order
/// amplitude built from independently solved scattering states.
#[test]
fn ionized_yield_matches_first_order_amplitude() {
    let v = PotentialParams::default();
    let aux = Grid::with_spacing(-64.0, 0.0625, 2048).unwrap();
    let grid = Grid::new(-1024.0, 1024.0, 32768).unwrap();
    let set = solve_bound_states(&v, &aux, 2).unwrap();
    let w = set.ionization_energy();
    let bound = set.embed(&grid).unwrap();
    let xuv = XuvPulse::from_targets(&XuvTargets::default(), w).unwrap();
    let nir = NirPulse::from_params(0.0, &NirParams::default()).unwrap();
    let cfg = PropagationConfig {
        t_end: 300.0,
        extra_time: 0.0,
        ..Default::default()
    };
    let mut prop = Propagator::new(&grid, &v, cfg.dt, cfg.gauge).unwrap();
    let run = run_photoelectron(&mut prop, bound.initial_state(), w, &FieldSet { xuv, nir }, &cfg).unwrap();
    assert!(run.diagnostics.max_norm_drift < 1e-10);
    let cont = continuum_part(&run.final_state, &bound).unwrap();
    for b in bound.states() {
        assert!(b.inner_product(&cont).unwrap().norm() < 1e-10 * cont.norm());
    }
    let fourier = Fourier::new(&grid);
    let tdse = momentum_spectrum(&fourier, &cont, Model::Tdse, 0.0).unwrap();
    let dp = grid.dp();
    let total: f64 = tdse.density.iter().sum::<f64>() * dp;
    assert!((total - cont.norm_sqr()).abs() < 1e-10 * total);

    let solver = LippmannSchwinger::new(&v, 0.5 * v.q_r, &aux, ScatteringConfig::default()).unwrap();
    let table = build_dipole_table(
        &solver,
        GreenPrefactor::Advanced,
        set.initial_state(),
        &table_momenta(&grid, 6, 0.3, 4.7),
        1e-4,
    )
    .unwrap();
    let sides = [(-4.6, -0.35), (0.35, 4.6)];
    for (lo, hi) in sides {
        let window = tdse.window(lo, hi);
        let model = field_free_amplitude(&window.momenta, &table, &xuv, run.t_end, &QuadratureConfig::default())
            .unwrap()
            .spectrum()
            .unwrap();
        let a: f64 = window.density.iter().sum::<f64>() * dp;
        let b: f64 = model.density.iter().sum::<f64>() * dp;
        assert!((a - b).abs() < 0.02 * b, "[{lo}, {hi}]: {a:e} vs {b:e}");
    }
}
