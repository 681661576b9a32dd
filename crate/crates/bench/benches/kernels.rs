use attoscatter_bench::{bound_states, potential, production_grid, scattering_solver};
use attoscatter_core::{
    integrate_trajectory, Branch, Drive, FieldPolarity, GreenPrefactor, NirParams, NirPulse,
    Propagator, TrajectoryConfig, XuvPulse, XuvTargets,
};
use criterion::{criterion_group, criterion_main, Criterion};

fn split_step(c: &mut Criterion) {
    let grid = production_grid();
    let v = potential();
    let bound = bound_states();
    let w = bound.ionization_energy();
    let psi0 = bound.embed(&grid).unwrap();
    let mut psi = psi0.initial_state().amplitudes().to_vec();
    let mut prop = Propagator::new(&grid, &v, 0.005, Default::default()).unwrap();
    let drive = Drive {
        nir: Some(NirPulse::from_params(0.02, &NirParams::default()).unwrap()),
        xuv: Some(XuvPulse::from_targets(&XuvTargets::default(), w).unwrap()),
    };
    c.bench_function("split step, 65536 points, both fields", |b| {
        b.iter(|| prop.advance(&mut psi, 0.0, 1, &drive))
    });
}

fn scattering_state(c: &mut Criterion) {
    let solver = scattering_solver();
    let mut group = c.benchmark_group("scattering state");
    group.sample_size(20);
    group.bench_function("p = 2.42", |b| {
        b.iter(|| solver.solve(2.42, GreenPrefactor::Advanced).unwrap())
    });
    group.finish();
}

fn trajectory(c: &mut Criterion) {
    let v = potential();
    let nir = NirPulse::from_params(
        0.02,
        &NirParams {
            polarity: FieldPolarity::PositivePeak,
            ..Default::default()
        },
    )
    .unwrap();
    let cfg = TrajectoryConfig::default();
    c.bench_function("reflected trajectory to t = 600", |b| {
        b.iter(|| integrate_trajectory(Branch::Reflected, -2.3, &nir, &v, v.q_r, 600.0, &cfg).unwrap())
    });
}

criterion_group!(benches, split_step, scattering_state, trajectory);
criterion_main!(benches);
