use attoscatter_core::scattering::{rank_prefactors, select_prefactor};
use attoscatter_core::{
    build_dipole_table, dipole_element, solve_bound_states, GreenPrefactor, Grid, LippmannSchwinger,
    PotentialParams, PrefactorChoice, ScatteringConfig,
};

fn solver() -> LippmannSchwinger {
    let v = PotentialParams::default();
    let aux = Grid::with_spacing(-64.0, 0.0625, 2048).unwrap();
    LippmannSchwinger::new(&v, 0.5 * v.q_r, &aux, ScatteringConfig::default()).unwrap()
}

#[test]
fn residual_test_selects_the_advanced_kernel() {
    let s = solver();
    let ranked = rank_prefactors(&s, 2.42);
    assert_eq!(ranked[0].0, GreenPrefactor::Advanced);
    assert!(ranked[0].1 < 1e-4, "{ranked:?}");
    assert!(ranked[1].1 > 1e-2, "{ranked:?}");
    let (g, _) = select_prefactor(&s, PrefactorChoice::Auto, 2.42, 1e-4).unwrap();
    assert_eq!(g, GreenPrefactor::Advanced);
}

#[test]
fn current_is_conserved_across_the_wells() {
    // j = p (|A|^2 - |B|^2) on either side of the (tapered) potential
    let s = solver();
    for p in [0.8, 1.7, 2.42, -2.42, 3.6] {
        let state = s.solve(p, GreenPrefactor::Advanced).unwrap();
        let (al, bl, ml) = s.asymptotic_fit(&state, false);
        let (ar, br, mr) = s.asymptotic_fit(&state, true);
        assert!(ml < 1e-3 && mr < 1e-3, "p = {p}: misfit {ml:e} {mr:e}");
        let jl = al.norm_sqr() - bl.norm_sqr();
        let jr = ar.norm_sqr() - br.norm_sqr();
        assert!((jl - jr).abs() < 1e-4 * (al.norm_sqr() + bl.norm_sqr()), "p = {p}: {jl} vs {jr}");
    }
}

#[test]
fn table_interpolates_between_samples() {
    let v = PotentialParams::default();
    let aux = Grid::with_spacing(-64.0, 0.0625, 2048).unwrap();
    let bound = solve_bound_states(&v, &aux, 2).unwrap();
    let s = solver();
    let momenta: Vec<f64> = (0..41).map(|k| 2.13 + 0.005 * k as f64).collect();
    let table = build_dipole_table(&s, GreenPrefactor::Advanced, bound.initial_state(), &momenta, 1e-4).unwrap();
    // an off-lattice momentum solved directly
    let p = 2.231;
    let direct = dipole_element(&s.solve(p, GreenPrefactor::Advanced).unwrap(), bound.initial_state()).unwrap();
    let interp = table.eval(p).unwrap();
    assert!((direct - interp).norm() < 1e-4 * direct.norm(), "{direct} vs {interp}");
}
