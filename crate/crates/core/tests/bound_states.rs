use attoscatter_core::constants::au_to_ev;
use attoscatter_core::{solve_bound_states, Grid, Potential, PotentialParams};

/// Oscillator lowered by `DEPTH` so that its low levels count as bound.
struct Harmonic(f64);

const DEPTH: f64 = 10.0;

impl Potential for Harmonic {
    fn value(&self, q: f64) -> f64 {
        0.5 * self.0 * self.0 * q * q - DEPTH
    }

    fn gradient(&self, q: f64) -> f64 {
        self.0 * self.0 * q
    }
}

fn aux() -> Grid {
    Grid::with_spacing(-64.0, 0.0625, 2048).unwrap()
}

#[test]
fn oscillator_levels() {
    // E_n = (n + 1/2) omega - DEPTH
    let grid = Grid::new(-16.0, 16.0, 512).unwrap();
    let omega = 0.7;
    let set = solve_bound_states(&Harmonic(omega), &grid, 5).unwrap();
    for (n, e) in set.energies().iter().take(5).enumerate() {
        assert!((e - (n as f64 + 0.5) * omega + DEPTH).abs() < 1e-9, "n = {n}: {e}");
    }
}

#[test]
fn double_well_initial_state() {
    let v = PotentialParams::default();
    let set = solve_bound_states(&v, &aux(), 2).unwrap();
    let w = au_to_ev(set.ionization_energy());
    assert!(((w - 12.17) / 12.17).abs() < 0.01, "W = {w} eV");
    assert!(set.energies().windows(2).all(|e| e[1] > e[0]));
    assert!(set.residuals().iter().all(|r| *r < 1e-6), "{:?}", set.residuals());
    let states = set.states();
    for i in 0..states.len() {
        assert!((states[i].norm_sqr() - 1.0).abs() < 1e-10);
        for j in 0..i {
            assert!(states[i].inner_product(&states[j]).unwrap().norm() < 1e-8);
        }
    }
    // the initial state sits mostly in the well at the origin
    let grid = *set.grid();
    let near: f64 = set
        .initial_state()
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(j, _)| grid.position(*j).abs() < 8.0)
        .map(|(_, a)| a.norm_sqr())
        .sum::<f64>()
        * grid.dq();
    assert!(near > 0.9, "{near}");
}

#[test]
fn ionization_energy_is_converged_in_spacing() {
    let v = PotentialParams::default();
    let coarse = solve_bound_states(&v, &aux(), 2).unwrap();
    let fine_grid = Grid::with_spacing(-64.0, 0.03125, 4096).unwrap();
    let fine = solve_bound_states(&v, &fine_grid, 2).unwrap();
    assert!((coarse.ionization_energy() - fine.ionization_energy()).abs() < 1e-5);
}

#[test]
fn tails_vanish_at_the_box_edges() {
    let v = PotentialParams::default();
    let set = solve_bound_states(&v, &aux(), 2).unwrap();
    let a = set.initial_state().amplitudes();
    let edge = a[..16].iter().chain(&a[a.len() - 16..]).map(|x| x.norm_sqr()).fold(0.0, f64::max);
    assert!(edge < 1e-12, "{edge:e}");
}
