use std::f64::consts::PI;
use std::sync::OnceLock;

use attoscatter_core::scattering::table_momenta;
use attoscatter_core::{
    continuum_part, dressing_params, fringe_positions, integrate_trajectory, solve_bound_states, split_parcel,
    wave_parcel, BoundStateSet, Branch, FieldPolarity, Flat, Fourier, Grid, Model, NirPulse, Potential,
    SplitConfig, Spectrum, TrajectoryConfig, Wavefunction,
};
use num_complex::Complex64;
use proptest::prelude::*;

struct Well;

impl Potential for Well {
    fn value(&self, q: f64) -> f64 {
        0.5 * q * q - 6.0
    }

    fn gradient(&self, q: f64) -> f64 {
        q
    }
}

fn small_grid() -> Grid {
    Grid::new(-32.0, 32.0, 512).unwrap()
}

fn well_states() -> &'static BoundStateSet {
    static SET: OnceLock<BoundStateSet> = OnceLock::new();
    SET.get_or_init(|| solve_bound_states(&Well, &small_grid(), 3).unwrap())
}

fn packet(q0: f64, p0: f64, sigma: f64, c: Complex64) -> impl Fn(f64) -> Complex64 {
    move |q| c * Complex64::from_polar((-(q - q0).powi(2) / (4.0 * sigma * sigma)).exp(), p0 * q)
}

fn nir_off() -> NirPulse {
    NirPulse::new(0.0, 0.057, 237.41, FieldPolarity::PositivePeak).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn continuum_part_is_orthogonal_and_pythagorean(
        q0 in -6.0..6.0f64, p0 in -2.0..2.0f64, sigma in 0.5..3.0f64,
    ) {
        let set = well_states();
        let grid = small_grid();
        let psi = Wavefunction::from_position_fn(grid, packet(q0, p0, sigma, Complex64::new(1.0, 0.0)));
        let cont = continuum_part(&psi, set).unwrap();
        let mut bound_weight = 0.0;
        for b in set.states() {
            prop_assert!(b.inner_product(&cont).unwrap().norm() < 1e-10 * psi.norm());
            bound_weight += b.inner_product(&psi).unwrap().norm_sqr();
        }
        let total = psi.norm_sqr();
        prop_assert!((cont.norm_sqr() + bound_weight - total).abs() < 1e-10 * total);
    }

    #[test]
    fn branches_partition_the_right_going_parcel(
        a in 0.3..2.0f64, b in 0.3..2.0f64, p0 in 1.0..3.0f64, t_f in 0.0..50.0f64,
    ) {
        let grid = Grid::new(-128.0, 128.0, 2048).unwrap();
        let fourier = Fourier::new(&grid);
        let first = packet(0.0, p0, 4.0, Complex64::new(a, 0.0));
        let second = packet(-45.0, p0, 4.0, Complex64::new(0.0, b));
        let psi = Wavefunction::from_position_fn(grid, |q| first(q) + second(q));
        // back-propagate to t_f, so that the parcel at t_f is psi itself
        let parcel = wave_parcel(&fourier, &psi, 0.0, 0.0, None).unwrap();
        let moved = wave_parcel(&fourier, &psi, t_f, 0.0, None).unwrap();
        prop_assert!((moved.norm_sqr() - psi.norm_sqr()).abs() < 1e-12 * psi.norm_sqr());
        let split = split_parcel(&fourier, &parcel, &SplitConfig::default()).unwrap();
        let whole = split.right.norm_sqr();
        let parts = split.direct.norm_sqr() + split.reflected.norm_sqr();
        prop_assert!((whole - parts).abs() < 1e-12 * whole);
        prop_assert!(split.q_cut > -35.0 && split.q_cut < -10.0);
    }

    #[test]
    fn free_trajectory_is_exact(v0 in 0.5..4.0f64, t_f in 10.0..400.0f64) {
        let config = TrajectoryConfig::default();
        let tr = integrate_trajectory(Branch::Direct, v0, &nir_off(), &Flat(0.0), -40.0, t_f, &config).unwrap();
        let end = tr.last();
        prop_assert!((end.x - v0 * t_f).abs() < 1e-9 * (1.0 + v0 * t_f));
        prop_assert!((end.v - v0).abs() < 1e-12);
        let d = dressing_params(&tr);
        prop_assert!(d.q.abs() < 1e-8 * (1.0 + v0 * t_f));
        prop_assert!(d.delta_s.abs() < 1e-8 * (1.0 + v0 * v0 * t_f));
    }

    #[test]
    fn bounce_preserves_speed(v0 in -4.0..-0.5f64, wall in -40.0..-5.0f64) {
        let t_f = 3.0 * wall / v0;
        let config = TrajectoryConfig::default();
        let tr = integrate_trajectory(Branch::Reflected, v0, &nir_off(), &Flat(0.0), wall, t_f, &config).unwrap();
        let (before, after) = tr.bounce_speeds.unwrap();
        prop_assert!((before - after).abs() < 1e-12 * before);
        prop_assert!((tr.bounce_time.unwrap() - wall / v0).abs() < 1e-8 * t_f);
        let end = tr.last();
        prop_assert!((end.v + v0).abs() < 1e-12);
        prop_assert!((end.x - (2.0 * wall - v0 * t_f)).abs() < 1e-8 * t_f.max(1.0));
    }

    #[test]
    fn fringes_follow_a_translation(delta in -1.0..1.0f64, phase in 0.0..(2.0 * PI), scale in 1e-6..1e3f64) {
        let dp = 0.002;
        let period = 0.13;
        let momenta: Vec<f64> = (0..1500).map(|i| 1.0 + i as f64 * dp).collect();
        let density: Vec<f64> = momenta
            .iter()
            .map(|p| (-(p - 2.5f64).powi(2)).exp() * (1.0 + 0.8 * (2.0 * PI * p / period + phase).cos()))
            .collect();
        // window edges between lattice points
        let (lo, hi) = (1.6 + 0.5 * dp, 3.4 + 0.5 * dp);
        let base = Spectrum::new(Model::Tdse, 0.0, momenta.clone(), density.clone()).unwrap();
        let peaks = fringe_positions(&base, lo, hi, period).unwrap();
        let moved = Spectrum::new(
            Model::Tdse,
            0.0,
            momenta.iter().map(|p| p + delta).collect(),
            density.iter().map(|d| d * scale).collect(),
        )
        .unwrap();
        let shifted = fringe_positions(&moved, lo + delta, hi + delta, period).unwrap();
        prop_assert_eq!(peaks.len(), shifted.len());
        for (a, b) in peaks.iter().zip(&shifted) {
            prop_assert!((b - a - delta).abs() < 1e-9, "{} vs {}", a + delta, b);
        }
    }

    #[test]
    fn table_momenta_are_symmetric(stride in 1usize..8, lo in 0.0..1.0f64, width in 0.5..4.0f64) {
        let grid = Grid::new(-512.0, 512.0, 8192).unwrap();
        let hi = lo + width;
        let m = table_momenta(&grid, stride, lo, hi);
        prop_assert!(m.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(m.iter().all(|p| p.abs() >= lo && p.abs() <= hi));
        let step = grid.dp() * stride as f64;
        for (a, b) in m.iter().zip(m.iter().rev()) {
            prop_assert_eq!(*a, -*b);
            prop_assert!((a / step - (a / step).round()).abs() < 1e-9);
        }
    }
}
