//! The scan pipelines behind each CLI mode.

use std::collections::BTreeMap;
use std::time::Instant;

use attoscatter_core::classical::{Trajectory, TrajectoryConfig};
use attoscatter_core::constants::{au_to_as, au_to_ev, ev_to_au};
use attoscatter_core::perturbative::{field_free_closed_form, tracked_shifts, mean_shift};
use attoscatter_core::scattering::{select_prefactor, table_momenta};
use attoscatter_core::tdse::Diagnostics;
use attoscatter_core::{
    analyze_fringes, build_dipole_table, continuum_part, cva_amplitude, dress_parcel,
    dressing_params, field_free_amplitude, initial_velocity, integrate_trajectory,
    momentum_spectrum, parcel_observables, reflected_spectrum, reflection_probability,
    run_dressed_scan, solve_bound_states, split_parcel, synthesize_spectrum, wave_parcel,
    BoundStateSet, Branch, DipoleTable, DressingParams, FieldSet, Fourier, Fringes, Grid,
    LippmannSchwinger, Model, NirPulse, Potential, Representation, Spectrum, SplitParcel,
    Wavefunction, XuvPulse,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::cache::{key_of, sha256_hex, Cache};
use crate::output::{f0_label, write_spectrum, CacheEvent, Manifest, OutputDir, Timing};
use crate::{CliError, Mode, RunConfig};

/// Rows of trajectory files are thinned to every this many steps.
const TRAJECTORY_STRIDE: usize = 10;

/// Continuum part of one photoionization run, at `t_end` and `late_t`.
#[derive(Clone, Debug)]
pub struct TdseResult {
    pub f0: f64,
    pub t_end: f64,
    pub late_t: f64,
    pub continuum: Wavefunction,
    pub late: Wavefunction,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Debug, Serialize)]
pub struct ParcelRecord {
    pub f0: f64,
    pub q_cut: f64,
    pub continuum_norm: f64,
    pub direct_norm: f64,
    pub reflected_norm: f64,
    /// Reflected share of the right-going parcel.
    pub reflection_probability: f64,
    /// Reflected norm over the whole continuum norm.
    pub reflected_fraction_total: f64,
    pub reflected_centroid: f64,
    pub reflected_rms_width: f64,
    pub direct_centroid: f64,
    pub direct_q_center: f64,
    pub reflected_q_center: f64,
    /// Sup-norm change of the parcel between `t_end` and `late_t`,
    /// relative to its largest amplitude.
    pub late_change: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassicalRecord {
    pub f0: f64,
    pub branch: Branch,
    pub v0: f64,
    pub params: DressingParams,
    pub bounce_time: Option<f64>,
    /// First return to the origin after launch, in attoseconds.
    pub recrossing_as: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FringeRecord {
    pub model: Model,
    pub f0: f64,
    pub fringes: Fringes,
    /// Cumulative shift relative to the model's own field-free peaks.
    pub shift: f64,
}

/// Everything the acceptance criteria look at.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Comparison {
    pub f0: Vec<f64>,
    pub ionization_energy_ev: f64,
    pub bound_residual_max: f64,
    pub field_free_l2: f64,
    pub field_free_closed_form_diff: f64,
    pub cva_reduction_diff: f64,
    pub fringes: Vec<FringeRecord>,
    pub parcels: Vec<ParcelRecord>,
    pub classical: Vec<ClassicalRecord>,
    /// Offset of classical relative to TDSE peaks at `F0 = 0`.
    pub classical_offset: f64,
    pub max_norm_drift: f64,
}

impl Comparison {
    pub fn fringes_of(&self, model: Model) -> Vec<&FringeRecord> {
        self.fringes.iter().filter(|f| f.model == model).collect()
    }
}

pub struct Session {
    pub config: RunConfig,
    pub manifest: Manifest,
    cache: Cache,
    out: OutputDir,
    prod: Grid,
    aux: Grid,
    fourier: Fourier,
    bound: Option<BoundStateSet>,
    table: Option<DipoleTable>,
    tdse: BTreeMap<u64, TdseResult>,
    pub comparison: Option<Comparison>,
}

fn grid_descriptor(g: &Grid) -> (f64, f64, usize) {
    (g.q_min(), g.dq(), g.len())
}

fn progress(msg: &str) {
    eprintln!("[attoscatter] {msg}");
}

impl Session {
    pub fn new(config: RunConfig) -> Result<Self, CliError> {
        config.validate()?;
        let config_sha256 = sha256_hex(config.to_toml().as_bytes());
        let prod = config.grid.production()?;
        let aux = config.grid.auxiliary()?;
        let manifest = Manifest {
            software_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: config_sha256.clone(),
            config: Some(config.clone()),
            ..Default::default()
        };
        Ok(Self {
            cache: Cache::new(&config.output.cache_dir),
            out: OutputDir::new(&config.output.out_dir, config_sha256),
            fourier: Fourier::new(&prod),
            prod,
            aux,
            config,
            manifest,
            bound: None,
            table: None,
            tdse: BTreeMap::new(),
            comparison: None,
        })
    }

    pub fn production_grid(&self) -> &Grid {
        &self.prod
    }

    pub fn fourier(&self) -> &Fourier {
        &self.fourier
    }

    fn time(&mut self, step: &str, start: Instant) {
        self.manifest.timings.push(Timing {
            step: step.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
    }

    fn cache_event(&mut self, kind: &str, key: &str, hit: bool) {
        if hit {
            progress(&format!("cache hit: {kind} {key}"));
        }
        self.manifest.cache.push(CacheEvent {
            kind: kind.into(),
            key: key.into(),
            hit,
        });
    }

    fn record(&mut self, name: &str, value: serde_json::Value) {
        self.manifest.records.insert(name.to_string(), value);
    }

    fn write(&mut self, entry: crate::output::FileEntry) {
        self.manifest.files.retain(|f| f.path != entry.path);
        self.manifest.files.push(entry);
    }

    pub fn run_mode(&mut self, mode: Mode) -> Result<(), CliError> {
        self.manifest.mode = mode.to_string();
        match mode {
            Mode::BoundStates => self.export_bound_states(),
            Mode::DipoleTable => self.export_dipole_table(),
            Mode::TdseScan => self.export_tdse_spectra().map(|_| ()),
            Mode::CvaScan => self.export_cva_spectra().map(|_| ()),
            Mode::ClassicalScan => self.export_classical().map(|_| ()),
            Mode::ParcelAnalysis => self.export_parcels().map(|_| ()),
            Mode::Compare => self.compare().map(|_| ()),
        }
    }

    pub fn write_manifest(&mut self, mode: Mode) -> Result<(), CliError> {
        self.manifest.mode = mode.to_string();
        let json = serde_json::to_vec_pretty(&self.manifest).expect("manifest serializes");
        self.out.write_bytes("manifest.json", &json)?;
        Ok(())
    }

    // ---- bound states -------------------------------------------------

    pub fn bound_states(&mut self) -> Result<BoundStateSet, CliError> {
        if let Some(b) = &self.bound {
            return Ok(b.clone());
        }
        let start = Instant::now();
        let key = key_of("bound", &(&self.config.potential, grid_descriptor(&self.aux)));
        let set = match self.cache.load("bound", &key)? {
            Some(bytes) => {
                self.cache_event("bound", &key, true);
                decode_bound(&bytes, self.aux)?
            }
            None => {
                self.cache_event("bound", &key, false);
                progress("solving bound states");
                let set = solve_bound_states(&self.config.potential, &self.aux, 2)?;
                self.cache.store("bound", &key, &encode_bound(&set))?;
                set
            }
        };
        self.time("bound states", start);
        self.bound = Some(set.clone());
        Ok(set)
    }

    pub fn ionization_energy(&mut self) -> Result<f64, CliError> {
        Ok(self.bound_states()?.ionization_energy())
    }

    pub fn xuv(&mut self) -> Result<XuvPulse, CliError> {
        let w = self.ionization_energy()?;
        Ok(XuvPulse::from_targets(&self.config.xuv, w)?)
    }

    pub fn nir(&self, f0: f64) -> Result<NirPulse, CliError> {
        Ok(NirPulse::from_params(f0, &self.config.nir)?)
    }

    fn max_vector_potential(&self) -> Result<f64, CliError> {
        let mut m: f64 = 0.0;
        for f0 in self.config.f0_values() {
            m = m.max(self.nir(f0)?.max_vector_potential());
        }
        Ok(m)
    }

    fn export_bound_states(&mut self) -> Result<(), CliError> {
        let set = self.bound_states()?;
        let rows = set.energies().iter().zip(set.residuals()).enumerate().map(|(n, (e, r))| {
            format!("{n},{e},{},{r}", au_to_ev(*e))
        });
        let entry = self.out.write_csv(
            "bound_states.csv",
            &[
                "n: index from the ground state; energy in a.u. and eV; residual: ||(H - E) psi||".into(),
                format!("initial state: n = 1, W = {} eV", au_to_ev(set.ionization_energy())),
            ],
            "n,energy_au,energy_ev,residual",
            rows,
        )?;
        self.write(entry);
        let psi0 = set.initial_state();
        let grid = *set.grid();
        let v = self.config.potential;
        let rows = psi0
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(j, a)| {
                let q = grid.position(j);
                format!("{q},{},{},{}", v.value(q), a.re, a.im)
            })
            .collect::<Vec<_>>();
        let entry = self.out.write_csv(
            "initial_state.csv",
            &["q [a.u.]; potential [a.u.]; real and imaginary parts of psi0".into()],
            "q,potential,re,im",
            rows,
        )?;
        self.write(entry);
        self.record(
            "bound_states",
            json!({
                "count": set.len(),
                "ionization_energy_au": set.ionization_energy(),
                "ionization_energy_ev": au_to_ev(set.ionization_energy()),
            }),
        );
        Ok(())
    }

    // ---- dipole table --------------------------------------------------

    pub fn dipole_table(&mut self) -> Result<DipoleTable, CliError> {
        if let Some(t) = &self.table {
            return Ok(t.clone());
        }
        let bound = self.bound_states()?;
        let start = Instant::now();
        let v = self.config.potential;
        let solver = LippmannSchwinger::new(&v, 0.5 * v.q_r, &self.aux, self.config.scattering)?;
        let p_probe = (2.0 * ev_to_au(self.config.xuv.peak_ev)).sqrt();
        let (prefactor, ranking) = select_prefactor(
            &solver,
            self.config.scattering.prefactor,
            p_probe,
            self.config.dipole.max_residual,
        )?;
        self.manifest.prefactor = Some(prefactor);
        self.manifest.prefactor_residuals = ranking;
        let lo = self.config.scattering.p_min;
        let hi = self.config.dipole.p_max + self.max_vector_potential()? + self.config.dipole.margin;
        let momenta = table_momenta(&self.prod, self.config.dipole.stride, lo, hi);
        let key = key_of(
            "dipole",
            &(
                &v,
                grid_descriptor(&self.aux),
                self.prod.dp(),
                self.config.dipole.stride,
                lo,
                hi,
                &self.config.scattering,
                prefactor,
            ),
        );
        let table = match self.cache.load("dipole", &key)? {
            Some(bytes) => {
                self.cache_event("dipole", &key, true);
                decode_table(&bytes, prefactor)?
            }
            None => {
                self.cache_event("dipole", &key, false);
                progress(&format!("building dipole table: {} momenta in [{lo}, {hi:.4}]", momenta.len()));
                let t = build_dipole_table(
                    &solver,
                    prefactor,
                    bound.initial_state(),
                    &momenta,
                    self.config.dipole.max_residual,
                )?;
                self.cache.store("dipole", &key, &encode_table(&t))?;
                t
            }
        };
        self.time("dipole table", start);
        self.table = Some(table.clone());
        Ok(table)
    }

    fn export_dipole_table(&mut self) -> Result<(), CliError> {
        let t = self.dipole_table()?;
        let rows = t
            .momenta()
            .iter()
            .zip(t.values())
            .map(|(p, d)| format!("{p},{},{},{}", d.re, d.im, d.norm_sqr()));
        let entry = self.out.write_csv(
            "dipole_table.csv",
            &[
                format!("d(p) = <phi_p|q|psi0>, Green's-function prefactor {:?}", t.prefactor()),
                "p [a.u.]; real and imaginary part of d [a.u.]; |d|^2".into(),
            ],
            "p,re,im,abs2",
            rows,
        )?;
        self.write(entry);
        Ok(())
    }

    // ---- propagation ---------------------------------------------------

    fn tdse_key(&self, f0: f64) -> String {
        key_of(
            "tdse",
            &(
                &self.config.potential,
                &self.config.grid,
                &self.config.xuv,
                &self.config.nir,
                f0,
                &self.config.propagation,
            ),
        )
    }

    /// Runs (or loads) every requested field strength.
    pub fn ensure_tdse(&mut self, f0s: &[f64]) -> Result<(), CliError> {
        let mut missing = Vec::new();
        for &f0 in f0s {
            if self.tdse.contains_key(&f0.to_bits()) {
                continue;
            }
            let key = self.tdse_key(f0);
            match self.cache.load("tdse", &key)? {
                Some(bytes) => {
                    self.cache_event("tdse", &key, true);
                    let r = decode_tdse(&bytes, self.prod)?;
                    self.tdse.insert(f0.to_bits(), r);
                }
                None => {
                    self.cache_event("tdse", &key, false);
                    missing.push(f0);
                }
            }
        }
        if missing.is_empty() {
            return Ok(());
        }
        let bound = self.bound_states()?.embed(&self.prod)?;
        let w = bound.ionization_energy();
        let xuv = self.xuv()?;
        let fields = missing
            .iter()
            .map(|&f0| Ok(FieldSet { xuv, nir: self.nir(f0)? }))
            .collect::<Result<Vec<_>, CliError>>()?;
        progress(&format!("propagating F0 = {missing:?}"));
        let start = Instant::now();
        let runs = run_dressed_scan(
            &self.prod,
            &self.config.potential,
            bound.initial_state(),
            w,
            &fields,
            &self.config.propagation,
        );
        self.time("tdse", start);
        let mut first_error = None;
        for (f0, run) in missing.iter().zip(runs) {
            let run = match run {
                Ok(r) => r,
                Err(e) => {
                    self.manifest.warnings.push(format!("TDSE run at F0 = {f0} failed: {e}"));
                    first_error.get_or_insert(e);
                    continue;
                }
            };
            let (late_t, late) = run
                .late_state
                .ok_or_else(|| CliError::Config("propagation.extra_time must be positive".into()))?;
            let result = TdseResult {
                f0: *f0,
                t_end: run.t_end,
                late_t,
                continuum: continuum_part(&run.final_state, &bound)?,
                late: continuum_part(&late, &bound)?,
                diagnostics: run.diagnostics,
            };
            self.check_escape(&result);
            self.cache.store("tdse", &self.tdse_key(*f0), &encode_tdse(&result))?;
            self.tdse.insert(f0.to_bits(), result);
        }
        match first_error {
            Some(e) => Err(e.into()),
            None => Ok(()),
        }
    }

    /// Warns when the right-going packet has not cleared the wells.
    fn check_escape(&mut self, r: &TdseResult) {
        let grid = *r.continuum.grid();
        let (mut num, mut den) = (0.0, 0.0);
        for (j, a) in r.continuum.amplitudes().iter().enumerate() {
            let q = grid.position(j);
            if q > 0.0 {
                num += q * a.norm_sqr();
                den += a.norm_sqr();
            }
        }
        if den > 0.0 && num / den < 300.0 {
            self.manifest.warnings.push(format!(
                "F0 = {}: right-going packet centered at {} a.u. (< 300) at t_end",
                r.f0,
                num / den
            ));
        }
    }

    pub fn tdse(&mut self, f0: f64) -> Result<TdseResult, CliError> {
        self.ensure_tdse(&[f0])?;
        Ok(self.tdse[&f0.to_bits()].clone())
    }

    pub fn tdse_spectrum(&mut self, f0: f64) -> Result<Spectrum, CliError> {
        let r = self.tdse(f0)?;
        Ok(momentum_spectrum(&self.fourier, &r.continuum, Model::Tdse, f0)?)
    }

    fn export_tdse_spectra(&mut self) -> Result<Vec<Spectrum>, CliError> {
        let f0s = self.config.f0_values();
        self.ensure_tdse(&f0s)?;
        let mut out = Vec::new();
        let mut diag = Vec::new();
        for f0 in f0s {
            let s = self.tdse_spectrum(f0)?;
            let r = &self.tdse[&f0.to_bits()];
            diag.push(json!({
                "f0": f0,
                "t_end": r.t_end,
                "continuum_norm": r.continuum.norm_sqr(),
                "diagnostics": r.diagnostics,
            }));
            let entry = write_spectrum(
                &self.out,
                &crate::output::spectrum_file_name(&s),
                &s,
                self.config.analysis.spectrum_range,
                &format!("continuum part at t_end = {} a.u.", r.t_end),
            )?;
            self.write(entry);
            out.push(s);
        }
        self.record("tdse", json!(diag));
        Ok(out)
    }

    // ---- perturbative models -------------------------------------------

    /// Production-lattice momenta where `d(p + A)` stays inside the table.
    fn model_momenta(&self) -> Result<Vec<f64>, CliError> {
        let lo = self.config.scattering.p_min + self.max_vector_potential()? + self.config.dipole.margin;
        let hi = self.config.dipole.p_max;
        let [r0, r1] = self.config.analysis.spectrum_range;
        let order = self.prod.ascending_momentum_order();
        Ok(order
            .iter()
            .map(|&k| self.prod.momentum(k))
            .filter(|p| p.abs() >= lo && p.abs() <= hi && *p >= r0 && *p <= r1)
            .collect())
    }

    /// Field-free spectrum by quadrature, checked against the closed form.
    pub fn field_free(&mut self) -> Result<(Spectrum, f64), CliError> {
        let table = self.dipole_table()?;
        let xuv = self.xuv()?;
        let momenta = self.model_momenta()?;
        let t_f = self.config.propagation.t_end;
        let start = Instant::now();
        let quad = field_free_amplitude(&momenta, &table, &xuv, t_f, &self.config.quadrature)?;
        let closed = field_free_closed_form(&momenta, &table, &xuv, t_f)?;
        self.time("field-free amplitude", start);
        let scale = closed.amplitudes.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let diff = quad
            .amplitudes
            .iter()
            .zip(&closed.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
            / scale;
        Ok((quad.spectrum()?, diff))
    }

    fn cva(&mut self, f0: f64) -> Result<(Spectrum, Vec<Complex64>), CliError> {
        let table = self.dipole_table()?;
        let xuv = self.xuv()?;
        let nir = self.nir(f0)?;
        let momenta = self.model_momenta()?;
        let r = cva_amplitude(&momenta, &table, &xuv, &nir, self.config.propagation.t_end, &self.config.quadrature)?;
        Ok((r.spectrum()?, r.amplitudes))
    }

    fn export_cva_spectra(&mut self) -> Result<(Vec<Spectrum>, f64, f64), CliError> {
        let (ff, closed_diff) = self.field_free()?;
        let entry = write_spectrum(
            &self.out,
            "spectrum_fieldfree_f0=0.csv",
            &ff,
            self.config.analysis.spectrum_range,
            "first-order amplitude without the NIR field, by time quadrature",
        )?;
        self.write(entry);
        let table = self.dipole_table()?;
        let xuv = self.xuv()?;
        let momenta = self.model_momenta()?;
        let ff_amp = field_free_amplitude(&momenta, &table, &xuv, self.config.propagation.t_end, &self.config.quadrature)?;
        let mut out = Vec::new();
        let mut reduction = f64::NAN;
        for f0 in self.config.f0_values() {
            progress(&format!("CVA at F0 = {f0}"));
            let start = Instant::now();
            let (s, amps) = self.cva(f0)?;
            self.time(&format!("cva f0={}", f0_label(f0)), start);
            if f0 == 0.0 {
                let scale = ff_amp.amplitudes.iter().map(|a| a.norm()).fold(0.0, f64::max);
                reduction = amps
                    .iter()
                    .zip(&ff_amp.amplitudes)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max)
                    / scale;
            }
            let entry = write_spectrum(
                &self.out,
                &crate::output::spectrum_file_name(&s),
                &s,
                self.config.analysis.spectrum_range,
                "Coulomb-Volkov first-order amplitude",
            )?;
            self.write(entry);
            out.push(s);
        }
        self.record(
            "perturbative",
            json!({
                "closed_form_relative_difference": closed_diff,
                "cva_zero_field_difference": reduction,
            }),
        );
        Ok((out, closed_diff, reduction))
    }

    // ---- parcels -------------------------------------------------------

    pub fn split(&mut self, f0: f64, late: bool) -> Result<(SplitParcel, f64), CliError> {
        let r = self.tdse(f0)?;
        let bound = self.bound_states()?.embed(&self.prod)?;
        let (psi, t) = if late { (&r.late, r.late_t) } else { (&r.continuum, r.t_end) };
        let parcel = wave_parcel(&self.fourier, psi, t, f0, Some(&bound))?;
        let split = split_parcel(&self.fourier, &parcel, &self.config.split)?;
        Ok((split, r.continuum.norm_sqr()))
    }

    fn parcel_record(&mut self, f0: f64) -> Result<(ParcelRecord, SplitParcel, Spectrum), CliError> {
        let (s, continuum_norm) = self.split(f0, false)?;
        let r = self.tdse(f0)?;
        let full = wave_parcel(&self.fourier, &r.continuum, r.t_end, f0, None)?;
        let late = wave_parcel(&self.fourier, &r.late, r.late_t, f0, None)?;
        let peak = full.wave.amplitudes().iter().map(|a| a.norm()).fold(0.0, f64::max);
        let late_change = full
            .wave
            .amplitudes()
            .iter()
            .zip(late.wave.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
            / peak;
        let refl = reflected_spectrum(&self.fourier, &s.reflected)?.window(0.0, f64::INFINITY);
        let direct = reflected_spectrum(&self.fourier, &s.direct)?.window(0.0, f64::INFINITY);
        let od = parcel_observables(&self.fourier, &s.direct)?;
        let or = parcel_observables(&self.fourier, &s.reflected)?;
        let rec = ParcelRecord {
            f0,
            q_cut: s.q_cut,
            continuum_norm,
            direct_norm: od.norm_sqr,
            reflected_norm: or.norm_sqr,
            reflection_probability: reflection_probability(&s.direct, &s.reflected)?,
            reflected_fraction_total: or.norm_sqr / continuum_norm,
            reflected_centroid: refl.centroid()?,
            reflected_rms_width: refl.rms_width()?,
            direct_centroid: direct.centroid()?,
            direct_q_center: od.q_center,
            reflected_q_center: or.q_center,
            late_change,
        };
        Ok((rec, s, refl))
    }

    fn export_parcels(&mut self) -> Result<Vec<ParcelRecord>, CliError> {
        let f0s = self.config.f0_values();
        self.ensure_tdse(&f0s)?;
        let mut records = Vec::new();
        for f0 in f0s {
            let (rec, split, refl) = self.parcel_record(f0)?;
            let p_c = parcel_observables(&self.fourier, &split.right)?.p_center;
            let [lo, hi] = [-200.0, 200.0];
            let rows = split
                .right
                .profile(p_c)
                .into_iter()
                .filter(|r| r.0 >= lo && r.0 <= hi)
                .map(|(q, a, ph)| format!("{q},{a:e},{ph}"))
                .collect::<Vec<_>>();
            let entry = self.out.write_csv(
                &format!("parcel_f0={}.csv", f0_label(f0)),
                &[
                    format!("wave parcel of the right-going (p > 0) continuum at t_f = {} a.u.", split.right.t_f),
                    format!("phase unwrapped after removing the central momentum {p_c} a.u."),
                    format!("split point q_cut = {} a.u.", rec.q_cut),
                    "q [a.u.]; |w| [a.u.^-1/2]; phase [rad]".into(),
                ],
                "q,abs,phase",
                rows,
            )?;
            self.write(entry);
            let entry = write_spectrum(
                &self.out,
                &format!("reflected_spectrum_f0={}.csv", f0_label(f0)),
                &refl,
                [0.0, self.config.analysis.spectrum_range[1]],
                "momentum density of the reflected branch parcel",
            )?;
            self.write(entry);
            records.push(rec);
        }
        let rows = records.iter().map(|r| {
            format!(
                "{},{},{:e},{:e},{:e},{},{:e},{},{},{},{},{},{:e}",
                r.f0,
                r.q_cut,
                r.continuum_norm,
                r.direct_norm,
                r.reflected_norm,
                r.reflection_probability,
                r.reflected_fraction_total,
                r.reflected_centroid,
                r.reflected_rms_width,
                r.direct_centroid,
                r.direct_q_center,
                r.reflected_q_center,
                r.late_change
            )
        });
        let entry = self.out.write_csv(
            "reflection.csv",
            &[
                "branch norms of the right-going parcel; reflection_probability = reflected / (direct + reflected)".into(),
                "reflected_fraction_total = reflected / whole continuum norm".into(),
                "centroids and widths in a.u. momentum; q centers in a.u.; late_change: relative sup-norm parcel change over the extra time".into(),
            ],
            "f0,q_cut,continuum_norm,direct_norm,reflected_norm,reflection_probability,reflected_fraction_total,reflected_centroid,reflected_rms_width,direct_centroid,direct_q_center,reflected_q_center,late_change",
            rows,
        )?;
        self.write(entry);
        self.record("parcels", json!(records));
        Ok(records)
    }

    // ---- classical model -----------------------------------------------

    fn export_classical(&mut self) -> Result<(Vec<ClassicalRecord>, Vec<Spectrum>), CliError> {
        let (split, _) = self.split(0.0, false)?;
        let t_f = split.right.t_f;
        let v = self.config.potential;
        let od = parcel_observables(&self.fourier, &split.direct)?;
        let or = parcel_observables(&self.fourier, &split.reflected)?;
        let v0_d = initial_velocity(Branch::Direct, &od, &v)?;
        let v0_r = initial_velocity(Branch::Reflected, &or, &v)?;
        let cfg: TrajectoryConfig = self.config.trajectory;

        let f0s = self.config.f0_values();
        let start = Instant::now();
        let trajectories = f0s
            .iter()
            .map(|&f0| {
                let nir = self.nir(f0)?;
                let d = integrate_trajectory(Branch::Direct, v0_d, &nir, &v, v.q_r, t_f, &cfg)?;
                let r = integrate_trajectory(Branch::Reflected, v0_r, &nir, &v, v.q_r, t_f, &cfg)?;
                Ok((f0, d, r))
            })
            .collect::<Result<Vec<(f64, Trajectory, Trajectory)>, CliError>>()?;
        self.time("trajectories", start);

        let base_d = dressing_params(&trajectories[0].1);
        let base_r = dressing_params(&trajectories[0].2);
        let mut records = Vec::new();
        let mut spectra = Vec::new();
        for (f0, d, r) in &trajectories {
            for (tr, v0) in [(d, v0_d), (r, v0_r)] {
                records.push(ClassicalRecord {
                    f0: *f0,
                    branch: tr.branch,
                    v0,
                    params: dressing_params(tr),
                    bounce_time: tr.bounce_time,
                    recrossing_as: tr.crossings.first().map(|t| au_to_as(*t)),
                });
                let branch = if tr.branch == Branch::Direct { "direct" } else { "reflected" };
                let rows = tr
                    .samples
                    .iter()
                    .step_by(TRAJECTORY_STRIDE)
                    .chain(std::iter::once(tr.last()))
                    .map(|s| format!("{},{},{},{}", s.t, s.x, s.v, s.action));
                let entry = self.out.write_csv(
                    &format!("trajectory_{branch}_f0={}.csv", f0_label(*f0)),
                    &[
                        format!("{branch} trajectory launched from x = 0 at t = 0 with v0 = {v0} a.u."),
                        format!("every {TRAJECTORY_STRIDE}th integration step and the final point"),
                        "t [a.u.]; x [a.u.]; v [a.u.]; accumulated action [a.u.]".into(),
                    ],
                    "t,x,v,action",
                    rows,
                )?;
                self.write(entry);
            }
            let wd = dress_parcel(&self.fourier, &split.direct, &base_d, &dressing_params(d), *f0)?;
            let wr = dress_parcel(&self.fourier, &split.reflected, &base_r, &dressing_params(r), *f0)?;
            let s = synthesize_spectrum(&self.fourier, &wd, &wr)?;
            let entry = write_spectrum(
                &self.out,
                &crate::output::spectrum_file_name(&s),
                &s,
                [0.0, self.config.analysis.spectrum_range[1]],
                "field-free branch parcels dressed with classical shifts",
            )?;
            self.write(entry);
            spectra.push(s);
        }
        let rows = records.iter().map(|r| {
            format!(
                "{},{:?},{},{},{},{},{},{}",
                r.f0,
                r.branch,
                r.v0,
                r.params.q,
                r.params.p,
                r.params.delta_s,
                r.bounce_time.map_or(String::new(), |t| t.to_string()),
                r.recrossing_as.map_or(String::new(), |t| t.to_string()),
            )
        });
        let entry = self.out.write_csv(
            "dressing.csv",
            &[
                "q: apparent start [a.u.]; p: final momentum [a.u.]; delta_s: back-propagated action [a.u.]".into(),
                "bounce_time [a.u.]; recrossing_as: first return to x = 0 [as]".into(),
            ],
            "f0,branch,v0,q,p,delta_s,bounce_time,recrossing_as",
            rows,
        )?;
        self.write(entry);
        self.record("classical", json!(records));
        Ok((records, spectra))
    }

    // ---- comparison ----------------------------------------------------

    pub fn compare(&mut self) -> Result<Comparison, CliError> {
        let f0s = self.config.f0_values();
        let bound = self.bound_states()?;
        self.dipole_table()?;
        self.ensure_tdse(&f0s)?;
        let tdse = self.export_tdse_spectra()?;
        let (cva, closed_diff, reduction) = self.export_cva_spectra()?;
        let parcels = self.export_parcels()?;
        let (classical, classical_spectra) = self.export_classical()?;

        let [lo, hi] = self.config.analysis.fringe_window;
        let (ff, _) = self.field_free()?;
        let tdse_win = tdse[0].window(lo, hi);
        let ff_win = ff.window(lo, hi);
        let field_free_l2 = if tdse_win.momenta.len() == ff_win.momenta.len() {
            tdse_win.relative_l2(&ff_win)?
        } else {
            f64::NAN
        };

        let mut fringes = Vec::new();
        let mut offset = 0.0;
        for (model, spectra) in [(Model::Tdse, &tdse), (Model::Cva, &cva), (Model::Classical, &classical_spectra)] {
            let found = spectra
                .iter()
                .map(|s| analyze_fringes(s, lo, hi))
                .collect::<Result<Vec<_>, _>>()?;
            let spacing = found[0].mean_spacing();
            let peaks: Vec<Vec<f64>> = found.iter().map(|f| f.peaks.clone()).collect();
            let shifts = tracked_shifts(&peaks, spacing).unwrap_or_else(|| vec![f64::NAN; found.len()]);
            if model == Model::Classical {
                let tdse0 = &fringes.iter().find(|f: &&FringeRecord| f.model == Model::Tdse).unwrap().fringes;
                offset = mean_shift(&tdse0.peaks, &found[0].peaks, spacing).unwrap_or(f64::NAN);
            }
            for ((f, s), &f0) in found.into_iter().zip(shifts).zip(&f0s) {
                fringes.push(FringeRecord { model, f0, fringes: f, shift: s });
            }
        }
        let rows = fringes.iter().map(|f| {
            let peaks: Vec<String> = f.fringes.peaks.iter().map(|p| p.to_string()).collect();
            format!(
                "{},{},{},{},{},{}",
                f.model,
                f.f0,
                f.fringes.length,
                f.fringes.mean_spacing(),
                f.shift,
                peaks.join(";")
            )
        });
        let entry = self.out.write_csv(
            "fringes.csv",
            &[
                format!("fringe maxima in p in [{lo}, {hi}] a.u. after envelope normalization"),
                "length: dominant periodogram length [a.u.]; spacing: mean peak spacing [a.u.]".into(),
                "shift: cumulative peak shift relative to the same model at F0 = 0 [a.u.]; peaks separated by ';'".into(),
            ],
            "model,f0,length,spacing,shift,peaks",
            rows,
        )?;
        self.write(entry);

        let max_norm_drift = self
            .tdse
            .values()
            .map(|r| r.diagnostics.max_norm_drift)
            .fold(0.0, f64::max);
        let comparison = Comparison {
            f0: f0s,
            ionization_energy_ev: au_to_ev(bound.ionization_energy()),
            bound_residual_max: bound.residuals().iter().cloned().fold(0.0, f64::max),
            field_free_l2,
            field_free_closed_form_diff: closed_diff,
            cva_reduction_diff: reduction,
            fringes,
            parcels,
            classical,
            classical_offset: offset,
            max_norm_drift,
        };
        let results = crate::acceptance::evaluate(self, &comparison)?;
        let rows = results.iter().map(|r| {
            format!("{},{},{},\"{}\",\"{}\"", r.id, if r.pass { "pass" } else { "fail" }, r.value, r.measured, r.target)
        });
        let entry = self.out.write_csv(
            "acceptance.csv",
            &["acceptance checks of the comparison run".into()],
            "id,status,value,measured,target",
            rows,
        )?;
        self.write(entry);
        self.manifest.acceptance = results;
        self.comparison = Some(comparison.clone());
        Ok(comparison)
    }
}

// ---- cache encodings ---------------------------------------------------

fn corrupt(what: &str) -> CliError {
    CliError::Cache(format!("malformed {what} entry"))
}

fn parse_floats<'a>(it: impl Iterator<Item = &'a str>, what: &str) -> Result<Vec<f64>, CliError> {
    it.map(|s| s.trim().parse::<f64>().map_err(|_| corrupt(what))).collect()
}

fn encode_bound(set: &BoundStateSet) -> Vec<u8> {
    let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    let mut s = format!("# energies,{}\n# residuals,{}\n", join(set.energies()), join(set.residuals()));
    let grid = set.grid();
    for j in 0..grid.len() {
        s.push_str(&grid.position(j).to_string());
        for st in set.states() {
            let a = st.amplitudes()[j];
            s.push_str(&format!(",{},{}", a.re, a.im));
        }
        s.push('\n');
    }
    s.into_bytes()
}

fn decode_bound(bytes: &[u8], grid: Grid) -> Result<BoundStateSet, CliError> {
    let text = std::str::from_utf8(bytes).map_err(|_| corrupt("bound-state"))?;
    let mut lines = text.lines();
    let mut header = |tag: &str| -> Result<Vec<f64>, CliError> {
        let line = lines.next().ok_or_else(|| corrupt("bound-state"))?;
        let rest = line.strip_prefix(tag).ok_or_else(|| corrupt("bound-state"))?;
        parse_floats(rest.split(','), "bound-state")
    };
    let energies = header("# energies,")?;
    let residuals = header("# residuals,")?;
    let n = energies.len();
    let mut amps = vec![Vec::with_capacity(grid.len()); n];
    let mut rows = 0;
    for line in lines {
        let v = parse_floats(line.split(','), "bound-state")?;
        if v.len() != 1 + 2 * n {
            return Err(corrupt("bound-state"));
        }
        for (k, a) in amps.iter_mut().enumerate() {
            a.push(Complex64::new(v[1 + 2 * k], v[2 + 2 * k]));
        }
        rows += 1;
    }
    if rows != grid.len() {
        return Err(corrupt("bound-state"));
    }
    let states = amps
        .into_iter()
        .map(|a| Wavefunction::new(grid, a, Representation::Position))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| corrupt("bound-state"))?;
    BoundStateSet::from_parts(grid, energies, states)
        .and_then(|b| b.with_residuals(residuals))
        .map_err(|_| corrupt("bound-state"))
}

fn encode_table(t: &DipoleTable) -> Vec<u8> {
    let mut s = String::new();
    for (p, d) in t.momenta().iter().zip(t.values()) {
        s.push_str(&format!("{p},{},{}\n", d.re, d.im));
    }
    s.into_bytes()
}

fn decode_table(bytes: &[u8], prefactor: attoscatter_core::GreenPrefactor) -> Result<DipoleTable, CliError> {
    let text = std::str::from_utf8(bytes).map_err(|_| corrupt("dipole"))?;
    let mut momenta = Vec::new();
    let mut values = Vec::new();
    for line in text.lines() {
        let v = parse_floats(line.split(','), "dipole")?;
        if v.len() != 3 {
            return Err(corrupt("dipole"));
        }
        momenta.push(v[0]);
        values.push(Complex64::new(v[1], v[2]));
    }
    DipoleTable::from_samples(momenta, values, prefactor).map_err(|_| corrupt("dipole"))
}

#[derive(Serialize, Deserialize)]
struct TdseHeader {
    f0: f64,
    t_end: f64,
    late_t: f64,
    points: usize,
    diagnostics: Diagnostics,
}

fn encode_tdse(r: &TdseResult) -> Vec<u8> {
    let header = TdseHeader {
        f0: r.f0,
        t_end: r.t_end,
        late_t: r.late_t,
        points: r.continuum.grid().len(),
        diagnostics: r.diagnostics.clone(),
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    for a in r.continuum.amplitudes().iter().chain(r.late.amplitudes()) {
        out.extend_from_slice(&a.re.to_le_bytes());
        out.extend_from_slice(&a.im.to_le_bytes());
    }
    out
}

fn decode_tdse(bytes: &[u8], grid: Grid) -> Result<TdseResult, CliError> {
    let split = bytes.iter().position(|b| *b == b'\n').ok_or_else(|| corrupt("tdse"))?;
    let header: TdseHeader = serde_json::from_slice(&bytes[..split]).map_err(|_| corrupt("tdse"))?;
    let body = &bytes[split + 1..];
    if header.points != grid.len() || body.len() != 32 * grid.len() {
        return Err(corrupt("tdse"));
    }
    let amps: Vec<Complex64> = body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    let (a, b) = amps.split_at(grid.len());
    Ok(TdseResult {
        f0: header.f0,
        t_end: header.t_end,
        late_t: header.late_t,
        continuum: Wavefunction::new(grid, a.to_vec(), Representation::Position).map_err(|_| corrupt("tdse"))?,
        late: Wavefunction::new(grid, b.to_vec(), Representation::Position).map_err(|_| corrupt("tdse"))?,
        diagnostics: header.diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_state_encoding_round_trips() {
        let grid = Grid::new(-8.0, 8.0, 64).unwrap();
        let s0 = Wavefunction::from_position_fn(grid, |q| Complex64::new((-q * q).exp(), 0.1 * q));
        let s1 = Wavefunction::from_position_fn(grid, |q| Complex64::new(q * (-q * q).exp(), 0.0));
        let set = BoundStateSet::from_parts(grid, vec![-1.0, -0.3], vec![s0, s1])
            .unwrap()
            .with_residuals(vec![1e-9, 2e-9])
            .unwrap();
        let back = decode_bound(&encode_bound(&set), grid).unwrap();
        assert_eq!(back.energies(), set.energies());
        assert_eq!(back.residuals(), set.residuals());
        for (a, b) in back.states().iter().zip(set.states()) {
            assert_eq!(a.amplitudes(), b.amplitudes());
        }
        assert!(decode_bound(b"# energies,1\n", grid).is_err());
    }

    #[test]
    fn tdse_encoding_round_trips() {
        let grid = Grid::new(-8.0, 8.0, 16).unwrap();
        let w = Wavefunction::from_position_fn(grid, |q| Complex64::new(q, -q));
        let r = TdseResult {
            f0: 0.01,
            t_end: 600.0,
            late_t: 700.0,
            continuum: w.clone(),
            late: w,
            diagnostics: Diagnostics::default(),
        };
        let back = decode_tdse(&encode_tdse(&r), grid).unwrap();
        assert_eq!(back.continuum.amplitudes(), r.continuum.amplitudes());
        assert_eq!(back.late_t, 700.0);
        assert!(decode_tdse(&encode_tdse(&r)[..40], grid).is_err());
    }
}
