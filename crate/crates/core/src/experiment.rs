//! Experiment configuration and the pipelines behind the `kp2lab` commands.
//!
//! Every pipeline returns plain data plus a list of named [`Check`]s; writing
//! files is left to the callers so the acceptance tests can reuse the same code.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::Deserialize;
use statrs::statistics::Statistics;

use crate::burgers::{profile_comparator, ProfileDeviation, ProfilePair};
use crate::error::{Error, Result};
use crate::extract::{
    build_decomposition, fit_field, k_kernel, outside_cone_series, phase_diagnostics, project_field, recenter,
    ModulationTrack, PhaseDiagnostics,
};
use crate::grid::{l2_spectral, Field2D, Grid2D};
use crate::linear::{
    asymptotic_comparators, band_plateau, decay_exponent_fit, default_kernel_grid, high_freq_decay_check,
    kernels_at, log_times, phase_limit_integral, ComparatorResiduals, DecayFit, KernelNorms,
    ModulationConstants, PhaseLimit, SourceWindow,
};
use crate::modes::{biorthogonality, ModePair, ModeWindow, CERTIFIED_RESIDUAL};
use crate::soliton::{initial_decomposition, phi, phi_x, psi_cl};
use crate::solver::{simulate, SolverConfig, Sponge, Trajectory};

/// Reference amplitude of the background soliton.
pub const C0: f64 = 2.0;
/// Largest perturbation size accepted by the configuration.
pub const EPS_MAX: f64 = 0.1;

/// One named pass/fail outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass, detail: detail.into() }
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

// ---------------------------------------------------------------- config

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub name: String,
    pub seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { name: "stability".into(), seed: 1 }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { nx: 1024, ny: 256, lx: 160.0, ly: 160.0 }
    }
}

/// Which snapshots `simulate` writes to disk.
#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotFiles {
    None,
    #[default]
    Last,
    All,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub dt: f64,
    pub t_end: f64,
    /// Time between stored snapshots; must be a whole number of steps.
    pub snapshot_every: f64,
    pub sponge: bool,
    pub sponge_strength: f64,
    /// Also run the auxiliary flow from `v*` and report the `v`, `v2`, `k` norms.
    pub aux_flow: bool,
    pub snapshot_files: SnapshotFiles,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            dt: 0.02,
            t_end: 20.0,
            snapshot_every: 0.5,
            sponge: true,
            sponge_strength: 1.0,
            aux_flow: true,
            snapshot_files: SnapshotFiles::Last,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    None,
    /// `ε ∂_x exp(-s²/wx² - y²/wy²)`, `s = x - lx/2 - offset`.
    #[default]
    Derivative,
    /// Four derivative-form lumps with SplitMix64-drawn weights and centres.
    Random,
    /// Line amplitude raised to `2 + ε exp(-y²/wy²)`, mass kept by the corrector.
    AmplitudeBump,
}

impl PerturbationKind {
    pub fn is_derivative_form(self) -> bool {
        matches!(self, Self::None | Self::Derivative | Self::Random)
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationSection {
    pub kind: PerturbationKind,
    pub epsilon: f64,
    pub wx: f64,
    pub wy: f64,
    pub offset: f64,
    /// Reject configurations whose perturbation is not an x-derivative.
    pub require_derivative_form: bool,
}

impl Default for PerturbationSection {
    fn default() -> Self {
        Self {
            kind: PerturbationKind::Derivative,
            epsilon: 0.01,
            wx: 1.5,
            wy: 5.0,
            offset: 2.0,
            require_derivative_form: false,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ModulationSection {
    pub eta0: f64,
    pub alpha: f64,
    pub l: f64,
    /// Cone margin for the phase diagnostics.
    pub delta: f64,
    /// Rerun the phase experiment on a grid refined by two in each direction.
    pub refine: bool,
}

impl Default for ModulationSection {
    fn default() -> Self {
        Self { eta0: 0.5, alpha: 1.0, l: 10.0, delta: 0.5, refine: false }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct EigenSection {
    pub etas: Vec<f64>,
    pub points: usize,
    pub half_width: f64,
}

impl Default for EigenSection {
    fn default() -> Self {
        Self { etas: vec![0.05, 0.1, 0.3], points: 4096, half_width: 40.0 }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSection {
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
    pub dy: f64,
    pub slope_band: f64,
    pub phase_limit_t: f64,
}

impl Default for KernelSection {
    fn default() -> Self {
        Self { t_min: 10.0, t_max: 200.0, samples: 10, dy: 0.5, slope_band: 0.1, phase_limit_t: 50.0 }
    }
}

/// The whole configuration file. Every key has a default.
#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: RunSection,
    pub grid: GridSection,
    pub solver: SolverSection,
    pub perturbation: PerturbationSection,
    pub modulation: ModulationSection,
    pub eigen: EigenSection,
    pub kernels: KernelSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.perturbation;
        if !(p.epsilon.abs() <= EPS_MAX) {
            return Err(Error::Config(format!("epsilon = {} exceeds {EPS_MAX}", p.epsilon)));
        }
        if !(p.wx > 0.0 && p.wy > 0.0) {
            return Err(Error::Config("perturbation widths must be positive".into()));
        }
        if p.require_derivative_form && !p.kind.is_derivative_form() {
            return Err(Error::Config(format!("perturbation {:?} is not an x-derivative", p.kind)));
        }
        Grid2D::new(self.grid.nx, self.grid.ny, self.grid.lx, self.grid.ly)?;
        self.stride()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid2D> {
        Grid2D::new(self.grid.nx, self.grid.ny, self.grid.lx, self.grid.ly)
    }

    fn stride(&self) -> Result<usize> {
        let s = &self.solver;
        let r = s.snapshot_every / s.dt;
        if !(r >= 1.0) || (r - r.round()).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "snapshot_every = {} is not a whole number of steps dt = {}",
                s.snapshot_every, s.dt
            )));
        }
        Ok(r.round() as usize)
    }

    pub fn solver_config(&self, grid: &Grid2D) -> Result<SolverConfig> {
        let mut cfg = SolverConfig::new(grid.clone(), self.solver.dt, self.solver.t_end);
        cfg.snapshot_stride = self.stride()?;
        if self.solver.sponge {
            let mut sp = Sponge::behind_crest(grid.lx());
            sp.strength = self.solver.sponge_strength;
            cfg.sponge = Some(sp);
        }
        Ok(cfg)
    }

    /// The same experiment on a grid with twice the points in each direction.
    pub fn refined(&self) -> Self {
        let mut r = self.clone();
        r.grid.nx *= 2;
        r.grid.ny *= 2;
        r
    }

    pub fn constants(&self) -> ModulationConstants {
        ModulationConstants::new(self.modulation.eta0)
    }
}

// ---------------------------------------------------------------- initial data

fn gaussian_dx(s: f64, y: f64, wx: f64, wy: f64) -> f64 {
    -2.0 * s / (wx * wx) * (-(s * s) / (wx * wx) - y * y / (wy * wy)).exp()
}

/// The perturbation `v0` added to `φ_2(x - lx/2)`.
pub fn initial_perturbation(cfg: &ExperimentConfig, grid: &Grid2D, seed: u64) -> Field2D {
    let p = &cfg.perturbation;
    let xc = grid.lx() / 2.0;
    let eps = p.epsilon;
    match p.kind {
        PerturbationKind::None => Field2D::zeros(grid),
        PerturbationKind::Derivative => {
            Field2D::from_fn(grid, |x, y| eps * gaussian_dx(x - xc - p.offset, y, p.wx, p.wy))
        }
        PerturbationKind::Random => {
            let mut rng = SplitMix64::seed_from_u64(seed);
            let lumps: Vec<(f64, f64, f64)> = (0..4)
                .map(|_| {
                    let a = rng.gen_range(-1.0..1.0);
                    let sx = p.offset + p.wx * rng.gen_range(-1.0..1.0);
                    let sy = p.wy * rng.gen_range(-1.0..1.0);
                    (a, sx, sy)
                })
                .collect();
            Field2D::from_fn(grid, |x, y| {
                lumps
                    .iter()
                    .map(|&(a, sx, sy)| a * gaussian_dx(x - xc - sx, y - sy, p.wx, p.wy))
                    .sum::<f64>()
                    * eps
            })
        }
        PerturbationKind::AmplitudeBump => {
            let l = cfg.modulation.l;
            Field2D::from_fn(grid, |x, y| {
                let c = C0 + eps * (-(y * y) / (p.wy * p.wy)).exp();
                let z = x - xc;
                phi(z, c) - psi_cl(z, c, l) - phi(z, C0)
            })
        }
    }
}

// ---------------------------------------------------------------- simulation pipeline

/// Largest fit-versus-projection disagreement at one snapshot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Agreement {
    pub t: f64,
    pub dc: f64,
    pub dx: f64,
}

/// `‖v‖`, `‖v2‖` and `‖k‖` at one snapshot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecompositionNorms {
    pub t: f64,
    pub v: f64,
    pub v2: f64,
    pub k: f64,
}

pub struct SimulationRun {
    pub grid: Grid2D,
    pub c1: Vec<f64>,
    pub trajectory: Trajectory,
    pub fit: ModulationTrack,
    pub projected: ModulationTrack,
    pub agreement: Vec<Agreement>,
    pub decomposition: Vec<DecompositionNorms>,
}

impl SimulationRun {
    pub fn max_agreement(&self) -> (f64, f64) {
        self.agreement
            .iter()
            .fold((0.0f64, 0.0f64), |(c, x), a| (c.max(a.dc), x.max(a.dx)))
    }

    /// `max |x̃|` over the projected track.
    pub fn sup_shift(&self) -> f64 {
        self.projected.phase.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Builds the initial data, runs the flow (and the auxiliary flow from `v*` when
/// `aux` is set), then extracts both tracks from every snapshot.
pub fn run_simulation(cfg: &ExperimentConfig, seed: u64, aux: bool) -> Result<SimulationRun> {
    let grid = cfg.grid()?;
    let solver = cfg.solver_config(&grid)?;
    let xc = grid.lx() / 2.0;
    let v0 = initial_perturbation(cfg, &grid, seed);
    let (c1, v_star) = initial_decomposition(&v0, C0)?;
    let u0 = Field2D::from_fn(&grid, |x, _| phi(x - xc, C0)).add(&v0);

    let (trajectory, aux_traj) = if aux {
        let (a, b) = rayon::join(|| simulate(&u0, &solver), || simulate(&v_star, &solver));
        (a?, Some(b?))
    } else {
        (simulate(&u0, &solver)?, None)
    };

    let l = cfg.modulation.l;
    let constants = cfg.constants();
    let mut fit = ModulationTrack::new(grid.ys(), grid.ly());
    let mut projected = ModulationTrack::new(grid.ys(), grid.ly());
    let mut agreement = Vec::with_capacity(trajectory.times.len());
    let mut decomposition = Vec::new();
    for (i, (&t, u)) in trajectory.times.iter().zip(&trajectory.snapshots).enumerate() {
        let pf = fit_field(u, C0)?;
        let pp = project_field(u, &pf, t, l)?;
        let max_diff = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        agreement.push(Agreement { t, dc: max_diff(&pf.c, &pp.c), dx: max_diff(&pf.phase, &pp.phase) });
        if let Some(a) = &aux_traj {
            let w = &a.snapshots[i];
            let (v, v2) = build_decomposition(u, &pp, t, l, Some(w))?;
            let k = k_kernel(&recenter(w, &pp.phase)?, &pp, &constants)?;
            let k_l2 = (k.iter().map(|x| x * x).sum::<f64>() * grid.dy()).sqrt();
            decomposition.push(DecompositionNorms { t, v: l2_spectral(&v).sqrt(), v2: l2_spectral(&v2).sqrt(), k: k_l2 });
        }
        fit.push(t, pf)?;
        projected.push(t, pp)?;
    }
    Ok(SimulationRun { grid, c1, trajectory, fit, projected, agreement, decomposition })
}

pub fn simulation_checks(run: &SimulationRun, cfg: &ExperimentConfig) -> Vec<Check> {
    let eps = cfg.perturbation.epsilon.abs();
    let (dc, dx) = run.max_agreement();
    let sup = run.sup_shift();
    let (dl, dh) = run.trajectory.relative_drift();
    let mut checks = vec![
        Check::new(
            "fit/projection agreement <= 1e-3",
            dc <= 1e-3 && dx <= 1e-3,
            format!("max |dc| = {dc:.3e}, max |dx| = {dx:.3e}"),
        ),
        Check::new("sup |x~| <= 10 eps", sup <= 10.0 * eps, format!("sup = {sup:.4e}, 10 eps = {:.4e}", 10.0 * eps)),
    ];
    if !cfg.solver.sponge {
        checks.push(Check::new("l2 drift < 1e-7", dl < 1e-7, format!("{dl:.3e}")));
        checks.push(Check::new("hamiltonian drift < 1e-5", dh < 1e-5, format!("{dh:.3e}")));
    }
    checks
}

// ---------------------------------------------------------------- profile comparison

pub struct ProfileReport {
    /// `¼∫(c(0, y) - 2) dy` from the projected track.
    pub mass: f64,
    pub pair: ProfilePair,
    pub deviations: Vec<ProfileDeviation>,
    /// Correlation of extracted and predicted `(c - 2, x_y)` over the final third.
    pub pearson: f64,
    /// Mean normalized deviation over three equal spans of `log t`.
    pub log_thirds: [f64; 3],
    /// The same over three equal spans of `t`, for reference.
    pub linear_thirds: [f64; 3],
}

impl ProfileReport {
    pub fn thirds_non_increasing(&self) -> bool {
        self.log_thirds[1] <= self.log_thirds[0] && self.log_thirds[2] <= self.log_thirds[1]
    }

    pub fn checks(&self) -> Vec<Check> {
        vec![
            Check::new("profile correlation >= 0.8", self.pearson >= 0.8, format!("pearson = {:.4}", self.pearson)),
            Check::new(
                "normalized deviation non-increasing over log-time thirds",
                self.thirds_non_increasing(),
                format!(
                    "log thirds = [{:.3e}, {:.3e}, {:.3e}]",
                    self.log_thirds[0], self.log_thirds[1], self.log_thirds[2]
                ),
            ),
        ]
    }
}

fn thirds(devs: &[ProfileDeviation], coord: impl Fn(f64) -> f64) -> [f64; 3] {
    let (lo, hi) = (coord(devs[0].t), coord(devs[devs.len() - 1].t));
    let mut sum = [0.0; 3];
    let mut count = [0usize; 3];
    for d in devs {
        let r = (coord(d.t) - lo) / (hi - lo);
        let k = ((3.0 * r).floor() as usize).min(2);
        sum[k] += d.dev_normalized;
        count[k] += 1;
    }
    let mut out = [f64::NAN; 3];
    for k in 0..3 {
        if count[k] > 0 {
            out[k] = sum[k] / count[k] as f64;
        }
    }
    out
}

/// Compares the track with the Burgers pair matched to its initial mass.
pub fn profile_report(track: &ModulationTrack) -> Result<ProfileReport> {
    let mass = track.initial_mass();
    let pair = ProfilePair::from_mass(mass);
    let period = Some(track.ly);
    let samples: Vec<usize> = (0..track.len()).filter(|&i| track.times[i] > 0.0).collect();
    if samples.len() < 3 {
        return Err(Error::InvalidArgument("profile comparison needs three positive sample times".into()));
    }
    let mut deviations = Vec::with_capacity(samples.len());
    let t_end = track.times[track.len() - 1];
    let (mut got, mut want) = (Vec::new(), Vec::new());
    for &i in &samples {
        let t = track.times[i];
        let xy = track.phase_y(i);
        deviations.push(profile_comparator(t, &track.ys, &track.c[i], &xy, &pair, period));
        if t >= 2.0 * t_end / 3.0 - 1e-9 {
            for (iy, &y) in track.ys.iter().enumerate() {
                let (pc, px) = pair.predict(t, y, period);
                got.push(track.c[i][iy] - 2.0);
                want.push(pc);
                got.push(xy[iy]);
                want.push(px);
            }
        }
    }
    let cov = (&got).covariance(&want);
    let pearson = cov / ((&got).std_dev() * (&want).std_dev());
    Ok(ProfileReport {
        mass,
        pair,
        log_thirds: thirds(&deviations, f64::ln),
        linear_thirds: thirds(&deviations, |t| t),
        deviations,
        pearson,
    })
}

// ---------------------------------------------------------------- phase experiment

pub struct PhaseReport {
    pub epsilon: f64,
    pub diagnostics: PhaseDiagnostics,
    /// Plateau predicted by the mass rule: the phase jump `¼∫(c(0, y) - 2) dy` across one wave.
    pub predicted_h: f64,
    pub outside: Vec<(f64, f64)>,
    pub refined: Option<PhaseDiagnostics>,
}

impl PhaseReport {
    pub fn checks(&self) -> Vec<Check> {
        let d = &self.diagnostics;
        let mut checks = Vec::new();
        if self.epsilon == 0.0 {
            checks.push(Check::new("zero data gives zero plateau", d.plateau_h.abs() < 1e-8, format!("h = {:.3e}", d.plateau_h)));
        } else {
            let same_sign = d.plateau_h * self.predicted_h > 0.0;
            checks.push(Check::new(
                "plateau has the predicted sign",
                same_sign,
                format!("h = {:.4e}, predicted {:.4e}", d.plateau_h, self.predicted_h),
            ));
        }
        checks.push(Check::new(
            "sup |x~| <= 10 eps",
            d.sup_shift <= 10.0 * self.epsilon.abs(),
            format!("sup = {:.4e}", d.sup_shift),
        ));
        if let Some(r) = &self.refined {
            let (a, b) = (d.plateau_h / self.epsilon, r.plateau_h / self.epsilon);
            let rel = (a - b).abs() / b.abs();
            checks.push(Check::new(
                "h/eps stable within 20% under refinement",
                rel <= 0.2,
                format!("h/eps = {a:.4} vs {b:.4} refined ({:.1}%)", 100.0 * rel),
            ));
        }
        if self.outside.len() >= 2 {
            let first = self.outside[0].1;
            let last = self.outside[self.outside.len() - 1].1;
            checks.push(Check::new(
                "outside-cone sup decreasing",
                last <= first,
                format!("{first:.3e} at t = {:.1} -> {last:.3e} at t = {:.1}", self.outside[0].0, self.outside[self.outside.len() - 1].0),
            ));
        }
        checks
    }
}

fn phase_of(run: &SimulationRun, cfg: &ExperimentConfig) -> Result<PhaseDiagnostics> {
    phase_diagnostics(&run.projected, C0, cfg.modulation.delta)
}

/// Phase diagnostics of `run`, with the optional refined rerun.
pub fn phase_report(run: &SimulationRun, cfg: &ExperimentConfig, seed: u64) -> Result<PhaseReport> {
    let diagnostics = phase_of(run, cfg)?;
    let outside = outside_cone_series(&run.projected, C0, cfg.modulation.delta)
        .into_iter()
        .zip(&run.projected.times)
        .filter_map(|(v, &t)| v.filter(|_| t > 0.0).map(|v| (t, v)))
        .collect();
    let refined = if cfg.modulation.refine {
        let fine = run_simulation(&cfg.refined(), seed, false)?;
        Some(phase_of(&fine, cfg)?)
    } else {
        None
    };
    Ok(PhaseReport {
        epsilon: cfg.perturbation.epsilon,
        diagnostics,
        predicted_h: run.projected.initial_mass(),
        outside,
        refined,
    })
}

// ---------------------------------------------------------------- eigen suite

pub struct EigenRow {
    pub eta: f64,
    pub lambda: Complex64,
    pub residual: f64,
    pub adjoint_residual: f64,
    pub biorth: [[f64; 2]; 2],
}

pub struct EigenReport {
    pub window: ModeWindow,
    pub rows: Vec<EigenRow>,
    pub pairs: Vec<ModePair>,
    /// `‖ℒ(0)φ_2'‖ / ‖φ_2'‖`.
    pub translation_residual: f64,
}

impl EigenReport {
    pub fn checks(&self) -> Vec<Check> {
        let mut checks: Vec<Check> = self
            .rows
            .iter()
            .map(|r| {
                Check::new(
                    format!("eigen residual eta = {}", r.eta),
                    r.residual < CERTIFIED_RESIDUAL && r.adjoint_residual < CERTIFIED_RESIDUAL,
                    format!("{:.3e} / adjoint {:.3e}", r.residual, r.adjoint_residual),
                )
            })
            .collect();
        for r in &self.rows {
            let b = r.biorth;
            let off = (b[0][1].abs() + b[1][0].abs()) / b[0][0].abs().min(b[1][1].abs());
            let diag = (b[0][0] - 1.0).abs().max((b[1][1] - 1.0).abs());
            checks.push(Check::new(
                format!("biorthogonality eta = {}", r.eta),
                off <= 0.05 && diag <= 0.05,
                format!("off-diagonal {off:.3e}, diagonal offset {diag:.3e}"),
            ));
        }
        checks.push(Check::new(
            "translation mode at eta = 0",
            self.translation_residual < CERTIFIED_RESIDUAL,
            format!("{:.3e}", self.translation_residual),
        ));
        checks
    }
}

pub fn eigen_suite(cfg: &ExperimentConfig) -> Result<EigenReport> {
    let e = &cfg.eigen;
    let window = ModeWindow::new(e.points, e.half_width, cfg.modulation.alpha)?;
    let pairs = e
        .etas
        .par_iter()
        .map(|&eta| ModePair::new(&window, eta))
        .collect::<Result<Vec<_>>>()?;
    let rows = pairs
        .iter()
        .map(|p| EigenRow {
            eta: p.eta,
            lambda: p.lambda,
            residual: p.residual,
            adjoint_residual: p.adjoint_residual,
            biorth: biorthogonality(&window, p.eta),
        })
        .collect();
    let dphi = window.sample(|x| phi_x(x, C0).into());
    let l0 = window.apply_l(&dphi, 0.0, C0)?;
    let translation_residual = window.weighted_norm(&l0, 1.0) / window.weighted_norm(&dphi, 1.0);
    Ok(EigenReport { window, rows, pairs, translation_residual })
}

// ---------------------------------------------------------------- kernel suite

/// Kernel norm tracked by a decay fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NormSpec {
    pub name: &'static str,
    /// Index into `KernelSample::norms` (K1, K2, K3, ∂yK3).
    pub kernel: usize,
    pub l2: bool,
    pub claimed: Ratio,
}

/// An exponent `num/den` kept exact for reporting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ratio(pub i32, pub i32);

impl Ratio {
    pub fn value(self) -> f64 {
        self.0 as f64 / self.1 as f64
    }
}

pub const DECAY_TABLE: [NormSpec; 5] = [
    NormSpec { name: "K2_L1", kernel: 1, l2: false, claimed: Ratio(-1, 2) },
    NormSpec { name: "K1_L2", kernel: 0, l2: true, claimed: Ratio(-1, 4) },
    NormSpec { name: "K2_L2", kernel: 1, l2: true, claimed: Ratio(-3, 4) },
    NormSpec { name: "K1_L1", kernel: 0, l2: false, claimed: Ratio(0, 1) },
    NormSpec { name: "dyK3_L1", kernel: 3, l2: false, claimed: Ratio(0, 1) },
];

pub struct SlopeRow {
    pub spec: NormSpec,
    pub fit: DecayFit,
}

pub struct KernelReport {
    pub slope_band: f64,
    pub norms: Vec<(f64, [KernelNorms; 4])>,
    pub slopes: Vec<SlopeRow>,
    pub comparators: Vec<(f64, ComparatorResiduals)>,
    /// Fits of the `K3 - 4 H*W` residual and of the two-wave residual.
    pub comparator_fits: [DecayFit; 2],
    pub phase_inside: PhaseLimit,
    pub phase_outside: PhaseLimit,
    pub high_freq: Vec<(f64, f64)>,
}

impl KernelReport {
    pub fn checks(&self) -> Vec<Check> {
        let mut checks: Vec<Check> = self
            .slopes
            .iter()
            .map(|r| {
                let claimed = r.spec.claimed.value();
                Check::new(
                    format!("slope {}", r.spec.name),
                    (r.fit.slope - claimed).abs() <= self.slope_band,
                    format!("fitted {:.4}, claimed {claimed:.4}", r.fit.slope),
                )
            })
            .collect();
        let [k3, two_wave] = self.comparator_fits;
        checks.push(Check::new("K3 comparator slope <= -0.4", k3.slope <= -0.4, format!("{:.4}", k3.slope)));
        checks.push(Check::new(
            "two-wave comparator slope <= -0.8",
            two_wave.slope <= -0.8,
            format!("{:.4}", two_wave.slope),
        ));
        let inside = &self.phase_inside;
        let rel = (inside.value - inside.half_mass).abs() / inside.half_mass;
        checks.push(Check::new(
            "phase limit inside within 5% of half mass",
            rel < 0.05 && (inside.half_mass - 0.5).abs() < 0.025,
            format!("value {:.5}, half mass {:.5}", inside.value, inside.half_mass),
        ));
        checks.push(Check::new(
            "phase limit outside < 0.02",
            self.phase_outside.value.abs() < 0.02,
            format!("{:.3e}", self.phase_outside.value),
        ));
        let first = self.high_freq.iter().find(|p| p.0 > 0.0).map_or(f64::INFINITY, |p| p.1);
        let later = self.high_freq.iter().filter(|p| p.0 > 0.0).map(|p| p.1).fold(0.0, f64::max);
        checks.push(Check::new(
            "high-frequency ratio does not grow",
            later.is_finite() && later <= first,
            format!("max {later:.4}, first {first:.4}"),
        ));
        checks
    }
}

/// Unit-mass separable source `e^{-s} e^{-y²}/√π`.
pub fn unit_source(s: f64, y: f64) -> f64 {
    (-s).exp() * (-y * y).exp() / std::f64::consts::PI.sqrt()
}

pub fn kernel_suite(cfg: &ExperimentConfig) -> Result<KernelReport> {
    let k = &cfg.kernels;
    let c = cfg.constants();
    let times = log_times(k.t_min, k.t_max, k.samples);
    let samples = times
        .par_iter()
        .map(|&t| {
            let grid = default_kernel_grid(t, k.dy)?;
            let s = kernels_at(t, &c, &grid)?;
            let f1 = |e: f64| Complex64::from(band_plateau(e, c.eta0));
            let f2 = |e: f64| Complex64::from(0.5 * band_plateau(e, c.eta0));
            let r = asymptotic_comparators(t, &c, &f1, &f2, &grid);
            Ok((t, s.norms, r))
        })
        .collect::<Result<Vec<_>>>()?;
    let slopes = DECAY_TABLE
        .iter()
        .map(|spec| {
            let series: Vec<(f64, f64)> = samples
                .iter()
                .map(|(t, n, _)| (*t, if spec.l2 { n[spec.kernel].l2 } else { n[spec.kernel].l1 }))
                .collect();
            Ok(SlopeRow { spec: *spec, fit: decay_exponent_fit(&series)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let k3_series: Vec<(f64, f64)> = samples.iter().map(|(t, _, r)| (*t, r.k3)).collect();
    let wave_series: Vec<(f64, f64)> = samples.iter().map(|(t, _, r)| (*t, r.asymp2)).collect();
    let comparator_fits = [decay_exponent_fit(&k3_series)?, decay_exponent_fit(&wave_series)?];

    let t = k.phase_limit_t;
    let window = SourceWindow { y_min: -10.0, y_max: 10.0, ny: 100, ns: 100 };
    let phase_inside = phase_limit_integral(&unit_source, t, 0.0, &window)?;
    let phase_outside = phase_limit_integral(&unit_source, t, (4.0 + cfg.modulation.delta) * t, &window)?;
    let high_freq = [0.0, 1.0, 10.0, 50.0].iter().map(|&t| (t, high_freq_decay_check(&c, t))).collect();
    Ok(KernelReport {
        slope_band: k.slope_band,
        norms: samples.iter().map(|(t, n, _)| (*t, *n)).collect(),
        slopes,
        comparators: samples.iter().map(|(t, _, r)| (*t, *r)).collect(),
        comparator_fits,
        phase_inside,
        phase_outside,
        high_freq,
    })
}

// ---------------------------------------------------------------- text output

/// Formats checks as `PASS name: detail` lines.
pub fn format_checks(checks: &[Check]) -> String {
    let mut s = String::new();
    for c in checks {
        let _ = writeln!(s, "{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dev(t: f64, d: f64) -> ProfileDeviation {
        ProfileDeviation { t, dev_l2: d, dev_normalized: d }
    }

    #[test]
    fn thirds_split_log_time_evenly() {
        // t = 1, 10, 100, 1000 puts one sample in each of the first two thirds
        let devs = [dev(1.0, 3.0), dev(10.0, 2.0), dev(100.0, 1.0), dev(1000.0, 0.5)];
        assert_eq!(thirds(&devs, f64::ln), [3.0, 2.0, 0.75]);
        let lin = thirds(&devs, |t| t);
        assert_eq!(lin[0], 2.0);
        assert!(lin[1].is_nan());
        assert_eq!(lin[2], 0.5);
    }

    #[test]
    fn defaults_validate() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.solver_config(&cfg.grid().unwrap()).unwrap().snapshot_stride, 25);
        let r = cfg.refined();
        assert_eq!((r.grid.nx, r.grid.ny), (2048, 512));
        assert_eq!(ExperimentConfig::from_toml("").unwrap(), cfg);
    }

    #[test]
    fn checks_format_one_line_each() {
        let s = format_checks(&[Check::new("a", true, "x"), Check::new("b", false, "y")]);
        assert_eq!(s, "PASS a: x\nFAIL b: y\n");
        assert!(!all_pass(&[Check::new("a", true, ""), Check::new("b", false, "")]));
    }
}
