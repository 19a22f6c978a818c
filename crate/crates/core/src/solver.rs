//! Pseudospectral ETDRK4 integrator for KP-II in a frame moving with speed `s`:
//! `∂_t u + ∂_x³u - s ∂_x u + 3∂_x(u²) + 3∂_x^{-1}∂_y²u = 0`.

use log::info;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{apply_dealias, energy_density_integrals, Field2D, Grid2D};

/// Linear damping `-σ(x)u` on a band of x, with the x-mean of the damping
/// removed from every line so line masses are untouched.
///
/// Radiation leaves the soliton towards `-x`; a band behind the crest absorbs
/// it before the periodic wrap carries it back to the front.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sponge {
    pub x_start: f64,
    pub x_end: f64,
    /// Width of the smooth ramps at both ends, inside `[x_start, x_end]`.
    pub ramp: f64,
    pub strength: f64,
}

impl Sponge {
    /// Band `[0, 0.3 lx]` with ramps of `lx/16` and unit strength.
    pub fn behind_crest(lx: f64) -> Self {
        Self { x_start: 0.0, x_end: 0.3 * lx, ramp: lx / 16.0, strength: 1.0 }
    }

    pub fn profile(&self, x: f64) -> f64 {
        let step = |r: f64| {
            let r = r.clamp(0.0, 1.0);
            r * r * r * (10.0 - 15.0 * r + 6.0 * r * r)
        };
        if x < self.x_start || x > self.x_end {
            return 0.0;
        }
        self.strength * step((x - self.x_start) / self.ramp) * step((self.x_end - x) / self.ramp)
    }
}

/// Integration settings.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub grid: Grid2D,
    pub dt: f64,
    pub frame_speed: f64,
    pub t_end: f64,
    pub snapshot_stride: usize,
    pub dealias: bool,
    pub sponge: Option<Sponge>,
}

impl SolverConfig {
    pub fn new(grid: Grid2D, dt: f64, t_end: f64) -> Self {
        Self {
            grid,
            dt,
            frame_speed: 4.0,
            t_end,
            snapshot_stride: 1,
            dealias: true,
            sponge: None,
        }
    }

    fn validate(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::InvalidArgument(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidArgument("snapshot_stride must be >= 1".into()));
        }
        let steps = (self.t_end / self.dt).round();
        if (steps * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "t_end = {} is not a whole number of steps dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(steps as usize)
    }
}

/// Snapshots and conserved quantities of one run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<Field2D>,
    /// `(∫u², H(u))` for each snapshot.
    pub conserved: Vec<(f64, f64)>,
}

impl Trajectory {
    pub fn last(&self) -> &Field2D {
        self.snapshots.last().expect("trajectory holds the initial state")
    }

    /// Largest relative change of `∫u²` and of `H(u)` from the initial snapshot.
    pub fn relative_drift(&self) -> (f64, f64) {
        let (l0, h0) = self.conserved[0];
        self.conserved.iter().fold((0.0, 0.0), |(dl, dh), &(l, h)| {
            (
                dl.max((l - l0).abs() / l0.abs()),
                dh.max((h - h0).abs() / h0.abs().max(f64::MIN_POSITIVE)),
            )
        })
    }
}

/// Linear symbol `i(kx³ - 3ky²/kx + s·kx)`; zero on the `kx = 0` line.
pub fn linear_symbol(kx: f64, ky: f64, frame_speed: f64) -> Complex64 {
    if kx == 0.0 {
        return Complex64::default();
    }
    Complex64::new(0.0, kx * kx * kx - 3.0 * ky * ky / kx + frame_speed * kx)
}

/// `(φ1, φ2, φ3)(z)` with `φ_k(z) = Σ_n zⁿ/(n+k)!`.
pub fn phi_functions(z: Complex64) -> (Complex64, Complex64, Complex64) {
    if z.norm() < 1.0 {
        phi_series(z)
    } else {
        phi_closed(z)
    }
}

fn phi_series(z: Complex64) -> (Complex64, Complex64, Complex64) {
    // φ_3 series, then φ_{k-1} = 1/(k-1)! + z φ_k
    let mut term = Complex64::new(1.0 / 6.0, 0.0);
    let mut p3 = term;
    for n in 1..30 {
        term = term * z / (n as f64 + 3.0);
        p3 += term;
    }
    let p2 = 0.5 + z * p3;
    let p1 = 1.0 + z * p2;
    (p1, p2, p3)
}

fn phi_closed(z: Complex64) -> (Complex64, Complex64, Complex64) {
    let p1 = (z.exp() - 1.0) / z;
    let p2 = (p1 - 1.0) / z;
    let p3 = (p2 - 0.5) / z;
    (p1, p2, p3)
}

/// Precomputed ETDRK4 coefficients and work buffers for one configuration.
pub struct Stepper {
    grid: Grid2D,
    dt: f64,
    e: Vec<Complex64>,
    e2: Vec<Complex64>,
    q: Vec<Complex64>,
    f1: Vec<Complex64>,
    f2: Vec<Complex64>,
    f3: Vec<Complex64>,
    nl: Vec<Complex64>,
    real: Vec<f64>,
    work: Vec<Complex64>,
    sponge: Option<Vec<f64>>,
    damp: Vec<Complex64>,
}

impl Stepper {
    pub fn new(cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.grid.clone();
        let ny = grid.ny();
        let h = cfg.dt;
        let n = grid.spectral_len();
        let mut s = Self {
            grid: grid.clone(),
            dt: h,
            e: Vec::with_capacity(n),
            e2: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            f1: Vec::with_capacity(n),
            f2: Vec::with_capacity(n),
            f3: Vec::with_capacity(n),
            nl: Vec::with_capacity(n),
            real: vec![0.0; grid.len()],
            work: vec![Complex64::default(); n],
            sponge: cfg.sponge.map(|sp| {
                let row: Vec<f64> = grid.xs().iter().map(|&x| sp.profile(x)).collect();
                row.repeat(ny)
            }),
            damp: vec![Complex64::default(); if cfg.sponge.is_some() { n } else { 0 }],
        };
        let mut max_symbol: f64 = 0.0;
        for idx in 0..n {
            let (jx, my) = (idx / ny, idx % ny);
            let kx = grid.kx(jx);
            let l = linear_symbol(kx, grid.ky(my), cfg.frame_speed);
            max_symbol = max_symbol.max(l.norm());
            let (a1, a2, a3) = phi_functions(l * h);
            let (b1, _, _) = phi_functions(l * (h / 2.0));
            s.e.push((l * h).exp());
            s.e2.push((l * (h / 2.0)).exp());
            s.q.push(b1 * (h / 2.0));
            s.f1.push((a1 - 3.0 * a2 + 4.0 * a3) * h);
            s.f2.push((a2 - 2.0 * a3) * h);
            s.f3.push((4.0 * a3 - a2) * h);
            let keep = !cfg.dealias
                || (crate::grid::dealias_keep(grid.nx(), jx as i64)
                    && crate::grid::dealias_keep(ny, grid.ky_index(my)));
            let odd_ok = !grid.is_kx_nyquist(jx);
            s.nl.push(if keep && odd_ok {
                Complex64::new(0.0, -3.0 * kx)
            } else {
                Complex64::default()
            });
        }
        if h > 0.4 / max_symbol {
            info!(
                "dt = {h} exceeds 0.4/max|symbol| = {:.3e}; relying on exact linear propagation",
                0.4 / max_symbol
            );
        }
        Ok(s)
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `-3 i kx FFT(u²)` on the dealiased band, plus the sponge term if any.
    fn nonlinear(&mut self, v: &[Complex64], out: &mut [Complex64]) {
        self.work.copy_from_slice(v);
        self.grid.inverse_into(&mut self.work, &mut self.real);
        if let Some(sigma) = &self.sponge {
            let damped: Vec<f64> = self.real.iter().zip(sigma).map(|(u, s)| -s * u).collect();
            self.grid.forward_into(&damped, &mut self.damp);
        }
        for r in self.real.iter_mut() {
            *r *= *r;
        }
        self.grid.forward_into(&self.real, out);
        for (o, m) in out.iter_mut().zip(&self.nl) {
            *o *= m;
        }
        if self.sponge.is_some() {
            // skip the kx = 0 column
            let ny = self.grid.ny();
            for (o, d) in out.iter_mut().zip(&self.damp).skip(ny) {
                *o += d;
            }
        }
    }

    /// Advances spectral coefficients by one step.
    pub fn step(&mut self, v: &mut [Complex64]) -> Result<()> {
        let n = v.len();
        let mut nv = vec![Complex64::default(); n];
        let mut na = vec![Complex64::default(); n];
        let mut nb = vec![Complex64::default(); n];
        let mut nc = vec![Complex64::default(); n];
        let mut a = vec![Complex64::default(); n];
        let mut b = vec![Complex64::default(); n];
        let mut c = vec![Complex64::default(); n];

        self.nonlinear(v, &mut nv);
        for i in 0..n {
            a[i] = self.e2[i] * v[i] + self.q[i] * nv[i];
        }
        self.nonlinear(&a, &mut na);
        for i in 0..n {
            b[i] = self.e2[i] * v[i] + self.q[i] * na[i];
        }
        self.nonlinear(&b, &mut nb);
        for i in 0..n {
            c[i] = self.e2[i] * a[i] + self.q[i] * (2.0 * nb[i] - nv[i]);
        }
        self.nonlinear(&c, &mut nc);
        for i in 0..n {
            v[i] = self.e[i] * v[i]
                + self.f1[i] * nv[i]
                + 2.0 * self.f2[i] * (na[i] + nb[i])
                + self.f3[i] * nc[i];
        }
        if v.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("ETDRK4 step"));
        }
        Ok(())
    }
}

/// Projects out the `kx = 0, ky ≠ 0` modes and, if requested, the aliased band.
pub fn prepare_initial(u0: &Field2D, dealias: bool) -> Field2D {
    let grid = u0.grid();
    let mut spec = u0.spectral().to_vec();
    for c in spec.iter_mut().take(grid.ny()).skip(1) {
        *c = Complex64::default();
    }
    if dealias {
        apply_dealias(grid, &mut spec);
    }
    Field2D::from_spectral(grid, spec)
}

/// One ETDRK4 step of length `cfg.dt`.
pub fn step_etdrk4(state: &Field2D, cfg: &SolverConfig) -> Result<Field2D> {
    let mut stepper = Stepper::new(cfg)?;
    let mut v = state.spectral().to_vec();
    stepper.step(&mut v)?;
    Ok(Field2D::from_spectral(&cfg.grid, v))
}

fn conserved(f: &Field2D) -> Result<(f64, f64)> {
    let i = energy_density_integrals(f)?;
    Ok((i.l2, i.hamiltonian))
}

/// Integrates from `u0` to `cfg.t_end`, storing every `snapshot_stride`-th step and the final state.
pub fn simulate(u0: &Field2D, cfg: &SolverConfig) -> Result<Trajectory> {
    if u0.grid() != &cfg.grid {
        return Err(Error::InvalidArgument("initial field is not on the solver grid".into()));
    }
    let steps = cfg.validate()?;
    let start = prepare_initial(u0, cfg.dealias);
    let mut traj = Trajectory {
        times: vec![0.0],
        conserved: vec![conserved(&start)?],
        snapshots: vec![start.clone()],
    };
    if steps == 0 {
        return Ok(traj);
    }
    let mut stepper = Stepper::new(cfg)?;
    let mut v = start.spectral().to_vec();
    for k in 1..=steps {
        stepper.step(&mut v)?;
        if k % cfg.snapshot_stride == 0 || k == steps {
            let f = Field2D::from_spectral(&cfg.grid, v.clone());
            traj.conserved.push(conserved(&f)?);
            traj.times.push(k as f64 * cfg.dt);
            traj.snapshots.push(f);
        }
    }
    Ok(traj)
}
