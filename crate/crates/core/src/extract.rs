//! Recovery of the local amplitude `c(t, y)` and phase of a modulating line
//! soliton from simulated fields, the decomposition around it and phase
//! diagnostics.
//!
//! Phases are reported in the co-moving frame as the crest offset from the
//! reference position `lx / 2`, i.e. `x(t, y) - 2c0 t`.

use crate::burgers::modulation_mass;
use crate::error::{Error, Result};
use crate::grid::Field2D;
use crate::line::PeriodicLine;
use crate::linear::ModulationConstants;
use crate::modes::scaled_duals_at_zero;
use crate::soliton::{crest_position, phi, phi_dc, phi_x, psi_cl};

pub const FIT_TOL: f64 = 1e-10;
pub const PAIRING_TOL: f64 = 1e-8;
const MAX_ITER: usize = 60;

/// Wraps `s` into `[-p/2, p/2)`.
fn wrap(s: f64, p: f64) -> f64 {
    s - p * (s / p + 0.5).floor()
}

/// Weight that takes `g2*` to zero over the quarter period ahead of the seam at `z = lx/2`.
///
/// `g2*(z, 0, c) → c` as `z → ∞`, so on a periodic line the untapered pairing
/// jumps whenever a sample crosses the seam.
pub fn seam_taper(z: f64, lx: f64) -> f64 {
    let start = 0.25 * lx;
    let r = ((z - start) / (0.25 * lx)).clamp(0.0, 1.0);
    1.0 - r * r * r * (10.0 - 15.0 * r + 6.0 * r * r)
}

/// Least-squares fit of `φ_c(x - x0)` to one x-line.
///
/// `xs` are the sample positions of a periodic line of period `lx`. The fit
/// uses the samples within `6/√(c/2)` of the current crest estimate.
pub fn extract_fit(xs: &[f64], u: &[f64], lx: f64, c0: f64) -> Result<(f64, f64)> {
    let (imax, peak) = u
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let threshold = 0.5 * c0;
    if !(peak > threshold) {
        return Err(Error::NoCrest { peak, threshold });
    }
    let (mut c, mut x0) = (peak, xs[imax]);
    for _ in 0..MAX_ITER {
        let half = 6.0 / (c / 2.0).sqrt();
        // normal equations of the 2-parameter Gauss-Newton step
        let (mut a11, mut a12, mut a22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (x, v) in xs.iter().zip(u) {
            let z = wrap(x - x0, lx);
            if z.abs() > half {
                continue;
            }
            let res = v - phi(z, c);
            let jc = phi_dc(z, c);
            let jx = -phi_x(z, c);
            a11 += jc * jc;
            a12 += jc * jx;
            a22 += jx * jx;
            r1 += jc * res;
            r2 += jx * res;
        }
        let det = a11 * a22 - a12 * a12;
        if !(det.abs() > 0.0) {
            return Err(Error::NoConvergence(0));
        }
        let dc = (a22 * r1 - a12 * r2) / det;
        let dx = (a11 * r2 - a12 * r1) / det;
        c += dc;
        x0 += dx;
        if !(c > 0.0 && c.is_finite() && x0.is_finite()) {
            return Err(Error::NonFinite("extract_fit"));
        }
        if dc.abs().max(dx.abs()) < FIT_TOL {
            return Ok((c, x0));
        }
    }
    Err(Error::NoConvergence(MAX_ITER))
}

/// Orthogonality conditions at `η = 0` for one x-line.
#[derive(Clone, Debug)]
pub struct LineProjector<'a> {
    pub xs: &'a [f64],
    pub lx: f64,
    /// Offset `L` of the mass corrector.
    pub l: f64,
    /// Time, which places the corrector at `z = -L - 3t`.
    pub t: f64,
}

impl LineProjector<'_> {
    /// `v(z) = u - φ_c(z) + ψ_{c,L}(z + 3t)` on the periodic line `z = x - x0`.
    fn remainder(&self, u: &[f64], c: f64, x0: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (lx, l, t) = (self.lx, self.l, self.t);
        let xs = self.xs;
        let u: Vec<f64> = u.to_vec();
        (0..xs.len()).map(move |i| {
            let z = wrap(xs[i] - x0, lx);
            let zp = wrap(z + 3.0 * t, lx);
            (z, u[i] - phi(z, c) + psi_cl(zp, c, l))
        })
    }

    /// `(⟨v, g1*(·, 0, c)⟩, ⟨v, g2*(·, 0, c)⟩)`.
    pub fn pairings(&self, u: &[f64], c: f64, x0: f64) -> (f64, f64) {
        let dx = self.lx / self.xs.len() as f64;
        let (mut p1, mut p2) = (0.0, 0.0);
        for (z, v) in self.remainder(u, c, x0) {
            let (g1, g2) = scaled_duals_at_zero(z, c);
            p1 += v * g1;
            p2 += v * g2 * seam_taper(z, self.lx);
        }
        (p1 * dx, p2 * dx)
    }

    /// Newton iteration on the two pairings from `guess`.
    pub fn solve(&self, u: &[f64], guess: (f64, f64)) -> Result<(f64, f64)> {
        let (mut c, mut x0) = guess;
        for it in 0..MAX_ITER {
            let (f1, f2) = self.pairings(u, c, x0);
            if f1.abs() < PAIRING_TOL && f2.abs() < PAIRING_TOL {
                return Ok((c, x0));
            }
            let hc = 1e-6 * c;
            let hx = 1e-6;
            let (a, b) = self.pairings(u, c + hc, x0);
            let (a2, b2) = self.pairings(u, c - hc, x0);
            let (d, e) = self.pairings(u, c, x0 + hx);
            let (d2, e2) = self.pairings(u, c, x0 - hx);
            let j11 = (a - a2) / (2.0 * hc);
            let j21 = (b - b2) / (2.0 * hc);
            let j12 = (d - d2) / (2.0 * hx);
            let j22 = (e - e2) / (2.0 * hx);
            let det = j11 * j22 - j12 * j21;
            if !(det.abs() > 0.0) {
                return Err(Error::NoConvergence(it));
            }
            // damped Newton: steps are capped to stay in the basin of the guess
            let dc = ((j22 * f1 - j12 * f2) / det).clamp(-0.25 * c, 0.25 * c);
            let dx = ((j11 * f2 - j21 * f1) / det).clamp(-1.0, 1.0);
            c -= dc;
            x0 -= dx;
            if !(c > 0.0 && c.is_finite() && x0.is_finite()) {
                return Err(Error::NoConvergence(it));
            }
        }
        Err(Error::NoConvergence(MAX_ITER))
    }
}

/// Projection-based extraction on one line: `guess` is `(c, x0)` in grid coordinates.
pub fn extract_project(xs: &[f64], u: &[f64], lx: f64, guess: (f64, f64), t: f64, l: f64) -> Result<(f64, f64)> {
    LineProjector { xs, lx, l, t }.solve(u, guess)
}

/// Per-line amplitudes and co-moving phases of a field.
#[derive(Clone, Debug, PartialEq)]
pub struct LineParams {
    pub c: Vec<f64>,
    pub phase: Vec<f64>,
}

pub fn fit_field(u: &Field2D, c0: f64) -> Result<LineParams> {
    let g = u.grid();
    let xs = g.xs();
    let xc = crest_position(u);
    let mut c = Vec::with_capacity(g.ny());
    let mut phase = Vec::with_capacity(g.ny());
    for iy in 0..g.ny() {
        let (cv, x0) = extract_fit(&xs, u.row(iy), g.lx(), c0)?;
        c.push(cv);
        phase.push(x0 - xc);
    }
    unwrap_phase(&mut phase, &c, g.lx());
    Ok(LineParams { c, phase })
}

pub fn project_field(u: &Field2D, guess: &LineParams, t: f64, l: f64) -> Result<LineParams> {
    let g = u.grid();
    let xs = g.xs();
    let xc = crest_position(u);
    let mut c = Vec::with_capacity(g.ny());
    let mut phase = Vec::with_capacity(g.ny());
    for iy in 0..g.ny() {
        let start = (guess.c[iy], guess.phase[iy] + xc);
        let (cv, x0) = extract_project(&xs, u.row(iy), g.lx(), start, t, l)?;
        c.push(cv);
        phase.push(x0 - xc);
    }
    unwrap_phase(&mut phase, &c, g.lx());
    Ok(LineParams { c, phase })
}

/// Nearest-branch continuation of phases modulo `lx`, anchored at the tallest crest.
pub fn unwrap_phase(phase: &mut [f64], c: &[f64], lx: f64) {
    if phase.is_empty() {
        return;
    }
    let anchor = c
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc })
        .0;
    phase[anchor] = wrap(phase[anchor], lx);
    for i in anchor + 1..phase.len() {
        phase[i] = phase[i - 1] + wrap(phase[i] - phase[i - 1], lx);
    }
    for i in (0..anchor).rev() {
        phase[i] = phase[i + 1] + wrap(phase[i] - phase[i + 1], lx);
    }
}

/// Amplitudes and phases sampled at a sequence of times on a periodic `y` line.
#[derive(Clone, Debug)]
pub struct ModulationTrack {
    pub times: Vec<f64>,
    pub ys: Vec<f64>,
    pub ly: f64,
    pub c: Vec<Vec<f64>>,
    pub phase: Vec<Vec<f64>>,
}

impl ModulationTrack {
    pub fn new(ys: Vec<f64>, ly: f64) -> Self {
        Self { times: Vec::new(), ys, ly, c: Vec::new(), phase: Vec::new() }
    }

    pub fn push(&mut self, t: f64, p: LineParams) -> Result<()> {
        if p.c.len() != self.ys.len() || p.phase.len() != self.ys.len() {
            return Err(Error::InvalidArgument("track sample has the wrong length".into()));
        }
        if let Some(i) = p.c.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::AmplitudeCollapse { index: i, value: p.c[i] });
        }
        self.times.push(t);
        self.c.push(p.c);
        self.phase.push(p.phase);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ys.len() as f64
    }

    fn line(&self) -> PeriodicLine {
        PeriodicLine::new(self.ys.len(), self.ly).expect("track line is valid")
    }

    /// `∂_y` of the phase at sample `i`.
    pub fn phase_y(&self, i: usize) -> Vec<f64> {
        self.line().derivative(&self.phase[i], 1)
    }

    /// `b = ⅓ P̃1(√2 c^{3/2} - 4)` at sample `i`.
    pub fn b(&self, i: usize, constants: &ModulationConstants) -> Vec<f64> {
        let raw: Vec<f64> = self.c[i]
            .iter()
            .map(|c| (2f64.sqrt() * c.powf(1.5) - 4.0) / 3.0)
            .collect();
        self.line().apply(&raw, |k| constants.chi1(k).into())
    }

    /// `¼ ∫ (c(0, y) - 2) dy` from the first sample.
    pub fn initial_mass(&self) -> f64 {
        modulation_mass(&self.c[0], self.dy())
    }
}

/// Shifts every line of `u` so that the crest at `lx/2 + phase(y)` lands on `lx/2`.
pub fn recenter(u: &Field2D, phase: &[f64]) -> Result<Field2D> {
    let g = u.grid();
    let line = PeriodicLine::new(g.nx(), g.lx())?;
    let mut values = Vec::with_capacity(g.len());
    for (iy, p) in phase.iter().enumerate() {
        values.extend(line.shift(u.row(iy), -p));
    }
    Ok(Field2D::from_values(g, values))
}

/// `v = u(z + x(y), y) - φ_c(z) + ψ_{c,L}(z + 3t)` on the co-moving grid,
/// and `v2 = v - v1` with `v1` the auxiliary flow recentred likewise.
pub fn build_decomposition(
    u: &Field2D,
    params: &LineParams,
    t: f64,
    l: f64,
    aux: Option<&Field2D>,
) -> Result<(Field2D, Field2D)> {
    let g = u.grid().clone();
    let xc = crest_position(u);
    let shifted = recenter(u, &params.phase)?;
    let nx = g.nx();
    let mut v = shifted.into_values();
    for (iy, &c) in params.c.iter().enumerate() {
        for ix in 0..nx {
            let z = g.x(ix) - xc;
            v[iy * nx + ix] += -phi(z, c) + psi_cl(wrap(z + 3.0 * t, g.lx()), c, l);
        }
    }
    let v = Field2D::from_values(&g, v);
    let v2 = match aux {
        Some(a) => v.sub(&recenter(a, &params.phase)?),
        None => v.clone(),
    };
    Ok((v, v2))
}

/// Summary numbers of the phase experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseDiagnostics {
    /// `max |x̃|` over the whole track.
    pub sup_shift: f64,
    /// Median of `x̃` inside `|y| <= (√(8c0) - δ)t` over the last third of the run.
    pub plateau_h: f64,
    /// Largest deviation from the plateau in the same region.
    pub inside_dev: f64,
    /// `max |x̃|` outside `|y| <= (√(8c0) + δ)t` over the last third; 0 if that region is empty.
    pub outside_sup: f64,
}

fn last_third(times: &[f64]) -> impl Iterator<Item = usize> + '_ {
    let t_end = times.last().copied().unwrap_or(0.0);
    let t_start = times.first().copied().unwrap_or(0.0);
    let cut = t_start + 2.0 * (t_end - t_start) / 3.0;
    (0..times.len()).filter(move |&i| times[i] >= cut - 1e-12)
}

pub fn phase_diagnostics(track: &ModulationTrack, c0: f64, delta: f64) -> Result<PhaseDiagnostics> {
    let speed = (8.0 * c0).sqrt();
    let sup_shift = track
        .phase
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let mut inside = Vec::new();
    let mut outside_sup: f64 = 0.0;
    for i in last_third(&track.times) {
        let t = track.times[i];
        for (y, x) in track.ys.iter().zip(&track.phase[i]) {
            if y.abs() <= (speed - delta) * t {
                inside.push(*x);
            } else if y.abs() > (speed + delta) * t {
                outside_sup = outside_sup.max(x.abs());
            }
        }
    }
    if inside.is_empty() {
        return Err(Error::ConeEmpty);
    }
    let plateau_h = median(&mut inside.clone());
    let inside_dev = inside.iter().fold(0.0f64, |m, x| m.max((x - plateau_h).abs()));
    Ok(PhaseDiagnostics { sup_shift, plateau_h, inside_dev, outside_sup })
}

/// `max |x̃|` outside the `(√(8c0) + δ)t` cone at every sample time (`None` where empty).
pub fn outside_cone_series(track: &ModulationTrack, c0: f64, delta: f64) -> Vec<Option<f64>> {
    let speed = (8.0 * c0).sqrt();
    track
        .times
        .iter()
        .zip(&track.phase)
        .map(|(t, p)| {
            track
                .ys
                .iter()
                .zip(p)
                .filter(|(y, _)| y.abs() > (speed + delta) * t)
                .map(|(_, x)| x.abs())
                .reduce(f64::max)
        })
        .collect()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `k(t, y) = ½ P̃1 ∫ v1(t, z, y) φ_{c(t, y)}(z) dz` with `v1` the recentred auxiliary flow.
pub fn k_kernel(aux: &Field2D, params: &LineParams, constants: &ModulationConstants) -> Result<Vec<f64>> {
    let g = aux.grid();
    let xc = crest_position(aux);
    let mut raw = Vec::with_capacity(g.ny());
    for (iy, (&c, &p)) in params.c.iter().zip(&params.phase).enumerate() {
        let s: f64 = aux
            .row(iy)
            .iter()
            .enumerate()
            .map(|(ix, v)| v * phi(wrap(g.x(ix) - xc - p, g.lx()), c))
            .sum();
        raw.push(0.5 * s * g.dx());
    }
    let line = PeriodicLine::new(g.ny(), g.ly())?;
    Ok(line.apply(&raw, |k| constants.chi1(k).into()))
}
