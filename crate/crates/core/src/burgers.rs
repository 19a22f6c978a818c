//! Self-similar Burgers profiles attracting the modulation waves, their mass
//! matching, a periodic Burgers solver and the profile comparator.
//!
//! The two branches solve `∂_t u = 2∂_y² u ± 4∂_y(u²)`. With
//! `E_t(y) = ∫_0^y H_{2t} = ½ erf(y/√(8t))` the profiles are
//! `u_B^± = ±m H_{2t} / (2(1 + m E_t))`, which stay bounded iff `|m| < 2`.

use num_complex::Complex64;
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::grid::dealias_keep;
use crate::line::PeriodicLine;
use crate::linear::heat_h;

/// Bound on `|m|` keeping `1 + m E_t(y)` positive.
pub const M_BOUND: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// `∂_t u = 2∂_y² u + 4∂_y(u²)`, the wave travelling towards `y = -∞`.
    Plus,
    /// `∂_t u = 2∂_y² u - 4∂_y(u²)`.
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BurgersProfile {
    m: f64,
    branch: Branch,
}

impl BurgersProfile {
    pub fn new(m: f64, branch: Branch) -> Result<Self> {
        if !(m.abs() < M_BOUND) {
            return Err(Error::InvalidArgument(format!("|m| = {} must be below {M_BOUND}", m.abs())));
        }
        Ok(Self { m, branch })
    }

    /// The profile whose total mass `∫ u_B dy` equals `mass`.
    pub fn with_mass(mass: f64, branch: Branch) -> Self {
        Self { m: m_from_mass(mass, branch), branch }
    }

    pub fn m(&self) -> f64 {
        self.m
    }
    pub fn branch(&self) -> Branch {
        self.branch
    }

    /// `1 + m E_t(y)`.
    pub fn denominator(&self, t: f64, y: f64) -> f64 {
        1.0 + self.m * 0.5 * erf(y / (8.0 * t).sqrt())
    }

    pub fn eval(&self, t: f64, y: f64) -> f64 {
        if self.m == 0.0 {
            return 0.0;
        }
        self.branch.sign() * self.m * heat_h(2.0 * t, y) / (2.0 * self.denominator(t, y))
    }

    /// `∫ u_B dy = ±½ log((1 + m/2)/(1 - m/2))`, independent of `t`.
    pub fn mass(&self) -> f64 {
        self.branch.sign() * (self.m / 2.0).atanh()
    }
}

/// `u_B^±(t, y)`; requires `t > 0`.
pub fn u_b(t: f64, y: f64, profile: &BurgersProfile) -> f64 {
    profile.eval(t, y)
}

/// Inverts the mass relation: `m = ±2 tanh(M)`.
pub fn m_from_mass(mass: f64, branch: Branch) -> f64 {
    branch.sign() * 2.0 * mass.tanh()
}

/// Evolves `u0`, sampled at `y_i = (i - n/2) dy` on a line of period `ly`, to
/// `t_end` with a Fourier spectral discretization and integrating-factor RK4.
/// The step is shrunk so that it divides `t_end`.
pub fn burgers_solve(u0: &[f64], ly: f64, branch: Branch, t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(t_end >= 0.0 && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("need t_end >= 0 and dt > 0, got {t_end}, {dt}")));
    }
    let line = PeriodicLine::new(u0.len(), ly)?;
    let steps = (t_end / dt).ceil() as usize;
    if steps == 0 {
        return Ok(u0.to_vec());
    }
    let h = t_end / steps as f64;
    let n = u0.len();
    let ks: Vec<f64> = (0..=n / 2).map(|j| line.wavenumber(j)).collect();
    let e_full: Vec<f64> = ks.iter().map(|k| (-2.0 * k * k * h).exp()).collect();
    let e_half: Vec<f64> = ks.iter().map(|k| (-k * k * h).exp()).collect();
    let keep: Vec<bool> = (0..=n / 2).map(|j| dealias_keep(n, j as i64)).collect();
    let coef = 4.0 * branch.sign();

    let nonlinear = |u: &[Complex64]| -> Vec<Complex64> {
        let phys = line.inverse(u);
        let sq: Vec<f64> = phys.iter().map(|v| v * v).collect();
        let mut s = line.forward(&sq);
        for (j, c) in s.iter_mut().enumerate() {
            *c = if keep[j] { Complex64::new(0.0, coef * ks[j]) * *c * h } else { Complex64::default() };
        }
        s
    };
    let lin = |e: &[f64], u: &[Complex64]| -> Vec<Complex64> { u.iter().zip(e).map(|(c, f)| c * f).collect() };
    let axpy = |u: &[Complex64], a: f64, v: &[Complex64]| -> Vec<Complex64> {
        u.iter().zip(v).map(|(x, y)| x + a * y).collect()
    };

    let mut u = line.forward(u0);
    for _ in 0..steps {
        let a = nonlinear(&u);
        let eu = lin(&e_half, &u);
        let b = nonlinear(&lin(&e_half, &axpy(&u, 0.5, &a)));
        let c = nonlinear(&axpy(&eu, 0.5, &b));
        let d = nonlinear(&axpy(&lin(&e_full, &u), 1.0, &lin(&e_half, &c)));
        for j in 0..u.len() {
            u[j] = e_full[j] * u[j]
                + (e_full[j] * a[j] + 2.0 * e_half[j] * (b[j] + c[j]) + d[j]) / 6.0;
        }
        if u.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite("burgers_solve"));
        }
    }
    Ok(line.inverse(&u))
}

/// The pair `(u_B^+, u_B^-)` matched to one modulation mass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfilePair {
    pub plus: BurgersProfile,
    pub minus: BurgersProfile,
}

impl ProfilePair {
    /// Both branches carry `mass = ¼∫(c(0, y) - 2) dy`.
    pub fn from_mass(mass: f64) -> Self {
        Self {
            plus: BurgersProfile::with_mass(mass, Branch::Plus),
            minus: BurgersProfile::with_mass(mass, Branch::Minus),
        }
    }

    pub fn from_m(m_plus: f64, m_minus: f64) -> Result<Self> {
        Ok(Self {
            plus: BurgersProfile::new(m_plus, Branch::Plus)?,
            minus: BurgersProfile::new(m_minus, Branch::Minus)?,
        })
    }

    /// Predicted `(c - 2, x_y)` at `(t, y)`:
    /// `[[2, 2], [1, -1]] (u_B^+(t, y + 4t), u_B^-(t, y - 4t))`.
    /// With a `period`, both profiles are summed over their periodic images.
    pub fn predict(&self, t: f64, y: f64, period: Option<f64>) -> (f64, f64) {
        let (p, m) = match period {
            None => (self.plus.eval(t, y + 4.0 * t), self.minus.eval(t, y - 4.0 * t)),
            Some(ly) => {
                let reach = 12.0 * (8.0 * t).sqrt() + 8.0 * t;
                let images = (reach / ly).ceil() as i64 + 1;
                (-images..=images).fold((0.0, 0.0), |(p, m), k| {
                    let s = y + k as f64 * ly;
                    (p + self.plus.eval(t, s + 4.0 * t), m + self.minus.eval(t, s - 4.0 * t))
                })
            }
        };
        (2.0 * (p + m), p - m)
    }
}

/// `¼ ∫ (c - 2) dy` by the rectangle rule on a periodic grid.
pub fn modulation_mass(c: &[f64], dy: f64) -> f64 {
    0.25 * c.iter().map(|v| v - 2.0).sum::<f64>() * dy
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileDeviation {
    pub t: f64,
    pub dev_l2: f64,
    /// `dev_l2 · t^{1/4}`.
    pub dev_normalized: f64,
}

/// L² distance in `y` between the extracted `(c - 2, x_y)` and the Burgers prediction.
pub fn profile_comparator(
    t: f64,
    ys: &[f64],
    c: &[f64],
    xy: &[f64],
    pair: &ProfilePair,
    period: Option<f64>,
) -> ProfileDeviation {
    assert!(ys.len() == c.len() && c.len() == xy.len() && ys.len() > 1);
    let dy = ys[1] - ys[0];
    let sum: f64 = ys
        .iter()
        .zip(c.iter().zip(xy))
        .map(|(&y, (&cv, &xv))| {
            let (pc, px) = pair.predict(t, y, period);
            (cv - 2.0 - pc).powi(2) + (xv - px).powi(2)
        })
        .sum();
    let dev_l2 = (sum * dy).sqrt();
    ProfileDeviation { t, dev_l2, dev_normalized: dev_l2 * t.powf(0.25) }
}
