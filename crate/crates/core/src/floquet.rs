//! Period-advance (monodromy) matrices of the linearizations around the
//! synchronous orbit and their stability classification.
//!
//! The relative coordinate `w = ξ - η` obeys `ẅ + (2κ + V''(p)) w = 0` and
//! decides stability; the tangent coordinate `u = ξ + η` obeys
//! `ü + V''(p) u = 0` and always carries the double multiplier 1.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::Integrator;
use crate::orbit::{self, initial_speed, pendulum_rhs};
use crate::potential::{system_params, Potential};

/// Default threshold on `| |tr| - 2 |` below which a matrix is parabolic.
pub const TOL_CLASS: f64 = 1e-6;

/// Largest `|det - 1|` accepted by [`classify`].
pub const MAX_DET_RESIDUAL: f64 = 1e-6;

/// Real 2×2 period-advance matrix of a Hill equation in first-order form
/// `(w, ẇ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monodromy {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
    /// Length of the time interval the matrix advances over.
    pub period: f64,
    pub det_residual: f64,
}

impl Monodromy {
    pub fn from_entries(m: [[f64; 2]; 2], period: f64) -> Self {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        Self {
            m11: m[0][0],
            m12: m[0][1],
            m21: m[1][0],
            m22: m[1][1],
            period,
            det_residual: (det - 1.0).abs(),
        }
    }

    pub fn entries(&self) -> [[f64; 2]; 2] {
        [[self.m11, self.m12], [self.m21, self.m22]]
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.m11 * v[0] + self.m12 * v[1], self.m21 * v[0] + self.m22 * v[1]]
    }

    /// `self · other`.
    pub fn compose(&self, other: &Monodromy) -> Monodromy {
        let a = self.entries();
        let b = other.entries();
        let mut c = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Monodromy::from_entries(c, self.period + other.period)
    }

    /// Frobenius distance to `sign · I`.
    pub fn distance_to_identity(&self, sign: f64) -> f64 {
        ((self.m11 - sign).powi(2) + self.m12.powi(2) + self.m21.powi(2) + (self.m22 - sign).powi(2)).sqrt()
    }

    pub fn frobenius_distance(&self, other: &Monodromy) -> f64 {
        ((self.m11 - other.m11).powi(2)
            + (self.m12 - other.m12).powi(2)
            + (self.m21 - other.m21).powi(2)
            + (self.m22 - other.m22).powi(2))
        .sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StabilityKind {
    Elliptic,
    Hyperbolic,
    Parabolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityClass {
    pub kind: StabilityKind,
    pub trace: f64,
    /// Sign of the trace for the hyperbolic and parabolic cases; 0 when elliptic.
    pub sign: i8,
}

impl StabilityClass {
    pub fn is_elliptic(&self) -> bool {
        self.kind == StabilityKind::Elliptic
    }

    /// Trace-free label used in tables: `elliptic`, `hyperbolic+`, `parabolic-`, ...
    pub fn label(&self) -> &'static str {
        match (self.kind, self.sign) {
            (StabilityKind::Elliptic, _) => "elliptic",
            (StabilityKind::Hyperbolic, s) if s < 0 => "hyperbolic-",
            (StabilityKind::Hyperbolic, _) => "hyperbolic+",
            (StabilityKind::Parabolic, s) if s < 0 => "parabolic-",
            (StabilityKind::Parabolic, _) => "parabolic+",
        }
    }

    /// Classification implied by a bare trace.
    pub fn from_trace(trace: f64, tol_class: f64) -> Self {
        let sign = if trace < 0.0 { -1 } else { 1 };
        let excess = trace.abs() - 2.0;
        let kind = if excess.abs() <= tol_class {
            StabilityKind::Parabolic
        } else if excess < 0.0 {
            StabilityKind::Elliptic
        } else {
            StabilityKind::Hyperbolic
        };
        StabilityClass {
            kind,
            trace,
            sign: if kind == StabilityKind::Elliptic { 0 } else { sign },
        }
    }
}

impl fmt::Display for StabilityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Parses a [`StabilityClass::label`]; the trace is not part of the label
/// and is set to NaN.
impl FromStr for StabilityClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, sign) = match s {
            "elliptic" => (StabilityKind::Elliptic, 0),
            "hyperbolic+" => (StabilityKind::Hyperbolic, 1),
            "hyperbolic-" => (StabilityKind::Hyperbolic, -1),
            "parabolic+" => (StabilityKind::Parabolic, 1),
            "parabolic-" => (StabilityKind::Parabolic, -1),
            other => return Err(Error::Config(format!("unknown stability class `{other}`"))),
        };
        Ok(StabilityClass { kind, trace: f64::NAN, sign })
    }
}

/// Classifies a monodromy matrix by its trace.
pub fn classify(m: &Monodromy, tol_class: f64) -> Result<StabilityClass> {
    if !(m.det_residual <= MAX_DET_RESIDUAL) {
        return Err(Error::NotUnimodular(m.det_residual));
    }
    Ok(StabilityClass::from_trace(m.trace(), tol_class))
}

/// Propagator `X(t_to) X(t_from)⁻¹` of `ẅ + (shift + V''(p(t; E))) w = 0`,
/// where `X(0) = I` and `p(0) = 0`.
pub fn propagator(
    pot: &Potential,
    shift: f64,
    energy: f64,
    t_from: f64,
    t_to: f64,
    tol: f64,
) -> Result<Monodromy> {
    if !(energy > 0.0) {
        return Err(Error::NonPositiveEnergy(energy));
    }
    let ode = Integrator::with_tol(tol);
    let rhs = |_: f64, y: &[f64], dy: &mut [f64]| {
        pendulum_rhs(pot, &y[..2], &mut dy[..2]);
        let g = shift + pot.eval(y[0]).d2v;
        dy[2] = y[3];
        dy[3] = -g * y[2];
        dy[4] = y[5];
        dy[5] = -g * y[4];
    };
    let fundamental = |t: f64| -> Result<[[f64; 2]; 2]> {
        let mut y = [0.0, initial_speed(pot, energy), 1.0, 0.0, 0.0, 1.0];
        ode.integrate(rhs, 0.0, &mut y, t)?;
        Ok([[y[2], y[4]], [y[3], y[5]]])
    };
    let end = fundamental(t_to)?;
    let start = fundamental(t_from)?;
    let det = start[0][0] * start[1][1] - start[0][1] * start[1][0];
    let inv = [
        [start[1][1] / det, -start[0][1] / det],
        [-start[1][0] / det, start[0][0] / det],
    ];
    let mut m = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = end[i][0] * inv[0][j] + end[i][1] * inv[1][j];
        }
    }
    Ok(Monodromy::from_entries(m, t_to - t_from))
}

/// Floquet matrix of the relative channel over one period `[-τ, τ]`.
pub fn monodromy_w(pot: &Potential, kappa: f64, energy: f64, tol: f64) -> Result<Monodromy> {
    system_params(pot, kappa)?;
    let tau = orbit::period(pot, energy, tol)?.tau;
    propagator(pot, 2.0 * kappa, energy, -tau, tau, tol)
}

/// Floquet matrix of the tangent channel over one period `[-τ, τ]`.
pub fn monodromy_u(pot: &Potential, energy: f64, tol: f64) -> Result<Monodromy> {
    let tau = orbit::period(pot, energy, tol)?.tau;
    propagator(pot, 0.0, energy, -tau, tau, tol)
}

/// Net change of `θ = arg(w + i ẇ)` over one period starting at `p(0) = 0`,
/// from `θ̇ = -sin²θ - (2κ + V''(p)) cos²θ`.
pub fn theta_winding(pot: &Potential, kappa: f64, energy: f64, theta0: f64, tol: f64) -> Result<f64> {
    let t = orbit::period(pot, energy, tol)?.period;
    let mut y = [0.0, initial_speed(pot, energy), theta0];
    Integrator::with_tol(tol).integrate(
        |_, y, dy| {
            pendulum_rhs(pot, &y[..2], &mut dy[..2]);
            let (s, c) = y[2].sin_cos();
            dy[2] = -s * s - (2.0 * kappa + pot.eval(y[0]).d2v) * c * c;
        },
        0.0,
        &mut y,
        t,
    )?;
    Ok(y[2] - theta0)
}

/// Outcome of the large-energy ellipticity test `F u · u⊥ > 0` for all `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// True when `F u · u⊥` is strictly positive on every sampled direction,
    /// so `F` has no real eigenvector.
    pub positive: bool,
    pub min_value: f64,
    /// Direction angle of the minimizing `u = (cos φ, sin φ)`.
    pub argmin: f64,
    /// Leading-order prediction `T min(1, 2κ)`.
    pub leading: f64,
    pub period: f64,
}

/// `min_u F u · u⊥` with `u⊥ = (u₂, -u₁)` over `samples` unit vectors.
pub fn certificate_of(m: &Monodromy, kappa: f64, samples: usize) -> Certificate {
    let samples = samples.max(4);
    let mut min_value = f64::INFINITY;
    let mut argmin = 0.0;
    for j in 0..samples {
        let phi = TAU * j as f64 / samples as f64;
        let u = [phi.cos(), phi.sin()];
        let fu = m.apply(u);
        let value = fu[0] * u[1] - fu[1] * u[0];
        if value < min_value {
            min_value = value;
            argmin = phi;
        }
    }
    Certificate {
        positive: min_value > 0.0,
        min_value,
        argmin,
        leading: m.period * (2.0 * kappa).min(1.0),
        period: m.period,
    }
}

/// Large-energy ellipticity certificate for the relative channel.
pub fn large_e_certificate(
    pot: &Potential,
    kappa: f64,
    energy: f64,
    samples: usize,
    tol: f64,
) -> Result<Certificate> {
    if energy < 1.0 {
        return Err(Error::EnergyOutOfRange(energy, "[1, ∞)"));
    }
    let m = monodromy_w(pot, kappa, energy, tol)?;
    Ok(certificate_of(&m, kappa, samples))
}
