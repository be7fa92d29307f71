//! Synchronous orbits `x = y = p(t; E)`: period, trajectory, the
//! heteroclinic limit `p₀`, and the period-2 chain embedding.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::Integrator;
use crate::potential::Potential;
use crate::quad;

/// One point of a synchronous trajectory. `energy` is recomputed from the
/// state, so its deviation from the nominal value measures integrator drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitState {
    pub t: f64,
    pub p: f64,
    pub p_dot: f64,
    pub energy: f64,
}

impl OrbitState {
    fn new(pot: &Potential, t: f64, p: f64, p_dot: f64) -> Self {
        Self {
            t,
            p,
            p_dot,
            energy: 0.5 * p_dot * p_dot + pot.value(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodResult {
    /// Time to advance `p` by `2π`.
    pub period: f64,
    /// Half period; the orbit passes `±π` at `t = ±tau`.
    pub tau: f64,
    pub energy: f64,
    pub error_estimate: f64,
}

fn require_positive(energy: f64) -> Result<()> {
    if energy > 0.0 && energy.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveEnergy(energy))
    }
}

/// `T(E) = (1/√2) ∫_{-π}^{π} dx / sqrt(E - V(x))`.
///
/// Near each copy of the maximum the offset `s = |x ∓ π|` is written as
/// `s = c sinh v` with `c = sqrt(2E)/λ`, which turns the `1/sqrt(E + λ²s²/2)`
/// peak into a bounded, smooth integrand in `v` for every `E > 0`.
pub fn period(pot: &Potential, energy: f64, tol: f64) -> Result<PeriodResult> {
    require_positive(energy)?;
    let lambda = pot.saddle_exponent().unwrap_or(1.0);
    let c = (2.0 * energy).sqrt() / lambda;
    let v_max = (PI / c).asinh();
    let half = |sign: f64| {
        quad::integrate(
            |v: f64| {
                let s = c * v.sinh();
                let gap = energy - pot.eval_offset(sign * s).v;
                c * v.cosh() / gap.sqrt()
            },
            0.0,
            v_max,
            0.0,
            tol,
        )
    };
    let right = half(1.0)?;
    let left = half(-1.0)?;
    let period = (right.value + left.value) / std::f64::consts::SQRT_2;
    Ok(PeriodResult {
        period,
        tau: 0.5 * period,
        energy,
        error_estimate: (right.error + left.error) / std::f64::consts::SQRT_2,
    })
}

/// Initial speed `sqrt(2(E - V(0)))` of the orbit with `p(0) = 0`.
pub fn initial_speed(pot: &Potential, energy: f64) -> f64 {
    (2.0 * (energy - pot.value(0.0))).sqrt()
}

/// Right-hand side of `p̈ = -V'(p)` on `[p, ṗ]`.
pub(crate) fn pendulum_rhs(pot: &Potential, y: &[f64], dy: &mut [f64]) {
    dy[0] = y[1];
    dy[1] = -pot.eval(y[0]).dv;
}

/// State of the synchronous orbit at time `t`, integrated from `p(0) = 0`.
pub fn orbit_state(pot: &Potential, energy: f64, t: f64, tol: f64) -> Result<OrbitState> {
    require_positive(energy)?;
    let mut y = [0.0, initial_speed(pot, energy)];
    Integrator::with_tol(tol).integrate(|_, y, dy| pendulum_rhs(pot, y, dy), 0.0, &mut y, t)?;
    Ok(OrbitState::new(pot, t, y[0], y[1]))
}

/// States at each of `times` (sorted ascending, all `>= 0`).
pub fn orbit_samples(pot: &Potential, energy: f64, times: &[f64], tol: f64) -> Result<Vec<OrbitState>> {
    require_positive(energy)?;
    let mut y = [0.0, initial_speed(pot, energy)];
    let mut out = Vec::with_capacity(times.len());
    Integrator::with_tol(tol).integrate_sampled(
        |_, y, dy| pendulum_rhs(pot, y, dy),
        0.0,
        &mut y,
        times,
        |t, y| out.push(OrbitState::new(pot, t, y[0], y[1])),
    )?;
    Ok(out)
}

/// Time at which the integrated orbit first reaches `p = 2π`, located by
/// Newton iteration on the trajectory itself (independent of the quadrature).
pub fn return_time(pot: &Potential, energy: f64, tol: f64) -> Result<f64> {
    require_positive(energy)?;
    let ode = Integrator::with_tol(tol);
    let rhs = |_: f64, y: &[f64], dy: &mut [f64]| pendulum_rhs(pot, y, dy);
    let mut y = [0.0, initial_speed(pot, energy)];
    let mut t = 0.0;
    // Coarse march until the orbit passes 2π.
    let step = 0.05 / y[1].max(1.0) + 0.05;
    while y[0] < TAU {
        ode.integrate(rhs, t, &mut y, t + step)?;
        t += step;
        if t > 1e6 {
            return Err(Error::Integrator { t, reason: "orbit does not return" });
        }
    }
    for _ in 0..50 {
        let dt = -(y[0] - TAU) / y[1];
        if dt.abs() < 1e-15 * t.max(1.0) {
            break;
        }
        ode.integrate(rhs, t, &mut y, t + dt)?;
        t += dt;
    }
    Ok(t)
}

/// Heteroclinic (`E = 0`) state together with its offset from the saddle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeteroclinicState {
    pub state: OrbitState,
    /// `π - |p₀(t)|`, carried separately because it underflows `p₀`'s
    /// resolution long before it reaches zero.
    pub offset: f64,
}

/// Time the heteroclinic orbit needs to go from `p₀ = 0` to offset `delta`:
/// `∫_delta^π dδ / sqrt(-2V(π - δ))`, integrated in `ln δ`.
fn heteroclinic_time(pot: &Potential, delta: f64, tol: f64) -> Result<f64> {
    if delta >= PI {
        return Ok(0.0);
    }
    let q = quad::integrate(
        |s: f64| {
            let d = s.exp();
            d / pot.separatrix_speed_sq(d).sqrt()
        },
        delta.ln(),
        PI.ln(),
        0.0,
        tol,
    )?;
    Ok(q.value)
}

/// `p₀(t)` with `p₀(0) = 0`, obtained by inverting the time integral of
/// `ṗ₀ = sqrt(-2V(p₀))`.
pub fn heteroclinic_state(pot: &Potential, t: f64, tol: f64) -> Result<HeteroclinicState> {
    let lambda = pot.saddle_exponent()?;
    let tq = tol.max(1e-15);
    let s = t.abs();
    let offset = if s == 0.0 {
        PI
    } else {
        // Solve heteroclinic_time(e^l) = s for l; the left side decreases in l.
        let mut hi = PI.ln();
        let mut lo = hi - lambda * s - 4.0;
        while heteroclinic_time(pot, lo.exp(), tq)? < s {
            lo -= 4.0;
        }
        let mut l = 0.5 * (lo + hi);
        for _ in 0..100 {
            let g = heteroclinic_time(pot, l.exp(), tq)? - s;
            if g > 0.0 {
                lo = l;
            } else {
                hi = l;
            }
            let d = l.exp();
            let slope = -d / pot.separatrix_speed_sq(d).sqrt();
            let mut next = l - g / slope;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let done = (next - l).abs() < 1e-14 || hi - lo < 1e-14;
            l = next;
            if done {
                break;
            }
        }
        l.exp()
    };
    let sign = if t < 0.0 { -1.0 } else { 1.0 };
    let p = sign * (PI - offset);
    let p_dot = pot.separatrix_speed_sq(offset).max(0.0).sqrt();
    Ok(HeteroclinicState {
        state: OrbitState::new(pot, t, p, p_dot),
        offset,
    })
}

/// `dδ/dt = -sqrt(-2V(π - δ))` for the heteroclinic offset with `t >= 0`.
pub(crate) fn offset_rate(pot: &Potential, delta: f64) -> f64 {
    -pot.separatrix_speed_sq(delta).max(0.0).sqrt()
}

/// Distance between the orbit of energy `E` and the heteroclinic orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proximity {
    pub energy: f64,
    /// `sup_{t ∈ [0, τ]} |p(t; E) - p₀(t)|`.
    pub sup: f64,
    pub argsup: f64,
    /// `min_{t ∈ (0, τ]} (p(t; E) - p₀(t))`.
    pub min_signed: f64,
}

const PROXIMITY_GRID: usize = 4000;

/// Sup-distance from `p(·; E)` to `p₀` over the first half period.
pub fn proximity_sup(pot: &Potential, energy: f64, tol: f64) -> Result<Proximity> {
    if !(energy > 0.0 && energy < 1.0) {
        return Err(Error::EnergyOutOfRange(energy, "(0, 1)"));
    }
    let tau = period(pot, energy, tol)?.tau;
    let times: Vec<f64> = (1..=PROXIMITY_GRID)
        .map(|i| tau * i as f64 / PROXIMITY_GRID as f64)
        .collect();
    let mut y = [0.0, initial_speed(pot, energy), PI];
    let mut out = Proximity {
        energy,
        sup: 0.0,
        argsup: 0.0,
        min_signed: f64::INFINITY,
    };
    Integrator::with_tol(tol).integrate_sampled(
        |_, y, dy| {
            pendulum_rhs(pot, &y[..2], &mut dy[..2]);
            dy[2] = offset_rate(pot, y[2]);
        },
        0.0,
        &mut y,
        &times,
        |t, y| {
            let gap = y[0] - (PI - y[2]);
            if gap.abs() > out.sup {
                out.sup = gap.abs();
                out.argsup = t;
            }
            out.min_signed = out.min_signed.min(gap);
        },
    )?;
    Ok(out)
}

/// Initial data for the binary used in [`chain_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ChainData {
    /// `x = y = p`.
    Synchronous,
    /// `x(0) = +split`, `y(0) = -split`, both with the synchronous speed.
    PeriodTwo { split: f64 },
    /// Period-2 data with particle `n` displaced by `kick · (n + 1) / N`,
    /// which breaks the period-2 structure of the chain.
    Perturbed { split: f64, kick: f64 },
}

/// Integrates the chain `ẍ_n + V'(x_n) = (κ/2)(x_{n-1} - 2x_n + x_{n+1})`
/// (periodic boundary) from data built out of a binary initial condition and
/// returns the largest deviation of `(x_{2j}, x_{2j+1})` from the binary's
/// `(x, y)` over `[0, horizon]`.
pub fn chain_check(
    pot: &Potential,
    kappa: f64,
    energy: f64,
    data: ChainData,
    n_particles: usize,
    horizon: f64,
    tol: f64,
) -> Result<f64> {
    if n_particles < 4 || n_particles % 2 != 0 {
        return Err(Error::OddChain(n_particles));
    }
    require_positive(energy)?;
    let speed = initial_speed(pot, energy);
    let (split, kick) = match data {
        ChainData::Synchronous => (0.0, 0.0),
        ChainData::PeriodTwo { split } => (split, 0.0),
        ChainData::Perturbed { split, kick } => (split, kick),
    };
    let n = n_particles;
    // Binary state [x, y, ẋ, ẏ].
    let mut binary = vec![split, -split, speed, speed];
    let mut chain = vec![0.0; 2 * n];
    for j in 0..n {
        chain[j] = if j % 2 == 0 { split } else { -split } + kick * (j + 1) as f64 / n as f64;
        chain[n + j] = speed;
    }
    let half = 0.5 * kappa;
    let binary_rhs = |_: f64, s: &[f64], d: &mut [f64]| {
        let xy = s[1] - s[0];
        let yx = s[0] - s[1];
        d[0] = s[2];
        d[1] = s[3];
        d[2] = half * (xy + xy) - pot.eval(s[0]).dv;
        d[3] = half * (yx + yx) - pot.eval(s[1]).dv;
    };
    let chain_rhs = |_: f64, s: &[f64], d: &mut [f64]| {
        for j in 0..n {
            let left = s[(j + n - 1) % n];
            let right = s[(j + 1) % n];
            d[j] = s[n + j];
            d[n + j] = half * ((left - s[j]) + (right - s[j])) - pot.eval(s[j]).dv;
        }
    };
    let samples = ((horizon.abs() * 20.0).ceil() as usize).max(10);
    let times: Vec<f64> = (1..=samples).map(|i| horizon * i as f64 / samples as f64).collect();
    let ode = Integrator::with_tol(tol);
    let mut binary_path = Vec::with_capacity(samples);
    ode.integrate_sampled(binary_rhs, 0.0, &mut binary, &times, |_, s| binary_path.push([s[0], s[1]]))?;
    let mut worst: f64 = 0.0;
    let mut k = 0;
    ode.integrate_sampled(chain_rhs, 0.0, &mut chain, &times, |_, s| {
        let [bx, by] = binary_path[k];
        for j in 0..n {
            let target = if j % 2 == 0 { bx } else { by };
            worst = worst.max((s[j] - target).abs());
        }
        k += 1;
    })?;
    Ok(worst)
}
