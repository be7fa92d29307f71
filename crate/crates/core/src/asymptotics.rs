//! Small-energy asymptotics: the regularized period constant `K`, the
//! heteroclinic transition matrix `N`, the trace of the frozen monodromy
//! `F⁰_E`, and least-squares fits of the log-periodic trace model
//! `tr F_E ≈ a cos((ω/λ) ln E - φ)`.

use std::f64::consts::{PI, SQRT_2, TAU};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::Monodromy;
use crate::ode::Integrator;
use crate::orbit;
use crate::potential::{system_params, Potential, SystemParams};
use crate::quad;
use crate::scan::TraceSample;

/// Methods that disagree by more than this raise [`Error::MethodsDisagree`].
pub const K_AGREEMENT: f64 = 1e-2;
/// Default heteroclinic horizon in units of `1/λ`.
pub const HORIZON_FACTOR: f64 = 40.0;
const MIN_FIT_SAMPLES: usize = 30;
/// Minimum ln-E span of a fit window, in predicted periods.
const MIN_FIT_PERIODS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KMethod {
    Limit,
    Integral,
}

impl FromStr for KMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "limit" => Ok(KMethod::Limit),
            "integral" => Ok(KMethod::Integral),
            other => Err(Error::Config(format!("unknown method `{other}` (expected limit or integral)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodResidual {
    pub energy: f64,
    /// `T(E) - (1/λ) ln(1/E) - K`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizedPeriod {
    pub k: f64,
    pub lambda_saddle: f64,
    pub method: KMethod,
    /// Extrapolated value of `T(E) - (1/λ) ln(1/E)`.
    pub limit: f64,
    /// Closed-form logarithmic part plus the bounded remainder integral.
    pub integral: Option<f64>,
    /// The same split with the constants exactly as printed in the source
    /// derivation, kept for comparison only.
    pub literal: Option<f64>,
    pub diagnostics: Vec<PeriodResidual>,
}

/// Energies `10^-3 .. 10^-8` with `per_decade` points per decade.
pub fn limit_energies(per_decade: usize) -> Vec<f64> {
    let n = 5 * per_decade;
    (0..=n).map(|i| 10f64.powf(-3.0 - 5.0 * i as f64 / n as f64)).collect()
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap_or(col);
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Least squares `y ≈ c₀ + c₁ E ln E + c₂ E`, returning `c₀`.
fn extrapolate(points: &[(f64, f64)]) -> f64 {
    let basis = |e: f64| [1.0, e * e.ln() * 1e3, e * 1e3];
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for &(e, y) in points {
        let b = basis(e);
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += b[i] * b[j];
            }
            atb[i] += b[i] * y;
        }
    }
    solve3(ata, atb)[0]
}

/// Limit definition of `K` on the given energies.
pub fn k_limit_on(pot: &Potential, energies: &[f64], tol: f64) -> Result<(f64, Vec<PeriodResidual>)> {
    let lambda = pot.saddle_exponent()?;
    let raw = energies
        .iter()
        .map(|&e| Ok((e, orbit::period(pot, e, tol)?.period - (1.0 / e).ln() / lambda)))
        .collect::<Result<Vec<_>>>()?;
    let k = extrapolate(&raw);
    let diagnostics = raw
        .iter()
        .map(|&(energy, r)| PeriodResidual { energy, residual: r - k })
        .collect();
    Ok((k, diagnostics))
}

/// `∫₀^π f` with `f(δ) = 1/sqrt(-V(π-δ)) - √2/(λδ)`.
fn remainder_integral(pot: &Potential, lambda: f64, tol: f64) -> Result<f64> {
    let q = quad::integrate(
        |d: f64| (2.0 / pot.separatrix_speed_sq(d)).sqrt() - SQRT_2 / (lambda * d),
        0.0,
        PI,
        tol,
        tol,
    )?;
    Ok(q.value)
}

/// `K = (2/λ) ln(√2 π λ) + √2 ∫₀^π f`, valid for even potentials.
pub fn k_integral(pot: &Potential, tol: f64) -> Result<f64> {
    let lambda = pot.saddle_exponent()?;
    Ok(2.0 / lambda * (SQRT_2 * PI * lambda).ln() + SQRT_2 * remainder_integral(pot, lambda, tol)?)
}

/// `(2√2/λ) ln(2πλ) + ∫_{-π}^{π} f`: the split without the `1/√2` period
/// prefactor and with `ln(2πλ)` for the explicit part.
pub fn k_literal(pot: &Potential, tol: f64) -> Result<f64> {
    let lambda = pot.saddle_exponent()?;
    Ok(2.0 * SQRT_2 / lambda * (2.0 * PI * lambda).ln() + 2.0 * remainder_integral(pot, lambda, tol)?)
}

/// The constant `K` in `T(E) = (1/λ) ln(1/E) + K + o(1)`.
pub fn regularized_k(pot: &Potential, method: KMethod, tol: f64) -> Result<RegularizedPeriod> {
    regularized_k_on(pot, method, &limit_energies(2), tol)
}

pub fn regularized_k_on(pot: &Potential, method: KMethod, energies: &[f64], tol: f64) -> Result<RegularizedPeriod> {
    let lambda = pot.saddle_exponent()?;
    let (limit, diagnostics) = k_limit_on(pot, energies, tol)?;
    let (k, integral, literal) = match method {
        KMethod::Limit => (limit, None, None),
        KMethod::Integral => {
            let quad_tol = tol.max(1e-13);
            let integral = k_integral(pot, quad_tol)?;
            if (integral - limit).abs() > K_AGREEMENT {
                return Err(Error::MethodsDisagree { limit, integral });
            }
            (integral, Some(integral), Some(k_literal(pot, quad_tol)?))
        }
    };
    let diagnostics = diagnostics
        .into_iter()
        .map(|d| PeriodResidual { residual: d.residual + limit - k, ..d })
        .collect();
    Ok(RegularizedPeriod {
        k,
        lambda_saddle: lambda,
        method,
        limit,
        integral,
        literal,
        diagnostics,
    })
}

/// Half period from the expansion, `((1/λ) ln(1/E) + K) / 2`.
pub fn expansion_tau(lambda: f64, energy: f64, k: f64) -> f64 {
    0.5 * ((1.0 / energy).ln() / lambda + k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub n11: f64,
    pub n12: f64,
    pub n21: f64,
    pub n22: f64,
    /// Fitted exponential rate at which `C(t)C(-t)⁻¹` settles.
    pub convergence_rate: f64,
    /// Extrapolated distance between the result and the infinite-horizon limit.
    pub tail_estimate: f64,
    pub horizon: f64,
}

impl TransitionMatrix {
    pub fn entries(&self) -> [[f64; 2]; 2] {
        [[self.n11, self.n12], [self.n21, self.n22]]
    }

    pub fn det(&self) -> f64 {
        self.n11 * self.n22 - self.n12 * self.n21
    }

    /// Coefficients `(n₁₁ + n₂₂, n₂₁/ω - ω n₁₂)` of `cos 2ωτ` and `sin 2ωτ`.
    pub fn trace_coefficients(&self, omega: f64) -> (f64, f64) {
        (self.n11 + self.n22, self.n21 / omega - omega * self.n12)
    }

    pub fn amplitude(&self, omega: f64) -> f64 {
        let (c, s) = self.trace_coefficients(omega);
        c.hypot(s)
    }

    pub fn frobenius_distance(&self, other: &TransitionMatrix) -> f64 {
        let (a, b) = (self.entries(), other.entries());
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                s += (a[i][j] - b[i][j]).powi(2);
            }
        }
        s.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionOptions {
    /// `C(0)`; the result does not depend on it.
    pub initial: [[f64; 2]; 2],
    /// Multiplies the perturbation `B(t)`; 0 switches it off.
    pub coupling: f64,
    /// Sample times per direction used for the rate fit.
    pub samples: usize,
}

impl Default for TransitionOptions {
    fn default() -> Self {
        Self {
            initial: [[1.0, 0.0], [0.0, 1.0]],
            coupling: 1.0,
            samples: 64,
        }
    }
}

pub fn default_horizon(pot: &Potential) -> Result<f64> {
    Ok(HORIZON_FACTOR / pot.saddle_exponent()?)
}

fn mat_mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut m = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    m
}

fn mat_inv(a: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]]
}

/// Integrates `extra` along `p₀` from `t = 0` to each of `times` (all of
/// one sign). The heteroclinic offset is carried as `ln δ`, with
/// `δ(0) = π`, and `V''(π) - V''(p₀(t))` is handed to `extra`.
fn along_heteroclinic<F>(
    pot: &Potential,
    tol: f64,
    init: [f64; 4],
    times: &[f64],
    extra: F,
) -> Result<Vec<[f64; 4]>>
where
    F: Fn(f64, f64, &[f64], &mut [f64]),
{
    let dir = if times.last().copied().unwrap_or(0.0) < 0.0 { -1.0 } else { 1.0 };
    let v2_max = pot.curvature_at_max();
    let mut y = [PI.ln(), init[0], init[1], init[2], init[3]];
    let mut out = Vec::with_capacity(times.len());
    Integrator::with_tol(tol).integrate_sampled(
        |t, y, dy| {
            let delta = y[0].exp();
            dy[0] = dir * orbit::offset_rate(pot, delta) / delta;
            let b = v2_max - pot.eval_offset(delta).d2v;
            extra(t, b, &y[1..], &mut dy[1..]);
        },
        0.0,
        &mut y,
        times,
        |_, y| out.push([y[1], y[2], y[3], y[4]]),
    )?;
    Ok(out)
}

/// The constant matrix `N = lim C(t)C(-t)⁻¹` of the interaction-picture
/// system `Ċ = e^{-At} B(t) e^{At} C` along the heteroclinic orbit, where
/// `A = [[0, 1], [-ω², 0]]` and `B₂₁ = V''(π) - V''(p₀)`.
pub fn transition_n(pot: &Potential, kappa: f64, horizon: f64, tol: f64) -> Result<TransitionMatrix> {
    transition_n_with(pot, kappa, horizon, tol, TransitionOptions::default())
}

pub fn transition_n_with(
    pot: &Potential,
    kappa: f64,
    horizon: f64,
    tol: f64,
    opts: TransitionOptions,
) -> Result<TransitionMatrix> {
    let params = system_params(pot, kappa)?;
    let (omega, lambda) = (params.omega, params.lambda_saddle);
    if !(horizon > 0.0) || opts.samples < 4 {
        return Err(Error::HorizonTooSmall(horizon));
    }
    let s = opts.samples;
    let c0 = opts.initial;
    let rhs = |t: f64, b: f64, c: &[f64], dc: &mut [f64]| {
        let (sn, cs) = (omega * t).sin_cos();
        let b = opts.coupling * b;
        let m = [
            [-b * sn * cs / omega, -b * sn * sn / (omega * omega)],
            [b * cs * cs, b * sn * cs / omega],
        ];
        for i in 0..2 {
            for j in 0..2 {
                dc[2 * i + j] = m[i][0] * c[j] + m[i][1] * c[2 + j];
            }
        }
    };
    let init = [c0[0][0], c0[0][1], c0[1][0], c0[1][1]];
    let fwd_t: Vec<f64> = (1..=s).map(|j| horizon * j as f64 / s as f64).collect();
    let bwd_t: Vec<f64> = fwd_t.iter().map(|t| -t).collect();
    let fwd = along_heteroclinic(pot, tol, init, &fwd_t, rhs)?;
    let bwd = along_heteroclinic(pot, tol, init, &bwd_t, rhs)?;
    let as_mat = |v: &[f64; 4]| [[v[0], v[1]], [v[2], v[3]]];
    let ns: Vec<[[f64; 2]; 2]> = fwd
        .iter()
        .zip(&bwd)
        .map(|(f, b)| mat_mul(as_mat(f), mat_inv(as_mat(b))))
        .collect();
    let n = ns[s - 1];
    let norm = n.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    let floor = 1e-12 * (1.0 + norm);

    // ln ‖N(t) - N(h)‖ against t, skipping the transient before t = 1/λ
    let pts: Vec<(f64, f64)> = ns[..s - 1]
        .iter()
        .zip(&fwd_t)
        .filter_map(|(m, &t)| {
            let d = m
                .iter()
                .flatten()
                .zip(n.iter().flatten())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            (d > floor && t >= 1.0 / lambda).then_some((t, d.ln()))
        })
        .collect();
    let past_transient = fwd_t[..s - 1].iter().filter(|&&t| t >= 1.0 / lambda).count();
    let (rate, tail) = if past_transient < 3 {
        return Err(Error::HorizonTooSmall(horizon));
    } else if pts.is_empty() {
        (f64::INFINITY, 0.0)
    } else if pts.len() < 3 {
        return Err(Error::HorizonTooSmall(horizon));
    } else {
        let k = pts.len() as f64;
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let ml = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let slope = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mt).powi(2)).sum::<f64>();
        let rate = -slope;
        (rate, (ml + slope * (horizon - mt)).exp())
    };
    if rate < lambda - 0.1 || tail > 1e-9 * (1.0 + norm) {
        return Err(Error::HorizonTooSmall(horizon));
    }
    Ok(TransitionMatrix {
        n11: n[0][0],
        n12: n[0][1],
        n21: n[1][0],
        n22: n[1][1],
        convergence_rate: rate,
        tail_estimate: tail,
        horizon,
    })
}

/// `F⁰ = X(τ)X(-τ)⁻¹` for `ẅ + (2κ + V''(p₀(t))) w = 0` along the
/// heteroclinic orbit.
pub fn frozen_monodromy(pot: &Potential, kappa: f64, tau: f64, tol: f64) -> Result<Monodromy> {
    let params = system_params(pot, kappa)?;
    let omega2 = params.omega * params.omega;
    let rhs = |_: f64, b: f64, w: &[f64], dw: &mut [f64]| {
        // 2κ + V''(p₀) = ω² - b
        let g = omega2 - b;
        dw[0] = w[1];
        dw[1] = -g * w[0];
        dw[2] = w[3];
        dw[3] = -g * w[2];
    };
    let init = [1.0, 0.0, 0.0, 1.0];
    let end = along_heteroclinic(pot, tol, init, &[tau], rhs)?[0];
    let start = along_heteroclinic(pot, tol, init, &[-tau], rhs)?[0];
    let x = |v: [f64; 4]| [[v[0], v[2]], [v[1], v[3]]];
    Ok(Monodromy::from_entries(mat_mul(x(end), mat_inv(x(start))), 2.0 * tau))
}

/// `tr(e^{Aτ} N e^{Aτ}) = (n₁₁ + n₂₂) cos 2ωτ + (n₂₁/ω - ω n₁₂) sin 2ωτ`
/// with `τ` from the period expansion.
pub fn predicted_trace(n: &TransitionMatrix, params: &SystemParams, energy: f64, k: &RegularizedPeriod) -> f64 {
    let tau = expansion_tau(params.lambda_saddle, energy, k.k);
    let (c, s) = n.trace_coefficients(params.omega);
    let (sn, cs) = (2.0 * params.omega * tau).sin_cos();
    c * cs + s * sn
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeFit {
    pub a: f64,
    pub phi: f64,
    pub frequency: f64,
    pub period_ln_e: f64,
    pub rms_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub a: f64,
    pub phi: f64,
    /// Fixed ln-E period `2πλ/ω`.
    pub period_ln_e: f64,
    pub rms_residual: f64,
    pub samples: usize,
    pub free: FreeFit,
}

/// Best `(a, φ)` and rms residual of `a cos(ν x - φ)` at fixed `ν`.
fn fit_at(points: &[(f64, f64)], nu: f64) -> (f64, f64, f64) {
    let (mut scc, mut sss, mut scs, mut syc, mut sys) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (s, c) = (nu * x).sin_cos();
        scc += c * c;
        sss += s * s;
        scs += c * s;
        syc += y * c;
        sys += y * s;
    }
    let det = scc * sss - scs * scs;
    let alpha = (syc * sss - sys * scs) / det;
    let beta = (sys * scc - syc * scs) / det;
    let ss: f64 = points
        .iter()
        .map(|&(x, y)| {
            let (s, c) = (nu * x).sin_cos();
            (y - alpha * c - beta * s).powi(2)
        })
        .sum();
    (alpha.hypot(beta), beta.atan2(alpha), (ss / points.len() as f64).sqrt())
}

/// Fits `tr ≈ a cos((ω/λ) ln E - φ)` with the frequency fixed, and again
/// with the frequency free in `[ν/2, 3ν/2]`.
pub fn fit_log_model(samples: &[TraceSample], params: &SystemParams) -> Result<FitResult> {
    let points: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.is_ok() && s.trace.is_finite())
        .map(|s| (s.ln_e, s.trace))
        .collect();
    let period = params.log_period();
    if points.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSpan(format!(
            "{} usable samples, need {MIN_FIT_SAMPLES}",
            points.len()
        )));
    }
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.0), h.max(p.0)));
    if hi - lo < MIN_FIT_PERIODS * period {
        return Err(Error::InsufficientSpan(format!(
            "ln E spans {:.3}, need {MIN_FIT_PERIODS} period(s) of {period:.3}",
            hi - lo
        )));
    }
    let nu0 = TAU / period;
    let (a, phi, rms) = fit_at(&points, nu0);

    let grid = 400;
    let rms_at = |nu: f64| fit_at(&points, nu).2;
    let step = nu0 / grid as f64;
    let mut best = nu0;
    let mut best_rms = rms;
    for i in 0..=grid {
        let nu = 0.5 * nu0 + i as f64 * step;
        let r = rms_at(nu);
        if r < best_rms {
            best = nu;
            best_rms = r;
        }
    }
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut l, mut h) = (best - step, best + step);
    for _ in 0..80 {
        let x1 = h - g * (h - l);
        let x2 = l + g * (h - l);
        if rms_at(x1) <= rms_at(x2) {
            h = x2;
        } else {
            l = x1;
        }
    }
    let nu = 0.5 * (l + h);
    let (fa, fphi, frms) = fit_at(&points, nu);
    Ok(FitResult {
        a,
        phi,
        period_ln_e: period,
        rms_residual: rms,
        samples: points.len(),
        free: FreeFit {
            a: fa,
            phi: fphi,
            frequency: nu,
            period_ln_e: TAU / nu,
            rms_residual: frms,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::{monodromy_w, StabilityClass};

    #[test]
    fn pendulum_k_is_ln_32() {
        let p = Potential::pendulum();
        let k = regularized_k(&p, KMethod::Limit, 1e-13).unwrap();
        assert!((k.k - 32f64.ln()).abs() < 1e-6, "{}", k.k);
        let k = regularized_k(&p, KMethod::Integral, 1e-13).unwrap();
        assert!((k.k - 32f64.ln()).abs() < 1e-9, "{}", k.k);
        assert!((k.literal.unwrap() - 2.0 * SQRT_2 * 8f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn cos3_k_is_grid_independent() {
        let p = Potential::cos3();
        let coarse = regularized_k(&p, KMethod::Limit, 1e-13).unwrap();
        let fine = regularized_k_on(&p, KMethod::Limit, &limit_energies(6), 1e-13).unwrap();
        assert!((coarse.k - fine.k).abs() < 1e-3);
        let integral = k_integral(&p, 1e-13).unwrap();
        assert!((coarse.k - integral).abs() < 1e-6, "{} vs {integral}", coarse.k);
    }

    #[test]
    fn residuals_shrink_toward_zero_energy() {
        let p = Potential::cos3();
        let energies = [1e-4, 1e-8];
        let (k, _) = k_limit_on(&p, &limit_energies(2), 1e-13).unwrap();
        let lambda = p.saddle_exponent().unwrap();
        let r: Vec<f64> = energies
            .iter()
            .map(|&e| orbit::period(&p, e, 1e-13).unwrap().period - (1.0 / e).ln() / lambda - k)
            .collect();
        assert!(r[1].abs() < r[0].abs(), "{r:?}");
    }

    #[test]
    fn transition_matrix_is_unimodular_and_horizon_independent() {
        let p = Potential::pendulum();
        let n40 = transition_n(&p, 1.0, 40.0, 1e-12).unwrap();
        let n20 = transition_n(&p, 1.0, 20.0, 1e-12).unwrap();
        assert!((n40.det() - 1.0).abs() < 1e-8);
        assert!(n40.frobenius_distance(&n20) < 1e-8);
        assert!(n40.convergence_rate >= 0.9, "{}", n40.convergence_rate);
        assert!(n40.amplitude(1.0) >= 2.0 - 1e-9);
    }

    #[test]
    fn no_perturbation_gives_identity() {
        let p = Potential::cos3();
        let opts = TransitionOptions { coupling: 0.0, ..Default::default() };
        let n = transition_n_with(&p, 2.0, 20.0, 1e-12, opts).unwrap();
        assert_eq!(n.entries(), [[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn transition_matrix_ignores_initial_frame() {
        let p = Potential::cos3();
        let base = transition_n(&p, 2.0, 40.0 / 3f64.sqrt(), 1e-12).unwrap();
        let opts = TransitionOptions {
            initial: [[2.0, 0.7], [-1.3, 0.045]],
            ..Default::default()
        };
        let other = transition_n_with(&p, 2.0, 40.0 / 3f64.sqrt(), 1e-12, opts).unwrap();
        assert!(base.frobenius_distance(&other) < 1e-9);
    }

    #[test]
    fn short_horizon_is_reported() {
        let p = Potential::pendulum();
        assert!(matches!(transition_n(&p, 1.0, 3.0, 1e-12), Err(Error::HorizonTooSmall(_))));
    }

    #[test]
    fn predicted_trace_matches_frozen_monodromy() {
        let p = Potential::pendulum();
        let params = system_params(&p, 1.0).unwrap();
        let k = regularized_k(&p, KMethod::Limit, 1e-13).unwrap();
        let n = transition_n(&p, 1.0, 40.0, 1e-12).unwrap();
        let e = 1e-4;
        let tau = expansion_tau(1.0, e, k.k);
        let frozen = frozen_monodromy(&p, 1.0, tau, 1e-12).unwrap();
        let diff = (frozen.trace() - predicted_trace(&n, &params, e, &k)).abs();
        assert!(diff < (-tau).exp(), "{diff}");
    }

    #[test]
    fn synthetic_fit_recovers_parameters() {
        let p = Potential::cos3();
        let params = system_params(&p, 2.0).unwrap();
        let nu = params.omega / params.lambda_saddle;
        let samples: Vec<TraceSample> = (0..80)
            .map(|i| {
                let ln_e = -30.0 + 0.3 * i as f64;
                let trace = 2.7 * (nu * ln_e - 0.4).cos();
                TraceSample {
                    energy: ln_e.exp(),
                    ln_e,
                    trace,
                    det_residual: 0.0,
                    class: Some(StabilityClass::from_trace(trace, 1e-6)),
                    failure: None,
                }
            })
            .collect();
        let fit = fit_log_model(&samples, &params).unwrap();
        assert!((fit.a - 2.7).abs() < 1e-10 && (fit.phi - 0.4).abs() < 1e-10);
        assert!(fit.rms_residual < 1e-12);
        assert!((fit.free.frequency / nu - 1.0).abs() < 1e-8);
        assert!(fit_log_model(&samples[..20], &params).is_err());
    }

    #[test]
    fn frozen_trace_tracks_true_trace() {
        let p = Potential::pendulum();
        let gap = |e: f64| {
            let tau = orbit::period(&p, e, 1e-13).unwrap().tau;
            let frozen = frozen_monodromy(&p, 1.0, tau, 1e-12).unwrap().trace();
            let full = monodromy_w(&p, 1.0, e, 1e-12).unwrap().trace();
            (frozen - full).abs()
        };
        assert!(gap(1e-6) < gap(1e-3));
    }
}
