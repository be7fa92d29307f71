//! Exact spectral data for the sinusoidal potential.
//!
//! For `V = -1 - cos x` the relative channel rescaled by `t = kτ` is the
//! `n = 1` Lamé equation `W'' + [λ - 2k² sn²(τ, k)] W = 0` with
//! `k² = 2/(2+E)` and `λ = (2κ+1)k²`. The substitution `u = am(τ, k)` turns
//! a Lamé equation into the Ince equation
//! `(1 + a cos 2u)ψ'' + b sin 2u ψ' + (c + d cos 2u)ψ = 0`, whose
//! `π`-antiperiodic solutions are odd-harmonic cosine or sine series with
//! coefficients tied by a three-term recurrence.

use serde::{Deserialize, Serialize};

use crate::elliptic::{complete_k, EllipticModulus};
use crate::error::{Error, Result};
use crate::floquet::Monodromy;
use crate::ode::Integrator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LameParams {
    pub n: u32,
    pub k2: f64,
    /// Eigenvalue parameter of the Lamé equation.
    pub lam: f64,
}

/// Energy-to-Lamé map for the pendulum: `n = 1`, `k² = 2/(2+E)`, `λ = (2κ+1)k²`.
pub fn map_energy(kappa: f64, energy: f64) -> Result<LameParams> {
    if !(energy > 0.0) {
        return Err(Error::NonPositiveEnergy(energy));
    }
    let k2 = 2.0 / (2.0 + energy);
    Ok(LameParams {
        n: 1,
        k2,
        lam: (2.0 * kappa + 1.0) * k2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InceCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

pub fn ince_coeffs(p: &LameParams) -> InceCoeffs {
    let nn = f64::from(p.n * (p.n + 1));
    let denom = 2.0 - p.k2;
    let a = p.k2 / denom;
    InceCoeffs {
        a,
        b: -a,
        c: (2.0 * p.lam - nn * p.k2) / denom,
        d: nn * p.k2 / denom,
    }
}

/// `(Q(m), Λ(m)) = (2a m² - b m - d/2, 4m² - c)`.
pub fn q_lambda(c: &InceCoeffs, m: f64) -> (f64, f64) {
    (2.0 * c.a * m * m - c.b * m - 0.5 * c.d, 4.0 * m * m - c.c)
}

/// The two antiperiodic solution families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// `ψ = Σ A_{2m+1} cos((2m+1)u)`.
    Cosine,
    /// `ψ = Σ B_{2m+1} sin((2m+1)u)`.
    Sine,
}

/// Determinant of the leading `size × size` block of the antiperiodic
/// recurrence matrix: row `m` has `Q(m - 1/2)` below, `Λ(m + 1/2)` on and
/// `Q(-(m + 3/2))` above the diagonal, with `±Q(-1/2)` added to the first
/// diagonal entry (`+` cosine, `-` sine).
///
/// Each row is divided by `1 + 4(m + 1/2)²`, which preserves the sign and
/// keeps large truncations in range.
pub fn antiperiodic_determinant(family: Family, coeffs: &InceCoeffs, size: usize) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    let mut above_prev = 0.0;
    for m in 0..size {
        let mf = m as f64;
        let scale = 1.0 + 4.0 * (mf + 0.5).powi(2);
        let (_, mut diag) = q_lambda(coeffs, mf + 0.5);
        if m == 0 {
            let q = q_lambda(coeffs, -0.5).0;
            diag += match family {
                Family::Cosine => q,
                Family::Sine => -q,
            };
        }
        let below = q_lambda(coeffs, mf - 0.5).0 / scale;
        let next = diag / scale * cur - below * above_prev * prev;
        above_prev = q_lambda(coeffs, -(mf + 1.5)).0 / scale;
        prev = cur;
        cur = next;
    }
    cur
}

/// Sorted antiperiodic band edges of the Lamé equation, `n` per family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandEdges {
    pub n: u32,
    pub k2: f64,
    pub antiperiodic_plus: Vec<f64>,
    pub antiperiodic_minus: Vec<f64>,
}

const SCAN_POINTS: usize = 4000;
const EXTRA_ROWS: usize = 24;

fn lowest_roots(family: Family, n: u32, k2: f64, count: usize, size: usize) -> Result<Vec<f64>> {
    let nn = f64::from(n * (n + 1));
    let upper = 4.0 * f64::from(n * n) + nn * k2 + 1.0;
    let det = |lam: f64| {
        let c = ince_coeffs(&LameParams { n, k2, lam });
        antiperiodic_determinant(family, &c, size)
    };
    let mut roots = Vec::with_capacity(count);
    let mut x0 = 0.0;
    let mut f0 = det(x0);
    for i in 1..=SCAN_POINTS {
        let x1 = upper * i as f64 / SCAN_POINTS as f64;
        let f1 = det(x1);
        if f0 == 0.0 {
            roots.push(x0);
        } else if f0 * f1 < 0.0 {
            let (mut lo, mut hi, mut flo) = (x0, x1, f0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = det(mid);
                if fm * flo <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        if roots.len() == count {
            return Ok(roots);
        }
        x0 = x1;
        f0 = f1;
    }
    Err(Error::RootFinder(format!(
        "{family:?} family: found {} of {count} roots in [0, {upper}]",
        roots.len()
    )))
}

/// Lowest `n` antiperiodic eigenvalues `λ'` of each family.
///
/// For `n = 1` the recurrence decouples after the first row (`Q(1/2) = 0`)
/// and the roots are exactly `1` and `1 + k²`. For larger `n` the series do
/// not terminate in `u`, so the recurrence is truncated and the truncation
/// is enlarged until the roots stop moving.
pub fn antiperiodic_eigenvalues(n: u32, k2: f64) -> Result<BandEdges> {
    if n == 0 {
        return Err(Error::Config("Lamé degree must be at least 1".into()));
    }
    EllipticModulus::from_k2(k2)?;
    let count = n as usize;
    let solve = |family| -> Result<Vec<f64>> {
        let mut size = count + EXTRA_ROWS;
        let mut last = lowest_roots(family, n, k2, count, size)?;
        for _ in 0..8 {
            size *= 2;
            let next = lowest_roots(family, n, k2, count, size)?;
            let moved = last
                .iter()
                .zip(&next)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            last = next;
            if moved < 1e-13 {
                return Ok(last);
            }
        }
        Err(Error::RootFinder(format!("{family:?} truncation did not converge")))
    };
    Ok(BandEdges {
        n,
        k2,
        antiperiodic_plus: solve(Family::Cosine)?,
        antiperiodic_minus: solve(Family::Sine)?,
    })
}

/// Floquet matrix of `W'' + [λ - n(n+1)k² sn²(τ, k)] W = 0` over `[0, 2K(k)]`.
/// `sn` is generated alongside `W` from the amplitude equation
/// `φ' = sqrt(1 - k² sin²φ)`.
pub fn lame_monodromy(p: &LameParams, tol: f64) -> Result<Monodromy> {
    let m = EllipticModulus::from_k2(p.k2)?;
    let period = 2.0 * complete_k(m);
    let nn = f64::from(p.n * (p.n + 1));
    let mut y = [0.0, 1.0, 0.0, 0.0, 1.0];
    Integrator::with_tol(tol).integrate(
        |_, y, dy| {
            let sn = y[0].sin();
            dy[0] = (1.0 - p.k2 * sn * sn).sqrt();
            let g = p.lam - nn * p.k2 * sn * sn;
            dy[1] = y[2];
            dy[2] = -g * y[1];
            dy[3] = y[4];
            dy[4] = -g * y[3];
        },
        0.0,
        &mut y,
        period,
    )?;
    Ok(Monodromy::from_entries([[y[1], y[3]], [y[2], y[4]]], period))
}

/// Closed-form instability interval `(4κ - 2, 4κ)` in energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyInterval {
    pub e_lo: f64,
    pub e_hi: f64,
    /// Set when `κ ≤ 1/2` and the lower end was clipped at `E = 0`.
    pub truncated: bool,
}

pub fn instability_interval(kappa: f64) -> EnergyInterval {
    let lo = 4.0 * kappa - 2.0;
    let hi = 4.0 * kappa;
    EnergyInterval {
        e_lo: lo.max(0.0),
        e_hi: hi.max(0.0),
        truncated: lo <= 0.0,
    }
}

pub fn is_unstable(kappa: f64, energy: f64) -> bool {
    energy > 4.0 * kappa - 2.0 && energy < 4.0 * kappa
}

/// Instability verdict at one energy together with the band edges it rests on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LameVerdict {
    pub params: LameParams,
    pub coeffs: InceCoeffs,
    /// `λ'₁ = 1` and `λ'₂ = 1 + k²`.
    pub gap: (f64, f64),
    pub unstable: bool,
}

pub fn verdict(kappa: f64, energy: f64) -> Result<LameVerdict> {
    let params = map_energy(kappa, energy)?;
    let edges = antiperiodic_eigenvalues(1, params.k2)?;
    let gap = (edges.antiperiodic_plus[0], edges.antiperiodic_minus[0]);
    Ok(LameVerdict {
        params,
        coeffs: ince_coeffs(&params),
        gap,
        unstable: params.lam > gap.0 && params.lam < gap.1,
    })
}
