//! Periodic potentials and the constants derived from their maximum.
//!
//! Every potential is a finite cosine series `V(x) = Σ c_m cos(m x) - shift`.
//! Values and derivatives are evaluated through the offset `δ = π - x`
//! (reduced into `(-π, π]`), which keeps `V` relatively accurate right at
//! the maximum where the heteroclinic and small-energy orbits spend most of
//! their time.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `V`, `V'` and `V''` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialValue {
    pub v: f64,
    pub dv: f64,
    pub d2v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    name: String,
    /// Cosine coefficients `c_0, c_1, ...`.
    coeffs: Vec<f64>,
    shift: f64,
    /// `V(π)`, stored exactly so the offset form does not cancel.
    value_at_max: f64,
}

impl Potential {
    /// `V(x) = -1 - cos x`.
    pub fn pendulum() -> Self {
        Self::normalized("pendulum", vec![-1.0, -1.0])
    }

    /// `V(x) = -1 - cos³x = -1 - (3 cos x + cos 3x)/4`.
    pub fn cos3() -> Self {
        Self::normalized("cos3", vec![-1.0, -0.75, 0.0, -0.25])
    }

    /// Cosine series shifted so that `V(π) = 0`.
    pub fn fourier(coeffs: &[f64]) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::EmptyCoefficients);
        }
        Ok(Self::normalized("fourier", coeffs.to_vec()))
    }

    /// Cosine series taken as is, without normalization. Useful for
    /// exercising [`validate`] on potentials that break the assumptions.
    pub fn raw_cosine_series(name: &str, coeffs: &[f64]) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::EmptyCoefficients);
        }
        let at_pi = alternating_sum(coeffs);
        Ok(Self {
            name: name.to_string(),
            coeffs: coeffs.to_vec(),
            shift: 0.0,
            value_at_max: at_pi,
        })
    }

    fn normalized(name: &str, coeffs: Vec<f64>) -> Self {
        let shift = alternating_sum(&coeffs);
        Self {
            name: name.to_string(),
            coeffs,
            shift,
            value_at_max: 0.0,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Evaluates at angle `x`.
    pub fn eval(&self, x: f64) -> PotentialValue {
        self.eval_offset(reduce_offset(PI - x))
    }

    /// Evaluates at `x = π - delta` without forming `x`.
    pub fn eval_offset(&self, delta: f64) -> PotentialValue {
        let mut drop = 0.0;
        let mut dv = 0.0;
        let mut d2v = 0.0;
        for (m, &c) in self.coeffs.iter().enumerate().skip(1) {
            let mf = m as f64;
            let signed = if m % 2 == 0 { c } else { -c };
            let half = (0.5 * mf * delta).sin();
            drop += signed * half * half;
            dv += mf * signed * (mf * delta).sin();
            d2v -= mf * mf * signed * (mf * delta).cos();
        }
        PotentialValue {
            v: self.value_at_max - 2.0 * drop,
            dv,
            d2v,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).v
    }

    /// `-2 V(π - delta)`, the squared heteroclinic speed at offset `delta`.
    pub fn separatrix_speed_sq(&self, delta: f64) -> f64 {
        -2.0 * self.eval_offset(delta).v
    }

    /// `V''(π)`.
    pub fn curvature_at_max(&self) -> f64 {
        self.eval_offset(0.0).d2v
    }

    /// Saddle exponent `sqrt(-V''(π))`.
    pub fn saddle_exponent(&self) -> Result<f64> {
        let c = self.curvature_at_max();
        if c < 0.0 {
            Ok((-c).sqrt())
        } else {
            Err(Error::DegenerateMaximum(c))
        }
    }

    /// Minimum of `V''` on a uniform grid of one period.
    pub fn min_curvature(&self, grid: usize) -> f64 {
        (0..grid.max(16))
            .map(|i| self.eval(-PI + TAU * i as f64 / grid.max(16) as f64).d2v)
            .fold(f64::INFINITY, f64::min)
    }
}

fn alternating_sum(coeffs: &[f64]) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(m, c)| if m % 2 == 0 { *c } else { -*c })
        .sum()
}

/// Reduces an offset from the maximum into `(-π, π]`.
fn reduce_offset(delta: f64) -> f64 {
    let r = delta.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Builds a potential from a family name and its parameters.
pub fn make_potential(name: &str, params: &[f64]) -> Result<Potential> {
    match name {
        "pendulum" => Ok(Potential::pendulum()),
        "cos3" => Ok(Potential::cos3()),
        "fourier" => Potential::fourier(params),
        other => Err(Error::UnknownPotential(other.to_string())),
    }
}

impl FromStr for Potential {
    type Err = Error;

    /// Parses `pendulum`, `cos3` or `fourier:c0,c1,...`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.split_once(':') {
            Some(("fourier", list)) => {
                let coeffs = list
                    .split(',')
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse::<f64>().map_err(|_| Error::BadCoefficient(t.to_string())))
                    .collect::<Result<Vec<_>>>()?;
                Potential::fourier(&coeffs)
            }
            Some((other, _)) => Err(Error::UnknownPotential(other.to_string())),
            None => make_potential(s, &[]),
        }
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.name.as_str() {
            "pendulum" | "cos3" => f.write_str(&self.name),
            _ => {
                f.write_str("fourier:")?;
                for (i, c) in self.coeffs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
        }
    }
}

/// Coupling strength together with the saddle exponent and the internal
/// frequency of the relative coordinate near the maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub kappa: f64,
    pub lambda_saddle: f64,
    pub omega: f64,
}

impl SystemParams {
    /// ln-E period of the leading small-energy trace oscillation, `2πλ/ω`.
    pub fn log_period(&self) -> f64 {
        TAU * self.lambda_saddle / self.omega
    }
}

/// Derives `λ = sqrt(-V''(π))` and `ω = sqrt(2κ + V''(π))`.
pub fn system_params(p: &Potential, kappa: f64) -> Result<SystemParams> {
    let curvature = p.curvature_at_max();
    let lambda_saddle = p.saddle_exponent()?;
    let omega_sq = 2.0 * kappa + curvature;
    if !(omega_sq > 0.0) {
        return Err(Error::FrequencyCondition {
            kappa,
            threshold: -curvature / 2.0,
        });
    }
    Ok(SystemParams {
        kappa,
        lambda_saddle,
        omega: omega_sq.sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Angle at which the check failed, if any.
    pub witness: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub potential: String,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

const VALUE_TOL: f64 = 1e-12;

/// Checks periodicity, normalization at π, a nondegenerate maximum, the
/// absence of other global maxima, and derivative consistency on a grid.
pub fn validate(p: &Potential, grid_points: usize) -> ValidationReport {
    let n = grid_points.max(64);
    let grid: Vec<f64> = (0..n).map(|i| -PI + TAU * (i as f64 + 0.5) / n as f64).collect();
    let mut checks = Vec::new();

    let raw = |x: f64| -> f64 {
        p.coeffs
            .iter()
            .enumerate()
            .map(|(m, c)| c * (m as f64 * x).cos())
            .sum::<f64>()
            - p.shift
    };
    let worst_period = grid
        .iter()
        .map(|&x| (x, (raw(x + TAU) - raw(x)).abs()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0.0, 0.0));
    checks.push(Check {
        name: "periodic",
        passed: worst_period.1 <= VALUE_TOL,
        witness: (worst_period.1 > VALUE_TOL).then_some(worst_period.0),
        detail: format!("max |V(x+2π)-V(x)| = {:.3e}", worst_period.1),
    });

    let at_pi = p.eval_offset(0.0).v;
    checks.push(Check {
        name: "zero_at_max",
        passed: at_pi.abs() <= VALUE_TOL,
        witness: (at_pi.abs() > VALUE_TOL).then_some(PI),
        detail: format!("V(π) = {at_pi:.6e}"),
    });

    let curvature = p.curvature_at_max();
    let h = 1e-3;
    let fd_curvature = (p.eval_offset(h).v - 2.0 * at_pi + p.eval_offset(-h).v) / (h * h);
    let nondegenerate = curvature < -1e-9 && fd_curvature < -1e-6;
    checks.push(Check {
        name: "nondegenerate_max",
        passed: nondegenerate,
        witness: (!nondegenerate).then_some(PI),
        detail: format!("V''(π) = {curvature:.6e} (finite difference {fd_curvature:.6e})"),
    });

    // Away from ±π the potential must stay strictly below its maximum.
    let exclusion = 1e-3;
    let bad = grid
        .iter()
        .copied()
        .filter(|x| PI - x.abs() > exclusion)
        .find(|&x| p.value(x) >= at_pi);
    checks.push(Check {
        name: "unique_max",
        passed: bad.is_none(),
        witness: bad,
        detail: match bad {
            Some(x) => format!("V({x:.6}) = {:.6e} >= V(π)", p.value(x)),
            None => "V(x) < V(π) away from ±π".to_string(),
        },
    });

    let hd = 1e-4;
    let mut worst = (0.0, 0.0);
    for &x in &grid {
        let e = p.eval(x);
        let d1 = (p.value(x + hd) - p.value(x - hd)) / (2.0 * hd);
        let d2 = (p.eval(x + hd).dv - p.eval(x - hd).dv) / (2.0 * hd);
        let scale = 1.0 + e.dv.abs().max(e.d2v.abs());
        let err = ((d1 - e.dv).abs().max((d2 - e.d2v).abs())) / scale;
        if err > worst.1 {
            worst = (x, err);
        }
    }
    checks.push(Check {
        name: "derivatives",
        passed: worst.1 <= 1e-6,
        witness: (worst.1 > 1e-6).then_some(worst.0),
        detail: format!("max finite-difference mismatch {:.3e}", worst.1),
    });

    ValidationReport {
        potential: p.to_string(),
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pendulum_constants() {
        let p = Potential::pendulum();
        assert!(p.value(PI).abs() < 1e-15);
        assert!((p.curvature_at_max() + 1.0).abs() < 1e-15);
        assert!((p.value(0.0) + 2.0).abs() < 1e-15);
    }

    #[test]
    fn cos3_curvature_matches_symbolic_derivative() {
        // d²/dx² (-1 - cos³x) = 3 cos x (3 cos²x - 2), which is -3 at π.
        let p = Potential::cos3();
        assert!(p.value(PI).abs() < 1e-15);
        assert!((p.curvature_at_max() + 3.0).abs() < 1e-13);
        for &x in &[0.0, 0.3, 1.1, 2.5, -2.0] {
            let c: f64 = f64::cos(x);
            assert!((p.value(x) - (-1.0 - c * c * c)).abs() < 1e-14);
            assert!((p.eval(x).d2v - 3.0 * c * (3.0 * c * c - 2.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn fourier_reproduces_pendulum() {
        let f = Potential::fourier(&[0.0, -1.0]).unwrap();
        let p = Potential::pendulum();
        for &x in &[0.0, PI / 2.0, PI] {
            let (a, b) = (f.eval(x), p.eval(x));
            assert!((a.v - b.v).abs() < 1e-12);
            assert!((a.dv - b.dv).abs() < 1e-12);
            assert!((a.d2v - b.d2v).abs() < 1e-12);
        }
    }

    #[test]
    fn builder_errors() {
        assert!(matches!(make_potential("quartic", &[]), Err(Error::UnknownPotential(_))));
        assert!(matches!(make_potential("fourier", &[]), Err(Error::EmptyCoefficients)));
        assert!(matches!("fourier:".parse::<Potential>(), Err(Error::EmptyCoefficients)));
        assert!(matches!("fourier:1,x".parse::<Potential>(), Err(Error::BadCoefficient(_))));
    }

    #[test]
    fn spec_strings_round_trip() {
        for s in ["pendulum", "cos3", "fourier:0,-1,0.25"] {
            let p: Potential = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
    }

    #[test]
    fn offset_form_is_accurate_near_max() {
        let p = Potential::pendulum();
        let d: f64 = 1e-9;
        // -1 - cos(π - d) = -(1 - cos d) = -2 sin²(d/2)
        let exact = -2.0 * (0.5 * d).sin().powi(2);
        assert!((p.eval_offset(d).v / exact - 1.0).abs() < 1e-12);
    }

    #[test]
    fn validation_outcomes() {
        assert!(validate(&Potential::pendulum(), 256).all_passed());
        assert!(validate(&Potential::cos3(), 256).all_passed());

        let unshifted = Potential::raw_cosine_series("cos", &[0.0, 1.0]).unwrap();
        let r = validate(&unshifted, 128);
        let c = r.check("zero_at_max").unwrap();
        assert!(!c.passed);
        assert_eq!(c.witness, Some(PI));

        // -(1 + cos x)² = -3/2 - 2 cos x - cos(2x)/2
        let flat = Potential::fourier(&[-1.5, -2.0, -0.5]).unwrap();
        let r = validate(&flat, 128);
        assert!(r.check("zero_at_max").unwrap().passed);
        assert!(!r.check("nondegenerate_max").unwrap().passed);
        // finite-difference oracle: the second difference at π vanishes to O(h²)
        let h = 1e-3;
        let fd = (flat.value(PI + h) - 2.0 * flat.value(PI) + flat.value(PI - h)) / (h * h);
        assert!(fd.abs() < 1e-5);
    }

    #[test]
    fn system_params_examples() {
        let sp = system_params(&Potential::pendulum(), 1.0).unwrap();
        assert!((sp.lambda_saddle - 1.0).abs() < 1e-15);
        assert!((sp.omega - 1.0).abs() < 1e-15);

        match system_params(&Potential::pendulum(), 0.4) {
            Err(Error::FrequencyCondition { threshold, .. }) => assert!((threshold - 0.5).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }

        let sp = system_params(&Potential::cos3(), 2.0).unwrap();
        assert!((sp.lambda_saddle - 3f64.sqrt()).abs() < 1e-13);
        assert!((sp.omega - 1.0).abs() < 1e-13);
    }

    #[test]
    fn doubling_kappa_shifts_omega_squared() {
        let p = Potential::cos3();
        for kappa in [2.0, 3.5, 10.0] {
            let a = system_params(&p, kappa).unwrap();
            let b = system_params(&p, 2.0 * kappa).unwrap();
            let diff = b.omega * b.omega - a.omega * a.omega;
            assert!((diff - 2.0 * kappa).abs() < 1e-12);
        }
    }
}
