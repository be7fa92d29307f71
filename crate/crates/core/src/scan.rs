//! Energy sweeps of the relative-channel trace and detection of the
//! instability intervals they reveal.

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::{classify, monodromy_w, Monodromy, StabilityClass, TOL_CLASS};
use crate::potential::{system_params, Potential};

pub const COLLAPSE_TOL: f64 = 1e-4;
/// Relative bisection tolerance on interval endpoints, `1e-6 · min(1, E)`.
pub const ENDPOINT_TOL: f64 = 1e-6;
/// Local maxima of `|tr|` within this band below 2 are refined as
/// candidate tangencies.
const TANGENCY_BAND: f64 = 0.25;
const GOLDEN_ITERS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grid {
    Log,
    Linear,
}

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log" => Ok(Grid::Log),
            "linear" => Ok(Grid::Linear),
            other => Err(Error::Config(format!("unknown grid `{other}` (expected log or linear)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub potential: Potential,
    pub kappa: f64,
    pub e_min: f64,
    pub e_max: f64,
    pub grid: Grid,
    pub points: usize,
    pub tol: f64,
    pub tol_class: f64,
    pub collapse_tol: f64,
    /// `None` uses every available core.
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(potential: Potential, kappa: f64, e_min: f64, e_max: f64, points: usize) -> Self {
        Self {
            potential,
            kappa,
            e_min,
            e_max,
            grid: Grid::Log,
            points,
            tol: 1e-12,
            tol_class: TOL_CLASS,
            collapse_tol: COLLAPSE_TOL,
            workers: None,
            out: None,
            svg: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e_min > 0.0 && self.e_max > self.e_min && self.e_max.is_finite()) {
            return Err(Error::Config(format!(
                "energy range must satisfy 0 < emin < emax, got [{}, {}]",
                self.e_min, self.e_max
            )));
        }
        if self.points < 2 {
            return Err(Error::Config(format!("need at least 2 points, got {}", self.points)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        system_params(&self.potential, self.kappa)?;
        Ok(())
    }

    pub fn energies(&self) -> Vec<f64> {
        let n = self.points;
        let mut out: Vec<f64> = (0..n)
            .map(|i| {
                let s = i as f64 / (n - 1) as f64;
                match self.grid {
                    Grid::Log => (self.e_min.ln() + s * (self.e_max / self.e_min).ln()).exp(),
                    Grid::Linear => self.e_min + s * (self.e_max - self.e_min),
                }
            })
            .collect();
        out[0] = self.e_min;
        out[n - 1] = self.e_max;
        out
    }

    fn trace_at(&self, energy: f64) -> Result<f64> {
        Ok(monodromy_w(&self.potential, self.kappa, energy, self.tol)?.trace())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub energy: f64,
    pub ln_e: f64,
    pub trace: f64,
    pub det_residual: f64,
    /// `None` when the point failed; see `failure`.
    pub class: Option<StabilityClass>,
    pub failure: Option<String>,
}

impl TraceSample {
    pub fn from_monodromy(energy: f64, m: &Monodromy, tol_class: f64) -> Self {
        let (class, failure) = match classify(m, tol_class) {
            Ok(c) => (Some(c), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Self {
            energy,
            ln_e: energy.ln(),
            trace: m.trace(),
            det_residual: m.det_residual,
            class,
            failure,
        }
    }

    pub fn failed(energy: f64, err: &Error) -> Self {
        Self {
            energy,
            ln_e: energy.ln(),
            trace: f64::NAN,
            det_residual: f64::NAN,
            class: None,
            failure: Some(err.to_string()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.failure.is_none()
    }
}

#[cfg(feature = "parallel")]
fn map_points<T, F>(points: &[f64], workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(f64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    match workers {
        Some(1) => Ok(points.iter().map(|&e| f(e)).collect()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            Ok(pool.install(|| points.par_iter().map(|&e| f(e)).collect()))
        }
        None => Ok(points.par_iter().map(|&e| f(e)).collect()),
    }
}

#[cfg(not(feature = "parallel"))]
fn map_points<T, F>(points: &[f64], _workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    F: Fn(f64) -> T,
{
    Ok(points.iter().map(|&e| f(e)).collect())
}

/// Evaluates `f` on every energy, in order, spreading the work over
/// `workers` threads when the `parallel` feature is on.
pub fn par_map<T, F>(energies: &[f64], workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(f64) -> T + Sync + Send,
{
    map_points(energies, workers, f)
}

/// One sample per grid point; a failing point is recorded and the sweep
/// continues.
pub fn scan_trace(cfg: &RunConfig) -> Result<Vec<TraceSample>> {
    cfg.validate()?;
    scan_energies(cfg, &cfg.energies())
}

/// Same as [`scan_trace`] on caller-chosen energies.
pub fn scan_energies(cfg: &RunConfig, energies: &[f64]) -> Result<Vec<TraceSample>> {
    par_map(energies, cfg.workers, |e| {
        match monodromy_w(&cfg.potential, cfg.kappa, e, cfg.tol) {
            Ok(m) => TraceSample::from_monodromy(e, &m, cfg.tol_class),
            Err(err) => TraceSample::failed(e, &err),
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstabilityInterval {
    pub e_lo: f64,
    pub e_hi: f64,
    pub sign: i8,
    pub collapsed: bool,
}

impl InstabilityInterval {
    pub fn width(&self) -> f64 {
        self.e_hi - self.e_lo
    }

    /// Midpoint in `ln E`.
    pub fn ln_mid(&self) -> f64 {
        0.5 * (self.e_lo.ln() + self.e_hi.ln())
    }
}

/// Thresholds used when turning a sweep into intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalOptions {
    pub tol_class: f64,
    pub collapse_tol: f64,
    pub endpoint_tol: f64,
}

impl Default for IntervalOptions {
    fn default() -> Self {
        Self {
            tol_class: TOL_CLASS,
            collapse_tol: COLLAPSE_TOL,
            endpoint_tol: ENDPOINT_TOL,
        }
    }
}

fn check_sorted(samples: &[TraceSample]) -> Result<()> {
    if samples.windows(2).all(|w| w[0].energy < w[1].energy) {
        Ok(())
    } else {
        Err(Error::Unsorted)
    }
}

/// Refines the crossing of `|tr| = 2` between `inside` (|tr| > 2) and
/// `outside` by bisection in `E`.
fn bisect_edge<F>(trace: &F, mut inside: f64, mut outside: f64, rel_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    for _ in 0..200 {
        let scale = inside.min(outside).min(1.0);
        if (inside - outside).abs() <= rel_tol * scale {
            break;
        }
        let mid = 0.5 * (inside + outside);
        if trace(mid)?.abs() > 2.0 {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    Ok(0.5 * (inside + outside))
}

/// Location and value of the largest `|tr|` on `[lo, hi]`, by golden
/// section in `ln E`.
fn golden_peak<F>(trace: &F, lo: f64, hi: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = trace(x1.exp())?;
    let mut f2 = trace(x2.exp())?;
    for _ in 0..GOLDEN_ITERS {
        if f1.abs() >= f2.abs() {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = trace(x1.exp())?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = trace(x2.exp())?;
        }
    }
    Ok(if f1.abs() >= f2.abs() { (x1.exp(), f1) } else { (x2.exp(), f2) })
}

fn sign_of(trace: f64) -> i8 {
    if trace < 0.0 {
        -1
    } else {
        1
    }
}

/// Interval detection against an arbitrary trace function; `samples` must
/// be sorted by energy and are assumed to be values of `trace`.
pub fn find_intervals_with<F>(samples: &[TraceSample], trace: F, opts: IntervalOptions) -> Result<Vec<InstabilityInterval>>
where
    F: Fn(f64) -> Result<f64>,
{
    check_sorted(samples)?;
    let n = samples.len();
    let mag = |i: usize| samples[i].trace.abs();
    let unstable = |i: usize| mag(i) > 2.0;
    let mut out = Vec::new();

    let mut i = 0;
    while i < n {
        if !unstable(i) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < n && unstable(j + 1) {
            j += 1;
        }
        let e_lo = if i == 0 {
            samples[0].energy
        } else {
            bisect_edge(&trace, samples[i].energy, samples[i - 1].energy, opts.endpoint_tol)?
        };
        let e_hi = if j == n - 1 {
            samples[j].energy
        } else {
            bisect_edge(&trace, samples[j].energy, samples[j + 1].energy, opts.endpoint_tol)?
        };
        out.push(InstabilityInterval {
            e_lo,
            e_hi,
            sign: sign_of(samples[i].trace),
            collapsed: e_hi - e_lo < opts.collapse_tol,
        });
        i = j + 1;
    }

    for i in 1..n.saturating_sub(1) {
        let (a, b, c) = (mag(i - 1), mag(i), mag(i + 1));
        let is_peak = b <= 2.0 && a <= 2.0 && c <= 2.0 && b >= a && b >= c;
        if !is_peak || b < 2.0 - TANGENCY_BAND {
            continue;
        }
        let (e_star, tr_star) = golden_peak(&trace, samples[i - 1].energy, samples[i + 1].energy)?;
        let excess = tr_star.abs() - 2.0;
        if excess < -opts.tol_class {
            continue;
        }
        let (e_lo, e_hi) = if excess > opts.tol_class {
            (
                bisect_edge(&trace, e_star, samples[i - 1].energy, opts.endpoint_tol)?,
                bisect_edge(&trace, e_star, samples[i + 1].energy, opts.endpoint_tol)?,
            )
        } else {
            (e_star, e_star)
        };
        out.push(InstabilityInterval {
            e_lo,
            e_hi,
            sign: sign_of(tr_star),
            collapsed: e_hi - e_lo < opts.collapse_tol,
        });
    }
    out.sort_by(|x, y| x.e_lo.total_cmp(&y.e_lo));
    Ok(out)
}

/// Instability intervals of a sweep, with endpoints re-integrated to
/// `1e-6 · min(1, E)` and tangencies reported as collapsed intervals.
pub fn find_intervals(samples: &[TraceSample], cfg: &RunConfig) -> Result<Vec<InstabilityInterval>> {
    let opts = IntervalOptions {
        tol_class: cfg.tol_class,
        collapse_tol: cfg.collapse_tol,
        ..IntervalOptions::default()
    };
    find_intervals_with(samples, |e| cfg.trace_at(e), opts)
}

/// A resonance where `|tr F_E|` touches 2 without crossing, with the
/// distance of the full monodromy from `±I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tangency {
    pub energy: f64,
    pub trace: f64,
    pub sign: i8,
    pub distance: f64,
}

/// The first `count` tangencies below `cfg.e_max`, counted downward in
/// energy, located on the sweep `cfg` and certified by `‖F_E ∓ I‖_F`.
pub fn collapsed_gaps(cfg: &RunConfig, count: usize) -> Result<Vec<Tangency>> {
    let samples = scan_trace(cfg)?;
    let intervals = find_intervals(&samples, cfg)?;
    let mut found = Vec::new();
    for iv in intervals.iter().rev().filter(|iv| iv.collapsed && iv.e_hi < cfg.e_max) {
        let e = 0.5 * (iv.e_lo + iv.e_hi);
        let m = monodromy_w(&cfg.potential, cfg.kappa, e, cfg.tol)?;
        found.push(Tangency {
            energy: e,
            trace: m.trace(),
            sign: iv.sign,
            distance: m.distance_to_identity(f64::from(iv.sign)),
        });
        if found.len() == count {
            break;
        }
    }
    Ok(found)
}
