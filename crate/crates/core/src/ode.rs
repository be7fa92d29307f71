//! Adaptive Dormand–Prince 5(4) integrator for small real systems.
//!
//! The error norm is the componentwise maximum, so duplicating components
//! (as in the period-2 chain embedding) leaves the step sequence unchanged.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Step-size controller settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrator {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Upper bound on |h|; zero means unbounded.
    pub max_step: f64,
}

impl Default for Integrator {
    fn default() -> Self {
        Self::with_tol(1e-12)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl Integrator {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            max_steps: 2_000_000,
            max_step: 0.0,
        }
    }

    pub fn max_step(mut self, h: f64) -> Self {
        self.max_step = h;
        self
    }

    /// Advances `y` from `t0` to `t1` (either direction).
    pub fn integrate<F>(&self, mut f: F, t0: f64, y: &mut [f64], t1: f64) -> Result<Stats>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let mut stats = Stats::default();
        self.advance(&mut f, t0, y, t1, &mut stats, None)?;
        Ok(stats)
    }

    /// Advances through each of `times` in order, calling `observe` at each.
    /// `times` must be monotone in the direction of integration from `t0`.
    pub fn integrate_sampled<F, O>(
        &self,
        mut f: F,
        t0: f64,
        y: &mut [f64],
        times: &[f64],
        mut observe: O,
    ) -> Result<Stats>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        O: FnMut(f64, &[f64]),
    {
        let mut stats = Stats::default();
        let mut t = t0;
        let mut h_hint = None;
        for &target in times {
            h_hint = self.advance(&mut f, t, y, target, &mut stats, h_hint)?;
            t = target;
            observe(t, y);
        }
        Ok(stats)
    }

    fn advance<F>(
        &self,
        f: &mut F,
        t0: f64,
        y: &mut [f64],
        t1: f64,
        stats: &mut Stats,
        h_hint: Option<f64>,
    ) -> Result<Option<f64>>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        let span = t1 - t0;
        if span == 0.0 {
            return Ok(h_hint);
        }
        let dir = span.signum();
        let mut k = vec![vec![0.0; n]; 7];
        let mut stage = vec![0.0; n];
        let mut y_new = vec![0.0; n];

        f(t0, y, &mut k[0]);
        stats.evaluations += 1;

        let mut h = match h_hint {
            Some(h) if h != 0.0 => h.abs().min(span.abs()) * dir,
            _ => initial_step(y, &k[0], self.rtol, self.atol).min(span.abs()) * dir,
        };
        if self.max_step > 0.0 && h.abs() > self.max_step {
            h = self.max_step * dir;
        }
        let mut t = t0;
        let mut last_accepted = h;
        let mut steps = 0usize;

        loop {
            let remaining = t1 - t;
            if remaining * dir <= 0.0 {
                break;
            }
            let mut hit_end = false;
            if (h - remaining) * dir >= 0.0 {
                h = remaining;
                hit_end = true;
            }
            if t + h == t {
                return Err(Error::Integrator { t, reason: "step size underflow" });
            }
            steps += 1;
            if steps > self.max_steps {
                return Err(Error::Integrator { t, reason: "too many steps" });
            }

            for i in 0..n {
                stage[i] = y[i] + h * A21 * k[0][i];
            }
            let (head, tail) = k.split_at_mut(1);
            f(t + C2 * h, &stage, &mut tail[0]);
            for i in 0..n {
                stage[i] = y[i] + h * (A31 * head[0][i] + A32 * tail[0][i]);
            }
            f(t + C3 * h, &stage, &mut tail[1]);
            for i in 0..n {
                stage[i] = y[i] + h * (A41 * head[0][i] + A42 * tail[0][i] + A43 * tail[1][i]);
            }
            f(t + C4 * h, &stage, &mut tail[2]);
            for i in 0..n {
                stage[i] = y[i]
                    + h * (A51 * head[0][i] + A52 * tail[0][i] + A53 * tail[1][i] + A54 * tail[2][i]);
            }
            f(t + C5 * h, &stage, &mut tail[3]);
            for i in 0..n {
                stage[i] = y[i]
                    + h * (A61 * head[0][i]
                        + A62 * tail[0][i]
                        + A63 * tail[1][i]
                        + A64 * tail[2][i]
                        + A65 * tail[3][i]);
            }
            f(t + h, &stage, &mut tail[4]);
            for i in 0..n {
                y_new[i] = y[i]
                    + h * (B1 * head[0][i]
                        + B3 * tail[1][i]
                        + B4 * tail[2][i]
                        + B5 * tail[3][i]
                        + B6 * tail[4][i]);
            }
            f(t + h, &y_new, &mut tail[5]);
            stats.evaluations += 6;

            let mut err: f64 = 0.0;
            for i in 0..n {
                let e = h
                    * (E1 * head[0][i]
                        + E3 * tail[1][i]
                        + E4 * tail[2][i]
                        + E5 * tail[3][i]
                        + E6 * tail[4][i]
                        + E7 * tail[5][i]);
                let scale = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((e / scale).abs());
            }
            if !err.is_finite() {
                return Err(Error::Integrator { t, reason: "non-finite state" });
            }

            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                stats.accepted += 1;
                y.copy_from_slice(&y_new);
                let (first, rest) = k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
                if hit_end {
                    t = t1;
                } else {
                    t += h;
                    last_accepted = h;
                }
                h *= factor;
            } else {
                stats.rejected += 1;
                h *= factor.min(1.0);
            }
            if self.max_step > 0.0 && h.abs() > self.max_step {
                h = self.max_step * dir;
            }
        }
        Ok(Some(last_accepted))
    }
}

fn initial_step(y: &[f64], dy: &[f64], rtol: f64, atol: f64) -> f64 {
    let mut d0: f64 = 0.0;
    let mut d1: f64 = 0.0;
    for (yi, fi) in y.iter().zip(dy) {
        let sc = atol + rtol * yi.abs();
        d0 = d0.max((yi / sc).abs());
        d1 = d1.max((fi / sc).abs());
    }
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.clamp(1e-8, 0.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_full_turn() {
        let mut y = [1.0, 0.0];
        let ode = Integrator::with_tol(1e-12);
        ode.integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &mut y,
            2.0 * std::f64::consts::PI,
        )
        .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-10);
        assert!(y[1].abs() < 1e-10);
    }

    #[test]
    fn backward_matches_exponential() {
        let mut y = [1.0];
        Integrator::with_tol(1e-13)
            .integrate(|_, y, dy| dy[0] = y[0], 0.0, &mut y, -3.0)
            .unwrap();
        assert!((y[0] - (-3.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn sampled_hits_every_time() {
        let mut y = [0.0];
        let mut seen = Vec::new();
        Integrator::with_tol(1e-12)
            .integrate_sampled(|t, _, dy| dy[0] = t.cos(), 0.0, &mut y, &[0.5, 1.0, 2.0], |t, y| {
                seen.push((t, y[0]))
            })
            .unwrap();
        assert_eq!(seen.len(), 3);
        for (t, v) in seen {
            assert!((v - t.sin()).abs() < 1e-11);
        }
    }
}
