//! Complete elliptic integral of the first kind and Jacobi elliptic
//! functions for real arguments, both via the arithmetic-geometric mean.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_AGM: usize = 40;

/// Real modulus `k ∈ [0, 1)`, carried together with `k²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticModulus {
    pub k: f64,
    pub k2: f64,
}

impl EllipticModulus {
    pub fn from_k2(k2: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&k2) {
            return Err(Error::BadModulus(k2));
        }
        Ok(Self { k: k2.sqrt(), k2 })
    }

    pub fn from_k(k: f64) -> Result<Self> {
        Self::from_k2(k * k)
    }

    /// Complementary modulus `sqrt(1 - k²)`.
    pub fn complementary(&self) -> f64 {
        (1.0 - self.k2).sqrt()
    }
}

/// `K(k) = ∫₀^{π/2} dt / sqrt(1 - k² sin²t) = π / (2 AGM(1, k'))`.
pub fn complete_k(m: EllipticModulus) -> f64 {
    let mut a = 1.0;
    let mut b = m.complementary();
    for _ in 0..MAX_AGM {
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    FRAC_PI_2 / a
}

/// Amplitude and the three Jacobi functions at one argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobi {
    pub am: f64,
    pub sn: f64,
    pub cn: f64,
    pub dn: f64,
}

/// Jacobi amplitude and `sn, cn, dn` by the descending Landen (AGM) scheme.
pub fn jacobi(u: f64, m: EllipticModulus) -> Jacobi {
    if m.k2 == 0.0 {
        return Jacobi { am: u, sn: u.sin(), cn: u.cos(), dn: 1.0 };
    }
    let mut a = [0.0f64; MAX_AGM + 1];
    let mut c = [0.0f64; MAX_AGM + 1];
    a[0] = 1.0;
    c[0] = m.k;
    let mut b = m.complementary();
    let mut n = 0;
    while n < MAX_AGM && c[n].abs() > 1e-17 {
        let (an, bn) = (a[n], b);
        a[n + 1] = 0.5 * (an + bn);
        c[n + 1] = 0.5 * (an - bn);
        b = (an * bn).sqrt();
        n += 1;
    }
    let mut phi = (1u64 << n) as f64 * a[n] * u;
    for j in (1..=n).rev() {
        phi = 0.5 * (phi + (c[j] / a[j] * phi.sin()).asin());
    }
    let sn = phi.sin();
    Jacobi {
        am: phi,
        sn,
        cn: phi.cos(),
        dn: (1.0 - m.k2 * sn * sn).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;

    fn k_by_quadrature(k2: f64) -> f64 {
        quad::integrate(|t: f64| 1.0 / (1.0 - k2 * t.sin().powi(2)).sqrt(), 0.0, FRAC_PI_2, 1e-15, 1e-15)
            .unwrap()
            .value
    }

    #[test]
    fn k_at_zero_modulus() {
        assert_eq!(complete_k(EllipticModulus::from_k2(0.0).unwrap()), FRAC_PI_2);
    }

    #[test]
    fn k_matches_quadrature() {
        for k2 in [0.1, 0.5, 0.9, 0.99] {
            let exact = k_by_quadrature(k2);
            let agm = complete_k(EllipticModulus::from_k2(k2).unwrap());
            assert!((agm / exact - 1.0).abs() < 1e-12, "k2={k2}: {agm} vs {exact}");
        }
        let half = complete_k(EllipticModulus::from_k2(0.5).unwrap());
        assert!((half - 1.854_074_677).abs() < 1e-9);
    }

    #[test]
    fn k_log_singularity() {
        let k2 = 1.0 - 1e-8;
        let m = EllipticModulus::from_k2(k2).unwrap();
        let diff = complete_k(m) - (4.0 / m.complementary()).ln();
        // next term of the expansion is O(k'^2 ln k') ≈ 1e-7
        assert!(diff.abs() < 1e-6, "{diff}");
    }

    #[test]
    fn modulus_out_of_range() {
        assert!(EllipticModulus::from_k2(1.0).is_err());
        assert!(EllipticModulus::from_k2(-0.1).is_err());
    }

    #[test]
    fn jacobi_special_values() {
        let m = EllipticModulus::from_k2(0.7).unwrap();
        let j = jacobi(0.0, m);
        assert_eq!((j.am, j.sn, j.cn, j.dn), (0.0, 0.0, 1.0, 1.0));

        let m0 = EllipticModulus::from_k2(0.0).unwrap();
        let j = jacobi(1.3, m0);
        assert!((j.sn - 1.3f64.sin()).abs() < 1e-15 && j.dn == 1.0);

        let m = EllipticModulus::from_k2(0.5).unwrap();
        let j = jacobi(complete_k(m), m);
        assert!((j.sn - 1.0).abs() < 1e-12);
        assert!((j.am - FRAC_PI_2).abs() < 1e-7);
    }

    #[test]
    fn amplitude_inverts_the_defining_integral() {
        for k2 in [0.2, 0.5, 0.95] {
            let m = EllipticModulus::from_k2(k2).unwrap();
            for u in [0.3, 1.0, 2.2, 5.0] {
                let am = jacobi(u, m).am;
                let back = quad::integrate(
                    |t: f64| 1.0 / (1.0 - k2 * t.sin().powi(2)).sqrt(),
                    0.0,
                    am,
                    1e-15,
                    1e-15,
                )
                .unwrap()
                .value;
                assert!((back - u).abs() < 1e-10, "k2={k2} u={u}: {back}");
            }
        }
    }

    #[test]
    fn sn_has_period_4k() {
        let m = EllipticModulus::from_k2(0.8).unwrap();
        let period = 4.0 * complete_k(m);
        for u in [0.1, 0.9, 2.0, -1.7] {
            assert!((jacobi(u, m).sn - jacobi(u + period, m).sn).abs() < 1e-9);
        }
    }
}
