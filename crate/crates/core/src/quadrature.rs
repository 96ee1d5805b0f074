//! Gauss–Legendre rules on [-1, 1] in double and multiprecision.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::mp::{MpReal, Precision};

/// Nodes and weights of the `n`-point rule, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_f64(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_f64(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// P_n(z) and P_n'(z) by the three-term recurrence.
fn legendre_f64(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

pub type MpRule = Arc<(Vec<MpReal>, Vec<MpReal>)>;

/// Multiprecision rule, refined by Newton from the double-precision nodes.
/// Rules are cached per (n, precision).
pub fn gauss_legendre_mp(n: usize, prec: Precision) -> MpRule {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u32), MpRule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&(n, prec.bits())) {
        return r.clone();
    }
    let rule = Arc::new(build_mp(n, prec));
    cache.lock().unwrap().insert((n, prec.bits()), rule.clone());
    rule
}

fn build_mp(n: usize, prec: Precision) -> (Vec<MpReal>, Vec<MpReal>) {
    let work = Precision::custom(prec.bits() + 32);
    let (xf, _) = gauss_legendre(n);
    let m = n.div_ceil(2);
    let mut x = vec![MpReal::zero(prec); n];
    let mut w = vec![MpReal::zero(prec); n];
    let tol = work.epsilon() * 16.0;
    for i in 0..m {
        let mut z = MpReal::from_f64(xf[n - 1 - i], work);
        let mut dp = MpReal::one(work);
        for _ in 0..64 {
            let (p, d) = legendre_mp(n, &z);
            let dz = &p / &d;
            z -= &dz;
            dp = d;
            if dz.abs().to_f64() <= tol {
                break;
            }
        }
        let (_, d) = legendre_mp(n, &z);
        if !d.is_zero() {
            dp = d;
        }
        let one = MpReal::one(work);
        let wi = MpReal::from_i64(2, work) / ((&one - &(&z * &z)) * (&dp * &dp));
        x[i] = (-&z).with_precision(prec);
        x[n - 1 - i] = z.with_precision(prec);
        w[i] = wi.with_precision(prec);
        w[n - 1 - i] = wi.with_precision(prec);
    }
    if n % 2 == 1 {
        x[n / 2] = MpReal::zero(prec);
    }
    (x, w)
}

fn legendre_mp(n: usize, z: &MpReal) -> (MpReal, MpReal) {
    let p = z.precision();
    if n == 0 {
        return (MpReal::one(p), MpReal::zero(p));
    }
    let mut p0 = MpReal::one(p);
    let mut p1 = z.clone();
    for k in 2..=n {
        let a = &(z * &p1) * (2 * k - 1) as f64;
        let b = &p0 * (k - 1) as f64;
        let p2 = (a - &b) / MpReal::from_i64(k as i64, p);
        p0 = p1;
        p1 = p2;
    }
    let num = (&(z * &p1) - &p0) * n as f64;
    let den = &(z * z) - 1.0;
    (p1.clone(), num / &den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_integrate_polynomials() {
        for n in [1, 2, 5, 16, 33] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            // exact for degree 2n-1
            let d = 2 * n - 2;
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
            assert!((s - 2.0 / (d as f64 + 1.0)).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn multiprecision_rule_is_exact_to_working_precision() {
        let p = Precision::P256;
        let n = 20;
        let rule = gauss_legendre_mp(n, p);
        let (x, w) = (&rule.0, &rule.1);
        let d = 38;
        let mut s = MpReal::zero(p);
        for (xi, wi) in x.iter().zip(w) {
            s.add_mul(wi, &xi.powi(d));
        }
        let exact = MpReal::ratio(2, d as i64 + 1, p);
        assert!((s - &exact).abs().to_f64() < 1e-70);
    }
}
