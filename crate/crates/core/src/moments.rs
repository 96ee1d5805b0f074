//! Complex power moments `μ[m][n] = ∫_G z^n conj(z)^m dA` of an archipelago.
//!
//! Area integrals are reduced to boundary integrals by Green's theorem,
//!
//! ```text
//! μ[m][n] = 1/(2i(m+1)) ∮ z^n conj(z)^(m+1) dz,
//! ```
//!
//! and evaluated per island: in closed form for disks, by a convergent series
//! for lemniscate islands, exactly by Gauss–Legendre on polygon edges, and by
//! composite Gauss–Legendre with panel doubling on curved boundaries.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{ArchipelagoSpec, IslandSpec};
use crate::linalg::{cholesky_real, cholesky_solve_real, hermitian_pivots};
use crate::mp::{binomial, MpComplex, MpReal, Precision};
use crate::quadrature::gauss_legendre_mp;

/// Hermitian Gram matrix of power moments up to a fixed degree.
#[derive(Clone, Debug)]
pub struct MomentMatrix {
    degree: usize,
    prec: Precision,
    /// `mu[m][n]`, full square storage.
    mu: Vec<Vec<MpComplex>>,
    /// Non-fatal diagnostics (e.g. failed positive-definiteness check).
    pub warnings: Vec<String>,
}

/// Quadrature settings for curved boundaries.
#[derive(Clone, Debug)]
pub struct QuadConfig {
    pub precision: Precision,
    /// Relative tolerance for panel doubling; `None` picks one matched to
    /// the precision (1e-12 at 53 bits).
    pub tol: Option<f64>,
    pub nodes_per_panel: usize,
    pub initial_panels: usize,
    pub max_doublings: usize,
}

impl QuadConfig {
    pub fn new(precision: Precision) -> Self {
        QuadConfig { precision, tol: None, nodes_per_panel: 16, initial_panels: 4, max_doublings: 10 }
    }

    pub fn tolerance(&self) -> f64 {
        self.tol.unwrap_or_else(|| {
            if self.precision.bits() <= 53 {
                1e-12
            } else {
                2f64.powi(-(self.precision.bits() as i32 - 12))
            }
        })
    }
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig::new(Precision::DOUBLE)
    }
}

impl MomentMatrix {
    /// Build from full square storage, symmetrizing to exact Hermitian form.
    pub fn from_full(mu: Vec<Vec<MpComplex>>, prec: Precision) -> Result<Self> {
        let n = mu.len();
        if n == 0 || mu.iter().any(|r| r.len() != n) {
            return Err(Error::input("moment matrix must be square and nonempty"));
        }
        let mut out = mu;
        for m in 0..n {
            let d = out[m][m].re.clone();
            out[m][m] = MpComplex::from_real(d.with_precision(prec));
            for k in m + 1..n {
                let avg = (&out[m][k] + &out[k][m].conj()).scale(&MpReal::from_f64(0.5, prec));
                out[m][k] = avg.with_precision(prec);
                out[k][m] = out[m][k].conj();
            }
        }
        let mm = MomentMatrix { degree: n - 1, prec, mu: out, warnings: Vec::new() };
        if !(mm.mu[0][0].re > 0.0) {
            return Err(Error::input("μ[0][0] (total area) must be positive"));
        }
        Ok(mm)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn precision(&self) -> Precision {
        self.prec
    }

    /// `μ[m][n] = ∫ z^n conj(z)^m dA`.
    pub fn get(&self, m: usize, n: usize) -> &MpComplex {
        &self.mu[m][n]
    }

    pub fn rows(&self) -> &[Vec<MpComplex>] {
        &self.mu
    }

    pub fn get_c64(&self, m: usize, n: usize) -> C64 {
        self.mu[m][n].to_c64()
    }

    /// Leading block up to `degree`.
    pub fn truncated(&self, degree: usize) -> Result<Self> {
        if degree > self.degree {
            return Err(Error::precondition(format!(
                "cannot truncate degree {} moments to {degree}",
                self.degree
            )));
        }
        let mu = self.mu[..=degree].iter().map(|r| r[..=degree].to_vec()).collect();
        Ok(MomentMatrix { degree, prec: self.prec, mu, warnings: self.warnings.clone() })
    }

    /// Squared Cholesky pivots; `Err` names the first non-positive pivot.
    pub fn cholesky_pivots(&self) -> std::result::Result<Vec<MpReal>, usize> {
        match hermitian_pivots(&self.mu) {
            (p, None) => Ok(p),
            (_, Some(k)) => Err(k),
        }
    }

    fn check_positive_definite(&mut self) {
        if let Err(k) = self.cholesky_pivots() {
            self.warnings.push(format!(
                "moment matrix is not positive definite at {}-bit precision (pivot {k})",
                self.prec.bits()
            ));
        }
    }

    /// Moments of the archipelago translated by `d`, derived by binomial
    /// expansion; used to test translation equivariance.
    pub fn translated(&self, d: C64) -> Self {
        let p = self.prec;
        let n = self.degree;
        let dz = MpComplex::from_c64(d, p);
        let dzc = dz.conj();
        let pow = |z: &MpComplex, k: usize| z.powi(k as u32);
        let mut mu = vec![vec![MpComplex::zero(p); n + 1]; n + 1];
        for (m, row) in mu.iter_mut().enumerate() {
            for (q, out) in row.iter_mut().enumerate() {
                let mut acc = MpComplex::zero(p);
                for a in 0..=q {
                    for b in 0..=m {
                        let coef = binomial(q as u64, a as u64, p) * binomial(m as u64, b as u64, p);
                        let t = (&pow(&dz, q - a) * &pow(&dzc, m - b)).scale(&coef);
                        acc.add_mul(&t, &self.mu[b][a]);
                    }
                }
                *out = acc;
            }
        }
        MomentMatrix { degree: n, prec: p, mu, warnings: Vec::new() }
    }
}

/// Power moments of the archipelago up to `degree`.
pub fn compute_moments(arch: &ArchipelagoSpec, degree: usize, quad: &QuadConfig) -> Result<MomentMatrix> {
    arch.validate()?;
    let prec = quad.precision;
    let mut total = vec![vec![MpComplex::zero(prec); degree + 1]; degree + 1];
    for island in &arch.islands {
        let part = island_moments(island, degree, quad)?;
        for (trow, prow) in total.iter_mut().zip(part) {
            for (t, p) in trow.iter_mut().zip(prow) {
                *t += &p;
            }
        }
    }
    let mut mm = MomentMatrix::from_full(total, prec)?;
    mm.check_positive_definite();
    Ok(mm)
}

/// Moments of a single island (full square, not yet symmetrized).
pub fn island_moments(island: &IslandSpec, degree: usize, quad: &QuadConfig) -> Result<Vec<Vec<MpComplex>>> {
    island.validate()?;
    let prec = quad.precision;
    match island {
        IslandSpec::Disk { center, radius } => Ok(disk_moments(C64::new(center[0], center[1]), *radius, degree, prec)),
        IslandSpec::Lemniscate { m, r, island } => Ok(lemniscate_island_moments(*m, *r, *island, degree, prec)),
        IslandSpec::Polygon { vertices } => {
            let v: Vec<MpComplex> = vertices.iter().map(|p| MpComplex::from_f64(p[0], p[1], prec)).collect();
            Ok(polygon_moments(&v, degree, prec))
        }
        IslandSpec::Ellipse { .. } | IslandSpec::ArcPolygon { .. } => curved_moments(island, degree, quad),
    }
}

/// Closed form for the disk `|z - c| < ρ`:
/// `μ[p][q] = Σ_a C(q,a) C(p,a) c^(q-a) conj(c)^(p-a) π ρ^(2a+2)/(a+1)`.
pub fn disk_moments(center: C64, radius: f64, degree: usize, prec: Precision) -> Vec<Vec<MpComplex>> {
    let c = MpComplex::from_c64(center, prec);
    let cc = c.conj();
    let rho2 = MpReal::from_f64(radius, prec).powi(2);
    let pi = MpReal::pi(prec);
    let mut cpow = vec![MpComplex::one(prec)];
    let mut ccpow = vec![MpComplex::one(prec)];
    for k in 1..=degree {
        cpow.push(&cpow[k - 1] * &c);
        ccpow.push(&ccpow[k - 1] * &cc);
    }
    // π ρ^(2a+2)/(a+1)
    let mut radial = Vec::with_capacity(degree + 1);
    let mut rp = &pi * &rho2;
    for a in 0..=degree {
        radial.push(&rp / &MpReal::from_i64(a as i64 + 1, prec));
        rp = rp * &rho2;
    }
    (0..=degree)
        .into_par_iter()
        .map(|p| {
            (0..=degree)
                .map(|q| {
                    let mut acc = MpComplex::zero(prec);
                    for a in 0..=p.min(q) {
                        let coef = binomial(q as u64, a as u64, prec) * binomial(p as u64, a as u64, prec) * &radial[a];
                        let t = (&cpow[q - a] * &ccpow[p - a]).scale(&coef);
                        acc += &t;
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// Moments of island `j` of `|z^m - 1| < r^m` by the substitution
/// `w = z^m - 1`, which maps the island onto `|w| < γ = r^m`:
///
/// ```text
/// μ[p][q] = ω^(q-p) π γ² / m² Σ_k C(a,k) C(b,k) γ^(2k) / (k+1),
/// a = (q+1)/m - 1, b = (p+1)/m - 1, ω = e^(2πij/m).
/// ```
///
/// The series converges geometrically and is summed to the working precision.
pub fn lemniscate_island_moments(m: u32, r: f64, j: u32, degree: usize, prec: Precision) -> Vec<Vec<MpComplex>> {
    let work = Precision::custom(prec.bits() + 32);
    let mm = MpReal::from_i64(m as i64, work);
    let gamma = MpReal::from_f64(r, work).powi(m as i32);
    let g2 = &gamma * &gamma;
    let pi = MpReal::pi(work);
    let pref = &(&pi * &g2) / &(&mm * &mm);
    let eps = work.epsilon();
    let two_pi = pi.mul_pow2(1);
    // ω^e for e in 0..m
    let omegas: Vec<MpComplex> = (0..m)
        .map(|e| {
            let th = &two_pi * &MpReal::ratio((j as i64 * e as i64) % m as i64, m as i64, work);
            MpComplex::cis(&th)
        })
        .collect();
    // Upper bound on the number of terms: γ^(2k) < eps with polynomial slack.
    let g2f = g2.to_f64();
    let kmax = ((eps.ln() / g2f.ln()).ceil() as usize + 64 + 2 * degree / m as usize).max(8);
    (0..=degree)
        .into_par_iter()
        .map(|p| {
            let b = &MpReal::ratio(p as i64 + 1, m as i64, work) - 1.0;
            (0..=degree)
                .map(|q| {
                    let a = &MpReal::ratio(q as i64 + 1, m as i64, work) - 1.0;
                    let s = binomial_series(&a, &b, &g2, kmax, eps);
                    let e = ((q as i64 - p as i64).rem_euclid(m as i64)) as usize;
                    omegas[e].scale(&(&s * &pref)).with_precision(prec)
                })
                .collect()
        })
        .collect()
}

/// `Σ_k C(a,k) C(b,k) x^k / (k+1)` for real `a`, `b` and `0 < x < 1`.
fn binomial_series(a: &MpReal, b: &MpReal, x: &MpReal, kmax: usize, eps: f64) -> MpReal {
    let p = x.precision();
    let mut term = MpReal::one(p); // C(a,k) C(b,k) x^k
    let mut sum = MpReal::one(p);
    let mut small = 0;
    for k in 0..kmax {
        let kf = MpReal::from_i64(k as i64, p);
        let fa = a - &kf;
        let fb = b - &kf;
        let k1 = MpReal::from_i64(k as i64 + 1, p);
        term = term * &fa * &fb * x / &(&k1 * &k1);
        if term.is_zero() {
            break;
        }
        let contrib = &term / &MpReal::from_i64(k as i64 + 2, p);
        sum += &contrib;
        if contrib.abs().to_f64() <= eps * sum.abs().to_f64() {
            small += 1;
            // Terms decay monotonically once k exceeds |a|,|b|; require a few
            // consecutive negligible terms before stopping.
            if small >= 4 && (k as f64) > a.to_f64().abs().max(b.to_f64().abs()) {
                break;
            }
        } else {
            small = 0;
        }
    }
    sum
}

/// Exact moments of a polygon: on each edge the integrand is a polynomial in
/// the edge parameter of degree ≤ 2·degree+1, so `degree + 1` Gauss nodes
/// integrate it exactly.
pub fn polygon_moments(vertices: &[MpComplex], degree: usize, prec: Precision) -> Vec<Vec<MpComplex>> {
    let rule = gauss_legendre_mp(degree + 1, prec);
    let half = MpReal::from_f64(0.5, prec);
    let n = vertices.len();
    let mut nodes = Vec::new();
    for k in 0..n {
        let a = &vertices[k];
        let b = &vertices[(k + 1) % n];
        let d = b - a;
        for (x, w) in rule.0.iter().zip(&rule.1) {
            // s = (x + 1)/2 on [0, 1], ds = dx/2
            let s = (x + 1.0) * &half;
            let z = a + &d.scale(&s);
            let wdz = d.scale(&(w * &half));
            nodes.push((z, wdz));
        }
    }
    accumulate_green(&nodes, degree, prec)
}

/// Given boundary nodes `(z_k, w_k dz_k)`, form
/// `1/(2i(p+1)) Σ_k w_k z_k^q conj(z_k)^(p+1) dz_k`.
fn accumulate_green(nodes: &[(MpComplex, MpComplex)], degree: usize, prec: Precision) -> Vec<Vec<MpComplex>> {
    // zpow[k][q] = z_k^q,  czw[k][p] = conj(z_k)^(p+1) w_k dz_k
    let tables: Vec<(Vec<MpComplex>, Vec<MpComplex>)> = nodes
        .par_iter()
        .map(|(z, wdz)| {
            let zc = z.conj();
            let mut zp = Vec::with_capacity(degree + 1);
            let mut cp = Vec::with_capacity(degree + 1);
            let mut acc = MpComplex::one(prec);
            let mut accc = wdz * &zc;
            for _ in 0..=degree {
                zp.push(acc.clone());
                acc = &acc * z;
                cp.push(accc.clone());
                accc = &accc * &zc;
            }
            (zp, cp)
        })
        .collect();
    (0..=degree)
        .into_par_iter()
        .map(|p| {
            // 1/(2i(p+1)) = -i/(2(p+1))
            let scale = MpReal::one(prec) / &MpReal::from_i64(2 * (p as i64 + 1), prec);
            (0..=degree)
                .map(|q| {
                    let mut acc = MpComplex::zero(prec);
                    for (zp, cp) in &tables {
                        acc.add_mul(&zp[q], &cp[p]);
                    }
                    // multiply by -i
                    MpComplex::new(acc.im.clone(), -acc.re).scale(&scale)
                })
                .collect()
        })
        .collect()
}

/// Multiprecision parametrization of curved boundary pieces.
enum CurvedPiece {
    Ellipse { center: MpComplex, rot: MpComplex, a: MpReal, b: MpReal },
    Segment { a: MpComplex, b: MpComplex },
    Arc { center: MpComplex, radius: MpReal, theta0: MpReal, sweep: MpReal },
}

impl CurvedPiece {
    /// Point and derivative at `s ∈ [0, 1]`.
    fn eval(&self, s: &MpReal) -> (MpComplex, MpComplex) {
        let p = s.precision();
        match self {
            CurvedPiece::Ellipse { center, rot, a, b } => {
                let two_pi = MpReal::pi(p).mul_pow2(1);
                let th = s * &two_pi;
                let (c, sn) = (th.cos(), th.sin());
                let pt = MpComplex::new(a * &c, b * &sn);
                let d = MpComplex::new(-(a * &sn), b * &c).scale(&two_pi);
                (center + &(rot * &pt), rot * &d)
            }
            CurvedPiece::Segment { a, b } => {
                let d = b - a;
                (a + &d.scale(s), d)
            }
            CurvedPiece::Arc { center, radius, theta0, sweep } => {
                let th = theta0 + &(sweep * s);
                let e = MpComplex::cis(&th);
                let pt = center + &e.scale(radius);
                let ie = MpComplex::new(-e.im, e.re);
                (pt, ie.scale(&(radius * sweep)))
            }
        }
    }
}

fn curved_pieces(island: &IslandSpec, prec: Precision) -> Vec<CurvedPiece> {
    let mpc = |p: &[f64; 2]| MpComplex::from_f64(p[0], p[1], prec);
    match island {
        IslandSpec::Ellipse { center, a, b, angle } => vec![CurvedPiece::Ellipse {
            center: mpc(center),
            rot: MpComplex::cis(&MpReal::from_f64(*angle, prec)),
            a: MpReal::from_f64(*a, prec),
            b: MpReal::from_f64(*b, prec),
        }],
        IslandSpec::ArcPolygon { vertices, curvatures } => {
            let n = vertices.len();
            (0..n)
                .map(|k| {
                    let a = mpc(&vertices[k]);
                    let b = mpc(&vertices[(k + 1) % n]);
                    if curvatures[k] == 0.0 {
                        return CurvedPiece::Segment { a, b };
                    }
                    let kappa = MpReal::from_f64(curvatures[k], prec);
                    let d = &b - &a;
                    let l = d.abs();
                    let radius = MpReal::one(prec) / &kappa.abs();
                    let sin_alpha = (&(&l * &kappa.abs()) * 0.5).min_one();
                    let cos_alpha = (&MpReal::one(prec) - &(&sin_alpha * &sin_alpha)).sqrt();
                    let alpha = sin_alpha.atan2(&cos_alpha);
                    let u = d.scale(&(MpReal::one(prec) / &l));
                    let side = if curvatures[k] > 0.0 { 1.0 } else { -1.0 };
                    let iu = MpComplex::new(-&u.im, u.re.clone()).scale(&MpReal::from_f64(side, prec));
                    let mid = (&a + &b).scale(&MpReal::from_f64(0.5, prec));
                    let center = &mid + &iu.scale(&(&radius * &cos_alpha));
                    let theta0 = (&a - &center).arg();
                    let sweep = alpha.mul_pow2(1) * side;
                    CurvedPiece::Arc { center, radius, theta0, sweep }
                })
                .collect()
        }
        _ => Vec::new(),
    }
}

trait MinOne {
    fn min_one(self) -> Self;
}

impl MinOne for MpReal {
    fn min_one(self) -> Self {
        if self > 1.0 {
            MpReal::one(self.precision())
        } else {
            self
        }
    }
}

/// Composite Gauss–Legendre over each boundary piece, doubling the number of
/// panels until every entry is stable to `tol·(1 + |μ|)`.
fn curved_moments(island: &IslandSpec, degree: usize, quad: &QuadConfig) -> Result<Vec<Vec<MpComplex>>> {
    let prec = quad.precision;
    let pieces = curved_pieces(island, prec);
    curved_moments_pieces(&pieces, degree, quad)
}

fn curved_moments_pieces(pieces: &[CurvedPiece], degree: usize, quad: &QuadConfig) -> Result<Vec<Vec<MpComplex>>> {
    let prec = quad.precision;
    let tol = quad.tolerance();
    let rule = gauss_legendre_mp(quad.nodes_per_panel, prec);
    let mut panels = quad.initial_panels;
    let mut last: Option<Vec<Vec<MpComplex>>> = None;
    for _ in 0..=quad.max_doublings {
        let mut nodes = Vec::new();
        for piece in pieces {
            let np = if matches!(piece, CurvedPiece::Segment { .. }) { 1 } else { panels };
            let (rule_seg, np) = if np == 1 {
                (gauss_legendre_mp(degree + 1, prec), 1)
            } else {
                (rule.clone(), np)
            };
            let h = MpReal::one(prec) / &MpReal::from_i64(np as i64, prec);
            let half_h = &h * 0.5;
            for k in 0..np {
                let s0 = &h * k as f64;
                for (x, w) in rule_seg.0.iter().zip(&rule_seg.1) {
                    let s = &s0 + &(&(x + 1.0) * &half_h);
                    let (z, dz) = piece.eval(&s);
                    nodes.push((z, dz.scale(&(w * &half_h))));
                }
            }
        }
        let est = accumulate_green(&nodes, degree, prec);
        if let Some(prev) = &last {
            let mut worst = 0.0f64;
            let mut worst_at = (0, 0);
            for p in 0..=degree {
                for q in 0..=degree {
                    let diff = (&est[p][q] - &prev[p][q]).abs().to_f64();
                    let scale = 1.0 + est[p][q].abs().to_f64();
                    if diff / scale > worst {
                        worst = diff / scale;
                        worst_at = (p, q);
                    }
                }
            }
            if worst <= tol {
                return Ok(est);
            }
            if panels >= quad.initial_panels << quad.max_doublings {
                let (p, q) = worst_at;
                return Err(Error::numerical(format!(
                    "moment quadrature did not converge: μ[{p}][{q}] estimates {:?} and {:?}",
                    prev[p][q].to_c64(),
                    est[p][q].to_c64()
                )));
            }
        }
        last = Some(est);
        panels *= 2;
    }
    let est = last.expect("at least one quadrature pass");
    Err(Error::numerical(format!(
        "moment quadrature did not converge after {} doublings (last μ[0][0] = {:?})",
        quad.max_doublings,
        est[0][0].to_c64()
    )))
}

/// Moments of a lemniscate island by boundary quadrature; an independent
/// route used to cross-check the series.
pub fn lemniscate_island_moments_quadrature(
    m: u32,
    r: f64,
    j: u32,
    degree: usize,
    quad: &QuadConfig,
) -> Result<Vec<Vec<MpComplex>>> {
    struct Lem {
        m: u32,
        gamma: MpReal,
        omega: MpComplex,
    }
    let prec = quad.precision;
    let pi = MpReal::pi(prec);
    let lem = Lem {
        m,
        gamma: MpReal::from_f64(r, prec).powi(m as i32),
        omega: MpComplex::cis(&(&pi.mul_pow2(1) * &MpReal::ratio(j as i64, m as i64, prec))),
    };
    let tol = quad.tolerance();
    let rule = gauss_legendre_mp(quad.nodes_per_panel, prec);
    let mut panels = quad.initial_panels;
    let mut last: Option<Vec<Vec<MpComplex>>> = None;
    let inv_m = MpReal::ratio(1, lem.m as i64, prec);
    for _ in 0..=quad.max_doublings {
        let h = MpReal::one(prec) / &MpReal::from_i64(panels as i64, prec);
        let half_h = &h * 0.5;
        let mut nodes = Vec::new();
        for k in 0..panels {
            let s0 = &h * k as f64;
            for (x, w) in rule.0.iter().zip(&rule.1) {
                let t = &s0 + &(&(x + 1.0) * &half_h);
                let e = MpComplex::cis(&(&t * &pi.mul_pow2(1)));
                let wv = &MpComplex::one(prec) + &e.scale(&lem.gamma);
                let root = wv.powf(&inv_m);
                let dw = MpComplex::new(-&e.im, e.re.clone()).scale(&(&lem.gamma * &pi.mul_pow2(1)));
                let dz = (&(&root / &wv) * &dw).scale(&inv_m);
                nodes.push((&root * &lem.omega, (&dz * &lem.omega).scale(&(w * &half_h))));
            }
        }
        let est = accumulate_green(&nodes, degree, prec);
        if let Some(prev) = &last {
            let worst = (0..=degree)
                .flat_map(|p| (0..=degree).map(move |q| (p, q)))
                .map(|(p, q)| (&est[p][q] - &prev[p][q]).abs().to_f64() / (1.0 + est[p][q].abs().to_f64()))
                .fold(0.0, f64::max);
            if worst <= tol {
                return Ok(est);
            }
        }
        last = Some(est);
        panels *= 2;
    }
    Err(Error::numerical("lemniscate boundary quadrature did not converge"))
}

/// Real moments `σ[j][k] = ∫ x^j y^k dA` for `j + k ≤ degree`.
#[derive(Clone, Debug)]
pub struct RealMomentTable {
    pub degree: usize,
    prec: Precision,
    entries: Vec<Vec<Option<MpReal>>>,
    /// Least-squares residual norm per projection order `k`.
    pub residuals: Vec<f64>,
}

impl RealMomentTable {
    pub fn new(degree: usize, prec: Precision) -> Self {
        RealMomentTable {
            degree,
            prec,
            entries: (0..=degree).map(|j| vec![None; degree + 1 - j]).collect(),
            residuals: Vec::new(),
        }
    }

    pub fn precision(&self) -> Precision {
        self.prec
    }

    pub fn set(&mut self, j: usize, k: usize, v: f64) {
        self.entries[j][k] = Some(MpReal::from_f64(v, self.prec));
    }

    pub fn set_mp(&mut self, j: usize, k: usize, v: MpReal) {
        self.entries[j][k] = Some(v.with_precision(self.prec));
    }

    pub fn get(&self, j: usize, k: usize) -> Option<f64> {
        self.get_mp(j, k).map(MpReal::to_f64)
    }

    pub fn get_mp(&self, j: usize, k: usize) -> Option<&MpReal> {
        self.entries.get(j).and_then(|r| r.get(k)).and_then(Option::as_ref)
    }
}

/// Complex moments from real ones by binomial expansion of
/// `(x + iy)^n (x - iy)^m`. The resulting degree is `⌊σ.degree / 2⌋`.
pub fn real_to_complex_moments(sigma: &RealMomentTable, prec: Precision) -> Result<MomentMatrix> {
    let d = sigma.degree / 2;
    let mut mu = vec![vec![MpComplex::zero(prec); d + 1]; d + 1];
    // i^k as (re, im) integers
    let ipow = |k: usize| -> (i64, i64) {
        match k % 4 {
            0 => (1, 0),
            1 => (0, 1),
            2 => (-1, 0),
            _ => (0, -1),
        }
    };
    for (m, row) in mu.iter_mut().enumerate() {
        for (n, out) in row.iter_mut().enumerate() {
            let mut acc = MpComplex::zero(prec);
            for a in 0..=n {
                for b in 0..=m {
                    // x^(a+b) y^(n-a+m-b) with coefficient C(n,a) C(m,b) i^(n-a) (-i)^(m-b)
                    let (j, k) = (a + b, n - a + m - b);
                    let s = sigma
                        .get_mp(j, k)
                        .ok_or_else(|| Error::input(format!("missing real moment σ[{j}][{k}]")))?;
                    let (r1, i1) = ipow(n - a);
                    let (r2, i2) = ipow(m - b);
                    let (r2, i2) = (r2, -i2);
                    let re = r1 * r2 - i1 * i2;
                    let im = r1 * i2 + i1 * r2;
                    let coef = binomial(n as u64, a as u64, prec) * binomial(m as u64, b as u64, prec);
                    let v = &coef * &s.with_precision(prec);
                    acc.re.add_mul(&v, &MpReal::from_i64(re, prec));
                    acc.im.add_mul(&v, &MpReal::from_i64(im, prec));
                }
            }
            *out = acc;
        }
    }
    let mut mm = MomentMatrix::from_full(mu, prec)?;
    mm.check_positive_definite();
    Ok(mm)
}

/// One Radon projection moment: `a = ∫ t^k R(θ, t) dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadonSample {
    pub theta: f64,
    pub k: usize,
    pub a: f64,
}

/// Solve `a_k(θ) = Σ_i C(k,i) cos^i θ sin^(k-i) θ σ[i][k-i]` for each `k` by
/// least squares at precision `prec`.
///
/// Rank is judged from the singular values in double precision; the solve
/// itself uses the normal equations in `prec` with `cos θ`, `sin θ` evaluated
/// there too, so that consistent data (such as projections of a rotation
/// invariant body) produce moments exact to the working precision.
pub fn radon_to_real_moments(samples: &[RadonSample], degree: usize, prec: Precision) -> Result<RealMomentTable> {
    let mut table = RealMomentTable::new(degree, prec);
    for k in 0..=degree {
        let rows: Vec<&RadonSample> = samples.iter().filter(|s| s.k == k).collect();
        let mut angles: Vec<f64> = rows.iter().map(|s| s.theta.rem_euclid(std::f64::consts::PI)).collect();
        angles.sort_by(f64::total_cmp);
        angles.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        if angles.len() > 1 && (angles[0] + std::f64::consts::PI - angles[angles.len() - 1]).abs() < 1e-12 {
            angles.pop();
        }
        if angles.len() < k + 1 {
            return Err(Error::input(format!(
                "insufficient projection angles for k = {k}: need {} distinct angles mod π, have {}",
                k + 1,
                angles.len()
            )));
        }
        let a = DMatrix::from_fn(rows.len(), k + 1, |l, i| {
            let (s, c) = rows[l].theta.sin_cos();
            binomial_f64(k, i) * c.powi(i as i32) * s.powi((k - i) as i32)
        });
        let sv = a.singular_values();
        if sv.min() <= 1e-12 * sv.max() {
            return Err(Error::input(format!("insufficient projection angles for k = {k}: system is rank deficient")));
        }
        let am: Vec<Vec<MpReal>> = rows
            .iter()
            .map(|r| {
                let th = MpReal::from_f64(r.theta, prec);
                let (c, s) = (th.cos(), th.sin());
                (0..=k).map(|i| binomial(k as u64, i as u64, prec) * &c.powi(i as i32) * &s.powi((k - i) as i32)).collect()
            })
            .collect();
        let b: Vec<MpReal> = rows.iter().map(|r| MpReal::from_f64(r.a, prec)).collect();
        let mut normal = vec![vec![MpReal::zero(prec); k + 1]; k + 1];
        let mut rhs = vec![MpReal::zero(prec); k + 1];
        for (row, bl) in am.iter().zip(&b) {
            for i in 0..=k {
                rhs[i].add_mul(&row[i], bl);
                for j in 0..=i {
                    normal[i][j].add_mul(&row[i], &row[j]);
                }
            }
        }
        for i in 0..=k {
            for j in 0..i {
                normal[j][i] = normal[i][j].clone();
            }
        }
        let l = cholesky_real(&normal)?;
        let x = cholesky_solve_real(&l, &rhs);
        let res: f64 = am
            .iter()
            .zip(&b)
            .map(|(row, bl)| {
                let mut r = -bl.clone();
                for (aij, xj) in row.iter().zip(&x) {
                    r.add_mul(aij, xj);
                }
                r.to_f64().powi(2)
            })
            .sum::<f64>()
            .sqrt();
        table.residuals.push(res);
        for (i, xi) in x.into_iter().enumerate() {
            table.set_mp(i, k - i, xi);
        }
    }
    Ok(table)
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// Parse a Radon CSV with rows `theta,k,a` (an optional header is skipped).
pub fn parse_radon_csv(text: &str) -> Result<Vec<RadonSample>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if i == 0 && line.starts_with("theta") {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let err = |msg: &str| Error::Parse { line: i + 1, msg: msg.to_string() };
        if f.len() != 3 {
            return Err(err("expected theta,k,a"));
        }
        out.push(RadonSample {
            theta: f[0].parse().map_err(|_| err("bad theta"))?,
            k: f[1].parse().map_err(|_| err("bad k"))?,
            a: f[2].parse().map_err(|_| err("bad a"))?,
        });
    }
    if out.is_empty() {
        return Err(Error::Parse { line: 1, msg: "no projection samples".into() });
    }
    Ok(out)
}

/// Serialize as `degree,<n>,precision_bits,<p>` followed by `m,n,re,im` rows
/// for `m ≤ n`.
pub fn moments_to_csv(mm: &MomentMatrix) -> String {
    let mut s = format!("degree,{},precision_bits,{}\n", mm.degree, mm.prec.bits());
    for m in 0..=mm.degree {
        for n in m..=mm.degree {
            let z = &mm.mu[m][n];
            let _ = writeln!(s, "{m},{n},{},{}", z.re.to_decimal(), z.im.to_decimal());
        }
    }
    s
}

pub fn moments_from_csv(text: &str) -> Result<MomentMatrix> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (l0, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty moment file".into() })?;
    let h: Vec<&str> = header.split(',').map(str::trim).collect();
    if h.len() != 4 || h[0] != "degree" || h[2] != "precision_bits" {
        return Err(Error::Parse { line: l0 + 1, msg: "expected header degree,<n>,precision_bits,<p>".into() });
    }
    let degree: usize = h[1].parse().map_err(|_| Error::Parse { line: l0 + 1, msg: "bad degree".into() })?;
    let bits: u32 = h[3].parse().map_err(|_| Error::Parse { line: l0 + 1, msg: "bad precision".into() })?;
    let prec = Precision::new(bits).map_err(|e| Error::Parse { line: l0 + 1, msg: e.to_string() })?;
    let mut mu: Vec<Vec<Option<MpComplex>>> = vec![vec![None; degree + 1]; degree + 1];
    for (i, line) in lines {
        let ln = i + 1;
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let perr = |msg: String| Error::Parse { line: ln, msg };
        if f.len() != 4 {
            return Err(perr("expected m,n,re,im".into()));
        }
        let m: usize = f[0].parse().map_err(|_| perr(format!("bad index {:?}", f[0])))?;
        let n: usize = f[1].parse().map_err(|_| perr(format!("bad index {:?}", f[1])))?;
        if m > degree || n > degree {
            return Err(perr(format!("index ({m},{n}) exceeds degree {degree}")));
        }
        let re = MpReal::parse(f[2], prec).map_err(|e| perr(e.to_string()))?;
        let im = MpReal::parse(f[3], prec).map_err(|e| perr(e.to_string()))?;
        let z = MpComplex::new(re, im);
        if m == n && !z.im.is_zero() {
            return Err(Error::input(format!("Hermitian violation: μ[{m}][{m}] has nonzero imaginary part (line {ln})")));
        }
        let (a, b, v) = if m <= n { (m, n, z) } else { (n, m, z.conj()) };
        if let Some(prev) = &mu[a][b] {
            if *prev != v {
                return Err(Error::input(format!(
                    "Hermitian violation: μ[{m}][{n}] is not the conjugate of μ[{n}][{m}] (line {ln})"
                )));
            }
        }
        mu[a][b] = Some(v);
    }
    let mut full = vec![vec![MpComplex::zero(prec); degree + 1]; degree + 1];
    for m in 0..=degree {
        for n in m..=degree {
            let v = mu[m][n]
                .take()
                .ok_or_else(|| Error::Parse { line: 0, msg: format!("missing entry μ[{m}][{n}]") })?;
            full[n][m] = v.conj();
            full[m][n] = v;
        }
    }
    // Already exactly Hermitian; bypass averaging so values round-trip bitwise.
    if !(full[0][0].re > 0.0) {
        return Err(Error::input("μ[0][0] (total area) must be positive"));
    }
    Ok(MomentMatrix { degree, prec, mu: full, warnings: Vec::new() })
}

pub fn save_moments(mm: &MomentMatrix, path: &Path) -> Result<()> {
    crate::io::write_atomic(path, moments_to_csv(mm).as_bytes())
}

pub fn load_moments(path: &Path) -> Result<MomentMatrix> {
    moments_from_csv(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_disk() -> ArchipelagoSpec {
        ArchipelagoSpec::new(vec![IslandSpec::disk(C64::new(0.0, 0.0), 1.0)]).unwrap()
    }

    #[test]
    fn unit_disk_examples() {
        let mm = compute_moments(&unit_disk(), 5, &QuadConfig::default()).unwrap();
        assert!((mm.get_c64(0, 0).re - PI).abs() < 1e-15);
        assert!((mm.get_c64(1, 1).re - PI / 2.0).abs() < 1e-15);
        assert_eq!(mm.get_c64(0, 1), C64::new(0.0, 0.0));
        let shifted = ArchipelagoSpec::new(vec![IslandSpec::disk(C64::new(2.0, 0.0), 1.0)]).unwrap();
        let mm = compute_moments(&shifted, 2, &QuadConfig::default()).unwrap();
        assert!((mm.get_c64(0, 1) - C64::new(2.0 * PI, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn square_moments_match_direct_integration() {
        let sq = ArchipelagoSpec::new(vec![IslandSpec::polygon(&[
            C64::new(0.0, 0.0),
            C64::new(2.0, 0.0),
            C64::new(2.0, 1.0),
            C64::new(0.0, 1.0),
        ])])
        .unwrap();
        let mm = compute_moments(&sq, 3, &QuadConfig::new(Precision::P128)).unwrap();
        // ∫∫ z dA over [0,2]x[0,1] = 2*(1 + 0.5 i)
        assert!((mm.get_c64(0, 1) - C64::new(2.0, 1.0)).norm() < 1e-14);
        // ∫∫ |z|^2 = ∫∫ x^2 + y^2 = 8/3 + 2/3
        assert!((mm.get_c64(1, 1).re - 10.0 / 3.0).abs() < 1e-14);
        // ∫∫ z^2 = ∫∫ x^2 - y^2 + 2ixy = 8/3 - 2/3 + 2i*1
        assert!((mm.get_c64(0, 2) - C64::new(2.0, 2.0)).norm() < 1e-14);
    }

    #[test]
    fn half_disk_moments_by_composite_quadrature() {
        let q = QuadConfig::new(Precision::P128);
        let half = IslandSpec::half_disk(C64::new(0.0, 0.0), 1.0);
        let got = island_moments(&half, 4, &q).unwrap();
        // Upper half disk: area π/2, ∫ z dA = i·2/3.
        assert!((got[0][0].to_c64() - C64::new(PI / 2.0, 0.0)).norm() < 1e-25);
        assert!((got[0][1].to_c64() - C64::new(0.0, 2.0 / 3.0)).norm() < 1e-25);
    }

    #[test]
    fn ellipse_area_and_second_moment() {
        let e = ArchipelagoSpec::new(vec![IslandSpec::ellipse(C64::new(0.0, 0.0), 2.0, 1.0, 0.0)]).unwrap();
        let mm = compute_moments(&e, 2, &QuadConfig::new(Precision::P128)).unwrap();
        assert!((mm.get_c64(0, 0).re - 2.0 * PI).abs() < 1e-14);
        // ∫ z^2 = ∫ x^2 - y^2 = πab(a²-b²)/4
        assert!((mm.get_c64(0, 2).re - 2.0 * PI * 3.0 / 4.0).abs() < 1e-13);
    }

    #[test]
    fn lemniscate_series_matches_boundary_quadrature() {
        let q = QuadConfig { tol: Some(1e-30), ..QuadConfig::new(Precision::P128) };
        let series = lemniscate_island_moments(3, 0.9, 2, 6, Precision::P128);
        let quad = lemniscate_island_moments_quadrature(3, 0.9, 2, 6, &q).unwrap();
        for p in 0..=6 {
            for k in 0..=6 {
                let d = (&series[p][k] - &quad[p][k]).abs().to_f64();
                assert!(d < 1e-28, "({p},{k}) {d}");
            }
        }
        let full = compute_moments(&ArchipelagoSpec::lemniscate(3, 0.9).unwrap(), 3, &QuadConfig::default()).unwrap();
        assert!((full.get_c64(0, 0).re - 0.646532695387755).abs() < 1e-13);
    }

    #[test]
    fn lemniscate_rotational_symmetry() {
        let mm = compute_moments(&ArchipelagoSpec::lemniscate(3, 0.9).unwrap(), 8, &QuadConfig::new(Precision::P128)).unwrap();
        for m in 0..=8 {
            for n in 0..=8 {
                if (m as i64 - n as i64) % 3 != 0 {
                    assert!(mm.get(m, n).abs().to_f64() < 1e-30, "({m},{n})");
                }
            }
        }
    }

    #[test]
    fn scaling_covariance() {
        let d = ArchipelagoSpec::new(vec![IslandSpec::disk(C64::new(0.3, -0.2), 0.7)]).unwrap();
        let a = compute_moments(&d, 4, &QuadConfig::default()).unwrap();
        let b = compute_moments(&d.scaled(2.0).unwrap(), 4, &QuadConfig::default()).unwrap();
        for m in 0..=4 {
            for n in 0..=4 {
                let want = a.get_c64(m, n) * 2f64.powi((m + n + 2) as i32);
                assert!((b.get_c64(m, n) - want).norm() < 1e-12 * (1.0 + want.norm()));
            }
        }
    }

    #[test]
    fn real_to_complex_examples() {
        let mut s = RealMomentTable::new(2, Precision::DOUBLE);
        s.set(0, 0, PI);
        s.set(1, 0, 0.0);
        s.set(0, 1, 0.0);
        s.set(2, 0, PI / 4.0);
        s.set(0, 2, PI / 4.0);
        s.set(1, 1, 0.0);
        let mm = real_to_complex_moments(&s, Precision::DOUBLE).unwrap();
        assert!((mm.get_c64(1, 1).re - PI / 2.0).abs() < 1e-15);
        let mut s2 = s.clone();
        s2.set(1, 0, 0.25);
        s2.set(0, 1, -0.5);
        let mm = real_to_complex_moments(&s2, Precision::DOUBLE).unwrap();
        assert_eq!(mm.get_c64(0, 1), C64::new(0.25, -0.5));
        let missing = RealMomentTable::new(2, Precision::DOUBLE);
        assert!(real_to_complex_moments(&missing, Precision::DOUBLE).is_err());
    }

    #[test]
    fn radon_examples() {
        // a_2 = ∫ t² 2√(1-t²) dt over [-1,1], by an independent midpoint rule
        let n = 200_000;
        let a2: f64 = (0..n)
            .map(|i| {
                let t = -1.0 + (i as f64 + 0.5) * 2.0 / n as f64;
                t * t * 2.0 * (1.0 - t * t).sqrt() * 2.0 / n as f64
            })
            .sum();
        assert!((a2 - PI / 4.0).abs() < 1e-7);
        let mut samples = Vec::new();
        for th in [0.0, PI / 3.0, 2.0 * PI / 3.0] {
            samples.push(RadonSample { theta: th, k: 0, a: PI });
            samples.push(RadonSample { theta: th, k: 1, a: 0.0 });
            samples.push(RadonSample { theta: th, k: 2, a: PI / 4.0 });
        }
        let t = radon_to_real_moments(&samples, 2, Precision::P128).unwrap();
        assert!((t.get(0, 0).unwrap() - PI).abs() < 1e-14);
        assert!((t.get(2, 0).unwrap() - PI / 4.0).abs() < 1e-14);
        assert!((t.get(0, 2).unwrap() - PI / 4.0).abs() < 1e-14);
        assert!(t.get(1, 1).unwrap().abs() < 1e-14);

        let single = vec![RadonSample { theta: 0.0, k: 0, a: PI }, RadonSample { theta: 0.3, k: 1, a: 0.0 }];
        let err = radon_to_real_moments(&single, 1, Precision::DOUBLE).unwrap_err();
        assert!(err.to_string().contains("insufficient projection angles"));
        // repeated angle modulo π does not count twice
        let rep = vec![
            RadonSample { theta: 0.0, k: 0, a: PI },
            RadonSample { theta: 0.3, k: 1, a: 0.0 },
            RadonSample { theta: 0.3 + PI, k: 1, a: 0.0 },
        ];
        assert!(radon_to_real_moments(&rep, 1, Precision::DOUBLE).is_err());
    }

    #[test]
    fn csv_round_trip_is_bitwise() {
        for prec in [Precision::DOUBLE, Precision::P256] {
            let two = ArchipelagoSpec::new(vec![
                IslandSpec::disk(C64::new(-2.0, 0.0), 1.0),
                IslandSpec::disk(C64::new(3.0, 0.5), 2.0 / 3.0),
            ])
            .unwrap();
            let mm = compute_moments(&two, 5, &QuadConfig::new(prec)).unwrap();
            let back = moments_from_csv(&moments_to_csv(&mm)).unwrap();
            assert_eq!(back.precision(), prec);
            for m in 0..=5 {
                for n in 0..=5 {
                    assert!(mm.get(m, n) == back.get(m, n));
                }
            }
        }
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(moments_from_csv(""), Err(Error::Parse { .. })));
        let bad = "degree,1,precision_bits,53\n0,0,3.14,0\n0,1,1,2\n1,0,1,5\n1,1,1,0\n";
        let e = moments_from_csv(bad).unwrap_err();
        assert!(e.to_string().contains("Hermitian"));
        let garbled = "degree,1,precision_bits,53\n0,0,3.14,0\n0,x,1,2\n";
        match moments_from_csv(garbled) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn translation_by_binomial_expansion() {
        let d = ArchipelagoSpec::new(vec![IslandSpec::disk(C64::new(0.0, 0.0), 1.0)]).unwrap();
        let a = compute_moments(&d, 4, &QuadConfig::new(Precision::P128)).unwrap();
        let b = compute_moments(&d.translated(C64::new(1.0, -0.5)).unwrap(), 4, &QuadConfig::new(Precision::P128)).unwrap();
        let t = a.translated(C64::new(1.0, -0.5));
        for m in 0..=4 {
            for n in 0..=4 {
                assert!((&t.get(m, n).clone() - b.get(m, n)).abs().to_f64() < 1e-30);
            }
        }
    }
}
