//! Zeros of Bergman polynomials, their counting potentials, and distances
//! to predicted limit curves.

use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::basis::BergmanBasis;
use crate::contour::{distance_to_curves, Polyline};
use crate::error::{Error, Result};
use crate::geometry::{invert_in_circle, ArchipelagoSpec};
use crate::green::GreenModel;
use crate::linalg::{hessenberg_eigenvalues, polynomial_roots, sort_complex};
use crate::mp::{MpComplex, MpReal};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZeroSet {
    pub n: usize,
    /// Sorted by `(re, im)`, repeated according to multiplicity.
    pub zeros: Vec<C64>,
    pub precision_bits: u32,
    pub warnings: Vec<String>,
}

/// Eigenvalues of the leading `n × n` Hessenberg section, computed at the
/// basis precision. A warning is attached when the monic `p_n` is not small
/// at some computed zero relative to the size of its terms there.
pub fn zeros(basis: &BergmanBasis, n: usize) -> Result<ZeroSet> {
    if n == 0 || n > basis.degree() {
        return Err(Error::precondition(format!("zeros need 1 ≤ n ≤ {}, got {n}", basis.degree())));
    }
    let mut z: Vec<C64> = if basis.precision().bits() <= 53 {
        let h: Vec<Vec<C64>> = basis.hessenberg_c64()[..n].iter().map(|r| r[..n].to_vec()).collect();
        hessenberg_eigenvalues(h)?
    } else {
        hessenberg_eigenvalues(basis.hessenberg_section(n))?.iter().map(|x| x.to_c64()).collect()
    };
    sort_complex(&mut z);
    let coeffs = basis.monic_coefficients(n);
    let prec = basis.precision();
    let mut worst: f64 = 0.0;
    for zk in &z {
        let x = MpComplex::from_c64(*zk, prec);
        let ax = MpReal::from_f64(zk.norm(), prec);
        let mut v = MpComplex::zero(prec);
        let mut scale = MpReal::zero(prec);
        for c in coeffs.iter().rev() {
            v = &(&v * &x) + c;
            scale = &(&scale * &ax) + &c.abs();
        }
        if !scale.is_zero() {
            worst = worst.max((v.abs() / &scale).to_f64());
        }
    }
    let mut warnings = Vec::new();
    if worst > 1e-4 {
        warnings.push(format!("ill-conditioned zeros: max |p_n(z_k)|/scale = {worst:.3e}"));
    }
    Ok(ZeroSet { n, zeros: z, precision_bits: prec.bits(), warnings })
}

/// Roots of the monic coefficient vector through its companion matrix, an
/// independent route used to cross-check [`zeros`].
pub fn zeros_companion(basis: &BergmanBasis, n: usize) -> Result<Vec<C64>> {
    if n == 0 || n > basis.degree() {
        return Err(Error::precondition(format!("zeros need 1 ≤ n ≤ {}, got {n}", basis.degree())));
    }
    let c = basis.monic_coefficients(n);
    let mut z: Vec<C64> = if basis.precision().bits() <= 53 {
        let c64: Vec<C64> = c.iter().map(|x| x.to_c64()).collect();
        polynomial_roots(&c64)?
    } else {
        polynomial_roots(&c)?.iter().map(|x| x.to_c64()).collect()
    };
    sort_complex(&mut z);
    Ok(z)
}

impl ZeroSet {
    /// `(1/n) Σ log(1/|z - z_k|)`; `+∞` at a zero.
    pub fn counting_potential(&self, z: C64) -> f64 {
        let mut s = 0.0;
        for zk in &self.zeros {
            let d = (z - zk).norm();
            if d == 0.0 {
                return f64::INFINITY;
            }
            s -= d.ln();
        }
        s / self.zeros.len() as f64
    }

    /// Largest signed distance outside the convex hull (negative inside).
    pub fn hull_excess(&self, arch: &ArchipelagoSpec) -> f64 {
        let hull = arch.convex_hull();
        self.zeros.iter().map(|&z| crate::geometry::hull_signed_distance(&hull, z)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Zeros lying in the archipelago itself; reported as a diagnostic.
    pub fn count_inside(&self, arch: &ArchipelagoSpec) -> usize {
        self.zeros.iter().filter(|&&z| arch.contains(z)).count()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,re,im\n");
        for z in &self.zeros {
            let _ = writeln!(s, "{},{},{}", self.n, z.re, z.im);
        }
        s
    }
}

/// For each disk `j`, the inverse of the Green level curve `L_{j,R_j}` in
/// the circle `Γ_j`, i.e. `L_{j,1/R_j}`.
pub fn predicted_zero_support(arch: &ArchipelagoSpec, gm: &GreenModel) -> Result<Vec<Polyline>> {
    let disks = arch
        .disks()
        .ok_or_else(|| Error::Unsupported("predicted zero support needs an archipelago of disks".into()))?;
    if disks.len() < 2 {
        return Err(Error::precondition("a single island has no critical level"));
    }
    let cl = gm.critical_levels()?;
    let mut out = Vec::new();
    for (j, &(c, r)) in disks.iter().enumerate() {
        let rj = cl.r_j[j];
        if !rj.is_finite() {
            return Err(Error::numerical(format!("no critical level assigned to island {j}")));
        }
        // Slightly below R_j the component around island j is a closed curve.
        let level = 1.0 + (rj - 1.0) * (1.0 - 1e-6);
        let curves = gm.level_curve(level, 600)?;
        let own = curves
            .iter()
            .filter(|p| p.closed)
            .min_by(|a, b| (a.centroid() - c).norm().total_cmp(&(b.centroid() - c).norm()))
            .ok_or_else(|| Error::numerical(format!("no closed level curve around island {j}")))?;
        out.push(Polyline { points: invert_in_circle(&own.points, c, r)?, closed: true });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SupportComparison {
    pub tolerance: f64,
    pub mean: f64,
    pub max: f64,
    pub fraction_within: f64,
    #[serde(skip)]
    pub distances: Vec<f64>,
}

/// Distance from every zero to the union of `curves` and `points`.
pub fn compare_support(zs: &ZeroSet, curves: &[Polyline], points: &[C64], tol: f64) -> Result<SupportComparison> {
    if curves.is_empty() && points.is_empty() {
        return Err(Error::precondition("support comparison needs at least one curve or point"));
    }
    if zs.zeros.is_empty() {
        return Err(Error::precondition("empty zero set"));
    }
    let distances: Vec<f64> = zs
        .zeros
        .iter()
        .map(|&z| {
            let dp = points.iter().map(|p| (z - p).norm()).fold(f64::INFINITY, f64::min);
            dp.min(distance_to_curves(z, curves))
        })
        .collect();
    let n = distances.len() as f64;
    Ok(SupportComparison {
        tolerance: tol,
        mean: distances.iter().sum::<f64>() / n,
        max: distances.iter().cloned().fold(0.0, f64::max),
        fraction_within: distances.iter().filter(|&&d| d <= tol).count() as f64 / n,
        distances,
    })
}

/// The curves `|z^m - 1| = ρ` for `ρ < 1`: `m` loops, one around each root
/// of unity.
pub fn lemniscate_loops(m: u32, rho: f64, samples: usize) -> Vec<Polyline> {
    (0..m)
        .map(|j| {
            let w = C64::from_polar(1.0, std::f64::consts::TAU * j as f64 / m as f64);
            let points = (0..samples)
                .map(|i| {
                    let t = std::f64::consts::TAU * i as f64 / samples as f64;
                    (C64::new(1.0, 0.0) + C64::from_polar(rho, t)).powf(1.0 / m as f64) * w
                })
                .collect();
            Polyline { points, closed: true }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::orthonormalize;
    use crate::geometry::IslandSpec;
    use crate::green::fit_green;
    use crate::linalg::multiset_distance;
    use crate::moments::{compute_moments, QuadConfig};
    use crate::mp::Precision;

    fn basis(a: &ArchipelagoSpec, n: usize, p: Precision) -> BergmanBasis {
        orthonormalize(&compute_moments(a, n + 1, &QuadConfig::new(p)).unwrap(), n).unwrap()
    }

    #[test]
    fn disk_zeros_at_center() {
        let a = ArchipelagoSpec::new(vec![IslandSpec::disk(C64::new(0.0, 0.0), 1.0)]).unwrap();
        let z = zeros(&basis(&a, 6, Precision::DOUBLE), 4).unwrap();
        assert_eq!(z.zeros.len(), 4);
        assert!(z.zeros.iter().all(|z| z.norm() < 1e-8));
        let a = ArchipelagoSpec::new(vec![IslandSpec::disk(C64::new(2.0, 0.0), 1.0)]).unwrap();
        let z = zeros(&basis(&a, 6, Precision::P128), 3).unwrap();
        assert!(z.zeros.iter().all(|z| (z - 2.0).norm() < 1e-8));
    }

    #[test]
    fn potentials() {
        let one = ZeroSet { n: 1, zeros: vec![C64::new(0.0, 0.0)], precision_bits: 53, warnings: vec![] };
        assert!((one.counting_potential(C64::new(std::f64::consts::E, 0.0)) + 1.0).abs() < 1e-15);
        assert_eq!(one.counting_potential(C64::new(0.0, 0.0)), f64::INFINITY);
        let four = ZeroSet { n: 4, zeros: vec![C64::new(0.0, 0.0); 4], precision_bits: 53, warnings: vec![] };
        assert_eq!(four.counting_potential(C64::new(1.0, 0.0)), 0.0);
        assert!((four.counting_potential(C64::new(2.0, 0.0)) + 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn hessenberg_and_companion_agree() {
        let a = ArchipelagoSpec::new(vec![
            IslandSpec::disk(C64::new(-2.0, 0.0), 1.0),
            IslandSpec::disk(C64::new(3.0, 0.0), 2.0 / 3.0),
        ])
        .unwrap();
        let b = basis(&a, 40, Precision::P256);
        let h = zeros(&b, 40).unwrap();
        let c = zeros_companion(&b, 40).unwrap();
        assert!(multiset_distance(&h.zeros, &c) < 1e-6);
        assert!(h.warnings.is_empty(), "{:?}", h.warnings);
        assert!(h.hull_excess(&a) < 1e-6);
    }

    #[test]
    fn lemniscate_top_subsequence_zeros() {
        let a = ArchipelagoSpec::lemniscate(3, 0.9).unwrap();
        let b = basis(&a, 38, Precision::P512);
        let z = zeros(&b, 38).unwrap();
        let mut want = vec![C64::new(0.0, 0.0); 2];
        for j in 0..3 {
            want.extend(std::iter::repeat_n(C64::from_polar(1.0, std::f64::consts::TAU * j as f64 / 3.0), 12));
        }
        sort_complex(&mut want);
        assert!(multiset_distance(&z.zeros, &want) < 1e-6, "{}", multiset_distance(&z.zeros, &want));
    }

    #[test]
    fn support_of_symmetric_pair_is_symmetric() {
        let a = ArchipelagoSpec::new(vec![
            IslandSpec::disk(C64::new(-2.0, 0.0), 1.0),
            IslandSpec::disk(C64::new(2.0, 0.0), 1.0),
        ])
        .unwrap();
        let gm = fit_green(&a.disks().unwrap(), 12, 80).unwrap();
        let s = predicted_zero_support(&a, &gm).unwrap();
        assert_eq!(s.len(), 2);
        for z in &s[0].points {
            assert!(s[1].distance(-z) < 1e-6, "{}", s[1].distance(-z));
            assert!((z + 2.0).norm() < 1.0);
        }
        let single = ArchipelagoSpec::new(vec![IslandSpec::disk(C64::new(0.0, 0.0), 1.0)]).unwrap();
        assert!(predicted_zero_support(&single, &gm).is_err());
        let ell = ArchipelagoSpec::new(vec![
            IslandSpec::ellipse(C64::new(0.0, 0.0), 1.0, 0.5, 0.0),
            IslandSpec::disk(C64::new(3.0, 0.0), 0.5),
        ])
        .unwrap();
        assert!(matches!(predicted_zero_support(&ell, &gm), Err(Error::Unsupported(_))));
    }

    #[test]
    fn comparison_statistics() {
        let circle = lemniscate_loops(2, 0.0, 8);
        let zs = ZeroSet { n: 2, zeros: vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)], precision_bits: 53, warnings: vec![] };
        let c = compare_support(&zs, &circle, &[], 0.1).unwrap();
        assert!(c.mean < 1e-15 && c.fraction_within == 1.0);
        let loops = lemniscate_loops(3, 0.5, 256);
        for p in &loops {
            for z in &p.points {
                assert!(((z.powu(3) - 1.0).norm() - 0.5).abs() < 1e-12);
            }
        }
    }
}
