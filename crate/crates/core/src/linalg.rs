//! Dense complex linear algebra shared by the double and multiprecision paths:
//! Hessenberg QR eigenvalues, companion matrices and Cholesky factorizations.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mp::{MpComplex, MpReal, Precision};

/// Minimal complex field interface for the eigenvalue kernels.
pub trait Scalar: Clone + Send + Sync {
    fn zero_like(&self) -> Self;
    fn from_c64_like(&self, z: Complex64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn conj(&self) -> Self;
    fn sqrt(&self) -> Self;
    /// |z| as a value of the same type (imaginary part zero).
    fn modulus(&self) -> Self;
    fn scale_f64(&self, f: f64) -> Self;
    fn to_c64(&self) -> Complex64;
    /// |re| + |im| rounded to f64; used only for comparisons.
    fn abs1(&self) -> f64;
    fn is_zero(&self) -> bool;
    /// Unit roundoff of the working precision.
    fn eps(&self) -> f64;
    /// Smallest magnitude that survives arithmetic without underflow; zero
    /// when the exponent range is effectively unbounded.
    fn safe_min(&self) -> f64;
}

impl Scalar for Complex64 {
    fn zero_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_c64_like(&self, z: Complex64) -> Self {
        z
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
    fn sqrt(&self) -> Self {
        Complex64::sqrt(*self)
    }
    fn modulus(&self) -> Self {
        Complex64::new(self.norm(), 0.0)
    }
    fn scale_f64(&self, f: f64) -> Self {
        self * f
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
    fn abs1(&self) -> f64 {
        self.re.abs() + self.im.abs()
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn eps(&self) -> f64 {
        f64::EPSILON / 2.0
    }
    fn safe_min(&self) -> f64 {
        f64::MIN_POSITIVE
    }
}

impl Scalar for MpComplex {
    fn zero_like(&self) -> Self {
        MpComplex::zero(self.precision())
    }
    fn from_c64_like(&self, z: Complex64) -> Self {
        MpComplex::from_c64(z, self.precision())
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn conj(&self) -> Self {
        MpComplex::conj(self)
    }
    fn sqrt(&self) -> Self {
        MpComplex::sqrt(self)
    }
    fn modulus(&self) -> Self {
        MpComplex::from_real(self.abs())
    }
    fn scale_f64(&self, f: f64) -> Self {
        let p = self.precision();
        self.scale(&MpReal::from_f64(f, p))
    }
    fn to_c64(&self) -> Complex64 {
        MpComplex::to_c64(self)
    }
    fn abs1(&self) -> f64 {
        self.re.to_f64().abs() + self.im.to_f64().abs()
    }
    fn is_zero(&self) -> bool {
        MpComplex::is_zero(self)
    }
    fn eps(&self) -> f64 {
        self.precision().epsilon() / 2.0
    }
    fn safe_min(&self) -> f64 {
        0.0
    }
}

/// Eigenvalues of an upper Hessenberg matrix (row-major, `h[i][j]`) by the
/// single-shift complex QR algorithm with Wilkinson shifts.
///
/// Entries below the first subdiagonal are ignored. Only the active window is
/// updated since no Schur vectors are needed.
pub fn hessenberg_eigenvalues<T: Scalar>(mut h: Vec<Vec<T>>) -> Result<Vec<T>> {
    let n = h.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let proto = h[0][0].clone();
    let eps = proto.eps();
    let tiny = proto.safe_min() * (n as f64) / eps;
    let mut eig: Vec<Option<T>> = vec![None; n];
    let max_its = 60 * n.max(10);
    let mut ihi = n - 1;
    let mut total_its = 0usize;

    'outer: loop {
        let mut its = 0usize;
        loop {
            // Look for a negligible subdiagonal entry.
            let mut l = ihi;
            while l > 0 {
                let sub = h[l][l - 1].abs1();
                if sub <= tiny {
                    break;
                }
                let mut diag = h[l - 1][l - 1].abs1() + h[l][l].abs1();
                if diag == 0.0 {
                    if l >= 2 {
                        diag += h[l - 1][l - 2].abs1();
                    }
                    if l + 1 <= ihi {
                        diag += h[l + 1][l].abs1();
                    }
                }
                if sub <= eps * diag {
                    // Ahues–Tisseur refinement of the standard test.
                    let ab = sub.max(h[l - 1][l].abs1());
                    let ba = sub.min(h[l - 1][l].abs1());
                    let d = h[l - 1][l - 1].sub(&h[l][l]).abs1();
                    let aa = h[l][l].abs1().max(d);
                    let bb = h[l][l].abs1().min(d);
                    let s = aa + ab;
                    if ba * (ab / s) <= (tiny).max(eps * (bb * (aa / s))) {
                        break;
                    }
                    if sub <= eps * diag * 1e-3 {
                        break;
                    }
                }
                l -= 1;
            }
            if l > 0 {
                h[l][l - 1] = proto.zero_like();
            }
            if l == ihi {
                eig[ihi] = Some(h[ihi][ihi].clone());
                if ihi == 0 {
                    break 'outer;
                }
                ihi -= 1;
                continue 'outer;
            }
            its += 1;
            total_its += 1;
            if its > max_its || total_its > 30 * max_its {
                return Err(Error::numerical(format!(
                    "Hessenberg QR failed to converge (active block {l}..={ihi})"
                )));
            }

            let shift = if its % 11 == 0 {
                // Exceptional shift to break cycles.
                let s = h[ihi][ihi - 1].abs1() + if ihi >= 2 { h[ihi - 1][ihi - 2].abs1() } else { 0.0 };
                h[ihi][ihi].add(&proto.from_c64_like(Complex64::new(0.75 * s, 0.0)))
            } else {
                wilkinson_shift(&h, ihi)
            };
            qr_sweep(&mut h, l, ihi, &shift);
        }
    }
    Ok(eig.into_iter().map(|e| e.expect("all eigenvalues deflated")).collect())
}

fn wilkinson_shift<T: Scalar>(h: &[Vec<T>], i: usize) -> T {
    let a = &h[i - 1][i - 1];
    let b = &h[i - 1][i];
    let c = &h[i][i - 1];
    let d = &h[i][i];
    let half = a.sub(d).scale_f64(0.5);
    let disc = half.mul(&half).add(&b.mul(c)).sqrt();
    let mid = a.add(d).scale_f64(0.5);
    let mu1 = mid.add(&disc);
    let mu2 = mid.sub(&disc);
    if mu1.sub(d).abs1() <= mu2.sub(d).abs1() {
        mu1
    } else {
        mu2
    }
}

/// Givens rotation `[[c, s], [-conj(s), c]]` mapping (x, y) to (r, 0), c real.
fn givens<T: Scalar>(x: &T, y: &T) -> (T, T) {
    if y.is_zero() {
        return (x.from_c64_like(Complex64::new(1.0, 0.0)), x.zero_like());
    }
    if x.is_zero() {
        let ay = y.modulus();
        return (x.zero_like(), y.conj().div(&ay));
    }
    let ax = x.modulus();
    let ay = y.modulus();
    // Scale before squaring to keep the double path free of overflow.
    let scale = ax.add(&ay);
    let xs = ax.div(&scale);
    let ys = ay.div(&scale);
    let norm = xs.mul(&xs).add(&ys.mul(&ys)).sqrt().mul(&scale);
    let c = ax.div(&norm);
    let phase = x.div(&ax);
    let s = phase.mul(&y.conj()).div(&norm);
    (c, s)
}

fn qr_sweep<T: Scalar>(h: &mut [Vec<T>], l: usize, ihi: usize, shift: &T) {
    for k in l..ihi {
        let (x, y) = if k == l {
            (h[l][l].sub(shift), h[l + 1][l].clone())
        } else {
            (h[k][k - 1].clone(), h[k + 1][k - 1].clone())
        };
        let (c, s) = givens(&x, &y);
        let sc = s.conj();
        let j0 = if k == l { l } else { k - 1 };
        for j in j0..=ihi {
            let a = h[k][j].clone();
            let b = h[k + 1][j].clone();
            h[k][j] = c.mul(&a).add(&s.mul(&b));
            h[k + 1][j] = c.mul(&b).sub(&sc.mul(&a));
        }
        if k > l {
            h[k + 1][k - 1] = x.zero_like();
        }
        let i1 = (k + 2).min(ihi);
        for row in h.iter_mut().take(i1 + 1).skip(l) {
            let a = row[k].clone();
            let b = row[k + 1].clone();
            row[k] = a.mul(&c).add(&b.mul(&sc));
            row[k + 1] = b.mul(&c).sub(&a.mul(&s));
        }
    }
}

/// Diagonal similarity scaling by powers of two (Parlett–Reinsch) so that row
/// and column norms are comparable. Preserves Hessenberg structure.
pub fn balance<T: Scalar>(a: &mut [Vec<T>]) {
    let n = a.len();
    let radix = 2.0f64;
    let mut done = false;
    let mut sweeps = 0;
    while !done && sweeps < 100 {
        done = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j][i].abs1();
                    r += a[i][j].abs1();
                }
            }
            if c == 0.0 || r == 0.0 || !c.is_finite() || !r.is_finite() {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            let mut cc = c;
            while cc < g {
                f *= radix;
                cc *= radix * radix;
            }
            g = r * radix;
            while cc > g {
                f /= radix;
                cc /= radix * radix;
            }
            if (cc + r / f) < 0.95 * s * f {
                done = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    a[i][j] = a[i][j].scale_f64(inv);
                }
                for row in a.iter_mut() {
                    row[i] = row[i].scale_f64(f);
                }
            }
        }
    }
}

/// Companion matrix (upper Hessenberg) of the monic polynomial with
/// coefficients `coeffs[0] + coeffs[1] z + … + z^n` (`coeffs.len() == n + 1`).
pub fn companion<T: Scalar>(coeffs: &[T]) -> Vec<Vec<T>> {
    let n = coeffs.len() - 1;
    let zero = coeffs[0].zero_like();
    let one = zero.from_c64_like(Complex64::new(1.0, 0.0));
    let lead = &coeffs[n];
    let mut m = vec![vec![zero.clone(); n]; n];
    for j in 0..n {
        m[0][j] = zero.sub(&coeffs[n - 1 - j].div(lead));
    }
    for i in 1..n {
        m[i][i - 1] = one.clone();
    }
    m
}

/// Roots of a polynomial given by ascending coefficients, via the balanced
/// companion matrix.
pub fn polynomial_roots<T: Scalar>(coeffs: &[T]) -> Result<Vec<T>> {
    let mut deg = coeffs.len();
    while deg > 0 && coeffs[deg - 1].is_zero() {
        deg -= 1;
    }
    if deg <= 1 {
        return Ok(Vec::new());
    }
    let mut m = companion(&coeffs[..deg]);
    balance(&mut m);
    hessenberg_eigenvalues(m)
}

/// Sort complex values by (re, im) for deterministic output.
pub fn sort_complex(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Multiset distance: greedy matching after sorting, then the maximum of
/// nearest-neighbour distances in both directions.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    // Process points with the most isolated ones first so that clustered
    // points are matched within their cluster.
    for x in a {
        let mut best = f64::INFINITY;
        let mut bi = usize::MAX;
        for (j, y) in b.iter().enumerate() {
            if !used[j] {
                let d = (x - y).norm();
                if d < best {
                    best = d;
                    bi = j;
                }
            }
        }
        used[bi] = true;
        worst = worst.max(best);
    }
    worst
}

/// Lower-triangular Cholesky factor of a real symmetric positive-definite
/// matrix at multiprecision.
pub fn cholesky_real(a: &[Vec<MpReal>]) -> Result<Vec<Vec<MpReal>>> {
    let n = a.len();
    let prec = if n > 0 { a[0][0].precision() } else { Precision::DOUBLE };
    let mut l = vec![vec![MpReal::zero(prec); n]; n];
    for j in 0..n {
        let mut d = a[j][j].clone();
        for k in 0..j {
            d.sub_mul(&l[j][k], &l[j][k]);
        }
        if !(d > 0.0) {
            return Err(Error::numerical(format!(
                "matrix not positive definite at pivot {j}"
            )));
        }
        let djj = d.sqrt();
        for i in j + 1..n {
            let mut s = a[i][j].clone();
            for k in 0..j {
                s.sub_mul(&l[i][k], &l[j][k]);
            }
            l[i][j] = s / &djj;
        }
        l[j][j] = djj;
    }
    Ok(l)
}

/// Squared Cholesky pivots of a Hermitian matrix (row-major `a[i][j]`).
/// Returns the pivots computed so far and the index of the first
/// non-positive one, if any.
pub fn hermitian_pivots(a: &[Vec<MpComplex>]) -> (Vec<MpReal>, Option<usize>) {
    let n = a.len();
    if n == 0 {
        return (Vec::new(), None);
    }
    let prec = a[0][0].precision();
    let mut l = vec![vec![MpComplex::zero(prec); n]; n];
    let mut piv = Vec::with_capacity(n);
    for j in 0..n {
        let mut d = a[j][j].re.clone();
        for k in 0..j {
            d -= l[j][k].norm_sqr();
        }
        if !(d > 0.0) {
            piv.push(d);
            return (piv, Some(j));
        }
        let djj = d.sqrt();
        for i in j + 1..n {
            let mut s = a[i][j].clone();
            for k in 0..j {
                // s -= L[i][k] * conj(L[j][k])
                let c = l[j][k].conj();
                s.sub_mul(&l[i][k], &c);
            }
            l[i][j] = s.scale(&(MpReal::one(prec) / &djj));
        }
        l[j][j] = MpComplex::from_real(djj);
        piv.push(d);
    }
    (piv, None)
}

/// Solve `L L^T x = b` given the Cholesky factor.
pub fn cholesky_solve_real(l: &[Vec<MpReal>], b: &[MpReal]) -> Vec<MpReal> {
    let n = b.len();
    let mut y: Vec<MpReal> = Vec::with_capacity(n);
    for i in 0..n {
        let mut s = b[i].clone();
        for k in 0..i {
            s.sub_mul(&l[i][k], &y[k]);
        }
        y.push(s / &l[i][i]);
    }
    let mut x = y;
    for i in (0..n).rev() {
        let mut s = x[i].clone();
        for k in i + 1..n {
            let xk = x[k].clone();
            s.sub_mul(&l[k][i], &xk);
        }
        x[i] = s / &l[i][i];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn companion_roots_of_cubic() {
        // (z-1)(z-2i)(z+3)
        let roots = [c(1.0, 0.0), c(0.0, 2.0), c(-3.0, 0.0)];
        let mut coeffs = vec![c(1.0, 0.0)];
        for r in roots {
            let mut next = vec![c(0.0, 0.0); coeffs.len() + 1];
            for (i, a) in coeffs.iter().enumerate() {
                next[i + 1] += a;
                next[i] -= a * r;
            }
            coeffs = next;
        }
        let got = polynomial_roots(&coeffs).unwrap();
        assert!(multiset_distance(&got, &roots) < 1e-12);
    }

    #[test]
    fn hessenberg_triangular_is_diagonal() {
        let h = vec![
            vec![c(1.0, 0.0), c(5.0, 1.0), c(2.0, 0.0)],
            vec![c(0.0, 0.0), c(2.0, 1.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
        ];
        let got = hessenberg_eigenvalues(h).unwrap();
        assert!(multiset_distance(&got, &[c(1.0, 0.0), c(2.0, 1.0), c(-1.0, 0.0)]) < 1e-14);
    }

    #[test]
    fn nilpotent_jordan_block() {
        // Subdiagonal ones: all eigenvalues zero.
        let n = 6;
        let mut h = vec![vec![c(0.0, 0.0); n]; n];
        for i in 1..n {
            h[i][i - 1] = c(1.0, 0.0);
        }
        let got = hessenberg_eigenvalues(h).unwrap();
        assert!(got.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn roots_of_unity_multiprecision() {
        for (p, tol) in [(Precision::P256, 1e-60), (Precision::P1024, 1e-250)] {
            let n = 24;
            let mut coeffs = vec![MpComplex::zero(p); n + 1];
            coeffs[0] = MpComplex::from_f64(-1.0, 0.0, p);
            coeffs[n] = MpComplex::one(p);
            let roots = polynomial_roots(&coeffs).unwrap();
            assert_eq!(roots.len(), n);
            for r in &roots {
                let zn = r.powi(n as u32);
                assert!((&zn - &MpComplex::one(p)).abs().to_f64() < tol);
            }
        }
    }

    #[test]
    fn mp_and_double_agree_on_random_hessenberg() {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let n = 30;
        let mut h = vec![vec![c(0.0, 0.0); n]; n];
        for i in 0..n {
            for j in i.saturating_sub(1)..n {
                h[i][j] = c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            }
        }
        let hm: Vec<Vec<MpComplex>> = h
            .iter()
            .map(|r| r.iter().map(|z| MpComplex::from_c64(*z, Precision::P128)).collect())
            .collect();
        let a = hessenberg_eigenvalues(h).unwrap();
        let b: Vec<Complex64> = hessenberg_eigenvalues(hm).unwrap().iter().map(|z| z.to_c64()).collect();
        assert!(multiset_distance(&a, &b) < 1e-10);
    }

    #[test]
    fn cholesky_solves_spd() {
        let p = Precision::P128;
        let a: Vec<Vec<MpReal>> = [[4.0, 2.0, 0.4], [2.0, 5.0, 1.0], [0.4, 1.0, 3.0]]
            .iter()
            .map(|r| r.iter().map(|&x| MpReal::from_f64(x, p)).collect())
            .collect();
        let l = cholesky_real(&a).unwrap();
        let b: Vec<MpReal> = [1.0, -2.0, 0.5].iter().map(|&x| MpReal::from_f64(x, p)).collect();
        let x = cholesky_solve_real(&l, &b);
        for i in 0..3 {
            let mut s = MpReal::zero(p);
            for j in 0..3 {
                s.add_mul(&a[i][j], &x[j]);
            }
            assert!((s - &b[i]).abs().to_f64() < 1e-35);
        }
    }
}
