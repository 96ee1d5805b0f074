//! Closed forms and a Szegő-polynomial route to the Bergman polynomials of
//! the lemniscate archipelago `{z : |z^m - 1| < r^m}`.
//!
//! For `n = km + s` the monic Bergman polynomial has the form
//! `p_n(z) = z^s q(z^m)`. With `w = (z^m - 1)/r^m` the top subsequence
//! `s = m - 1` is explicit, and for `s ≤ m - 2` it is obtained from the monic
//! polynomials `π_k` orthogonal on `|w| = 1` with weight `|γw + 1|^(-τ)`,
//! `γ = r^m`, `τ = 2 - 2/m - 2s/m`:
//!
//! ```text
//! (w + γ) β_k(w) = π_{k+1}(w) - ρ_k π_k(w),   ρ_k = π_{k+1}(-γ) / π_k(-γ)
//! p_{km+s}(z)    = z^s r^{mk} β_k(w)
//! ```

use num_complex::Complex64 as C64;

use crate::basis::orthonormalize;
use crate::error::{Error, Result};
use crate::geometry::ArchipelagoSpec;
use crate::linalg::cholesky_real;
use crate::moments::{compute_moments, QuadConfig};
use crate::mp::{binomial, MpComplex, MpReal, Precision};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LemniscateSpec {
    pub m: u32,
    pub r: f64,
}

impl LemniscateSpec {
    pub fn new(m: u32, r: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::input(format!("lemniscate needs m ≥ 2, got {m}")));
        }
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::input(format!("lemniscate needs 0 < r < 1, got {r}")));
        }
        Ok(LemniscateSpec { m, r })
    }

    /// Weight exponent for residue class `s`.
    pub fn tau(&self, s: u32) -> f64 {
        let m = self.m as f64;
        2.0 - 2.0 / m - 2.0 * s as f64 / m
    }

    pub fn tau_mp(&self, s: u32, prec: Precision) -> MpReal {
        MpReal::ratio(2 * (self.m as i64 - 1 - s as i64), self.m as i64, prec)
    }

    /// `γ = r^m`.
    pub fn gamma(&self, prec: Precision) -> MpReal {
        MpReal::from_f64(self.r, prec).powi(self.m as i32)
    }

    pub fn archipelago(&self) -> Result<ArchipelagoSpec> {
        ArchipelagoSpec::lemniscate(self.m, self.r)
    }

    fn check_s(&self, s: u32) -> Result<()> {
        if s + 1 >= self.m {
            return Err(Error::precondition(format!(
                "residue s = {s} must lie in 0..={} (s = m-1 is the explicit subsequence)",
                self.m - 2
            )));
        }
        Ok(())
    }
}

/// Monic coefficients of `p_{km+m-1}(z) = z^(m-1) (z^m - 1)^k` (ascending,
/// length `km + m`) and its leading coefficient `λ_{km+m-1}`.
pub fn exact_top_subsequence(spec: &LemniscateSpec, k: usize, prec: Precision) -> (Vec<MpReal>, MpReal) {
    let m = spec.m as usize;
    let mut c = vec![MpReal::zero(prec); k * m + m];
    for i in 0..=k {
        let b = binomial(k as u64, i as u64, prec);
        c[m * i + m - 1] = if (k - i) % 2 == 1 { -b } else { b };
    }
    let kp1 = (k + 1) as i64;
    let num = MpReal::from_i64(spec.m as i64 * kp1, prec);
    let den = &MpReal::pi(prec) * &MpReal::from_f64(spec.r, prec).powi(2 * spec.m as i32 * kp1 as i32);
    (c, (num / &den).sqrt())
}

/// Fourier coefficients `c_0..c_K` of `|γe^{iθ} + 1|^(-τ)` normalized by
/// `1/2π`, by the trapezoid rule with the node count doubled until two
/// successive estimates agree to the working precision.
pub fn toeplitz_moments(gamma: &MpReal, tau: &MpReal, kmax: usize) -> Result<Vec<MpReal>> {
    let prec = gamma.precision();
    if !(gamma.abs() < 1.0) {
        return Err(Error::precondition("Toeplitz weight needs |γ| < 1"));
    }
    let tol = MpReal::from_f64(2f64.powi(8 - prec.bits() as i32), prec);
    let mut n = (2 * (kmax + 1)).next_power_of_two().max(64);
    let mut prev = trapezoid_fourier(gamma, tau, kmax, n)?;
    for _ in 0..12 {
        n *= 2;
        let next = trapezoid_fourier(gamma, tau, kmax, n)?;
        let diff = prev.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(MpReal::zero(prec), |a, b| a.max_ref(&b).clone());
        let scale = next[0].abs();
        if diff <= &tol * &scale {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::numerical(format!(
        "Toeplitz moments did not converge with {n} trapezoid nodes"
    )))
}

fn trapezoid_fourier(gamma: &MpReal, tau: &MpReal, kmax: usize, n: usize) -> Result<Vec<MpReal>> {
    let prec = gamma.precision();
    let two_pi = MpReal::pi(prec).mul_pow2(1);
    let nn = MpReal::from_i64(n as i64, prec);
    let (cos_t, sin_t): (Vec<MpReal>, Vec<MpReal>) = (0..n)
        .map(|j| {
            let t = &(&two_pi * &MpReal::from_i64(j as i64, prec)) / &nn;
            (t.cos(), t.sin())
        })
        .unzip();
    let g2 = gamma * gamma;
    let half_tau = -(tau.mul_pow2(-1));
    let weight: Vec<MpReal> = cos_t
        .iter()
        .map(|c| {
            let base = &(&(&g2 + 1.0) + &(gamma * c).mul_pow2(1));
            (&half_tau * &base.ln()).exp()
        })
        .collect();
    let inv_n = MpReal::one(prec) / &nn;
    let mut out = Vec::with_capacity(kmax + 1);
    let mut worst_im = MpReal::zero(prec);
    for l in 0..=kmax {
        let mut re = MpReal::zero(prec);
        let mut im = MpReal::zero(prec);
        for (j, wj) in weight.iter().enumerate() {
            let idx = (l * j) % n;
            re.add_mul(wj, &cos_t[idx]);
            im.add_mul(wj, &sin_t[idx]);
        }
        let im = (&im * &inv_n).abs();
        if im > worst_im {
            worst_im = im;
        }
        out.push(&re * &inv_n);
    }
    if worst_im > 1e-13 {
        return Err(Error::numerical(format!(
            "Toeplitz moments have imaginary part {:.3e}; the weight should be even",
            worst_im.to_f64()
        )));
    }
    Ok(out)
}

/// Monic Szegő polynomials `π_0..π_K` for the weight `|γw + 1|^(-τ)|dw|`.
#[derive(Clone, Debug)]
pub struct SzegoBasis {
    gamma: MpReal,
    tau: MpReal,
    c: Vec<MpReal>,
    /// Diagonal of the Cholesky factor of the Toeplitz matrix; `d_k²` is the
    /// normalized squared norm `(1/2π)∫|π_k|² w |dw|`.
    diag: Vec<MpReal>,
    monic: Vec<Vec<MpReal>>,
    at_minus_gamma: Vec<MpReal>,
    /// Rounding bound of each `π_k(-γ)` evaluation.
    eval_bound: Vec<f64>,
}

impl SzegoBasis {
    /// Polynomials up to degree `kmax` from the trapezoid Toeplitz moments.
    pub fn new(gamma: &MpReal, tau: &MpReal, kmax: usize) -> Result<Self> {
        let c = toeplitz_moments(gamma, tau, kmax)?;
        Self::from_moments(gamma, tau, c)
    }

    pub fn for_lemniscate(spec: &LemniscateSpec, s: u32, kmax: usize, prec: Precision) -> Result<Self> {
        Self::new(&spec.gamma(prec), &spec.tau_mp(s, prec), kmax)
    }

    /// Working precision that keeps about 30 significant digits in
    /// `π_k(-γ) ≈ γ^k` up to degree `kmax`.
    pub fn recommended_precision(gamma: f64, kmax: usize) -> Precision {
        let want = 160 + (kmax as f64 * (1.0 / gamma).log2()).ceil() as u32;
        Precision::SUPPORTED
            .iter()
            .copied()
            .find(|&b| b >= want)
            .map(|b| Precision::new(b).unwrap())
            .unwrap_or(Precision::custom(want))
    }

    /// Dense Cholesky of the Toeplitz matrix; row `k` of `L⁻¹` scaled by
    /// `L_kk` gives the monic `π_k`.
    pub fn from_moments(gamma: &MpReal, tau: &MpReal, c: Vec<MpReal>) -> Result<Self> {
        let prec = gamma.precision();
        let n = c.len();
        let t: Vec<Vec<MpReal>> = (0..n).map(|i| (0..n).map(|j| c[i.abs_diff(j)].clone()).collect()).collect();
        let l = cholesky_real(&t).map_err(|e| Error::numerical(format!("Toeplitz system is not positive definite: {e}")))?;
        let mg = -gamma;
        let mut monic = Vec::with_capacity(n);
        let mut at = Vec::with_capacity(n);
        let mut eval_bound = Vec::with_capacity(n);
        let u = prec.epsilon();
        for k in 0..n {
            // Lᵀ x = L_kk e_k on the leading (k+1) block: x is monic.
            let mut x = vec![MpReal::zero(prec); k + 1];
            x[k] = MpReal::one(prec);
            for i in (0..k).rev() {
                let mut s = MpReal::zero(prec);
                for j in i + 1..=k {
                    s.sub_mul(&l[j][i], &x[j]);
                }
                x[i] = s / &l[i][i];
            }
            let mut v = MpReal::zero(prec);
            let mut bound = 0.0;
            let g = gamma.abs().to_f64();
            for (j, a) in x.iter().enumerate().rev() {
                v = &(&v * &mg) + a;
                bound += a.abs().to_f64() * g.powi(j as i32);
            }
            eval_bound.push(1e3 * u * bound * (k as f64 + 1.0));
            at.push(v);
            monic.push(x);
        }
        let diag = (0..n).map(|k| l[k][k].clone()).collect();
        Ok(SzegoBasis { gamma: gamma.clone(), tau: tau.clone(), c, diag, monic, at_minus_gamma: at, eval_bound })
    }

    pub fn max_degree(&self) -> usize {
        self.monic.len() - 1
    }

    pub fn precision(&self) -> Precision {
        self.gamma.precision()
    }

    pub fn gamma(&self) -> &MpReal {
        &self.gamma
    }

    pub fn tau(&self) -> &MpReal {
        &self.tau
    }

    pub fn toeplitz(&self) -> &[MpReal] {
        &self.c
    }

    /// Ascending coefficients of the monic `π_k`.
    pub fn monic(&self, k: usize) -> &[MpReal] {
        &self.monic[k]
    }

    /// `π_k(-γ)`.
    pub fn value_at_minus_gamma(&self, k: usize) -> &MpReal {
        &self.at_minus_gamma[k]
    }

    /// `∫_{|w|=1} |π_k(w)|² |γw + 1|^(-τ) |dw|`.
    pub fn norm_sq(&self, k: usize) -> MpReal {
        let d = &self.diag[k] * &self.diag[k];
        &d * &MpReal::pi(self.precision()).mul_pow2(1)
    }

    pub fn eval(&self, k: usize, w: &MpComplex) -> MpComplex {
        let mut acc = MpComplex::zero(self.precision());
        for a in self.monic[k].iter().rev() {
            acc = &(&acc * w) + &MpComplex::from_real(a.clone());
        }
        acc
    }

    fn checked_ratio(&self, k: usize) -> Result<MpReal> {
        if k + 1 > self.max_degree() {
            return Err(Error::precondition(format!(
                "Szegő basis has degree {}, need {}",
                self.max_degree(),
                k + 1
            )));
        }
        let v = &self.at_minus_gamma[k];
        if !(v.abs() > self.eval_bound[k]) {
            return Err(Error::numerical(format!(
                "Szegő value near zero at k = {k}: k too small or τ near even integer"
            )));
        }
        Ok(&self.at_minus_gamma[k + 1] / v)
    }

    /// Monic `β_k` (in `w`) orthogonal for `dA(w)/|γw + 1|^τ` on the unit
    /// disk, from exact division by `w + γ`.
    pub fn disk_monic(&self, k: usize) -> Result<Vec<MpReal>> {
        let prec = self.precision();
        let rho = self.checked_ratio(k)?;
        let hi = &self.monic[k + 1];
        let lo = &self.monic[k];
        let num: Vec<MpReal> = (0..=k + 1)
            .map(|j| if j <= k { &hi[j] - &(&rho * &lo[j]) } else { hi[j].clone() })
            .collect();
        // Synthetic division by (w - a), a = -γ.
        let a = -&self.gamma;
        let mut q = vec![MpReal::zero(prec); k + 1];
        q[k] = num[k + 1].clone();
        for j in (1..=k).rev() {
            q[j - 1] = &num[j] + &(&a * &q[j]);
        }
        let rem = &num[0] + &(&a * &q[0]);
        let g = self.gamma.to_f64();
        let scale: f64 = num.iter().enumerate().map(|(j, c)| c.abs().to_f64() * g.powi(j as i32)).sum();
        if rem.abs().to_f64() > 1e-10 * scale {
            return Err(Error::numerical(format!(
                "division by (w + γ) left remainder {:.3e} (relative to {:.3e}) at k = {k}",
                rem.abs().to_f64(),
                scale
            )));
        }
        Ok(q)
    }

    /// `-π_{k+1}(-γ) / π_k(-γ)`, which tends to `γ(1 - τ/(2k))`.
    pub fn ratio(&self, k: usize) -> Result<MpReal> {
        Ok(-self.checked_ratio(k)?)
    }
}

/// Monic coefficients of `p_{km+s}` (ascending, length `km+s+1`) for
/// `s ≤ m - 2`, through the Szegő polynomials of residue class `s`.
pub fn bergman_from_szego(spec: &LemniscateSpec, s: u32, k: usize, prec: Precision) -> Result<Vec<MpReal>> {
    spec.check_s(s)?;
    let sz = SzegoBasis::for_lemniscate(spec, s, k + 1, prec)?;
    bergman_from_basis(spec, s, k, &sz)
}

/// As [`bergman_from_szego`] with a prebuilt Szegő basis for class `s`.
pub fn bergman_from_basis(spec: &LemniscateSpec, s: u32, k: usize, sz: &SzegoBasis) -> Result<Vec<MpReal>> {
    spec.check_s(s)?;
    let prec = sz.precision();
    let q = sz.disk_monic(k)?;
    let m = spec.m as usize;
    let g = sz.gamma();
    // γ^(k-j) for j = 0..=k
    let mut gpow = vec![MpReal::one(prec); k + 1];
    for i in 1..=k {
        gpow[i] = &gpow[i - 1] * g;
    }
    let mut out = vec![MpReal::zero(prec); k * m + s as usize + 1];
    for i in 0..=k {
        let mut acc = MpReal::zero(prec);
        for j in i..=k {
            let b = binomial(j as u64, i as u64, prec);
            let t = &(&q[j] * &gpow[k - j]) * &b;
            if (j - i) % 2 == 1 {
                acc -= &t;
            } else {
                acc += &t;
            }
        }
        out[m * i + s as usize] = acc;
    }
    out[k * m + s as usize] = MpReal::one(prec);
    Ok(out)
}

/// `p_{km+s}(z) = z^s γ^k β_k((z^m - 1)/γ)` evaluated without expanding in `z`.
pub fn bergman_eval(spec: &LemniscateSpec, s: u32, k: usize, sz: &SzegoBasis, z: &MpComplex) -> Result<MpComplex> {
    spec.check_s(s)?;
    let prec = sz.precision();
    let q = sz.disk_monic(k)?;
    let g = sz.gamma();
    let w = (&z.powi(spec.m) - &MpComplex::one(prec)).scale(&(MpReal::one(prec) / g));
    let mut beta = MpComplex::zero(prec);
    for c in q.iter().rev() {
        beta = &(&beta * &w) + &MpComplex::from_real(c.clone());
    }
    Ok((&z.powi(s) * &beta).scale(&g.powi(k as i32)))
}

/// `λ_{km+s}` for `s ≤ m - 2` from the Szegő data:
/// `λ⁻² = -π_{k+1}(-γ) r^(2mk+m) / (π_k(-γ) 2m (k - τ/2 + 1)) · ‖π_k‖²`.
pub fn lambda_from_szego(spec: &LemniscateSpec, s: u32, k: usize, sz: &SzegoBasis) -> Result<MpReal> {
    spec.check_s(s)?;
    let prec = sz.precision();
    let ratio = sz.ratio(k)?;
    let r = MpReal::from_f64(spec.r, prec);
    let rp = r.powi((2 * spec.m as usize * k + spec.m as usize) as i32);
    let half_tau = sz.tau().mul_pow2(-1);
    let denom = &MpReal::from_i64(2 * spec.m as i64, prec) * &(&MpReal::from_i64(k as i64 + 1, prec) - &half_tau);
    let inv2 = &(&(&ratio * &rp) / &denom) * &sz.norm_sq(k);
    Ok((MpReal::one(prec) / &inv2).sqrt())
}

/// `lim_k λ_{km+s} r^{km+s+1} √(π/(km+s+1)) = r^-(m-s-1)`.
pub fn predict_lambda_limit(spec: &LemniscateSpec, s: u32) -> f64 {
    spec.r.powi(-((spec.m - s - 1) as i32))
}

/// `λ_n r^(n+1) √(π/(n+1))`.
pub fn normalized_lambda(r: f64, n: usize, lambda: &MpReal) -> f64 {
    let p = lambda.precision();
    let scale = &MpReal::from_f64(r, p).powi(n as i32 + 1)
        * &(&MpReal::pi(p) / &MpReal::from_i64(n as i64 + 1, p)).sqrt();
    (lambda * &scale).to_f64()
}

/// `lim_k p_{km+s}(z) / (z^s (z^m - 1)^k) = ((z^m - 1 + r^{2m})/(z^m - 1))^(τ/2)`,
/// branch equal to one at infinity.
pub fn predict_exterior_ratio(spec: &LemniscateSpec, s: u32, z: C64) -> Result<C64> {
    if s >= spec.m {
        return Err(Error::precondition(format!("residue s = {s} out of range")));
    }
    let u = z.powu(spec.m) - 1.0;
    let r2m = spec.r.powi(2 * spec.m as i32);
    if u.norm() < r2m || (u + r2m).norm() < 1e-14 {
        return Err(Error::precondition(format!(
            "exterior ratio needs |z^m - 1| ≥ r^(2m) and z^m - 1 ≠ -r^(2m); z = {z}"
        )));
    }
    let t = spec.tau(s) / 2.0;
    Ok(((C64::new(1.0, 0.0) + r2m / u).ln() * t).exp())
}

/// Leading value `sin(τπ/2) Γ(τ/2) / π` of `(-1)^k k^(τ/2) r^(-mk) π_k(-r^m)`.
pub fn predict_pi_value(spec: &LemniscateSpec, s: u32) -> Result<f64> {
    spec.check_s(s)?;
    pi_value_limit(spec.tau(s))
}

pub fn pi_value_limit(tau: f64) -> Result<f64> {
    let half = tau / 2.0;
    if (half - half.round()).abs() < 1e-12 {
        return Err(Error::precondition(format!("τ = {tau} is an even integer")));
    }
    Ok((tau * std::f64::consts::PI / 2.0).sin() * statrs::function::gamma::gamma(half) / std::f64::consts::PI)
}

/// `(-1)^k k^(τ/2) r^(-mk) π_k(-r^m)` from the Szegő data.
pub fn scaled_pi_value(sz: &SzegoBasis, k: usize) -> f64 {
    let p = sz.precision();
    let g = sz.gamma();
    let kk = MpReal::from_i64(k as i64, p);
    let kp = kk.powf(&sz.tau().mul_pow2(-1));
    let v = &(&kp * sz.value_at_minus_gamma(k)) / &g.powi(k as i32);
    if k % 2 == 1 { -v.to_f64() } else { v.to_f64() }
}

/// Limit of `(-1)^(k+1) k^(2+τ/2) r^(-m(2k+4)) p_{km+s}(z)` for `z` in island
/// `j` (the one containing `e^(2πij/m)`) with `|z^m - 1| < r^(2m)`.
pub fn predict_interior(spec: &LemniscateSpec, s: u32, j: u32, z: C64) -> Result<C64> {
    spec.check_s(s)?;
    let m = spec.m;
    let r2m = spec.r.powi(2 * m as i32);
    let u = z.powu(m) - 1.0;
    if u.norm() >= r2m {
        return Err(Error::precondition("interior asymptotics need |z^m - 1| < r^(2m)"));
    }
    let tau = spec.tau(s);
    let phase = C64::from_polar(1.0, std::f64::consts::TAU * j as f64 * (s + 1) as f64 / m as f64);
    let num = phase
        * z.powu(m - 1)
        * tau
        * statrs::function::gamma::gamma(tau / 2.0)
        * (tau * std::f64::consts::PI / 2.0).sin();
    let den = 2.0 * std::f64::consts::PI * (1.0 - r2m).powf(tau / 2.0) * (u + r2m).powu(2);
    Ok(num / den)
}

/// Scaled interior value `(-1)^(k+1) k^(2+τ/2) r^(-m(2k+4)) p_{km+s}(z)`.
pub fn scaled_interior_value(spec: &LemniscateSpec, s: u32, k: usize, sz: &SzegoBasis, z: C64) -> Result<C64> {
    let p = sz.precision();
    let v = bergman_eval(spec, s, k, sz, &MpComplex::from_c64(z, p))?;
    let kk = MpReal::from_i64(k as i64, p);
    let kp = kk.powf(&(&sz.tau().mul_pow2(-1) + 2.0));
    let rp = MpReal::from_f64(spec.r, p).powi(spec.m as i32 * (2 * k as i32 + 4));
    let out = v.scale(&(&kp / &rp)).to_c64();
    Ok(if k % 2 == 0 { -out } else { out })
}

/// First `k₀` such that `(-1)^k π_k(-γ) > 0` for every `k₀ ≤ k ≤ K`.
pub fn sign_pattern_onset(sz: &SzegoBasis) -> Option<usize> {
    let kmax = sz.max_degree();
    let mut onset = None;
    for k in (0..=kmax).rev() {
        let v = sz.value_at_minus_gamma(k);
        let ok = if k % 2 == 0 { *v > 0.0 } else { *v < 0.0 };
        if ok {
            onset = Some(k);
        } else {
            break;
        }
    }
    onset
}

/// One row of the leading-coefficient comparison table.
#[derive(Clone, Debug)]
pub struct CheckRow {
    pub n: usize,
    pub k: usize,
    pub s: u32,
    pub lambda_pipeline: f64,
    pub lambda_oracle: f64,
    pub normalized: f64,
    pub limit: f64,
}

/// Leading coefficients for `n` in `range` from the moment pipeline next to
/// the closed form (`s = m - 1`) or the Szegő route (other `s`).
pub fn check_table(spec: &LemniscateSpec, range: std::ops::RangeInclusive<usize>, prec: Precision) -> Result<Vec<CheckRow>> {
    let nmax = *range.end();
    let arch = spec.archipelago()?;
    let mm = compute_moments(&arch, nmax + 1, &QuadConfig::new(prec))?;
    let basis = orthonormalize(&mm, nmax)?;
    let m = spec.m as usize;
    let kmax = nmax / m + 1;
    let szp = SzegoBasis::recommended_precision(spec.r.powi(spec.m as i32), kmax + 1).max(prec);
    let sz: Vec<Option<SzegoBasis>> = (0..spec.m)
        .map(|s| {
            if s + 1 < spec.m {
                SzegoBasis::for_lemniscate(spec, s, kmax + 1, szp).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for n in range {
        let (k, s) = (n / m, (n % m) as u32);
        let oracle = match &sz[s as usize] {
            None => exact_top_subsequence(spec, k, szp).1.to_f64(),
            Some(b) => lambda_from_szego(spec, s, k, b).map(|l| l.to_f64()).unwrap_or(f64::NAN),
        };
        rows.push(CheckRow {
            n,
            k,
            s,
            lambda_pipeline: basis.lambda(n).to_f64(),
            lambda_oracle: oracle,
            normalized: normalized_lambda(spec.r, n, basis.lambda(n)),
            limit: predict_lambda_limit(spec, s),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Series oracle for the Toeplitz moments:
    /// `c_l = Σ_k C(-τ/2, k+l) C(-τ/2, k) γ^(2k+l)`.
    fn toeplitz_series(gamma: &MpReal, tau: &MpReal, kmax: usize) -> Vec<MpReal> {
        let p = gamma.precision();
        let a = -(tau.mul_pow2(-1));
        // generalized binomials C(a, n)
        let terms = 4 * p.bits() as usize + kmax;
        let mut binom = vec![MpReal::one(p)];
        for n in 1..terms + kmax + 1 {
            let prev = binom[n - 1].clone();
            let f = &(&a - (n as f64 - 1.0)) / &MpReal::from_i64(n as i64, p);
            binom.push(&prev * &f);
        }
        (0..=kmax)
            .map(|l| {
                let mut acc = MpReal::zero(p);
                for k in 0..terms {
                    let t = &(&binom[k + l] * &binom[k]) * &gamma.powi((2 * k + l) as i32);
                    acc += &t;
                }
                acc
            })
            .collect()
    }

    #[test]
    fn top_subsequence_examples() {
        let spec = LemniscateSpec::new(3, 0.9).unwrap();
        let (c, l) = exact_top_subsequence(&spec, 0, Precision::P128);
        assert_eq!(c.len(), 3);
        assert!(c[2] == 1.0 && c[0].is_zero());
        assert!((l.to_f64() - (3.0 / (PI * 0.9f64.powi(6))).sqrt()).abs() < 1e-14);
        let (_, l) = exact_top_subsequence(&spec, 12, Precision::P128);
        assert!((l.to_f64() - 214.535664).abs() < 5e-7);
        let spec2 = LemniscateSpec::new(2, 0.5).unwrap();
        let (c, _) = exact_top_subsequence(&spec2, 1, Precision::P128);
        let f: Vec<f64> = c.iter().map(|x| x.to_f64()).collect();
        assert_eq!(f, vec![0.0, -1.0, 0.0, 1.0]);
    }

    #[test]
    fn toeplitz_flat_weight_and_series() {
        let p = Precision::P256;
        let c = toeplitz_moments(&MpReal::from_f64(0.5, p), &MpReal::zero(p), 5).unwrap();
        assert!((c[0].to_f64() - 1.0).abs() < 1e-70);
        assert!(c[1..].iter().all(|x| x.abs() < 1e-70));
        let c = toeplitz_moments(&MpReal::from_f64(1e-30, p), &MpReal::ratio(4, 3, p), 3).unwrap();
        assert!((c[0].to_f64() - 1.0).abs() < 1e-50 && c[1].abs() < 1e-29);

        let g = MpReal::from_f64(0.729, p);
        let tau = MpReal::ratio(4, 3, p);
        let c = toeplitz_moments(&g, &tau, 30).unwrap();
        let o = toeplitz_series(&g, &tau, 30);
        for (a, b) in c.iter().zip(&o) {
            assert!((a - b).abs() < 1e-60, "{a} vs {b}");
        }
    }

    #[test]
    fn szego_trivial_weights() {
        let p = Precision::P128;
        let g = MpReal::from_f64(0.6, p);
        let sz = SzegoBasis::new(&g, &MpReal::zero(p), 6).unwrap();
        for k in 0..=6 {
            for (j, a) in sz.monic(k).iter().enumerate() {
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((a.to_f64() - want).abs() < 1e-30);
            }
        }
        // τ = 2: π_k(w) = w^(k-1)(w + γ), so π_k(-γ) = 0.
        let sz = SzegoBasis::new(&g, &MpReal::from_i64(2, p), 6).unwrap();
        for k in 1..=6 {
            let c = sz.monic(k);
            assert!((c[k - 1].to_f64() - 0.6).abs() < 1e-30);
            assert!(sz.value_at_minus_gamma(k).abs() < 1e-30);
        }
        assert!(sz.disk_monic(2).is_err());
    }

    #[test]
    fn szego_sign_pattern_and_limits() {
        let spec = LemniscateSpec::new(3, 0.9).unwrap();
        let p = SzegoBasis::recommended_precision(0.729, 201);
        let sz = SzegoBasis::for_lemniscate(&spec, 0, 201, p).unwrap();
        assert_eq!(sign_pattern_onset(&sz), Some(0));
        let want = predict_pi_value(&spec, 0).unwrap();
        let got = scaled_pi_value(&sz, 200);
        assert!((got / want - 1.0).abs() < 0.02, "{got} vs {want}");
        let ratio = sz.ratio(200).unwrap().to_f64();
        let pred = 0.729 * (1.0 - (4.0 / 3.0) / 400.0);
        assert!((ratio / pred - 1.0).abs() < 0.01);
    }

    #[test]
    fn gamma_function_values() {
        use statrs::function::gamma::gamma;
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-13);
        assert!((gamma(1.0) - 1.0).abs() < 1e-13);
        assert!((gamma(2.0 / 3.0) * gamma(1.0 / 3.0) - 2.0 * PI / 3f64.sqrt()).abs() < 1e-12);
        // the limit is continuous at τ = 0 with value 1, matching π_k = w^k
        assert!((pi_value_limit(1e-7).unwrap() - 1.0).abs() < 1e-6);
        assert!(pi_value_limit(2.0).is_err());
        let spec = LemniscateSpec::new(3, 0.9).unwrap();
        assert!(predict_pi_value(&spec, 2).is_err());
    }

    #[test]
    fn lambda_limits() {
        let spec = LemniscateSpec::new(3, 0.9).unwrap();
        assert!((predict_lambda_limit(&spec, 0) - 1.0 / 0.81).abs() < 1e-15);
        assert!((predict_lambda_limit(&spec, 1) - 1.0 / 0.9).abs() < 1e-15);
        assert_eq!(predict_lambda_limit(&spec, 2), 1.0);
    }

    #[test]
    fn exterior_ratio_branch() {
        let spec = LemniscateSpec::new(3, 0.9).unwrap();
        let far = predict_exterior_ratio(&spec, 0, C64::new(1e8, 1e8)).unwrap();
        assert!((far - 1.0).norm() < 1e-12);
        let top = predict_exterior_ratio(&spec, 2, C64::new(0.3, 2.0)).unwrap();
        assert!((top - 1.0).norm() < 1e-15);
        let at2 = predict_exterior_ratio(&spec, 0, C64::new(2.0, 0.0)).unwrap();
        assert!((at2.re - ((7.0 + 0.9f64.powi(6)) / 7.0).powf(2.0 / 3.0)).abs() < 1e-14);
        assert!(predict_exterior_ratio(&spec, 0, C64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn szego_route_symmetry_and_rejects_top_class() {
        let spec = LemniscateSpec::new(3, 0.9).unwrap();
        let c = bergman_from_szego(&spec, 1, 4, Precision::P256).unwrap();
        assert_eq!(c.len(), 14);
        for (i, x) in c.iter().enumerate() {
            if i % 3 != 1 {
                assert!(x.is_zero());
            }
        }
        assert!(bergman_from_szego(&spec, 2, 4, Precision::P256).is_err());
    }

    #[test]
    fn szego_lambda_matches_table_values() {
        let spec = LemniscateSpec::new(3, 0.9).unwrap();
        let p = Precision::P256;
        let s0 = SzegoBasis::for_lemniscate(&spec, 0, 18, p).unwrap();
        let s1 = SzegoBasis::for_lemniscate(&spec, 1, 18, p).unwrap();
        let l39 = lambda_from_szego(&spec, 0, 13, &s0).unwrap().to_f64();
        let l40 = lambda_from_szego(&spec, 1, 13, &s1).unwrap().to_f64();
        assert!((l39 - 305.078943).abs() < 1e-6 * 305.0, "{l39}");
        assert!((l40 - 305.314216).abs() < 1e-6 * 305.0, "{l40}");
    }
}
