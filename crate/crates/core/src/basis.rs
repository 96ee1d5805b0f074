//! Orthonormal Bergman polynomials by an Arnoldi Gram–Schmidt process run
//! entirely through the moment matrix.
//!
//! With `P_j = Σ_i c_j[i] z^i` the inner product is
//! `⟨f, P_j⟩ = Σ_i f_i W_j[i]` where `W_j[i] = Σ_l conj(c_j[l]) μ[l][i]`, so
//! each new polynomial costs one pass over the moments to form its `W`
//! vector and the projections are plain dot products.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ArchipelagoSpec;
use crate::moments::{compute_moments, MomentMatrix, QuadConfig};
use crate::mp::{MpComplex, MpReal, Precision};

#[derive(Clone, Debug)]
pub struct OrthoOptions {
    /// Second Gram–Schmidt pass against all previous polynomials.
    pub reorthogonalize: bool,
    /// Breakdown is declared when the squared remaining norm falls below
    /// `breakdown_factor · u · |v|ᵀ|M||v|` (the rounding-error bound of the
    /// quadratic form), with `u` the unit roundoff.
    pub breakdown_factor: f64,
}

impl Default for OrthoOptions {
    fn default() -> Self {
        OrthoOptions { reorthogonalize: true, breakdown_factor: 1e3 }
    }
}

/// Orthonormal polynomials `P_0..P_n` with their Hessenberg recurrence.
#[derive(Clone, Debug)]
pub struct BergmanBasis {
    degree: usize,
    prec: Precision,
    /// `h[j][k]` for `j ≤ k + 1`, `k < degree`: `z P_k = Σ_j h[j][k] P_j`.
    h: Vec<Vec<MpComplex>>,
    lambda: Vec<MpReal>,
    /// `coeff[k][i]`, `i ≤ k`.
    coeff: Vec<Vec<MpComplex>>,
    /// Decimal digits lost to cancellation when normalizing each `P_k`.
    pub digits_lost: Vec<f64>,
    h64: Vec<Vec<C64>>,
}

/// Build `P_0..P_n` from moments of degree at least `n + 1`.
pub fn orthonormalize(mm: &MomentMatrix, n: usize) -> Result<BergmanBasis> {
    orthonormalize_with(mm, n, &OrthoOptions::default())
}

pub fn orthonormalize_with(mm: &MomentMatrix, n: usize, opts: &OrthoOptions) -> Result<BergmanBasis> {
    let d = mm.degree();
    if d == 0 || n > d - 1 {
        return Err(Error::precondition(format!(
            "basis degree {n} needs moments of degree at least {} (have {d})",
            n + 1
        )));
    }
    let prec = mm.precision();
    let mu = mm.rows();
    let u = prec.epsilon() / 2.0;

    // |μ| in double for the rounding-error bound.
    let mu_abs: Vec<Vec<f64>> = mu.iter().map(|r| r.iter().map(|z| z.abs().to_f64()).collect()).collect();

    let mut coeff: Vec<Vec<MpComplex>> = Vec::with_capacity(n + 1);
    let mut w: Vec<Vec<MpComplex>> = Vec::with_capacity(n + 1);
    let mut lambda: Vec<MpReal> = Vec::with_capacity(n + 1);
    let mut h = vec![vec![MpComplex::zero(prec); n]; n + 1];
    let mut digits_lost = Vec::with_capacity(n + 1);

    let mu00 = mu[0][0].re.clone();
    let l0 = MpReal::one(prec) / &mu00.sqrt();
    coeff.push(vec![MpComplex::from_real(l0.clone())]);
    w.push((0..=d).map(|i| mu[0][i].scale(&l0)).collect());
    lambda.push(l0);
    digits_lost.push(0.0);

    for k in 1..=n {
        // v = z P_{k-1}
        let mut v = vec![MpComplex::zero(prec)];
        v.extend(coeff[k - 1].iter().cloned());

        let passes = if opts.reorthogonalize { 2 } else { 1 };
        for _ in 0..passes {
            let proj: Vec<MpComplex> = (0..k)
                .map(|j| {
                    let mut acc = MpComplex::zero(prec);
                    for (vi, wi) in v.iter().zip(&w[j]) {
                        acc.add_mul(vi, wi);
                    }
                    acc
                })
                .collect();
            for (j, hj) in proj.iter().enumerate() {
                for (vi, ci) in v.iter_mut().zip(&coeff[j]) {
                    vi.sub_mul(hj, ci);
                }
                h[j][k - 1] += hj;
            }
        }

        // W_v[i] = Σ_l conj(v_l) μ[l][i], and ‖v‖² = Σ_i W_v[i] v_i.
        let wv: Vec<MpComplex> = (0..=d)
            .map(|i| {
                let mut acc = MpComplex::zero(prec);
                for (l, vl) in v.iter().enumerate() {
                    acc.add_conj_mul(vl, &mu[l][i]);
                }
                acc
            })
            .collect();
        let mut nrm2 = MpReal::zero(prec);
        for (vi, wi) in v.iter().zip(&wv) {
            let t = wi * vi;
            nrm2 += &t.re;
        }
        let vabs: Vec<f64> = v.iter().map(|z| z.abs().to_f64()).collect();
        let mut bound = 0.0;
        for (l, al) in vabs.iter().enumerate() {
            for (i, ai) in vabs.iter().enumerate() {
                bound += al * mu_abs[l][i] * ai;
            }
        }
        let nrm2f = nrm2.to_f64();
        if !(nrm2f > opts.breakdown_factor * u * bound) {
            return Err(Error::numerical(format!(
                "Arnoldi breakdown at k = {k}: remaining norm² {nrm2f:.3e} is below the rounding bound {:.3e} \
                 (measure supported on < {} points or {}-bit precision exhausted)",
                opts.breakdown_factor * u * bound,
                k + 1,
                prec.bits()
            )));
        }
        digits_lost.push(0.5 * (bound / nrm2f).log10().max(0.0));
        let nrm = nrm2.sqrt();
        let inv = MpReal::one(prec) / &nrm;
        let ck: Vec<MpComplex> = v.iter().map(|z| z.scale(&inv)).collect();
        let wk: Vec<MpComplex> = wv.iter().map(|z| z.scale(&inv)).collect();
        lambda.push(&lambda[k - 1] * &inv);
        h[k][k - 1] = MpComplex::from_real(nrm);
        coeff.push(ck);
        w.push(wk);
    }

    let h64 = h.iter().map(|r| r.iter().map(|z| z.to_c64()).collect()).collect();
    Ok(BergmanBasis { degree: n, prec, h, lambda, coeff, digits_lost, h64 })
}

/// Moments plus basis for an archipelago, escalating the precision when the
/// Arnoldi process runs out of digits.
pub fn basis_for_archipelago(arch: &ArchipelagoSpec, n: usize, start: Option<Precision>) -> Result<(MomentMatrix, BergmanBasis)> {
    let mut prec = start.unwrap_or_else(|| Precision::recommended_for_degree(n));
    loop {
        let mm = compute_moments(arch, n + 1, &QuadConfig::new(prec))?;
        match orthonormalize(&mm, n) {
            Ok(b) => return Ok((mm, b)),
            Err(Error::Numerical(msg)) => match prec.escalate() {
                Some(p) => prec = p,
                None => return Err(Error::Numerical(msg)),
            },
            Err(e) => return Err(e),
        }
    }
}

impl BergmanBasis {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn precision(&self) -> Precision {
        self.prec
    }

    /// Leading coefficient `λ_k > 0` of `P_k`.
    pub fn lambda(&self, k: usize) -> &MpReal {
        &self.lambda[k]
    }

    pub fn lambdas(&self) -> &[MpReal] {
        &self.lambda
    }

    /// `H[j][k]` of the recurrence `z P_k = Σ_{j ≤ k+1} H[j][k] P_j`.
    pub fn hessenberg(&self, j: usize, k: usize) -> &MpComplex {
        &self.h[j][k]
    }

    /// Leading `n × n` section of the Hessenberg matrix.
    pub fn hessenberg_section(&self, n: usize) -> Vec<Vec<MpComplex>> {
        self.h[..n].iter().map(|r| r[..n].to_vec()).collect()
    }

    pub fn hessenberg_c64(&self) -> &[Vec<C64>] {
        &self.h64
    }

    /// Monomial coefficients of `P_k`, ascending.
    pub fn coefficients(&self, k: usize) -> &[MpComplex] {
        &self.coeff[k]
    }

    /// Monomial coefficients of the monic `p_k = P_k / λ_k`.
    pub fn monic_coefficients(&self, k: usize) -> Vec<MpComplex> {
        let inv = MpReal::one(self.prec) / &self.lambda[k];
        let mut out: Vec<MpComplex> = self.coeff[k].iter().map(|z| z.scale(&inv)).collect();
        out[k] = MpComplex::one(self.prec);
        out
    }

    /// `P_0(z)..P_n(z)` by the Hessenberg recurrence in double precision.
    ///
    /// Values may overflow far outside the archipelago; see
    /// [`Self::eval_polys_scaled`].
    pub fn eval_polys(&self, z: C64, n: usize) -> Vec<C64> {
        let (v, log_scale) = self.eval_polys_scaled(z, n);
        let s = log_scale.exp();
        v.into_iter().map(|x| x * s).collect()
    }

    /// Like [`Self::eval_polys`] but returns values divided by a common
    /// factor `exp(log_scale)` that keeps them below 1e150.
    pub fn eval_polys_scaled(&self, z: C64, n: usize) -> (Vec<C64>, f64) {
        assert!(n <= self.degree, "eval_polys: n = {n} exceeds basis degree {}", self.degree);
        let mut p = Vec::with_capacity(n + 1);
        p.push(C64::new(self.lambda[0].to_f64(), 0.0));
        let mut log_scale = 0.0;
        for k in 0..n {
            let mut next = z * p[k];
            for (j, pj) in p.iter().enumerate().take(k + 1) {
                next -= self.h64[j][k] * pj;
            }
            next /= self.h64[k + 1][k];
            p.push(next);
            if next.norm() > 1e150 {
                for x in p.iter_mut() {
                    *x *= 1e-150;
                }
                log_scale += 150.0 * std::f64::consts::LN_10;
            }
        }
        (p, log_scale)
    }

    /// `P_0(z)..P_n(z)` by the recurrence at the basis precision.
    pub fn eval_polys_mp(&self, z: &MpComplex, n: usize) -> Vec<MpComplex> {
        let mut p = vec![MpComplex::from_real(self.lambda[0].clone())];
        for k in 0..n {
            let mut next = z * &p[k];
            for j in 0..=k {
                next.sub_mul(&self.h[j][k], &p[j]);
            }
            let hk = self.h[k + 1][k].re.clone();
            p.push(next.scale(&(MpReal::one(self.prec) / &hk)));
        }
        p
    }

    /// `P_k(z)` from the monomial coefficients (Horner); a cross-check path.
    pub fn eval_monomial(&self, z: &MpComplex, k: usize) -> MpComplex {
        let mut acc = MpComplex::zero(self.prec);
        for c in self.coeff[k].iter().rev() {
            acc = &(&acc * z) + c;
        }
        acc
    }

    /// Capacity estimates `((√((n+1)/π)/λ_n)^(1/(n+1)), λ_n^(-1/n))` at the
    /// top degree.
    pub fn estimate_capacity(&self) -> Result<(f64, f64)> {
        self.estimate_capacity_at(self.degree)
    }

    pub fn estimate_capacity_at(&self, n: usize) -> Result<(f64, f64)> {
        if !(10..=self.degree).contains(&n) {
            return Err(Error::precondition(format!("capacity estimate needs 10 ≤ n ≤ {}, got {n}", self.degree)));
        }
        let p = self.prec;
        let ln_l = self.lambda[n].ln();
        let np1 = MpReal::from_i64(n as i64 + 1, p);
        let lead = (&np1 / &MpReal::pi(p)).sqrt().ln();
        let refined = ((&lead - &ln_l) / &np1).exp().to_f64();
        let raw = (-(&ln_l / &MpReal::from_i64(n as i64, p))).exp().to_f64();
        Ok((refined, raw))
    }

    /// `max_{j,k} |⟨P_j, P_k⟩ - δ_jk|` with inner products through `mm`.
    pub fn orthonormality_residual(&self, mm: &MomentMatrix) -> f64 {
        let mu = mm.rows();
        let n = self.degree;
        let p = self.prec;
        let w: Vec<Vec<MpComplex>> = (0..=n)
            .map(|j| {
                (0..=n)
                    .map(|i| {
                        let mut acc = MpComplex::zero(p);
                        for (l, c) in self.coeff[j].iter().enumerate() {
                            acc.add_conj_mul(c, &mu[l][i]);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        let mut worst: f64 = 0.0;
        for j in 0..=n {
            for k in 0..=n {
                let mut g = MpComplex::zero(p);
                for (i, c) in self.coeff[k].iter().enumerate() {
                    g.add_mul(&w[j][i], c);
                }
                if j == k {
                    g.re = &g.re - 1.0;
                }
                worst = worst.max(g.abs().to_f64());
            }
        }
        worst
    }

    pub fn to_file(&self) -> BasisFile {
        let pair = |z: &MpComplex| [z.re.to_decimal(), z.im.to_decimal()];
        BasisFile {
            degree: self.degree,
            precision_bits: self.prec.bits(),
            lambda: self.lambda.iter().map(|l| l.to_decimal()).collect(),
            hessenberg: (0..self.degree).map(|k| (0..=k + 1).map(|j| pair(&self.h[j][k])).collect()).collect(),
            coefficients: self.coeff.iter().map(|r| r.iter().map(pair).collect()).collect(),
        }
    }

    pub fn from_file(f: &BasisFile) -> Result<Self> {
        let prec = Precision::new(f.precision_bits)?;
        let n = f.degree;
        if f.lambda.len() != n + 1 || f.hessenberg.len() != n || f.coefficients.len() != n + 1 {
            return Err(Error::input("basis file: array lengths do not match degree"));
        }
        let parse = |p: &[String; 2]| -> Result<MpComplex> {
            Ok(MpComplex::new(MpReal::parse(&p[0], prec)?, MpReal::parse(&p[1], prec)?))
        };
        let lambda = f.lambda.iter().map(|s| MpReal::parse(s, prec)).collect::<Result<Vec<_>>>()?;
        let mut h = vec![vec![MpComplex::zero(prec); n]; n + 1];
        for (k, col) in f.hessenberg.iter().enumerate() {
            if col.len() != k + 2 {
                return Err(Error::input(format!("basis file: Hessenberg column {k} has wrong length")));
            }
            for (j, e) in col.iter().enumerate() {
                h[j][k] = parse(e)?;
            }
        }
        let coeff = f
            .coefficients
            .iter()
            .enumerate()
            .map(|(k, r)| {
                if r.len() != k + 1 {
                    return Err(Error::input(format!("basis file: coefficient row {k} has wrong length")));
                }
                r.iter().map(parse).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let h64 = h.iter().map(|r| r.iter().map(|z| z.to_c64()).collect()).collect();
        Ok(BergmanBasis { degree: n, prec, h, lambda, coeff, digits_lost: vec![0.0; n + 1], h64 })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("basis serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        BergmanBasis::from_file(&serde_json::from_str(s)?)
    }
}

/// On-disk form of a basis; numbers are decimal strings at full precision.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BasisFile {
    pub degree: usize,
    pub precision_bits: u32,
    pub lambda: Vec<String>,
    /// Column `k` holds `H[0..=k+1][k]` as `[re, im]`.
    pub hessenberg: Vec<Vec<[String; 2]>>,
    /// Row `k` holds the monomial coefficients of `P_k`.
    pub coefficients: Vec<Vec<[String; 2]>>,
}
