//! Exterior Green function with pole at infinity for unions of disjoint
//! disks, by least-squares collocation of
//!
//! ```text
//! g(z) = c0 + Σ_j d_j log|z - c_j| + Σ_{j,k} Re(a_{jk} (z - c_j)^(-k)),   Σ_j d_j = 1.
//! ```
//!
//! `g = Re F` with `F` analytic off the disks up to the logarithmic periods,
//! so critical points of `g` are the zeros of
//! `F'(z) = Σ d_j/(z - c_j) - Σ k a_{jk} (z - c_j)^(-k-1)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::contour::{marching_squares, Grid, Polyline};
use crate::error::{Error, Result};

/// Largest boundary residual accepted by [`fit_green`].
pub const FIT_TOL: f64 = 1e-10;
/// Laurent orders tried in turn, starting from the requested one.
pub const K_LADDER: [usize; 10] = [4, 8, 12, 16, 20, 24, 28, 32, 36, 40];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GreenModel {
    pub centers: Vec<C64>,
    pub radii: Vec<f64>,
    pub c0: f64,
    pub d: Vec<f64>,
    /// `a[j][k-1]` multiplies `(z - c_j)^(-k)`.
    pub a: Vec<Vec<C64>>,
    pub nodes_per_disk: usize,
    /// Max `|g|` over collocation nodes and the midpoints between them.
    pub residual: f64,
    /// `(K, residual)` for every order tried.
    pub residual_history: Vec<(usize, f64)>,
    pub capacity: f64,
}

/// Fit with Laurent order `k` and `m` collocation nodes per circle,
/// escalating `k` along [`K_LADDER`] until the residual is below [`FIT_TOL`].
pub fn fit_green(disks: &[(C64, f64)], k: usize, m: usize) -> Result<GreenModel> {
    check_disks(disks)?;
    if m < 4 * (k + 1) {
        return Err(Error::precondition(format!("need at least {} nodes per disk for K = {k}, got {m}", 4 * (k + 1))));
    }
    let mut orders = vec![k];
    orders.extend(K_LADDER.iter().copied().filter(|&x| x > k));
    let mut history = Vec::new();
    for kk in orders {
        let mm = m.max(4 * (kk + 1));
        let mut model = fit_once(disks, kk, mm)?;
        history.push((kk, model.residual));
        if model.residual <= FIT_TOL {
            model.residual_history = history;
            return Ok(model);
        }
    }
    Err(Error::numerical(format!(
        "Green fit residual stayed above {FIT_TOL:e}; history (K, residual): {history:?}"
    )))
}

fn check_disks(disks: &[(C64, f64)]) -> Result<()> {
    if disks.is_empty() {
        return Err(Error::input("Green model needs at least one disk"));
    }
    for (i, &(c, r)) in disks.iter().enumerate() {
        if !(r > 0.0) || !c.re.is_finite() || !c.im.is_finite() {
            return Err(Error::input(format!("disk {i}: invalid center or radius")));
        }
        for &(c2, r2) in &disks[..i] {
            if (c - c2).norm() <= r + r2 {
                return Err(Error::input(format!("disk {i} overlaps or touches another disk")));
            }
        }
    }
    Ok(())
}

fn fit_once(disks: &[(C64, f64)], k: usize, m: usize) -> Result<GreenModel> {
    let nd = disks.len();
    let ncol = nd + 2 * nd * k;
    let nodes: Vec<C64> = disks
        .iter()
        .flat_map(|&(c, r)| (0..m).map(move |i| c + C64::from_polar(r, std::f64::consts::TAU * i as f64 / m as f64)))
        .collect();
    let (cn, _) = disks[nd - 1];
    // Column layout: c0, d_1..d_{N-1} (d_N eliminated), then (Re, Im) pairs
    // of scaled Laurent coefficients a'_{jk} = a_{jk} / r_j^k.
    let row = |z: C64| -> Vec<f64> {
        let mut v = vec![0.0; ncol];
        v[0] = 1.0;
        let ln_n = (z - cn).norm().ln();
        for (j, &(c, _)) in disks.iter().enumerate().take(nd - 1) {
            v[1 + j] = (z - c).norm().ln() - ln_n;
        }
        for (j, &(c, r)) in disks.iter().enumerate() {
            let w = C64::new(r, 0.0) / (z - c);
            let mut p = C64::new(1.0, 0.0);
            for kk in 0..k {
                p *= w;
                let col = nd + 2 * (j * k + kk);
                v[col] = p.re;
                v[col + 1] = -p.im;
            }
        }
        v
    };
    let a = DMatrix::from_fn(nodes.len(), ncol, |i, j| row(nodes[i])[j]);
    let b = DVector::from_iterator(nodes.len(), nodes.iter().map(|z| -(z - cn).norm().ln()));
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-13 * smax) {
        return Err(Error::numerical(format!(
            "Green collocation matrix is rank deficient (σ_min/σ_max = {:.3e})",
            smin / smax
        )));
    }
    let x = svd.solve(&b, 1e-14 * smax).map_err(|e| Error::numerical(e.to_string()))?;
    let c0 = x[0];
    let mut d: Vec<f64> = (0..nd - 1).map(|j| x[1 + j]).collect();
    d.push(1.0 - d.iter().sum::<f64>());
    let coeffs: Vec<Vec<C64>> = disks
        .iter()
        .enumerate()
        .map(|(j, &(_, r))| {
            (0..k)
                .map(|kk| {
                    let col = nd + 2 * (j * k + kk);
                    C64::new(x[col], x[col + 1]) * r.powi(kk as i32 + 1)
                })
                .collect()
        })
        .collect();
    let mut model = GreenModel {
        centers: disks.iter().map(|d| d.0).collect(),
        radii: disks.iter().map(|d| d.1).collect(),
        c0,
        d,
        a: coeffs,
        nodes_per_disk: m,
        residual: 0.0,
        residual_history: Vec::new(),
        capacity: (-c0).exp(),
    };
    let mut worst: f64 = 0.0;
    for &(c, r) in disks {
        for i in 0..2 * m {
            let z = c + C64::from_polar(r, std::f64::consts::PI * i as f64 / m as f64);
            worst = worst.max(model.eval_unchecked(z).abs());
        }
    }
    model.residual = worst;
    Ok(model)
}

impl GreenModel {
    pub fn n_disks(&self) -> usize {
        self.centers.len()
    }

    pub fn disks(&self) -> Vec<(C64, f64)> {
        self.centers.iter().copied().zip(self.radii.iter().copied()).collect()
    }

    /// Index of the disk whose closed interior contains `z`, with a relative
    /// tolerance that admits boundary points.
    pub fn disk_containing(&self, z: C64) -> Option<usize> {
        (0..self.n_disks()).find(|&j| (z - self.centers[j]).norm() < self.radii[j] * (1.0 - 1e-12))
    }

    pub fn eval_unchecked(&self, z: C64) -> f64 {
        let mut g = self.c0;
        for (j, &c) in self.centers.iter().enumerate() {
            let w = z - c;
            g += self.d[j] * w.norm().ln();
            let inv = w.inv();
            let mut p = C64::new(1.0, 0.0);
            for a in &self.a[j] {
                p *= inv;
                g += (a * p).re;
            }
        }
        g
    }

    /// `g_Ω(z, ∞)`; `z` must lie outside every open disk.
    pub fn eval(&self, z: C64) -> Result<f64> {
        if let Some(j) = self.disk_containing(z) {
            return Err(Error::precondition(format!("point {z} lies inside disk {j}; g is defined outside the disks")));
        }
        Ok(self.eval_unchecked(z))
    }

    /// `F'(z)`; the gradient of `g` as a vector is `conj(F'(z))`.
    pub fn dfdz(&self, z: C64) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for (j, &c) in self.centers.iter().enumerate() {
            let inv = (z - c).inv();
            s += self.d[j] * inv;
            let mut p = inv;
            for (kk, a) in self.a[j].iter().enumerate() {
                p *= inv;
                s -= (kk as f64 + 1.0) * a * p;
            }
        }
        s
    }

    fn d2fdz2(&self, z: C64) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for (j, &c) in self.centers.iter().enumerate() {
            let inv = (z - c).inv();
            s -= self.d[j] * inv * inv;
            let mut p = inv * inv;
            for (kk, a) in self.a[j].iter().enumerate() {
                p *= inv;
                let k = kk as f64 + 1.0;
                s += k * (k + 1.0) * a * p;
            }
        }
        s
    }

    /// `(d_j, flux_j)`: the logarithmic weights and, independently, the
    /// normal derivative of `g` integrated around each disk by finite
    /// differences and the trapezoid rule, divided by `2π`.
    pub fn periods(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n_disks();
        let flux = (0..n)
            .map(|j| {
                let (c, r) = (self.centers[j], self.radii[j]);
                let gap = (0..n)
                    .filter(|&i| i != j)
                    .map(|i| (self.centers[i] - c).norm() - self.radii[i] - r)
                    .fold(r, f64::min);
                let rho = r + 0.25 * gap;
                let h = 1e-3 * gap;
                let nodes = 512;
                let mut acc = 0.0;
                for i in 0..nodes {
                    let u = C64::from_polar(1.0, std::f64::consts::TAU * i as f64 / nodes as f64);
                    let g = |t: f64| self.eval_unchecked(c + u * t);
                    let dn = (-g(rho + 2.0 * h) + 8.0 * g(rho + h) - 8.0 * g(rho - h) + g(rho - 2.0 * h)) / (12.0 * h);
                    acc += dn * rho;
                }
                acc / nodes as f64
            })
            .collect();
        (self.d.clone(), flux)
    }

    /// Saddle points of `g` with their levels `R = e^g`, `R′ = min`,
    /// `R″ = max`, and the per-island `R_j`.
    pub fn critical_levels(&self) -> Result<CriticalLevels> {
        let n = self.n_disks();
        if n < 2 {
            return Err(Error::precondition("a single island has no critical points"));
        }
        let mut points = Vec::new();
        for seeds in [41usize, 81, 161] {
            points = self.saddle_search(seeds);
            if points.len() >= n - 1 {
                break;
            }
        }
        if points.len() < n - 1 {
            return Err(Error::numerical(format!(
                "missing critical points: found {} of {} (coincident saddles of higher multiplicity are not resolved)",
                points.len(),
                n - 1
            )));
        }
        points.sort_by(|a, b| a.1.total_cmp(&b.1));
        let levels: Vec<f64> = points.iter().map(|p| p.1.exp()).collect();
        let r_prime = levels[0];
        let r_second = *levels.last().unwrap();

        // Each saddle joins the islands its two descending flow lines reach;
        // processing saddles upward, an island's R_j is the first level at
        // which its component merges with another.
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut Vec<usize>, i: usize) -> usize {
            let mut r = i;
            while p[r] != r {
                r = p[r];
            }
            p[i] = r;
            r
        }
        let mut r_j = vec![f64::NAN; n];
        for (s, &(z, _)) in points.iter().enumerate() {
            let h = (-self.d2fdz2(z).conj()).sqrt();
            let h = h / h.norm();
            let a = self.descend(z + h * 1e-4);
            let b = self.descend(z - h * 1e-4);
            let (Some(a), Some(b)) = (a, b) else { continue };
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                continue;
            }
            for i in 0..n {
                let ri = find(&mut parent, i);
                if (ri == ra || ri == rb) && r_j[i].is_nan() {
                    r_j[i] = levels[s];
                }
            }
            parent[ra] = rb;
        }
        Ok(CriticalLevels { points: points.iter().map(|p| p.0).collect(), levels, r_prime, r_second, r_j })
    }

    fn saddle_search(&self, seeds: usize) -> Vec<(C64, f64)> {
        let (x0, x1, y0, y1) = self.bounding_box();
        let grid = match Grid::new(x0, x1, y0, y1, seeds, seeds) {
            Ok(g) => g,
            Err(_) => return Vec::new(),
        };
        let scale = (x1 - x0).max(y1 - y0);
        let mut found: Vec<(C64, f64)> = Vec::new();
        for z0 in grid.nodes() {
            if self.outside_margin(z0) < 0.0 {
                continue;
            }
            let mut z = z0;
            let mut ok = false;
            for _ in 0..60 {
                let f = self.dfdz(z);
                let step = f / self.d2fdz2(z);
                if !step.re.is_finite() || !step.im.is_finite() {
                    break;
                }
                let step = if step.norm() > 0.25 * scale { step * (0.25 * scale / step.norm()) } else { step };
                z -= step;
                if step.norm() < 1e-12 * scale.max(1.0) {
                    ok = true;
                    break;
                }
            }
            if !ok || self.outside_margin(z) <= 1e-9 || self.dfdz(z).norm() > 1e-9 {
                continue;
            }
            if z.re < x0 - scale || z.re > x1 + scale || z.im < y0 - scale || z.im > y1 + scale {
                continue;
            }
            if found.iter().all(|p| (p.0 - z).norm() > 1e-6) {
                found.push((z, self.eval_unchecked(z)));
            }
        }
        found
    }

    /// Signed distance to the union of disks (negative inside).
    fn outside_margin(&self, z: C64) -> f64 {
        self.centers
            .iter()
            .zip(&self.radii)
            .map(|(c, r)| (z - c).norm() - r)
            .fold(f64::INFINITY, f64::min)
    }

    /// Follow `-∇g` until a disk is reached.
    fn descend(&self, mut z: C64) -> Option<usize> {
        for _ in 0..200_000 {
            for (j, (c, r)) in self.centers.iter().zip(&self.radii).enumerate() {
                if (z - c).norm() <= r * (1.0 + 1e-3) {
                    return Some(j);
                }
            }
            let grad = self.dfdz(z).conj();
            let gn = grad.norm();
            if !(gn > 0.0) {
                return None;
            }
            let step = (0.05 * self.outside_margin(z)).clamp(1e-5, 0.05);
            z -= grad / gn * step;
        }
        None
    }

    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (c, r) in self.centers.iter().zip(&self.radii) {
            b.0 = b.0.min(c.re - r);
            b.1 = b.1.max(c.re + r);
            b.2 = b.2.min(c.im - r);
            b.3 = b.3.max(c.im + r);
        }
        b
    }

    /// `L_R = {g = log R}` by marching squares on a frame whose border lies
    /// above the level.
    pub fn level_curve(&self, r: f64, nodes_per_axis: usize) -> Result<Vec<Polyline>> {
        if !(r > 1.0) {
            return Err(Error::precondition(format!("level R = {r} must exceed 1")));
        }
        if self.n_disks() >= 2 {
            let cl = self.critical_levels()?;
            if let Some(l) = cl.levels.iter().find(|&&l| (l - r).abs() <= 1e-9 * l) {
                return Err(Error::precondition(format!("singular level: R = {r} is the critical level {l}")));
            }
        }
        let target = r.ln();
        let (x0, x1, y0, y1) = self.bounding_box();
        let c = C64::new(0.5 * (x0 + x1), 0.5 * (y0 + y1));
        let mut half = 0.5 * (x1 - x0).max(y1 - y0) * 1.1;
        let field = |z: C64| if self.disk_containing(z).is_some() { -1.0 } else { self.eval_unchecked(z) };
        for _ in 0..60 {
            let g = Grid::square(c, half, nodes_per_axis)?;
            let border_min = g.border(64).into_iter().map(field).fold(f64::INFINITY, f64::min);
            if border_min > target {
                let values: Vec<f64> = g.nodes().map(field).collect();
                return Ok(marching_squares(&g, &values, target, &field));
            }
            half *= 1.25;
        }
        Err(Error::numerical(format!("could not frame the level curve R = {r}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriticalLevels {
    pub points: Vec<C64>,
    /// `e^{g}` at each saddle, ascending.
    pub levels: Vec<f64>,
    pub r_prime: f64,
    pub r_second: f64,
    /// Largest `R` for which the component of `{g < log R}` around island
    /// `j` contains no other island.
    pub r_j: Vec<f64>,
}
