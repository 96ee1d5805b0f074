//! Square roots of Christoffel functions `Λ_n(z) = 1/√(Σ_{k≤n} |P_k(z)|²)`,
//! grid fields, level curves and boundary reconstruction.

use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BergmanBasis;
use crate::contour::{marching_squares, Grid, Polyline};
use crate::error::{Error, Result};

/// Level constant for the `κ/n` detector. On the unit disk
/// `Λ_n(1) = √(2π/((n+1)(n+2)))`, so with this value the level set of
/// `Λ_100` at `κ/100` is exactly the unit circle.
pub const KAPPA: f64 = 2.469_614_471_711_172;

pub fn kappa_closed_form() -> f64 {
    100.0 * (2.0 * std::f64::consts::PI / (101.0 * 102.0)).sqrt()
}

/// `log Λ_n(z)`, accumulated in scaled form so that large `|P_k(z)|` at
/// exterior points do not overflow.
pub fn log_lambda_n(basis: &BergmanBasis, z: C64, n: usize) -> f64 {
    let (vals, log_scale) = basis.eval_polys_scaled(z, n);
    let s: f64 = vals.iter().map(|v| v.norm_sqr()).sum();
    -0.5 * s.ln() - log_scale
}

pub fn lambda_n(basis: &BergmanBasis, z: C64, n: usize) -> f64 {
    log_lambda_n(basis, z, n).exp().max(f64::MIN_POSITIVE)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChristoffelField {
    pub grid: Grid,
    pub n: usize,
    pub basis_degree: usize,
    pub precision_bits: u32,
    /// Row-major, `values[iy * nx + ix]`.
    #[serde(skip)]
    pub values: Vec<f64>,
}

pub fn evaluate_field(basis: &BergmanBasis, grid: &Grid, n: usize) -> Result<ChristoffelField> {
    grid.validate()?;
    if n > basis.degree() {
        return Err(Error::precondition(format!("n = {n} exceeds basis degree {}", basis.degree())));
    }
    let nodes: Vec<C64> = grid.nodes().collect();
    let values = nodes.par_iter().map(|&z| lambda_n(basis, z, n)).collect();
    Ok(ChristoffelField { grid: *grid, n, basis_degree: basis.degree(), precision_bits: basis.precision().bits(), values })
}

impl ChristoffelField {
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.grid.nx + ix]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)))
    }

    /// `count` levels in geometric progression between the smallest and
    /// largest positive values.
    pub fn default_levels(&self, count: usize) -> Vec<f64> {
        let (lo, hi) = self.min_max();
        if count == 0 || !(lo > 0.0) || !(hi > lo) {
            return Vec::new();
        }
        if count == 1 {
            return vec![(lo * hi).sqrt()];
        }
        let r = (hi / lo).ln();
        (0..count).map(|i| lo * (r * i as f64 / (count - 1) as f64).exp()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,value\n");
        for iy in 0..self.grid.ny {
            for ix in 0..self.grid.nx {
                let z = self.grid.node(ix, iy);
                let _ = writeln!(s, "{},{},{}", z.re, z.im, self.value(ix, iy));
            }
        }
        s
    }

    /// JSON header accompanying the CSV stream.
    pub fn header_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("field header serializes")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelCurve {
    pub level: f64,
    pub polylines: Vec<Polyline>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct LevelCurveSet {
    /// Detector that produced the set, if any.
    pub method: Option<String>,
    pub curves: Vec<LevelCurve>,
}

impl LevelCurveSet {
    pub fn polylines(&self) -> impl Iterator<Item = &Polyline> {
        self.curves.iter().flat_map(|c| c.polylines.iter())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,poly_id,x,y\n");
        let mut id = 0;
        for c in &self.curves {
            for p in &c.polylines {
                for z in &p.points {
                    let _ = writeln!(s, "{},{},{},{}", c.level, id, z.re, z.im);
                }
                id += 1;
            }
        }
        s
    }
}

/// Marching-squares level curves; saddle cells consult the true `Λ_n` at
/// the cell center.
pub fn extract_level_curves(field: &ChristoffelField, basis: &BergmanBasis, levels: &[f64]) -> Result<LevelCurveSet> {
    if field.grid.nx < 2 || field.grid.ny < 2 {
        return Err(Error::precondition("level curves need a grid of at least 2×2"));
    }
    if let Some(l) = levels.iter().find(|l| !(**l > 0.0)) {
        return Err(Error::precondition(format!("levels must be positive, got {l}")));
    }
    let n = field.n;
    let center = |z: C64| lambda_n(basis, z, n);
    let curves = levels
        .iter()
        .map(|&level| LevelCurve { level, polylines: marching_squares(&field.grid, &field.values, level, &center) })
        .collect();
    Ok(LevelCurveSet { method: None, curves })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    /// Level set at `KAPPA / n`.
    KappaOverN,
    /// Level set through the median value of `Λ_n` at the maxima of
    /// `|∇ log Λ_n|` along grid rows and columns.
    Ridge,
}

impl Detector {
    pub fn tag(self) -> &'static str {
        match self {
            Detector::KappaOverN => "kappa_over_n",
            Detector::Ridge => "ridge",
        }
    }
}

impl std::str::FromStr for Detector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kappa_over_n" | "kappa" => Ok(Detector::KappaOverN),
            "ridge" => Ok(Detector::Ridge),
            _ => Err(Error::input(format!("unknown detector {s:?} (expected kappa_over_n or ridge)"))),
        }
    }
}

pub fn reconstruct_boundary(field: &ChristoffelField, basis: &BergmanBasis, detector: Detector) -> Result<LevelCurveSet> {
    let level = match detector {
        Detector::KappaOverN => KAPPA / field.n.max(1) as f64,
        Detector::Ridge => ridge_level(field)?,
    };
    let mut set = extract_level_curves(field, basis, &[level])?;
    if set.curves[0].polylines.is_empty() {
        return Err(Error::precondition(format!(
            "degree too low for frame: no level set at {level:.4e} (field range {:?})",
            field.min_max()
        )));
    }
    set.method = Some(detector.tag().to_string());
    Ok(set)
}

fn ridge_level(field: &ChristoffelField) -> Result<f64> {
    let g = &field.grid;
    let (nx, ny) = (g.nx, g.ny);
    if nx < 3 || ny < 3 {
        return Err(Error::precondition("ridge detector needs a grid of at least 3×3"));
    }
    let lv: Vec<f64> = field.values.iter().map(|v| v.ln()).collect();
    let at = |ix: usize, iy: usize| lv[iy * nx + ix];
    let (dx, dy) = (g.dx(), g.dy());
    let mut grad = vec![0.0; nx * ny];
    for iy in 1..ny - 1 {
        for ix in 1..nx - 1 {
            let gx = (at(ix + 1, iy) - at(ix - 1, iy)) / (2.0 * dx);
            let gy = (at(ix, iy + 1) - at(ix, iy - 1)) / (2.0 * dy);
            grad[iy * nx + ix] = gx.hypot(gy);
        }
    }
    let gmax = grad.iter().cloned().fold(0.0, f64::max);
    let mut picks = Vec::new();
    let mut consider = |i: usize, a: usize, b: usize| {
        if grad[i] >= 0.25 * gmax && grad[i] > grad[a] && grad[i] >= grad[b] {
            picks.push(lv[i]);
        }
    };
    for iy in 1..ny - 1 {
        for ix in 2..nx - 2 {
            let i = iy * nx + ix;
            consider(i, i - 1, i + 1);
        }
    }
    for iy in 2..ny - 2 {
        for ix in 1..nx - 1 {
            let i = iy * nx + ix;
            consider(i, i - nx, i + nx);
        }
    }
    if picks.is_empty() {
        return Err(Error::precondition("degree too low for frame: no gradient ridge found"));
    }
    picks.sort_by(|a, b| a.total_cmp(b));
    Ok(picks[picks.len() / 2].exp())
}

/// Frame around `zeros`: their bounding box inflated by 25%, then grown by
/// 25% steps until `Λ_n` on the frame border is below `KAPPA/n`, so that the
/// reconstruction level set closes inside the frame.
pub fn auto_frame(basis: &BergmanBasis, n: usize, zeros: &[C64], nodes_per_axis: usize) -> Result<Grid> {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for z in zeros {
        x0 = x0.min(z.re);
        x1 = x1.max(z.re);
        y0 = y0.min(z.im);
        y1 = y1.max(z.im);
    }
    if zeros.is_empty() {
        (x0, x1, y0, y1) = (0.0, 0.0, 0.0, 0.0);
    }
    let c = C64::new(0.5 * (x0 + x1), 0.5 * (y0 + y1));
    let mut hx = 0.5 * (x1 - x0) * 1.25;
    let mut hy = 0.5 * (y1 - y0) * 1.25;
    let floor = (0.1 * hx.max(hy)).max(0.25);
    hx = hx.max(floor);
    hy = hy.max(floor);
    let level = KAPPA / n.max(1) as f64;
    for _ in 0..40 {
        let g = Grid::new(c.re - hx, c.re + hx, c.im - hy, c.im + hy, nodes_per_axis, nodes_per_axis)?;
        let border_max = g.border(64).iter().map(|&z| lambda_n(basis, z, n)).fold(0.0, f64::max);
        if border_max < level {
            return Ok(g);
        }
        hx *= 1.25;
        hy *= 1.25;
    }
    Err(Error::numerical("could not size a frame whose border lies below the reconstruction level"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::orthonormalize;
    use crate::contour::hausdorff;
    use crate::geometry::{ArchipelagoSpec, IslandSpec};
    use crate::moments::{compute_moments, QuadConfig};
    use crate::mp::Precision;
    use std::f64::consts::PI;

    fn disk(n: usize, prec: Precision) -> BergmanBasis {
        let a = ArchipelagoSpec::new(vec![IslandSpec::disk(C64::new(0.0, 0.0), 1.0)]).unwrap();
        orthonormalize(&compute_moments(&a, n + 1, &QuadConfig::new(prec)).unwrap(), n).unwrap()
    }

    fn circle(c: C64, r: f64) -> Polyline {
        Polyline { points: (0..720).map(|k| c + C64::from_polar(r, k as f64 * PI / 360.0)).collect(), closed: true }
    }

    #[test]
    fn kappa_matches_closed_form() {
        assert!((KAPPA - kappa_closed_form()).abs() < 1e-15);
    }

    #[test]
    fn disk_values() {
        let b = disk(100, Precision::DOUBLE);
        assert!((lambda_n(&b, C64::new(0.0, 0.0), 7) - PI.sqrt()).abs() < 1e-14);
        assert!((lambda_n(&b, C64::new(1.0, 0.0), 2) - (PI / 6.0).sqrt()).abs() < 1e-14);
        // Λ(z) = √π (1 - |z|²) in the limit
        let v = lambda_n(&b, C64::new(0.5, 0.0), 100);
        assert!((v - PI.sqrt() * 0.75).abs() < 1e-10);
        // far outside the sum is rescaled rather than overflowing
        let far = log_lambda_n(&b, C64::new(1e4, 0.0), 100);
        assert!(far.is_finite() && far < -900.0);
    }

    #[test]
    fn field_is_pure_function_of_nodes() {
        let b = disk(20, Precision::DOUBLE);
        let one = evaluate_field(&b, &Grid::new(0.0, 0.0, 0.0, 0.0, 1, 1).unwrap(), 20).unwrap();
        assert!((one.values[0] - PI.sqrt()).abs() < 1e-14);
        let g1 = Grid::square(C64::new(0.1, 0.0), 1.2, 11).unwrap();
        let g2 = Grid::square(C64::new(0.1, 0.0), 1.2, 21).unwrap();
        let f1 = evaluate_field(&b, &g1, 20).unwrap();
        let f2 = evaluate_field(&b, &g2, 20).unwrap();
        for iy in 0..11 {
            for ix in 0..11 {
                assert_eq!(f1.value(ix, iy).to_bits(), f2.value(2 * ix, 2 * iy).to_bits());
            }
        }
        assert!(f1.values.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn disk_level_curve_and_reconstruction() {
        let b = disk(100, Precision::DOUBLE);
        let g = Grid::square(C64::new(0.0, 0.0), 1.5, 400).unwrap();
        let f = evaluate_field(&b, &g, 100).unwrap();
        let set = extract_level_curves(&f, &b, &[PI.sqrt() * 0.51, 1e6]).unwrap();
        assert_eq!(set.curves[0].polylines.len(), 1);
        let dev = set.curves[0].polylines[0].points.iter().map(|z| (z.norm() - 0.7).abs()).fold(0.0, f64::max);
        assert!(dev < 2.0 * g.dx());
        assert!(set.curves[1].polylines.is_empty());

        let rec = reconstruct_boundary(&f, &b, Detector::KappaOverN).unwrap();
        assert_eq!(rec.method.as_deref(), Some("kappa_over_n"));
        let h = hausdorff(&rec.curves[0].polylines, &[circle(C64::new(0.0, 0.0), 1.0)], 0.005);
        assert!(h < 0.02, "{h}");
        let ridge = reconstruct_boundary(&f, &b, Detector::Ridge).unwrap();
        let h = hausdorff(&ridge.curves[0].polylines, &[circle(C64::new(0.0, 0.0), 1.0)], 0.005);
        assert!(h < 0.1, "{h}");
    }

    #[test]
    fn low_degree_fails_or_inflates() {
        let a = ArchipelagoSpec::new(vec![
            IslandSpec::disk(C64::new(-2.0, 0.0), 1.0),
            IslandSpec::disk(C64::new(3.0, 0.0), 2.0 / 3.0),
        ])
        .unwrap();
        let b = orthonormalize(&compute_moments(&a, 6, &QuadConfig::new(Precision::P128)).unwrap(), 5).unwrap();
        let g = Grid::new(-3.5, 4.2, -2.0, 2.0, 200, 100).unwrap();
        let f = evaluate_field(&b, &g, 5).unwrap();
        let truth = [circle(C64::new(-2.0, 0.0), 1.0), circle(C64::new(3.0, 0.0), 2.0 / 3.0)];
        match reconstruct_boundary(&f, &b, Detector::KappaOverN) {
            Err(e) => assert!(e.to_string().contains("degree too low")),
            Ok(set) => assert!(hausdorff(&set.curves[0].polylines, &truth, 0.01) > 0.2),
        }
    }

    #[test]
    fn default_levels_are_geometric() {
        let b = disk(10, Precision::DOUBLE);
        let f = evaluate_field(&b, &Grid::square(C64::new(0.0, 0.0), 2.0, 31).unwrap(), 10).unwrap();
        let l = f.default_levels(12);
        assert_eq!(l.len(), 12);
        let (lo, hi) = f.min_max();
        assert!((l[0] - lo).abs() < 1e-12 * lo && (l[11] - hi).abs() < 1e-12 * hi);
        let r = l[1] / l[0];
        assert!(l.windows(2).all(|w| (w[1] / w[0] - r).abs() < 1e-9));
    }

    #[test]
    fn auto_frame_contains_disk() {
        let b = disk(60, Precision::DOUBLE);
        let g = auto_frame(&b, 60, &[C64::new(0.0, 0.0); 3], 50).unwrap();
        assert!(g.x_min < -1.0 && g.x_max > 1.0 && g.y_min < -1.0);
    }
}
