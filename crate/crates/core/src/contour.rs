//! Rectangular grids, marching squares and curve distances.

use std::collections::HashMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node lattice `nx × ny` spanning `[x_min, x_max] × [y_min, y_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, nx: usize, ny: usize) -> Result<Self> {
        let g = Grid { x_min, x_max, y_min, y_max, nx, ny };
        g.validate()?;
        Ok(g)
    }

    /// Square grid of side `2·half` centered at `c`.
    pub fn square(c: C64, half: f64, n: usize) -> Result<Self> {
        Grid::new(c.re - half, c.re + half, c.im - half, c.im + half, n, n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::input("grid must have at least one node per axis"));
        }
        let ok = |a: f64, b: f64, n: usize| a.is_finite() && b.is_finite() && (a < b || (n == 1 && a == b));
        if !ok(self.x_min, self.x_max, self.nx) || !ok(self.y_min, self.y_max, self.ny) {
            return Err(Error::input(format!("invalid grid extent {self:?}")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        if self.nx > 1 { (self.x_max - self.x_min) / (self.nx - 1) as f64 } else { 0.0 }
    }

    pub fn dy(&self) -> f64 {
        if self.ny > 1 { (self.y_max - self.y_min) / (self.ny - 1) as f64 } else { 0.0 }
    }

    /// Node `(ix, iy)`; row-major storage index is `iy * nx + ix`.
    pub fn node(&self, ix: usize, iy: usize) -> C64 {
        let x = if self.nx > 1 { self.x_min + (self.x_max - self.x_min) * ix as f64 / (self.nx - 1) as f64 } else { self.x_min };
        let y = if self.ny > 1 { self.y_min + (self.y_max - self.y_min) * iy as f64 / (self.ny - 1) as f64 } else { self.y_min };
        C64::new(x, y)
    }

    pub fn nodes(&self) -> impl Iterator<Item = C64> + '_ {
        (0..self.ny).flat_map(move |iy| (0..self.nx).map(move |ix| self.node(ix, iy)))
    }

    /// Points along the frame boundary, `per_side` per edge.
    pub fn border(&self, per_side: usize) -> Vec<C64> {
        let mut out = Vec::with_capacity(4 * per_side);
        for i in 0..per_side {
            let t = i as f64 / per_side as f64;
            let x = self.x_min + t * (self.x_max - self.x_min);
            let y = self.y_min + t * (self.y_max - self.y_min);
            out.push(C64::new(x, self.y_min));
            out.push(C64::new(self.x_max, y));
            out.push(C64::new(self.x_max - (x - self.x_min), self.y_max));
            out.push(C64::new(self.x_min, self.y_max - (y - self.y_min)));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<C64>,
    /// The last point connects back to the first.
    pub closed: bool,
}

impl Polyline {
    /// Segments including the closing one for closed polylines.
    pub fn segments(&self) -> impl Iterator<Item = (C64, C64)> + '_ {
        let n = self.points.len();
        let m = if self.closed && n > 1 { n } else { n.saturating_sub(1) };
        (0..m).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| (b - a).norm()).sum()
    }

    pub fn distance(&self, z: C64) -> f64 {
        if self.points.len() == 1 {
            return (z - self.points[0]).norm();
        }
        self.segments().map(|(a, b)| segment_distance(z, a, b)).fold(f64::INFINITY, f64::min)
    }

    /// Points spaced at most `h` apart along the polyline.
    pub fn densify(&self, h: f64) -> Vec<C64> {
        let mut out = Vec::new();
        for (a, b) in self.segments() {
            let k = ((b - a).norm() / h).ceil().max(1.0) as usize;
            for i in 0..k {
                out.push(a + (b - a) * (i as f64 / k as f64));
            }
        }
        if !self.closed {
            if let Some(&p) = self.points.last() {
                out.push(p);
            }
        }
        if out.is_empty() {
            out.extend(self.points.iter().copied());
        }
        out
    }

    pub fn centroid(&self) -> C64 {
        let n = self.points.len().max(1) as f64;
        self.points.iter().sum::<C64>() / n
    }
}

pub fn segment_distance(z: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let l2 = d.norm_sqr();
    if l2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * d.conj()).re / l2).clamp(0.0, 1.0);
    (z - (a + d * t)).norm()
}

/// Distance from `z` to the nearest of `curves`.
pub fn distance_to_curves(z: C64, curves: &[Polyline]) -> f64 {
    curves.iter().map(|c| c.distance(z)).fold(f64::INFINITY, f64::min)
}

/// Symmetric Hausdorff distance between two unions of polylines, measured
/// from points spaced `h` along each side to the segments of the other.
pub fn hausdorff(a: &[Polyline], b: &[Polyline], h: f64) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let one = |x: &[Polyline], y: &[Polyline]| {
        x.iter()
            .flat_map(|p| p.densify(h))
            .map(|z| distance_to_curves(z, y))
            .fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

/// Level set `{values = level}` by marching squares with linear
/// interpolation on cell edges. Ambiguous cells are resolved by evaluating
/// `center` at the cell midpoint. Chains are joined across cells; a chain
/// that returns to its first edge, or whose ends lie within one cell
/// diagonal, is closed.
pub fn marching_squares(grid: &Grid, values: &[f64], level: f64, center: &dyn Fn(C64) -> f64) -> Vec<Polyline> {
    let (nx, ny) = (grid.nx, grid.ny);
    assert_eq!(values.len(), nx * ny, "field size does not match grid");
    if nx < 2 || ny < 2 {
        return Vec::new();
    }
    let v = |ix: usize, iy: usize| values[iy * nx + ix];
    let nh = (nx - 1) * ny;
    let hedge = |ix: usize, iy: usize| iy * (nx - 1) + ix;
    let vedge = |ix: usize, iy: usize| nh + iy * nx + ix;
    let edge_point = |e: usize| -> C64 {
        let (a, b, va, vb) = if e < nh {
            let (ix, iy) = (e % (nx - 1), e / (nx - 1));
            (grid.node(ix, iy), grid.node(ix + 1, iy), v(ix, iy), v(ix + 1, iy))
        } else {
            let e = e - nh;
            let (ix, iy) = (e % nx, e / nx);
            (grid.node(ix, iy), grid.node(ix, iy + 1), v(ix, iy), v(ix, iy + 1))
        };
        let t = if vb != va { ((level - va) / (vb - va)).clamp(0.0, 1.0) } else { 0.5 };
        a + (b - a) * t
    };

    let mut segs: Vec<(usize, usize)> = Vec::new();
    for iy in 0..ny - 1 {
        for ix in 0..nx - 1 {
            let c = [v(ix, iy), v(ix + 1, iy), v(ix + 1, iy + 1), v(ix, iy + 1)];
            let up: Vec<bool> = c.iter().map(|&x| x >= level).collect();
            // bottom, right, top, left
            let e = [hedge(ix, iy), vedge(ix + 1, iy), hedge(ix, iy + 1), vedge(ix, iy)];
            let cross: Vec<usize> = (0..4).filter(|&k| up[k] != up[(k + 1) % 4]).collect();
            match cross.len() {
                2 => segs.push((e[cross[0]], e[cross[1]])),
                4 => {
                    let mid = grid.node(ix, iy) + C64::new(grid.dx() / 2.0, grid.dy() / 2.0);
                    if (center(mid) >= level) == up[0] {
                        segs.push((e[0], e[1]));
                        segs.push((e[2], e[3]));
                    } else {
                        segs.push((e[3], e[0]));
                        segs.push((e[1], e[2]));
                    }
                }
                _ => {}
            }
        }
    }

    let mut at: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, &(a, b)) in segs.iter().enumerate() {
        at.entry(a).or_default().push(i);
        at.entry(b).or_default().push(i);
    }
    let mut used = vec![false; segs.len()];
    let mut out = Vec::new();
    let walk = |start_edge: usize, first: usize, used: &mut Vec<bool>| -> (Vec<usize>, bool) {
        let mut edges = vec![start_edge];
        let mut cur = first;
        let mut e = start_edge;
        loop {
            used[cur] = true;
            let (a, b) = segs[cur];
            e = if a == e { b } else { a };
            if e == start_edge {
                return (edges, true);
            }
            edges.push(e);
            match at[&e].iter().copied().find(|&s| !used[s]) {
                Some(s) => cur = s,
                None => return (edges, false),
            }
        }
    };
    // Open chains start at edges touched by a single segment (frame edges).
    let mut ends: Vec<usize> = at.iter().filter(|(_, s)| s.len() == 1).map(|(&e, _)| e).collect();
    ends.sort_unstable();
    for e in ends {
        let s = at[&e][0];
        if used[s] {
            continue;
        }
        let (edges, closed) = walk(e, s, &mut used);
        out.push((edges, closed));
    }
    for s in 0..segs.len() {
        if !used[s] {
            let (edges, closed) = walk(segs[s].0, s, &mut used);
            out.push((edges, closed));
        }
    }
    let diag = (grid.dx().powi(2) + grid.dy().powi(2)).sqrt();
    out.into_iter()
        .map(|(edges, closed)| {
            let points: Vec<C64> = edges.iter().map(|&e| edge_point(e)).collect();
            let closed = closed || (points.len() > 2 && (points[0] - points[points.len() - 1]).norm() <= diag);
            Polyline { points, closed }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn radial_field(grid: &Grid) -> Vec<f64> {
        grid.nodes().map(|z| 1.0 - z.norm_sqr()).collect()
    }

    #[test]
    fn circle_level_set() {
        let g = Grid::square(C64::new(0.0, 0.0), 1.5, 121).unwrap();
        let f = radial_field(&g);
        let curves = marching_squares(&g, &f, 0.51, &|z: C64| 1.0 - z.norm_sqr());
        assert_eq!(curves.len(), 1);
        assert!(curves[0].closed);
        let worst = curves[0].points.iter().map(|z| (z.norm() - 0.7).abs()).fold(0.0, f64::max);
        assert!(worst < 2.0 * g.dx(), "{worst}");
        assert!(marching_squares(&g, &f, 2.0, &|_| 0.0).is_empty());
    }

    #[test]
    fn two_bumps_give_two_loops_and_open_chains_hit_frame() {
        let g = Grid::new(-3.0, 3.0, -2.0, 2.0, 90, 60).unwrap();
        let h = |z: C64| (-(z - 1.5).norm_sqr()).exp() + (-(z + 1.5).norm_sqr()).exp();
        let f: Vec<f64> = g.nodes().map(h).collect();
        let loops = marching_squares(&g, &f, 0.5, &h);
        assert_eq!(loops.len(), 2);
        assert!(loops.iter().all(|p| p.closed));
        // a half-plane level set crosses the frame
        let f: Vec<f64> = g.nodes().map(|z| z.re).collect();
        let lines = marching_squares(&g, &f, 0.3, &|z| z.re);
        assert_eq!(lines.len(), 1);
        assert!(!lines[0].closed);
        assert!(lines[0].points.iter().all(|z| (z.re - 0.3).abs() < 1e-12));
    }

    #[test]
    fn saddle_uses_center_value() {
        // f = xy has a saddle at the center cell.
        let g = Grid::new(-1.0, 1.0, -1.0, 1.0, 2, 2).unwrap();
        let f: Vec<f64> = g.nodes().map(|z| z.re * z.im).collect();
        let a = marching_squares(&g, &f, 0.0, &|_| 1.0);
        let b = marching_squares(&g, &f, 0.0, &|_| -1.0);
        assert_eq!(a.len(), 2);
        assert_eq!(b.len(), 2);
        assert_ne!(a, b);
    }

    #[test]
    fn hausdorff_of_concentric_circles() {
        let circ = |r: f64| Polyline {
            points: (0..400).map(|k| C64::from_polar(r, k as f64 * std::f64::consts::TAU / 400.0)).collect(),
            closed: true,
        };
        let d = hausdorff(&[circ(1.0)], &[circ(1.1)], 0.01);
        assert!((d - 0.1).abs() < 1e-3);
    }
}
