//! Island geometry: parametrized boundaries, distances, convex hulls and the
//! reflections used to map Green level curves into islands.
//!
//! Boundaries are parametrized by `t ∈ [0, 1)` and traversed counterclockwise.
//! Polygons and arc polygons spend an equal share of the parameter on each
//! edge.
//!
//! # Arc polygons and the lens
//!
//! An arc edge from `A` to `B` carries a signed curvature `κ`. Positive `κ`
//! bulges to the right of the direction of travel, i.e. outward for a
//! counterclockwise boundary; negative `κ` bulges inward. With chord length
//! `L` the arc subtends the central angle `2α`, `sin α = L|κ|/2`, and only
//! minor arcs (`α ≤ π/2`) are representable.
//!
//! The angle between an arc and its chord at either endpoint is `α`. A lens
//! bounded by two outward arcs of equal curvature over the same chord
//! therefore has interior angle `2α` at both tips. For the lens with tips
//! `±i` and interior angle `π/4` this gives `α = π/8`, chord `L = 2`, so
//! `κ = sin(π/8)` and each arc has radius `1/sin(π/8) ≈ 2.6131`, centered
//! at `∓cos(π/8)/sin(π/8) ≈ ∓2.4142`. See [`IslandSpec::lens`].

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One island of an archipelago.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum IslandSpec {
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    Ellipse {
        center: [f64; 2],
        a: f64,
        b: f64,
        #[serde(default)]
        angle: f64,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    ArcPolygon {
        vertices: Vec<[f64; 2]>,
        curvatures: Vec<f64>,
    },
    Lemniscate {
        m: u32,
        r: f64,
        island: u32,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchipelagoSpec {
    pub islands: Vec<IslandSpec>,
}

/// Resolved circular arc: center, radius, start angle, signed sweep.
#[derive(Clone, Copy, Debug)]
struct Arc {
    center: C64,
    radius: f64,
    theta0: f64,
    sweep: f64,
}

fn c(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

fn arr(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

fn resolve_arc(a: C64, b: C64, kappa: f64) -> Option<Arc> {
    if kappa == 0.0 {
        return None;
    }
    let l = (b - a).norm();
    let radius = 1.0 / kappa.abs();
    let alpha = (l * kappa.abs() / 2.0).min(1.0).asin();
    let u = (b - a) / l;
    let mid = (a + b) * 0.5;
    let side = if kappa > 0.0 { C64::i() } else { -C64::i() };
    let center = mid + side * u * (radius * alpha.cos());
    let theta0 = (a - center).arg();
    let sweep = kappa.signum() * 2.0 * alpha;
    Some(Arc { center, radius, theta0, sweep })
}

impl IslandSpec {
    pub fn disk(center: C64, radius: f64) -> Self {
        IslandSpec::Disk { center: arr(center), radius }
    }

    pub fn ellipse(center: C64, a: f64, b: f64, angle: f64) -> Self {
        IslandSpec::Ellipse { center: arr(center), a, b, angle }
    }

    pub fn polygon(vertices: &[C64]) -> Self {
        IslandSpec::Polygon { vertices: vertices.iter().map(|&z| arr(z)).collect() }
    }

    pub fn lemniscate(m: u32, r: f64, island: u32) -> Self {
        IslandSpec::Lemniscate { m, r, island }
    }

    /// Regular polygon with `k` vertices on the circle `|z - center| = radius`,
    /// first vertex at angle `phase`.
    pub fn regular_polygon(k: usize, center: C64, radius: f64, phase: f64) -> Self {
        let v: Vec<C64> = (0..k)
            .map(|i| center + C64::from_polar(radius, phase + TAU * i as f64 / k as f64))
            .collect();
        IslandSpec::polygon(&v)
    }

    /// Upper half of the disk `|z - center| < radius`.
    pub fn half_disk(center: C64, radius: f64) -> Self {
        IslandSpec::ArcPolygon {
            vertices: vec![arr(center - radius), arr(center + radius)],
            curvatures: vec![0.0, 1.0 / radius],
        }
    }

    /// Symmetric lens with tips `center ± i·half_chord` and the given interior
    /// angle at the tips (`π/4` reproduces the standard example).
    pub fn lens(center: C64, half_chord: f64, interior_angle: f64) -> Self {
        let kappa = (interior_angle / 2.0).sin() / half_chord;
        IslandSpec::ArcPolygon {
            vertices: vec![
                arr(center - C64::i() * half_chord),
                arr(center + C64::i() * half_chord),
            ],
            curvatures: vec![kappa, kappa],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            IslandSpec::Disk { radius, center } => {
                if !(*radius > 0.0 && radius.is_finite()) || !center.iter().all(|x| x.is_finite()) {
                    return Err(Error::input(format!("disk radius must be positive, got {radius}")));
                }
            }
            IslandSpec::Ellipse { a, b, angle, .. } => {
                if !(*b > 0.0 && a >= b && a.is_finite() && angle.is_finite()) {
                    return Err(Error::input(format!("ellipse needs a >= b > 0, got a={a} b={b}")));
                }
            }
            IslandSpec::Polygon { vertices } => {
                let v: Vec<C64> = vertices.iter().map(|&p| c(p)).collect();
                validate_polygon(&v)?;
            }
            IslandSpec::ArcPolygon { vertices, curvatures } => {
                if vertices.len() < 2 || curvatures.len() != vertices.len() {
                    return Err(Error::input(
                        "arc polygon needs at least 2 vertices and one curvature per edge",
                    ));
                }
                let n = vertices.len();
                for k in 0..n {
                    let a = c(vertices[k]);
                    let b = c(vertices[(k + 1) % n]);
                    let l = (b - a).norm();
                    if l == 0.0 {
                        return Err(Error::input(format!("arc polygon edge {k} has zero length")));
                    }
                    if l * curvatures[k].abs() / 2.0 > 1.0 + 1e-12 {
                        return Err(Error::input(format!(
                            "edge {k}: curvature {} too large for chord {l}",
                            curvatures[k]
                        )));
                    }
                }
                let samples = self.sample_boundary(64 * n);
                validate_polygon(&samples)?;
            }
            IslandSpec::Lemniscate { m, r, island } => {
                if *m < 2 {
                    return Err(Error::input("lemniscate needs m >= 2"));
                }
                if !(*r > 0.0 && *r < 1.0) {
                    return Err(Error::input(format!("lemniscate needs 0 < r < 1, got {r}")));
                }
                if *island < 1 || island > m {
                    return Err(Error::input(format!("lemniscate island index {island} not in 1..={m}")));
                }
            }
        }
        Ok(())
    }

    /// Point on the boundary and its derivative with respect to `t`.
    ///
    /// At a polygon corner the tangent of the incoming edge is returned.
    pub fn boundary_point(&self, t: f64) -> (C64, C64) {
        let t = t.rem_euclid(1.0);
        match self {
            IslandSpec::Disk { center, radius } => {
                let e = C64::from_polar(1.0, TAU * t);
                (c(*center) + e * *radius, C64::i() * TAU * *radius * e)
            }
            IslandSpec::Ellipse { center, a, b, angle } => {
                let rot = C64::from_polar(1.0, *angle);
                let (s, co) = (TAU * t).sin_cos();
                let p = C64::new(a * co, b * s);
                let d = C64::new(-a * s, b * co) * TAU;
                (c(*center) + rot * p, rot * d)
            }
            IslandSpec::Polygon { vertices } => {
                let n = vertices.len();
                let (k, s) = edge_param(n, t);
                let a = c(vertices[k]);
                let b = c(vertices[(k + 1) % n]);
                let kin = if s == 0.0 { (k + n - 1) % n } else { k };
                let tan = (c(vertices[(kin + 1) % n]) - c(vertices[kin])) * n as f64;
                (a + (b - a) * s, tan)
            }
            IslandSpec::ArcPolygon { vertices, curvatures } => {
                let n = vertices.len();
                let (k, s) = edge_param(n, t);
                let kin = if s == 0.0 { (k + n - 1) % n } else { k };
                let point = arc_edge_point(vertices, curvatures, k, s).0;
                let sin = if kin == k { s } else { 1.0 };
                let tan = arc_edge_point(vertices, curvatures, kin, sin).1 * n as f64;
                (point, tan)
            }
            IslandSpec::Lemniscate { m, r, island } => {
                let mf = *m as f64;
                let gamma = r.powf(mf);
                let omega = C64::from_polar(1.0, TAU * *island as f64 / mf);
                let e = C64::from_polar(1.0, TAU * t);
                let w = C64::new(1.0, 0.0) + e * gamma;
                let root = w.powf(1.0 / mf);
                let dw = C64::i() * TAU * gamma * e;
                let dz = root / w / mf * dw;
                (root * omega, dz * omega)
            }
        }
    }

    /// `n` boundary points at equispaced parameters.
    pub fn sample_boundary(&self, n: usize) -> Vec<C64> {
        (0..n).map(|i| self.boundary_point(i as f64 / n as f64).0).collect()
    }

    /// Whether `z` lies in the open island.
    pub fn contains(&self, z: C64) -> bool {
        match self {
            IslandSpec::Disk { center, radius } => (z - c(*center)).norm() < *radius,
            IslandSpec::Ellipse { center, a, b, angle } => {
                let w = (z - c(*center)) * C64::from_polar(1.0, -*angle);
                (w.re / a).powi(2) + (w.im / b).powi(2) < 1.0
            }
            IslandSpec::Polygon { vertices } => {
                let v: Vec<C64> = vertices.iter().map(|&p| c(p)).collect();
                point_in_polygon(&v, z)
            }
            IslandSpec::ArcPolygon { vertices, curvatures } => {
                let v: Vec<C64> = vertices.iter().map(|&p| c(p)).collect();
                let n = v.len();
                if n == 2 {
                    // Degenerate chord polygon; fall back to a fine sampling.
                    return point_in_polygon(&self.sample_boundary(2048), z);
                }
                // Straight-chord polygon, corrected by each arc segment.
                let mut inside = point_in_polygon(&v, z);
                for k in 0..n {
                    if let Some(arc) = resolve_arc(v[k], v[(k + 1) % n], curvatures[k]) {
                        if in_circular_segment(&arc, v[k], v[(k + 1) % n], z) {
                            inside = !inside;
                        }
                    }
                }
                inside
            }
            IslandSpec::Lemniscate { m, r, island } => {
                let mf = *m as f64;
                let gamma = r.powf(mf);
                if (z.powu(*m) - 1.0).norm() >= gamma {
                    return false;
                }
                let omega = C64::from_polar(1.0, TAU * *island as f64 / mf);
                // Components are separated by the rays through e^{iπ(2j+1)/m}.
                let rel = (z / omega).arg();
                rel.abs() < PI / mf
            }
        }
    }

    /// Distance from `z` to this island's boundary.
    pub fn distance_to_boundary(&self, z: C64) -> f64 {
        match self {
            IslandSpec::Disk { center, radius } => ((z - c(*center)).norm() - radius).abs(),
            IslandSpec::Ellipse { .. } => refine_distance(self, z, 256, 8),
            IslandSpec::Polygon { vertices } => {
                let n = vertices.len();
                (0..n)
                    .map(|k| segment_distance(c(vertices[k]), c(vertices[(k + 1) % n]), z))
                    .fold(f64::INFINITY, f64::min)
            }
            IslandSpec::ArcPolygon { vertices, curvatures } => {
                let n = vertices.len();
                (0..n)
                    .map(|k| {
                        let a = c(vertices[k]);
                        let b = c(vertices[(k + 1) % n]);
                        match resolve_arc(a, b, curvatures[k]) {
                            None => segment_distance(a, b, z),
                            Some(arc) => arc_distance(&arc, a, b, z),
                        }
                    })
                    .fold(f64::INFINITY, f64::min)
            }
            IslandSpec::Lemniscate { .. } => refine_distance(self, z, 256, 3),
        }
    }

    /// Points that must lie on the convex hull exactly (polygon corners).
    fn corners(&self) -> Vec<C64> {
        match self {
            IslandSpec::Polygon { vertices } | IslandSpec::ArcPolygon { vertices, .. } => {
                vertices.iter().map(|&p| c(p)).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Signed area enclosed by the boundary (positive for counterclockwise).
    pub fn area(&self) -> f64 {
        match self {
            IslandSpec::Disk { radius, .. } => PI * radius * radius,
            IslandSpec::Ellipse { a, b, .. } => PI * a * b,
            IslandSpec::Polygon { vertices } => {
                let v: Vec<C64> = vertices.iter().map(|&p| c(p)).collect();
                shoelace(&v)
            }
            _ => {
                let n = 4096;
                let mut s = 0.0;
                for i in 0..n {
                    let (z, dz) = self.boundary_point((i as f64 + 0.5) / n as f64);
                    s += (z.conj() * dz).im;
                }
                0.5 * s / n as f64
            }
        }
    }

    /// The same island shifted by `d`.
    pub fn translated(&self, d: C64) -> Result<Self> {
        let sh = |p: &[f64; 2]| arr(c(*p) + d);
        Ok(match self {
            IslandSpec::Disk { center, radius } => IslandSpec::Disk { center: sh(center), radius: *radius },
            IslandSpec::Ellipse { center, a, b, angle } => {
                IslandSpec::Ellipse { center: sh(center), a: *a, b: *b, angle: *angle }
            }
            IslandSpec::Polygon { vertices } => IslandSpec::Polygon { vertices: vertices.iter().map(sh).collect() },
            IslandSpec::ArcPolygon { vertices, curvatures } => IslandSpec::ArcPolygon {
                vertices: vertices.iter().map(sh).collect(),
                curvatures: curvatures.clone(),
            },
            IslandSpec::Lemniscate { .. } => {
                return Err(Error::Unsupported("lemniscate islands are fixed in position".into()))
            }
        })
    }

    /// The same island dilated by `s > 0` about the origin.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let sc = |p: &[f64; 2]| [p[0] * s, p[1] * s];
        Ok(match self {
            IslandSpec::Disk { center, radius } => IslandSpec::Disk { center: sc(center), radius: radius * s },
            IslandSpec::Ellipse { center, a, b, angle } => {
                IslandSpec::Ellipse { center: sc(center), a: a * s, b: b * s, angle: *angle }
            }
            IslandSpec::Polygon { vertices } => IslandSpec::Polygon { vertices: vertices.iter().map(sc).collect() },
            IslandSpec::ArcPolygon { vertices, curvatures } => IslandSpec::ArcPolygon {
                vertices: vertices.iter().map(sc).collect(),
                curvatures: curvatures.iter().map(|k| k / s).collect(),
            },
            IslandSpec::Lemniscate { .. } => {
                return Err(Error::Unsupported("lemniscate islands cannot be rescaled".into()))
            }
        })
    }

    pub fn as_disk(&self) -> Option<(C64, f64)> {
        match self {
            IslandSpec::Disk { center, radius } => Some((c(*center), *radius)),
            _ => None,
        }
    }
}

fn edge_param(n: usize, t: f64) -> (usize, f64) {
    let x = t * n as f64;
    let k = (x.floor() as usize).min(n - 1);
    (k, x - k as f64)
}

/// Point and d/ds on edge `k` of an arc polygon, `s ∈ [0, 1]`.
fn arc_edge_point(vertices: &[[f64; 2]], curvatures: &[f64], k: usize, s: f64) -> (C64, C64) {
    let n = vertices.len();
    let a = c(vertices[k]);
    let b = c(vertices[(k + 1) % n]);
    match resolve_arc(a, b, curvatures[k]) {
        None => (a + (b - a) * s, b - a),
        Some(arc) => {
            if s == 0.0 {
                let e = C64::from_polar(1.0, arc.theta0);
                return (a, C64::i() * arc.sweep * arc.radius * e);
            }
            let th = arc.theta0 + arc.sweep * s;
            let e = C64::from_polar(1.0, th);
            let p = if s == 1.0 { b } else { arc.center + e * arc.radius };
            (p, C64::i() * arc.sweep * arc.radius * e)
        }
    }
}

fn validate_polygon(v: &[C64]) -> Result<()> {
    let n = v.len();
    if n < 3 {
        return Err(Error::input("polygon needs at least 3 vertices"));
    }
    if shoelace(v) <= 0.0 {
        return Err(Error::input("polygon vertices must be counterclockwise"));
    }
    for i in 0..n {
        for j in i + 1..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return Err(Error::input(format!("polygon edges {i} and {j} intersect")));
            }
        }
    }
    Ok(())
}

fn shoelace(v: &[C64]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|k| (v[k].conj() * v[(k + 1) % n]).im).sum::<f64>()
}

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn segments_intersect(p1: C64, p2: C64, q1: C64, q2: C64) -> bool {
    let d1 = cross(p2 - p1, q1 - p1);
    let d2 = cross(p2 - p1, q2 - p1);
    let d3 = cross(q2 - q1, p1 - q1);
    let d4 = cross(q2 - q1, p2 - q1);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

fn point_in_polygon(v: &[C64], z: C64) -> bool {
    let n = v.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (v[i], v[j]);
        if (a.im > z.im) != (b.im > z.im) {
            let x = (b.re - a.re) * (z.im - a.im) / (b.im - a.im) + a.re;
            if z.re < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Whether `z` lies in the region between an arc and its chord.
fn in_circular_segment(arc: &Arc, a: C64, b: C64, z: C64) -> bool {
    if (z - arc.center).norm() >= arc.radius {
        return false;
    }
    // Same side of the chord as the arc midpoint.
    let mid = arc.center + C64::from_polar(arc.radius, arc.theta0 + arc.sweep / 2.0);
    let s1 = cross(b - a, z - a);
    let s2 = cross(b - a, mid - a);
    s1 * s2 > 0.0
}

fn segment_distance(a: C64, b: C64, z: C64) -> f64 {
    let d = b - a;
    let l2 = d.norm_sqr();
    if l2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * d.conj()).re / l2).clamp(0.0, 1.0);
    (z - (a + d * t)).norm()
}

fn arc_distance(arc: &Arc, a: C64, b: C64, z: C64) -> f64 {
    let rel = z - arc.center;
    let th = rel.arg();
    // Parameter of the radial projection along the sweep.
    let mut d = (th - arc.theta0) / arc.sweep;
    let period = TAU / arc.sweep.abs();
    d = d.rem_euclid(period);
    if d <= 1.0 && rel.norm() > 0.0 {
        (rel.norm() - arc.radius).abs()
    } else {
        (z - a).norm().min((z - b).norm())
    }
}

/// Dense sampling followed by Newton steps on `d/dt |z(t) - z|² = 0`.
fn refine_distance(island: &IslandSpec, z: C64, samples: usize, steps: usize) -> f64 {
    let mut best = f64::INFINITY;
    let mut bt = 0.0;
    for i in 0..samples {
        let t = i as f64 / samples as f64;
        let d = (island.boundary_point(t).0 - z).norm();
        if d < best {
            best = d;
            bt = t;
        }
    }
    let h = 1e-5;
    let f = |t: f64| {
        let (p, dp) = island.boundary_point(t);
        ((p - z).conj() * dp).re
    };
    let mut t = bt;
    for _ in 0..steps {
        let ft = f(t);
        let df = (f(t + h) - f(t - h)) / (2.0 * h);
        if df <= 0.0 {
            break;
        }
        let step = (ft / df).clamp(-1.0 / samples as f64, 1.0 / samples as f64);
        t -= step;
        let d = (island.boundary_point(t).0 - z).norm();
        if d < best {
            best = d;
        }
        if step.abs() < 1e-15 {
            break;
        }
    }
    best
}

impl ArchipelagoSpec {
    pub fn new(islands: Vec<IslandSpec>) -> Result<Self> {
        let a = ArchipelagoSpec { islands };
        a.validate()?;
        Ok(a)
    }

    /// All `m` islands of the lemniscate `|z^m - 1| < r^m`.
    pub fn lemniscate(m: u32, r: f64) -> Result<Self> {
        ArchipelagoSpec::new((1..=m).map(|j| IslandSpec::lemniscate(m, r, j)).collect())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let a: ArchipelagoSpec = serde_json::from_str(s)?;
        a.validate()?;
        Ok(a)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("archipelago serializes")
    }

    /// Checks each island and pairwise disjointness of their closures.
    pub fn validate(&self) -> Result<()> {
        if self.islands.is_empty() {
            return Err(Error::input("archipelago has no islands"));
        }
        for (i, isl) in self.islands.iter().enumerate() {
            isl.validate().map_err(|e| Error::input(format!("island {i}: {e}")))?;
        }
        let samples: Vec<Vec<C64>> = self.islands.iter().map(|i| i.sample_boundary(128)).collect();
        for i in 0..self.islands.len() {
            for j in i + 1..self.islands.len() {
                let mut dmin = f64::INFINITY;
                for a in &samples[i] {
                    for b in &samples[j] {
                        dmin = dmin.min((a - b).norm());
                    }
                }
                if dmin <= 1e-9
                    || self.islands[j].contains(samples[i][0])
                    || self.islands[i].contains(samples[j][0])
                {
                    return Err(Error::input(format!("islands {i} and {j} are not disjoint")));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, z: C64) -> bool {
        self.islands.iter().any(|i| i.contains(z))
    }

    /// Index of the island containing `z`, if any.
    pub fn island_of(&self, z: C64) -> Option<usize> {
        self.islands.iter().position(|i| i.contains(z))
    }

    pub fn distance_to_boundary(&self, z: C64) -> f64 {
        self.islands
            .iter()
            .map(|i| i.distance_to_boundary(z))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn area(&self) -> f64 {
        self.islands.iter().map(|i| i.area()).sum()
    }

    /// Convex hull of 64 boundary samples per island (plus polygon corners),
    /// counterclockwise.
    pub fn convex_hull(&self) -> Vec<C64> {
        let mut pts = Vec::new();
        for isl in &self.islands {
            match isl {
                IslandSpec::Polygon { .. } => pts.extend(isl.corners()),
                _ => {
                    pts.extend(isl.sample_boundary(64));
                    pts.extend(isl.corners());
                }
            }
        }
        convex_hull(&pts)
    }

    /// Axis-aligned bounding box `(xmin, xmax, ymin, ymax)` from boundary samples.
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for isl in &self.islands {
            for z in isl.sample_boundary(256) {
                b.0 = b.0.min(z.re);
                b.1 = b.1.max(z.re);
                b.2 = b.2.min(z.im);
                b.3 = b.3.max(z.im);
            }
        }
        b
    }

    pub fn translated(&self, d: C64) -> Result<Self> {
        ArchipelagoSpec::new(self.islands.iter().map(|i| i.translated(d)).collect::<Result<_>>()?)
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        ArchipelagoSpec::new(self.islands.iter().map(|i| i.scaled(s)).collect::<Result<_>>()?)
    }

    /// `(center, radius)` of every island if all are disks.
    pub fn disks(&self) -> Option<Vec<(C64, f64)>> {
        self.islands.iter().map(|i| i.as_disk()).collect()
    }
}

/// Andrew's monotone chain; collinear points are dropped.
pub fn convex_hull(points: &[C64]) -> Vec<C64> {
    let mut p: Vec<C64> = points.to_vec();
    p.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let mut lower: Vec<C64> = Vec::new();
    for &z in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 1] - lower[lower.len() - 2], z - lower[lower.len() - 2]) <= 0.0 {
            lower.pop();
        }
        lower.push(z);
    }
    let mut upper: Vec<C64> = Vec::new();
    for &z in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 1] - upper[upper.len() - 2], z - upper[upper.len() - 2]) <= 0.0 {
            upper.pop();
        }
        upper.push(z);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Signed distance from `z` to a counterclockwise convex polygon: negative
/// inside, positive outside.
pub fn hull_signed_distance(hull: &[C64], z: C64) -> f64 {
    let n = hull.len();
    if n == 0 {
        return f64::INFINITY;
    }
    if n == 1 {
        return (z - hull[0]).norm();
    }
    let mut inside = n >= 3;
    let mut dmin = f64::INFINITY;
    for k in 0..n {
        let a = hull[k];
        let b = hull[(k + 1) % n];
        if cross(b - a, z - a) < 0.0 {
            inside = false;
        }
        dmin = dmin.min(segment_distance(a, b, z));
    }
    if inside {
        -dmin
    } else {
        dmin
    }
}

/// Reflection `z ↦ center + radius² / conj(z - center)` in a circle.
pub fn invert_in_circle(points: &[C64], center: C64, radius: f64) -> Result<Vec<C64>> {
    points
        .iter()
        .map(|&z| {
            let d = z - center;
            if d.norm() == 0.0 {
                Err(Error::precondition("inversion pole: point equals the circle center"))
            } else {
                Ok(center + radius * radius / d.conj())
            }
        })
        .collect()
}

/// Anticonformal reflection in the ellipse with foci ±1 and semi-axes
/// `a`, `b = √(a² - 1)`: `conj((2a²-1)z - 2ab√(z²-1))`.
///
/// The square root uses the branch cut on `[-1, 1]` and is positive for
/// `z > 1`.
pub fn ellipse_schwarz_reflect(z: C64, a: f64, b: f64) -> Result<C64> {
    if z.im == 0.0 && z.re.abs() < 1.0 {
        return Err(Error::precondition("on focal segment: reflection is two-valued on (-1, 1)"));
    }
    let one = C64::new(1.0, 0.0);
    let root = (z - one).sqrt() * (z + one).sqrt();
    let s = z * (2.0 * a * a - 1.0) - root * (2.0 * a * b);
    Ok(s.conj())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn unit_disk_quarter_turn() {
        let d = IslandSpec::disk(C64::new(0.0, 0.0), 1.0);
        let (p, t) = d.boundary_point(0.25);
        assert!(close(p, C64::i(), 1e-15));
        assert!(close(t, C64::new(-TAU, 0.0), 1e-14));
    }

    #[test]
    fn lemniscate_start_point() {
        let l = IslandSpec::lemniscate(3, 0.9, 3);
        let (p, _) = l.boundary_point(0.0);
        let want = 1.729f64.cbrt();
        assert!(close(p, C64::new(want, 0.0), 1e-14));
        // Boundary satisfies |z^3 - 1| = r^3.
        for i in 0..17 {
            let (z, _) = l.boundary_point(i as f64 / 17.0);
            assert!(((z.powu(3) - 1.0).norm() - 0.729).abs() < 1e-13);
        }
    }

    #[test]
    fn square_starts_at_first_vertex_with_incoming_tangent() {
        let sq = IslandSpec::polygon(&[
            C64::new(1.0, 1.0),
            C64::new(-1.0, 1.0),
            C64::new(-1.0, -1.0),
            C64::new(1.0, -1.0),
        ]);
        let (p, t) = sq.boundary_point(0.0);
        assert_eq!(p, C64::new(1.0, 1.0));
        // incoming edge runs from 1-i to 1+i
        assert!(t.re == 0.0 && t.im > 0.0);
    }

    #[test]
    fn distances() {
        let d = ArchipelagoSpec::new(vec![IslandSpec::disk(C64::new(0.0, 0.0), 1.0)]).unwrap();
        assert!((d.distance_to_boundary(C64::new(0.3, 0.0)) - 0.7).abs() < 1e-15);
        assert_eq!(d.distance_to_boundary(C64::new(1.0, 0.0)), 0.0);
        let two = ArchipelagoSpec::new(vec![
            IslandSpec::disk(C64::new(-2.0, 0.0), 1.0),
            IslandSpec::disk(C64::new(3.0, 0.0), 2.0 / 3.0),
        ])
        .unwrap();
        assert!((two.distance_to_boundary(C64::new(0.0, 0.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ellipse_distance_matches_dense_search() {
        let e = IslandSpec::ellipse(C64::new(0.5, -0.2), 2.0, 0.7, 0.4);
        for z in [C64::new(3.0, 1.0), C64::new(0.6, 0.0), C64::new(-2.0, -2.0)] {
            let brute = (0..200_000)
                .map(|i| (e.boundary_point(i as f64 / 200_000.0).0 - z).norm())
                .fold(f64::INFINITY, f64::min);
            let got = e.distance_to_boundary(z);
            assert!(got <= brute + 1e-12);
            assert!((got - brute).abs() < 1e-8 * (1.0 + brute), "{got} {brute}");
        }
    }

    #[test]
    fn lemniscate_distance_refined() {
        let l = IslandSpec::lemniscate(3, 0.9, 3);
        let z = C64::new(0.3, 0.4);
        let brute = (0..400_000)
            .map(|i| (l.boundary_point(i as f64 / 400_000.0).0 - z).norm())
            .fold(f64::INFINITY, f64::min);
        let got = l.distance_to_boundary(z);
        assert!((got - brute).abs() < 1e-6 * brute.max(1.0));
    }

    #[test]
    fn hull_examples() {
        let d = ArchipelagoSpec::new(vec![IslandSpec::disk(C64::new(0.0, 0.0), 1.0)]).unwrap();
        let h = d.convex_hull();
        assert_eq!(h.len(), 64);
        assert!(h.iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));

        let sq = ArchipelagoSpec::new(vec![IslandSpec::polygon(&[
            C64::new(1.0, 1.0),
            C64::new(-1.0, 1.0),
            C64::new(-1.0, -1.0),
            C64::new(1.0, -1.0),
        ])])
        .unwrap();
        assert_eq!(sq.convex_hull().len(), 4);

        let tiny = ArchipelagoSpec::new(vec![
            IslandSpec::disk(C64::new(0.0, 0.0), 1e-6),
            IslandSpec::disk(C64::new(4.0, 0.0), 1e-6),
        ])
        .unwrap();
        let h = tiny.convex_hull();
        assert!(hull_signed_distance(&h, C64::new(2.0, 0.0)) <= 0.0);
        assert!(hull_signed_distance(&h, C64::new(2.0, 0.1)) > 0.09);
    }

    #[test]
    fn inversion_examples() {
        let z = invert_in_circle(&[C64::new(2.0, 0.0)], C64::new(0.0, 0.0), 1.0).unwrap();
        assert!(close(z[0], C64::new(0.5, 0.0), 1e-15));
        let z = invert_in_circle(&[C64::new(4.0, 0.0)], C64::new(3.0, 0.0), 2.0 / 3.0).unwrap();
        assert!(close(z[0], C64::new(3.0 + 4.0 / 9.0, 0.0), 1e-15));
        assert!(invert_in_circle(&[C64::new(3.0, 0.0)], C64::new(3.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn schwarz_examples() {
        let a = 5.0 / 3.0;
        let b = (a * a - 1.0f64).sqrt();
        let z = ellipse_schwarz_reflect(C64::new(1.0, 0.0), a, b).unwrap();
        assert!(close(z, C64::new(41.0 / 9.0, 0.0), 1e-13));
        let z = ellipse_schwarz_reflect(C64::new(a, 0.0), a, b).unwrap();
        assert!(close(z, C64::new(a, 0.0), 1e-13));
        assert!(ellipse_schwarz_reflect(C64::new(0.2, 0.0), a, b).is_err());

        let a = 1.25;
        let b = 0.75;
        let got = ellipse_schwarz_reflect(C64::new(1.01, 0.0), a, b).unwrap();
        let want = (2.0 * a * a - 1.0) * 1.01 - 2.0 * a * b * (1.01f64 * 1.01 - 1.0).sqrt();
        assert!(close(got, C64::new(want, 0.0), 1e-14));
    }

    #[test]
    fn lens_tip_angle_is_quarter_pi() {
        let lens = IslandSpec::lens(C64::new(0.0, 0.0), 1.0, PI / 4.0);
        lens.validate().unwrap();
        // tangents at the tip z = i: incoming arc and outgoing arc
        let (p, t_in) = lens.boundary_point(0.5);
        assert!(close(p, C64::i(), 1e-14));
        let (_, t_out) = lens.boundary_point(0.5 + 1e-9);
        let turn = (t_out / t_in).arg().abs();
        assert!((PI - turn - PI / 4.0).abs() < 1e-6, "interior angle {}", PI - turn);
        if let IslandSpec::ArcPolygon { curvatures, .. } = &lens {
            assert!((1.0 / curvatures[0] - 2.613125929752753).abs() < 1e-12);
        }
        assert!(lens.contains(C64::new(0.0, 0.0)));
        assert!(!lens.contains(C64::new(0.5, 0.0)));
    }

    #[test]
    fn half_disk_area_and_containment() {
        let h = IslandSpec::half_disk(C64::new(0.0, 0.0), 1.0);
        h.validate().unwrap();
        assert!((h.area() - PI / 2.0).abs() < 1e-9);
        assert!(h.contains(C64::new(0.0, 0.5)));
        assert!(!h.contains(C64::new(0.0, -0.5)));
        assert!(h.distance_to_boundary(C64::new(0.0, 0.5)) - 0.5 < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(IslandSpec::disk(C64::new(0.0, 0.0), -1.0).validate().is_err());
        assert!(IslandSpec::lemniscate(3, 1.0, 1).validate().is_err());
        let cw = IslandSpec::polygon(&[C64::new(0.0, 0.0), C64::new(0.0, 1.0), C64::new(1.0, 0.0)]);
        assert!(cw.validate().is_err());
        let overlapping = ArchipelagoSpec::new(vec![
            IslandSpec::disk(C64::new(0.0, 0.0), 1.0),
            IslandSpec::disk(C64::new(1.5, 0.0), 1.0),
        ]);
        assert!(overlapping.is_err());
        let nested = ArchipelagoSpec::new(vec![
            IslandSpec::disk(C64::new(0.0, 0.0), 2.0),
            IslandSpec::disk(C64::new(0.0, 0.0), 1.0),
        ]);
        assert!(nested.is_err());
    }

    #[test]
    fn json_round_trip() {
        let a = ArchipelagoSpec::new(vec![
            IslandSpec::disk(C64::new(-2.0, 0.0), 1.0),
            IslandSpec::lemniscate(3, 0.5, 1),
        ])
        .unwrap();
        let b = ArchipelagoSpec::from_json(&a.to_json()).unwrap();
        assert_eq!(a, b);
        let parsed = ArchipelagoSpec::from_json(
            r#"{"islands":[{"type":"ellipse","center":[0,0],"a":2,"b":1,"angle":0.3}]}"#,
        )
        .unwrap();
        assert!(matches!(parsed.islands[0], IslandSpec::Ellipse { .. }));
    }

    proptest! {
        #[test]
        fn inversion_is_involution(re in -5.0f64..5.0, im in -5.0f64..5.0, cr in -2.0f64..2.0, r in 0.1f64..3.0) {
            let z = C64::new(re, im);
            let center = C64::new(cr, 0.3);
            prop_assume!((z - center).norm() > 1e-3);
            let once = invert_in_circle(&[z], center, r).unwrap();
            let twice = invert_in_circle(&once, center, r).unwrap();
            prop_assert!((twice[0] - z).norm() < 1e-12 * (1.0 + z.norm()));
        }

        #[test]
        fn schwarz_fixes_ellipse_boundary(a in 1.05f64..4.0, t in 0.0f64..1.0) {
            let b = (a * a - 1.0).sqrt();
            let z = C64::new(a * (TAU * t).cos(), b * (TAU * t).sin());
            prop_assume!(z.im.abs() > 1e-9 || z.re.abs() >= 1.0);
            let w = ellipse_schwarz_reflect(z, a, b).unwrap();
            prop_assert!((w - z).norm() < 1e-10 * a);
        }

        #[test]
        fn boundary_points_have_zero_distance(t in 0.0f64..1.0, which in 0usize..5) {
            let isl = match which {
                0 => IslandSpec::disk(C64::new(1.0, 2.0), 0.7),
                1 => IslandSpec::ellipse(C64::new(0.0, 0.0), 1.5, 0.6, 0.2),
                2 => IslandSpec::regular_polygon(5, C64::new(0.0, 0.0), 1.0, 0.1),
                3 => IslandSpec::lens(C64::new(0.0, 0.0), 1.0, PI / 4.0),
                _ => IslandSpec::lemniscate(3, 0.9, 2),
            };
            let (z, _) = isl.boundary_point(t);
            prop_assert!(isl.distance_to_boundary(z) < 1e-7);
        }

        #[test]
        fn orientation_is_counterclockwise(which in 0usize..6) {
            let isl = match which {
                0 => IslandSpec::disk(C64::new(1.0, 2.0), 0.7),
                1 => IslandSpec::ellipse(C64::new(0.0, 0.0), 1.5, 0.6, 2.0),
                2 => IslandSpec::regular_polygon(5, C64::new(0.0, 0.0), 1.0, 0.1),
                3 => IslandSpec::lens(C64::new(0.0, 0.0), 1.0, PI / 4.0),
                4 => IslandSpec::half_disk(C64::new(0.0, 0.0), 1.0),
                _ => IslandSpec::lemniscate(3, 0.9, 2),
            };
            let n = 2000;
            let s: f64 = (0..n)
                .map(|i| {
                    let (z, dz) = isl.boundary_point((i as f64 + 0.5) / n as f64);
                    (z.conj() * dz).im
                })
                .sum();
            prop_assert!(s > 0.0);
        }
    }
}
