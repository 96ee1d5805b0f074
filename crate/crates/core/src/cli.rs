//! Command-line front end.
//!
//! Exit codes: 0 success, 2 input error (bad arguments, unreadable or
//! malformed files), 3 numerical failure, 4 precondition violation or
//! unsupported configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C64;

use crate::basis::{orthonormalize, BergmanBasis};
use crate::christoffel::{auto_frame, evaluate_field, extract_level_curves, reconstruct_boundary, Detector};
use crate::contour::{Grid, Polyline};
use crate::error::{Error, Result};
use crate::geometry::ArchipelagoSpec;
use crate::green::{fit_green, K_LADDER};
use crate::io::write_atomic;
use crate::lemniscate::{check_table, LemniscateSpec};
use crate::moments::{
    compute_moments, load_moments, moments_to_csv, parse_radon_csv, radon_to_real_moments, real_to_complex_moments,
    QuadConfig,
};
use crate::mp::Precision;
use crate::svg::{padded_view, SvgDoc};
use crate::zeros::zeros;

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Parser)]
#[command(name = "archipelago", version, about = "Bergman polynomials on archipelagos")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct SvgOpts {
    /// Omit the generation-time comment so that SVG output is reproducible.
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Archipelago JSON to moment CSV.
    Moments {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        degree: usize,
        /// Working precision in bits (53, 128, 256, 512 or 1024); chosen from
        /// the degree when omitted.
        #[arg(long)]
        precision: Option<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Radon projection moments (CSV rows `theta,k,a`) to moment CSV.
    RadonImport {
        #[arg(long)]
        input: PathBuf,
        /// Complex moment degree; projection orders up to twice this are read.
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        precision: Option<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Moment CSV to orthonormal basis JSON.
    Basis {
        #[arg(long)]
        moments: PathBuf,
        /// Highest polynomial degree; defaults to the moment degree minus one.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Also write `k,lambda` rows.
        #[arg(long)]
        lambda_table: Option<PathBuf>,
    },
    /// Zeros of `P_n` as CSV and an SVG scatter plot.
    Zeros {
        #[arg(long)]
        basis: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        svg: SvgOpts,
    },
    /// Christoffel function on a grid, with level curves.
    Field {
        #[arg(long)]
        basis: PathBuf,
        #[arg(long)]
        n: usize,
        /// `x_min,x_max,y_min,y_max,nx,ny`
        #[arg(long)]
        grid: String,
        /// Number of geometrically spaced levels.
        #[arg(long, default_value_t = 12)]
        levels: usize,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        svg: SvgOpts,
    },
    /// Boundary reconstruction from a basis alone.
    Reconstruct {
        #[arg(long)]
        basis: PathBuf,
        #[arg(long)]
        n: usize,
        /// Grid nodes per axis of the automatically chosen frame.
        #[arg(long, default_value_t = 400)]
        nodes: usize,
        /// `kappa_over_n` or `ridge`.
        #[arg(long, default_value = "kappa_over_n")]
        detector: String,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        svg: SvgOpts,
    },
    /// Exterior Green function of a union of disks.
    Green {
        /// Archipelago JSON whose islands are all disks.
        #[arg(long)]
        input: PathBuf,
        /// Collocation nodes per circle.
        #[arg(long, default_value_t = 128)]
        nodes: usize,
        /// Level values `R > 1` to draw; critical levels are drawn as well.
        #[arg(long, value_delimiter = ',')]
        levels: Vec<f64>,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        svg: SvgOpts,
    },
    /// Leading coefficients on the lemniscate `|z^m - 1| < r^m` against the
    /// closed forms and their limits.
    LemniscateCheck {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        r: f64,
        /// Inclusive range `a..b`.
        #[arg(long, default_value = "38..52")]
        n_range: String,
        #[arg(long, default_value_t = 128)]
        precision: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parse arguments and run; returns the process exit code.
pub fn main_entry<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli.command) {
        Ok(report) => {
            print!("{report}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, s: &str) -> Result<()> {
    write_atomic(path, s.as_bytes())
}

fn out_dir(dir: &Path) -> Result<&Path> {
    std::fs::create_dir_all(dir)?;
    Ok(dir)
}

fn precision(bits: Option<u32>, degree: usize) -> Result<Precision> {
    match bits {
        Some(b) => Precision::new(b),
        None => Ok(Precision::recommended_for_degree(degree)),
    }
}

fn load_basis(path: &Path) -> Result<BergmanBasis> {
    BergmanBasis::from_json(&read(path)?)
}

fn parse_grid(s: &str) -> Result<Grid> {
    let f: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || Error::input(format!("grid must be x_min,x_max,y_min,y_max,nx,ny, got {s:?}"));
    if f.len() != 6 {
        return Err(bad());
    }
    let x: Vec<f64> = f[..4].iter().map(|v| v.parse().map_err(|_| bad())).collect::<Result<_>>()?;
    let nx = f[4].parse().map_err(|_| bad())?;
    let ny = f[5].parse().map_err(|_| bad())?;
    Grid::new(x[0], x[1], x[2], x[3], nx, ny)
}

fn parse_range(s: &str) -> Result<std::ops::RangeInclusive<usize>> {
    let bad = || Error::input(format!("range must be a..b, got {s:?}"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim_start_matches('=').trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    Ok(a..=b)
}

fn polylines_svg(curves: &[&Polyline], extra: &[C64], opts: &SvgOpts, color: impl Fn(usize) -> usize) -> String {
    let view = padded_view(curves.iter().flat_map(|p| p.points.iter()).chain(extra.iter()), 0.05);
    let mut doc = SvgDoc::new(view, 800.0).with_timestamp(!opts.no_timestamp);
    for (i, p) in curves.iter().enumerate() {
        doc.polyline(p, COLORS[color(i) % COLORS.len()]);
    }
    for z in extra {
        doc.dot(*z, "black");
    }
    doc.render()
}

pub fn run(cmd: &Command) -> Result<String> {
    let mut report = String::new();
    match cmd {
        Command::Moments { input, degree, precision: bits, out } => {
            let arch = ArchipelagoSpec::from_json(&read(input)?)?;
            let prec = precision(*bits, *degree)?;
            let mm = compute_moments(&arch, *degree, &QuadConfig::new(prec))?;
            write(out, &moments_to_csv(&mm))?;
            let _ = writeln!(report, "moments: degree {degree}, {} bits -> {}", prec.bits(), out.display());
        }
        Command::RadonImport { input, degree, precision: bits, out } => {
            let samples = parse_radon_csv(&read(input)?)?;
            let prec = precision(*bits, *degree)?;
            let table = radon_to_real_moments(&samples, 2 * *degree, prec)?;
            let mm = real_to_complex_moments(&table, prec)?;
            write(out, &moments_to_csv(&mm))?;
            let _ = writeln!(report, "radon-import: {} samples, degree {degree} -> {}", samples.len(), out.display());
        }
        Command::Basis { moments, n, out, lambda_table } => {
            let mm = load_moments(moments)?;
            let n = n.unwrap_or(mm.degree().saturating_sub(1));
            let b = orthonormalize(&mm, n)?;
            write(out, &b.to_json())?;
            if let Some(path) = lambda_table {
                let mut s = String::from("k,lambda\n");
                for (k, l) in b.lambdas().iter().enumerate() {
                    let _ = writeln!(s, "{k},{}", l.to_decimal());
                }
                write(path, &s)?;
            }
            let _ = writeln!(report, "basis: n = {n}, {} bits -> {}", b.precision().bits(), out.display());
            let lost = b.digits_lost.iter().cloned().fold(0.0, f64::max);
            if lost > 0.0 {
                let _ = writeln!(report, "max digits lost in orthogonalization: {lost:.1}");
            }
        }
        Command::Zeros { basis, n, out_dir: dir, svg } => {
            let b = load_basis(basis)?;
            let zs = zeros(&b, *n)?;
            let dir = out_dir(dir)?;
            write(&dir.join(format!("zeros_{n}.csv")), &zs.to_csv())?;
            write(&dir.join(format!("zeros_{n}.svg")), &polylines_svg(&[], &zs.zeros, svg, |i| i))?;
            let _ = writeln!(report, "zeros: n = {n}, {} roots -> {}", zs.zeros.len(), dir.display());
            for w in &zs.warnings {
                let _ = writeln!(report, "warning: {w}");
            }
        }
        Command::Field { basis, n, grid, levels, out_dir: dir, svg } => {
            let b = load_basis(basis)?;
            let grid = parse_grid(grid)?;
            let field = evaluate_field(&b, &grid, *n)?;
            let curves = extract_level_curves(&field, &b, &field.default_levels(*levels))?;
            let dir = out_dir(dir)?;
            write(&dir.join(format!("field_{n}.csv")), &field.to_csv())?;
            write(&dir.join(format!("field_{n}.json")), &field.header_json())?;
            write(&dir.join(format!("levels_{n}.csv")), &curves.to_csv())?;
            let mut polys = Vec::new();
            let mut idx = Vec::new();
            for (i, c) in curves.curves.iter().enumerate() {
                for p in &c.polylines {
                    polys.push(p);
                    idx.push(i);
                }
            }
            write(&dir.join(format!("levels_{n}.svg")), &polylines_svg(&polys, &[], svg, |i| idx[i]))?;
            let (lo, hi) = field.min_max();
            let _ = writeln!(report, "field: n = {n}, {} nodes, range [{lo:.6e}, {hi:.6e}] -> {}", grid.len(), dir.display());
        }
        Command::Reconstruct { basis, n, nodes, detector, out_dir: dir, svg } => {
            let detector: Detector = detector.parse()?;
            let b = load_basis(basis)?;
            let zs = zeros(&b, *n)?;
            let grid = auto_frame(&b, *n, &zs.zeros, *nodes)?;
            let field = evaluate_field(&b, &grid, *n)?;
            let set = reconstruct_boundary(&field, &b, detector)?;
            let dir = out_dir(dir)?;
            write(&dir.join(format!("boundary_{n}.csv")), &set.to_csv())?;
            let polys: Vec<&Polyline> = set.polylines().collect();
            write(&dir.join(format!("boundary_{n}.svg")), &polylines_svg(&polys, &[], svg, |i| i))?;
            let closed = polys.iter().filter(|p| p.closed).count();
            let _ = writeln!(
                report,
                "reconstruct: n = {n}, method {}, {} curves ({closed} closed), frame [{}, {}] x [{}, {}] -> {}",
                detector.tag(),
                polys.len(),
                grid.x_min,
                grid.x_max,
                grid.y_min,
                grid.y_max,
                dir.display()
            );
        }
        Command::Green { input, nodes, levels, out_dir: dir, svg } => {
            let arch = ArchipelagoSpec::from_json(&read(input)?)?;
            let disks = arch.disks().ok_or_else(|| Error::Unsupported("green needs an archipelago of disks".into()))?;
            let gm = fit_green(&disks, K_LADDER[0], *nodes)?;
            let dir = out_dir(dir)?;
            write(&dir.join("green.json"), &gm.to_json())?;
            let (d, flux) = gm.periods();
            let _ = writeln!(report, "green: {} disks, residual {:.3e}, capacity {:.12}", disks.len(), gm.residual, gm.capacity);
            for (j, (dj, fj)) in d.iter().zip(&flux).enumerate() {
                let _ = writeln!(report, "period[{j}] = {dj:.12} (flux {fj:.12})");
            }
            let mut draw: Vec<f64> = levels.clone();
            if disks.len() > 1 {
                let cl = gm.critical_levels()?;
                for (z, l) in cl.points.iter().zip(&cl.levels) {
                    let _ = writeln!(report, "critical point {:.12}{:+.12}i, level R = {l:.12}", z.re, z.im);
                }
                let _ = writeln!(report, "R' = {:.12}, R'' = {:.12}", cl.r_prime, cl.r_second);
                for (j, r) in cl.r_j.iter().enumerate() {
                    let _ = writeln!(report, "R_{j} = {r:.12}");
                }
                // critical levels are singular; draw just below and above
                for l in &cl.levels {
                    draw.push(1.0 + (l - 1.0) * 0.98);
                    draw.push(1.0 + (l - 1.0) * 1.02);
                }
            }
            let mut curves = Vec::new();
            let mut idx = Vec::new();
            for (i, &r) in draw.iter().enumerate() {
                for p in gm.level_curve(r, 400)? {
                    curves.push(p);
                    idx.push(i);
                }
            }
            let refs: Vec<&Polyline> = curves.iter().collect();
            let view_pts: Vec<C64> = disks.iter().flat_map(|&(c, r)| [c - C64::new(r, r), c + C64::new(r, r)]).collect();
            let view = padded_view(refs.iter().flat_map(|p| p.points.iter()).chain(view_pts.iter()), 0.05);
            let mut doc = SvgDoc::new(view, 800.0).with_timestamp(!svg.no_timestamp);
            for &(c, r) in &disks {
                doc.circle(c, r, "black");
            }
            for (p, i) in refs.iter().zip(&idx) {
                doc.polyline(p, COLORS[i % COLORS.len()]);
            }
            write(&dir.join("green_levels.svg"), &doc.render())?;
        }
        Command::LemniscateCheck { m, r, n_range, precision: bits, out } => {
            let spec = LemniscateSpec::new(*m, *r)?;
            let range = parse_range(n_range)?;
            let rows = check_table(&spec, range, Precision::new(*bits)?)?;
            let mut csv = String::from("n,k,s,lambda_pipeline,lambda_oracle,rel_diff,normalized,limit\n");
            let _ = writeln!(report, "{:>4} {:>4} {:>2} {:>22} {:>22} {:>10} {:>10} {:>10}", "n", "k", "s", "lambda_n", "oracle", "rel diff", "normalized", "limit");
            for row in &rows {
                let rel = ((row.lambda_pipeline - row.lambda_oracle) / row.lambda_oracle).abs();
                let _ = writeln!(
                    csv,
                    "{},{},{},{:e},{:e},{:e},{},{}",
                    row.n, row.k, row.s, row.lambda_pipeline, row.lambda_oracle, rel, row.normalized, row.limit
                );
                let _ = writeln!(
                    report,
                    "{:>4} {:>4} {:>2} {:>22.15e} {:>22.15e} {:>10.2e} {:>10.6} {:>10.6}",
                    row.n, row.k, row.s, row.lambda_pipeline, row.lambda_oracle, rel, row.normalized, row.limit
                );
            }
            if let Some(path) = out {
                write(path, &csv)?;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_grid_and_range() {
        let g = parse_grid("-1, 1, -2, 2, 10, 20").unwrap();
        assert_eq!((g.nx, g.ny), (10, 20));
        assert!(parse_grid("1,2,3").is_err());
        assert_eq!(parse_range("38..52").unwrap(), 38..=52);
        assert_eq!(parse_range("3..=4").unwrap(), 3..=4);
        assert!(parse_range("5..4").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(main_entry(["archipelago", "--bogus"]), 2);
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.json");
        let out = dir.path().join("m.csv");
        let args = ["archipelago", "moments", "--input", missing.to_str().unwrap(), "--degree", "3", "--out", out.to_str().unwrap()];
        assert_eq!(main_entry(args), 2);
        let args = ["archipelago", "lemniscate-check", "--m", "3", "--r", "1.5"];
        assert_eq!(main_entry(args), 2);
    }
}
