//! The `chc` command line.
//!
//! Every subcommand reads one group, either from a file in the group format
//! (see [`chc_core::groupfile`]) or a built-in scenario, and writes a report
//! to stdout. Diagnostics go to stderr.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | other failure (bad flag value, I/O error on output, no convergence) |
//! | 2 | unreadable or malformed group file, unknown scenario, usage error |
//! | 3 | invalid matrix: not form-preserving, not a Heisenberg element, wrong size |
//! | 4 | rotation or translation parts of two generators do not commute |
//! | 5 | orbit too small for the estimators |

use std::fmt::Display;
use std::io::{self, Write};
use std::path::PathBuf;

use chc_core::density::{levi_threshold, LEVI_TOLERANCE};
use chc_core::heisenberg::Caveat;
use chc_core::{
    analyze, enumerate_orbit_with, estimate_delta_with, scenarios, DensityApprox, Error,
    EstimatorOptions, GroupFile, OrbitCloud, OrbitLimits, ProbeGrid, ProbeReport,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_INVALID_MATRIX: i32 = 3;
pub const EXIT_NON_COMMUTING: i32 = 4;
pub const EXIT_INSUFFICIENT: i32 = 5;

const DEFAULT_DEPTH: usize = 40;
const DEFAULT_MAX_POINTS: usize = 1_000_000;
const LEVI_MAX_POINTS: usize = 200_000;
const PROBE_SPREAD: f64 = 1.0;

#[derive(Parser, Debug)]
#[command(name = "chc", version, about = "Discrete groups acting on complex hyperbolic space")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Classify every generator as identity, elliptic, parabolic or loxodromic.
    Classify(Common),
    /// Analyze a group fixing the boundary point [f1]: Steinness and the exact exponent.
    Parabolic(Common),
    /// Only the exact critical exponent of a parabolic group.
    DeltaExact(Common),
    /// Estimate the critical exponent from orbit growth.
    DeltaEstimate(Common),
    /// Build the atomic density on the orbit and evaluate it at the basepoint.
    DensityBuild(Common),
    /// Check the Levi-form lower bound of the log-mass function on a probe grid.
    LeviCheck(Common),
    /// Enumerate the orbit and write one row per element.
    OrbitExport(Common),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Report,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Group file; use --scenario for a built-in group instead.
    #[arg(required_unless_present = "scenario", conflicts_with = "scenario")]
    pub file: Option<PathBuf>,
    /// Built-in group by name.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(scenarios::NAMES))]
    pub scenario: Option<String>,
    /// Maximum word length of the orbit search.
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    pub depth: usize,
    /// Maximum number of orbit points kept [default: 1000000, levi-check 200000].
    #[arg(long)]
    pub max_points: Option<usize>,
    /// Keep only orbit points within this distance of the basepoint.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Seed for every random choice.
    #[arg(long, env = "CHC_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Finite-difference step of the Levi probe.
    #[arg(long, default_value_t = chc_core::density::DEFAULT_STEP)]
    pub step: f64,
    /// Probe grid as POINTSxDIRECTIONS.
    #[arg(long, default_value = "20x5", value_parser = parse_grid)]
    pub grid: (usize, usize),
    /// Output format [default: report, orbit-export csv].
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (p, d) = s
        .split_once('x')
        .ok_or_else(|| format!("expected POINTSxDIRECTIONS, found '{s}'"))?;
    let p: usize = p.trim().parse().map_err(|_| format!("bad point count '{p}'"))?;
    let d: usize = d.trim().parse().map_err(|_| format!("bad direction count '{d}'"))?;
    if p == 0 || d == 0 {
        return Err("grid sizes must be positive".into());
    }
    Ok((p, d))
}

/// Ordered `key: value` lines.
#[derive(Debug, Default)]
pub struct Report {
    lines: Vec<(String, String)>,
}

impl Report {
    fn new(command: &str, seed: u64, source: &str) -> Self {
        let mut r = Self::default();
        r.push("command", command);
        r.push("seed", seed);
        r.push("input", source);
        r
    }

    fn push(&mut self, key: impl Into<String>, value: impl Display) {
        self.lines.push((key.into(), value.to_string()));
    }

    fn render(&self, format: Format) -> String {
        let mut out = String::new();
        if format == Format::Csv {
            out.push_str("key,value\n");
        }
        for (k, v) in &self.lines {
            match format {
                Format::Report => out.push_str(&format!("{k}: {v}\n")),
                Format::Csv => out.push_str(&format!("{k},{}\n", csv_field(v))),
            }
        }
        out
    }
}

fn csv_field(v: &str) -> String {
    if v.contains([',', '"', '\n']) {
        format!("\"{}\"", v.replace('"', "\"\""))
    } else {
        v.to_string()
    }
}

/// Failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse { .. } => EXIT_PARSE,
            Error::DimensionMismatch { .. }
            | Error::UnsupportedDimension(_)
            | Error::NotFormPreserving(_)
            | Error::NotHeisenberg(_)
            | Error::NotInterior(_) => EXIT_INVALID_MATRIX,
            Error::NonCommutingProjections { .. } => EXIT_NON_COMMUTING,
            Error::InsufficientData { .. } | Error::DegenerateRegression(_) => EXIT_INSUFFICIENT,
            _ => EXIT_OTHER,
        };
        let message = match &e {
            Error::NonCommutingProjections { first, second, defect } => format!(
                "generators g{first} and g{second} do not commute modulo the center \
                 (defect {defect:e}); witness pair: g{first}, g{second}"
            ),
            _ => e.to_string(),
        };
        Failure { code, message }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: EXIT_OTHER,
            message: e.to_string(),
        }
    }
}

fn load(common: &Common) -> Result<(GroupFile, String), Failure> {
    if let Some(name) = &common.scenario {
        let g = scenarios::by_name(name).ok_or_else(|| Failure {
            code: EXIT_PARSE,
            message: format!("unknown scenario '{name}'"),
        })?;
        return Ok((g, format!("scenario:{name}")));
    }
    let path = common.file.as_ref().expect("clap requires a file or a scenario");
    let text = std::fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_PARSE,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let g = GroupFile::parse(&text).map_err(|e| Failure {
        message: format!("{}: {e}", path.display()),
        ..Failure::from(e)
    })?;
    Ok((g, path.display().to_string()))
}

fn orbit(group: &GroupFile, common: &Common, default_cap: usize, diag: &mut dyn Write) -> Result<OrbitCloud, Failure> {
    let spec = group.group_spec()?;
    let mut limits = OrbitLimits::new(common.depth, common.max_points.unwrap_or(default_cap));
    if let Some(r) = common.radius {
        limits = limits.with_radius(r);
    }
    let cloud = enumerate_orbit_with(&spec, &limits)?;
    for w in &cloud.warnings {
        writeln!(diag, "warning: {w}")?;
    }
    Ok(cloud)
}

fn push_orbit(report: &mut Report, cloud: &OrbitCloud) {
    report.push("orbit_size", cloud.len());
    report.push("stop", format!("{:?}", cloud.stop).to_lowercase());
    report.push("complete_depth", cloud.complete_depth);
    report.push("truncation_radius", cloud.truncation_radius);
}

fn estimator_options(common: &Common) -> EstimatorOptions {
    EstimatorOptions {
        radius: common.radius,
        ..EstimatorOptions::default()
    }
}

fn classify(group: &GroupFile, report: &mut Report) -> Result<(), Failure> {
    let model = group.model()?;
    report.push("dimension", group.dimension);
    report.push("basis", group.basis);
    for (i, g) in group.isometries()?.iter().enumerate() {
        report.push(format!("g{}", i + 1), model.classify(g)?);
    }
    Ok(())
}

fn parabolic(group: &GroupFile, seed: u64, full: bool, report: &mut Report) -> Result<(), Failure> {
    let a = analyze(&group.parabolic_input()?, seed)?;
    if full {
        report.push("dimension", group.dimension);
        report.push("generators", a.working_generators.len());
        report.push("pi_abelian", a.pi_abelian);
        report.push("dim_v1", a.dim_fixed());
        report.push("dim_w1", a.dim_w1());
        report.push("totally_real", a.totally_real);
        report.push("stein", a.stein);
        report.push("l", a.l);
        report.push("k", a.k);
    }
    report.push("delta", a.delta);
    if full {
        let caveats: Vec<String> = a.caveats.iter().map(Caveat::to_string).collect();
        report.push(
            "caveats",
            if caveats.is_empty() { "none".to_string() } else { caveats.join(" ") },
        );
    }
    Ok(())
}

fn delta_estimate(group: &GroupFile, common: &Common, report: &mut Report, diag: &mut dyn Write) -> Result<Vec<String>, Failure> {
    let cloud = orbit(group, common, DEFAULT_MAX_POINTS, diag)?;
    push_orbit(report, &cloud);
    let est = estimate_delta_with(&cloud, &estimator_options(common))?;
    let d = &est.diagnostics;
    report.push("estimate", est.point);
    report.push("method", est.method);
    report.push("shell_count", est.shell_count);
    report.push("bisection", est.bisection);
    report.push("threshold_crossing", d.threshold_crossing);
    report.push("fit_radius", d.fit_radius);
    report.push("fit_points", d.fit_points);
    report.push("fit_residual", d.residual);
    let mut csv = vec!["inner,outer,count".to_string()];
    for (i, s) in d.shells.iter().enumerate() {
        report.push(format!("shell.{i}"), format!("{} {} {}", s.inner, s.outer, s.count));
        csv.push(format!("{},{},{}", s.inner, s.outer, s.count));
    }
    Ok(csv)
}

fn density_build(group: &GroupFile, common: &Common, report: &mut Report, diag: &mut dyn Write) -> Result<Vec<String>, Failure> {
    let cloud = orbit(group, common, DEFAULT_MAX_POINTS, diag)?;
    push_orbit(report, &cloud);
    let est = estimate_delta_with(&cloud, &estimator_options(common))?;
    let density = DensityApprox::from_estimate(&cloud, est.point)?;
    let spec = group.group_spec()?;
    let o = spec.basepoint();
    report.push("delta_estimate", est.point);
    report.push("exponent", density.exponent());
    report.push("normalization", density.normalization());
    report.push("atoms", density.atom_count());
    // adding 0.0 turns a negative zero into zero
    report.push("log_mass_at_basepoint", density.log_mass(o)? + 0.0);
    for (g, label) in spec.letters() {
        let name = if *label > 0 { format!("g{label}") } else { format!("g{}^-1", -label) };
        let image = g.apply(o);
        let gap = density.log_mass(&image)? - density.log_mass(o)?;
        report.push(format!("log_mass_shift.{name}"), gap);
        report.push(format!("invariance_bound.{name}"), density.invariance_bound(o, &image)?);
    }
    let mut csv = vec!["index,word,displacement,weight".to_string()];
    for (i, (r, w)) in cloud.records().iter().zip(density.weights()).enumerate() {
        csv.push(format!("{i},{},{},{w}", cloud.word(i), r.displacement));
    }
    Ok(csv)
}

fn levi_check(group: &GroupFile, common: &Common, report: &mut Report, diag: &mut dyn Write) -> Result<Vec<String>, Failure> {
    let mut warnings = Vec::new();
    if group.generators.len() < 2 {
        warnings.push("fewer than two generators; the group is elementary".to_string());
    }
    let cloud = orbit(group, common, LEVI_MAX_POINTS, diag)?;
    push_orbit(report, &cloud);
    let delta = match estimate_delta_with(&cloud, &estimator_options(common)) {
        Ok(est) => est.point,
        Err(e @ (Error::InsufficientData { .. } | Error::DegenerateRegression(_))) => {
            warnings.push(format!("exponent estimate unavailable ({e}); using 0"));
            0.0
        }
        Err(e) => return Err(e.into()),
    };
    let density = DensityApprox::from_estimate(&cloud, delta)?;
    let spec = group.group_spec()?;
    let (points, directions) = common.grid;
    let grid = ProbeGrid::random(spec.model(), spec.basepoint(), points, directions, PROBE_SPREAD, common.seed)?;
    let threshold = levi_threshold(delta) - LEVI_TOLERANCE;
    let probe = ProbeReport::run(&density, &grid, common.step, threshold)?;
    report.push("delta_estimate", delta);
    report.push("exponent", density.exponent());
    report.push("step", common.step);
    report.push("grid", format!("{points}x{directions}"));
    report.push("threshold", probe.threshold);
    report.push("min_estimate", probe.min_estimate);
    report.push("failed_probes", probe.rows.iter().filter(|r| !r.pass).count());
    report.push("result", if probe.pass { "PASS" } else { "FAIL" });
    report.push("warning", if warnings.is_empty() { "none".to_string() } else { warnings.join("; ") });
    for w in &warnings {
        writeln!(diag, "warning: {w}")?;
    }
    let mut buf = Vec::new();
    probe.write_csv(&mut buf)?;
    Ok(String::from_utf8_lossy(&buf).lines().map(str::to_string).collect())
}

fn orbit_export(group: &GroupFile, common: &Common, report: &mut Report, diag: &mut dyn Write) -> Result<Vec<String>, Failure> {
    let cloud = orbit(group, common, DEFAULT_MAX_POINTS, diag)?;
    push_orbit(report, &cloud);
    let mut buf = Vec::new();
    cloud.write_csv(&mut buf)?;
    Ok(String::from_utf8_lossy(&buf).lines().map(str::to_string).collect())
}

fn execute(command: &Command, out: &mut dyn Write, diag: &mut dyn Write) -> Result<(), Failure> {
    let (name, common) = match command {
        Command::Classify(c) => ("classify", c),
        Command::Parabolic(c) => ("parabolic", c),
        Command::DeltaExact(c) => ("delta-exact", c),
        Command::DeltaEstimate(c) => ("delta-estimate", c),
        Command::DensityBuild(c) => ("density-build", c),
        Command::LeviCheck(c) => ("levi-check", c),
        Command::OrbitExport(c) => ("orbit-export", c),
    };
    if !(common.step > 0.0 && common.step < 0.5) {
        return Err(Failure {
            code: EXIT_OTHER,
            message: format!("--step must lie in (0, 0.5), found {}", common.step),
        });
    }
    let (group, source) = load(common)?;
    let mut report = Report::new(name, common.seed, &source);
    let table = match command {
        Command::Classify(_) => {
            classify(&group, &mut report)?;
            None
        }
        Command::Parabolic(_) => {
            parabolic(&group, common.seed, true, &mut report)?;
            None
        }
        Command::DeltaExact(_) => {
            parabolic(&group, common.seed, false, &mut report)?;
            None
        }
        Command::DeltaEstimate(_) => Some(delta_estimate(&group, common, &mut report, diag)?),
        Command::DensityBuild(_) => Some(density_build(&group, common, &mut report, diag)?),
        Command::LeviCheck(_) => Some(levi_check(&group, common, &mut report, diag)?),
        Command::OrbitExport(_) => Some(orbit_export(&group, common, &mut report, diag)?),
    };
    let default_format = if matches!(command, Command::OrbitExport(_)) {
        Format::Csv
    } else {
        Format::Report
    };
    let text = match (common.format.unwrap_or(default_format), table) {
        (Format::Csv, Some(rows)) => {
            let mut s = rows.join("\n");
            s.push('\n');
            s
        }
        (format, _) => report.render(format),
    };
    out.write_all(text.as_bytes())?;
    Ok(())
}

/// Runs one invocation and returns the process exit code.
pub fn run(cli: &Cli, out: &mut dyn Write, diag: &mut dyn Write) -> i32 {
    match execute(&cli.command, out, diag) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(diag, "error: {}", f.message);
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn invoke(args: &[&str]) -> (i32, String, String) {
        let cli = Cli::try_parse_from(std::iter::once("chc").chain(args.iter().copied())).unwrap();
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(&cli, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn grid_flag_parses() {
        assert_eq!(parse_grid("20x5"), Ok((20, 5)));
        assert!(parse_grid("20").is_err());
        assert!(parse_grid("0x5").is_err());
    }

    #[test]
    fn report_lines_keep_insertion_order() {
        let (code, out, _) = invoke(&["parabolic", "--scenario", "example-2"]);
        assert_eq!(code, 0);
        let keys: Vec<&str> = out.lines().map(|l| l.split(':').next().unwrap()).collect();
        assert_eq!(
            keys,
            [
                "command", "seed", "input", "dimension", "generators", "pi_abelian", "dim_v1",
                "dim_w1", "totally_real", "stein", "l", "k", "delta", "caveats"
            ]
        );
        assert!(out.contains("delta: 5/2\n"));
    }

    #[test]
    fn csv_quotes_fields_with_commas() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
    }

    #[test]
    fn step_outside_range_is_rejected() {
        let (code, out, err) = invoke(&["levi-check", "--scenario", "schottky", "--step", "0.7"]);
        assert_eq!(code, EXIT_OTHER);
        assert!(out.is_empty());
        assert!(err.contains("--step"));
    }
}
