//! Command-line front end: verification suites, convergence studies and single solves.
//!
//! Exit codes: 0 when everything passes, 1 on a failed check or solve, 2 on a configuration
//! error. Reports and tables go to stdout (or `--out`); wall-clock timings go to stderr, so the
//! primary outputs do not depend on the thread count.

use std::ffi::OsString;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::mesh::{Mesh, MeshError, MeshSpec};
use crate::scheme::{run_manufactured, to_csv, with_rates, ConvergenceRow};
use crate::verification::{self as v, CheckReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "polyddr", version, about = "Discrete de Rham complex on polyhedral meshes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run verification suites and print one report per check.
    Verify(VerifyArgs),
    /// Solve the manufactured magnetostatics problem on a mesh family and write a CSV table.
    Converge(ConvergeArgs),
    /// Assemble and solve the manufactured magnetostatics problem on one mesh.
    Solve(SolveArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Suite {
    Complex,
    Commutation,
    Consistency,
    Traces,
    Recovery,
    Poincare,
    Adjoint,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Mesh file or builtin spec (cubic:N, tet:N, agglo:N:SEED).
    #[arg(long, default_value = "builtin:cubic:2")]
    pub mesh: String,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub degree: i64,
    /// Suites to run (repeatable or comma-separated); all when omitted.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub suite: Vec<Suite>,
    /// Mesh family for the rate and Poincare suites.
    #[arg(long, default_value = "cubic")]
    pub family: String,
    /// Family resolutions for the rate suites (default 2,4,8; Poincare uses 1,2).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub levels: Option<Vec<i64>>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Write the reports here (JSON when the name ends in .json).
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[arg(long, default_value = "cubic")]
    pub family: String,
    #[arg(long, value_delimiter = ',', default_value = "0", allow_negative_numbers = true)]
    pub degrees: Vec<i64>,
    #[arg(long, value_delimiter = ',', default_value = "2,4,8", allow_negative_numbers = true)]
    pub levels: Vec<i64>,
    /// Seed of the agglomerated family.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// CSV destination (stdout when omitted).
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, default_value = "builtin:cubic:2")]
    pub mesh: String,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub degree: i64,
    #[arg(long)]
    pub out: Option<String>,
}

/// Configuration problems, reported with exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(String);

fn degree(d: i64) -> Result<usize, ConfigError> {
    usize::try_from(d).map_err(|_| ConfigError(format!("degree must be non-negative, got {d}")))
}

fn levels(ls: &[i64]) -> Result<Vec<usize>, ConfigError> {
    let out: Vec<usize> = ls
        .iter()
        .map(|&l| usize::try_from(l).ok().filter(|&l| l > 0).ok_or_else(|| ConfigError(format!("levels must be positive, got {l}"))))
        .collect::<Result<_, _>>()?;
    if out.is_empty() || out.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ConfigError(format!("levels must be non-empty and strictly increasing, got {ls:?}")));
    }
    Ok(out)
}

/// Loads a mesh. Unreadable specs are configuration errors; meshes that load but fail validation
/// become a failed report naming the offending entity.
fn load_mesh(spec: &str) -> Result<Result<Mesh, CheckReport>, ConfigError> {
    let parsed = MeshSpec::parse(spec).map_err(|e| ConfigError(e.to_string()))?;
    match parsed.build() {
        Ok(m) => Ok(Ok(m)),
        Err(MeshError::Parse(e)) => Err(ConfigError(format!("cannot read mesh '{spec}': {e}"))),
        Err(e) => {
            let mut rep = CheckReport::new(format!("mesh {spec}"));
            rep.fail(e.to_string());
            Ok(Err(rep))
        }
    }
}

fn family(name: &str, ls: &[usize], seed: u64) -> Result<Vec<Mesh>, ConfigError> {
    v::family_meshes(name, ls, seed).map_err(|e| ConfigError(e.to_string()))
}

fn write_output(path: &Option<String>, text: &str, stdout: &mut (dyn Write + Send)) -> Result<(), ConfigError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| ConfigError(format!("cannot write '{p}': {e}"))),
        None => stdout.write_all(text.as_bytes()).map_err(|e| ConfigError(e.to_string())),
    }
}

fn verify(a: &VerifyArgs, stdout: &mut (dyn Write + Send)) -> Result<i32, ConfigError> {
    let k = degree(a.degree)?;
    let mut suites = a.suite.clone();
    if suites.is_empty() {
        suites = Suite::value_variants().to_vec();
    }
    suites.sort();
    suites.dedup();
    let rate_levels = levels(a.levels.as_deref().unwrap_or(&[2, 4, 8]))?;
    let poincare_levels = levels(a.levels.as_deref().unwrap_or(&[1, 2]))?;
    let needs_mesh = suites.iter().any(|s| !matches!(s, Suite::Poincare | Suite::Adjoint));
    let mut reports = vec![];
    let mesh = if needs_mesh {
        match load_mesh(&a.mesh)? {
            Ok(m) => Some(m),
            Err(rep) => {
                reports.push(rep);
                None
            }
        }
    } else {
        None
    };
    for s in suites {
        match (s, &mesh) {
            (Suite::Complex, Some(m)) => reports.push(v::check_complex(m, k)),
            (Suite::Commutation, Some(m)) => reports.push(v::check_commutation(m, k, a.seed)),
            (Suite::Consistency, Some(m)) => {
                reports.push(v::check_polynomial_consistency(m, k));
                reports.push(v::check_links(m, k));
                reports.push(v::check_primal_consistency(&family(&a.family, &rate_levels, a.seed)?, k));
            }
            (Suite::Traces, Some(m)) => reports.push(v::check_traces(m, 3)),
            (Suite::Recovery, Some(m)) => reports.push(v::check_recovery(m, 3, a.seed)),
            (Suite::Poincare, _) => reports.push(v::check_poincare_levels(&family(&a.family, &poincare_levels, a.seed)?, k)),
            (Suite::Adjoint, _) => reports.push(v::check_adjoint_decay(&family(&a.family, &rate_levels, a.seed)?, k)),
            (_, None) => {}
        }
    }
    let passed = reports.iter().all(|r| r.passed);
    let text = if a.out.as_deref().is_some_and(|p| p.ends_with(".json")) {
        serde_json::to_string_pretty(&reports).expect("reports serialize") + "\n"
    } else {
        reports.iter().map(|r| r.to_text()).collect::<String>()
    };
    if a.out.is_some() {
        write_output(&a.out, &text, stdout)?;
        for r in &reports {
            writeln!(stdout, "[{}] {}", if r.passed { "PASS" } else { "FAIL" }, r.name).ok();
        }
    } else {
        write_output(&None, &text, stdout)?;
    }
    Ok(if passed { EXIT_OK } else { EXIT_FAILURE })
}

fn converge(a: &ConvergeArgs, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> Result<i32, ConfigError> {
    let ls = levels(&a.levels)?;
    let ks: Vec<usize> = a.degrees.iter().map(|&d| degree(d)).collect::<Result<_, _>>()?;
    let mut rows = vec![];
    let mut code = EXIT_OK;
    'outer: for &k in &ks {
        for &n in &ls {
            let mesh = family(&a.family, &[n], a.seed)?.remove(0);
            match run_manufactured(&mesh, k) {
                Ok(report) => {
                    let t = &report.timings;
                    writeln!(stderr, "{} n={n} k={k}: bases {:.3}s, model {:.3}s, solve {:.3}s", a.family, t.bases, t.model, t.solve).ok();
                    rows.push(ConvergenceRow { family: a.family.clone(), level: n, degree: k, report, rate: None });
                }
                Err(e) => {
                    writeln!(stderr, "solve failed at level {n} (k={k}): {e}").ok();
                    code = EXIT_FAILURE;
                    break 'outer;
                }
            }
        }
    }
    let rows = with_rates(rows);
    write_output(&a.out, &to_csv(&rows), stdout)?;
    let mut summary = String::new();
    for r in rows.iter().filter(|r| r.rate.is_some()) {
        summary += &format!("rate {} k={} level {}: {:.4}\n", r.family, r.degree, r.level, r.rate.unwrap());
    }
    if a.out.is_some() {
        stdout.write_all(summary.as_bytes()).ok();
    } else {
        stderr.write_all(summary.as_bytes()).ok();
    }
    Ok(code)
}

/// Whether the mesh fills the unit cube, where the manufactured solution applies.
fn is_unit_cube(mesh: &Mesh) -> bool {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in &mesh.vertices {
        lo = lo.min(p.min());
        hi = hi.max(p.max());
    }
    let vol: f64 = mesh.cells.iter().map(|c| c.volume).sum();
    lo.abs() < 1e-12 && (hi - 1.0).abs() < 1e-12 && (vol - 1.0).abs() < 1e-10
}

fn solve(a: &SolveArgs, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> Result<i32, ConfigError> {
    let k = degree(a.degree)?;
    let mesh = match load_mesh(&a.mesh)? {
        Ok(m) => m,
        Err(rep) => {
            write_output(&a.out, &rep.to_text(), stdout)?;
            return Ok(EXIT_FAILURE);
        }
    };
    let report = match run_manufactured(&mesh, k) {
        Ok(r) => r,
        Err(e) => {
            writeln!(stderr, "solve failed: {e}").ok();
            return Ok(EXIT_FAILURE);
        }
    };
    let mut s = String::new();
    s += &format!("mesh: {}\ndegree: {k}\ncells: {}\nmesh_size: {:.10e}\nregularity: {:.6}\n", a.mesh, report.num_cells, report.mesh_size, mesh.regularity());
    s += &format!("dim_xcurl: {}\ndim_xdiv: {}\nsystem_dim: {}\n", report.dim_xcurl, report.dim_xdiv, report.dim_xcurl + report.dim_xdiv);
    s += &format!("residual: {:.3e}\n", report.residual);
    if is_unit_cube(&mesh) {
        let e = report.errors;
        s += &format!("err_curl: {:.10e}\nerr_div: {:.10e}\nerr_rel: {:.10e}\n", e.e_curl, e.e_div, e.e_rel);
    }
    write_output(&a.out, &s, stdout)?;
    let t = report.timings;
    writeln!(stderr, "timings: bases {:.3}s, model {:.3}s, solve {:.3}s", t.bases, t.model, t.solve).ok();
    Ok(EXIT_OK)
}

/// Parses the arguments and runs the command, returning the process exit code.
pub fn run<I, T>(args: I, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                stderr.write_all(text.as_bytes()).ok();
            } else {
                stdout.write_all(text.as_bytes()).ok();
            }
            return code;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            writeln!(stderr, "error: --threads must be positive").ok();
            return EXIT_CONFIG;
        }
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            writeln!(stderr, "error: {e}").ok();
            return EXIT_CONFIG;
        }
    };
    let result = pool.install(|| match &cli.command {
        Command::Verify(a) => verify(a, stdout),
        Command::Converge(a) => converge(a, stdout, stderr),
        Command::Solve(a) => solve(a, stdout, stderr),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            writeln!(stderr, "error: {e}").ok();
            EXIT_CONFIG
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (vec![], vec![]);
        let code = run(std::iter::once("polyddr").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn verify_complex_passes() {
        let (code, out, _) = run_capture(&["verify", "--mesh", "builtin:cubic:2", "--degree", "0", "--suite", "complex"]);
        assert_eq!(code, EXIT_OK, "{out}");
        assert!(out.starts_with("[PASS] complex"));
    }

    #[test]
    fn config_errors_exit_with_two() {
        assert_eq!(run_capture(&["verify", "--degree", "-1", "--suite", "complex"]).0, EXIT_CONFIG);
        assert_eq!(run_capture(&["converge", "--levels", "4,2"]).0, EXIT_CONFIG);
        assert_eq!(run_capture(&["verify", "--suite", "nonsense"]).0, EXIT_CONFIG);
        assert_eq!(run_capture(&["solve", "--mesh", "builtin:cubic:0"]).0, EXIT_CONFIG);
        assert_eq!(run_capture(&["solve", "--mesh", "/nonexistent/mesh.json"]).0, EXIT_CONFIG);
        assert_eq!(run_capture(&["--threads", "0", "solve"]).0, EXIT_CONFIG);
    }

    #[test]
    fn solve_reports_system_dimension() {
        let (code, out, err) = run_capture(&["solve", "--mesh", "builtin:cubic:2", "--degree", "0"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("system_dim: 90"), "{out}");
        assert!(out.contains("err_rel"));
        assert!(err.contains("timings"));
    }

    #[test]
    fn converge_writes_one_row_per_solve() {
        let (code, out, _) = run_capture(&["converge", "--degrees", "0,1", "--levels", "1,2"]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(out.lines().count(), 5);
        assert!(out.starts_with(crate::scheme::CSV_HEADER));
    }
}
