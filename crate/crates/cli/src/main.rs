use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use slicecalc::calculus::{build_contour, f_of_t, DEFAULT_NODES};
use slicecalc::io::{calculus_result_json, operator_to_value, parse_function, parse_operator, parse_plane, plot_csv};
use slicecalc::spectral::{hausdorff, s_resolvent, s_spectrum_exact, s_spectrum_scan, ScanOptions, SCAN_TOL};
use slicecalc::unbounded::{companion_operator, ExtendedFunction, MoebiusChart};
use slicecalc::verify::{self, Sizes};
use slicecalc::{CliffordMatrix, Error, Paravector};

const EXIT_VERIFY: u8 = 1;
const EXIT_SCHEMA: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_CLEARANCE: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "slicecalc", version, about = "S-spectrum, S-resolvent and slice functional calculus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// S-spectrum as CSV rows u,r,multiplicity,method
    Spectrum {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Exact)]
        method: Method,
        /// Scan grid step
        #[arg(long)]
        step: Option<f64>,
        /// Scan singularity threshold
        #[arg(long, default_value_t = SCAN_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Plane points (u, ±r); defaults to <out>.plot.csv when --out is given
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// S-resolvent at a point outside the spectrum, as operator JSON
    Resolvent {
        #[arg(long)]
        input: PathBuf,
        /// Paravector, e.g. "1 + 2 e1"
        #[arg(long)]
        s: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// f(T) by contour quadrature
    Apply {
        #[arg(long)]
        input: PathBuf,
        #[arg(long = "fn")]
        function: String,
        #[arg(long, default_value = "e1")]
        plane: String,
        #[arg(long, default_value_t = DEFAULT_NODES)]
        nodes: usize,
        #[arg(long)]
        margin: Option<f64>,
        /// Evaluate through the companion operator (T - kI)^-1, e.g. k=3
        #[arg(long)]
        chart: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded check suites
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum Method {
    Exact,
    Scan,
    Both,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn schema(message: impl Into<String>) -> Self {
        Failure { code: EXIT_SCHEMA, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) | Error::UnsupportedDimension(_) | Error::DimensionMismatch { .. } => EXIT_SCHEMA,
            Error::Clearance { .. } | Error::InSpectrum { .. } | Error::Contour(_) => EXIT_CLEARANCE,
            _ => EXIT_SOLVER,
        };
        Failure { code, message: e.to_string() }
    }
}

type CmdResult = std::result::Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cmd: Command) -> CmdResult {
    match cmd {
        Command::Spectrum { input, method, step, tol, out, plot } => cmd_spectrum(&input, method, step, tol, out, plot),
        Command::Resolvent { input, s, out } => cmd_resolvent(&input, &s, out),
        Command::Apply { input, function, plane, nodes, margin, chart, out } => {
            cmd_apply(&input, &function, &plane, nodes, margin, chart.as_deref(), out)
        }
        Command::Verify { suite, seed, out } => cmd_verify(&suite, seed, out),
    }
}

fn max_n() -> std::result::Result<usize, Failure> {
    match std::env::var("SLICECALC_MAX_N") {
        Ok(v) => v.trim().parse().map_err(|_| Failure::schema(format!("SLICECALC_MAX_N={v:?} is not an integer"))),
        Err(_) => Ok(8),
    }
}

fn load_operator(path: &Path) -> std::result::Result<CliffordMatrix, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::schema(format!("{}: {e}", path.display())))?;
    let op = parse_operator(&text, max_n()?)
        .map_err(|e| Failure::schema(format!("{}: {e}", path.display())))?;
    Ok(op.as_clifford().clone())
}

/// Writes through a temporary file in the target directory, then renames.
fn emit(out: Option<&Path>, text: &str) -> std::result::Result<(), Failure> {
    let Some(path) = out else {
        print!("{text}");
        return Ok(());
    };
    let io_err = |e: std::io::Error| Failure { code: EXIT_SOLVER, message: format!("{}: {e}", path.display()) };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(text.as_bytes()).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn positive(name: &str, v: Option<f64>) -> std::result::Result<(), Failure> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(Failure::schema(format!("--{name} must be positive, got {x}"))),
        _ => Ok(()),
    }
}

fn cmd_spectrum(
    input: &Path,
    method: Method,
    step: Option<f64>,
    tol: f64,
    out: Option<PathBuf>,
    plot: Option<PathBuf>,
) -> CmdResult {
    positive("step", step)?;
    positive("tol", Some(tol))?;
    let t = load_operator(input)?;
    let opts = ScanOptions { step, tol, ..ScanOptions::default() };
    let (csv, shown) = match method {
        Method::Exact => {
            let r = s_spectrum_exact(&t)?;
            (r.to_csv(), r)
        }
        Method::Scan => {
            let r = s_spectrum_scan(&t, &opts)?;
            (r.to_csv(), r)
        }
        Method::Both => {
            let exact = s_spectrum_exact(&t)?;
            let scan = s_spectrum_scan(&t, &opts)?;
            let mut csv = exact.to_csv();
            csv.extend(scan.to_csv().lines().skip(1).map(|l| format!("{l}\n")));
            csv.push_str(&format!("# hausdorff={:?}\n", hausdorff(&exact.components, &scan.components)));
            (csv, exact)
        }
    };
    let plot = plot.or_else(|| out.as_ref().map(|o| o.with_extension("plot.csv")));
    if let Some(p) = &plot {
        emit(Some(p), &plot_csv(&shown))?;
    }
    emit(out.as_deref(), &csv)?;
    Ok(0)
}

fn cmd_resolvent(input: &Path, s: &str, out: Option<PathBuf>) -> CmdResult {
    let t = load_operator(input)?;
    let s = Paravector::parse(s, t.n()).map_err(|e| Failure::schema(format!("--s: {e}")))?;
    let value = s_resolvent(&s, &t)?;
    let json = serde_json::json!({ "s": s.to_string(), "value": operator_to_value(&value) });
    emit(out.as_deref(), &(serde_json::to_string_pretty(&json).expect("plain data serializes") + "\n"))?;
    Ok(0)
}

fn parse_chart(spec: &str) -> std::result::Result<f64, Failure> {
    let v = spec.trim().strip_prefix("k=").unwrap_or(spec.trim());
    v.parse::<f64>()
        .ok()
        .filter(|k| k.is_finite())
        .ok_or_else(|| Failure::schema(format!("--chart expects k=<real>, got {spec:?}")))
}

fn cmd_apply(
    input: &Path,
    function: &str,
    plane: &str,
    nodes: usize,
    margin: Option<f64>,
    chart: Option<&str>,
    out: Option<PathBuf>,
) -> CmdResult {
    if nodes == 0 {
        return Err(Failure::schema("--nodes must be positive"));
    }
    positive("margin", margin)?;
    let t = load_operator(input)?;
    let f = parse_function(function, t.n()).map_err(|e| Failure::schema(format!("--fn: {e}")))?;
    let plane = parse_plane(plane, t.n()).map_err(|e| Failure::schema(format!("--plane: {e}")))?;
    let result = match chart {
        None => {
            let spec = s_spectrum_exact(&t)?;
            f_of_t(&f, &t, &build_contour(&spec, &f, &plane, margin, nodes)?)?
        }
        Some(c) => {
            let k = parse_chart(c)?;
            let ef = ExtendedFunction::rational(f, None)
                .map_err(|e| Failure::schema(format!("--chart needs a function regular at infinity: {e}")))?;
            MoebiusChart::for_operator(k, &t)?;
            let a = companion_operator(&t, k)?;
            let phi = ef.phi_for(k)?;
            let spec = s_spectrum_exact(&a)?;
            f_of_t(&phi, &a, &build_contour(&spec, &phi, &plane, margin, nodes)?)?
        }
    };
    emit(out.as_deref(), &(calculus_result_json(&result) + "\n"))?;
    Ok(0)
}

fn cmd_verify(suite: &str, seed: u64, out: Option<PathBuf>) -> CmdResult {
    if suite != "all" && !verify::SUITES.contains(&suite) {
        return Err(Failure::schema(format!(
            "unknown suite {suite:?}; expected all or one of {}",
            verify::SUITES.join(", ")
        )));
    }
    let report = verify::run(suite, seed, &Sizes::default())?;
    emit(out.as_deref(), &report.to_json())?;
    Ok(if report.pass { 0 } else { EXIT_VERIFY })
}
