//! Acceptance criteria 1-11, one line each. Exits nonzero if any fails.

use std::process::Command;

use slicecalc::spectral::{hausdorff, s_spectrum_exact, SpectrumComponent};
use slicecalc::verify::{self, pauli, pauli_components, quadrature_doubling, suite_rng, Sizes, SuiteReport};

const SEED: u64 = 7;
const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/pauli.json");

struct Line {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn checks(suite: &SuiteReport, names: &[&str]) -> (bool, String) {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in names {
        let c = suite.check(name).unwrap_or_else(|| panic!("missing check {name}"));
        pass &= c.pass;
        parts.push(format!("{name}={:.3e} {} {:e} (n={})", c.value, c.comparison, c.threshold, c.samples));
    }
    (pass, parts.join("; "))
}

fn suite(name: &str) -> SuiteReport {
    verify::run_suite(name, SEED, &Sizes::default()).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn pauli_exact() -> (bool, String) {
    let spec = s_spectrum_exact(&pauli()).expect("pauli spectrum");
    let dist = hausdorff(&spec.components, &pauli_components());
    let pass = spec.components.len() == 2 && dist <= 1e-10;
    (pass, format!("components={} hausdorff={dist:.3e} <= 1e-10", spec.components.len()))
}

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_slicecalc")).args(args).output().expect("binary runs")
}

fn cli_determinism() -> (bool, String) {
    let a = run_cli(&["verify", "--suite", "all", "--seed", "7"]);
    let b = run_cli(&["verify", "--suite", "all", "--seed", "7"]);
    let same = a.status.success() && b.status.success() && a.stdout == b.stdout && !a.stdout.is_empty();
    let spec = run_cli(&["spectrum", "--input", FIXTURE, "--method", "exact"]);
    let text = String::from_utf8_lossy(&spec.stdout);
    let rows: Vec<SpectrumComponent> = text
        .lines()
        .skip(1)
        .filter_map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            Some(SpectrumComponent { u: f.first()?.parse().ok()?, r: f.get(1)?.parse().ok()?, multiplicity: 1 })
        })
        .collect();
    let dist = hausdorff(&rows, &pauli_components());
    let csv_ok = spec.status.success() && rows.len() == 2 && dist <= 1e-10;
    (same && csv_ok, format!("identical_reports={same} report_bytes={} pauli_csv_hausdorff={dist:.3e}", a.stdout.len()))
}

fn main() {
    let start = std::time::Instant::now();
    let kernel = suite("kernel");
    let resolvent = suite("resolvent");
    let spectrum = suite("spectrum");
    let moments = suite("moments");
    let planes = suite("planes");
    let unbounded = suite("unbounded");
    let doubling = quadrature_doubling(&mut suite_rng(SEED, "doubling"), 10, 4).expect("doubling study");

    let mut lines = Vec::new();
    let mut push = |id, title, (pass, detail): (bool, String)| lines.push(Line { id, title, pass, detail });
    push(1, "Pauli example spectrum", pauli_exact());
    push(2, "kernel series equals closed form", checks(&kernel, &["series_vs_closed_form", "worked_value"]));
    push(3, "non-extendability probe", checks(&kernel, &["directional_gap", "real_scaled_gap"]));
    push(4, "S-resolvent equation", checks(&resolvent, &["resolvent_equation"]));
    push(
        5,
        "series / closed form / left expansion agree",
        checks(
            &resolvent,
            &[
                "series_vs_closed_form",
                "left_expansion_vs_closed_form",
                "series_vs_left_expansion",
                "triple_sample_ratio",
                "inadmissible_left_expansions_accepted",
            ],
        ),
    );
    push(6, "moment theorem", checks(&moments, &["moment_residual_scaled"]));
    push(7, "plane independence", checks(&planes, &["plane_gap"]));
    push(8, "spectrum compact and nonempty", checks(&spectrum, &["containment_excess", "fewest_components"]));
    push(
        9,
        "unbounded operators",
        checks(&unbounded, &["transform_identity", "spectrum_correspondence", "chart_vs_direct", "k_independence"]),
    );
    let quad_pass = doubling.late_vs_floor <= 1.0 && doubling.early_reduction >= 10.0;
    push(
        10,
        "quadrature convergence under doubling",
        (
            quad_pass,
            format!(
                "res512/max(res256/10, floor)={:.3e} <= 1; min res16/res32={:.3e} >= 10; \
                 min res256/res512={:.3e} (both at the roundoff floor)",
                doubling.late_vs_floor, doubling.early_reduction, doubling.late_reduction
            ),
        ),
    );
    push(11, "CLI determinism and Pauli CSV", cli_determinism());

    let mut failed = 0;
    for l in &lines {
        if !l.pass {
            failed += 1;
        }
        println!("criterion {:>2} {} {}: {}", l.id, if l.pass { "PASS" } else { "FAIL" }, l.title, l.detail);
    }
    println!("{} of {} criteria passed in {:.1?}", lines.len() - failed, lines.len(), start.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}
