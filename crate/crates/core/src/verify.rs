//! Seeded randomized check suites with a machine-readable report.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::calculus::{build_contour, moment_check, plane_independence_gap};
use crate::clifford::{ImagUnit, Multivector, Paravector};
use crate::error::{Error, Result};
use crate::operator::ParavectorOperator;
use crate::slice::{kernel_directional_gap, kernel_s, kernel_scaled_gap, kernel_series, SliceSeriesFunction};
use crate::spectral::{
    hausdorff, left_expansion_admissibility, left_resolvent_expansion, resolvent_equation_residual,
    s_resolvent, s_resolvent_series, s_spectrum_exact, s_spectrum_scan, ScanOptions, SpectrumComponent,
    SpectrumReport,
};
use crate::unbounded::{
    f_of_t_direct, f_of_t_via_chart, spectrum_correspondence_check, transform_residual, ExtendedFunction,
};

pub const SUITES: [&str; 6] = ["kernel", "resolvent", "spectrum", "moments", "planes", "unbounded"];

/// Sampled points keep at least this plane distance from the spectrum.
pub const SAMPLE_GAP: f64 = 0.25;
/// Series terms for the resolvent triple comparison.
pub const SERIES_TERMS: usize = 200;
/// Residual floor below which quadrature doubling is not expected to help,
/// relative to (1 + ‖T‖)ᵐ.
pub const QUADRATURE_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub samples: usize,
    pub value: f64,
    pub threshold: f64,
    /// "<=" or ">=".
    pub comparison: &'static str,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, samples: usize, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), samples, value, threshold, comparison: "<=", pass: value <= threshold }
    }

    pub fn at_least(name: &str, samples: usize, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), samples, value, threshold, comparison: ">=", pass: value >= threshold }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl SuiteReport {
    fn new(name: &str, checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        SuiteReport { name: name.into(), checks, pass }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub seed: u64,
    pub suites: Vec<SuiteReport>,
    pub pass: bool,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| s.name == name)
    }
}

/// Sample counts per check.
#[derive(Clone, Debug)]
pub struct Sizes {
    pub kernel_pairs: usize,
    pub resolvent_samples: usize,
    pub triple_samples: usize,
    pub containment_ops: usize,
    pub scan_ops: usize,
    pub moment_ops: usize,
    pub max_moment: usize,
    pub moment_nodes: usize,
    pub doubling_ops: usize,
    pub plane_ops: usize,
    pub transform_triples: usize,
    pub route_ops: usize,
}

impl Default for Sizes {
    fn default() -> Self {
        Sizes {
            kernel_pairs: 200,
            resolvent_samples: 200,
            triple_samples: 50,
            containment_ops: 100,
            scan_ops: 3,
            moment_ops: 50,
            max_moment: 4,
            moment_nodes: 512,
            doubling_ops: 10,
            plane_ops: 10,
            transform_triples: 100,
            route_ops: 10,
        }
    }
}

/// Runs one suite or, for "all", every suite in order.
pub fn run(suite: &str, seed: u64, sizes: &Sizes) -> Result<Report> {
    let names: Vec<&str> = match suite {
        "all" => SUITES.to_vec(),
        s if SUITES.contains(&s) => vec![s],
        other => return Err(Error::Invalid(format!("unknown suite {other:?}"))),
    };
    let suites = names.iter().map(|name| run_suite(name, seed, sizes)).collect::<Result<Vec<_>>>()?;
    let pass = suites.iter().all(|s| s.pass);
    Ok(Report { seed, suites, pass })
}

pub fn run_suite(name: &str, seed: u64, sizes: &Sizes) -> Result<SuiteReport> {
    let mut rng = suite_rng(seed, name);
    match name {
        "kernel" => kernel_suite(&mut rng, sizes),
        "resolvent" => resolvent_suite(&mut rng, sizes),
        "spectrum" => spectrum_suite(&mut rng, sizes),
        "moments" => moments_suite(&mut rng, sizes),
        "planes" => planes_suite(&mut rng, sizes),
        "unbounded" => unbounded_suite(&mut rng, sizes),
        other => Err(Error::Invalid(format!("unknown suite {other:?}"))),
    }
}

/// Each suite draws from its own stream, so suites are reproducible alone.
pub fn suite_rng(seed: u64, name: &str) -> ChaCha8Rng {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(seed ^ h)
}

pub fn pauli() -> ParavectorOperator {
    ParavectorOperator::new(vec![
        DMatrix::zeros(2, 2),
        DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
    ])
    .expect("static shape")
}

/// Components drawn uniformly from [−1, 1].
pub fn random_operator(rng: &mut ChaCha8Rng, n: usize, d: usize) -> ParavectorOperator {
    ParavectorOperator::new((0..=n).map(|_| DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0))).collect())
        .expect("consistent shapes")
}

pub fn random_paravector(rng: &mut ChaCha8Rng, n: usize, lim: f64) -> Paravector {
    Paravector::new(rng.random_range(-lim..lim), (0..n).map(|_| rng.random_range(-lim..lim)).collect())
}

pub fn random_multivector(rng: &mut ChaCha8Rng, n: usize) -> Multivector {
    Multivector::from_coeffs(n, (0..1usize << n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .expect("consistent length")
}

pub fn random_plane(rng: &mut ChaCha8Rng, n: usize) -> ImagUnit {
    loop {
        let dirs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        if dirs.iter().map(|x| x * x).sum::<f64>() > 0.01 {
            return ImagUnit::new(dirs).expect("nonzero direction");
        }
    }
}

/// Distance in the (u, r) half-plane from s to the nearest spectrum component.
pub fn spectrum_distance(spec: &SpectrumReport, s: &Paravector) -> f64 {
    let (u, r) = (s.re(), s.vec_norm());
    spec.components.iter().map(|c| (c.u - u).hypot(c.r - r)).fold(f64::INFINITY, f64::min)
}

fn dims(rng: &mut ChaCha8Rng) -> (usize, usize) {
    (rng.random_range(1..=3), rng.random_range(1..=3))
}

pub fn kernel_suite(rng: &mut ChaCha8Rng, sizes: &Sizes) -> Result<SuiteReport> {
    let mut worst: f64 = 0.0;
    for _ in 0..sizes.kernel_pairs {
        let n = rng.random_range(1..=3);
        let s = loop {
            let s = random_paravector(rng, n, 2.0);
            if s.norm() > 0.2 {
                break s;
            }
        };
        let y = loop {
            let y = random_paravector(rng, n, 1.0);
            if y.norm() > 1e-3 {
                break y;
            }
        };
        let x = y.scale(rng.random_range(0.0..=1.0) * 0.5 * s.norm() / y.norm());
        let closed = kernel_s(&s, &x)?;
        let series = kernel_series(&s, &x, 60)?;
        worst = worst.max((&closed - &series).norm() / closed.norm());
    }
    let s = Paravector::new(0.0, vec![1.0, 0.0]);
    let x = Paravector::new(0.0, vec![0.0, 0.5]);
    let expect = Multivector::from_coeffs(2, vec![0.0, -4.0 / 3.0, -2.0 / 3.0, 0.0])?;
    let worked = (&kernel_s(&s, &x)? - &expect).norm();

    let (e1, e2) = (ImagUnit::basis(2, 1), ImagUnit::basis(2, 2));
    let probes = [1e-2, 1e-3, 1e-4];
    let mut min_gap = f64::INFINITY;
    for &t in &probes {
        min_gap = min_gap.min(kernel_directional_gap(&s, &e1, &e2, t)?);
    }
    let mut real_gap: f64 = 0.0;
    let reals = [2.0, -1.5];
    for &a in &reals {
        for &t in &probes {
            real_gap = real_gap.max(kernel_scaled_gap(&Paravector::real(2, a), &e1, &e2, t)?);
        }
    }
    Ok(SuiteReport::new(
        "kernel",
        vec![
            Check::at_most("series_vs_closed_form", sizes.kernel_pairs, worst, 1e-10),
            Check::at_most("worked_value", 1, worked, 1e-10),
            Check::at_least("directional_gap", probes.len(), min_gap, 0.1),
            Check::at_most("real_scaled_gap", probes.len() * reals.len(), real_gap, 1e-6),
        ],
    ))
}

/// Random (s, T) with s at least [`SAMPLE_GAP`] from the S-spectrum.
pub fn admissible_pair(rng: &mut ChaCha8Rng) -> Result<(Paravector, ParavectorOperator)> {
    loop {
        let (n, d) = dims(rng);
        let t = random_operator(rng, n, d);
        let spec = s_spectrum_exact(&t)?;
        let s = random_paravector(rng, n, 3.0);
        if spectrum_distance(&spec, &s) >= SAMPLE_GAP {
            return Ok((s, t));
        }
    }
}

/// Random (s, T) where the power series and the left expansion both
/// converge with ratio below 0.8: |s| > ‖T‖/0.8 and
/// |s_vec| < 0.8(|Re s| − ‖T‖) ≤ 0.8/‖(Re[s]I − T)⁻¹‖.
pub fn triple_sample(rng: &mut ChaCha8Rng) -> (Paravector, ParavectorOperator) {
    let (n, d) = dims(rng);
    let t = random_operator(rng, n, d);
    let rho = t.as_clifford().rep_norm();
    let mag = rho / 0.8 + rng.random_range(0.5..2.0);
    let u = if rng.random_bool(0.5) { mag } else { -mag };
    let dir = random_plane(rng, n);
    let v = rng.random_range(0.0..0.72) * (mag - rho);
    (Paravector::new(u, dir.dirs().iter().map(|x| x * v).collect()), t)
}

pub fn resolvent_suite(rng: &mut ChaCha8Rng, sizes: &Sizes) -> Result<SuiteReport> {
    let mut eq: f64 = 0.0;
    for _ in 0..sizes.resolvent_samples {
        let (s, t) = admissible_pair(rng)?;
        eq = eq.max(resolvent_equation_residual(&s, &t)?);
    }
    let (mut sc, mut lc, mut sl): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..sizes.triple_samples {
        let (s, t) = triple_sample(rng);
        let closed = s_resolvent(&s, &t)?;
        let series = s_resolvent_series(&s, &t, SERIES_TERMS)?;
        let left = left_resolvent_expansion(&s, &t, SERIES_TERMS)?;
        worst_ratio = worst_ratio.max(series.ratio).max(left_expansion_admissibility(&s, &t)?);
        sc = sc.max((&series.value - &closed).rep_norm());
        lc = lc.max((&left - &closed).rep_norm());
        sl = sl.max((&series.value - &left).rep_norm());
    }
    // points where the left expansion is not admissible must be refused
    let mut accepted = 0usize;
    let mut probed = 0usize;
    while probed < sizes.triple_samples {
        let (n, d) = dims(rng);
        let t = random_operator(rng, n, d);
        let s = random_paravector(rng, n, 3.0);
        let q = match left_expansion_admissibility(&s, &t) {
            Ok(q) => q,
            Err(Error::SingularOperator { .. }) => continue,
            Err(e) => return Err(e),
        };
        if q < 1.0 {
            continue;
        }
        probed += 1;
        if !matches!(left_resolvent_expansion(&s, &t, 10), Err(Error::ConditionViolated(_))) {
            accepted += 1;
        }
    }
    let n3 = sizes.triple_samples;
    Ok(SuiteReport::new(
        "resolvent",
        vec![
            Check::at_most("resolvent_equation", sizes.resolvent_samples, eq, 1e-10),
            Check::at_most("series_vs_closed_form", n3, sc, 1e-10),
            Check::at_most("left_expansion_vs_closed_form", n3, lc, 1e-10),
            Check::at_most("series_vs_left_expansion", n3, sl, 1e-10),
            Check::at_most("triple_sample_ratio", n3, worst_ratio, 0.8),
            Check::at_most("inadmissible_left_expansions_accepted", n3, accepted as f64, 0.0),
        ],
    ))
}

pub fn pauli_components() -> Vec<SpectrumComponent> {
    vec![
        SpectrumComponent { u: 0.0, r: 0.0, multiplicity: 1 },
        SpectrumComponent { u: 0.0, r: 2.0, multiplicity: 1 },
    ]
}

pub fn spectrum_suite(rng: &mut ChaCha8Rng, sizes: &Sizes) -> Result<SuiteReport> {
    let pauli_spec = s_spectrum_exact(&pauli())?;
    let pauli_dist = if pauli_spec.components.len() == 2 {
        hausdorff(&pauli_spec.components, &pauli_components())
    } else {
        f64::INFINITY
    };
    let mut excess = f64::NEG_INFINITY;
    let mut fewest = usize::MAX;
    for _ in 0..sizes.containment_ops {
        let (n, d) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let spec = s_spectrum_exact(&random_operator(rng, n, d))?;
        excess = excess.max(spec.max_modulus() - spec.rep_norm);
        fewest = fewest.min(spec.components.len());
    }
    let step = 0.05;
    let opts = ScanOptions { step: Some(step), ..ScanOptions::default() };
    let mut scan: f64 = hausdorff(&s_spectrum_scan(&pauli(), &opts)?.components, &pauli_spec.components);
    for _ in 0..sizes.scan_ops {
        let t = random_operator(rng, 2, 2);
        let exact = s_spectrum_exact(&t)?;
        scan = scan.max(hausdorff(&s_spectrum_scan(&t, &opts)?.components, &exact.components));
    }
    Ok(SuiteReport::new(
        "spectrum",
        vec![
            Check::at_most("pauli_exact", 1, pauli_dist, 1e-10),
            Check::at_most("containment_excess", sizes.containment_ops, excess, 1e-10),
            Check::at_least("fewest_components", sizes.containment_ops, fewest as f64, 1.0),
            Check::at_most("scan_vs_exact", sizes.scan_ops + 1, scan, step),
        ],
    ))
}

pub fn moments_suite(rng: &mut ChaCha8Rng, sizes: &Sizes) -> Result<SuiteReport> {
    let mut worst: f64 = 0.0;
    for _ in 0..sizes.moment_ops {
        let (n, d) = dims(rng);
        let t = random_operator(rng, n, d);
        let a = random_multivector(rng, n);
        let plane = random_plane(rng, n);
        let spec = s_spectrum_exact(&t)?;
        for m in 0..=sizes.max_moment {
            let f = SliceSeriesFunction::monomial(m, a.clone());
            let contour = build_contour(&spec, &f, &plane, None, sizes.moment_nodes)?;
            let res = moment_check(&t, m, &a, &contour)?;
            worst = worst.max(res / (1.0 + spec.rep_norm).powi(m as i32));
        }
    }
    let q = quadrature_doubling(rng, sizes.doubling_ops, sizes.max_moment)?;
    Ok(SuiteReport::new(
        "moments",
        vec![
            Check::at_most("moment_residual_scaled", sizes.moment_ops * (sizes.max_moment + 1), worst, 1e-8),
            Check::at_most("doubling_256_512_vs_floor", sizes.doubling_ops, q.late_vs_floor, 1.0),
            Check::at_least("doubling_16_32_reduction", sizes.doubling_ops, q.early_reduction, 10.0),
        ],
    ))
}

/// Quadrature doubling on circles with clearance 0.2‖T‖.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Doubling {
    /// Worst res₅₁₂ / max(res₂₅₆/10, floor).
    pub late_vs_floor: f64,
    /// Smallest res₁₆ / res₃₂.
    pub early_reduction: f64,
    /// Smallest res₂₅₆ / res₅₁₂.
    pub late_reduction: f64,
}

/// Moment residuals of xᵐ at 16, 32, 256 and 512 nodes on random operators.
pub fn quadrature_doubling(rng: &mut ChaCha8Rng, ops: usize, m: usize) -> Result<Doubling> {
    let mut out = Doubling { late_vs_floor: 0.0, early_reduction: f64::INFINITY, late_reduction: f64::INFINITY };
    for _ in 0..ops {
        let (n, d) = dims(rng);
        let t = random_operator(rng, n, d);
        let spec = s_spectrum_exact(&t)?;
        let a = Multivector::one(n);
        let f = SliceSeriesFunction::monomial(m, a.clone());
        let plane = random_plane(rng, n);
        let res = |nodes: usize| -> Result<f64> {
            let contour = build_contour(&spec, &f, &plane, Some(0.2 * spec.rep_norm), nodes)?;
            moment_check(&t, m, &a, &contour)
        };
        let floor = QUADRATURE_FLOOR * (1.0 + spec.rep_norm).powi(m as i32);
        let (r256, r512) = (res(256)?, res(512)?);
        out.late_vs_floor = out.late_vs_floor.max(r512 / (r256 / 10.0).max(floor));
        out.late_reduction = out.late_reduction.min(r256 / r512);
        out.early_reduction = out.early_reduction.min(res(16)? / res(32)?);
    }
    Ok(out)
}

pub fn planes_suite(rng: &mut ChaCha8Rng, sizes: &Sizes) -> Result<SuiteReport> {
    let mut worst: f64 = 0.0;
    for _ in 0..sizes.plane_ops {
        let (n, d) = (rng.random_range(2..=3), rng.random_range(1..=3));
        let t = random_operator(rng, n, d);
        let planes = [ImagUnit::basis(n, 1), ImagUnit::basis(n, 2), random_plane(rng, n)];
        for f in [SliceSeriesFunction::exp(n), SliceSeriesFunction::monomial(3, Multivector::one(n))] {
            for p in &planes[1..] {
                worst = worst.max(plane_independence_gap(&f, &t, &planes[0], p, 512)?);
            }
        }
    }
    Ok(SuiteReport::new("planes", vec![Check::at_most("plane_gap", sizes.plane_ops * 3 * 2, worst, 1e-8)]))
}

/// Random Laurent function with a pole at c and a nonzero value at infinity.
pub fn random_rational(rng: &mut ChaCha8Rng, n: usize, c: f64) -> Result<ExtendedFunction> {
    let order = rng.random_range(1..=2);
    let laurent = (0..order).map(|_| random_multivector(rng, n)).collect();
    let f = SliceSeriesFunction::new(c, vec![random_multivector(rng, n)], laurent, f64::INFINITY, 0.0)?;
    ExtendedFunction::rational(f, None)
}

pub fn unbounded_suite(rng: &mut ChaCha8Rng, sizes: &Sizes) -> Result<SuiteReport> {
    let mut transform: f64 = 0.0;
    let mut corr: f64 = 0.0;
    for _ in 0..sizes.transform_triples {
        let (s, t, k) = loop {
            let (s, t) = admissible_pair(rng)?;
            let k = rng.random_range(-4.0..4.0);
            let spec = s_spectrum_exact(&t)?;
            if spectrum_distance(&spec, &Paravector::real(s.n(), k)) >= SAMPLE_GAP
                && s.sub(&Paravector::real(s.n(), k)).norm() >= SAMPLE_GAP
            {
                break (s, t, k);
            }
        };
        transform = transform.max(transform_residual(&s, &t, k)?);
        corr = corr.max(spectrum_correspondence_check(&t, k)?);
    }
    let mut route: f64 = 0.0;
    let mut kind: f64 = 0.0;
    for _ in 0..sizes.route_ops {
        let (n, d) = dims(rng);
        let t = random_operator(rng, n, d);
        let rho = t.as_clifford().rep_norm();
        let ef = random_rational(rng, n, rho + 1.0)?;
        let plane = random_plane(rng, n);
        let k1 = -(rho + 1.0);
        let k2 = rho + 2.5;
        let chart = f_of_t_via_chart(&ef, &t, k1, None, &plane, 512)?;
        let chart2 = f_of_t_via_chart(&ef, &t, k2, None, &ImagUnit::basis(n, 1), 512)?;
        let direct = f_of_t_direct(&ef, &t, None, &plane, 512)?;
        let scale = 1.0 + chart.rep_norm();
        route = route.max((&chart - &direct).rep_norm() / scale);
        kind = kind.max((&chart - &chart2).rep_norm() / scale);
    }
    Ok(SuiteReport::new(
        "unbounded",
        vec![
            Check::at_most("transform_identity", sizes.transform_triples, transform, 1e-9),
            Check::at_most("spectrum_correspondence", sizes.transform_triples, corr, 1e-9),
            Check::at_most("chart_vs_direct", sizes.route_ops, route, 1e-8),
            Check::at_most("k_independence", sizes.route_ops, kind, 1e-8),
        ],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Sizes {
        Sizes {
            kernel_pairs: 20,
            resolvent_samples: 20,
            triple_samples: 5,
            containment_ops: 10,
            scan_ops: 0,
            moment_ops: 3,
            max_moment: 4,
            moment_nodes: 512,
            doubling_ops: 2,
            plane_ops: 2,
            transform_triples: 10,
            route_ops: 2,
        }
    }

    #[test]
    fn suites_pass_and_repeat() {
        let a = run("all", 3, &small()).unwrap();
        for s in &a.suites {
            for c in &s.checks {
                assert!(c.pass, "{}/{}: {} {} {}", s.name, c.name, c.value, c.comparison, c.threshold);
            }
        }
        let b = run("all", 3, &small()).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let kernel_only = run("kernel", 3, &small()).unwrap();
        assert_eq!(kernel_only.suites[0], a.suites[0]);
        assert!(run("nope", 3, &small()).is_err());
    }

    #[test]
    fn sample_generators() {
        let mut rng = suite_rng(1, "x");
        for _ in 0..20 {
            let (s, t) = triple_sample(&mut rng);
            assert!(s_resolvent_series(&s, &t, 1).unwrap().ratio < 0.8);
            assert!(left_expansion_admissibility(&s, &t).unwrap() < 0.8);
        }
        let (s, t) = admissible_pair(&mut rng).unwrap();
        assert!(spectrum_distance(&s_spectrum_exact(&t).unwrap(), &s) >= SAMPLE_GAP);
        assert_ne!(suite_rng(1, "kernel").random::<u64>(), suite_rng(1, "planes").random::<u64>());
    }
}
