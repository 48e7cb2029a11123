//! File formats: operator JSON, function specs, plane specs and result JSON.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::calculus::CalculusResult;
use crate::clifford::{check_dim, BladeIndex, ImagUnit, Multivector, MAX_DIM};
use crate::error::{Error, Result};
use crate::operator::{CliffordMatrix, ParavectorOperator};
use crate::slice::{Intrinsic, SliceSeriesFunction};
use crate::spectral::{clean_zero, SpectrumReport};

/// Operator as read from a file: paravector-shaped when only grade 0 and
/// grade 1 keys are present.
#[derive(Clone, Debug, PartialEq)]
pub enum OperatorFile {
    Paravector(ParavectorOperator),
    General(CliffordMatrix),
}

impl OperatorFile {
    pub fn as_clifford(&self) -> &CliffordMatrix {
        match self {
            OperatorFile::Paravector(p) => p.as_clifford(),
            OperatorFile::General(m) => m,
        }
    }

    pub fn n(&self) -> usize {
        self.as_clifford().n()
    }

    pub fn d(&self) -> usize {
        self.as_clifford().d()
    }
}

impl AsRef<CliffordMatrix> for OperatorFile {
    fn as_ref(&self) -> &CliffordMatrix {
        self.as_clifford()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOperator {
    n: usize,
    d: usize,
    #[serde(default)]
    components: BTreeMap<String, Vec<Vec<f64>>>,
}

#[derive(Serialize)]
struct RawOperatorOut {
    n: usize,
    d: usize,
    components: BTreeMap<String, Vec<Vec<f64>>>,
}

fn blade_key(key: &str, n: usize) -> Result<BladeIndex> {
    if key.is_empty() {
        return Ok(BladeIndex::SCALAR);
    }
    BladeIndex::from_digits(key, n).map_err(|e| Error::Parse(format!("components.{key:?}: {e}")))
}

/// Parses operator JSON, capping the algebra dimension at `max_n`.
/// Missing component keys default to zero matrices.
pub fn parse_operator(text: &str, max_n: usize) -> Result<OperatorFile> {
    let raw: RawOperator = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("line {} column {}: {e}", e.line(), e.column())))?;
    let (n, d) = (raw.n, raw.d);
    if n == 0 || n > max_n.min(MAX_DIM) {
        return Err(Error::Parse(format!("field n: {n} is outside 1..={}", max_n.min(MAX_DIM))));
    }
    check_dim(n)?;
    if d == 0 {
        return Err(Error::Parse("field d: module dimension must be positive".into()));
    }
    let mut blades = vec![DMatrix::zeros(d, d); 1 << n];
    let mut seen = vec![false; 1 << n];
    let mut general = false;
    for (key, rows) in &raw.components {
        let blade = blade_key(key, n)?;
        if seen[blade.mask()] {
            return Err(Error::Parse(format!("components.{key:?}: duplicate blade")));
        }
        seen[blade.mask()] = true;
        general |= blade.grade() > 1;
        if rows.len() != d {
            return Err(Error::Parse(format!("components.{key:?}: {} rows, expected {d}", rows.len())));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Parse(format!(
                    "components.{key:?} row {i}: {} entries, expected {d}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                blades[blade.mask()][(i, j)] = v;
            }
        }
    }
    let m = CliffordMatrix::from_blades(n, d, blades)?;
    if general {
        Ok(OperatorFile::General(m))
    } else {
        Ok(OperatorFile::Paravector(ParavectorOperator::from_clifford(&m, 0.0)?))
    }
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| clean_zero(m[(i, j)])).collect()).collect()
}

/// Paravector-shaped operators use keys "0".."n" (all present); others use
/// blade strings ("" for the scalar blade) and list only nonzero blades.
pub fn operator_to_value(m: &CliffordMatrix) -> Value {
    let mut components = BTreeMap::new();
    if m.is_paravector(0.0) {
        components.insert("0".to_string(), rows_of(m.blade(BladeIndex::SCALAR)));
        for j in 1..=m.n() {
            components.insert(j.to_string(), rows_of(m.blade(BladeIndex::vector(j))));
        }
    } else {
        for (mask, b) in m.blades().iter().enumerate() {
            if mask == 0 || b.iter().any(|&x| x != 0.0) {
                components.insert(BladeIndex(mask as u16).digits(), rows_of(b));
            }
        }
    }
    serde_json::to_value(RawOperatorOut { n: m.n(), d: m.d(), components }).expect("plain data serializes")
}

pub fn operator_to_json(m: &CliffordMatrix) -> String {
    serde_json::to_string_pretty(&operator_to_value(m)).expect("plain data serializes")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LiteralSeries {
    #[serde(default)]
    center: f64,
    #[serde(default)]
    coeffs: Vec<String>,
    #[serde(default)]
    laurent: Vec<String>,
    outer_radius: Option<f64>,
    inner_radius: Option<f64>,
}

fn key_values(body: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, got {part:?}")))?;
        if out.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(Error::Parse(format!("duplicate key {k:?}")));
        }
    }
    Ok(out)
}

fn take_num<T: std::str::FromStr>(kv: &mut BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    kv.remove(key)
        .map(|v| v.parse::<T>().map_err(|_| Error::Parse(format!("bad value {v:?} for {key}"))))
        .transpose()
}

fn no_leftovers(kv: &BTreeMap<String, String>) -> Result<()> {
    match kv.keys().next() {
        Some(k) => Err(Error::Parse(format!("unknown key {k:?}"))),
        None => Ok(()),
    }
}

/// Function specs: `exp`, `sin`, `cos`, `geom`, `one`,
/// `poly:m=<int>[,a=<multivector>]` for xᵐa,
/// `ratpole:c=<real>[,m=<int>]` for (x − c)⁻ᵐ, or a literal JSON series
/// `{"center": c, "coeffs": [...], "laurent": [...]}` with multivectors in
/// text form.
pub fn parse_function(spec: &str, n: usize) -> Result<SliceSeriesFunction> {
    let spec = spec.trim();
    if spec.starts_with('{') {
        let lit: LiteralSeries = serde_json::from_str(spec).map_err(|e| Error::Parse(format!("function literal: {e}")))?;
        let parse_all = |v: &[String]| v.iter().map(|s| Multivector::parse(s, n)).collect::<Result<Vec<_>>>();
        let coeffs = parse_all(&lit.coeffs)?;
        let laurent = parse_all(&lit.laurent)?;
        if coeffs.is_empty() && laurent.is_empty() {
            return Err(Error::Parse("function literal has no coefficients".into()));
        }
        let coeffs = if coeffs.is_empty() { vec![Multivector::zero(n)] } else { coeffs };
        return SliceSeriesFunction::new(
            lit.center,
            coeffs,
            laurent,
            lit.outer_radius.unwrap_or(f64::INFINITY),
            lit.inner_radius.unwrap_or(0.0),
        );
    }
    let (head, body) = spec.split_once(':').unwrap_or((spec, ""));
    let mut kv = key_values(body)?;
    let f = match head {
        "exp" => SliceSeriesFunction::exp(n),
        "sin" => SliceSeriesFunction::sin(n),
        "cos" => SliceSeriesFunction::cos(n),
        "geom" => SliceSeriesFunction::intrinsic(n, Intrinsic::Geom { deriv: 0 }),
        "one" => SliceSeriesFunction::one(n),
        "poly" => {
            let m: usize = take_num(&mut kv, "m")?.ok_or_else(|| Error::Parse("poly needs m=<int>".into()))?;
            let a = match kv.remove("a") {
                Some(text) => Multivector::parse(&text, n)?,
                None => Multivector::one(n),
            };
            SliceSeriesFunction::monomial(m, a)
        }
        "ratpole" => {
            let c: f64 = take_num(&mut kv, "c")?.ok_or_else(|| Error::Parse("ratpole needs c=<real>".into()))?;
            let m: usize = take_num(&mut kv, "m")?.unwrap_or(1);
            SliceSeriesFunction::pole(c, m, Multivector::one(n)).map_err(|e| Error::Parse(e.to_string()))?
        }
        other => return Err(Error::Parse(format!("unknown function {other:?}"))),
    };
    no_leftovers(&kv)?;
    Ok(f)
}

/// `e<j>` or a comma-separated direction, padded with zeros to n entries.
pub fn parse_plane(spec: &str, n: usize) -> Result<ImagUnit> {
    let spec = spec.trim();
    if let Some(j) = spec.strip_prefix('e') {
        let j: usize = j.parse().map_err(|_| Error::Parse(format!("bad plane {spec:?}")))?;
        if j == 0 || j > n {
            return Err(Error::Parse(format!("plane {spec:?} needs 1 <= j <= {n}")));
        }
        return Ok(ImagUnit::basis(n, j));
    }
    let mut dirs = spec
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad plane component {v:?}"))))
        .collect::<Result<Vec<f64>>>()?;
    if dirs.len() > n {
        return Err(Error::Parse(format!("plane has {} components, algebra has n = {n}", dirs.len())));
    }
    dirs.resize(n, 0.0);
    ImagUnit::new(dirs).map_err(|e| Error::Parse(e.to_string()))
}

/// `{"value": <operator>, "clearance": .., "nodes": .., "plane": [..]}`.
pub fn calculus_result_json(r: &CalculusResult) -> String {
    let v = serde_json::json!({
        "value": operator_to_value(&r.value),
        "clearance": r.clearance,
        "nodes": r.nodes,
        "plane": r.plane.dirs(),
    });
    serde_json::to_string_pretty(&v).expect("plain data serializes")
}

/// Plane points (u, ±r) of every component, header `u,v`.
pub fn plot_csv(report: &SpectrumReport) -> String {
    let mut out = String::from("u,v\n");
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for c in &report.components {
        pts.push((c.u, c.r));
        if c.r != 0.0 {
            pts.push((c.u, -c.r));
        }
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    for (u, v) in pts {
        out.push_str(&format!("{:?},{:?}\n", clean_zero(u), clean_zero(v)));
    }
    out
}
