//! S-spectrum, S-resolvent and related checks.
//!
//! The pencil Q(u, r) = T² − 2uT + (u² + r²)I depends on s only through
//! u = Re[s] and r = |s_vec|, so spectral data are pairs (u, r): a real
//! point when r = 0, a whole (n−1)-sphere otherwise.
//!
//! Since rep(Q) = q(rep T) with q(x) = x² − 2ux + u² + r², the pencil is
//! singular exactly when u ± ir is an eigenvalue of rep(T). The exact
//! method uses this; the grid scan is an independent cross-check.

use nalgebra::{DMatrix, Schur};
use serde::Serialize;

use crate::clifford::Paravector;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::operator::{spectral_norm, CliffordMatrix, ModuleVector, SINGULAR_TOL};

/// Eigenvalues closer than this are merged into one component.
pub const CLUSTER_TOL: f64 = 1e-8;
/// Default relative smallest-singular-value threshold of the scan.
pub const SCAN_TOL: f64 = 1e-8;

pub fn pencil<M: AsRef<CliffordMatrix> + ?Sized>(t: &M, u: f64, r: f64) -> Result<CliffordMatrix> {
    if !(r >= 0.0) {
        return Err(Error::Invalid(format!("pencil radius must be nonnegative, got {r}")));
    }
    let t = t.as_ref();
    let id = CliffordMatrix::identity(t.n(), t.d());
    let t2 = t.compose(t)?;
    Ok(&(&t2 - &t.scale(2.0 * u)) + &id.scale(u * u + r * r))
}

/// Precomputed rep(T) and rep(T²) for repeated pencil evaluations.
#[derive(Clone, Debug)]
pub struct PencilCache {
    n: usize,
    d: usize,
    rep_t: DMatrix<f64>,
    rep_t2: DMatrix<f64>,
}

impl PencilCache {
    pub fn new<M: AsRef<CliffordMatrix> + ?Sized>(t: &M) -> Self {
        let t = t.as_ref();
        let rep_t = t.rep().matrix;
        let rep_t2 = &rep_t * &rep_t;
        PencilCache { n: t.n(), d: t.d(), rep_t, rep_t2 }
    }

    pub fn rep_t(&self) -> &DMatrix<f64> {
        &self.rep_t
    }

    pub fn size(&self) -> usize {
        self.rep_t.nrows()
    }

    pub fn pencil_rep(&self, u: f64, r: f64) -> DMatrix<f64> {
        let mut q = &self.rep_t2 - &self.rep_t * (2.0 * u);
        for i in 0..q.nrows() {
            q[(i, i)] += u * u + r * r;
        }
        q
    }

    /// rep(T − s̄I).
    fn shifted_rep(&self, s: &Paravector) -> DMatrix<f64> {
        let sbar = CliffordMatrix::scalar_identity(&s.conj().to_multivector(), self.d);
        &self.rep_t - sbar.rep().matrix
    }

    /// rep of the S-resolvent −Q⁻¹(T − s̄I), by LU solve. The singularity
    /// test is a cheap LU pivot check; callers that need the strict
    /// singular-value test use [`s_resolvent`].
    pub fn resolvent_rep(&self, s: &Paravector) -> Result<DMatrix<f64>> {
        if s.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: s.n() });
        }
        let (u, r) = (s.re(), s.vec_norm());
        let q = self.pencil_rep(u, r);
        let scale = q.amax();
        let lu = q.lu();
        let min_pivot = lu.u().diagonal().iter().fold(f64::INFINITY, |m, p| m.min(p.abs()));
        if !(scale > 0.0) || min_pivot <= SINGULAR_TOL * scale {
            return Err(Error::InSpectrum { u, r });
        }
        let x = lu.solve(&self.shifted_rep(s)).ok_or(Error::InSpectrum { u, r })?;
        Ok(-x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectrumComponent {
    pub u: f64,
    pub r: f64,
    pub multiplicity: usize,
}

impl SpectrumComponent {
    pub fn modulus(&self) -> f64 {
        self.u.hypot(self.r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumMethod {
    Exact,
    Scan,
    /// Image of another report under a point map.
    Mapped,
}

impl SpectrumMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SpectrumMethod::Exact => "exact",
            SpectrumMethod::Scan => "scan",
            SpectrumMethod::Mapped => "mapped",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub components: Vec<SpectrumComponent>,
    pub method: SpectrumMethod,
    pub cluster_tol: f64,
    pub scan_step: Option<f64>,
    pub scan_tol: Option<f64>,
    pub rep_norm: f64,
    pub paper_norm: f64,
}

impl SpectrumReport {
    pub fn max_modulus(&self) -> f64 {
        self.components.iter().map(SpectrumComponent::modulus).fold(0.0, f64::max)
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        self.components.iter().map(|c| (c.u, c.r)).collect()
    }

    /// `u,r,multiplicity,method` rows in ascending (u, r) order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("u,r,multiplicity,method\n");
        let mut rows = self.components.clone();
        sort_components(&mut rows);
        for c in rows {
            out.push_str(&format!(
                "{:?},{:?},{},{}\n",
                clean_zero(c.u),
                clean_zero(c.r),
                c.multiplicity,
                self.method.as_str()
            ));
        }
        out
    }
}

pub(crate) fn clean_zero(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

fn sort_components(c: &mut [SpectrumComponent]) {
    c.sort_by(|a, b| a.u.total_cmp(&b.u).then(a.r.total_cmp(&b.r)));
}

/// Groups points within `tol` of each other (single linkage) and returns
/// one representative per group with its size.
fn cluster_points(points: &[(f64, f64)], tol: f64) -> Vec<(Vec<usize>, usize)> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let hits: Vec<usize> = groups
            .iter()
            .enumerate()
            .filter(|(_, g)| g.iter().any(|&j| (points[j].0 - p.0).hypot(points[j].1 - p.1) <= tol))
            .map(|(k, _)| k)
            .collect();
        match hits.split_first() {
            None => groups.push(vec![i]),
            Some((&first, rest)) => {
                for &k in rest.iter().rev() {
                    let moved = groups.remove(k);
                    groups[first].extend(moved);
                }
                groups[first].push(i);
            }
        }
    }
    groups.into_iter().map(|g| (g.clone(), g.len())).collect()
}

pub fn rep_eigenvalues(rep: &DMatrix<f64>) -> Result<Vec<(f64, f64)>> {
    if rep.is_empty() {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(rep.clone(), f64::EPSILON, 100_000).ok_or(Error::EigenFailure)?;
    let ev = schur.complex_eigenvalues();
    if ev.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::EigenFailure);
    }
    Ok(ev.iter().map(|z| (z.re, z.im)).collect())
}

/// Spectrum from the complex eigenvalues λ of rep(T), mapped to
/// (Re λ, |Im λ|) and clustered at [`CLUSTER_TOL`]. Accepts any Clifford
/// matrix, not only paravector operators.
pub fn s_spectrum_exact<M: AsRef<CliffordMatrix> + ?Sized>(t: &M) -> Result<SpectrumReport> {
    let t = t.as_ref();
    let rep = t.rep().matrix;
    let points: Vec<(f64, f64)> = rep_eigenvalues(&rep)?.into_iter().map(|(re, im)| (re, im.abs())).collect();
    let mut components: Vec<SpectrumComponent> = cluster_points(&points, CLUSTER_TOL)
        .into_iter()
        .map(|(idx, mult)| {
            let k = idx.len() as f64;
            let u = idx.iter().map(|&i| points[i].0).sum::<f64>() / k;
            let r = idx.iter().map(|&i| points[i].1).sum::<f64>() / k;
            SpectrumComponent { u, r: if r < CLUSTER_TOL { 0.0 } else { r }, multiplicity: mult }
        })
        .collect();
    if components.is_empty() {
        return Err(Error::EigenFailure);
    }
    sort_components(&mut components);
    Ok(SpectrumReport {
        components,
        method: SpectrumMethod::Exact,
        cluster_tol: CLUSTER_TOL,
        scan_step: None,
        scan_tol: None,
        rep_norm: spectral_norm(&rep),
        paper_norm: t.paper_norm(),
    })
}

#[derive(Clone, Debug)]
pub struct ScanOptions {
    /// Defaults to [−ρ − step, ρ + step] with ρ = rep_norm.
    pub u_range: Option<(f64, f64)>,
    /// Defaults to [0, ρ + step].
    pub r_range: Option<(f64, f64)>,
    /// Defaults to rep_norm / 100 (0.01 for the zero operator).
    pub step: Option<f64>,
    pub tol: f64,
    pub exec: Exec,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { u_range: None, r_range: None, step: None, tol: SCAN_TOL, exec: Exec::default() }
    }
}

/// σ_min / (σ_max + h²): the relative smallest singular value, regularized
/// by a fixed scale h so that it stays continuous where the pencil vanishes.
fn relative_sigma_min(m: &DMatrix<f64>, h2: f64) -> f64 {
    let sv = m.singular_values();
    let denom = sv.max() + h2;
    if denom > 0.0 {
        sv.min() / denom
    } else {
        0.0
    }
}

/// Compass search with step halving.
fn pattern_search<F: Fn(&[f64]) -> f64>(g: F, start: &[f64], h0: f64) -> (Vec<f64>, f64) {
    let mut x = start.to_vec();
    let mut gx = g(&x);
    let mut h = h0;
    let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut evals = 0;
    while h > 1e-15 * scale && gx > 0.0 && evals < 4000 {
        let mut moved = false;
        'dirs: for j in 0..x.len() {
            for sgn in [1.0, -1.0] {
                let mut y = x.clone();
                y[j] += sgn * h;
                let gy = g(&y);
                evals += 1;
                if gy < gx {
                    x = y;
                    gx = gy;
                    moved = true;
                    break 'dirs;
                }
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    (x, gx)
}

/// Indices of grid points not larger than any neighbour and strictly
/// smaller than at least one. `value(idx)` returns the grid value at a
/// possibly out-of-range multi-index, or None outside the grid.
fn local_minima<F: Fn(&[isize]) -> Option<f64>>(dims: &[usize], value: F) -> Vec<Vec<usize>> {
    let total: usize = dims.iter().product();
    let k = dims.len();
    let offsets: Vec<Vec<isize>> = (0..3usize.pow(k as u32))
        .map(|mut c| {
            (0..k)
                .map(|_| {
                    let o = (c % 3) as isize - 1;
                    c /= 3;
                    o
                })
                .collect()
        })
        .filter(|o: &Vec<isize>| o.iter().any(|&v| v != 0))
        .collect();
    let mut out = Vec::new();
    for flat in 0..total {
        let mut idx = Vec::with_capacity(k);
        let mut rem = flat;
        for &d in dims {
            idx.push((rem % d) as isize);
            rem /= d;
        }
        let g0 = value(&idx).expect("in range");
        let mut strictly_lower = false;
        let mut is_min = true;
        for o in &offsets {
            let nb: Vec<isize> = idx.iter().zip(o).map(|(a, b)| a + b).collect();
            if let Some(gn) = value(&nb) {
                if gn < g0 {
                    is_min = false;
                    break;
                }
                if gn > g0 {
                    strictly_lower = true;
                }
            }
        }
        if is_min && (strictly_lower || total == 1) {
            out.push(idx.iter().map(|&v| v as usize).collect());
        }
    }
    out
}

/// Grid scan of the relative smallest singular value of rep(pencil).
/// Local minima are refined by compass search and kept when the refined
/// value is at most `tol`; survivors within one step are merged.
pub fn s_spectrum_scan<M: AsRef<CliffordMatrix> + ?Sized>(t: &M, opts: &ScanOptions) -> Result<SpectrumReport> {
    let t = t.as_ref();
    let cache = PencilCache::new(t);
    let rho = spectral_norm(cache.rep_t());
    let step = opts.step.unwrap_or(if rho > 0.0 { rho / 100.0 } else { 0.01 });
    if !(step > 0.0) || !(opts.tol > 0.0) {
        return Err(Error::Invalid("scan step and tolerance must be positive".into()));
    }
    let (u0, u1) = opts.u_range.unwrap_or((-rho - step, rho + step));
    let (r0, r1) = opts.r_range.unwrap_or((0.0, rho + step));
    if !(u1 >= u0) || !(r1 >= r0) || r0 < 0.0 {
        return Err(Error::Invalid("invalid scan ranges".into()));
    }
    let nu = ((u1 - u0) / step).round() as usize + 1;
    let nr = ((r1 - r0) / step).round() as usize + 1;
    if nu.saturating_mul(nr) > 4_000_000 {
        return Err(Error::Invalid("scan grid too large; increase the step".into()));
    }
    let h2 = rho.max(step).powi(2);
    let g = |u: f64, r: f64| relative_sigma_min(&cache.pencil_rep(u, r.abs()), h2);
    let grid = opts.exec.map(nu * nr, |k| g(u0 + (k % nu) as f64 * step, r0 + (k / nu) as f64 * step));

    let at = |idx: &[isize]| -> Option<f64> {
        let i = idx[0];
        let mut j = idx[1];
        // the pencil depends on r², so r = 0 is a mirror line
        if j < 0 && r0 == 0.0 {
            j = -j;
        }
        if i < 0 || j < 0 || i >= nu as isize || j >= nr as isize {
            return None;
        }
        Some(grid[j as usize * nu + i as usize])
    };
    let candidates = local_minima(&[nu, nr], at);
    let refined = opts.exec.map(candidates.len(), |k| {
        let c = &candidates[k];
        let start = [u0 + c[0] as f64 * step, r0 + c[1] as f64 * step];
        let clamp = |p: &[f64]| (p[0].clamp(u0, u1), p[1].abs().clamp(r0, r1));
        let (x, gx) = pattern_search(
            |p| {
                let (u, r) = clamp(p);
                g(u, r)
            },
            &start,
            step / 2.0,
        );
        let (u, r) = clamp(&x);
        (u, r, gx)
    });
    let hits: Vec<(f64, f64, f64)> = refined.into_iter().filter(|h| h.2 <= opts.tol).collect();
    if hits.is_empty() {
        return Err(Error::EmptyScan);
    }
    let pts: Vec<(f64, f64)> = hits.iter().map(|h| (h.0, h.1)).collect();
    let mult_tol = opts.tol.sqrt();
    let mut components: Vec<SpectrumComponent> = cluster_points(&pts, step)
        .into_iter()
        .map(|(idx, _)| {
            let best = *idx.iter().min_by(|&&a, &&b| hits[a].2.total_cmp(&hits[b].2)).expect("nonempty");
            let (u, r, _) = hits[best];
            let sv = cache.pencil_rep(u, r).singular_values();
            let smax = sv.max();
            let multiplicity = sv.iter().filter(|&&s| s <= mult_tol * smax).count().max(1);
            SpectrumComponent { u, r, multiplicity }
        })
        .collect();
    sort_components(&mut components);
    Ok(SpectrumReport {
        components,
        method: SpectrumMethod::Scan,
        cluster_tol: step,
        scan_step: Some(step),
        scan_tol: Some(opts.tol),
        rep_norm: rho,
        paper_norm: t.paper_norm(),
    })
}

/// Hausdorff distance between two finite sets of (u, r) points.
pub fn hausdorff(a: &[SpectrumComponent], b: &[SpectrumComponent]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let dir = |x: &[SpectrumComponent], y: &[SpectrumComponent]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p.u - q.u).hypot(p.r - q.r)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    dir(a, b).max(dir(b, a))
}

/// Null vectors of rep(pencil) at (u, r): right singular vectors whose
/// singular value is at most `tol · σ_max`. Not normalized beyond unit
/// Euclidean length.
pub fn pencil_null_vectors<M: AsRef<CliffordMatrix> + ?Sized>(
    t: &M,
    u: f64,
    r: f64,
    tol: f64,
) -> Result<Vec<ModuleVector>> {
    let t = t.as_ref();
    let q = PencilCache::new(t).pencil_rep(u, r);
    let svd = q.svd(false, true);
    let vt = svd.v_t.as_ref().ok_or(Error::EigenFailure)?;
    let smax = svd.singular_values.max();
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tol * smax)
        .map(|(i, _)| ModuleVector::from_coords(t.n(), t.d(), &vt.row(i).transpose()))
        .collect()
}

/// −Q(s)⁻¹(T − s̄I).
pub fn s_resolvent<M: AsRef<CliffordMatrix> + ?Sized>(s: &Paravector, t: &M) -> Result<CliffordMatrix> {
    let t = t.as_ref();
    if s.n() != t.n() {
        return Err(Error::DimensionMismatch { expected: t.n(), found: s.n() });
    }
    let (u, r) = (s.re(), s.vec_norm());
    let qinv = pencil(t, u, r)?.invert().map_err(|e| match e {
        Error::SingularOperator { .. } => Error::InSpectrum { u, r },
        other => other,
    })?;
    let shifted = t - &CliffordMatrix::scalar_identity(&s.conj().to_multivector(), t.d());
    Ok(-&qinv.compose(&shifted)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Convergence {
    /// rep_norm(T) < |s|.
    Guaranteed,
    /// Only paper_norm(T) < |s|.
    Unverified,
    /// Neither norm is below |s|.
    Divergent,
}

#[derive(Clone, Debug)]
pub struct SeriesResolvent {
    pub value: CliffordMatrix,
    pub status: Convergence,
    /// ‖T‖_rep / |s|.
    pub ratio: f64,
}

/// Partial sum Σ_{m≤N} Tᵐ s⁻¹⁻ᵐ. The status reports whether convergence
/// is guaranteed by the rep norm.
pub fn s_resolvent_series<M: AsRef<CliffordMatrix> + ?Sized>(
    s: &Paravector,
    t: &M,
    terms: usize,
) -> Result<SeriesResolvent> {
    let t = t.as_ref();
    if s.n() != t.n() {
        return Err(Error::DimensionMismatch { expected: t.n(), found: s.n() });
    }
    let sinv = s.inv()?.to_multivector();
    let (n, d) = (t.n(), t.d());
    let mut power = CliffordMatrix::identity(n, d);
    let mut w = sinv.clone();
    let mut acc = CliffordMatrix::zeros(n, d);
    for m in 0..=terms {
        acc = &acc + &power.mul_right(&w)?;
        if m < terms {
            power = power.compose(t)?;
            w = &w * &sinv;
        }
    }
    let (pn, rn) = (t.paper_norm(), t.rep_norm());
    let sn = s.norm();
    let status = if rn < sn {
        Convergence::Guaranteed
    } else if pn < sn {
        Convergence::Unverified
    } else {
        Convergence::Divergent
    };
    Ok(SeriesResolvent { value: acc, status, ratio: rn / sn })
}

/// ‖S⁻¹(s,T)·s − T·S⁻¹(s,T) − I‖ in the rep norm.
pub fn resolvent_equation_residual<M: AsRef<CliffordMatrix> + ?Sized>(s: &Paravector, t: &M) -> Result<f64> {
    let t = t.as_ref();
    let res = s_resolvent(s, t)?;
    let lhs = &res.mul_right(&s.to_multivector())? - &t.compose(&res)?;
    Ok((&lhs - &CliffordMatrix::identity(t.n(), t.d())).rep_norm())
}

/// |s_vec| · ‖(Re[s]I − T)⁻¹‖_rep; the left expansion converges when < 1.
pub fn left_expansion_admissibility<M: AsRef<CliffordMatrix> + ?Sized>(s: &Paravector, t: &M) -> Result<f64> {
    Ok(s.vec_norm() * real_shift_inverse(s.re(), t.as_ref())?.rep_norm())
}

fn real_shift_inverse(u: f64, t: &CliffordMatrix) -> Result<CliffordMatrix> {
    (&CliffordMatrix::identity(t.n(), t.d()).scale(u) - t).invert()
}

/// Σ_{m≤N} (Re[s]I − T)⁻ᵐ⁻¹ (Re[s] − s)ᵐ.
pub fn left_resolvent_expansion<M: AsRef<CliffordMatrix> + ?Sized>(
    s: &Paravector,
    t: &M,
    terms: usize,
) -> Result<CliffordMatrix> {
    let t = t.as_ref();
    if s.n() != t.n() {
        return Err(Error::DimensionMismatch { expected: t.n(), found: s.n() });
    }
    let b = real_shift_inverse(s.re(), t)?;
    let q = s.vec_norm() * b.rep_norm();
    if !(q < 1.0) {
        return Err(Error::ConditionViolated(q));
    }
    let w = Paravector::new(0.0, s.vec.clone()).to_multivector().scale(-1.0);
    let mut term = b.clone();
    let mut acc = b.clone();
    for _ in 0..terms {
        term = b.compose(&term)?.mul_right(&w)?;
        acc = &acc + &term;
    }
    Ok(acc)
}

/// Options for [`commuting_gamma_spectrum`]. Ranges default to
/// [−‖T_j‖ − step, ‖T_j‖ + step] per axis.
#[derive(Clone, Debug)]
pub struct GammaGrid {
    pub ranges: Option<Vec<(f64, f64)>>,
    pub step: Option<f64>,
    pub tol: f64,
    pub exec: Exec,
}

impl Default for GammaGrid {
    fn default() -> Self {
        GammaGrid { ranges: None, step: None, tol: SCAN_TOL, exec: Exec::default() }
    }
}

/// Commutation tolerance, relative to 1 + ‖T_i‖‖T_j‖.
pub const COMMUTE_TOL: f64 = 1e-12;

/// Points λ ∈ ℝⁿ where Σ (λ_j I − T_j)² is singular, for pairwise
/// commuting real matrices with real spectra.
pub fn commuting_gamma_spectrum(mats: &[DMatrix<f64>], grid: &GammaGrid) -> Result<Vec<Vec<f64>>> {
    let k = mats.len();
    if k == 0 {
        return Err(Error::Invalid("need at least one matrix".into()));
    }
    let d = mats[0].nrows();
    if mats.iter().any(|m| m.nrows() != d || m.ncols() != d) || d == 0 {
        return Err(Error::Invalid("matrices must be square of equal size".into()));
    }
    let norms: Vec<f64> = mats.iter().map(spectral_norm).collect();
    for i in 0..k {
        for j in i + 1..k {
            let c = (&mats[i] * &mats[j] - &mats[j] * &mats[i]).amax();
            if c > COMMUTE_TOL * (1.0 + norms[i] * norms[j]) {
                return Err(Error::NonCommuting(c));
            }
        }
    }
    for (m, &nm) in mats.iter().zip(&norms) {
        let im = rep_eigenvalues(m)?.iter().fold(0.0f64, |a, z| a.max(z.1.abs()));
        if im > CLUSTER_TOL * (1.0 + nm) {
            return Err(Error::ComplexEigenvalues(im));
        }
    }
    let rho = norms.iter().cloned().fold(0.0, f64::max);
    let step = grid.step.unwrap_or(if rho > 0.0 { rho / 20.0 } else { 0.05 });
    if !(step > 0.0) {
        return Err(Error::Invalid("grid step must be positive".into()));
    }
    let ranges: Vec<(f64, f64)> = match &grid.ranges {
        Some(r) if r.len() == k => r.clone(),
        Some(_) => return Err(Error::DimensionMismatch { expected: k, found: grid.ranges.as_ref().map_or(0, Vec::len) }),
        None => norms.iter().map(|&nm| (-nm - step, nm + step)).collect(),
    };
    let dims: Vec<usize> = ranges.iter().map(|&(a, b)| ((b - a) / step).round().max(0.0) as usize + 1).collect();
    let total = dims.iter().try_fold(1usize, |acc, &x| acc.checked_mul(x)).unwrap_or(usize::MAX);
    if total > 2_000_000 {
        return Err(Error::Invalid("gamma grid too large; increase the step".into()));
    }
    let h2 = rho.max(step).powi(2);
    let g = |lam: &[f64]| {
        let mut sum = DMatrix::zeros(d, d);
        for (m, &l) in mats.iter().zip(lam) {
            let mut shifted = -m;
            for i in 0..d {
                shifted[(i, i)] += l;
            }
            sum += &shifted * &shifted;
        }
        relative_sigma_min(&sum, h2)
    };
    let point = |idx: &[usize]| -> Vec<f64> { idx.iter().zip(&ranges).map(|(&i, r)| r.0 + i as f64 * step).collect() };
    let unflatten = |mut flat: usize| -> Vec<usize> {
        dims.iter()
            .map(|&dd| {
                let v = flat % dd;
                flat /= dd;
                v
            })
            .collect()
    };
    let values = grid.exec.map(total, |f| g(&point(&unflatten(f))));
    let at = |idx: &[isize]| -> Option<f64> {
        let mut flat = 0usize;
        let mut mul = 1usize;
        for (&i, &dd) in idx.iter().zip(&dims) {
            if i < 0 || i >= dd as isize {
                return None;
            }
            flat += i as usize * mul;
            mul *= dd;
        }
        Some(values[flat])
    };
    let candidates = local_minima(&dims, at);
    let refined = grid.exec.map(candidates.len(), |c| pattern_search(g, &point(&candidates[c]), step / 2.0));
    let mut hits: Vec<(Vec<f64>, f64)> = refined.into_iter().filter(|h| h.1 <= grid.tol).collect();
    hits.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut out: Vec<Vec<f64>> = Vec::new();
    for (x, _) in hits {
        let close = out.iter().any(|y| y.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() <= step);
        if !close {
            out.push(x);
        }
    }
    out.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    Ok(out)
}
