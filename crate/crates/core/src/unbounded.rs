//! The chart route for functions regular at infinity, on finite-dimensional
//! surrogates: p = Φ(s) = (s − k)⁻¹, A = (T − kI)⁻¹, f(T) = φ(A) with
//! φ(p) = f(p⁻¹ + k), and the direct formula
//! f(T) = f(∞)I + (1/2π) ∫_{∂W} S⁻¹(s,T) ds_I f(s).
//!
//! W contains the spectrum and ∞, so for f = a₀ + Σ b_m (x − c)⁻ᵐ its
//! boundary is a clockwise circle around the pole c.

use num_complex::Complex64;

use crate::calculus::{build_contour, contour_sum, default_margin, Circle, Contour, CLEARANCE_FLOOR};
use crate::clifford::{ImagUnit, Multivector, Paravector};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::operator::CliffordMatrix;
use crate::slice::{PowerCoeffs, SliceSeriesFunction};
use crate::spectral::{hausdorff, s_resolvent, s_spectrum_exact, SpectrumComponent, SpectrumMethod, SpectrumReport};

/// Agreement required between a supplied f(∞) and the derived one.
pub const F_INF_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoebiusChart {
    k: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExtPoint {
    Finite(Paravector),
    Infinity,
}

impl MoebiusChart {
    pub fn new(k: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::Invalid("chart point must be finite".into()));
        }
        Ok(MoebiusChart { k })
    }

    /// Chart at k, rejected when (k, 0) lies in the spectrum of T.
    pub fn for_operator<M: AsRef<CliffordMatrix> + ?Sized>(k: f64, t: &M) -> Result<Self> {
        let chart = Self::new(k)?;
        companion_operator(t, k)?;
        Ok(chart)
    }

    pub fn k(&self) -> f64 {
        self.k
    }
}

/// p = (s − k)⁻¹.
pub fn moebius_map(chart: &MoebiusChart, s: &Paravector) -> Result<Paravector> {
    let shifted = s.sub(&Paravector::real(s.n(), chart.k));
    if shifted.norm_sq() == 0.0 {
        return Err(Error::Invalid(format!("point coincides with the chart center {}", chart.k)));
    }
    shifted.inv()
}

/// Extended map: ∞ ↦ 0 and k ↦ ∞.
pub fn moebius_map_ext(chart: &MoebiusChart, s: &ExtPoint, n: usize) -> ExtPoint {
    match s {
        ExtPoint::Infinity => ExtPoint::Finite(Paravector::real(n, 0.0)),
        ExtPoint::Finite(x) => match moebius_map(chart, x) {
            Ok(p) => ExtPoint::Finite(p),
            Err(_) => ExtPoint::Infinity,
        },
    }
}

/// Maps each component u + ir to (z − k)⁻¹ in the plane. With
/// `include_infinity` the image (0, 0) of the point at infinity is added.
/// The norm fields of the result hold the largest mapped modulus.
pub fn moebius_spectrum(chart: &MoebiusChart, spec: &SpectrumReport, include_infinity: bool) -> Result<SpectrumReport> {
    let mut components = Vec::with_capacity(spec.components.len() + 1);
    for c in &spec.components {
        let z = Complex64::new(c.u - chart.k, c.r);
        if z.norm() == 0.0 {
            return Err(Error::InSpectrum { u: c.u, r: c.r });
        }
        let w = z.inv();
        components.push(SpectrumComponent { u: w.re, r: w.im.abs(), multiplicity: c.multiplicity });
    }
    if include_infinity {
        components.push(SpectrumComponent { u: 0.0, r: 0.0, multiplicity: 1 });
    }
    components.sort_by(|a, b| a.u.total_cmp(&b.u).then(a.r.total_cmp(&b.r)));
    let bound = components.iter().map(SpectrumComponent::modulus).fold(0.0, f64::max);
    Ok(SpectrumReport {
        components,
        method: SpectrumMethod::Mapped,
        cluster_tol: spec.cluster_tol,
        scan_step: None,
        scan_tol: None,
        rep_norm: bound,
        paper_norm: bound,
    })
}

/// A = (T − kI)⁻¹.
pub fn companion_operator<M: AsRef<CliffordMatrix> + ?Sized>(t: &M, k: f64) -> Result<CliffordMatrix> {
    let t = t.as_ref();
    (t - &CliffordMatrix::identity(t.n(), t.d()).scale(k)).invert().map_err(|e| match e {
        Error::SingularOperator { .. } => Error::InSpectrum { u: k, r: 0.0 },
        other => other,
    })
}

/// f together with its value at infinity and, optionally, a supplied
/// chart function φ for one chart point.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedFunction {
    f: SliceSeriesFunction,
    f_inf: Multivector,
    phi: Option<(f64, SliceSeriesFunction)>,
}

impl ExtendedFunction {
    /// f = a₀ + Σ b_m (x − c)⁻ᵐ with f(∞) = a₀. A supplied `f_inf` must
    /// agree with a₀.
    pub fn rational(f: SliceSeriesFunction, f_inf: Option<Multivector>) -> Result<Self> {
        let a0 = rational_constant(&f)?;
        let f_inf = reconcile(f_inf, a0)?;
        Ok(ExtendedFunction { f, f_inf, phi: None })
    }

    /// f with a caller-supplied φ for the chart at `k`. f(∞) defaults to
    /// φ(0); if both are given they must agree.
    pub fn with_phi(f: SliceSeriesFunction, k: f64, phi: SliceSeriesFunction, f_inf: Option<Multivector>) -> Result<Self> {
        if phi.n() != f.n() {
            return Err(Error::DimensionMismatch { expected: f.n(), found: phi.n() });
        }
        let phi0 = crate::slice::eval_series(&phi, &Paravector::real(f.n(), 0.0))?;
        let f_inf = reconcile(f_inf, phi0)?;
        Ok(ExtendedFunction { f, f_inf, phi: Some((k, phi)) })
    }

    pub fn f(&self) -> &SliceSeriesFunction {
        &self.f
    }

    pub fn f_inf(&self) -> &Multivector {
        &self.f_inf
    }

    /// φ(p) = f(p⁻¹ + k). For rational f this is exact: with δ = k − c and
    /// p* = 1/(c − k), (x − c)⁻¹ = 1/δ − δ⁻²(p − p*)⁻¹, so φ is a finite
    /// Laurent series at p*.
    pub fn phi_for(&self, k: f64) -> Result<SliceSeriesFunction> {
        if let Some((k0, phi)) = &self.phi {
            if *k0 == k {
                return Ok(phi.clone());
            }
        }
        let a0 = rational_constant(&self.f)?;
        let n = self.f.n();
        let c = self.f.center();
        let delta = k - c;
        if delta == 0.0 {
            return Err(Error::Invalid("chart point coincides with the pole of f".into()));
        }
        let alpha = 1.0 / delta;
        let beta = -1.0 / (delta * delta);
        let laurent_f = self.f.laurent();
        let order = laurent_f.len();
        let mut constant = a0;
        let mut laurent = vec![Multivector::zero(n); order];
        for (idx, b) in laurent_f.iter().enumerate() {
            let m = idx + 1;
            let mut binom = 1.0;
            for j in 0..=m {
                let coeff = binom * alpha.powi((m - j) as i32) * beta.powi(j as i32);
                if j == 0 {
                    constant += &b.scale(coeff);
                } else {
                    laurent[j - 1] += &b.scale(coeff);
                }
                binom = binom * (m - j) as f64 / (j + 1) as f64;
            }
        }
        SliceSeriesFunction::new(1.0 / (c - k), vec![constant], laurent, f64::INFINITY, 0.0)
    }
}

fn rational_constant(f: &SliceSeriesFunction) -> Result<Multivector> {
    let not_regular = || Error::Invalid("function is not of the form a0 + Σ b_m (x - c)^-m".into());
    if f.outer_radius() != f64::INFINITY || f.inner_radius() != 0.0 {
        return Err(not_regular());
    }
    match f.power() {
        PowerCoeffs::Explicit(c) if c.iter().skip(1).all(Multivector::is_zero) => Ok(c[0].clone()),
        _ => Err(not_regular()),
    }
}

fn reconcile(given: Option<Multivector>, derived: Multivector) -> Result<Multivector> {
    match given {
        None => Ok(derived),
        Some(g) if (&g - &derived).norm() <= F_INF_TOL => Ok(g),
        Some(g) => Err(Error::Invalid(format!("f(inf) = {g} disagrees with the derived value {derived}"))),
    }
}

/// f(T) = φ(A) through the bounded calculus on the companion operator.
/// Without a contour one is built around σ_S(A) in `plane`.
pub fn f_of_t_via_chart<M: AsRef<CliffordMatrix> + ?Sized>(
    ef: &ExtendedFunction,
    t: &M,
    k: f64,
    contour_for_a: Option<&Contour>,
    plane: &ImagUnit,
    nodes: usize,
) -> Result<CliffordMatrix> {
    let a = companion_operator(t, k)?;
    let phi = ef.phi_for(k)?;
    let contour = match contour_for_a {
        Some(c) => c.clone(),
        None => build_contour(&s_spectrum_exact(&a)?, &phi, plane, None, nodes)?,
    };
    Ok(crate::calculus::f_of_t(&phi, &a, &contour)?.value)
}

/// Clockwise circle around the pole of f, inside the gap between f's
/// singular disc and the spectrum.
pub fn build_direct_contour(
    spec: &SpectrumReport,
    f: &SliceSeriesFunction,
    plane: &ImagUnit,
    margin: Option<f64>,
    nodes: usize,
) -> Result<Contour> {
    let c = f.center();
    let near = spec.components.iter().map(|k| (k.u - c).hypot(k.r)).fold(f64::INFINITY, f64::min);
    let inner = f.inner_radius();
    if !(near > inner) {
        return Err(Error::Contour(format!("the pole {c} of f is not separated from the spectrum")));
    }
    let floor = CLEARANCE_FLOOR * spec.rep_norm;
    let margin = margin.unwrap_or_else(|| default_margin(spec.rep_norm));
    let radius = if near - margin > inner { near - margin } else { 0.5 * (near + inner) };
    if !(near - radius > floor) || !(radius > 0.0) {
        return Err(Error::Clearance { clearance: near - radius, floor });
    }
    Contour::new(plane.clone(), vec![Circle { center: c, radius, orientation: -1 }], nodes)
}

/// f(∞)I + (1/2π) ∫_{∂W} S⁻¹(s,T) ds_I f(s).
pub fn f_of_t_direct<M: AsRef<CliffordMatrix> + ?Sized>(
    ef: &ExtendedFunction,
    t: &M,
    contour: Option<&Contour>,
    plane: &ImagUnit,
    nodes: usize,
) -> Result<CliffordMatrix> {
    let t = t.as_ref();
    let base = CliffordMatrix::scalar_identity(ef.f_inf(), t.d());
    if !ef.f.has_laurent_part() {
        rational_constant(&ef.f)?;
        return Ok(base);
    }
    let contour = match contour {
        Some(c) => c.clone(),
        None => build_direct_contour(&s_spectrum_exact(t)?, &ef.f, plane, None, nodes)?,
    };
    let spec = s_spectrum_exact(t)?;
    let floor = CLEARANCE_FLOOR * spec.rep_norm;
    let clearance = contour.clearance(&spec);
    if !(clearance > floor) || !(clearance > 0.0) {
        return Err(Error::Clearance { clearance, floor });
    }
    for comp in &spec.components {
        if contour.winding_number(Complex64::new(comp.u, comp.r)) != Some(0) {
            return Err(Error::Contour("the exterior contour must not wind around the spectrum".into()));
        }
    }
    if contour.winding_number(Complex64::new(ef.f.center(), 0.0)) != Some(-1) {
        return Err(Error::Contour("the exterior contour must wind once clockwise around the pole".into()));
    }
    Ok(&base + &contour_sum(&ef.f, t, &contour, Exec::default())?)
}

/// ‖S⁻¹(s,T) − (pI − S⁻¹(p,A)p²)‖ with p = (s − k)⁻¹.
pub fn transform_residual<M: AsRef<CliffordMatrix> + ?Sized>(s: &Paravector, t: &M, k: f64) -> Result<f64> {
    let t = t.as_ref();
    let chart = MoebiusChart::new(k)?;
    let p = moebius_map(&chart, s)?;
    let a = companion_operator(t, k)?;
    let lhs = s_resolvent(s, t)?;
    let pm = p.to_multivector();
    let rhs = &CliffordMatrix::scalar_identity(&pm, t.d()) - &s_resolvent(&p, &a)?.mul_right(&(&pm * &pm))?;
    Ok((&lhs - &rhs).rep_norm())
}

/// Hausdorff distance between the mapped spectrum of T and the exact
/// spectrum of the companion operator.
pub fn spectrum_correspondence_check<M: AsRef<CliffordMatrix> + ?Sized>(t: &M, k: f64) -> Result<f64> {
    let t = t.as_ref();
    let a = companion_operator(t, k)?;
    let mapped = moebius_spectrum(&MoebiusChart::new(k)?, &s_spectrum_exact(t)?, false)?;
    Ok(hausdorff(&mapped.components, &s_spectrum_exact(&a)?.components))
}
