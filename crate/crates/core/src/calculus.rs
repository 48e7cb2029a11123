//! Bounded slice functional calculus:
//! f(T) = (1/2π) ∫ S⁻¹(s,T) ds_I f(s) over circles centered on ℝ in a
//! slice plane L_I, with ds_I = R e^{Iθ} dθ and the uniform trapezoidal rule.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::clifford::{ImagUnit, Multivector};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::operator::CliffordMatrix;
use crate::slice::SliceSeriesFunction;
use crate::spectral::{s_spectrum_exact, PencilCache, SpectrumReport};

pub const DEFAULT_NODES: usize = 512;
/// Integration refuses contours closer than this times rep_norm to the spectrum.
pub const CLEARANCE_FLOOR: f64 = 1e-6;

pub fn default_margin(rep_norm: f64) -> f64 {
    0.1 * (1.0 + rep_norm)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Circle {
    pub center: f64,
    pub radius: f64,
    /// +1 counterclockwise, −1 clockwise.
    pub orientation: i8,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Contour {
    pub plane: ImagUnit,
    pub cycles: Vec<Circle>,
    pub nodes_per_cycle: usize,
}

/// Quadrature node: the plane point z = u + iv and the weight
/// orientation·R·e^{iθ}/N, which already includes 1/2π and Δθ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub z: Complex64,
    pub weight: Complex64,
}

impl Contour {
    pub fn new(plane: ImagUnit, cycles: Vec<Circle>, nodes_per_cycle: usize) -> Result<Self> {
        if nodes_per_cycle == 0 {
            return Err(Error::Contour("node count must be positive".into()));
        }
        if cycles.is_empty() {
            return Err(Error::Contour("contour needs at least one circle".into()));
        }
        for c in &cycles {
            if !(c.radius > 0.0) || !c.radius.is_finite() || !c.center.is_finite() {
                return Err(Error::Contour(format!("invalid circle radius {} at {}", c.radius, c.center)));
            }
            if c.orientation != 1 && c.orientation != -1 {
                return Err(Error::Contour("orientation must be ±1".into()));
            }
        }
        Ok(Contour { plane, cycles, nodes_per_cycle })
    }

    pub fn circle(plane: ImagUnit, center: f64, radius: f64, nodes: usize) -> Result<Self> {
        Self::new(plane, vec![Circle { center, radius, orientation: 1 }], nodes)
    }

    pub fn total_nodes(&self) -> usize {
        self.cycles.len() * self.nodes_per_cycle
    }

    /// Nodes in cycle order, θ_k = 2πk/N.
    pub fn nodes(&self) -> Vec<Node> {
        let n = self.nodes_per_cycle;
        self.cycles
            .iter()
            .flat_map(|c| {
                (0..n).map(move |k| {
                    let e = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
                    Node {
                        z: Complex64::new(c.center, 0.0) + e * c.radius,
                        weight: e * (c.radius * c.orientation as f64 / n as f64),
                    }
                })
            })
            .collect()
    }

    /// Winding number around a plane point, or None when it lies on a circle.
    pub fn winding_number(&self, z: Complex64) -> Option<i32> {
        let mut w = 0;
        for c in &self.cycles {
            let dist = (z - c.center).norm();
            if dist == c.radius {
                return None;
            }
            if dist < c.radius {
                w += c.orientation as i32;
            }
        }
        Some(w)
    }

    /// Distance from a plane point to the nearest circle.
    pub fn distance_to(&self, z: Complex64) -> f64 {
        self.cycles.iter().map(|c| ((z - c.center).norm() - c.radius).abs()).fold(f64::INFINITY, f64::min)
    }

    /// Minimum distance between the circles and the spectral points (u, ±r).
    pub fn clearance(&self, spec: &SpectrumReport) -> f64 {
        spec.components
            .iter()
            .map(|c| self.distance_to(Complex64::new(c.u, c.r)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Every spectral point must be wound once and every singularity of f
    /// (its center, when it has a Laurent part) zero times.
    pub fn validate(&self, spec: &SpectrumReport, f: &SliceSeriesFunction) -> Result<()> {
        for c in &spec.components {
            for z in [Complex64::new(c.u, c.r), Complex64::new(c.u, -c.r)] {
                if self.winding_number(z) != Some(1) {
                    return Err(Error::Contour(format!("spectral point ({}, {}) is not wound once", c.u, c.r)));
                }
            }
        }
        if f.has_laurent_part() && self.winding_number(Complex64::new(f.center(), 0.0)) != Some(0) {
            return Err(Error::Contour("contour winds around the singularity of f".into()));
        }
        Ok(())
    }
}

fn fits(r: f64, lo: f64, hi: f64) -> bool {
    r > lo && r < hi
}

/// Axially symmetric contour for f around the spectrum: one positive
/// circle for a power series, an outer positive and an inner negative
/// circle when f has a Laurent part. The outer radius is
/// max(|u − c| + r) + margin when that fits inside f's disc, otherwise the
/// in-plane distance max √((u − c)² + r²) + margin, otherwise the midpoint
/// between that distance and f's outer radius.
pub fn build_contour(
    spec: &SpectrumReport,
    f: &SliceSeriesFunction,
    plane: &ImagUnit,
    margin: Option<f64>,
    nodes: usize,
) -> Result<Contour> {
    if plane.n() != f.n() {
        return Err(Error::DimensionMismatch { expected: f.n(), found: plane.n() });
    }
    let floor = CLEARANCE_FLOOR * spec.rep_norm;
    let margin = margin.unwrap_or_else(|| default_margin(spec.rep_norm));
    if !(margin > floor) || !(margin > 0.0) {
        return Err(Error::Clearance { clearance: margin, floor });
    }
    let c = f.center();
    let dists: Vec<f64> = spec.components.iter().map(|k| (k.u - c).hypot(k.r)).collect();
    let far = dists.iter().cloned().fold(0.0, f64::max);
    let near = dists.iter().cloned().fold(f64::INFINITY, f64::min);
    let sum_bound = spec.components.iter().map(|k| (k.u - c).abs() + k.r).fold(0.0, f64::max);
    let (inner, outer) = (f.inner_radius(), f.outer_radius());
    if !(far < outer) {
        return Err(Error::Contour(format!(
            "spectrum reaches distance {far} from {c}, outside the convergence radius {outer}"
        )));
    }
    let r_out = [sum_bound + margin, far + margin]
        .into_iter()
        .find(|&r| fits(r, far, outer))
        .unwrap_or(0.5 * (far + outer));
    if !(r_out - far > floor) || !(r_out - far > 0.0) {
        return Err(Error::Clearance { clearance: r_out - far, floor });
    }
    let mut cycles = vec![Circle { center: c, radius: r_out, orientation: 1 }];
    if f.has_laurent_part() {
        if !(near > inner) {
            return Err(Error::Contour(format!(
                "spectrum reaches distance {near} from {c}, inside the singular disc of radius {inner}"
            )));
        }
        let r_in = if near - margin > inner { near - margin } else { 0.5 * (near + inner) };
        if !(near - r_in > floor) || !(r_in > 0.0) {
            return Err(Error::Clearance { clearance: near - r_in, floor });
        }
        cycles.push(Circle { center: c, radius: r_in, orientation: -1 });
    }
    let contour = Contour::new(plane.clone(), cycles, nodes)?;
    contour.validate(spec, f)?;
    Ok(contour)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalculusResult {
    pub value: CliffordMatrix,
    pub clearance: f64,
    pub nodes: usize,
    pub plane: ImagUnit,
}

/// Quadrature sum Σ_k S⁻¹(s_k,T) · w_k · f(s_k), accumulated on the first d
/// columns of the representation and summed in node order.
pub(crate) fn contour_sum(
    f: &SliceSeriesFunction,
    t: &CliffordMatrix,
    contour: &Contour,
    exec: Exec,
) -> Result<CliffordMatrix> {
    let (n, d) = (t.n(), t.d());
    if f.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: f.n() });
    }
    if contour.plane.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: contour.plane.n() });
    }
    let cache = PencilCache::new(t);
    let nodes = contour.nodes();
    let plane = &contour.plane;
    let dim = 1usize << n;
    let parts = exec.try_map(nodes.len(), |k| -> Result<DMatrix<f64>> {
        let node = nodes[k];
        let s = plane.embed(node.z);
        let res = cache.resolvent_rep(&s)?;
        let w = plane.embed(node.weight).to_multivector();
        let a = &w * &f.eval_in_plane(node.z, plane)?;
        // first d columns of rep(S·a) = Σ_C a_C · rep(S)[:, C-block]
        let mut cols = DMatrix::zeros(dim * d, d);
        for (blade, &ac) in a.coeffs().iter().enumerate() {
            if ac != 0.0 {
                cols += res.columns(blade * d, d) * ac;
            }
        }
        Ok(cols)
    })?;
    let mut acc = DMatrix::zeros(dim * d, d);
    for p in &parts {
        acc += p;
    }
    let blades = (0..dim).map(|b| acc.rows(b * d, d).into_owned()).collect();
    CliffordMatrix::from_blades(n, d, blades)
}

/// Checks the clearance floor and the winding numbers of `contour`
/// against the exact spectrum of `t`; returns the clearance.
pub(crate) fn check_contour(
    f: &SliceSeriesFunction,
    t: &CliffordMatrix,
    contour: &Contour,
) -> Result<(SpectrumReport, f64)> {
    let spec = s_spectrum_exact(t)?;
    let clearance = contour.clearance(&spec);
    let floor = CLEARANCE_FLOOR * spec.rep_norm;
    if !(clearance > floor) || !(clearance > 0.0) {
        return Err(Error::Clearance { clearance, floor });
    }
    contour.validate(&spec, f)?;
    Ok((spec, clearance))
}

pub fn f_of_t<M: AsRef<CliffordMatrix> + ?Sized>(
    f: &SliceSeriesFunction,
    t: &M,
    contour: &Contour,
) -> Result<CalculusResult> {
    f_of_t_with(f, t, contour, Exec::default())
}

pub fn f_of_t_with<M: AsRef<CliffordMatrix> + ?Sized>(
    f: &SliceSeriesFunction,
    t: &M,
    contour: &Contour,
    exec: Exec,
) -> Result<CalculusResult> {
    let t = t.as_ref();
    let (_, clearance) = check_contour(f, t, contour)?;
    let value = contour_sum(f, t, contour, exec)?;
    Ok(CalculusResult { value, clearance, nodes: contour.total_nodes(), plane: contour.plane.clone() })
}

/// Builds the default contour for f in `plane` and evaluates f(T).
pub fn f_of_t_auto<M: AsRef<CliffordMatrix> + ?Sized>(
    f: &SliceSeriesFunction,
    t: &M,
    plane: &ImagUnit,
    margin: Option<f64>,
    nodes: usize,
) -> Result<CalculusResult> {
    let t = t.as_ref();
    let spec = s_spectrum_exact(t)?;
    let contour = build_contour(&spec, f, plane, margin, nodes)?;
    f_of_t(f, t, &contour)
}

/// ‖f(T) − Tᵐa‖ for f(x) = xᵐa.
pub fn moment_check<M: AsRef<CliffordMatrix> + ?Sized>(
    t: &M,
    m: usize,
    a: &Multivector,
    contour: &Contour,
) -> Result<f64> {
    let t = t.as_ref();
    let f = SliceSeriesFunction::monomial(m, a.clone());
    let got = f_of_t(&f, t, contour)?.value;
    let expect = t.pow(m).mul_right(a)?;
    Ok((&got - &expect).rep_norm())
}

/// ‖f(T) via plane I1 − f(T) via plane I2‖, default margin.
pub fn plane_independence_gap<M: AsRef<CliffordMatrix> + ?Sized>(
    f: &SliceSeriesFunction,
    t: &M,
    i1: &ImagUnit,
    i2: &ImagUnit,
    nodes: usize,
) -> Result<f64> {
    let t = t.as_ref();
    let spec = s_spectrum_exact(t)?;
    let a = f_of_t(f, t, &build_contour(&spec, f, i1, None, nodes)?)?.value;
    let b = f_of_t(f, t, &build_contour(&spec, f, i2, None, nodes)?)?.value;
    Ok((&a - &b).rep_norm())
}

/// ‖(fg)(T) − f(T)g(T)‖ for intrinsic f, g, all evaluated on the contour
/// built for the Cauchy product.
pub fn product_residual<M: AsRef<CliffordMatrix> + ?Sized>(
    f: &SliceSeriesFunction,
    g: &SliceSeriesFunction,
    t: &M,
    plane: &ImagUnit,
    nodes: usize,
) -> Result<f64> {
    if !f.is_intrinsic() || !g.is_intrinsic() {
        return Err(Error::Invalid("the product rule needs real-coefficient series".into()));
    }
    let t = t.as_ref();
    let fg = f.cauchy_product(g)?;
    let spec = s_spectrum_exact(t)?;
    let contour = build_contour(&spec, &fg, plane, None, nodes)?;
    let lhs = f_of_t(&fg, t, &contour)?.value;
    let rhs = f_of_t(f, t, &contour)?.value.compose(&f_of_t(g, t, &contour)?.value)?;
    Ok((&lhs - &rhs).rep_norm())
}
