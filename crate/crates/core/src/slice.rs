//! Slice-monogenic functions represented by power and Laurent series at a
//! real center, their evaluation, the s-derivative, the slice Cauchy
//! formula, and the noncommutative Cauchy kernel S⁻¹(s, x).
//!
//! Coefficients always multiply on the right: f(x) = Σ (x - c)ᵐ a_m.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::clifford::{ImagUnit, Multivector, Paravector};
use crate::error::{Error, Result};

/// Relative tail bound at which infinite series are truncated.
pub const SERIES_TOL: f64 = 1e-15;
/// Hard cap on the number of evaluated terms.
pub const MAX_TERMS: usize = 10_000;
/// Number of coefficients kept when an intrinsic series has to be
/// materialized (Cauchy products, right multiplication by a non-scalar).
pub const MATERIALIZE_ORDER: usize = 256;

/// Named series with real coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Intrinsic {
    Exp,
    Sin,
    Cos,
    /// The `deriv`-th derivative of Σ xᵐ.
    Geom { deriv: u32 },
}

impl Intrinsic {
    fn radius(self) -> f64 {
        match self {
            Intrinsic::Geom { .. } => 1.0,
            _ => f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PowerCoeffs {
    Explicit(Vec<Multivector>),
    /// `scale · c_m` where `c_m` are the coefficients of `kind`.
    Intrinsic { kind: Intrinsic, scale: f64 },
}

/// Walks the coefficients of an intrinsic series together with a bound
/// `bound = max|c_m| · distᵐ` that does not depend on which coefficients vanish.
struct IntrinsicTerms {
    kind: Intrinsic,
    dist: f64,
    m: usize,
    inv_fact: f64,
    bound: f64,
}

impl IntrinsicTerms {
    fn new(kind: Intrinsic, dist: f64) -> Self {
        let mut t = IntrinsicTerms { kind, dist, m: 0, inv_fact: 1.0, bound: 0.0 };
        t.bound = t.magnitude();
        t
    }

    fn geom_factor(m: usize, k: u32) -> f64 {
        (1..=k as usize).map(|i| (m + i) as f64).product()
    }

    fn magnitude(&self) -> f64 {
        match self.kind {
            Intrinsic::Geom { deriv } => Self::geom_factor(self.m, deriv),
            _ => 1.0,
        }
    }

    fn coeff(&self) -> f64 {
        let m = self.m;
        match self.kind {
            Intrinsic::Exp => self.inv_fact,
            Intrinsic::Sin if m % 2 == 1 => {
                if (m / 2) % 2 == 0 {
                    self.inv_fact
                } else {
                    -self.inv_fact
                }
            }
            Intrinsic::Cos if m % 2 == 0 => {
                if (m / 2) % 2 == 0 {
                    self.inv_fact
                } else {
                    -self.inv_fact
                }
            }
            Intrinsic::Sin | Intrinsic::Cos => 0.0,
            Intrinsic::Geom { deriv } => Self::geom_factor(m, deriv),
        }
    }

    /// bound_{m+1} / bound_m; non-increasing in m for every kind.
    fn ratio(&self) -> f64 {
        let m = self.m as f64;
        match self.kind {
            Intrinsic::Geom { deriv } => self.dist * (m + 1.0 + deriv as f64) / (m + 1.0),
            _ => self.dist / (m + 1.0),
        }
    }

    /// Upper bound on Σ_{j>m} |c_j| dist^j once the terms decay geometrically.
    fn tail(&self) -> Option<f64> {
        let r = self.ratio();
        (r < 1.0).then(|| self.bound * r / (1.0 - r))
    }

    fn advance(&mut self) {
        self.bound *= self.ratio();
        self.m += 1;
        self.inv_fact /= self.m as f64;
    }
}

/// Σ (x - c)ᵐ a_m + Σ (x - c)⁻ᵐ b_m on the annulus inner < |x - c| < outer.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceSeriesFunction {
    n: usize,
    center: f64,
    power: PowerCoeffs,
    laurent: Vec<Multivector>,
    outer_radius: f64,
    inner_radius: f64,
}

impl SliceSeriesFunction {
    /// General literal series. `laurent[0]` multiplies (x - c)⁻¹.
    pub fn new(
        center: f64,
        power: Vec<Multivector>,
        laurent: Vec<Multivector>,
        outer_radius: f64,
        inner_radius: f64,
    ) -> Result<Self> {
        let n = power
            .first()
            .or(laurent.first())
            .map(Multivector::n)
            .ok_or_else(|| Error::Invalid("series needs at least one coefficient".into()))?;
        if let Some(bad) = power.iter().chain(&laurent).find(|a| a.n() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: bad.n() });
        }
        if !center.is_finite() {
            return Err(Error::Invalid("series center must be finite".into()));
        }
        if !(outer_radius > 0.0) || !(inner_radius >= 0.0) || inner_radius >= outer_radius {
            return Err(Error::Invalid(format!(
                "invalid convergence annulus ({inner_radius}, {outer_radius})"
            )));
        }
        let power = if power.is_empty() { vec![Multivector::zero(n)] } else { power };
        Ok(SliceSeriesFunction {
            n,
            center,
            power: PowerCoeffs::Explicit(power),
            laurent,
            outer_radius,
            inner_radius,
        })
    }

    /// Polynomial Σ (x - c)ᵐ a_m (entire).
    pub fn polynomial(center: f64, coeffs: Vec<Multivector>) -> Result<Self> {
        Self::new(center, coeffs, Vec::new(), f64::INFINITY, 0.0)
    }

    /// x ↦ xᵐ a.
    pub fn monomial(m: usize, a: Multivector) -> Self {
        let n = a.n();
        let mut coeffs = vec![Multivector::zero(n); m];
        coeffs.push(a);
        Self::polynomial(0.0, coeffs).expect("monomial is well formed")
    }

    pub fn constant(a: Multivector) -> Self {
        Self::monomial(0, a)
    }

    pub fn one(n: usize) -> Self {
        Self::constant(Multivector::one(n))
    }

    pub fn intrinsic(n: usize, kind: Intrinsic) -> Self {
        SliceSeriesFunction {
            n,
            center: 0.0,
            power: PowerCoeffs::Intrinsic { kind, scale: 1.0 },
            laurent: Vec::new(),
            outer_radius: kind.radius(),
            inner_radius: 0.0,
        }
    }

    pub fn exp(n: usize) -> Self {
        Self::intrinsic(n, Intrinsic::Exp)
    }

    pub fn sin(n: usize) -> Self {
        Self::intrinsic(n, Intrinsic::Sin)
    }

    pub fn cos(n: usize) -> Self {
        Self::intrinsic(n, Intrinsic::Cos)
    }

    /// Σ xᵐ = (1 - x)⁻¹ on |x| < 1.
    pub fn geom(n: usize) -> Self {
        Self::intrinsic(n, Intrinsic::Geom { deriv: 0 })
    }

    /// (x - c)⁻ᵒʳᵈᵉʳ · b, defined for x ≠ c.
    pub fn pole(center: f64, order: usize, b: Multivector) -> Result<Self> {
        if order == 0 {
            return Err(Error::Invalid("pole order must be positive".into()));
        }
        let n = b.n();
        let mut laurent = vec![Multivector::zero(n); order - 1];
        laurent.push(b);
        Self::new(center, vec![Multivector::zero(n)], laurent, f64::INFINITY, 0.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn power(&self) -> &PowerCoeffs {
        &self.power
    }

    pub fn laurent(&self) -> &[Multivector] {
        &self.laurent
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    pub fn has_laurent_part(&self) -> bool {
        self.laurent.iter().any(|b| !b.is_zero())
    }

    /// True iff every coefficient is a real scalar.
    pub fn is_intrinsic(&self) -> bool {
        let explicit_ok = match &self.power {
            PowerCoeffs::Explicit(c) => c.iter().all(|a| a.is_scalar(0.0)),
            PowerCoeffs::Intrinsic { .. } => true,
        };
        explicit_ok && self.laurent.iter().all(|b| b.is_scalar(0.0))
    }

    /// Explicit power coefficients; intrinsic series are cut at `order` terms.
    pub fn power_coeffs(&self, order: usize) -> Vec<Multivector> {
        match &self.power {
            PowerCoeffs::Explicit(c) => c.clone(),
            PowerCoeffs::Intrinsic { kind, scale } => {
                let mut t = IntrinsicTerms::new(*kind, 0.0);
                (0..order)
                    .map(|_| {
                        let c = Multivector::scalar(self.n, scale * t.coeff());
                        t.advance();
                        c
                    })
                    .collect()
            }
        }
    }

    /// Same function with intrinsic coefficients written out to `order` terms.
    pub fn materialize(&self, order: usize) -> Self {
        SliceSeriesFunction { power: PowerCoeffs::Explicit(self.power_coeffs(order)), ..self.clone() }
    }

    /// x ↦ f(x) · a.
    pub fn mul_right(&self, a: &Multivector) -> Result<Self> {
        if a.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: a.n() });
        }
        let power = match &self.power {
            PowerCoeffs::Intrinsic { kind, scale } if a.is_scalar(0.0) => {
                PowerCoeffs::Intrinsic { kind: *kind, scale: scale * a.scalar_part() }
            }
            _ => PowerCoeffs::Explicit(
                self.power_coeffs(MATERIALIZE_ORDER).iter().map(|c| c * a).collect(),
            ),
        };
        Ok(SliceSeriesFunction {
            power,
            laurent: self.laurent.iter().map(|b| b * a).collect(),
            ..self.clone()
        })
    }

    /// Sum of two series with the same center; the annulus is the intersection.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        if other.center != self.center {
            return Err(Error::Invalid("series centers differ".into()));
        }
        let zip_add = |a: Vec<Multivector>, b: Vec<Multivector>| -> Vec<Multivector> {
            let len = a.len().max(b.len());
            (0..len)
                .map(|i| match (a.get(i), b.get(i)) {
                    (Some(x), Some(y)) => x + y,
                    (Some(x), None) | (None, Some(x)) => x.clone(),
                    (None, None) => unreachable!(),
                })
                .collect()
        };
        let power = zip_add(self.power_coeffs(MATERIALIZE_ORDER), other.power_coeffs(MATERIALIZE_ORDER));
        let laurent = zip_add(self.laurent.clone(), other.laurent.clone());
        Self::new(
            self.center,
            power,
            laurent,
            self.outer_radius.min(other.outer_radius),
            self.inner_radius.max(other.inner_radius),
        )
    }

    /// Cauchy product of two power series with the same center. Exact for
    /// polynomials; intrinsic factors are cut at [`MATERIALIZE_ORDER`] terms.
    pub fn cauchy_product(&self, other: &Self) -> Result<Self> {
        if self.has_laurent_part() || other.has_laurent_part() {
            return Err(Error::Invalid("Cauchy product needs power series".into()));
        }
        if other.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        if other.center != self.center {
            return Err(Error::Invalid("series centers differ".into()));
        }
        let a = self.power_coeffs(MATERIALIZE_ORDER);
        let b = other.power_coeffs(MATERIALIZE_ORDER);
        let exact = matches!(self.power, PowerCoeffs::Explicit(_))
            && matches!(other.power, PowerCoeffs::Explicit(_));
        let len = if exact { a.len() + b.len() - 1 } else { MATERIALIZE_ORDER };
        let mut c = vec![Multivector::zero(self.n); len];
        for (i, ai) in a.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                if i + j < len {
                    c[i + j] += &(ai * bj);
                }
            }
        }
        Self::new(self.center, c, Vec::new(), self.outer_radius.min(other.outer_radius), 0.0)
    }

    fn check_annulus(&self, dist: f64) -> Result<()> {
        let inside_inner = dist > self.inner_radius || (self.inner_radius == 0.0 && self.laurent.is_empty());
        if inside_inner && dist < self.outer_radius {
            Ok(())
        } else {
            Err(Error::OutsideConvergence { dist, inner: self.inner_radius, outer: self.outer_radius })
        }
    }

    /// Evaluates at a point u + iv of the slice plane L_I using complex
    /// powers of (u + iv - c), then embeds: (p + qI)·a = p·a + I·(q·a).
    pub fn eval_in_plane(&self, z: Complex64, plane: &ImagUnit) -> Result<Multivector> {
        if plane.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: plane.n() });
        }
        let w = z - self.center;
        let dist = w.norm();
        self.check_annulus(dist)?;
        let mut re = Multivector::zero(self.n);
        let mut im = Multivector::zero(self.n);
        match &self.power {
            PowerCoeffs::Explicit(coeffs) => {
                let mut p = Complex64::new(1.0, 0.0);
                for a in coeffs {
                    re += &a.scale(p.re);
                    im += &a.scale(p.im);
                    p *= w;
                }
            }
            PowerCoeffs::Intrinsic { kind, scale } => {
                let mut t = IntrinsicTerms::new(*kind, dist);
                let mut p = Complex64::new(1.0, 0.0);
                let mut sum = Complex64::new(0.0, 0.0);
                let mut done = false;
                for _ in 0..MAX_TERMS {
                    sum += p * t.coeff();
                    if t.tail().is_some_and(|tail| tail <= SERIES_TOL * sum.norm()) {
                        done = true;
                        break;
                    }
                    p *= w;
                    t.advance();
                }
                if !done {
                    return Err(Error::TruncationCap(MAX_TERMS));
                }
                re += &Multivector::scalar(self.n, scale * sum.re);
                im += &Multivector::scalar(self.n, scale * sum.im);
            }
        }
        if !self.laurent.is_empty() {
            let winv = w.inv();
            let mut p = winv;
            for b in &self.laurent {
                re += &b.scale(p.re);
                im += &b.scale(p.im);
                p *= winv;
            }
        }
        Ok(&re + &(&plane.to_multivector() * &im))
    }
}

/// Evaluates the series at a paravector using Clifford powers of (x - c).
pub fn eval_series(f: &SliceSeriesFunction, x: &Paravector) -> Result<Multivector> {
    if x.n() != f.n {
        return Err(Error::DimensionMismatch { expected: f.n, found: x.n() });
    }
    let y = x.sub(&Paravector::real(f.n, f.center));
    let dist = y.norm();
    f.check_annulus(dist)?;
    let ym = y.to_multivector();
    let mut sum = Multivector::zero(f.n);
    match &f.power {
        PowerCoeffs::Explicit(coeffs) => {
            let mut p = Multivector::one(f.n);
            for (m, a) in coeffs.iter().enumerate() {
                sum += &(&p * a);
                if m + 1 < coeffs.len() {
                    p = &p * &ym;
                }
            }
        }
        PowerCoeffs::Intrinsic { kind, scale } => {
            let mut t = IntrinsicTerms::new(*kind, dist);
            let mut p = Multivector::one(f.n);
            let mut done = false;
            for _ in 0..MAX_TERMS {
                let c = t.coeff();
                if c != 0.0 {
                    sum += &p.scale(scale * c);
                }
                if t.tail().is_some_and(|tail| tail * scale.abs() <= SERIES_TOL * sum.norm()) {
                    done = true;
                    break;
                }
                p = &p * &ym;
                t.advance();
            }
            if !done {
                return Err(Error::TruncationCap(MAX_TERMS));
            }
        }
    }
    if !f.laurent.is_empty() {
        let yinv = y.inv()?.to_multivector();
        let mut p = yinv.clone();
        for b in &f.laurent {
            sum += &(&p * b);
            p = &p * &yinv;
        }
    }
    Ok(sum)
}

/// Term-wise derivative along the real direction.
pub fn s_derivative(f: &SliceSeriesFunction) -> SliceSeriesFunction {
    let n = f.n;
    let power = match &f.power {
        PowerCoeffs::Explicit(coeffs) => {
            let mut d: Vec<Multivector> =
                coeffs.iter().enumerate().skip(1).map(|(m, a)| a.scale(m as f64)).collect();
            if d.is_empty() {
                d.push(Multivector::zero(n));
            }
            PowerCoeffs::Explicit(d)
        }
        PowerCoeffs::Intrinsic { kind, scale } => {
            let (kind, scale) = match *kind {
                Intrinsic::Exp => (Intrinsic::Exp, *scale),
                Intrinsic::Sin => (Intrinsic::Cos, *scale),
                Intrinsic::Cos => (Intrinsic::Sin, -scale),
                Intrinsic::Geom { deriv } => (Intrinsic::Geom { deriv: deriv + 1 }, *scale),
            };
            PowerCoeffs::Intrinsic { kind, scale }
        }
    };
    // d/dx (x - c)⁻ᵐ b = -m (x - c)⁻ᵐ⁻¹ b
    let laurent = if f.laurent.is_empty() {
        Vec::new()
    } else {
        std::iter::once(Multivector::zero(n))
            .chain(f.laurent.iter().enumerate().map(|(i, b)| b.scale(-((i + 1) as f64))))
            .collect()
    };
    SliceSeriesFunction { power, laurent, ..f.clone() }
}

/// Slice Cauchy formula on the circle |ζ - c| = radius of the plane L_{I_x}:
/// (1/2π) Σ_k (ζ_k - x)⁻¹ · (R e^{Iθ_k}) · f(ζ_k) · Δθ.
pub fn cauchy_eval(f: &SliceSeriesFunction, x: &Paravector, radius: f64, nodes: usize) -> Result<Multivector> {
    if f.has_laurent_part() {
        return Err(Error::Invalid("the Cauchy formula on a disc needs a power series".into()));
    }
    if x.n() != f.n {
        return Err(Error::DimensionMismatch { expected: f.n, found: x.n() });
    }
    if nodes == 0 {
        return Err(Error::Invalid("node count must be positive".into()));
    }
    let plane = x.plane();
    let zx = x.in_plane(&plane);
    if (zx - f.center).norm() >= radius {
        return Err(Error::Contour(format!("point {x} is not inside the circle of radius {radius}")));
    }
    if radius >= f.outer_radius {
        return Err(Error::OutsideConvergence { dist: radius, inner: f.inner_radius, outer: f.outer_radius });
    }
    let mut sum = Multivector::zero(f.n);
    for k in 0..nodes {
        let theta = 2.0 * PI * k as f64 / nodes as f64;
        let arm = Complex64::from_polar(radius, theta);
        let zeta = arm + f.center;
        let factor = arm / (zeta - zx);
        let value = f.eval_in_plane(zeta, &plane)?;
        sum += &(&plane.embed(factor).to_multivector() * &value);
    }
    Ok(sum.scale(1.0 / nodes as f64))
}

/// S⁻¹(s, x) = -(x² - 2Re[s]x + |s|²)⁻¹ (x - s̄).
pub fn kernel_s(s: &Paravector, x: &Paravector) -> Result<Multivector> {
    if s.n() != x.n() {
        return Err(Error::DimensionMismatch { expected: s.n(), found: x.n() });
    }
    let n = s.n();
    let xm = x.to_multivector();
    let quad = &(&(&xm * &xm) - &xm.scale(2.0 * s.re())) + &Multivector::scalar(n, s.norm_sq());
    let qinv = quad.inverse().map_err(|_| Error::SingularKernel)?;
    Ok(-&(&qinv * &x.sub(&s.conj()).to_multivector()))
}

/// Partial sum Σ_{m<terms} xᵐ s⁻¹⁻ᵐ of the kernel series.
pub fn kernel_series(s: &Paravector, x: &Paravector, terms: usize) -> Result<Multivector> {
    if s.n() != x.n() {
        return Err(Error::DimensionMismatch { expected: s.n(), found: x.n() });
    }
    let sinv = s.inv()?.to_multivector();
    let xm = x.to_multivector();
    let mut left = Multivector::one(s.n());
    let mut right = sinv.clone();
    let mut sum = Multivector::zero(s.n());
    for _ in 0..terms {
        sum += &(&left * &right);
        left = &left * &xm;
        right = &right * &sinv;
    }
    Ok(sum)
}

fn probe_points(s: &Paravector, d1: &ImagUnit, d2: &ImagUnit, t: f64) -> Result<(Multivector, Multivector)> {
    if !(t > 0.0) {
        return Err(Error::Invalid("probe distance must be positive".into()));
    }
    let base = s.conj();
    let k1 = kernel_s(s, &base.add(&d1.to_paravector().scale(t)))?;
    let k2 = kernel_s(s, &base.add(&d2.to_paravector().scale(t)))?;
    Ok((k1, k2))
}

/// ‖S⁻¹(s, s̄ + t·d1) - S⁻¹(s, s̄ + t·d2)‖: direction dependence of the kernel
/// near x = s̄.
pub fn kernel_directional_gap(s: &Paravector, d1: &ImagUnit, d2: &ImagUnit, t: f64) -> Result<f64> {
    let (k1, k2) = probe_points(s, d1, d2, t)?;
    Ok((&k1 - &k2).norm())
}

/// |t‖S⁻¹(s, s̄ + t·d1)‖ - t‖S⁻¹(s, s̄ + t·d2)‖|: compares the blow-up rates
/// of the kernel along two directions. Zero for real s, where the only
/// singularity is the isotropic pole (s - x)⁻¹.
pub fn kernel_scaled_gap(s: &Paravector, d1: &ImagUnit, d2: &ImagUnit, t: f64) -> Result<f64> {
    let (k1, k2) = probe_points(s, d1, d2, t)?;
    Ok((t * k1.norm() - t * k2.norm()).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mv(s: &str, n: usize) -> Multivector {
        Multivector::parse(s, n).unwrap()
    }

    fn pv(s: &str, n: usize) -> Paravector {
        Paravector::parse(s, n).unwrap()
    }

    fn close(a: &Multivector, b: &Multivector, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn eval_examples() {
        let e = eval_series(&SliceSeriesFunction::exp(1), &Paravector::real(1, 1.0)).unwrap();
        assert!((e.scalar_part() - std::f64::consts::E).abs() < 1e-15);
        let sq = SliceSeriesFunction::monomial(2, Multivector::one(2));
        assert_eq!(eval_series(&sq, &pv("e1", 2)).unwrap(), Multivector::scalar(2, -1.0));
        // geometric series at 0.5e1 equals (1 - 0.5e1)⁻¹ = 0.8 + 0.4e1
        let g = eval_series(&SliceSeriesFunction::geom(1), &pv("0.5 e1", 1)).unwrap();
        let oracle = pv("1 - 0.5 e1", 1).inv().unwrap().to_multivector();
        assert!(close(&g, &oracle, 1e-14));
        assert!(close(&g, &mv("0.8 + 0.4 e1", 1), 1e-14));
    }

    #[test]
    fn eval_checks_annulus() {
        let g = SliceSeriesFunction::geom(2);
        assert!(matches!(eval_series(&g, &pv("1.5", 2)), Err(Error::OutsideConvergence { .. })));
        let p = SliceSeriesFunction::pole(1.0, 1, Multivector::one(2)).unwrap();
        assert!(eval_series(&p, &pv("1", 2)).is_err());
        let v = eval_series(&p, &pv("1 + e2", 2)).unwrap();
        assert!(close(&v, &pv("e2", 2).inv().unwrap().to_multivector(), 1e-15));
    }

    #[test]
    fn sin_cos_at_zero_and_identity() {
        let x = pv("0.3 + 0.7 e1 - 0.2 e2", 2);
        let s = eval_series(&SliceSeriesFunction::sin(2), &x).unwrap();
        let c = eval_series(&SliceSeriesFunction::cos(2), &x).unwrap();
        let one = &(&s * &s) + &(&c * &c);
        assert!(close(&one, &Multivector::one(2), 1e-14));
        assert!(eval_series(&SliceSeriesFunction::sin(2), &Paravector::real(2, 0.0)).unwrap().is_zero());
    }

    #[test]
    fn plane_and_clifford_routes_agree() {
        let f = SliceSeriesFunction::polynomial(
            0.5,
            vec![mv("1 + e12", 2), mv("-2 e1", 2), mv("0.5 + e2", 2), mv("3 e12", 2)],
        )
        .unwrap();
        let plane = ImagUnit::new(vec![0.6, -0.8]).unwrap();
        for z in [Complex64::new(0.3, 0.4), Complex64::new(-1.0, 2.0), Complex64::new(2.0, 0.0)] {
            let x = plane.embed(z);
            let a = eval_series(&f, &x).unwrap();
            let b = f.eval_in_plane(z, &plane).unwrap();
            assert!(close(&a, &b, 1e-12 * (1.0 + a.norm())));
        }
        let e = SliceSeriesFunction::exp(2);
        let z = Complex64::new(0.2, 1.1);
        assert!(close(&eval_series(&e, &plane.embed(z)).unwrap(), &e.eval_in_plane(z, &plane).unwrap(), 1e-14));
    }

    #[test]
    fn derivative_examples() {
        let sq = SliceSeriesFunction::monomial(2, Multivector::one(1));
        let d = s_derivative(&sq);
        assert_eq!(d.power(), &PowerCoeffs::Explicit(vec![Multivector::zero(1), Multivector::scalar(1, 2.0)]));
        assert_eq!(s_derivative(&SliceSeriesFunction::exp(2)).power(), SliceSeriesFunction::exp(2).power());
        let p = SliceSeriesFunction::pole(0.0, 1, Multivector::one(1)).unwrap();
        let dp = s_derivative(&p);
        let x = Paravector::real(1, 0.5);
        assert!((eval_series(&dp, &x).unwrap().scalar_part() + 4.0).abs() < 1e-14);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 2;
        let coeffs: Vec<Multivector> = (0..8)
            .map(|_| Multivector::from_coeffs(n, (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap())
            .collect();
        let fns = [
            SliceSeriesFunction::polynomial(0.0, coeffs).unwrap(),
            SliceSeriesFunction::geom(n),
            SliceSeriesFunction::sin(n),
            SliceSeriesFunction::cos(n),
            SliceSeriesFunction::pole(1.0, 2, mv("1 - e12", n)).unwrap(),
        ];
        let h = 1e-5;
        for f in &fns {
            let df = s_derivative(f);
            for u in [0.3, -0.2] {
                let at = |t: f64| eval_series(f, &Paravector::real(n, t)).unwrap();
                let fd = (&at(u + h) - &at(u - h)).scale(0.5 / h);
                let exact = eval_series(&df, &Paravector::real(n, u)).unwrap();
                assert!(close(&fd, &exact, 1e-6 * (1.0 + exact.norm())), "{f:?} at {u}");
            }
        }
        // second derivative of geom is 2/(1-x)^3
        let d2 = s_derivative(&s_derivative(&SliceSeriesFunction::geom(1)));
        let v = eval_series(&d2, &Paravector::real(1, 0.5)).unwrap().scalar_part();
        assert!((v - 16.0).abs() < 1e-12);
    }

    #[test]
    fn cauchy_examples() {
        let one = SliceSeriesFunction::one(2);
        let v = cauchy_eval(&one, &pv("0.3 + 0.2 e2", 2), 1.0, 64).unwrap();
        assert!(close(&v, &Multivector::one(2), 1e-14));

        let cube = SliceSeriesFunction::monomial(3, Multivector::one(1));
        let x = pv("0.2 + 0.4 e1", 1);
        let v = cauchy_eval(&cube, &x, 2.0, 256).unwrap();
        assert!(close(&v, &eval_series(&cube, &x).unwrap(), 1e-10));

        let e = SliceSeriesFunction::exp(2);
        let x = pv("0.5 e2", 2);
        let v = cauchy_eval(&e, &x, 1.5, 256).unwrap();
        assert!(close(&v, &eval_series(&e, &x).unwrap(), 1e-10));
    }

    #[test]
    fn cauchy_rejects_bad_geometry() {
        let e = SliceSeriesFunction::exp(2);
        assert!(matches!(cauchy_eval(&e, &pv("2", 2), 1.0, 64), Err(Error::Contour(_))));
        assert!(matches!(
            cauchy_eval(&SliceSeriesFunction::geom(2), &pv("0.1", 2), 1.2, 64),
            Err(Error::OutsideConvergence { .. })
        ));
    }

    #[test]
    fn cauchy_reproduces_random_series_and_is_radius_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.random_range(1..=3usize);
            let deg = rng.random_range(1..=6usize);
            let coeffs: Vec<Multivector> = (0..=deg)
                .map(|_| {
                    Multivector::from_coeffs(n, (0..1 << n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
                })
                .collect();
            let center = rng.random_range(-0.5..0.5);
            let f = SliceSeriesFunction::polynomial(center, coeffs).unwrap();
            let x = Paravector::new(
                center + rng.random_range(-0.5..0.5),
                (0..n).map(|_| rng.random_range(-0.4..0.4)).collect(),
            );
            let direct = eval_series(&f, &x).unwrap();
            let a = cauchy_eval(&f, &x, 1.5, 256).unwrap();
            let b = cauchy_eval(&f, &x, 2.5, 256).unwrap();
            let scale = 1.0 + direct.norm();
            assert!(close(&a, &direct, 1e-8 * scale));
            assert!(close(&a, &b, 1e-8 * scale));
        }
    }

    #[test]
    fn kernel_examples() {
        let k = kernel_s(&pv("2", 1), &pv("e1", 1)).unwrap();
        assert!(close(&k, &mv("0.4 + 0.2 e1", 1), 1e-15));
        assert!(close(&kernel_series(&pv("2", 1), &pv("e1", 1), 80).unwrap(), &k, 1e-15));

        let s = pv("e1", 2);
        let x = pv("0.5 e2", 2);
        let k = kernel_s(&s, &x).unwrap();
        let expected = mv("-1.3333333333333333 e1 - 0.6666666666666666 e2", 2);
        assert!(close(&k, &expected, 1e-15));
        assert!(close(&kernel_series(&s, &x, 60).unwrap(), &expected, 1e-15));

        let s = pv("1 + 2 e1 - e3", 3);
        let k = kernel_s(&s, &Paravector::real(3, 0.0)).unwrap();
        assert!(close(&k, &s.inv().unwrap().to_multivector(), 1e-15));

        // x on the sphere of s
        assert_eq!(kernel_s(&pv("e1", 2), &pv("e2", 2)), Err(Error::SingularKernel));
    }

    #[test]
    fn directional_gap_examples() {
        let e1 = ImagUnit::basis(2, 1);
        let e2 = ImagUnit::basis(2, 2);
        let s = pv("e1", 2);
        for t in [1e-2, 1e-3, 1e-4] {
            assert!(kernel_directional_gap(&s, &e1, &e2, t).unwrap() > 0.1);
        }
        let s = pv("1 + e2", 2);
        let gaps: Vec<f64> =
            [1e-2, 1e-3, 1e-4].iter().map(|&t| kernel_directional_gap(&s, &e2, &e1, t).unwrap()).collect();
        assert!(gaps.iter().all(|&g| g > 0.1));
        // real s: an isotropic pole, the scaled gap vanishes
        let s = pv("2", 2);
        for t in [1e-2, 1e-3, 1e-4] {
            assert!(kernel_scaled_gap(&s, &e1, &e2, t).unwrap() <= 1e-6);
            let raw = kernel_directional_gap(&s, &e1, &e2, t).unwrap();
            assert!((raw * t - std::f64::consts::SQRT_2).abs() < 1e-6);
        }
        assert!(kernel_scaled_gap(&pv("e1", 2), &e1, &e2, 1e-3).unwrap() > 0.9);
    }

    fn para(n: usize, lim: f64) -> impl Strategy<Value = Paravector> {
        (-lim..lim, proptest::collection::vec(-lim..lim, n)).prop_map(|(a, v)| Paravector::new(a, v))
    }

    proptest! {
        #[test]
        fn kernel_series_matches_closed_form(
            (s, y, rho) in (1usize..=3).prop_flat_map(|n| (para(n, 2.0), para(n, 1.0), 0.0f64..=1.0))
        ) {
            prop_assume!(s.norm() > 0.2 && y.norm() > 1e-3);
            let x = y.scale(rho * 0.5 * s.norm() / y.norm());
            let k = kernel_s(&s, &x).unwrap();
            let series = kernel_series(&s, &x, 60).unwrap();
            prop_assert!((&k - &series).norm() <= 1e-10 * k.norm());
        }

        #[test]
        fn kernel_commutes_in_a_plane(u1 in -2.0f64..2.0, v1 in -2.0f64..2.0, u2 in -2.0f64..2.0, v2 in -2.0f64..2.0) {
            let plane = ImagUnit::new(vec![0.48, 0.6, 0.64]).unwrap();
            let s = plane.embed(Complex64::new(u1, v1));
            let x = plane.embed(Complex64::new(u2, v2));
            prop_assume!((Complex64::new(u1, v1) - Complex64::new(u2, v2)).norm() > 1e-2);
            prop_assume!((Complex64::new(u1, -v1) - Complex64::new(u2, v2)).norm() > 1e-2);
            let k = kernel_s(&s, &x).unwrap();
            let direct = s.sub(&x).inv().unwrap().to_multivector();
            prop_assert!((&k - &direct).norm() <= 1e-9 * (1.0 + direct.norm()));
        }
    }
}
