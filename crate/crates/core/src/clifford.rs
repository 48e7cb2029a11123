//! Arithmetic in the real Clifford algebra R_n (e_i e_j + e_j e_i = -2 δ_ij),
//! paravectors, imaginary units and slice planes.
//!
//! Multivectors are stored densely: 2ⁿ coefficients indexed by blade mask,
//! where bit `j - 1` of the mask marks the presence of `e_j`. Products go
//! through a sign table that is built once per dimension.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest supported number of generators.
pub const MAX_DIM: usize = 8;

/// Relative pivot threshold below which a multivector is treated as singular.
pub const SINGULAR_PIVOT_TOL: f64 = 1e-12;

pub fn check_dim(n: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&n) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(n))
    }
}

/// Basis blade e_A identified by a bitmask over {1..n}.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BladeIndex(pub u16);

impl BladeIndex {
    pub const SCALAR: BladeIndex = BladeIndex(0);

    /// The generator `e_j`, `j` counted from 1.
    pub fn vector(j: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&j), "generator index {j} out of range");
        BladeIndex(1 << (j - 1))
    }

    pub fn mask(self) -> usize {
        self.0 as usize
    }

    pub fn grade(self) -> u32 {
        self.0.count_ones()
    }

    /// Ascending digit string naming the blade: `""` for the scalar, `"12"` for e12.
    pub fn digits(self) -> String {
        (0..MAX_DIM)
            .filter(|j| self.0 & (1 << j) != 0)
            .map(|j| char::from(b'1' + j as u8))
            .collect()
    }

    /// Inverse of [`BladeIndex::digits`]. Digits must be strictly ascending and
    /// at most `n`. `"0"` is accepted as an alias for the scalar blade.
    pub fn from_digits(s: &str, n: usize) -> Result<Self> {
        if s == "0" {
            return Ok(Self::SCALAR);
        }
        let mut mask = 0u16;
        let mut last = 0u32;
        for ch in s.chars() {
            let j = ch
                .to_digit(10)
                .ok_or_else(|| Error::Parse(format!("bad blade name {s:?}")))?;
            if j == 0 || j as usize > n {
                return Err(Error::Parse(format!("blade {s:?} uses e{j}, algebra has n = {n}")));
            }
            if j <= last {
                return Err(Error::Parse(format!("blade digits in {s:?} must be strictly ascending")));
            }
            last = j;
            mask |= 1 << (j - 1);
        }
        Ok(BladeIndex(mask))
    }
}

impl fmt::Display for BladeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == 0 {
            write!(f, "1")
        } else {
            write!(f, "e{}", self.digits())
        }
    }
}

/// e_a · e_b = sign · e_(a xor b).
///
/// The sign counts the transpositions needed to bring the concatenated word
/// into ascending order plus one factor of -1 per contracted pair e_i e_i.
pub fn blade_product(a: BladeIndex, b: BladeIndex) -> (f64, BladeIndex) {
    let (am, bm) = (a.0 as u32, b.0 as u32);
    let mut swaps = 0u32;
    let mut rest = bm;
    while rest != 0 {
        let j = rest.trailing_zeros();
        swaps += (am >> (j + 1)).count_ones();
        rest &= rest - 1;
    }
    let contractions = (am & bm).count_ones();
    let sign = if (swaps + contractions) % 2 == 0 { 1.0 } else { -1.0 };
    (sign, BladeIndex((am ^ bm) as u16))
}

pub(crate) struct SignTable {
    dim: usize,
    signs: Vec<f64>,
}

impl SignTable {
    #[inline]
    pub(crate) fn sign(&self, a: usize, b: usize) -> f64 {
        self.signs[a * self.dim + b]
    }
}

pub(crate) fn sign_table(n: usize) -> &'static SignTable {
    static TABLES: [OnceLock<SignTable>; MAX_DIM + 1] = [const { OnceLock::new() }; MAX_DIM + 1];
    TABLES[n].get_or_init(|| {
        let dim = 1usize << n;
        let mut signs = Vec::with_capacity(dim * dim);
        for a in 0..dim {
            for b in 0..dim {
                signs.push(blade_product(BladeIndex(a as u16), BladeIndex(b as u16)).0);
            }
        }
        SignTable { dim, signs }
    })
}

/// Element of R_n: Σ_A x_A e_A.
#[derive(Clone, Debug, PartialEq)]
pub struct Multivector {
    n: usize,
    coeffs: Vec<f64>,
}

impl Multivector {
    pub fn zero(n: usize) -> Self {
        assert!(n <= MAX_DIM, "algebra dimension {n} exceeds {MAX_DIM}");
        Multivector { n, coeffs: vec![0.0; 1 << n] }
    }

    pub fn scalar(n: usize, value: f64) -> Self {
        let mut m = Self::zero(n);
        m.coeffs[0] = value;
        m
    }

    pub fn one(n: usize) -> Self {
        Self::scalar(n, 1.0)
    }

    pub fn blade(n: usize, blade: BladeIndex, value: f64) -> Self {
        let mut m = Self::zero(n);
        m.coeffs[blade.mask()] = value;
        m
    }

    /// The generator e_j as a multivector.
    pub fn e(n: usize, j: usize) -> Self {
        assert!(j >= 1 && j <= n, "e{j} is not a generator of R_{n}");
        Self::blade(n, BladeIndex::vector(j), 1.0)
    }

    pub fn from_coeffs(n: usize, coeffs: Vec<f64>) -> Result<Self> {
        if n > MAX_DIM {
            return Err(Error::UnsupportedDimension(n));
        }
        if coeffs.len() != 1 << n {
            return Err(Error::DimensionMismatch { expected: 1 << n, found: coeffs.len() });
        }
        Ok(Multivector { n, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn get(&self, blade: BladeIndex) -> f64 {
        self.coeffs[blade.mask()]
    }

    pub fn set(&mut self, blade: BladeIndex, value: f64) {
        self.coeffs[blade.mask()] = value;
    }

    pub fn scalar_part(&self) -> f64 {
        self.coeffs[0]
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// True when every non-scalar coefficient is at most `tol` in magnitude.
    pub fn is_scalar(&self, tol: f64) -> bool {
        self.coeffs[1..].iter().all(|c| c.abs() <= tol)
    }

    pub fn is_paravector(&self, tol: f64) -> bool {
        self.coeffs
            .iter()
            .enumerate()
            .all(|(m, c)| m.count_ones() <= 1 || c.abs() <= tol)
    }

    pub fn scale(&self, k: f64) -> Self {
        Multivector { n: self.n, coeffs: self.coeffs.iter().map(|c| c * k).collect() }
    }

    fn check_same(&self, other: &Multivector) -> Result<()> {
        if self.n != other.n {
            Err(Error::DimensionMismatch { expected: self.n, found: other.n })
        } else {
            Ok(())
        }
    }

    /// Geometric product `self · rhs`.
    pub fn mul(&self, rhs: &Multivector) -> Result<Multivector> {
        self.check_same(rhs)?;
        let table = sign_table(self.n);
        let mut out = vec![0.0; self.coeffs.len()];
        for (a, &x) in self.coeffs.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (b, &y) in rhs.coeffs.iter().enumerate() {
                if y != 0.0 {
                    out[a ^ b] += table.sign(a, b) * x * y;
                }
            }
        }
        Ok(Multivector { n: self.n, coeffs: out })
    }

    /// Matrix of y ↦ self · y in the blade basis.
    pub fn left_matrix(&self) -> DMatrix<f64> {
        let dim = self.coeffs.len();
        let table = sign_table(self.n);
        let mut m = DMatrix::zeros(dim, dim);
        for (a, &x) in self.coeffs.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for b in 0..dim {
                m[(a ^ b, b)] += table.sign(a, b) * x;
            }
        }
        m
    }

    /// Two-sided inverse, computed from the left regular representation.
    ///
    /// Fails with [`Error::SingularElement`] when the smallest LU pivot is
    /// below `1e-12 · |self|`.
    pub fn inverse(&self) -> Result<Multivector> {
        let norm = self.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::SingularElement);
        }
        let lu = self.left_matrix().lu();
        let u = lu.u();
        let min_pivot = u.diagonal().iter().fold(f64::INFINITY, |m, p| m.min(p.abs()));
        if min_pivot < SINGULAR_PIVOT_TOL * norm {
            return Err(Error::SingularElement);
        }
        let mut rhs = DVector::zeros(self.coeffs.len());
        rhs[0] = 1.0;
        let y = lu.solve(&rhs).ok_or(Error::SingularElement)?;
        Ok(Multivector { n: self.n, coeffs: y.iter().copied().collect() })
    }

    /// Parses the text form `"1.5 + 2 e1 - 0.25 e12"`.
    ///
    /// A number immediately followed by `e<digits>` without a space is read
    /// as an exponent (`2e1` is twenty); put a space before blade names.
    pub fn parse(s: &str, n: usize) -> Result<Multivector> {
        check_dim(n)?;
        let mut out = Multivector::zero(n);
        let b = s.as_bytes();
        let mut i = 0usize;
        let mut first = true;
        let skip_ws = |i: &mut usize| {
            while *i < b.len() && b[*i].is_ascii_whitespace() {
                *i += 1;
            }
        };
        loop {
            skip_ws(&mut i);
            if i == b.len() {
                break;
            }
            let mut sign = 1.0;
            match b[i] {
                b'+' => i += 1,
                b'-' => {
                    sign = -1.0;
                    i += 1
                }
                _ if !first => {
                    return Err(Error::Parse(format!("expected '+' or '-' at byte {i} of {s:?}")))
                }
                _ => {}
            }
            skip_ws(&mut i);
            let (coeff, explicit) = match lex_number(&b[i..]) {
                Some((len, value)) => {
                    i += len;
                    (value, true)
                }
                None => (1.0, false),
            };
            skip_ws(&mut i);
            let blade = if i + 1 < b.len() && b[i] == b'e' && b[i + 1].is_ascii_digit() {
                let start = i + 1;
                let mut end = start;
                while end < b.len() && b[end].is_ascii_digit() {
                    end += 1;
                }
                i = end;
                BladeIndex::from_digits(&s[start..end], n)?
            } else if explicit {
                BladeIndex::SCALAR
            } else {
                return Err(Error::Parse(format!("expected a number or blade at byte {i} of {s:?}")));
            };
            out.coeffs[blade.mask()] += sign * coeff;
            first = false;
        }
        if first {
            return Err(Error::Parse("empty multivector".into()));
        }
        Ok(out)
    }
}

/// Lexes a non-negative decimal number (with optional exponent) or
/// `inf`/`NaN` at the start of `b`.
fn lex_number(b: &[u8]) -> Option<(usize, f64)> {
    for word in ["inf", "NaN"] {
        if b.starts_with(word.as_bytes()) {
            return Some((word.len(), word.parse().ok()?));
        }
    }
    let mut i = 0;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    if i < b.len() && b[i] == b'.' {
        i += 1;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
    }
    if i == 0 || (i == 1 && b[0] == b'.') {
        return None;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        let mut j = i + 1;
        if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
            j += 1;
        }
        let digits_start = j;
        while j < b.len() && b[j].is_ascii_digit() {
            j += 1;
        }
        // `e` followed by digits with an explicit sign is always an exponent;
        // `e<digits>` directly after a number is also taken as one.
        if j > digits_start {
            i = j;
        }
    }
    let text = std::str::from_utf8(&b[..i]).ok()?;
    Some((i, text.parse().ok()?))
}

impl fmt::Display for Multivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (mask, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let neg = c.is_sign_negative();
            match (first, neg) {
                (true, true) => write!(f, "-")?,
                (true, false) => {}
                (false, true) => write!(f, " - ")?,
                (false, false) => write!(f, " + ")?,
            }
            write!(f, "{}", c.abs())?;
            if mask != 0 {
                write!(f, " e{}", BladeIndex(mask as u16).digits())?;
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl Add for &Multivector {
    type Output = Multivector;
    fn add(self, rhs: &Multivector) -> Multivector {
        assert_eq!(self.n, rhs.n, "multivector dimension mismatch");
        Multivector {
            n: self.n,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl AddAssign<&Multivector> for Multivector {
    fn add_assign(&mut self, rhs: &Multivector) {
        assert_eq!(self.n, rhs.n, "multivector dimension mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl Sub for &Multivector {
    type Output = Multivector;
    fn sub(self, rhs: &Multivector) -> Multivector {
        assert_eq!(self.n, rhs.n, "multivector dimension mismatch");
        Multivector {
            n: self.n,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Multivector {
    type Output = Multivector;
    /// Panics on dimension mismatch; use [`Multivector::mul`] for a checked product.
    fn mul(self, rhs: &Multivector) -> Multivector {
        Multivector::mul(self, rhs).expect("multivector dimension mismatch")
    }
}

impl Neg for &Multivector {
    type Output = Multivector;
    fn neg(self) -> Multivector {
        self.scale(-1.0)
    }
}

/// Checked geometric product.
pub fn mv_mul(a: &Multivector, b: &Multivector) -> Result<Multivector> {
    a.mul(b)
}

/// x₀ + x₁e₁ + … + x_n e_n.
#[derive(Clone, Debug, PartialEq)]
pub struct Paravector {
    pub x0: f64,
    pub vec: Vec<f64>,
}

impl Paravector {
    pub fn new(x0: f64, vec: Vec<f64>) -> Self {
        assert!(vec.len() <= MAX_DIM, "paravector dimension exceeds {MAX_DIM}");
        Paravector { x0, vec }
    }

    pub fn real(n: usize, x0: f64) -> Self {
        Paravector::new(x0, vec![0.0; n])
    }

    pub fn n(&self) -> usize {
        self.vec.len()
    }

    pub fn re(&self) -> f64 {
        self.x0
    }

    /// |x̲|, the length of the vector part.
    pub fn vec_norm(&self) -> f64 {
        self.vec.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.x0 * self.x0 + self.vec.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_real(&self) -> bool {
        self.vec.iter().all(|&v| v == 0.0)
    }

    pub fn conj(&self) -> Paravector {
        Paravector { x0: self.x0, vec: self.vec.iter().map(|v| -v).collect() }
    }

    /// x⁻¹ = x̄ / |x|².
    pub fn inv(&self) -> Result<Paravector> {
        let q = self.norm_sq();
        if q == 0.0 || !q.is_finite() {
            return Err(Error::SingularElement);
        }
        let c = self.conj();
        Ok(Paravector { x0: c.x0 / q, vec: c.vec.iter().map(|v| v / q).collect() })
    }

    pub fn add(&self, other: &Paravector) -> Paravector {
        assert_eq!(self.n(), other.n(), "paravector dimension mismatch");
        Paravector {
            x0: self.x0 + other.x0,
            vec: self.vec.iter().zip(&other.vec).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Paravector) -> Paravector {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, k: f64) -> Paravector {
        Paravector { x0: self.x0 * k, vec: self.vec.iter().map(|v| v * k).collect() }
    }

    pub fn to_multivector(&self) -> Multivector {
        let n = self.n();
        let mut m = Multivector::scalar(n, self.x0);
        for (j, &v) in self.vec.iter().enumerate() {
            m.coeffs[1 << j] = v;
        }
        m
    }

    /// Reads the grade-0 and grade-1 part; fails if higher grades exceed `tol`.
    pub fn from_multivector(m: &Multivector, tol: f64) -> Result<Paravector> {
        if !m.is_paravector(tol) {
            return Err(Error::Invalid(format!("{m} is not a paravector")));
        }
        Ok(Paravector { x0: m.coeffs[0], vec: (0..m.n).map(|j| m.coeffs[1 << j]).collect() })
    }

    pub fn parse(s: &str, n: usize) -> Result<Paravector> {
        Paravector::from_multivector(&Multivector::parse(s, n)?, 0.0)
    }

    /// The unit I_x = x̲/|x̲|; e₁ for real x.
    pub fn plane(&self) -> ImagUnit {
        let r = self.vec_norm();
        if r == 0.0 {
            ImagUnit::basis(self.n().max(1), 1)
        } else {
            ImagUnit { dirs: self.vec.iter().map(|v| v / r).collect() }
        }
    }

    /// Coordinates u + iv of this point in the plane L_I of `plane`; the
    /// vector part is assumed parallel to I (only its projection is kept).
    pub fn in_plane(&self, plane: &ImagUnit) -> Complex64 {
        let v: f64 = self.vec.iter().zip(&plane.dirs).map(|(a, b)| a * b).sum();
        Complex64::new(self.x0, v)
    }
}

impl fmt::Display for Paravector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_multivector().fmt(f)
    }
}

pub fn para_conj(x: &Paravector) -> Paravector {
    x.conj()
}

pub fn para_inv(x: &Paravector) -> Result<Paravector> {
    x.inv()
}

/// Element of 𝕊: a unit 1-vector, I² = -1.
#[derive(Clone, Debug, PartialEq)]
pub struct ImagUnit {
    dirs: Vec<f64>,
}

impl ImagUnit {
    /// Normalizes `dirs`; fails on a zero or non-finite direction.
    pub fn new(dirs: Vec<f64>) -> Result<ImagUnit> {
        check_dim(dirs.len())?;
        let r = dirs.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r == 0.0 || !r.is_finite() {
            return Err(Error::Invalid("imaginary unit direction must be nonzero".into()));
        }
        Ok(ImagUnit { dirs: dirs.iter().map(|v| v / r).collect() })
    }

    /// e_j in R_n.
    pub fn basis(n: usize, j: usize) -> ImagUnit {
        assert!(j >= 1 && j <= n, "e{j} is not a generator of R_{n}");
        let mut dirs = vec![0.0; n];
        dirs[j - 1] = 1.0;
        ImagUnit { dirs }
    }

    pub fn n(&self) -> usize {
        self.dirs.len()
    }

    pub fn dirs(&self) -> &[f64] {
        &self.dirs
    }

    pub fn to_paravector(&self) -> Paravector {
        Paravector::new(0.0, self.dirs.clone())
    }

    pub fn to_multivector(&self) -> Multivector {
        self.to_paravector().to_multivector()
    }

    /// z = u + iv ↦ u + vI.
    pub fn embed(&self, z: Complex64) -> Paravector {
        Paravector::new(z.re, self.dirs.iter().map(|d| d * z.im).collect())
    }
}

/// The point u + vI of the slice plane L_I.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanePoint {
    pub u: f64,
    pub v: f64,
    pub plane: ImagUnit,
}

impl PlanePoint {
    pub fn embed(&self) -> Paravector {
        self.plane.embed(Complex64::new(self.u, self.v))
    }
}

pub fn plane_embed(p: &PlanePoint) -> Paravector {
    p.embed()
}

pub fn plane_of(x: &Paravector) -> ImagUnit {
    x.plane()
}
