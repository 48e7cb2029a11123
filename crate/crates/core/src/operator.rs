//! Operators with Clifford coefficients acting on V_n = ℝᵈ ⊗ R_n.
//!
//! A [`CliffordMatrix`] T = Σ_A T_A e_A is stored as its blade family of
//! real d×d matrices and acts on module vectors by
//! T(v) = Σ_{A,B} T_A(v_B) e_A e_B. Inversion, norms and eigenvalues go
//! through the real regular representation, whose basis index is
//! `blade_mask * d + component`.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};

use crate::clifford::{check_dim, sign_table, BladeIndex, Multivector};
use crate::error::{Error, Result};

/// Relative smallest-singular-value threshold for invertibility.
pub const SINGULAR_TOL: f64 = 1e-12;

/// d×d matrix with entries in R_n, stored blade-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CliffordMatrix {
    n: usize,
    d: usize,
    blades: Vec<DMatrix<f64>>,
}

/// Real matrix of the action of a [`CliffordMatrix`] on V_n.
#[derive(Clone, Debug, PartialEq)]
pub struct RealRep {
    pub n: usize,
    pub d: usize,
    pub matrix: DMatrix<f64>,
}

impl CliffordMatrix {
    pub fn zeros(n: usize, d: usize) -> Self {
        CliffordMatrix { n, d, blades: vec![DMatrix::zeros(d, d); 1 << n] }
    }

    pub fn identity(n: usize, d: usize) -> Self {
        let mut m = Self::zeros(n, d);
        m.blades[0] = DMatrix::identity(d, d);
        m
    }

    /// a·I for a Clifford constant `a`.
    pub fn scalar_identity(a: &Multivector, d: usize) -> Self {
        CliffordMatrix {
            n: a.n(),
            d,
            blades: a.coeffs().iter().map(|&c| DMatrix::identity(d, d) * c).collect(),
        }
    }

    pub fn from_blades(n: usize, d: usize, blades: Vec<DMatrix<f64>>) -> Result<Self> {
        check_dim(n)?;
        if blades.len() != 1 << n {
            return Err(Error::DimensionMismatch { expected: 1 << n, found: blades.len() });
        }
        if let Some(bad) = blades.iter().find(|b| b.nrows() != d || b.ncols() != d) {
            return Err(Error::Invalid(format!(
                "blade matrix is {}x{}, expected {d}x{d}",
                bad.nrows(),
                bad.ncols()
            )));
        }
        Ok(CliffordMatrix { n, d, blades })
    }

    /// Embeds a real matrix as the scalar-blade operator.
    pub fn from_real(n: usize, m: DMatrix<f64>) -> Result<Self> {
        check_dim(n)?;
        if !m.is_square() {
            return Err(Error::Invalid("matrix must be square".into()));
        }
        let d = m.nrows();
        let mut out = Self::zeros(n, d);
        out.blades[0] = m;
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn blade(&self, b: BladeIndex) -> &DMatrix<f64> {
        &self.blades[b.mask()]
    }

    pub fn blade_mut(&mut self, b: BladeIndex) -> &mut DMatrix<f64> {
        &mut self.blades[b.mask()]
    }

    pub fn blades(&self) -> &[DMatrix<f64>] {
        &self.blades
    }

    pub fn entry(&self, i: usize, j: usize) -> Multivector {
        Multivector::from_coeffs(self.n, self.blades.iter().map(|b| b[(i, j)]).collect())
            .expect("blade count matches n")
    }

    pub fn scale(&self, k: f64) -> Self {
        CliffordMatrix { n: self.n, d: self.d, blades: self.blades.iter().map(|b| b * k).collect() }
    }

    /// True when only grade-0 and grade-1 blades exceed `tol`.
    pub fn is_paravector(&self, tol: f64) -> bool {
        self.blades
            .iter()
            .enumerate()
            .all(|(m, b)| m.count_ones() <= 1 || b.amax() <= tol)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        if self.d != other.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: other.d });
        }
        Ok(())
    }

    /// Composition self ∘ other: (ST)_C = Σ_{A⊕B=C} sign(A,B) S_A T_B.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let table = sign_table(self.n);
        let mut out = Self::zeros(self.n, self.d);
        for (a, sa) in self.blades.iter().enumerate() {
            if sa.iter().all(|&x| x == 0.0) {
                continue;
            }
            for (b, tb) in other.blades.iter().enumerate() {
                if tb.iter().all(|&x| x == 0.0) {
                    continue;
                }
                out.blades[a ^ b].gemm(table.sign(a, b), sa, tb, 1.0);
            }
        }
        Ok(out)
    }

    /// Entry-wise right multiplication by a Clifford constant (T·a).
    pub fn mul_right(&self, a: &Multivector) -> Result<Self> {
        if a.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: a.n() });
        }
        let table = sign_table(self.n);
        let mut out = Self::zeros(self.n, self.d);
        for (m, tm) in self.blades.iter().enumerate() {
            for (b, &ab) in a.coeffs().iter().enumerate() {
                if ab != 0.0 {
                    out.blades[m ^ b] += tm * (table.sign(m, b) * ab);
                }
            }
        }
        Ok(out)
    }

    /// Entry-wise left multiplication by a Clifford constant (a·T).
    pub fn mul_left(&self, a: &Multivector) -> Result<Self> {
        if a.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: a.n() });
        }
        let table = sign_table(self.n);
        let mut out = Self::zeros(self.n, self.d);
        for (m, tm) in self.blades.iter().enumerate() {
            for (b, &ab) in a.coeffs().iter().enumerate() {
                if ab != 0.0 {
                    out.blades[b ^ m] += tm * (table.sign(b, m) * ab);
                }
            }
        }
        Ok(out)
    }

    pub fn pow(&self, m: usize) -> Self {
        let mut out = Self::identity(self.n, self.d);
        for _ in 0..m {
            out = out.compose(self).expect("same shape");
        }
        out
    }

    pub fn rep(&self) -> RealRep {
        let (n, d) = (self.n, self.d);
        let dim = 1usize << n;
        let table = sign_table(n);
        let mut r = DMatrix::zeros(dim * d, dim * d);
        for (a, ta) in self.blades.iter().enumerate() {
            if ta.iter().all(|&x| x == 0.0) {
                continue;
            }
            for b in 0..dim {
                let c = a ^ b;
                let mut block = r.view_mut((c * d, b * d), (d, d));
                block += ta * table.sign(a, b);
            }
        }
        RealRep { n, d, matrix: r }
    }

    /// Reads a Clifford matrix back from its representation: the action on
    /// scalar-blade basis vectors gives the blade family directly.
    pub fn from_rep(rep: &RealRep) -> Result<Self> {
        let (n, d) = (rep.n, rep.d);
        let size = (1usize << n) * d;
        if rep.matrix.nrows() != size || rep.matrix.ncols() != size {
            return Err(Error::DimensionMismatch { expected: size, found: rep.matrix.nrows() });
        }
        let blades = (0..1usize << n)
            .map(|a| rep.matrix.view((a * d, 0), (d, d)).into_owned())
            .collect();
        Ok(CliffordMatrix { n, d, blades })
    }

    /// Two-sided inverse. Fails when the smallest singular value of the
    /// representation is below `1e-12 · ‖rep‖₂`.
    pub fn invert(&self) -> Result<Self> {
        let rep = self.rep();
        let sv = rep.matrix.singular_values();
        let smax = sv.max();
        let smin = sv.min();
        if !(smax > 0.0) || smin <= SINGULAR_TOL * smax {
            return Err(Error::SingularOperator { sigma_min: smin, norm: smax });
        }
        let inv = rep.matrix.try_inverse().ok_or(Error::SingularOperator { sigma_min: smin, norm: smax })?;
        Self::from_rep(&RealRep { n: self.n, d: self.d, matrix: inv })
    }

    /// sqrt(Σ_A ‖T_A‖₂²).
    pub fn paper_norm(&self) -> f64 {
        self.blades
            .iter()
            .map(|b| {
                let s = spectral_norm(b);
                s * s
            })
            .sum::<f64>()
            .sqrt()
    }

    /// ‖rep(T)‖₂, the operator norm on V_n with its Euclidean coordinate norm.
    pub fn rep_norm(&self) -> f64 {
        spectral_norm(&self.rep().matrix)
    }

    pub fn apply(&self, v: &ModuleVector) -> Result<ModuleVector> {
        if v.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: v.n });
        }
        if v.d() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: v.d() });
        }
        let dim = 1usize << self.n;
        let table = sign_table(self.n);
        let parts: Vec<DVector<f64>> = (0..dim)
            .map(|b| DVector::from_iterator(self.d, v.entries.iter().map(|e| e.coeffs()[b])))
            .collect();
        let mut out = vec![DVector::zeros(self.d); dim];
        for (a, ta) in self.blades.iter().enumerate() {
            for (b, vb) in parts.iter().enumerate() {
                out[a ^ b].gemv(table.sign(a, b), ta, vb, 1.0);
            }
        }
        let entries = (0..self.d)
            .map(|i| Multivector::from_coeffs(self.n, out.iter().map(|o| o[i]).collect()).expect("n checked"))
            .collect();
        Ok(ModuleVector { n: self.n, entries })
    }
}

impl AsRef<CliffordMatrix> for CliffordMatrix {
    fn as_ref(&self) -> &CliffordMatrix {
        self
    }
}

impl Add for &CliffordMatrix {
    type Output = CliffordMatrix;
    fn add(self, rhs: &CliffordMatrix) -> CliffordMatrix {
        self.check_same(rhs).expect("operator shape mismatch");
        CliffordMatrix {
            n: self.n,
            d: self.d,
            blades: self.blades.iter().zip(&rhs.blades).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CliffordMatrix {
    type Output = CliffordMatrix;
    fn sub(self, rhs: &CliffordMatrix) -> CliffordMatrix {
        self.check_same(rhs).expect("operator shape mismatch");
        CliffordMatrix {
            n: self.n,
            d: self.d,
            blades: self.blades.iter().zip(&rhs.blades).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &CliffordMatrix {
    type Output = CliffordMatrix;
    fn neg(self) -> CliffordMatrix {
        self.scale(-1.0)
    }
}

impl Mul for &CliffordMatrix {
    type Output = CliffordMatrix;
    /// Composition; panics on shape mismatch.
    fn mul(self, rhs: &CliffordMatrix) -> CliffordMatrix {
        self.compose(rhs).expect("operator shape mismatch")
    }
}

pub(crate) fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// T = T₀ + Σ_j e_j T_j with real d×d components.
#[derive(Clone, Debug, PartialEq)]
pub struct ParavectorOperator {
    components: Vec<DMatrix<f64>>,
    matrix: CliffordMatrix,
}

impl ParavectorOperator {
    /// `components[0]` is T₀, `components[j]` multiplies e_j.
    pub fn new(components: Vec<DMatrix<f64>>) -> Result<Self> {
        if components.len() < 2 {
            return Err(Error::Invalid("a paravector operator needs T0 and at least one T_j".into()));
        }
        let n = components.len() - 1;
        check_dim(n)?;
        let d = components[0].nrows();
        if d == 0 {
            return Err(Error::Invalid("module dimension must be positive".into()));
        }
        if let Some(bad) = components.iter().find(|c| c.nrows() != d || c.ncols() != d) {
            return Err(Error::Invalid(format!(
                "component is {}x{}, expected {d}x{d}",
                bad.nrows(),
                bad.ncols()
            )));
        }
        let mut matrix = CliffordMatrix::zeros(n, d);
        for (j, c) in components.iter().enumerate() {
            let blade = if j == 0 { BladeIndex::SCALAR } else { BladeIndex::vector(j) };
            *matrix.blade_mut(blade) = c.clone();
        }
        Ok(ParavectorOperator { components, matrix })
    }

    pub fn from_clifford(m: &CliffordMatrix, tol: f64) -> Result<Self> {
        if !m.is_paravector(tol) {
            return Err(Error::Invalid("operator has components of grade above one".into()));
        }
        let mut comps = vec![m.blade(BladeIndex::SCALAR).clone()];
        comps.extend((1..=m.n()).map(|j| m.blade(BladeIndex::vector(j)).clone()));
        Self::new(comps)
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        Self::new(vec![DMatrix::zeros(d, d); n + 1]).expect("valid shape")
    }

    pub fn n(&self) -> usize {
        self.matrix.n
    }

    pub fn d(&self) -> usize {
        self.matrix.d
    }

    pub fn components(&self) -> &[DMatrix<f64>] {
        &self.components
    }

    pub fn as_clifford(&self) -> &CliffordMatrix {
        &self.matrix
    }

    pub fn into_clifford(self) -> CliffordMatrix {
        self.matrix
    }
}

impl AsRef<CliffordMatrix> for ParavectorOperator {
    fn as_ref(&self) -> &CliffordMatrix {
        &self.matrix
    }
}

/// Element of V_n: d entries in R_n.
#[derive(Clone, Debug, PartialEq)]
pub struct ModuleVector {
    n: usize,
    entries: Vec<Multivector>,
}

impl ModuleVector {
    pub fn new(entries: Vec<Multivector>) -> Result<Self> {
        let n = entries
            .first()
            .map(Multivector::n)
            .ok_or_else(|| Error::Invalid("module vector needs at least one entry".into()))?;
        if let Some(bad) = entries.iter().find(|e| e.n() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: bad.n() });
        }
        Ok(ModuleVector { n, entries })
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        ModuleVector { n, entries: vec![Multivector::zero(n); d] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Multivector] {
        &self.entries
    }

    /// Coordinates in the blade-major basis (index `mask * d + i`).
    pub fn coords(&self) -> DVector<f64> {
        let d = self.d();
        let dim = 1usize << self.n;
        DVector::from_fn(dim * d, |k, _| self.entries[k % d].coeffs()[k / d])
    }

    pub fn from_coords(n: usize, d: usize, coords: &DVector<f64>) -> Result<Self> {
        let dim = 1usize << n;
        if coords.len() != dim * d {
            return Err(Error::DimensionMismatch { expected: dim * d, found: coords.len() });
        }
        let entries = (0..d)
            .map(|i| Multivector::from_coeffs(n, (0..dim).map(|b| coords[b * d + i]).collect()))
            .collect::<Result<_>>()?;
        Ok(ModuleVector { n, entries })
    }

    /// sqrt(Σ_B ‖v_B‖²).
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|e| e.norm().powi(2)).sum::<f64>().sqrt()
    }
}

pub fn real_rep(t: &CliffordMatrix) -> RealRep {
    t.rep()
}

pub fn apply(t: &CliffordMatrix, v: &ModuleVector) -> Result<ModuleVector> {
    t.apply(v)
}

pub fn invert(t: &CliffordMatrix) -> Result<CliffordMatrix> {
    t.invert()
}

/// (paper_norm, rep_norm).
pub fn op_norms(t: &CliffordMatrix) -> (f64, f64) {
    (t.paper_norm(), t.rep_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_clifford(rng: &mut ChaCha8Rng, n: usize, d: usize) -> CliffordMatrix {
        let blades = (0..1 << n).map(|_| DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0))).collect();
        CliffordMatrix::from_blades(n, d, blades).unwrap()
    }

    fn random_vector(rng: &mut ChaCha8Rng, n: usize, d: usize) -> ModuleVector {
        ModuleVector::from_coords(n, d, &DVector::from_fn((1 << n) * d, |_, _| rng.random_range(-1.0..1.0)))
            .unwrap()
    }

    fn pauli() -> ParavectorOperator {
        ParavectorOperator::new(vec![
            DMatrix::zeros(2, 2),
            dmatrix![1.0, 0.0; 0.0, -1.0],
            dmatrix![0.0, 1.0; 1.0, 0.0],
        ])
        .unwrap()
    }

    /// Builds rep(T) column by column from `apply` on basis vectors.
    fn rep_by_apply(t: &CliffordMatrix) -> DMatrix<f64> {
        let size = (1 << t.n()) * t.d();
        let mut m = DMatrix::zeros(size, size);
        for k in 0..size {
            let mut e = DVector::zeros(size);
            e[k] = 1.0;
            let v = ModuleVector::from_coords(t.n(), t.d(), &e).unwrap();
            m.set_column(k, &t.apply(&v).unwrap().coords());
        }
        m
    }

    #[test]
    fn rep_examples() {
        assert_eq!(CliffordMatrix::identity(2, 3).rep().matrix, DMatrix::identity(12, 12));
        let mut e1 = CliffordMatrix::zeros(1, 1);
        *e1.blade_mut(BladeIndex::vector(1)) = dmatrix![1.0];
        assert_eq!(e1.rep().matrix, dmatrix![0.0, -1.0; 1.0, 0.0]);
    }

    #[test]
    fn rep_is_a_homomorphism_and_matches_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (n, d) in [(1, 1), (2, 2), (3, 2), (2, 3), (4, 1)] {
            let s = random_clifford(&mut rng, n, d);
            let t = random_clifford(&mut rng, n, d);
            let st = s.compose(&t).unwrap();
            assert!((st.rep().matrix - s.rep().matrix * t.rep().matrix).amax() <= 1e-12);
            assert!(((&s + &t).rep().matrix - (s.rep().matrix + t.rep().matrix)).amax() <= 1e-12);
            assert!((rep_by_apply(&t) - t.rep().matrix).amax() <= 1e-13);
            let v = random_vector(&mut rng, n, d);
            let direct = t.apply(&v).unwrap().coords();
            assert!((direct - t.rep().matrix * v.coords()).amax() <= 1e-13);
            assert_eq!(CliffordMatrix::from_rep(&t.rep()).unwrap(), t);
            let mut p = CliffordMatrix::identity(n, d).rep().matrix;
            for m in 0..=6 {
                assert!((t.pow(m).rep().matrix - &p).amax() <= 1e-10 * (1.0 + p.amax()));
                p = &p * t.rep().matrix;
            }
        }
    }

    #[test]
    fn apply_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let v = random_vector(&mut rng, 2, 3);
        assert_eq!(CliffordMatrix::identity(2, 3).apply(&v).unwrap(), v);
        let t = CliffordMatrix::scalar_identity(&Multivector::e(2, 1), 2);
        let v = ModuleVector::new(vec![Multivector::one(2), Multivector::zero(2)]).unwrap();
        let out = t.apply(&v).unwrap();
        assert_eq!(out.entries()[0], Multivector::e(2, 1));
        assert!(out.entries()[1].is_zero());
        assert!(t.apply(&ModuleVector::zeros(2, 3)).is_err());
    }

    #[test]
    fn apply_bounded_by_rep_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let t = random_clifford(&mut rng, 3, 2);
            let v = random_vector(&mut rng, 3, 2);
            assert!(t.apply(&v).unwrap().norm() <= t.rep_norm() * v.norm() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn invert_examples() {
        let two = CliffordMatrix::identity(2, 2).scale(2.0);
        assert!((two.invert().unwrap().rep().matrix - CliffordMatrix::identity(2, 2).scale(0.5).rep().matrix).amax() < 1e-15);
        let e1 = CliffordMatrix::scalar_identity(&Multivector::e(2, 1), 1);
        let inv = e1.invert().unwrap();
        assert!((inv.rep().matrix - CliffordMatrix::scalar_identity(&Multivector::e(2, 1).scale(-1.0), 1).rep().matrix).amax() < 1e-15);
        assert!(matches!(pauli().as_clifford().invert(), Err(Error::SingularOperator { .. })));

        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut tested = 0;
        while tested < 10 {
            let t = random_clifford(&mut rng, 2, 3);
            let sv = t.rep().matrix.singular_values();
            if sv.min() < 0.1 * sv.max() {
                continue;
            }
            tested += 1;
            let ti = t.invert().unwrap();
            let id = CliffordMatrix::identity(2, 3);
            assert!((&t.compose(&ti).unwrap() - &id).rep_norm() <= 1e-10);
            assert!((&ti.compose(&t).unwrap() - &id).rep_norm() <= 1e-10);
        }
    }

    #[test]
    fn norm_examples() {
        let (p, r) = op_norms(&CliffordMatrix::identity(2, 2));
        assert!((p - 1.0).abs() < 1e-15 && (r - 1.0).abs() < 1e-15);
        let e1 = CliffordMatrix::scalar_identity(&Multivector::e(2, 1), 2);
        let (p, r) = op_norms(&e1);
        assert!((p - 1.0).abs() < 1e-15 && (r - 1.0).abs() < 1e-14);
        let (p, r) = op_norms(pauli().as_clifford());
        assert!((r - 2.0).abs() < 1e-14);
        assert!((p - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn left_and_right_scalars() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let t = random_clifford(&mut rng, 3, 2);
        let a = Multivector::parse("0.5 - e2 + 2 e13", 3).unwrap();
        let ai = CliffordMatrix::scalar_identity(&a, 2);
        assert!((&t.mul_right(&a).unwrap() - &t.compose(&ai).unwrap()).rep_norm() < 1e-13);
        assert!((&t.mul_left(&a).unwrap() - &ai.compose(&t).unwrap()).rep_norm() < 1e-13);
    }

    #[test]
    fn paravector_operator_shape_checks() {
        assert!(ParavectorOperator::new(vec![DMatrix::zeros(2, 2), DMatrix::zeros(3, 3)]).is_err());
        assert!(ParavectorOperator::new(vec![DMatrix::zeros(2, 2)]).is_err());
        let p = pauli();
        assert_eq!((p.n(), p.d()), (2, 2));
        assert_eq!(ParavectorOperator::from_clifford(p.as_clifford(), 0.0).unwrap(), p);
        let sq = p.as_clifford().pow(2);
        assert!(!sq.is_paravector(1e-12));
        assert!(ParavectorOperator::from_clifford(&sq, 1e-12).is_err());
    }
}
