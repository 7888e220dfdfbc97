//! Finite-dimensional C*-algebras `M_{n_1} ⊕ … ⊕ M_{n_m}` and the matrix
//! predicates the rest of the crate is built on.
//!
//! Elements are stored as an explicit list of square blocks. The block index
//! set doubles as the primitive ideal space of the algebra, so nothing in here
//! ever flattens an element unless a caller asks for the dense form.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::encoding::AlgebraElementJson;
use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

pub const DEFAULT_EPS: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Numerical equality threshold: two operators are equal when the operator
/// norm of their difference is at most `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub eps: f64,
}

impl Tolerance {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::InvalidTolerance(eps));
        }
        Ok(Self { eps })
    }

    pub fn holds(&self, residual: f64) -> bool {
        residual <= self.eps
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { eps: DEFAULT_EPS }
    }
}

/// Largest singular value.
pub fn op_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Smallest eigenvalue of the Hermitian part `(m + m*) / 2`.
pub fn min_hermitian_eigenvalue(m: &ComplexMatrix) -> f64 {
    let h = (m + m.adjoint()).scale(0.5);
    h.symmetric_eigenvalues().min()
}

pub fn ensure_finite(m: &ComplexMatrix, what: &str) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

pub fn partial_isometry_residual(m: &ComplexMatrix) -> f64 {
    op_norm(&(m * m.adjoint() * m - m))
}

/// `M M* M = M` up to `tol`.
pub fn is_partial_isometry(m: &ComplexMatrix, tol: Tolerance) -> bool {
    m.is_square() && tol.holds(partial_isometry_residual(m))
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

/// Outcome of comparing the commutation criterion for products of partial
/// isometries against a direct test of the product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalmosWallen {
    pub predicted: bool,
    pub actual: bool,
    pub commutator_norm: f64,
    pub product_residual: f64,
}

/// `ST` is a partial isometry iff `S*S` commutes with `TT*`. Returns both sides.
pub fn halmos_wallen_check(
    s: &ComplexMatrix,
    t: &ComplexMatrix,
    tol: Tolerance,
) -> Result<HalmosWallen> {
    if !s.is_square() || !t.is_square() || s.nrows() != t.nrows() {
        return Err(Error::Shape(format!(
            "need equal square matrices, got {}x{} and {}x{}",
            s.nrows(),
            s.ncols(),
            t.nrows(),
            t.ncols()
        )));
    }
    for (m, what) in [(s, "S"), (t, "T")] {
        let residual = partial_isometry_residual(m);
        if !tol.holds(residual) {
            return Err(Error::NotPartialIsometry {
                what: what.to_string(),
                residual,
            });
        }
    }
    let commutator_norm = op_norm(&commutator(&(s.adjoint() * s), &(t * t.adjoint())));
    let product_residual = partial_isometry_residual(&(s * t));
    Ok(HalmosWallen {
        predicted: tol.holds(commutator_norm),
        actual: tol.holds(product_residual),
        commutator_norm,
        product_residual,
    })
}

/// The algebra `⊕ M_{n_i}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FiniteCStarAlgebra {
    block_dims: Vec<usize>,
}

impl FiniteCStarAlgebra {
    pub fn new(block_dims: Vec<usize>) -> Result<Self> {
        if block_dims.is_empty() {
            return Err(Error::InvalidAlgebra("no blocks".into()));
        }
        if block_dims.iter().any(|&n| n == 0) {
            return Err(Error::InvalidAlgebra(format!(
                "block sizes must be positive: {block_dims:?}"
            )));
        }
        Ok(Self { block_dims })
    }

    /// `ℂⁿ` realised as `n` one-dimensional blocks.
    pub fn diagonal(n: usize) -> Result<Self> {
        Self::new(vec![1; n])
    }

    pub fn full_matrix(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn num_blocks(&self) -> usize {
        self.block_dims.len()
    }

    /// Vector-space dimension `Σ nᵢ²`.
    pub fn dim(&self) -> usize {
        self.block_dims.iter().map(|n| n * n).sum()
    }

    /// Size `Σ nᵢ` of the defining block-diagonal representation.
    pub fn hilbert_dim(&self) -> usize {
        self.block_dims.iter().sum()
    }

    /// Row/column offset of each block inside the dense representation.
    pub fn block_offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.block_dims
            .iter()
            .map(|n| {
                let off = acc;
                acc += n;
                off
            })
            .collect()
    }

    /// Offset of each block inside the coordinate vector.
    pub fn coordinate_offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.block_dims
            .iter()
            .map(|n| {
                let off = acc;
                acc += n * n;
                off
            })
            .collect()
    }

    pub fn one(&self) -> AlgebraElement {
        AlgebraElement {
            blocks: self
                .block_dims
                .iter()
                .map(|&n| ComplexMatrix::identity(n, n))
                .collect(),
        }
    }

    pub fn zero(&self) -> AlgebraElement {
        AlgebraElement {
            blocks: self
                .block_dims
                .iter()
                .map(|&n| ComplexMatrix::zeros(n, n))
                .collect(),
        }
    }

    /// Matrix unit `e_{ij}` of block `block`.
    pub fn matrix_unit(&self, block: usize, i: usize, j: usize) -> AlgebraElement {
        let mut e = self.zero();
        e.blocks[block][(i, j)] = ONE;
        e
    }

    /// Unit of block `block` (a central projection).
    pub fn block_unit(&self, block: usize) -> AlgebraElement {
        let mut e = self.zero();
        let n = self.block_dims[block];
        e.blocks[block] = ComplexMatrix::identity(n, n);
        e
    }

    /// Matrix units ordered by block, then row-major inside each block. This is
    /// the basis behind [`AlgebraElement::to_vector`].
    pub fn basis(&self) -> Vec<AlgebraElement> {
        let mut out = Vec::with_capacity(self.dim());
        for (k, &n) in self.block_dims.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    out.push(self.matrix_unit(k, i, j));
                }
            }
        }
        out
    }

    pub fn element(&self, blocks: Vec<ComplexMatrix>) -> Result<AlgebraElement> {
        if blocks.len() != self.block_dims.len() {
            return Err(Error::Shape(format!(
                "expected {} blocks, got {}",
                self.block_dims.len(),
                blocks.len()
            )));
        }
        for (k, (b, &n)) in blocks.iter().zip(&self.block_dims).enumerate() {
            if b.nrows() != n || b.ncols() != n {
                return Err(Error::Shape(format!(
                    "block {k} must be {n}x{n}, got {}x{}",
                    b.nrows(),
                    b.ncols()
                )));
            }
            ensure_finite(b, &format!("block {k}"))?;
        }
        Ok(AlgebraElement { blocks })
    }

    /// Diagonal element of `ℂⁿ`-type algebras from its entries.
    pub fn diagonal_element(&self, entries: &[Complex64]) -> Result<AlgebraElement> {
        if self.block_dims.iter().any(|&n| n != 1) || entries.len() != self.block_dims.len() {
            return Err(Error::Shape(
                "diagonal_element needs an algebra of 1x1 blocks".into(),
            ));
        }
        self.element(
            entries
                .iter()
                .map(|&z| ComplexMatrix::from_element(1, 1, z))
                .collect(),
        )
    }

    pub fn from_vector(&self, v: &DVector<Complex64>) -> Result<AlgebraElement> {
        if v.len() != self.dim() {
            return Err(Error::Shape(format!(
                "coordinate vector has length {}, algebra dimension is {}",
                v.len(),
                self.dim()
            )));
        }
        let mut blocks = Vec::with_capacity(self.num_blocks());
        let mut idx = 0;
        for &n in &self.block_dims {
            blocks.push(ComplexMatrix::from_fn(n, n, |i, j| v[idx + i * n + j]));
            idx += n * n;
        }
        Ok(AlgebraElement { blocks })
    }

    /// Cuts the diagonal blocks out of a dense `Σnᵢ × Σnᵢ` matrix.
    pub fn from_dense(&self, m: &ComplexMatrix) -> Result<AlgebraElement> {
        let h = self.hilbert_dim();
        if m.nrows() != h || m.ncols() != h {
            return Err(Error::Shape(format!(
                "dense matrix must be {h}x{h}, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let blocks = self
            .block_offsets()
            .iter()
            .zip(&self.block_dims)
            .map(|(&off, &n)| m.view((off, off), (n, n)).into_owned())
            .collect();
        Ok(AlgebraElement { blocks })
    }

    /// Norm of the part of a dense matrix lying outside the diagonal blocks.
    pub fn off_block_norm(&self, m: &ComplexMatrix) -> f64 {
        let mut off = m.clone();
        for (&o, &n) in self.block_offsets().iter().zip(&self.block_dims) {
            off.view_mut((o, o), (n, n)).fill(ZERO);
        }
        op_norm(&off)
    }

    pub fn check_same(&self, other: &FiniteCStarAlgebra) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::AlgebraMismatch {
                left: self.block_dims.clone(),
                right: other.block_dims.clone(),
            })
        }
    }

    /// Gaussian element rescaled to operator norm one.
    pub fn random_element<R: RngCore + ?Sized>(&self, rng: &mut R) -> AlgebraElement {
        let blocks = self
            .block_dims
            .iter()
            .map(|&n| random_matrix(n, n, rng))
            .collect();
        let a = AlgebraElement { blocks };
        let norm = a.norm();
        if norm > 0.0 {
            a.scale(Complex64::new(1.0 / norm, 0.0))
        } else {
            a
        }
    }

    /// `b*b` for a random `b`, normalised to norm one.
    pub fn random_positive<R: RngCore + ?Sized>(&self, rng: &mut R) -> AlgebraElement {
        let b = self.random_element(rng);
        b.adjoint().mul(&b)
    }
}

impl fmt::Display for FiniteCStarAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.block_dims.iter().map(|n| format!("M{n}")).collect();
        write!(f, "{}", parts.join(" ⊕ "))
    }
}

/// An element of a [`FiniteCStarAlgebra`], one square matrix per block.
///
/// The arithmetic methods panic on mismatched block structure, in the same
/// way `nalgebra` does on mismatched shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AlgebraElementJson", into = "AlgebraElementJson")]
pub struct AlgebraElement {
    blocks: Vec<ComplexMatrix>,
}

impl AlgebraElement {
    pub fn blocks(&self) -> &[ComplexMatrix] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &ComplexMatrix {
        &self.blocks[i]
    }

    pub fn into_blocks(self) -> Vec<ComplexMatrix> {
        self.blocks
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.nrows()).collect()
    }

    pub fn algebra(&self) -> FiniteCStarAlgebra {
        FiniteCStarAlgebra {
            block_dims: self.block_dims(),
        }
    }

    fn assert_compatible(&self, other: &Self) {
        assert!(
            self.blocks.len() == other.blocks.len()
                && self
                    .blocks
                    .iter()
                    .zip(&other.blocks)
                    .all(|(a, b)| a.nrows() == b.nrows()),
            "algebra elements live in different algebras: {:?} vs {:?}",
            self.block_dims(),
            other.block_dims()
        );
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.assert_compatible(other);
        Self {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.assert_compatible(other);
        Self {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.assert_compatible(other);
        Self {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            blocks: self.blocks.iter().map(|b| b * c).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            blocks: self.blocks.iter().map(|b| b.adjoint()).collect(),
        }
    }

    /// Operator norm: the largest singular value over all blocks.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(op_norm).fold(0.0, f64::max)
    }

    /// Operator norm of `self - other`.
    pub fn distance(&self, other: &Self) -> f64 {
        self.sub(other).norm()
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(|b| b.iter().all(|z| *z == ZERO))
    }

    /// Exact (bitwise) equality with the unit.
    pub fn is_exact_unit(&self) -> bool {
        self.blocks.iter().all(|b| {
            b.iter().enumerate().all(|(idx, z)| {
                let (i, j) = (idx % b.nrows(), idx / b.nrows());
                *z == if i == j { ONE } else { ZERO }
            })
        })
    }

    /// Coordinates in the matrix-unit basis of [`FiniteCStarAlgebra::basis`].
    pub fn to_vector(&self) -> DVector<Complex64> {
        let dim: usize = self.blocks.iter().map(|b| b.nrows() * b.nrows()).sum();
        let mut v = DVector::zeros(dim);
        let mut idx = 0;
        for b in &self.blocks {
            let n = b.nrows();
            for i in 0..n {
                for j in 0..n {
                    v[idx + i * n + j] = b[(i, j)];
                }
            }
            idx += n * n;
        }
        v
    }

    /// Block-diagonal dense matrix.
    pub fn to_dense(&self) -> ComplexMatrix {
        let h: usize = self.blocks.iter().map(|b| b.nrows()).sum();
        let mut m = ComplexMatrix::zeros(h, h);
        let mut off = 0;
        for b in &self.blocks {
            let n = b.nrows();
            m.view_mut((off, off), (n, n)).copy_from(b);
            off += n;
        }
        m
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_hermitian_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .map(min_hermitian_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn projection_residual(p: &AlgebraElement) -> f64 {
    let herm = p.distance(&p.adjoint());
    let idem = p.mul(p).distance(p);
    herm.max(idem)
}

/// `‖p − p*‖ ≤ eps` and `‖p² − p‖ ≤ eps`.
pub fn is_projection(p: &AlgebraElement, tol: Tolerance) -> bool {
    tol.holds(projection_residual(p))
}

/// Membership of `a` in the corner `p𝒜p`.
pub fn hereditary_corner_membership(
    p: &AlgebraElement,
    a: &AlgebraElement,
    tol: Tolerance,
) -> Result<bool> {
    p.algebra().check_same(&a.algebra())?;
    let residual = projection_residual(p);
    if !tol.holds(residual) {
        return Err(Error::NotProjection { residual });
    }
    Ok(tol.holds(p.mul(a).mul(p).distance(a)))
}

/// Does `p` commute with every matrix unit?
pub fn is_central(p: &AlgebraElement, tol: Tolerance) -> bool {
    p.algebra()
        .basis()
        .iter()
        .all(|e| tol.holds(p.mul(e).distance(&e.mul(p))))
}

pub fn random_matrix<R: RngCore + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    })
}

pub fn random_unitary<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let svd = random_matrix(n, n, rng).svd(true, true);
    svd.u.expect("u requested") * svd.v_t.expect("v_t requested")
}

/// Random partial isometry: singular values of a Gaussian matrix are replaced
/// by a random 0/1 pattern, so every rank from 0 to `n` occurs.
pub fn random_partial_isometry<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let svd = random_matrix(n, n, rng).svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let pattern = DVector::from_fn(n, |_, _| {
        if rng.random_bool(0.5) {
            ONE
        } else {
            ZERO
        }
    });
    u * ComplexMatrix::from_diagonal(&pattern) * v_t
}

/// Minimal interface the interaction checks need from an algebra. Implemented
/// by [`FiniteCStarAlgebra`] and by the circle function algebra in
/// [`crate::circle`].
pub trait StarAlgebra {
    type Element: Clone;

    fn one(&self) -> Self::Element;
    fn mul(&self, a: &Self::Element, b: &Self::Element) -> Self::Element;
    fn add(&self, a: &Self::Element, b: &Self::Element) -> Self::Element;
    fn sub(&self, a: &Self::Element, b: &Self::Element) -> Self::Element;
    fn adjoint(&self, a: &Self::Element) -> Self::Element;
    fn norm(&self, a: &Self::Element) -> f64;
    /// Minimum of the spectrum of the Hermitian part of `a`.
    fn min_hermitian_spectrum(&self, a: &Self::Element) -> f64;
    /// A random element of norm about one.
    fn sample(&self, rng: &mut dyn RngCore) -> Self::Element;
    /// JSON description used as a witness in reports.
    fn describe(&self, a: &Self::Element) -> serde_json::Value;

    fn sample_positive(&self, rng: &mut dyn RngCore) -> Self::Element {
        let b = self.sample(rng);
        self.mul(&self.adjoint(&b), &b)
    }

    fn distance(&self, a: &Self::Element, b: &Self::Element) -> f64 {
        self.norm(&self.sub(a, b))
    }
}

impl StarAlgebra for FiniteCStarAlgebra {
    type Element = AlgebraElement;

    fn one(&self) -> AlgebraElement {
        FiniteCStarAlgebra::one(self)
    }
    fn mul(&self, a: &AlgebraElement, b: &AlgebraElement) -> AlgebraElement {
        a.mul(b)
    }
    fn add(&self, a: &AlgebraElement, b: &AlgebraElement) -> AlgebraElement {
        a.add(b)
    }
    fn sub(&self, a: &AlgebraElement, b: &AlgebraElement) -> AlgebraElement {
        a.sub(b)
    }
    fn adjoint(&self, a: &AlgebraElement) -> AlgebraElement {
        a.adjoint()
    }
    fn norm(&self, a: &AlgebraElement) -> f64 {
        a.norm()
    }
    fn min_hermitian_spectrum(&self, a: &AlgebraElement) -> f64 {
        a.min_hermitian_eigenvalue()
    }
    fn sample(&self, rng: &mut dyn RngCore) -> AlgebraElement {
        self.random_element(rng)
    }
    fn describe(&self, a: &AlgebraElement) -> serde_json::Value {
        serde_json::to_value(a).unwrap_or(serde_json::Value::Null)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn truncated_shift(n: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |i, j| if i == j + 1 { ONE } else { ZERO })
    }

    #[test]
    fn norm_of_unit_zero_and_nilpotent() {
        let alg = FiniteCStarAlgebra::new(vec![2, 3, 1]).unwrap();
        assert!((alg.one().norm() - 1.0).abs() < 1e-12);
        assert_eq!(alg.zero().norm(), 0.0);
        let m2 = FiniteCStarAlgebra::full_matrix(2).unwrap();
        let a = m2
            .element(vec![ComplexMatrix::from_row_slice(
                2,
                2,
                &[ZERO, c(2.0), ZERO, ZERO],
            )])
            .unwrap();
        assert!((a.norm() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn projection_examples() {
        let tol = Tolerance::default();
        let m2 = FiniteCStarAlgebra::full_matrix(2).unwrap();
        assert!(is_projection(&m2.one(), tol));
        let half_j = m2
            .element(vec![ComplexMatrix::from_element(2, 2, c(0.5))])
            .unwrap();
        assert!(is_projection(&half_j, tol));
        let d = m2
            .element(vec![ComplexMatrix::from_diagonal(&DVector::from_vec(vec![
                c(1.0),
                c(0.5),
            ]))])
            .unwrap();
        assert!(!is_projection(&d, tol));
    }

    #[test]
    fn partial_isometry_examples() {
        let tol = Tolerance::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(is_partial_isometry(&random_unitary(4, &mut rng), tol));
        for n in 1..6 {
            assert!(is_partial_isometry(&truncated_shift(n), tol));
        }
        let d = ComplexMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0), c(2.0)]));
        assert!(!is_partial_isometry(&d, tol));
    }

    #[test]
    fn halmos_wallen_examples() {
        let tol = Tolerance::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_unitary(3, &mut rng);
        let hw = halmos_wallen_check(&u, &u, tol).unwrap();
        assert!(hw.predicted && hw.actual);
        let s = truncated_shift(4);
        let hw = halmos_wallen_check(&s, &s, tol).unwrap();
        assert!(hw.predicted && hw.actual);
        let d = ComplexMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0), c(2.0)]));
        assert!(matches!(
            halmos_wallen_check(&d, &d, tol),
            Err(Error::NotPartialIsometry { .. })
        ));
    }

    #[test]
    fn corner_membership() {
        let tol = Tolerance::default();
        let m2 = FiniteCStarAlgebra::full_matrix(2).unwrap();
        let e11 = m2.matrix_unit(0, 0, 0);
        let e12 = m2.matrix_unit(0, 0, 1);
        assert!(hereditary_corner_membership(&m2.one(), &e12, tol).unwrap());
        assert!(!hereditary_corner_membership(&e11, &e12, tol).unwrap());
        let d3 = FiniteCStarAlgebra::diagonal(3).unwrap();
        let p = d3.diagonal_element(&[c(0.0), c(1.0), c(1.0)]).unwrap();
        let a = d3.diagonal_element(&[c(0.0), c(3.0), c(-2.0)]).unwrap();
        assert!(hereditary_corner_membership(&p, &a, tol).unwrap());
        assert!(matches!(
            hereditary_corner_membership(&a, &p, tol),
            Err(Error::NotProjection { .. })
        ));
    }

    #[test]
    fn vector_and_dense_round_trip() {
        let alg = FiniteCStarAlgebra::new(vec![2, 1, 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = alg.random_element(&mut rng);
        assert_eq!(alg.from_vector(&a.to_vector()).unwrap(), a);
        assert_eq!(alg.from_dense(&a.to_dense()).unwrap(), a);
        assert_eq!(alg.off_block_norm(&a.to_dense()), 0.0);
        let basis = alg.basis();
        assert_eq!(basis.len(), alg.dim());
        for (k, e) in basis.iter().enumerate() {
            let v = e.to_vector();
            assert_eq!(v[k], ONE);
            assert_eq!(v.iter().filter(|z| **z != ZERO).count(), 1);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(FiniteCStarAlgebra::new(vec![]).is_err());
        assert!(FiniteCStarAlgebra::new(vec![2, 0]).is_err());
        let alg = FiniteCStarAlgebra::new(vec![2]).unwrap();
        assert!(alg.element(vec![ComplexMatrix::zeros(3, 3)]).is_err());
        let mut bad = ComplexMatrix::zeros(2, 2);
        bad[(0, 0)] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(alg.element(vec![bad]), Err(Error::NonFinite(_))));
        assert!(Tolerance::new(-1.0).is_err());
    }

    #[test]
    fn random_partial_isometries_cover_ranks() {
        let tol = Tolerance::new(1e-10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut ranks = std::collections::BTreeSet::new();
        for _ in 0..200 {
            let m = random_partial_isometry(3, &mut rng);
            assert!(is_partial_isometry(&m, tol));
            let rank = (m.adjoint() * &m).trace().re.round() as usize;
            ranks.insert(rank);
        }
        assert_eq!(ranks.into_iter().collect::<Vec<_>>(), vec![0, 1, 2, 3]);
    }
}
