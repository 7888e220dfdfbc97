//! Positive linear maps on a finite-dimensional C*-algebra and the
//! semigroup actions of ℕ they generate.

use std::sync::{Arc, Mutex};

use nalgebra::DVector;
use num_complex::Complex64;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, ComplexMatrix, FiniteCStarAlgebra, StarAlgebra, Tolerance};
use crate::encoding::matrix_serde;
use crate::error::{Error, Result};
use crate::report::CheckOutcome;

pub const DEFAULT_POSITIVITY_SAMPLES: usize = 200;

/// How a map is stored.
#[derive(Debug, Clone, PartialEq)]
pub enum MapForm {
    /// `a ↦ K a K*` with `K` acting on the block-diagonal Hilbert space `ℂ^{Σnᵢ}`.
    Conjugation(ComplexMatrix),
    /// Matrix acting on coordinate vectors in the matrix-unit basis.
    Superoperator(ComplexMatrix),
}

/// Wire format of a map; the algebra comes from the surrounding document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum MapSpec {
    Conjugation {
        #[serde(rename = "K", with = "matrix_serde")]
        k: ComplexMatrix,
    },
    Superoperator {
        #[serde(with = "matrix_serde")]
        matrix: ComplexMatrix,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearMapOnAlgebra {
    algebra: FiniteCStarAlgebra,
    form: MapForm,
}

impl LinearMapOnAlgebra {
    /// `a ↦ K a K*`. Fails with `NotInvariant` unless the image of every
    /// matrix unit is block diagonal.
    pub fn conjugation(algebra: &FiniteCStarAlgebra, k: ComplexMatrix, tol: Tolerance) -> Result<Self> {
        let h = algebra.hilbert_dim();
        if k.nrows() != h || k.ncols() != h {
            return Err(Error::Shape(format!(
                "conjugating matrix must be {h}x{h}, got {}x{}",
                k.nrows(),
                k.ncols()
            )));
        }
        crate::algebra::ensure_finite(&k, "conjugating matrix")?;
        let k_adj = k.adjoint();
        let residual = algebra
            .basis()
            .iter()
            .map(|e| algebra.off_block_norm(&(&k * e.to_dense() * &k_adj)))
            .fold(0.0, f64::max);
        if !tol.holds(residual) {
            return Err(Error::NotInvariant { residual });
        }
        Ok(Self {
            algebra: algebra.clone(),
            form: MapForm::Conjugation(k),
        })
    }

    pub fn superoperator(algebra: &FiniteCStarAlgebra, matrix: ComplexMatrix) -> Result<Self> {
        let d = algebra.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::Shape(format!(
                "superoperator must be {d}x{d}, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        crate::algebra::ensure_finite(&matrix, "superoperator")?;
        Ok(Self {
            algebra: algebra.clone(),
            form: MapForm::Superoperator(matrix),
        })
    }

    pub fn identity(algebra: &FiniteCStarAlgebra) -> Self {
        let h = algebra.hilbert_dim();
        Self {
            algebra: algebra.clone(),
            form: MapForm::Conjugation(ComplexMatrix::identity(h, h)),
        }
    }

    /// Superoperator with the given images of the matrix units.
    pub fn from_basis_images(algebra: &FiniteCStarAlgebra, images: &[AlgebraElement]) -> Result<Self> {
        if images.len() != algebra.dim() {
            return Err(Error::Shape(format!(
                "need {} basis images, got {}",
                algebra.dim(),
                images.len()
            )));
        }
        let d = algebra.dim();
        let mut m = ComplexMatrix::zeros(d, d);
        for (k, img) in images.iter().enumerate() {
            algebra.check_same(&img.algebra())?;
            m.set_column(k, &img.to_vector());
        }
        Self::superoperator(algebra, m)
    }

    pub fn from_spec(algebra: &FiniteCStarAlgebra, spec: MapSpec, tol: Tolerance) -> Result<Self> {
        match spec {
            MapSpec::Conjugation { k } => Self::conjugation(algebra, k, tol),
            MapSpec::Superoperator { matrix } => Self::superoperator(algebra, matrix),
        }
    }

    pub fn to_spec(&self) -> MapSpec {
        match &self.form {
            MapForm::Conjugation(k) => MapSpec::Conjugation { k: k.clone() },
            MapForm::Superoperator(m) => MapSpec::Superoperator { matrix: m.clone() },
        }
    }

    pub fn algebra(&self) -> &FiniteCStarAlgebra {
        &self.algebra
    }

    pub fn form(&self) -> &MapForm {
        &self.form
    }

    pub fn apply(&self, a: &AlgebraElement) -> AlgebraElement {
        match &self.form {
            MapForm::Conjugation(k) => {
                let dense = k * a.to_dense() * k.adjoint();
                self.algebra
                    .from_dense(&dense)
                    .expect("conjugation preserves the dense shape")
            }
            MapForm::Superoperator(m) => self
                .algebra
                .from_vector(&(m * a.to_vector()))
                .expect("superoperator preserves the coordinate length"),
        }
    }

    /// Matrix of the map in the matrix-unit basis.
    pub fn matrix(&self) -> ComplexMatrix {
        match &self.form {
            MapForm::Superoperator(m) => m.clone(),
            MapForm::Conjugation(_) => basis_matrix(&self.algebra, |e| self.apply(e)),
        }
    }

    /// Probabilistic positivity test on `b*b` samples. The matrix-unit
    /// projections and the unit are always probed first.
    pub fn positivity_check(
        &self,
        num_samples: usize,
        tol: Tolerance,
        rng: &mut dyn RngCore,
    ) -> PositivityOutcome {
        let mut probes = vec![self.algebra.one()];
        for (k, &n) in self.algebra.block_dims().iter().enumerate() {
            for i in 0..n {
                probes.push(self.algebra.matrix_unit(k, i, i));
            }
        }
        let mut worst = f64::INFINITY;
        let mut witness = None;
        let total = num_samples.max(probes.len());
        for idx in 0..total {
            let p = if idx < probes.len() {
                probes[idx].clone()
            } else {
                self.algebra.random_positive(rng)
            };
            let lam = self.apply(&p).min_hermitian_eigenvalue();
            if lam < worst {
                worst = lam;
                if lam < -tol.eps {
                    witness = Some(p);
                }
            }
        }
        PositivityOutcome {
            positive: worst >= -tol.eps,
            min_eigenvalue: worst,
            witness,
        }
    }
}

/// Result of [`LinearMapOnAlgebra::positivity_check`]. A `false` verdict
/// carries the positive element whose image has a negative eigenvalue.
#[derive(Debug, Clone)]
pub struct PositivityOutcome {
    pub positive: bool,
    pub min_eigenvalue: f64,
    pub witness: Option<AlgebraElement>,
}

pub(crate) fn basis_matrix<F>(algebra: &FiniteCStarAlgebra, f: F) -> ComplexMatrix
where
    F: Fn(&AlgebraElement) -> AlgebraElement,
{
    let d = algebra.dim();
    let mut m = ComplexMatrix::zeros(d, d);
    for (k, e) in algebra.basis().iter().enumerate() {
        let col: DVector<Complex64> = f(e).to_vector();
        m.set_column(k, &col);
    }
    m
}

/// Anything that assigns a map to each `n ∈ ℕ` with `0 ↦ Id`.
pub trait SemigroupAction<A: StarAlgebra + ?Sized> {
    fn apply(&self, n: u32, a: &A::Element) -> A::Element;
}

/// Action of ℕ generated by one positive map: `𝒱ₙ = generatorⁿ`.
///
/// `apply` composes the generator `n` times, so the semigroup law holds
/// bit for bit. Matrices of the iterates are memoised for the linear solves.
#[derive(Debug)]
pub struct Action {
    generator: Arc<LinearMapOnAlgebra>,
    iterates: Mutex<Vec<Arc<ComplexMatrix>>>,
}

impl Clone for Action {
    fn clone(&self) -> Self {
        Self {
            generator: Arc::clone(&self.generator),
            iterates: Mutex::new(self.iterates.lock().expect("iterate cache").clone()),
        }
    }
}

impl Action {
    /// Builds an action, requiring superoperator generators to pass
    /// [`LinearMapOnAlgebra::positivity_check`].
    pub fn new(
        generator: LinearMapOnAlgebra,
        num_samples: usize,
        tol: Tolerance,
        rng: &mut dyn RngCore,
    ) -> Result<Self> {
        if let MapForm::Superoperator(_) = generator.form() {
            let outcome = generator.positivity_check(num_samples, tol, rng);
            if !outcome.positive {
                return Err(Error::NotPositive {
                    min_eigenvalue: outcome.min_eigenvalue,
                    witness: Box::new(outcome.witness.expect("failure carries a witness")),
                });
            }
        }
        Ok(Self::from_positive(generator))
    }

    /// For generators whose positivity is known analytically (conjugations,
    /// closed-form fixtures).
    pub fn from_positive(generator: LinearMapOnAlgebra) -> Self {
        Self {
            generator: Arc::new(generator),
            iterates: Mutex::new(Vec::new()),
        }
    }

    pub fn conjugation(algebra: &FiniteCStarAlgebra, k: ComplexMatrix, tol: Tolerance) -> Result<Self> {
        Ok(Self::from_positive(LinearMapOnAlgebra::conjugation(algebra, k, tol)?))
    }

    pub fn identity(algebra: &FiniteCStarAlgebra) -> Self {
        Self::from_positive(LinearMapOnAlgebra::identity(algebra))
    }

    pub fn generator(&self) -> &LinearMapOnAlgebra {
        &self.generator
    }

    pub fn algebra(&self) -> &FiniteCStarAlgebra {
        self.generator.algebra()
    }

    /// `𝒱ₙ(a)`; `n = 0` returns `a` unchanged.
    pub fn apply(&self, n: u32, a: &AlgebraElement) -> AlgebraElement {
        let mut out = a.clone();
        for _ in 0..n {
            out = self.generator.apply(&out);
        }
        out
    }

    /// Memoised matrix of `𝒱ₙ` in the matrix-unit basis; its columns are
    /// exactly `apply(n, e)` for the basis elements.
    pub fn iterate_matrix(&self, n: u32) -> Arc<ComplexMatrix> {
        let mut cache = self.iterates.lock().expect("iterate cache");
        while cache.len() <= n as usize {
            let k = cache.len() as u32;
            let m = basis_matrix(self.algebra(), |e| self.apply(k, e));
            cache.push(Arc::new(m));
        }
        Arc::clone(&cache[n as usize])
    }

    pub fn iterate(&self, n: u32) -> LinearMapOnAlgebra {
        LinearMapOnAlgebra::superoperator(self.algebra(), (*self.iterate_matrix(n)).clone())
            .expect("iterate matrix has the algebra's dimension")
    }
}

impl SemigroupAction<FiniteCStarAlgebra> for Action {
    fn apply(&self, n: u32, a: &AlgebraElement) -> AlgebraElement {
        Action::apply(self, n, a)
    }
}

fn sample_pairs<A: StarAlgebra + ?Sized>(
    algebra: &A,
    num_samples: usize,
    rng: &mut dyn RngCore,
) -> Vec<(A::Element, A::Element)> {
    let mut out = vec![(algebra.one(), algebra.one())];
    while out.len() < num_samples.max(1) {
        let a = algebra.sample(rng);
        let b = algebra.sample(rng);
        out.push((a, b));
    }
    out
}

/// `Lₙ(αₙ(a) b) = a Lₙ(b)` on sampled pairs.
pub fn check_transfer_identity<A: StarAlgebra + ?Sized>(
    algebra: &A,
    alpha: &dyn SemigroupAction<A>,
    transfer: &dyn SemigroupAction<A>,
    n: u32,
    num_samples: usize,
    tol: Tolerance,
    rng: &mut dyn RngCore,
) -> CheckOutcome {
    let pairs = sample_pairs(algebra, num_samples, rng);
    CheckOutcome::measure("transfer_identity", Some(n), None, tol, &pairs, |(a, b)| {
        let lhs = transfer.apply(n, &algebra.mul(&alpha.apply(n, a), b));
        let rhs = algebra.mul(a, &transfer.apply(n, b));
        (algebra.distance(&lhs, &rhs), algebra.describe(a))
    })
}

/// `αₙ(Lₙ(a)) = αₙ(1) a αₙ(1)` on samples.
pub fn check_complete_transfer<A: StarAlgebra + ?Sized>(
    algebra: &A,
    alpha: &dyn SemigroupAction<A>,
    transfer: &dyn SemigroupAction<A>,
    n: u32,
    num_samples: usize,
    tol: Tolerance,
    rng: &mut dyn RngCore,
) -> CheckOutcome {
    let p = alpha.apply(n, &algebra.one());
    let pairs = sample_pairs(algebra, num_samples, rng);
    CheckOutcome::measure("complete_transfer", Some(n), None, tol, &pairs, |(a, _)| {
        let lhs = alpha.apply(n, &transfer.apply(n, a));
        let rhs = algebra.mul(&algebra.mul(&p, a), &p);
        (algebra.distance(&lhs, &rhs), algebra.describe(a))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn shift(n: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |i, j| if i == j + 1 { c(1.0) } else { c(0.0) })
    }

    fn shift_pair(n: usize) -> (FiniteCStarAlgebra, Action, Action) {
        let alg = FiniteCStarAlgebra::diagonal(n).unwrap();
        let tol = Tolerance::default();
        let alpha = Action::conjugation(&alg, shift(n), tol).unwrap();
        let transfer = Action::conjugation(&alg, shift(n).adjoint(), tol).unwrap();
        (alg, alpha, transfer)
    }

    #[test]
    fn apply_zero_is_identity_and_semigroup_is_exact() {
        let (alg, alpha, _) = shift_pair(5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = alg.random_element(&mut rng);
        assert_eq!(alpha.apply(0, &a), a);
        for m in 0..4 {
            for n in 0..4 {
                assert_eq!(alpha.apply(m, &alpha.apply(n, &a)), alpha.apply(m + n, &a));
            }
        }
    }

    #[test]
    fn iterate_cache_matches_apply() {
        let (alg, alpha, _) = shift_pair(4);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let a = alg.random_element(&mut rng);
        for n in [3, 1, 2, 0] {
            let via_matrix = alg
                .from_vector(&(&*alpha.iterate_matrix(n) * a.to_vector()))
                .unwrap();
            assert!(via_matrix.distance(&alpha.apply(n, &a)) < 1e-14);
        }
    }

    #[test]
    fn conjugation_rejects_non_invariant_matrix() {
        let alg = FiniteCStarAlgebra::diagonal(2).unwrap();
        let hadamard = ComplexMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(1.0), c(-1.0)]);
        assert!(matches!(
            LinearMapOnAlgebra::conjugation(&alg, hadamard, Tolerance::default()),
            Err(Error::NotInvariant { .. })
        ));
    }

    #[test]
    fn conjugation_preserves_adjoints_exactly() {
        let alg = FiniteCStarAlgebra::new(vec![2, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let k = ComplexMatrix::from_fn(3, 3, |i, j| {
            if (i < 2) == (j < 2) {
                Complex64::new((i + 2 * j) as f64, (i as f64) - 1.0)
            } else {
                c(0.0)
            }
        });
        let f = LinearMapOnAlgebra::conjugation(&alg, k, Tolerance::default()).unwrap();
        for _ in 0..10 {
            let a = alg.random_element(&mut rng);
            assert!(f.apply(&a.adjoint()).distance(&f.apply(&a).adjoint()) < 1e-12);
        }
    }

    #[test]
    fn positivity_examples() {
        let tol = Tolerance::default();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let m2 = FiniteCStarAlgebra::full_matrix(2).unwrap();
        let k = crate::algebra::random_matrix(2, 2, &mut rng);
        let conj = LinearMapOnAlgebra::conjugation(&m2, k, tol).unwrap();
        assert!(conj.positivity_check(50, tol, &mut rng).positive);

        // transpose: coordinates (a11, a12, a21, a22) ↦ (a11, a21, a12, a22)
        let mut t = ComplexMatrix::zeros(4, 4);
        for (r, col) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            t[(r, col)] = c(1.0);
        }
        let transpose = LinearMapOnAlgebra::superoperator(&m2, t).unwrap();
        assert!(transpose.positivity_check(200, tol, &mut rng).positive);

        // a ↦ a − tr(a)·1
        let mut m = ComplexMatrix::identity(4, 4);
        for r in [0, 3] {
            for col in [0, 3] {
                m[(r, col)] -= c(1.0);
            }
        }
        let shifted = LinearMapOnAlgebra::superoperator(&m2, m).unwrap();
        let out = shifted.positivity_check(200, tol, &mut rng);
        assert!(!out.positive);
        let w = out.witness.expect("witness");
        assert!(shifted.apply(&w).min_hermitian_eigenvalue() < 0.0);
        assert!(w.min_hermitian_eigenvalue() >= -1e-12);
        assert!(matches!(
            Action::new(shifted, 200, tol, &mut rng),
            Err(Error::NotPositive { .. })
        ));
    }

    #[test]
    fn transfer_identities_on_shift() {
        let tol = Tolerance::default();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let (alg, alpha, transfer) = shift_pair(5);
        for n in 1..=4 {
            assert!(check_transfer_identity(&alg, &alpha, &transfer, n, 20, tol, &mut rng).passed);
            assert!(check_complete_transfer(&alg, &alpha, &transfer, n, 20, tol, &mut rng).passed);
        }
        let id = Action::identity(&alg);
        assert!(check_transfer_identity(&alg, &id, &id, 1, 10, tol, &mut rng).passed);
        assert!(check_complete_transfer(&alg, &id, &id, 1, 10, tol, &mut rng).passed);
    }

    #[test]
    fn spec_round_trip() {
        let alg = FiniteCStarAlgebra::diagonal(3).unwrap();
        let f = LinearMapOnAlgebra::conjugation(&alg, shift(3), Tolerance::default()).unwrap();
        let text = serde_json::to_string(&f.to_spec()).unwrap();
        assert!(text.contains("\"form\":\"conjugation\""));
        let back: MapSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(
            LinearMapOnAlgebra::from_spec(&alg, back, Tolerance::default()).unwrap(),
            f
        );
    }
}
