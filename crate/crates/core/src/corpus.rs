//! Worked examples and fixtures: the non-interaction on `M₂`, the doubling
//! map with its family of transfer operators, the truncated shift and the
//! trivial interaction on `ℂ`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::actions::{check_transfer_identity, Action, LinearMapOnAlgebra, DEFAULT_POSITIVITY_SAMPLES};
use crate::algebra::{ComplexMatrix, FiniteCStarAlgebra, StarAlgebra, Tolerance};
use crate::circle::{CircleFunctionAlgebra, DoublingAction, TransferAction, TrigPolynomial};
use crate::covariant::{CovariantRep, Embedding};
use crate::error::{Error, Result};
use crate::interactions::{derive_dual_from_rep, ActionPair, Interaction, DEFAULT_SAMPLES, DEFAULT_X_MAX};
use crate::report::{CheckOutcome, InteractionReport};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// What the `M₂` example is known to do.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Example23Expected {
    /// Items (i)–(iv) hold for `x = 1`.
    pub passes_at_x: u32,
    /// `‖ℋ²𝒱²ℋ²(1) − ℋ²(1)‖ = ‖⅛e₁₁ − ½e₁₁‖`.
    pub axiom_ii_residual_at_x2: f64,
    /// `‖[𝒱(1), ℋ(1)]‖`.
    pub commutator_norm: f64,
}

pub struct Example23 {
    pub algebra: FiniteCStarAlgebra,
    /// `𝒱 = V` and `ℋ = H` as actions; not an interaction beyond `x = 1`.
    pub pair: Interaction,
    pub expected: Example23Expected,
}

/// `V(a) = a₁₁/2 · J` and `H(a) = (a₁₁ + a₁₂ + a₂₁ + a₂₂)/2 · e₁₁` on `M₂`,
/// with `J` the all-ones matrix.
pub fn example_2_3() -> Example23 {
    let alg = FiniteCStarAlgebra::full_matrix(2).expect("M2");
    let tol = Tolerance::default();
    let j = alg.element(vec![ComplexMatrix::from_element(2, 2, c(1.0))]).expect("J");
    let e11 = alg.matrix_unit(0, 0, 0);
    let basis = alg.basis();
    let v_images: Vec<_> = basis.iter().map(|e| j.scale(e.block(0)[(0, 0)] / 2.0)).collect();
    let h_images: Vec<_> = basis.iter().map(|e| e11.scale(e.block(0).sum() / 2.0)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let v = LinearMapOnAlgebra::from_basis_images(&alg, &v_images).expect("V images");
    let h = LinearMapOnAlgebra::from_basis_images(&alg, &h_images).expect("H images");
    let v = Action::new(v, DEFAULT_POSITIVITY_SAMPLES, tol, &mut rng).expect("V is positive");
    let h = Action::new(h, DEFAULT_POSITIVITY_SAMPLES, tol, &mut rng).expect("H is positive");
    Example23 {
        algebra: alg,
        pair: Interaction::new(v, h).expect("same algebra"),
        expected: Example23Expected {
            passes_at_x: 1,
            axiom_ii_residual_at_x2: 0.375,
            commutator_norm: 0.5,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example31Report {
    /// Cocycle sums, `Lₙ(1) = 1`, transfer identity and items (i)–(iv).
    pub interaction: InteractionReport,
    /// Completeness at `x = 1`; expected to fail.
    pub completeness: InteractionReport,
    /// `sup |α₁(L₁(a)) − a|` on the grid for `a = sin 2πt`.
    pub completeness_defect: f64,
    pub completeness_fails: bool,
}

pub struct Example31 {
    pub algebra: CircleFunctionAlgebra,
    pub alpha: DoublingAction,
    pub transfer: TransferAction,
    pub report: Example31Report,
}

/// The doubling map on `C(ℝ/ℤ)` with the transfer operators weighted by
/// `ρ`. Every check is evaluated on `grid_size` points.
pub fn example_3_1(rho: TrigPolynomial, n_max: u32, grid_size: usize, num_samples: usize, seed: u64) -> Result<Example31> {
    let tol = Tolerance::default();
    let alg = CircleFunctionAlgebra::new(grid_size)?;
    let transfer = TransferAction::new(rho, grid_size, tol)?;
    let alpha = DoublingAction;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut interaction = InteractionReport::default();
    let one = alg.one();
    for n in 1..=n_max {
        let worst_sum = alg
            .grid()
            .iter()
            .map(|&x| (transfer.cocycle_sum(n, x) - 1.0).abs())
            .fold(0.0, f64::max);
        interaction.push(CheckOutcome::scalar("cocycle_sum", Some(n), None, tol, worst_sum));
        interaction.push(CheckOutcome::scalar(
            "transfer_of_one",
            Some(n),
            None,
            tol,
            alg.distance(&transfer.apply(n, &one), &one),
        ));
        interaction.push(check_transfer_identity(&alg, &alpha, &transfer, n, num_samples, tol, &mut rng));
    }
    let pair = ActionPair::new(&alg, &alpha, &transfer);
    interaction.extend(pair.check_interaction(n_max, num_samples, tol, &mut rng));
    let completeness = pair.check_complete(1, num_samples, tol, &mut rng)?;
    let a = TrigPolynomial::sin(1, 1.0).to_function();
    let back = alpha.apply(1, &transfer.apply(1, &a));
    let completeness_defect = alg.distance(&back, &a);
    Ok(Example31 {
        report: Example31Report {
            interaction,
            completeness_fails: !completeness.passed() && !tol.holds(completeness_defect),
            completeness,
            completeness_defect,
        },
        algebra: alg,
        alpha,
        transfer,
    })
}

/// Truncated shift `S eᵢ = eᵢ₊₁` on the diagonal algebra `ℂⁿ`,
/// `𝒱(a) = SaS*`, `ℋ(a) = S*aS`, represented by the inclusion.
pub fn shift_fixture(n: usize) -> Result<(FiniteCStarAlgebra, Interaction, CovariantRep)> {
    if n < 3 {
        return Err(Error::Shape(format!("shift fixture needs n >= 3, got {n}")));
    }
    let tol = Tolerance::default();
    let alg = FiniteCStarAlgebra::diagonal(n)?;
    let s = ComplexMatrix::from_fn(n, n, |i, j| if i == j + 1 { c(1.0) } else { c(0.0) });
    let v = Action::conjugation(&alg, s.clone(), tol)?;
    let h = derive_dual_from_rep(&v, &s, tol)?;
    let mut interaction = Interaction::new(v, h)?;
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
    interaction.certify(DEFAULT_X_MAX, DEFAULT_SAMPLES, tol, &mut rng);
    let rep = CovariantRep::new(Embedding::inclusion(&alg), s, tol)?;
    Ok((alg, interaction, rep))
}

/// `𝒜 = ℂ`, `𝒱 = ℋ = Id`, `U₁ = 1`.
pub fn trivial_fixture() -> (FiniteCStarAlgebra, Interaction, CovariantRep) {
    let alg = FiniteCStarAlgebra::diagonal(1).expect("C");
    let mut interaction = Interaction::identity(&alg);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let tol = Tolerance::default();
    interaction.certify(DEFAULT_X_MAX, DEFAULT_SAMPLES, tol, &mut rng);
    let rep = CovariantRep::new(Embedding::inclusion(&alg), ComplexMatrix::identity(1, 1), tol).expect("U1 = 1");
    (alg, interaction, rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_2_3_closed_forms() {
        let ex = example_2_3();
        let alg = &ex.algebra;
        let a = alg
            .element(vec![ComplexMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(3.0), c(4.0)])])
            .unwrap();
        let v = ex.pair.v().apply(1, &a);
        let h = ex.pair.h().apply(1, &a);
        assert_eq!(v.block(0), &ComplexMatrix::from_element(2, 2, c(0.5)));
        assert_eq!(h.block(0)[(0, 0)], c(5.0));
        assert_eq!(h.block(0).sum(), c(5.0));
    }

    #[test]
    fn shift_fixture_shapes() {
        assert!(shift_fixture(2).is_err());
        let (alg, i, rep) = shift_fixture(4).unwrap();
        assert_eq!(alg.num_blocks(), 4);
        assert_eq!(i.certified_up_to(), Some(DEFAULT_X_MAX));
        let d = alg.diagonal_element(&[c(1.0), c(2.0), c(3.0), c(4.0)]).unwrap();
        let vd = i.v().apply(1, &d);
        assert_eq!(vd, alg.diagonal_element(&[c(0.0), c(1.0), c(2.0), c(3.0)]).unwrap());
        assert_eq!(rep.hilbert_dim(), 4);
    }

    #[test]
    fn example_3_1_rejects_bad_cocycles() {
        let bad = TrigPolynomial::constant(0.3);
        assert!(matches!(example_3_1(bad, 1, 16, 4, 0), Err(Error::InvalidCocycle { .. })));
    }
}
