//! Closed-form values computed by hand, checked against the library.

use covalg_core::algebra::{commutator, op_norm};
use covalg_core::circle::TrigPolynomial;
use covalg_core::corpus::{example_2_3, example_3_1, trivial_fixture};
use covalg_core::crossed::{CrossedProduct, CrossedProductElement};
use covalg_core::{ComplexMatrix, Tolerance};
use num_complex::Complex64;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn binom(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[test]
fn m2_pair_values() {
    let ex = example_2_3();
    let alg = &ex.algebra;
    let (v, h) = (ex.pair.v(), ex.pair.h());
    let one = alg.one();
    let e11 = alg.matrix_unit(0, 0, 0);
    let j = alg.element(vec![ComplexMatrix::from_element(2, 2, c(1.0))]).unwrap();

    assert!(v.apply(1, &one).distance(&j.scale(c(0.5))) < 1e-15);
    assert!(h.apply(1, &one).distance(&e11) < 1e-15);
    assert!(h.apply(2, &one).distance(&e11.scale(c(0.5))) < 1e-15);
    assert!(v.apply(2, &e11).distance(&j.scale(c(0.25))) < 1e-15);

    let lhs = h.apply(2, &v.apply(2, &h.apply(2, &one)));
    let residual = lhs.distance(&h.apply(2, &one));
    assert!((residual - 0.375).abs() < 1e-14);
    assert_eq!(ex.expected.axiom_ii_residual_at_x2, 0.375);

    let comm = commutator(v.apply(1, &one).block(0), h.apply(1, &one).block(0));
    assert!((op_norm(&comm) - 0.5).abs() < 1e-14);
}

#[test]
fn m2_pair_passes_only_at_one() {
    use rand::SeedableRng;
    let ex = example_2_3();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let r = ex.pair.check_interaction(2, 20, Tolerance::default(), &mut rng);
    assert!(r.checks.iter().filter(|c| c.x == Some(1)).all(|c| c.passed), "{r:?}");
    assert!(!r.passed());
}

#[test]
fn doubling_map_completeness_defect() {
    for (name, oracle) in [("half", 1.0), ("sine", 2.0)] {
        let ex = example_3_1(TrigPolynomial::named(name).unwrap(), 2, 256, 8, 0).unwrap();
        assert!(ex.report.interaction.passed(), "{name}");
        assert!(ex.report.completeness_fails, "{name}");
        assert!((ex.report.completeness_defect - oracle).abs() < 1e-9, "{name}: {}", ex.report.completeness_defect);
    }
}

/// `a = 1 + Û₁` over `ℂ`: `aa* = 2 + Û₁ + Û₁*`, so
/// `E₀[(aa*)^{2k}] = C(4k, 2k)` and `(aa*)^k` has `k` positive degrees.
#[test]
fn trivial_norm_oracle() {
    let (alg, i, _) = trivial_fixture();
    let cp = CrossedProduct::new(&i);
    let a = CrossedProductElement::one(&alg).add(&CrossedProductElement::u(&alg, 1)).unwrap();
    let enc = cp.norm_enclosure(&a, 4).unwrap();
    for s in &enc.steps {
        let k = s.k as u64;
        let e0 = binom(4 * k, 2 * k);
        assert!((s.e0_norm - e0).abs() < 1e-9 * e0, "k={k}");
        assert!((s.lower - e0.powf(1.0 / (4 * k) as f64)).abs() < 1e-12);
        assert_eq!(s.f_size, k as usize);
        assert!(s.upper >= 2.0);
    }
    assert!(enc.lower <= 2.0 && enc.upper >= 2.0);
}

/// On `ℂ` with the identity interaction the unitary `Û₁` is evaluated at `1`.
#[test]
fn trivial_evaluation_and_gauge() {
    let (alg, _, rep) = trivial_fixture();
    let a = CrossedProductElement::one(&alg).add(&CrossedProductElement::u(&alg, 1)).unwrap();
    assert!((rep.evaluate(&a).unwrap()[(0, 0)] - c(2.0)).norm() < 1e-15);
    let rot = rep.gauge_rotate(Complex64::i(), Tolerance::default()).unwrap();
    assert!((rot.evaluate(&a).unwrap()[(0, 0)] - Complex64::new(1.0, 1.0)).norm() < 1e-15);
}
