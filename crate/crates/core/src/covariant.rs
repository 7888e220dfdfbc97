//! Covariant representations: a unital embedding `σ` of the algebra into
//! `M_h` together with the powers of one partial isometry `U₁`.

use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::algebra::{
    ensure_finite, op_norm, partial_isometry_residual, AlgebraElement, ComplexMatrix, FiniteCStarAlgebra,
    Tolerance,
};
use crate::crossed::{CrossedProductElement, Monomial, MonomialType};
use crate::encoding::matrix_serde;
use crate::error::{Error, Result};
use crate::interactions::Interaction;
use crate::report::{CheckOutcome, InteractionReport};

/// Unital *-monomorphism `σ : 𝒜 → M_h`, stored as the images of the matrix
/// units (block by block, row-major inside a block).
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    algebra: FiniteCStarAlgebra,
    hilbert_dim: usize,
    images: Vec<ComplexMatrix>,
}

impl Embedding {
    /// The defining representation on `⊕ ℂ^{n_k}`.
    pub fn inclusion(algebra: &FiniteCStarAlgebra) -> Self {
        let images = algebra.basis().iter().map(AlgebraElement::to_dense).collect();
        Self {
            algebra: algebra.clone(),
            hilbert_dim: algebra.hilbert_dim(),
            images,
        }
    }

    /// Validates the matrix-unit relations, `σ(1) = I` and injectivity.
    pub fn from_images(algebra: &FiniteCStarAlgebra, images: Vec<ComplexMatrix>, tol: Tolerance) -> Result<Self> {
        if images.len() != algebra.dim() {
            return Err(Error::Shape(format!(
                "expected {} matrix-unit images, got {}",
                algebra.dim(),
                images.len()
            )));
        }
        let h = images[0].nrows();
        for (i, m) in images.iter().enumerate() {
            if m.nrows() != h || m.ncols() != h || h == 0 {
                return Err(Error::Shape(format!("image {i} is {}x{}, expected {h}x{h}", m.nrows(), m.ncols())));
            }
            ensure_finite(m, "sigma image")?;
        }
        let emb = Self {
            algebra: algebra.clone(),
            hilbert_dim: h,
            images,
        };
        let residual = emb.monomorphism_residual();
        if !tol.holds(residual) {
            return Err(Error::NotMonomorphism(format!(
                "matrix-unit relations fail with residual {residual:.3e}"
            )));
        }
        for (i, m) in emb.images.iter().enumerate() {
            if op_norm(m) < 0.5 {
                return Err(Error::NotMonomorphism(format!("image of basis element {i} vanishes")));
            }
        }
        Ok(emb)
    }

    /// Per-block image lists, as in the JSON rep spec.
    pub fn from_block_images(
        algebra: &FiniteCStarAlgebra,
        blocks: Vec<Vec<ComplexMatrix>>,
        tol: Tolerance,
    ) -> Result<Self> {
        if blocks.len() != algebra.num_blocks() {
            return Err(Error::Shape(format!(
                "expected images for {} blocks, got {}",
                algebra.num_blocks(),
                blocks.len()
            )));
        }
        for (k, (b, n)) in blocks.iter().zip(algebra.block_dims()).enumerate() {
            if b.len() != n * n {
                return Err(Error::Shape(format!("block {k} needs {} images, got {}", n * n, b.len())));
            }
        }
        Self::from_images(algebra, blocks.into_iter().flatten().collect(), tol)
    }

    /// Max residual over `σ(e_ij)σ(e_lm) = δ_jl σ(e_im)`, `σ(e_ij)* = σ(e_ji)`
    /// and `Σ σ(e_ii) = I`.
    fn monomorphism_residual(&self) -> f64 {
        let offsets = self.algebra.coordinate_offsets();
        let dims = self.algebra.block_dims();
        let idx = |k: usize, i: usize, j: usize| offsets[k] + i * dims[k] + j;
        let h = self.hilbert_dim;
        let mut worst: f64 = 0.0;
        let mut sum = ComplexMatrix::zeros(h, h);
        for (k, &n) in dims.iter().enumerate() {
            for i in 0..n {
                sum += &self.images[idx(k, i, i)];
                for j in 0..n {
                    let e = &self.images[idx(k, i, j)];
                    worst = worst.max(op_norm(&(e.adjoint() - &self.images[idx(k, j, i)])));
                    for (k2, &n2) in dims.iter().enumerate() {
                        for l in 0..n2 {
                            for m in 0..n2 {
                                let prod = e * &self.images[idx(k2, l, m)];
                                let expected = if k == k2 && j == l {
                                    self.images[idx(k, i, m)].clone()
                                } else {
                                    ComplexMatrix::zeros(h, h)
                                };
                                worst = worst.max(op_norm(&(prod - expected)));
                            }
                        }
                    }
                }
            }
        }
        worst.max(op_norm(&(sum - ComplexMatrix::identity(h, h))))
    }

    pub fn algebra(&self) -> &FiniteCStarAlgebra {
        &self.algebra
    }

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    pub fn images(&self) -> &[ComplexMatrix] {
        &self.images
    }

    pub fn apply(&self, a: &AlgebraElement) -> ComplexMatrix {
        let coords = a.to_vector();
        let mut out = ComplexMatrix::zeros(self.hilbert_dim, self.hilbert_dim);
        for (c, m) in coords.iter().zip(&self.images) {
            if *c != Complex64::new(0.0, 0.0) {
                out += m * *c;
            }
        }
        out
    }

    /// Hilbert–Schmidt projection of `m` onto `σ(𝒜)`. The images of the
    /// matrix units are HS-orthogonal, so the coordinates decouple.
    /// Returns the preimage and `‖m − σ(a)‖`.
    pub fn preimage(&self, m: &ComplexMatrix) -> Result<(AlgebraElement, f64)> {
        if m.nrows() != self.hilbert_dim || m.ncols() != self.hilbert_dim {
            return Err(Error::Shape(format!(
                "expected {h}x{h}, got {}x{}",
                m.nrows(),
                m.ncols(),
                h = self.hilbert_dim
            )));
        }
        let coords: Vec<Complex64> = self
            .images
            .iter()
            .map(|e| {
                let inner: Complex64 = e.iter().zip(m.iter()).map(|(x, y)| x.conj() * y).sum();
                inner / e.norm_squared()
            })
            .collect();
        let a = self
            .algebra
            .from_vector(&nalgebra::DVector::from_vec(coords))?;
        let residual = op_norm(&(m - self.apply(&a)));
        Ok((a, residual))
    }
}

/// `(σ, U₁)` with cached powers `Uₙ = U₁ⁿ`.
#[derive(Debug)]
pub struct CovariantRep {
    sigma: Embedding,
    u1: ComplexMatrix,
    powers: Mutex<Vec<Arc<ComplexMatrix>>>,
}

impl Clone for CovariantRep {
    fn clone(&self) -> Self {
        Self {
            sigma: self.sigma.clone(),
            u1: self.u1.clone(),
            powers: Mutex::new(self.powers.lock().expect("power cache").clone()),
        }
    }
}

impl PartialEq for CovariantRep {
    fn eq(&self, other: &Self) -> bool {
        self.sigma == other.sigma && self.u1 == other.u1
    }
}

impl CovariantRep {
    pub fn new(sigma: Embedding, u1: ComplexMatrix, tol: Tolerance) -> Result<Self> {
        let h = sigma.hilbert_dim();
        if u1.nrows() != h || u1.ncols() != h {
            return Err(Error::Shape(format!("U1 is {}x{}, expected {h}x{h}", u1.nrows(), u1.ncols())));
        }
        ensure_finite(&u1, "U1")?;
        let residual = partial_isometry_residual(&u1);
        if !tol.holds(residual) {
            return Err(Error::NotPartialIsometry {
                what: "U1".into(),
                residual,
            });
        }
        Ok(Self {
            powers: Mutex::new(vec![Arc::new(ComplexMatrix::identity(h, h)), Arc::new(u1.clone())]),
            sigma,
            u1,
        })
    }

    pub fn sigma(&self) -> &Embedding {
        &self.sigma
    }

    pub fn algebra(&self) -> &FiniteCStarAlgebra {
        self.sigma.algebra()
    }

    pub fn hilbert_dim(&self) -> usize {
        self.sigma.hilbert_dim()
    }

    pub fn u1(&self) -> &ComplexMatrix {
        &self.u1
    }

    pub fn power(&self, n: u32) -> Arc<ComplexMatrix> {
        let mut cache = self.powers.lock().expect("power cache");
        while cache.len() <= n as usize {
            let next = &self.u1 * cache.last().expect("nonempty").as_ref();
            cache.push(Arc::new(next));
        }
        cache[n as usize].clone()
    }

    /// `Uₓ` is a partial isometry for `1 ≤ x ≤ x_max`.
    pub fn certify_powers(&self, x_max: u32, tol: Tolerance) -> InteractionReport {
        let mut r = InteractionReport::default();
        for x in 1..=x_max {
            r.push(CheckOutcome::scalar(
                "u_partial_isometry",
                Some(x),
                None,
                tol,
                partial_isometry_residual(&self.power(x)),
            ));
        }
        r
    }

    /// Certifies every power at once. `U_{x+1} = U₁Uₓ` is a partial isometry
    /// iff `U₁*U₁` commutes with `Pₓ = UₓUₓ*`, and `P_{x+1} = U₁PₓU₁*`, so
    /// once `Pₓ` repeats all later commutators repeat too.
    pub fn certify_all_powers(&self, tol: Tolerance) -> PowerCertificate {
        let h = self.hilbert_dim();
        let q = self.u1.adjoint() * &self.u1;
        let mut p_prev = ComplexMatrix::identity(h, h);
        let mut max_commutator: f64 = 0.0;
        for x in 1..=(h as u32 + 1) {
            let u = self.power(x);
            let p = u.as_ref() * u.adjoint();
            if op_norm(&(&p - &p_prev)) <= tol.eps {
                return PowerCertificate {
                    certified: tol.holds(max_commutator),
                    stabilised_at: Some(x - 1),
                    max_commutator,
                };
            }
            max_commutator = max_commutator.max(op_norm(&(&q * &p - &p * &q)));
            p_prev = p;
        }
        PowerCertificate {
            certified: false,
            stabilised_at: None,
            max_commutator,
        }
    }

    fn step(&self, kind: MonomialType, x: u32) -> ComplexMatrix {
        let u = self.power(x);
        match kind {
            MonomialType::Pos => u.as_ref().clone(),
            MonomialType::Neg => u.adjoint(),
        }
    }

    fn evaluate_monomial(&self, m: &Monomial) -> ComplexMatrix {
        let mut out = self.sigma.apply(&m.coeffs()[0]);
        for (s, c) in m.steps().iter().zip(&m.coeffs()[1..]) {
            out = out * self.step(m.kind(), *s);
            if !c.is_exact_unit() {
                out = out * self.sigma.apply(c);
            }
        }
        out
    }

    /// `(σ × U)(el)`.
    pub fn evaluate(&self, el: &CrossedProductElement) -> Result<ComplexMatrix> {
        self.algebra().check_same(el.algebra())?;
        let h = self.hilbert_dim();
        let mut out = ComplexMatrix::zeros(h, h);
        for m in el.terms() {
            out += self.evaluate_monomial(m);
        }
        Ok(out)
    }

    /// `U₁ ↦ λU₁`.
    pub fn gauge_rotate(&self, lambda: Complex64, tol: Tolerance) -> Result<Self> {
        if (lambda.norm() - 1.0).abs() > tol.eps {
            return Err(Error::NotUnimodular(lambda));
        }
        Ok(Self {
            sigma: self.sigma.clone(),
            u1: &self.u1 * lambda,
            powers: Mutex::new(vec![
                Arc::new(ComplexMatrix::identity(self.hilbert_dim(), self.hilbert_dim())),
                Arc::new(&self.u1 * lambda),
            ]),
        })
    }

    pub fn amplify_regular(&self, window: u32) -> RegularAmplification {
        RegularAmplification {
            base: self.clone(),
            window: window.max(1),
        }
    }

    pub fn to_spec(&self) -> RepSpec {
        let offsets = self.algebra().coordinate_offsets();
        let sigma_images = self
            .algebra()
            .block_dims()
            .iter()
            .enumerate()
            .map(|(k, n)| self.sigma.images[offsets[k]..offsets[k] + n * n].to_vec())
            .collect();
        RepSpec {
            hilbert_dim: self.hilbert_dim(),
            sigma_images: Some(sigma_images),
            u1: self.u1.clone(),
        }
    }

    pub fn from_spec(algebra: &FiniteCStarAlgebra, spec: RepSpec, tol: Tolerance) -> Result<Self> {
        let sigma = match spec.sigma_images {
            Some(blocks) => Embedding::from_block_images(algebra, blocks, tol)?,
            None => Embedding::inclusion(algebra),
        };
        if sigma.hilbert_dim() != spec.hilbert_dim {
            return Err(Error::Shape(format!(
                "hilbert_dim is {} but sigma acts on dimension {}",
                spec.hilbert_dim,
                sigma.hilbert_dim()
            )));
        }
        Self::new(sigma, spec.u1, tol)
    }
}

/// JSON form `{"hilbert_dim", "sigma_images", "U1"}`. Omitting
/// `sigma_images` means the inclusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepSpec {
    pub hilbert_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "block_images_serde")]
    pub sigma_images: Option<Vec<Vec<ComplexMatrix>>>,
    #[serde(rename = "U1", with = "matrix_serde")]
    pub u1: ComplexMatrix,
}

mod block_images_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::algebra::ComplexMatrix;
    use crate::encoding::{matrix_from_json, matrix_to_json, MatrixJson};

    pub fn serialize<S: Serializer>(v: &Option<Vec<Vec<ComplexMatrix>>>, s: S) -> Result<S::Ok, S::Error> {
        let j: Option<Vec<Vec<MatrixJson>>> = v
            .as_ref()
            .map(|blocks| blocks.iter().map(|b| b.iter().map(matrix_to_json).collect()).collect());
        j.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<Vec<ComplexMatrix>>>, D::Error> {
        let j: Option<Vec<Vec<MatrixJson>>> = Option::deserialize(d)?;
        j.map(|blocks| {
            blocks
                .iter()
                .map(|b| b.iter().map(|m| matrix_from_json(m).map_err(serde::de::Error::custom)).collect())
                .collect()
        })
        .transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerCertificate {
    pub certified: bool,
    /// First `x` with `P_{x+1} = Pₓ`.
    pub stabilised_at: Option<u32>,
    pub max_commutator: f64,
}

/// Checks covariance (4.1), and that `Uₓ*σ(a)Uₓ` lies in `σ(𝒜)` and equals
/// `σ(ℋₓ(a))`. Samples are the unit, the matrix units, then random elements.
pub fn verify_covariant(
    rep: &CovariantRep,
    interaction: &Interaction,
    x_max: u32,
    num_samples: usize,
    tol: Tolerance,
    rng: &mut dyn RngCore,
) -> Result<InteractionReport> {
    let alg = interaction.algebra();
    alg.check_same(rep.algebra())?;
    let mut samples = vec![alg.one()];
    samples.extend(alg.basis());
    samples.extend((0..num_samples).map(|_| alg.random_element(rng)));
    let sigma: Vec<ComplexMatrix> = samples.iter().map(|a| rep.sigma.apply(a)).collect();
    let idx: Vec<usize> = (0..samples.len()).collect();
    let desc = |i: usize| json!({"a": serde_json::to_value(&samples[i]).expect("elements serialize")});
    let mut r = rep.certify_powers(x_max, tol);
    for x in 1..=x_max {
        let u = rep.power(x);
        let ut = u.adjoint();
        r.push(CheckOutcome::measure("covariance_v", Some(x), None, tol, &idx, |&i| {
            let lhs = rep.sigma.apply(&interaction.v().apply(x, &samples[i]));
            (op_norm(&(lhs - u.as_ref() * &sigma[i] * &ut)), desc(i))
        }));
        let conj: Vec<ComplexMatrix> = sigma.iter().map(|s| &ut * s * u.as_ref()).collect();
        r.push(CheckOutcome::measure("dual_in_range", Some(x), None, tol, &idx, |&i| {
            let residual = rep.sigma.preimage(&conj[i]).map(|(_, r)| r).unwrap_or(f64::INFINITY);
            (residual, desc(i))
        }));
        r.push(CheckOutcome::measure("covariance_h", Some(x), None, tol, &idx, |&i| {
            let rhs = rep.sigma.apply(&interaction.h().apply(x, &samples[i]));
            (op_norm(&(&conj[i] - rhs)), desc(i))
        }));
    }
    Ok(r)
}

/// Truncated regular representation on `⊕_{g=−W..W} ℂ^h`: algebra
/// elements act diagonally and `Ûₓ` moves coordinate `g − x` to `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularAmplification {
    base: CovariantRep,
    window: u32,
}

impl RegularAmplification {
    pub fn base(&self) -> &CovariantRep {
        &self.base
    }

    pub fn window(&self) -> u32 {
        self.window
    }

    pub fn dim(&self) -> usize {
        (2 * self.window as usize + 1) * self.base.hilbert_dim()
    }

    /// Evaluates an explicit monomial sum. For a non-mixed word the
    /// intermediate coordinates run monotonically between the endpoints,
    /// so the product of truncated operators is the base evaluation placed
    /// at blocks `(g, g − D)` (or `(g, g + D)` for `Û*`) inside the window.
    pub fn evaluate(&self, el: &CrossedProductElement) -> Result<ComplexMatrix> {
        self.base.algebra().check_same(el.algebra())?;
        let required = el.max_abs_degree();
        if self.window < required {
            return Err(Error::WindowTooSmall {
                window: self.window as usize,
                required: required as usize,
            });
        }
        let h = self.base.hilbert_dim();
        let w = self.window as i64;
        let mut out = ComplexMatrix::zeros(self.dim(), self.dim());
        for m in el.terms() {
            let block = self.base.evaluate_monomial(m);
            let d = m.signed_degree();
            for g in -w..=w {
                let col = g - d;
                if col < -w || col > w {
                    continue;
                }
                let (r0, c0) = (((g + w) as usize) * h, ((col + w) as usize) * h);
                let mut view = out.view_mut((r0, c0), (h, h));
                view += &block;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::Action;
    use crate::interactions::derive_dual_from_rep;
    use rand::SeedableRng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn shift(n: usize) -> (Interaction, CovariantRep) {
        let alg = FiniteCStarAlgebra::diagonal(n).unwrap();
        let s = ComplexMatrix::from_fn(n, n, |i, j| if i == j + 1 { c(1.0) } else { c(0.0) });
        let tol = Tolerance::default();
        let v = Action::conjugation(&alg, s.clone(), tol).unwrap();
        let h = derive_dual_from_rep(&v, &s, tol).unwrap();
        let rep = CovariantRep::new(Embedding::inclusion(&alg), s, tol).unwrap();
        (Interaction::new(v, h).unwrap(), rep)
    }

    #[test]
    fn inclusion_preimage_is_exact() {
        let alg = FiniteCStarAlgebra::new(vec![2, 1]).unwrap();
        let emb = Embedding::inclusion(&alg);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(40);
        let a = alg.random_element(&mut rng);
        let (b, r) = emb.preimage(&emb.apply(&a)).unwrap();
        assert!(r < 1e-14 && b.distance(&a) < 1e-14);
        let (_, r) = emb.preimage(&ComplexMatrix::from_element(3, 3, c(1.0))).unwrap();
        assert!(r > 0.5);
    }

    #[test]
    fn bad_embeddings_are_rejected() {
        let alg = FiniteCStarAlgebra::diagonal(2).unwrap();
        let tol = Tolerance::default();
        let e = |i: usize| ComplexMatrix::from_fn(2, 2, |r, s| if r == i && s == i { c(1.0) } else { c(0.0) });
        assert!(Embedding::from_images(&alg, vec![e(0), e(1)], tol).is_ok());
        assert!(matches!(
            Embedding::from_images(&alg, vec![e(0), e(0)], tol),
            Err(Error::NotMonomorphism(_))
        ));
        assert!(matches!(Embedding::from_images(&alg, vec![e(0)], tol), Err(Error::Shape(_))));
        // Doubling both units into M_4 is fine: σ(a) = a ⊗ 1.
        let d = |i: usize| ComplexMatrix::from_fn(4, 4, |r, s| if r == s && r / 2 == i { c(1.0) } else { c(0.0) });
        assert_eq!(Embedding::from_images(&alg, vec![d(0), d(1)], tol).unwrap().hilbert_dim(), 4);
    }

    #[test]
    fn shift_rep_is_covariant_and_swapped_is_not() {
        let (i, rep) = shift(4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        let tol = Tolerance::default();
        let r = verify_covariant(&rep, &i, 4, 10, tol, &mut rng).unwrap();
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
        let r = verify_covariant(&rep, &i.swapped(), 2, 10, tol, &mut rng).unwrap();
        let cov = r.find("covariance_v", Some(1), None).unwrap();
        assert!(!cov.passed && cov.worst_residual > 0.5);
        let cert = rep.certify_all_powers(tol);
        assert!(cert.certified);
        assert_eq!(cert.stabilised_at, Some(4));
    }

    #[test]
    fn non_power_partial_isometry_is_not_certified() {
        let alg = FiniteCStarAlgebra::diagonal(2).unwrap();
        let tol = Tolerance::default();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // Projection composed with a rotation: U₁ is a partial isometry, U₂ is not.
        let u = ComplexMatrix::from_row_slice(2, 2, &[c(s), c(0.0), c(s), c(0.0)]);
        let rep = CovariantRep::new(Embedding::inclusion(&alg), u, tol).unwrap();
        assert!(!rep.certify_powers(2, tol).passed());
        assert!(!rep.certify_all_powers(tol).certified);
    }

    #[test]
    fn gauge_and_amplification_basics() {
        let (i, rep) = shift(3);
        let alg = i.algebra().clone();
        let tol = Tolerance::default();
        assert!(matches!(rep.gauge_rotate(c(2.0), tol), Err(Error::NotUnimodular(_))));
        let r = rep.gauge_rotate(c(-1.0), tol).unwrap();
        let u2 = CrossedProductElement::u(&alg, 2);
        assert_eq!(r.evaluate(&u2).unwrap(), rep.evaluate(&u2).unwrap());
        let amp = rep.amplify_regular(2);
        let m = amp.evaluate(&CrossedProductElement::u(&alg, 1)).unwrap();
        assert_eq!(m.nrows(), 15);
        assert_eq!(m.view((3, 0), (3, 3)).clone_owned(), *rep.u1());
        assert_eq!(m.view((0, 3), (3, 3)).norm(), 0.0);
        assert!(matches!(amp.evaluate(&CrossedProductElement::u(&alg, 3)), Err(Error::WindowTooSmall { .. })));
    }

    #[test]
    fn rep_spec_round_trip() {
        let (_, rep) = shift(3);
        let tol = Tolerance::default();
        let text = serde_json::to_string(&rep.to_spec()).unwrap();
        let back = CovariantRep::from_spec(rep.algebra(), serde_json::from_str(&text).unwrap(), tol).unwrap();
        assert_eq!(back, rep);
    }
}
