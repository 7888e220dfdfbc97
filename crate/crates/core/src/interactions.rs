//! Interactions `(𝒱, ℋ)`: axiom checks, completeness, the projection
//! families `𝒱ₓ(1)`, `ℋₓ(1)`, the induced conditional expectations and the
//! reconstruction of `ℋ` from `𝒱`.

use std::sync::Mutex;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::RngCore;

use crate::actions::{basis_matrix, Action, LinearMapOnAlgebra, SemigroupAction};
use crate::algebra::{
    is_partial_isometry, partial_isometry_residual, AlgebraElement, ComplexMatrix,
    FiniteCStarAlgebra, StarAlgebra, Tolerance,
};
use crate::error::{Error, Result};
use crate::report::{CheckOutcome, InteractionReport};

pub const DEFAULT_X_MAX: u32 = 4;
pub const DEFAULT_SAMPLES: usize = 50;
/// Smallest admissible singular value of `𝒱ₓ` restricted to `Pₓ𝒜Pₓ`.
pub const INJECTIVITY_THRESHOLD: f64 = 1e-7;

fn singles<A: StarAlgebra + ?Sized>(alg: &A, n: usize, rng: &mut dyn RngCore) -> Vec<A::Element> {
    let mut out = vec![alg.one()];
    while out.len() < n.max(1) {
        out.push(alg.sample(rng));
    }
    out
}

fn pairs<A: StarAlgebra + ?Sized>(
    alg: &A,
    n: usize,
    rng: &mut dyn RngCore,
) -> Vec<(A::Element, A::Element)> {
    let mut out = vec![(alg.one(), alg.one())];
    while out.len() < n.max(1) {
        let a = alg.sample(rng);
        let b = alg.sample(rng);
        out.push((a, b));
    }
    out
}

fn triples<A: StarAlgebra + ?Sized>(
    alg: &A,
    n: usize,
    rng: &mut dyn RngCore,
) -> Vec<(A::Element, A::Element, A::Element)> {
    let mut out = vec![(alg.one(), alg.one(), alg.one())];
    while out.len() < n.max(1) {
        let a = alg.sample(rng);
        let b = alg.sample(rng);
        let c = alg.sample(rng);
        out.push((a, b, c));
    }
    out
}

fn projection_residual_generic<A: StarAlgebra + ?Sized>(alg: &A, p: &A::Element) -> f64 {
    let herm = alg.distance(p, &alg.adjoint(p));
    let idem = alg.distance(&alg.mul(p, p), p);
    herm.max(idem)
}

/// Two actions on the same algebra, viewed as a candidate interaction. This
/// is the generic entry point; [`Interaction`] wraps it for matrix algebras.
pub struct ActionPair<'a, A: StarAlgebra + ?Sized> {
    pub algebra: &'a A,
    pub v: &'a dyn SemigroupAction<A>,
    pub h: &'a dyn SemigroupAction<A>,
}

impl<'a, A: StarAlgebra + ?Sized> ActionPair<'a, A> {
    pub fn new(algebra: &'a A, v: &'a dyn SemigroupAction<A>, h: &'a dyn SemigroupAction<A>) -> Self {
        Self { algebra, v, h }
    }

    fn axioms_at(&self, x: u32, num_samples: usize, tol: Tolerance, rng: &mut dyn RngCore) -> InteractionReport {
        let alg = self.algebra;
        let (v, h) = (self.v, self.h);
        let mut report = InteractionReport::default();
        let s = singles(alg, num_samples, rng);
        report.push(CheckOutcome::measure("axiom_i", Some(x), None, tol, &s, |a| {
            let lhs = v.apply(x, &h.apply(x, &v.apply(x, a)));
            (alg.distance(&lhs, &v.apply(x, a)), alg.describe(a))
        }));
        report.push(CheckOutcome::measure("axiom_ii", Some(x), None, tol, &s, |a| {
            let lhs = h.apply(x, &v.apply(x, &h.apply(x, a)));
            (alg.distance(&lhs, &h.apply(x, a)), alg.describe(a))
        }));
        // (iii): 𝒱ₓ multiplicative when one factor is ℋₓ(c), in either slot.
        let p = pairs(alg, num_samples, rng);
        report.push(CheckOutcome::measure("axiom_iii", Some(x), None, tol, &p, |(c, b)| {
            let r = h.apply(x, c);
            let left = alg.distance(&v.apply(x, &alg.mul(&r, b)), &alg.mul(&v.apply(x, &r), &v.apply(x, b)));
            let right = alg.distance(&v.apply(x, &alg.mul(b, &r)), &alg.mul(&v.apply(x, b), &v.apply(x, &r)));
            (left.max(right), alg.describe(c))
        }));
        report.push(CheckOutcome::measure("axiom_iv", Some(x), None, tol, &p, |(c, b)| {
            let r = v.apply(x, c);
            let left = alg.distance(&h.apply(x, &alg.mul(&r, b)), &alg.mul(&h.apply(x, &r), &h.apply(x, b)));
            let right = alg.distance(&h.apply(x, &alg.mul(b, &r)), &alg.mul(&h.apply(x, b), &h.apply(x, &r)));
            (left.max(right), alg.describe(c))
        }));
        report
    }

    /// Items (i)–(iv) of the interaction definition for `x = 1..=x_max`.
    pub fn check_interaction(
        &self,
        x_max: u32,
        num_samples: usize,
        tol: Tolerance,
        rng: &mut dyn RngCore,
    ) -> InteractionReport {
        let mut report = InteractionReport::default();
        for x in 1..=x_max.max(1) {
            report.extend(self.axioms_at(x, num_samples, tol, rng));
        }
        report
    }

    fn require_interaction(&self, xs: impl Iterator<Item = u32>, num_samples: usize, tol: Tolerance, rng: &mut dyn RngCore) -> Result<()> {
        for x in xs {
            let pre = self.axioms_at(x, num_samples, tol, rng);
            let failure = pre.failures().next().map(|f| {
                format!("{} fails at x = {x} (residual {:.3e})", f.check, f.worst_residual)
            });
            if let Some(msg) = failure {
                return Err(Error::NotAnInteraction(msg));
            }
        }
        Ok(())
    }

    /// Completeness: `ℋₓ𝒱ₓ(a) = ℋₓ(1)aℋₓ(1)`, `𝒱ₓℋₓ(a) = 𝒱ₓ(1)a𝒱ₓ(1)` on
    /// samples and `[ℋᵧ(1), 𝒱ₓ(1)] = 0` for all `x, y ≤ x_max`.
    pub fn check_complete(
        &self,
        x_max: u32,
        num_samples: usize,
        tol: Tolerance,
        rng: &mut dyn RngCore,
    ) -> Result<InteractionReport> {
        let x_max = x_max.max(1);
        self.require_interaction(1..=x_max, num_samples, tol, rng)?;
        let alg = self.algebra;
        let (v, h) = (self.v, self.h);
        let one = alg.one();
        let mut report = InteractionReport::default();
        for x in 1..=x_max {
            let hx1 = h.apply(x, &one);
            let vx1 = v.apply(x, &one);
            let s = singles(alg, num_samples, rng);
            report.push(CheckOutcome::measure("complete_h_of_v", Some(x), None, tol, &s, |a| {
                let lhs = h.apply(x, &v.apply(x, a));
                let rhs = alg.mul(&alg.mul(&hx1, a), &hx1);
                (alg.distance(&lhs, &rhs), alg.describe(a))
            }));
            report.push(CheckOutcome::measure("complete_v_of_h", Some(x), None, tol, &s, |a| {
                let lhs = v.apply(x, &h.apply(x, a));
                let rhs = alg.mul(&alg.mul(&vx1, a), &vx1);
                (alg.distance(&lhs, &rhs), alg.describe(a))
            }));
        }
        for x in 1..=x_max {
            let vx1 = v.apply(x, &one);
            for y in 1..=x_max {
                let hy1 = h.apply(y, &one);
                let r = alg.distance(&alg.mul(&hy1, &vx1), &alg.mul(&vx1, &hy1));
                report.push(CheckOutcome::scalar("projections_commute", Some(x), Some(y), tol, r));
            }
        }
        Ok(report)
    }

    /// Projection structure of `𝒱ₓ(1)` and `ℋₓ(1)`: projections, decreasing,
    /// absorption `𝒱ᵧ(ℋₓ(1)a) = 𝒱ᵧ(a)` for `y ≥ x`, and units on ranges.
    pub fn check_projection_family(
        &self,
        x_max: u32,
        num_samples: usize,
        tol: Tolerance,
        rng: &mut dyn RngCore,
    ) -> Result<InteractionReport> {
        let x_max = x_max.max(1);
        self.require_interaction(1..=x_max, num_samples, tol, rng)?;
        let alg = self.algebra;
        let one = alg.one();
        let mut report = InteractionReport::default();
        let sides: [(&str, &dyn SemigroupAction<A>, &dyn SemigroupAction<A>); 2] =
            [("v", self.v, self.h), ("h", self.h, self.v)];
        for (name, f, g) in sides {
            let units: Vec<A::Element> = (0..=x_max).map(|x| f.apply(x, &one)).collect();
            for x in 0..=x_max {
                let r = projection_residual_generic(alg, &units[x as usize]);
                report.push(CheckOutcome::scalar(&format!("{name}_unit_is_projection"), Some(x), None, tol, r));
            }
            for x in 0..=x_max {
                for y in x..=x_max {
                    let (px, py) = (&units[x as usize], &units[y as usize]);
                    let r = alg.distance(&alg.mul(px, py), py).max(alg.distance(&alg.mul(py, px), py));
                    report.push(CheckOutcome::scalar(&format!("{name}_unit_decreasing"), Some(x), Some(y), tol, r));
                }
            }
            for x in 1..=x_max {
                let gx1 = g.apply(x, &one);
                let fx1 = &units[x as usize];
                for y in x..=x_max {
                    let s = singles(alg, num_samples, rng);
                    report.push(CheckOutcome::measure(
                        &format!("{name}_absorption"),
                        Some(x),
                        Some(y),
                        tol,
                        &s,
                        |a| {
                            let fa = f.apply(y, a);
                            let l = alg.distance(&f.apply(y, &alg.mul(&gx1, a)), &fa);
                            let r = alg.distance(&f.apply(y, &alg.mul(a, &gx1)), &fa);
                            (l.max(r), alg.describe(a))
                        },
                    ));
                    report.push(CheckOutcome::measure(
                        &format!("{name}_unit_on_range"),
                        Some(x),
                        Some(y),
                        tol,
                        &s,
                        |c| {
                            let a = f.apply(y, c);
                            let l = alg.distance(&alg.mul(fx1, &a), &a);
                            let r = alg.distance(&alg.mul(&a, fx1), &a);
                            (l.max(r), alg.describe(c))
                        },
                    ));
                }
            }
        }
        Ok(report)
    }

    /// `E_𝒱 = 𝒱ₓℋₓ` and `E_ℋ = ℋₓ𝒱ₓ` as conditional expectations, plus the
    /// inverse-pair property of `𝒱ₓ` and `ℋₓ` between the two ranges.
    pub fn check_conditional_expectations(
        &self,
        x: u32,
        num_samples: usize,
        tol: Tolerance,
        rng: &mut dyn RngCore,
    ) -> Result<InteractionReport> {
        self.require_interaction(std::iter::once(x), num_samples, tol, rng)?;
        let alg = self.algebra;
        let mut report = InteractionReport::default();
        let sides: [(&str, &dyn SemigroupAction<A>, &dyn SemigroupAction<A>); 2] =
            [("e_v", self.v, self.h), ("e_h", self.h, self.v)];
        for (name, f, g) in sides {
            let e = |a: &A::Element| f.apply(x, &g.apply(x, a));
            let t = triples(alg, num_samples, rng);
            report.push(CheckOutcome::measure(&format!("{name}_idempotent"), Some(x), None, tol, &t, |(a, _, _)| {
                let ea = e(a);
                (alg.distance(&e(&ea), &ea), alg.describe(a))
            }));
            report.push(CheckOutcome::measure(&format!("{name}_bimodule"), Some(x), None, tol, &t, |(a, b, c)| {
                let (ea, ec) = (e(a), e(c));
                let lhs = e(&alg.mul(&alg.mul(&ea, b), &ec));
                let rhs = alg.mul(&alg.mul(&ea, &e(b)), &ec);
                (alg.distance(&lhs, &rhs), alg.describe(b))
            }));
            report.push(CheckOutcome::measure(&format!("{name}_positive"), Some(x), None, tol, &t, |(a, _, _)| {
                let p = alg.mul(&alg.adjoint(a), a);
                let m = alg.min_hermitian_spectrum(&e(&p));
                ((-m).max(0.0), alg.describe(&p))
            }));
            // g maps the range of f back: g(f(r)) = r for r = g(c).
            report.push(CheckOutcome::measure(&format!("{name}_inverse_pair"), Some(x), None, tol, &t, |(c, _, _)| {
                let r = g.apply(x, c);
                (alg.distance(&g.apply(x, &f.apply(x, &r)), &r), alg.describe(c))
            }));
        }
        Ok(report)
    }
}

/// Cached `𝒱ₙ(1)` (or `ℋₙ(1)`) for growing `n`.
#[derive(Debug, Default)]
struct UnitCache(Mutex<Vec<AlgebraElement>>);

impl UnitCache {
    fn get(&self, action: &Action, n: u32) -> AlgebraElement {
        let mut cache = self.0.lock().expect("unit cache");
        if cache.is_empty() {
            cache.push(action.algebra().one());
        }
        while cache.len() <= n as usize {
            let next = action.generator().apply(cache.last().expect("nonempty"));
            cache.push(next);
        }
        cache[n as usize].clone()
    }
}

impl Clone for UnitCache {
    fn clone(&self) -> Self {
        Self(Mutex::new(self.0.lock().expect("unit cache").clone()))
    }
}

/// A pair of actions on a finite-dimensional algebra, with cached unit
/// images and a record of the largest `x` certified so far.
#[derive(Debug, Clone)]
pub struct Interaction {
    v: Action,
    h: Action,
    certified_up_to: Option<u32>,
    v1: UnitCache,
    h1: UnitCache,
}

impl Interaction {
    pub fn new(v: Action, h: Action) -> Result<Self> {
        v.algebra().check_same(h.algebra())?;
        Ok(Self {
            v,
            h,
            certified_up_to: None,
            v1: UnitCache::default(),
            h1: UnitCache::default(),
        })
    }

    /// `𝒱 = ℋ = Id`.
    pub fn identity(algebra: &FiniteCStarAlgebra) -> Self {
        Self::new(Action::identity(algebra), Action::identity(algebra)).expect("same algebra")
    }

    pub fn algebra(&self) -> &FiniteCStarAlgebra {
        self.v.algebra()
    }

    pub fn v(&self) -> &Action {
        &self.v
    }

    pub fn h(&self) -> &Action {
        &self.h
    }

    /// `𝒱ₙ(1)`.
    pub fn v_unit(&self, n: u32) -> AlgebraElement {
        self.v1.get(&self.v, n)
    }

    /// `ℋₙ(1)`.
    pub fn h_unit(&self, n: u32) -> AlgebraElement {
        self.h1.get(&self.h, n)
    }

    pub fn certified_up_to(&self) -> Option<u32> {
        self.certified_up_to
    }

    /// The same pair with the roles of `𝒱` and `ℋ` exchanged.
    pub fn swapped(&self) -> Self {
        Self::new(self.h.clone(), self.v.clone()).expect("same algebra")
    }

    pub fn pair(&self) -> ActionPair<'_, FiniteCStarAlgebra> {
        ActionPair::new(self.algebra(), &self.v, &self.h)
    }

    pub fn check_interaction(&self, x_max: u32, num_samples: usize, tol: Tolerance, rng: &mut dyn RngCore) -> InteractionReport {
        self.pair().check_interaction(x_max, num_samples, tol, rng)
    }

    /// Runs [`Self::check_interaction`] and records `x_max` on success.
    pub fn certify(&mut self, x_max: u32, num_samples: usize, tol: Tolerance, rng: &mut dyn RngCore) -> InteractionReport {
        let report = self.check_interaction(x_max, num_samples, tol, rng);
        if report.passed() {
            self.certified_up_to = Some(self.certified_up_to.map_or(x_max, |c| c.max(x_max)));
        }
        report
    }

    pub fn check_complete(&self, x_max: u32, num_samples: usize, tol: Tolerance, rng: &mut dyn RngCore) -> Result<InteractionReport> {
        self.pair().check_complete(x_max, num_samples, tol, rng)
    }

    pub fn check_projection_family(&self, x_max: u32, num_samples: usize, tol: Tolerance, rng: &mut dyn RngCore) -> Result<InteractionReport> {
        self.pair().check_projection_family(x_max, num_samples, tol, rng)
    }

    pub fn check_conditional_expectations(&self, x: u32, num_samples: usize, tol: Tolerance, rng: &mut dyn RngCore) -> Result<InteractionReport> {
        self.pair().check_conditional_expectations(x, num_samples, tol, rng)
    }
}

/// `ℋ` implemented by `a ↦ U1* a U1` on the defining representation.
pub fn derive_dual_from_rep(v: &Action, u1: &ComplexMatrix, tol: Tolerance) -> Result<Action> {
    let alg = v.algebra();
    let h = alg.hilbert_dim();
    if u1.nrows() != h || u1.ncols() != h {
        return Err(Error::Shape(format!(
            "U1 must be {h}x{h}, got {}x{}",
            u1.nrows(),
            u1.ncols()
        )));
    }
    if !is_partial_isometry(u1, tol) {
        return Err(Error::NotPartialIsometry {
            what: "U1".into(),
            residual: partial_isometry_residual(u1),
        });
    }
    Action::conjugation(alg, u1.adjoint(), tol)
}

/// The maps `ℋₓ`, `x = 0..=x_max`, reconstructed from `𝒱` and the
/// projections `Pₓ`.
#[derive(Debug, Clone)]
pub struct DualTable {
    maps: Vec<LinearMapOnAlgebra>,
    /// Largest residual `‖𝒱ₓ(ℋₓ(e)) − 𝒱ₓ(1)e𝒱ₓ(1)‖` over the basis.
    pub solve_residual: f64,
    /// Smallest singular value of `𝒱ₓ` on the corners, over `x ≥ 1`.
    pub sigma_min: f64,
}

impl DualTable {
    pub fn x_max(&self) -> u32 {
        (self.maps.len() - 1) as u32
    }

    pub fn map(&self, x: u32) -> Option<&LinearMapOnAlgebra> {
        self.maps.get(x as usize)
    }

    pub fn apply(&self, x: u32, a: &AlgebraElement) -> Option<AlgebraElement> {
        self.map(x).map(|m| m.apply(a))
    }

    /// The action generated by `ℋ₁`.
    pub fn generated_action(&self) -> Option<Action> {
        self.maps.get(1).cloned().map(Action::from_positive)
    }
}

fn hypothesis(item: &str, residual: f64, detail: impl Into<String>) -> Error {
    Error::HypothesisFailed {
        item: item.to_string(),
        residual,
        detail: detail.into(),
    }
}

/// Orthonormal basis (coordinate columns) of `P𝒜P`.
fn corner_basis(p: &AlgebraElement) -> ComplexMatrix {
    let alg = p.algebra();
    let spanning = basis_matrix(&alg, |e| p.mul(e).mul(p));
    let svd = spanning.svd(true, false);
    let u = svd.u.expect("u requested");
    let scale = svd.singular_values.max().max(1.0);
    let cols: Vec<DVector<Complex64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 1e-9 * scale)
        .map(|(k, _)| u.column(k).into_owned())
        .collect();
    if cols.is_empty() {
        ComplexMatrix::zeros(alg.dim(), 0)
    } else {
        ComplexMatrix::from_columns(&cols)
    }
}

/// Reconstructs `ℋₓ(a) = 𝒱ₓ⁻¹(𝒱ₓ(1)a𝒱ₓ(1))` with `𝒱ₓ⁻¹` the inverse of
/// `𝒱ₓ` on `Pₓ𝒜Pₓ`. `p[x]` is `Pₓ` for `x = 0..=x_max`.
///
/// Every structural hypothesis is verified first and reported by name:
/// `p0_unit`, `p_projection`, `p_decreasing`, `v_unit_projection`,
/// `v_range_in_corner`, `commute_a`, `shift_b`, `multiplicative_c`,
/// `corner_reached` and, after the solve, `composition`.
pub fn derive_dual_from_projections(v: &Action, p: &[AlgebraElement], tol: Tolerance) -> Result<DualTable> {
    let alg = v.algebra();
    if p.is_empty() {
        return Err(Error::Shape("need at least P0".into()));
    }
    for q in p {
        alg.check_same(&q.algebra())?;
    }
    let x_max = (p.len() - 1) as u32;
    let one = alg.one();

    let r = p[0].distance(&one);
    if !tol.holds(r) {
        return Err(hypothesis("p0_unit", r, "P0 must be the unit"));
    }
    for (x, q) in p.iter().enumerate() {
        let r = crate::algebra::projection_residual(q);
        if !tol.holds(r) {
            return Err(hypothesis("p_projection", r, format!("P{x} is not a projection")));
        }
    }
    for x in 0..p.len() {
        for y in x..p.len() {
            let r = p[x].mul(&p[y]).distance(&p[y]);
            if !tol.holds(r) {
                return Err(hypothesis("p_decreasing", r, format!("P{x} does not dominate P{y}")));
            }
        }
    }
    let v_units: Vec<AlgebraElement> = (0..=x_max).map(|x| v.apply(x, &one)).collect();
    let basis = alg.basis();
    for x in 1..=x_max {
        let vx1 = &v_units[x as usize];
        let r = crate::algebra::projection_residual(vx1);
        if !tol.holds(r) {
            return Err(hypothesis("v_unit_projection", r, format!("V_{x}(1) is not a projection")));
        }
        let r = basis
            .iter()
            .map(|e| {
                let img = v.apply(x, e);
                vx1.mul(&img).mul(vx1).distance(&img)
            })
            .fold(0.0, f64::max);
        if !tol.holds(r) {
            return Err(hypothesis("v_range_in_corner", r, format!("V_{x}(A) leaves V_{x}(1)AV_{x}(1)")));
        }
    }
    for x in 0..=x_max {
        for y in 0..=x_max {
            let (vx1, py) = (&v_units[x as usize], &p[y as usize]);
            let r = vx1.mul(py).distance(&py.mul(vx1));
            if !tol.holds(r) {
                return Err(hypothesis("commute_a", r, format!("V_{x}(1) and P{y} do not commute")));
            }
        }
    }
    for x in 0..=x_max {
        for y in 0..=(x_max - x) {
            let lhs = v.apply(x, &p[(x + y) as usize]);
            let rhs = v_units[x as usize].mul(&p[y as usize]);
            let r = lhs.distance(&rhs);
            if !tol.holds(r) {
                return Err(hypothesis("shift_b", r, format!("V_{x}(P{}) != V_{x}(1)P{y}", x + y)));
            }
        }
    }

    let mut maps = vec![LinearMapOnAlgebra::identity(alg)];
    let mut solve_residual: f64 = 0.0;
    let mut sigma_min = f64::INFINITY;
    for x in 1..=x_max {
        let px = &p[x as usize];
        let vx1 = &v_units[x as usize];
        let spanning: Vec<AlgebraElement> = basis
            .iter()
            .map(|e| px.mul(e).mul(px))
            .filter(|c| !c.is_zero())
            .collect();
        let mut worst: f64 = 0.0;
        for a in &spanning {
            for b in &spanning {
                let r = v.apply(x, &a.mul(b)).distance(&v.apply(x, a).mul(&v.apply(x, b)));
                worst = worst.max(r);
            }
        }
        if !tol.holds(worst) {
            return Err(hypothesis("multiplicative_c", worst, format!("V_{x} is not multiplicative on P{x}AP{x}")));
        }

        let q = corner_basis(px);
        let m = &*v.iterate_matrix(x) * &q;
        let s = if m.ncols() == 0 {
            0.0
        } else {
            m.singular_values().min()
        };
        sigma_min = sigma_min.min(s);
        if s < INJECTIVITY_THRESHOLD {
            return Err(Error::SingularRestriction { x, sigma_min: s });
        }
        let svd = m.clone().svd(true, true);
        let mut h = ComplexMatrix::zeros(alg.dim(), alg.dim());
        for (k, e) in basis.iter().enumerate() {
            let target = vx1.mul(e).mul(vx1);
            let coeffs = svd
                .solve(&target.to_vector(), 0.0)
                .map_err(|msg| hypothesis("corner_reached", f64::INFINITY, msg))?;
            let hk = &q * coeffs;
            let sol = alg.from_vector(&hk)?;
            let r = v.apply(x, &sol).distance(&target);
            if !tol.holds(r) {
                return Err(hypothesis(
                    "corner_reached",
                    r,
                    format!("V_{x}(1)e V_{x}(1) is outside V_{x}(P{x}AP{x}) for basis element {k}"),
                ));
            }
            solve_residual = solve_residual.max(r);
            h.set_column(k, &hk);
        }
        maps.push(LinearMapOnAlgebra::superoperator(alg, h)?);
    }

    for x in 1..=x_max {
        for y in 1..=(x_max - x) {
            let r = basis
                .iter()
                .map(|e| maps[x as usize].apply(&maps[y as usize].apply(e)).distance(&maps[(x + y) as usize].apply(e)))
                .fold(0.0, f64::max);
            if !tol.holds(r) {
                return Err(hypothesis("composition", r, format!("H_{x} H_{y} != H_{}", x + y)));
            }
        }
    }
    Ok(DualTable {
        maps,
        solve_residual,
        sigma_min,
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

    fn shift_interaction(n: usize) -> Interaction {
        let alg = FiniteCStarAlgebra::diagonal(n).unwrap();
        let tol = Tolerance::default();
        let v = Action::conjugation(&alg, shift(n), tol).unwrap();
        let h = derive_dual_from_rep(&v, &shift(n), tol).unwrap();
        Interaction::new(v, h).unwrap()
    }

    #[test]
    fn identity_interaction_passes_everything() {
        let tol = Tolerance::default();
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let alg = FiniteCStarAlgebra::new(vec![2, 1]).unwrap();
        let mut i = Interaction::identity(&alg);
        assert!(i.certify(3, 10, tol, &mut rng).passed());
        assert_eq!(i.certified_up_to(), Some(3));
        assert!(i.check_complete(3, 10, tol, &mut rng).unwrap().passed());
        assert!(i.check_projection_family(3, 5, tol, &mut rng).unwrap().passed());
        assert!(i.check_conditional_expectations(2, 10, tol, &mut rng).unwrap().passed());
        for x in 0..4 {
            assert_eq!(i.v_unit(x), alg.one());
        }
    }

    #[test]
    fn shift_interaction_is_complete() {
        let tol = Tolerance::default();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let i = shift_interaction(5);
        assert!(i.check_interaction(4, 20, tol, &mut rng).passed());
        assert!(i.check_complete(4, 20, tol, &mut rng).unwrap().passed());
        assert!(i.check_projection_family(4, 5, tol, &mut rng).unwrap().passed());
        assert!(i.check_conditional_expectations(1, 20, tol, &mut rng).unwrap().passed());
        let alg = i.algebra().clone();
        let expect = alg
            .diagonal_element(&[c(0.0), c(0.0), c(1.0), c(1.0), c(1.0)])
            .unwrap();
        assert_eq!(i.v_unit(2), expect);
    }

    #[test]
    fn swapped_shift_fails_completeness_precondition_only_where_expected() {
        // (ℋ, 𝒱) is again an interaction; the check is symmetric.
        let tol = Tolerance::default();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let i = shift_interaction(4).swapped();
        assert!(i.check_interaction(3, 10, tol, &mut rng).passed());
    }

    #[test]
    fn dual_from_projections_matches_rep() {
        let tol = Tolerance::default();
        let i = shift_interaction(5);
        let ps: Vec<AlgebraElement> = (0..=3).map(|x| i.h_unit(x)).collect();
        let table = derive_dual_from_projections(i.v(), &ps, tol).unwrap();
        assert_eq!(table.x_max(), 3);
        for x in 0..=3 {
            for e in i.algebra().basis() {
                let r = table.apply(x, &e).unwrap().distance(&i.h().apply(x, &e));
                assert!(r <= 1e-12, "x = {x}: {r}");
            }
        }
        assert!(table.sigma_min >= INJECTIVITY_THRESHOLD);
    }

    #[test]
    fn dual_from_projections_rejects_bad_families() {
        let tol = Tolerance::default();
        let i = shift_interaction(4);
        let alg = i.algebra().clone();
        // P1 too large: V(P1) = V(1) is not V(1)P0… but fails (b) at x=1,y=1 via P2.
        let mut ps: Vec<AlgebraElement> = (0..=2).map(|x| i.h_unit(x)).collect();
        ps[1] = alg.one();
        let err = derive_dual_from_projections(i.v(), &ps, tol).unwrap_err();
        assert!(matches!(err, Error::HypothesisFailed { ref item, .. } if item == "shift_b"), "{err}");
        let mut ps: Vec<AlgebraElement> = (0..=1).map(|x| i.h_unit(x)).collect();
        ps[0] = i.h_unit(1);
        assert!(matches!(
            derive_dual_from_projections(i.v(), &ps, tol),
            Err(Error::HypothesisFailed { ref item, .. }) if item == "p0_unit"
        ));
    }

    #[test]
    fn dual_from_rep_validates_input() {
        let tol = Tolerance::default();
        let alg = FiniteCStarAlgebra::diagonal(2).unwrap();
        let v = Action::identity(&alg);
        let not_pi = ComplexMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0), c(2.0)]));
        assert!(matches!(derive_dual_from_rep(&v, &not_pi, tol), Err(Error::NotPartialIsometry { .. })));
        let s = 0.5_f64.sqrt();
        let rot = ComplexMatrix::from_row_slice(2, 2, &[c(s), c(-s), c(s), c(s)]);
        assert!(matches!(derive_dual_from_rep(&v, &rot, tol), Err(Error::NotInvariant { .. })));
        let id = derive_dual_from_rep(&v, &ComplexMatrix::identity(2, 2), tol).unwrap();
        let a = alg.diagonal_element(&[c(3.0), c(-1.0)]).unwrap();
        assert_eq!(id.apply(1, &a), a);
    }
}
