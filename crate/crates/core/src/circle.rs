//! Continuous functions on the circle `ℝ/ℤ`, evaluated in closed form, with
//! the doubling endomorphisms and their weighted transfer operators.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::actions::SemigroupAction;
use crate::error::{Error, Result};
use crate::algebra::Tolerance;

const TAU: f64 = std::f64::consts::TAU;

/// `Σ c_k e^{2πikt}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigPolynomial {
    pub terms: Vec<(i64, Complex64)>,
}

impl TrigPolynomial {
    pub fn new(terms: Vec<(i64, Complex64)>) -> Self {
        Self { terms }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![(0, Complex64::new(c, 0.0))])
    }

    /// `amp · sin(2πkt)`.
    pub fn sin(k: i64, amp: f64) -> Self {
        let c = Complex64::new(0.0, -amp / 2.0);
        Self::new(vec![(k, c), (-k, -c)])
    }

    /// `amp · cos(2πkt)`.
    pub fn cos(k: i64, amp: f64) -> Self {
        let c = Complex64::new(amp / 2.0, 0.0);
        Self::new(vec![(k, c), (-k, c)])
    }

    pub fn plus(mut self, other: Self) -> Self {
        self.terms.extend(other.terms);
        self
    }

    /// `half` is `ρ ≡ ½`, `sine` is `ρ = ½ + ½ sin(2πt)`.
    pub fn named(name: &str) -> Option<Self> {
        match name {
            "half" => Some(Self::constant(0.5)),
            "sine" => Some(Self::constant(0.5).plus(Self::sin(1, 0.5))),
            _ => None,
        }
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|(k, c)| c * Complex64::from_polar(1.0, TAU * *k as f64 * t))
            .sum()
    }

    /// `c₋ₖ = c̄ₖ` after merging equal frequencies.
    pub fn is_real(&self, tol: Tolerance) -> bool {
        let mut merged: std::collections::BTreeMap<i64, Complex64> = Default::default();
        for (k, c) in &self.terms {
            *merged.entry(*k).or_default() += c;
        }
        merged.iter().all(|(k, c)| {
            let partner = merged.get(&-k).copied().unwrap_or_default();
            (c - partner.conj()).norm() <= tol.eps
        })
    }

    pub fn to_function(&self) -> CircleFunction {
        let p = self.clone();
        CircleFunction::new(format!("{p}"), move |t| p.eval(t))
    }
}

impl fmt::Display for TrigPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(k, c)| format!("({:.4}{:+.4}i)e[{k}]", c.re, c.im))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// A pointwise-evaluable function on `[0, 1)`, extended periodically.
#[derive(Clone)]
pub struct CircleFunction {
    label: Arc<str>,
    f: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
}

impl CircleFunction {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self {
            label: Arc::from(label.into()),
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        (self.f)(t.rem_euclid(1.0))
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for CircleFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CircleFunction({})", self.label)
    }
}

/// `C(ℝ/ℤ)` with norms taken as maxima over a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleFunctionAlgebra {
    grid: Vec<f64>,
}

impl CircleFunctionAlgebra {
    pub fn new(grid_size: usize) -> Result<Self> {
        if grid_size == 0 {
            return Err(Error::Shape("grid_size must be positive".into()));
        }
        Ok(Self {
            grid: (0..grid_size).map(|j| j as f64 / grid_size as f64).collect(),
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn constant(&self, c: f64) -> CircleFunction {
        CircleFunction::new(format!("{c}"), move |_| Complex64::new(c, 0.0))
    }

    /// Grid point and value of the largest `|f|`.
    pub fn argmax(&self, a: &CircleFunction) -> (f64, f64) {
        self.grid
            .iter()
            .map(|&t| (t, a.eval(t).norm()))
            .fold((0.0, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc })
    }
}

impl crate::algebra::StarAlgebra for CircleFunctionAlgebra {
    type Element = CircleFunction;

    fn one(&self) -> CircleFunction {
        self.constant(1.0)
    }

    fn mul(&self, a: &CircleFunction, b: &CircleFunction) -> CircleFunction {
        let (a, b) = (a.clone(), b.clone());
        CircleFunction::new(format!("({})*({})", a.label, b.label), move |t| a.eval(t) * b.eval(t))
    }

    fn add(&self, a: &CircleFunction, b: &CircleFunction) -> CircleFunction {
        let (a, b) = (a.clone(), b.clone());
        CircleFunction::new(format!("({})+({})", a.label, b.label), move |t| a.eval(t) + b.eval(t))
    }

    fn sub(&self, a: &CircleFunction, b: &CircleFunction) -> CircleFunction {
        let (a, b) = (a.clone(), b.clone());
        CircleFunction::new(format!("({})-({})", a.label, b.label), move |t| a.eval(t) - b.eval(t))
    }

    fn adjoint(&self, a: &CircleFunction) -> CircleFunction {
        let a = a.clone();
        CircleFunction::new(format!("conj({})", a.label), move |t| a.eval(t).conj())
    }

    fn norm(&self, a: &CircleFunction) -> f64 {
        self.argmax(a).1.max(0.0)
    }

    fn min_hermitian_spectrum(&self, a: &CircleFunction) -> f64 {
        self.grid.iter().map(|&t| a.eval(t).re).fold(f64::INFINITY, f64::min)
    }

    /// Random trigonometric polynomial of degree ≤ 3, scaled to grid norm 1.
    fn sample(&self, rng: &mut dyn RngCore) -> CircleFunction {
        let terms: Vec<(i64, Complex64)> = (-3..=3)
            .map(|k| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                (k, Complex64::new(re, im))
            })
            .collect();
        let p = TrigPolynomial::new(terms);
        let n = self.norm(&p.to_function()).max(1e-12);
        TrigPolynomial::new(p.terms.into_iter().map(|(k, c)| (k, c / n)).collect()).to_function()
    }

    fn describe(&self, a: &CircleFunction) -> serde_json::Value {
        json!({"function": a.label()})
    }
}

/// `αₙ(a)(x) = a(2ⁿx mod 1)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DoublingAction;

impl DoublingAction {
    pub fn apply(&self, n: u32, a: &CircleFunction) -> CircleFunction {
        let a = a.clone();
        let scale = 2f64.powi(n as i32);
        CircleFunction::new(format!("alpha{n}({})", a.label), move |t| a.eval((scale * t).rem_euclid(1.0)))
    }
}

impl SemigroupAction<CircleFunctionAlgebra> for DoublingAction {
    fn apply(&self, n: u32, a: &CircleFunction) -> CircleFunction {
        DoublingAction::apply(self, n, a)
    }
}

/// `Lₙ(a)(x) = Σ_{k<2ⁿ} ρₙ(yₖ) a(yₖ)` with `yₖ = (x + k)/2ⁿ` and the cocycle
/// `ρₙ(y) = ρ(2ⁿ⁻¹y)⋯ρ(2y)ρ(y)` along the doubling map.
#[derive(Debug, Clone)]
pub struct TransferAction {
    rho: TrigPolynomial,
}

impl TransferAction {
    /// Checks `0 ≤ ρ ≤ 1` and `ρ(x/2) + ρ(x/2 + ½) = 1` on the grid.
    pub fn new(rho: TrigPolynomial, grid_size: usize, tol: Tolerance) -> Result<Self> {
        if !rho.is_real(tol) {
            return Err(Error::InvalidCocycle {
                point: 0.0,
                detail: "rho is not real-valued (c₋ₖ ≠ conj(cₖ))".into(),
            });
        }
        for j in 0..grid_size.max(1) {
            let x = j as f64 / grid_size.max(1) as f64;
            let r = rho.eval(x);
            if r.re < -tol.eps || r.re > 1.0 + tol.eps {
                return Err(Error::InvalidCocycle {
                    point: x,
                    detail: format!("rho = {:.6} is outside [0, 1]", r.re),
                });
            }
            let s = rho.eval(x / 2.0) + rho.eval(x / 2.0 + 0.5);
            if (s - 1.0).norm() > tol.eps {
                return Err(Error::InvalidCocycle {
                    point: x,
                    detail: format!("rho(x/2) + rho(x/2 + 1/2) = {:.6}", s.re),
                });
            }
        }
        Ok(Self { rho })
    }

    pub fn rho(&self) -> &TrigPolynomial {
        &self.rho
    }

    /// `ρₙ(y)`.
    pub fn cocycle(&self, n: u32, y: f64) -> f64 {
        let mut y = y.rem_euclid(1.0);
        let mut out = 1.0;
        for _ in 0..n {
            out *= self.rho.eval(y).re;
            y = (2.0 * y).rem_euclid(1.0);
        }
        out
    }

    /// `Σₖ ρₙ((x + k)/2ⁿ)`, which should be 1.
    pub fn cocycle_sum(&self, n: u32, x: f64) -> f64 {
        let m = 1u64 << n;
        (0..m).map(|k| self.cocycle(n, (x + k as f64) / m as f64)).sum()
    }

    pub fn apply(&self, n: u32, a: &CircleFunction) -> CircleFunction {
        let a = a.clone();
        let me = self.clone();
        CircleFunction::new(format!("L{n}({})", a.label), move |x| {
            let m = 1u64 << n;
            (0..m)
                .map(|k| {
                    let y = (x + k as f64) / m as f64;
                    a.eval(y) * me.cocycle(n, y)
                })
                .sum()
        })
    }
}

impl SemigroupAction<CircleFunctionAlgebra> for TransferAction {
    fn apply(&self, n: u32, a: &CircleFunction) -> CircleFunction {
        TransferAction::apply(self, n, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::StarAlgebra;

    #[test]
    fn trig_polynomials_evaluate_in_closed_form() {
        let s = TrigPolynomial::sin(1, 1.0);
        assert!((s.eval(0.25).re - 1.0).abs() < 1e-15);
        assert!(s.eval(0.1).im.abs() < 1e-15);
        assert!(s.is_real(Tolerance::default()));
        let c = TrigPolynomial::cos(2, 3.0);
        assert!((c.eval(0.5).re - 3.0).abs() < 1e-14);
        let bad = TrigPolynomial::new(vec![(1, Complex64::new(1.0, 0.0))]);
        assert!(!bad.is_real(Tolerance::default()));
    }

    #[test]
    fn cocycle_validation() {
        let tol = Tolerance::default();
        assert!(TransferAction::new(TrigPolynomial::named("half").unwrap(), 64, tol).is_ok());
        assert!(TransferAction::new(TrigPolynomial::named("sine").unwrap(), 64, tol).is_ok());
        let err = TransferAction::new(TrigPolynomial::constant(0.7), 64, tol).unwrap_err();
        assert!(matches!(err, Error::InvalidCocycle { .. }));
        // ρ = ½ + sin: sums fine but leaves [0, 1].
        let wide = TrigPolynomial::constant(0.5).plus(TrigPolynomial::sin(1, 1.0));
        assert!(matches!(TransferAction::new(wide, 64, tol), Err(Error::InvalidCocycle { .. })));
    }

    #[test]
    fn transfer_of_one_and_semigroup() {
        let alg = CircleFunctionAlgebra::new(128).unwrap();
        let tol = Tolerance::default();
        let l = TransferAction::new(TrigPolynomial::named("sine").unwrap(), 128, tol).unwrap();
        for n in 0..=3 {
            assert!(alg.distance(&l.apply(n, &alg.one()), &alg.one()) < 1e-12);
        }
        let a = TrigPolynomial::cos(3, 1.0).to_function();
        let two = l.apply(2, &a);
        let twice = l.apply(1, &l.apply(1, &a));
        assert!(alg.distance(&two, &twice) < 1e-12);
        let d = DoublingAction;
        assert!(alg.distance(&d.apply(2, &a), &d.apply(1, &d.apply(1, &a))) < 1e-12);
    }
}
