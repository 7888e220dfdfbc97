//! The dense *-subalgebra of the crossed product: sums of non-mixed
//! monomials `c₀ Û^{±}_{x₁} c₁ … Û^{±}_{xₙ} cₙ`, their products via the
//! rewriting rules for `Ûₓ a Ûᵧ*` and `Ûₓ* a Ûᵧ`, the degree-zero part `E₀`
//! and norm enclosures.

use std::collections::{BTreeSet, HashMap};

use num_complex::Complex64;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebra::{is_central, AlgebraElement, FiniteCStarAlgebra, Tolerance};
use crate::covariant::CovariantRep;
use crate::encoding::{matrix_from_json, MatrixJson};
use crate::error::{Error, Result};
use crate::interactions::Interaction;

pub const DEFAULT_K_MAX: u32 = 3;
/// Monomials with a coefficient of smaller operator norm are dropped.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MonomialType {
    /// Steps are `Ûₓ`.
    Pos,
    /// Steps are `Ûₓ*`.
    Neg,
}

/// `c₀ Û_{x₁} c₁ … Û_{xₙ} cₙ` (or with `Ûₓ*`). Steps are nonzero, so a
/// degree-zero monomial is a single coefficient and has type `Pos`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    kind: MonomialType,
    coeffs: Vec<AlgebraElement>,
    steps: Vec<u32>,
}

impl Monomial {
    pub fn scalar(a: AlgebraElement) -> Self {
        Self {
            kind: MonomialType::Pos,
            coeffs: vec![a],
            steps: Vec::new(),
        }
    }

    /// Builds a monomial, merging coefficients around zero steps.
    pub fn new(kind: MonomialType, coeffs: Vec<AlgebraElement>, steps: Vec<u32>) -> Result<Self> {
        if coeffs.len() != steps.len() + 1 {
            return Err(Error::Shape(format!(
                "a word with {} steps needs {} coefficients, got {}",
                steps.len(),
                steps.len() + 1,
                coeffs.len()
            )));
        }
        let alg = coeffs[0].algebra();
        for c in &coeffs[1..] {
            alg.check_same(&c.algebra())?;
        }
        let sign = if kind == MonomialType::Pos { 1 } else { -1 };
        let w = Word {
            coeffs,
            steps: steps.iter().map(|&s| sign * s as i64).collect(),
        };
        Ok(w.merge_zero_steps().into_monomial())
    }

    pub fn kind(&self) -> MonomialType {
        self.kind
    }

    pub fn coeffs(&self) -> &[AlgebraElement] {
        &self.coeffs
    }

    pub fn steps(&self) -> &[u32] {
        &self.steps
    }

    pub fn degree(&self) -> u32 {
        self.steps.iter().sum()
    }

    /// `+degree` for positive type, `−degree` for negative type.
    pub fn signed_degree(&self) -> i64 {
        let d = self.degree() as i64;
        match self.kind {
            MonomialType::Pos => d,
            MonomialType::Neg => -d,
        }
    }

    /// Reverse the word, take adjoints, flip the type.
    pub fn adjoint(&self) -> Self {
        let kind = if self.steps.is_empty() {
            MonomialType::Pos
        } else {
            match self.kind {
                MonomialType::Pos => MonomialType::Neg,
                MonomialType::Neg => MonomialType::Pos,
            }
        };
        Self {
            kind,
            coeffs: self.coeffs.iter().rev().map(AlgebraElement::adjoint).collect(),
            steps: self.steps.iter().rev().copied().collect(),
        }
    }

    fn word(&self) -> Word {
        let sign = if self.kind == MonomialType::Pos { 1 } else { -1 };
        Word {
            coeffs: self.coeffs.clone(),
            steps: self.steps.iter().map(|&s| sign * s as i64).collect(),
        }
    }

    fn scale_first(&mut self, z: Complex64) {
        self.coeffs[0] = self.coeffs[0].scale(z);
    }

    fn negligible(&self) -> bool {
        self.coeffs.iter().any(|c| coefficient_negligible(c))
    }
}

fn coefficient_negligible(c: &AlgebraElement) -> bool {
    let frob: f64 = c
        .blocks()
        .iter()
        .map(|b| b.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sum::<f64>()
        .sqrt();
    if frob < PRUNE_THRESHOLD {
        return true;
    }
    let n = c.block_dims().into_iter().max().unwrap_or(1) as f64;
    frob < PRUNE_THRESHOLD * n.sqrt() && c.norm() < PRUNE_THRESHOLD
}

/// Word with signed steps, possibly mixed.
#[derive(Debug, Clone)]
struct Word {
    coeffs: Vec<AlgebraElement>,
    steps: Vec<i64>,
}

impl Word {
    fn concat(mut self, other: &Word) -> Word {
        let last = self.coeffs.pop().expect("words are nonempty");
        self.coeffs.push(last.mul(&other.coeffs[0]));
        self.coeffs.extend(other.coeffs[1..].iter().cloned());
        self.steps.extend(other.steps.iter().copied());
        self
    }

    fn merge_zero_steps(mut self) -> Word {
        let mut j = 0;
        while j < self.steps.len() {
            if self.steps[j] == 0 {
                let right = self.coeffs.remove(j + 1);
                self.coeffs[j] = self.coeffs[j].mul(&right);
                self.steps.remove(j);
            } else {
                j += 1;
            }
        }
        self
    }

    /// Rewrites adjacent opposite steps until the word is non-mixed, then
    /// fuses same-direction steps separated by an exact unit.
    fn normalize(mut self, interaction: &Interaction) -> Word {
        loop {
            let Some(j) = (0..self.steps.len().saturating_sub(1))
                .find(|&j| self.steps[j].signum() != self.steps[j + 1].signum())
            else {
                break;
            };
            let (s1, s2) = (self.steps[j], self.steps[j + 1]);
            let m = s1.unsigned_abs().min(s2.unsigned_abs()) as u32;
            let middle = self.coeffs.remove(j + 1);
            // Ûₓ a Ûᵧ* contracts through 𝒱, Ûₓ* a Ûᵧ through ℋ.
            let fa = if s1 > 0 {
                interaction.v().apply(m, &middle)
            } else {
                interaction.h().apply(m, &middle)
            };
            if s1.abs() <= s2.abs() {
                self.coeffs[j] = self.coeffs[j].mul(&fa);
            } else {
                self.coeffs[j + 1] = fa.mul(&self.coeffs[j + 1]);
            }
            let new = s1 + s2;
            self.steps.remove(j + 1);
            if new == 0 {
                let right = self.coeffs.remove(j + 1);
                self.coeffs[j] = self.coeffs[j].mul(&right);
                self.steps.remove(j);
            } else {
                self.steps[j] = new;
            }
        }
        let mut j = 0;
        while j + 1 < self.steps.len() {
            if self.coeffs[j + 1].is_exact_unit() {
                self.coeffs.remove(j + 1);
                self.steps[j] += self.steps[j + 1];
                self.steps.remove(j + 1);
            } else {
                j += 1;
            }
        }
        self
    }

    fn into_monomial(self) -> Monomial {
        let kind = if self.steps.first().is_some_and(|&s| s < 0) {
            MonomialType::Neg
        } else {
            MonomialType::Pos
        };
        debug_assert!(self.steps.iter().all(|s| (*s > 0) == (kind == MonomialType::Pos)));
        Monomial {
            kind,
            coeffs: self.coeffs,
            steps: self.steps.iter().map(|s| s.unsigned_abs() as u32).collect(),
        }
    }
}

/// A finite sum of monomials over one algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossedProductElement {
    algebra: FiniteCStarAlgebra,
    terms: Vec<Monomial>,
}

impl CrossedProductElement {
    pub fn zero(algebra: &FiniteCStarAlgebra) -> Self {
        Self {
            algebra: algebra.clone(),
            terms: Vec::new(),
        }
    }

    pub fn from_algebra(a: AlgebraElement) -> Self {
        Self {
            algebra: a.algebra(),
            terms: vec![Monomial::scalar(a)],
        }
    }

    pub fn one(algebra: &FiniteCStarAlgebra) -> Self {
        Self::from_algebra(algebra.one())
    }

    /// `Ûₓ`.
    pub fn u(algebra: &FiniteCStarAlgebra, x: u32) -> Self {
        Self::monomial_unchecked(algebra, MonomialType::Pos, x)
    }

    /// `Ûₓ*`.
    pub fn u_star(algebra: &FiniteCStarAlgebra, x: u32) -> Self {
        Self::monomial_unchecked(algebra, MonomialType::Neg, x)
    }

    fn monomial_unchecked(algebra: &FiniteCStarAlgebra, kind: MonomialType, x: u32) -> Self {
        if x == 0 {
            return Self::one(algebra);
        }
        Self {
            algebra: algebra.clone(),
            terms: vec![Monomial {
                kind,
                coeffs: vec![algebra.one(), algebra.one()],
                steps: vec![x],
            }],
        }
    }

    /// `l Ûₓ r` for `x > 0`, `l Û*₋ₓ r` for `x < 0`, `l r` for `x = 0`.
    pub fn single_step(l: AlgebraElement, x: i64, r: AlgebraElement) -> Result<Self> {
        let kind = if x < 0 { MonomialType::Neg } else { MonomialType::Pos };
        let steps = if x == 0 { vec![0] } else { vec![x.unsigned_abs() as u32] };
        let m = Monomial::new(kind, vec![l, r], steps)?;
        Ok(Self::from_terms(m.coeffs[0].algebra(), vec![m]).expect("one algebra"))
    }

    pub fn from_terms(algebra: FiniteCStarAlgebra, terms: Vec<Monomial>) -> Result<Self> {
        for t in &terms {
            for c in &t.coeffs {
                algebra.check_same(&c.algebra())?;
            }
        }
        Ok(Self { algebra, terms })
    }

    pub fn algebra(&self) -> &FiniteCStarAlgebra {
        &self.algebra
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.algebra.check_same(&other.algebra)?;
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self {
            algebra: self.algebra.clone(),
            terms: combine(terms),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, z: Complex64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut t = t.clone();
                t.scale_first(z);
                t
            })
            .filter(|t| !t.negligible())
            .collect();
        Self {
            algebra: self.algebra.clone(),
            terms,
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            algebra: self.algebra.clone(),
            terms: self.terms.iter().map(Monomial::adjoint).collect(),
        }
    }

    /// Sum of the degree-zero terms.
    pub fn e0(&self) -> AlgebraElement {
        self.terms
            .iter()
            .filter(|t| t.steps.is_empty())
            .fold(self.algebra.zero(), |acc, t| acc.add(&t.coeffs[0]))
    }

    /// Signed degrees of the nonzero-degree terms.
    pub fn degree_support(&self) -> BTreeSet<i64> {
        self.terms
            .iter()
            .map(Monomial::signed_degree)
            .filter(|&d| d != 0)
            .collect()
    }

    pub fn max_abs_degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Every term has at most one step: `l Ûₓ r`, `l Ûₓ* r` or a coefficient.
    pub fn is_single_step_form(&self) -> bool {
        self.terms.iter().all(|t| t.steps.len() <= 1)
    }

    /// JSON list of `{"type", "word": [{"coeff", "step"}, …]}` with a final
    /// pair of step 0.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.terms
                .iter()
                .map(|t| {
                    let word: Vec<Value> = t
                        .coeffs
                        .iter()
                        .enumerate()
                        .map(|(i, c)| {
                            json!({
                                "coeff": serde_json::to_value(c).expect("elements serialize"),
                                "step": t.steps.get(i).copied().unwrap_or(0),
                            })
                        })
                        .collect();
                    json!({"type": t.kind, "word": word})
                })
                .collect(),
        )
    }

    /// Parses the JSON form. A coefficient is either a full element object, a
    /// bare list of blocks, or omitted (the unit). A nonzero final step gets
    /// a unit coefficient appended.
    pub fn from_json(algebra: &FiniteCStarAlgebra, value: &Value) -> Result<Self> {
        let items = value
            .as_array()
            .ok_or_else(|| Error::Shape("element must be a list of monomials".into()))?;
        let mut terms = Vec::with_capacity(items.len());
        for item in items {
            let kind: MonomialType = serde_json::from_value(item.get("type").cloned().unwrap_or(json!("pos")))?;
            let word = item
                .get("word")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Shape("monomial needs a \"word\" list".into()))?;
            if word.is_empty() {
                return Err(Error::Shape("empty word".into()));
            }
            let mut coeffs = Vec::with_capacity(word.len() + 1);
            let mut steps = Vec::with_capacity(word.len());
            for (i, pair) in word.iter().enumerate() {
                let coeff = match pair.get("coeff") {
                    None | Some(Value::Null) => algebra.one(),
                    Some(v) => parse_coeff(algebra, v)?,
                };
                let step = pair
                    .get("step")
                    .map(|s| {
                        s.as_u64()
                            .ok_or_else(|| Error::Shape(format!("step must be a natural number, got {s}")))
                    })
                    .transpose()?
                    .unwrap_or(0) as u32;
                coeffs.push(coeff);
                if i + 1 < word.len() || step != 0 {
                    steps.push(step);
                }
            }
            if coeffs.len() == steps.len() {
                coeffs.push(algebra.one());
            }
            terms.push(Monomial::new(kind, coeffs, steps)?);
        }
        Self::from_terms(algebra.clone(), terms)
    }
}

fn parse_coeff(algebra: &FiniteCStarAlgebra, v: &Value) -> Result<AlgebraElement> {
    if v.is_object() {
        let el: AlgebraElement = serde_json::from_value(v.clone())?;
        algebra.check_same(&el.algebra())?;
        return Ok(el);
    }
    let blocks: Vec<MatrixJson> = serde_json::from_value(v.clone())?;
    let mats = blocks.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
    algebra.element(mats)
}

/// Sums terms whose type and steps agree and whose coefficients agree
/// bitwise in all slots but one. This is the only combination that is
/// valid for multilinear words.
fn combine(terms: Vec<Monomial>) -> Vec<Monomial> {
    let mut out: Vec<Monomial> = Vec::with_capacity(terms.len());
    let mut index: HashMap<(MonomialType, Vec<u32>), Vec<usize>> = HashMap::new();
    for t in terms {
        let key = (t.kind, t.steps.clone());
        let bucket = index.entry(key).or_default();
        let mut merged = false;
        for &i in bucket.iter() {
            let existing = &mut out[i];
            let differing: Vec<usize> = (0..t.coeffs.len())
                .filter(|&s| existing.coeffs[s] != t.coeffs[s])
                .collect();
            match differing.as_slice() {
                [] => {
                    existing.scale_first(Complex64::new(2.0, 0.0));
                    merged = true;
                }
                [s] => {
                    existing.coeffs[*s] = existing.coeffs[*s].add(&t.coeffs[*s]);
                    merged = true;
                }
                _ => {}
            }
            if merged {
                break;
            }
        }
        if !merged {
            bucket.push(out.len());
            out.push(t);
        }
    }
    out.into_iter().filter(|t| !t.negligible()).collect()
}

/// How products are brought to a canonical shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    /// Non-mixed words, no further collapsing.
    General,
    /// `ℋₓ(1)` central and `𝒱` multiplicative: every monomial becomes
    /// `C Û_D` or `Û_D* C` with `C = C𝒱_D(1)`, resp. `𝒱_D(1)C`.
    HCentral,
    /// Mirror image with the roles of `𝒱` and `ℋ` exchanged:
    /// `Û_D C` or `C Û_D*` with `C = ℋ_D(1)C`, resp. `Cℋ_D(1)`.
    VCentral,
}

/// Multiplication in the crossed product of one interaction.
pub struct CrossedProduct<'a> {
    interaction: &'a Interaction,
    mode: Reduction,
}

fn units_central_and_stable(
    units: impl Fn(u32) -> AlgebraElement,
    limit: u32,
    tol: Tolerance,
) -> bool {
    let mut prev = units(0);
    for x in 1..=limit {
        let p = units(x);
        if !is_central(&p, tol) {
            return false;
        }
        if p.distance(&prev) <= tol.eps {
            return true;
        }
        prev = p;
    }
    false
}

fn multiplicative_on_basis(f: impl Fn(&AlgebraElement) -> AlgebraElement, alg: &FiniteCStarAlgebra, tol: Tolerance) -> bool {
    let basis = alg.basis();
    let images: Vec<AlgebraElement> = basis.iter().map(&f).collect();
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            if f(&a.mul(b)).distance(&images[i].mul(&images[j])) > tol.eps {
                return false;
            }
        }
    }
    true
}

/// Picks the reduction a given interaction supports.
pub fn detect_reduction(interaction: &Interaction, tol: Tolerance) -> Reduction {
    let alg = interaction.algebra();
    let limit = alg.hilbert_dim() as u32 + 2;
    if units_central_and_stable(|x| interaction.h_unit(x), limit, tol)
        && multiplicative_on_basis(|a| interaction.v().generator().apply(a), alg, tol)
    {
        return Reduction::HCentral;
    }
    if units_central_and_stable(|x| interaction.v_unit(x), limit, tol)
        && multiplicative_on_basis(|a| interaction.h().generator().apply(a), alg, tol)
    {
        return Reduction::VCentral;
    }
    Reduction::General
}

impl<'a> CrossedProduct<'a> {
    /// Detects the reduction mode with the default tolerance.
    pub fn new(interaction: &'a Interaction) -> Self {
        let mode = detect_reduction(interaction, Tolerance::default());
        Self { interaction, mode }
    }

    pub fn with_mode(interaction: &'a Interaction, mode: Reduction) -> Self {
        Self { interaction, mode }
    }

    pub fn mode(&self) -> Reduction {
        self.mode
    }

    pub fn interaction(&self) -> &Interaction {
        self.interaction
    }

    fn reduce(&self, w: Word) -> Option<Monomial> {
        let w = w.normalize(self.interaction);
        let m = w.into_monomial();
        if m.steps.is_empty() {
            return Some(m);
        }
        let v = |n: u32, a: &AlgebraElement| self.interaction.v().apply(n, a);
        let h = |n: u32, a: &AlgebraElement| self.interaction.h().apply(n, a);
        let d = m.degree();
        let one = self.interaction.algebra().one();
        let (coeffs, _) = match (self.mode, m.kind) {
            (Reduction::General, _) => return Some(m),
            (Reduction::HCentral, MonomialType::Pos) => {
                let mut c = m.coeffs[0].clone();
                let mut pos = 0;
                for (i, s) in m.steps.iter().enumerate() {
                    pos += s;
                    c = c.mul(&v(pos, &m.coeffs[i + 1]));
                }
                (vec![c.mul(&self.interaction.v_unit(d)), one], ())
            }
            (Reduction::HCentral, MonomialType::Neg) => {
                let mut c = v(d, &m.coeffs[0]);
                let mut pos = 0;
                for (i, s) in m.steps.iter().enumerate() {
                    pos += s;
                    c = c.mul(&v(d - pos, &m.coeffs[i + 1]));
                }
                (vec![one, self.interaction.v_unit(d).mul(&c)], ())
            }
            (Reduction::VCentral, MonomialType::Pos) => {
                let mut c = h(d, &m.coeffs[0]);
                let mut pos = 0;
                for (i, s) in m.steps.iter().enumerate() {
                    pos += s;
                    c = c.mul(&h(d - pos, &m.coeffs[i + 1]));
                }
                (vec![one, self.interaction.h_unit(d).mul(&c)], ())
            }
            (Reduction::VCentral, MonomialType::Neg) => {
                let mut c = m.coeffs[0].clone();
                let mut pos = 0;
                for (i, s) in m.steps.iter().enumerate() {
                    pos += s;
                    c = c.mul(&h(pos, &m.coeffs[i + 1]));
                }
                (vec![c.mul(&self.interaction.h_unit(d)), one], ())
            }
        };
        Some(Monomial {
            kind: m.kind,
            coeffs,
            steps: vec![d],
        })
    }

    fn check(&self, a: &CrossedProductElement) -> Result<()> {
        self.interaction.algebra().check_same(&a.algebra)
    }

    /// Brings every term of `a` to the canonical shape of this product.
    pub fn canonicalize(&self, a: &CrossedProductElement) -> Result<CrossedProductElement> {
        self.check(a)?;
        let terms = a.terms.iter().filter_map(|t| self.reduce(t.word())).collect();
        Ok(CrossedProductElement {
            algebra: a.algebra.clone(),
            terms: combine(terms),
        })
    }

    pub fn multiply(&self, a: &CrossedProductElement, b: &CrossedProductElement) -> Result<CrossedProductElement> {
        self.check(a)?;
        self.check(b)?;
        let right: Vec<Word> = b.terms.iter().map(Monomial::word).collect();
        let mut terms = Vec::with_capacity(a.terms.len() * b.terms.len());
        for s in &a.terms {
            let left = s.word();
            for r in &right {
                if let Some(m) = self.reduce(left.clone().concat(r)) {
                    if !m.negligible() {
                        terms.push(m);
                    }
                }
            }
        }
        Ok(CrossedProductElement {
            algebra: a.algebra.clone(),
            terms: combine(terms),
        })
    }

    pub fn power(&self, a: &CrossedProductElement, n: u32) -> Result<CrossedProductElement> {
        let mut out = CrossedProductElement::one(&a.algebra);
        for _ in 0..n {
            out = self.multiply(&out, a)?;
        }
        Ok(out)
    }

    /// Bounds on the universal norm from `‖E₀[(aa*)^{2k}]‖` for `k ≤ k_max`.
    pub fn norm_enclosure(&self, a: &CrossedProductElement, k_max: u32) -> Result<NormEnclosure> {
        let k_max = k_max.max(1);
        let p = self.multiply(a, &a.adjoint())?;
        let max_step = p.degree_support().iter().map(|d| d.unsigned_abs()).max().unwrap_or(0);
        let mut powers = vec![CrossedProductElement::one(&a.algebra), p.clone()];
        for j in 2..=(2 * k_max as usize) {
            let next = self.multiply(&powers[j - 1], &p)?;
            powers.push(next);
        }
        let mut lower: f64 = 0.0;
        let mut upper = f64::INFINITY;
        let mut steps = Vec::new();
        let mut growth_trace = Vec::new();
        let mut growth_bound_holds = true;
        for k in 1..=k_max {
            let n_k = powers[2 * k as usize].e0().norm();
            let f_k = powers[k as usize]
                .degree_support()
                .iter()
                .filter(|&&d| d > 0)
                .count();
            let bound = 1 + k as u64 * max_step;
            growth_bound_holds &= f_k as u64 <= bound;
            growth_trace.push(f_k);
            let root = 1.0 / (4.0 * k as f64);
            let lo = n_k.powf(root);
            let up = ((2 * f_k + 1) as f64).powf(root) * lo;
            lower = lower.max(lo);
            upper = upper.min(up);
            steps.push(EnclosureStep {
                k,
                e0_norm: n_k,
                f_size: f_k,
                lower: lo,
                upper: up,
                width: upper - lower,
                terms: powers[2 * k as usize].terms.len(),
            });
        }
        Ok(NormEnclosure {
            lower,
            upper,
            k_used: k_max,
            growth_trace,
            growth_bound: max_step,
            growth_bound_holds,
            steps,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnclosureStep {
    pub k: u32,
    /// `‖E₀[(aa*)^{2k}]‖`.
    pub e0_norm: f64,
    /// `|F_k|`, the number of positive degrees in `(aa*)^k`.
    pub f_size: usize,
    pub lower: f64,
    pub upper: f64,
    /// Width of the enclosure accumulated up to this `k`.
    pub width: f64,
    /// Number of terms kept for `(aa*)^{2k}`.
    pub terms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEnclosure {
    pub lower: f64,
    pub upper: f64,
    pub k_used: u32,
    /// `|F_k|` for `k = 1..=k_used`.
    pub growth_trace: Vec<usize>,
    /// Largest `|d|` over the support of `aa*`; `|F_k| ≤ 1 + k·growth_bound`.
    pub growth_bound: u64,
    pub growth_bound_holds: bool,
    pub steps: Vec<EnclosureStep>,
}

impl NormEnclosure {
    pub fn width_at(&self, k: u32) -> Option<f64> {
        self.steps.iter().find(|s| s.k == k).map(|s| s.width)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyStar {
    pub holds: bool,
    pub e0_norm: f64,
    pub rep_norm: f64,
    /// `‖(σ×U)(a)‖ − ‖E₀(a)‖`.
    pub margin: f64,
}

/// `‖E₀(a)‖ ≤ ‖(σ×U)(a)‖ + eps`.
pub fn property_star_check(rep: &CovariantRep, a: &CrossedProductElement, tol: Tolerance) -> Result<PropertyStar> {
    let e0_norm = a.e0().norm();
    let rep_norm = crate::algebra::op_norm(&rep.evaluate(a)?);
    Ok(PropertyStar {
        holds: e0_norm <= rep_norm + tol.eps,
        e0_norm,
        rep_norm,
        margin: rep_norm - e0_norm,
    })
}

/// Random element in single-step form `Σ l_d Û_d r_d` over the given signed
/// degrees (degree 0 gives a coefficient).
pub fn random_single_step<R: RngCore + ?Sized>(
    algebra: &FiniteCStarAlgebra,
    degrees: &[i64],
    rng: &mut R,
) -> CrossedProductElement {
    let mut terms = Vec::new();
    for &d in degrees {
        let l = algebra.random_element(rng);
        if d == 0 {
            terms.push(Monomial::scalar(l));
        } else {
            let r = algebra.random_element(rng);
            let kind = if d > 0 { MonomialType::Pos } else { MonomialType::Neg };
            terms.push(Monomial {
                kind,
                coeffs: vec![l, r],
                steps: vec![d.unsigned_abs() as u32],
            });
        }
    }
    CrossedProductElement {
        algebra: algebra.clone(),
        terms,
    }
}

/// Random sum of `n_terms` non-mixed words with up to `max_len` steps, each
/// step in `1..=max_step`.
pub fn random_words<R: RngCore + ?Sized>(
    algebra: &FiniteCStarAlgebra,
    n_terms: usize,
    max_len: usize,
    max_step: u32,
    rng: &mut R,
) -> CrossedProductElement {
    let mut terms = Vec::new();
    for _ in 0..n_terms {
        let len = rng.random_range(0..=max_len);
        let kind = if rng.random_bool(0.5) { MonomialType::Pos } else { MonomialType::Neg };
        let steps: Vec<u32> = (0..len).map(|_| rng.random_range(1..=max_step.max(1))).collect();
        let coeffs = (0..=len).map(|_| algebra.random_element(rng)).collect();
        terms.push(Monomial {
            kind: if len == 0 { MonomialType::Pos } else { kind },
            coeffs,
            steps,
        });
    }
    CrossedProductElement {
        algebra: algebra.clone(),
        terms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::Action;
    use crate::algebra::ComplexMatrix;
    use crate::interactions::derive_dual_from_rep;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn shift_interaction(n: usize) -> Interaction {
        let alg = FiniteCStarAlgebra::diagonal(n).unwrap();
        let s = ComplexMatrix::from_fn(n, n, |i, j| if i == j + 1 { c(1.0) } else { c(0.0) });
        let tol = Tolerance::default();
        let v = Action::conjugation(&alg, s.clone(), tol).unwrap();
        let h = derive_dual_from_rep(&v, &s, tol).unwrap();
        Interaction::new(v, h).unwrap()
    }

    #[test]
    fn u_u_star_is_v_of_one() {
        let i = shift_interaction(4);
        let alg = i.algebra().clone();
        for mode in [Reduction::General, Reduction::HCentral] {
            let cp = CrossedProduct::with_mode(&i, mode);
            let p = cp.multiply(&CrossedProductElement::u(&alg, 1), &CrossedProductElement::u_star(&alg, 1)).unwrap();
            assert!(p.degree_support().is_empty());
            assert_eq!(p.e0(), i.v_unit(1));
        }
    }

    #[test]
    fn u_star_u2_is_h1_u1() {
        let i = shift_interaction(4);
        let alg = i.algebra().clone();
        let cp = CrossedProduct::with_mode(&i, Reduction::General);
        let p = cp.multiply(&CrossedProductElement::u_star(&alg, 1), &CrossedProductElement::u(&alg, 2)).unwrap();
        assert_eq!(p.terms().len(), 1);
        let t = &p.terms()[0];
        assert_eq!((t.kind(), t.steps()), (MonomialType::Pos, &[1u32][..]));
        assert_eq!(t.coeffs()[0], i.h_unit(1));
        assert!(t.coeffs()[1].is_exact_unit());
    }

    #[test]
    fn detection_and_merging_of_unit_steps() {
        let i = shift_interaction(5);
        let alg = i.algebra().clone();
        let cp = CrossedProduct::new(&i);
        assert_eq!(cp.mode(), Reduction::HCentral);
        let g = CrossedProduct::with_mode(&i, Reduction::General);
        let u2 = g.multiply(&CrossedProductElement::u(&alg, 1), &CrossedProductElement::u(&alg, 1)).unwrap();
        assert_eq!(u2, CrossedProductElement::u(&alg, 2));
        let ex = Interaction::identity(&FiniteCStarAlgebra::full_matrix(2).unwrap());
        assert_eq!(detect_reduction(&ex, Tolerance::default()), Reduction::HCentral);
    }

    #[test]
    fn adjoint_is_an_involution_and_degree_support_is_signed() {
        let alg = FiniteCStarAlgebra::new(vec![2, 1]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(30);
        let a = random_words(&alg, 6, 3, 2, &mut rng);
        assert_eq!(a.adjoint().adjoint(), a);
        let b = random_single_step(&alg, &[2, -1, 0], &mut rng);
        assert_eq!(b.degree_support().into_iter().collect::<Vec<_>>(), vec![-1, 2]);
        assert!(b.is_single_step_form());
    }

    #[test]
    fn combine_only_merges_multilinear_slots() {
        let alg = FiniteCStarAlgebra::diagonal(2).unwrap();
        let d = |x: f64, y: f64| alg.diagonal_element(&[c(x), c(y)]).unwrap();
        let t = |l, r| Monomial::new(MonomialType::Pos, vec![l, r], vec![1]).unwrap();
        let merged = combine(vec![t(d(1.0, 0.0), d(2.0, 2.0)), t(d(0.0, 1.0), d(2.0, 2.0))]);
        assert_eq!(merged.len(), 1);
        assert_eq!(merged[0].coeffs[0], d(1.0, 1.0));
        let kept = combine(vec![t(d(1.0, 0.0), d(1.0, 0.0)), t(d(0.0, 1.0), d(0.0, 1.0))]);
        assert_eq!(kept.len(), 2);
        let cancelled = combine(vec![t(d(1.0, 0.0), d(1.0, 1.0)), t(d(-1.0, 0.0), d(1.0, 1.0))]);
        assert!(cancelled.is_empty());
    }

    #[test]
    fn json_round_trip_and_shorthand() {
        let alg = FiniteCStarAlgebra::new(vec![1, 2]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let a = random_words(&alg, 4, 2, 3, &mut rng);
        let back = CrossedProductElement::from_json(&alg, &a.to_json()).unwrap();
        assert_eq!(back, a);
        let u1 = CrossedProductElement::from_json(&alg, &json!([{"type": "pos", "word": [{"step": 1}]}])).unwrap();
        assert_eq!(u1, CrossedProductElement::u(&alg, 1));
        let bare = json!([{"type": "pos", "word": [{"coeff": [[[[2.0, 0.0]]], [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]], "step": 0}]}]);
        let e = CrossedProductElement::from_json(&alg, &bare).unwrap();
        assert!((e.e0().norm() - 2.0).abs() < 1e-15);
        assert!(CrossedProductElement::from_json(&alg, &json!({"type": "pos"})).is_err());
    }

    #[test]
    fn enclosure_of_coefficients_and_u1() {
        let i = shift_interaction(4);
        let alg = i.algebra().clone();
        let cp = CrossedProduct::new(&i);
        let a = alg.diagonal_element(&[c(0.5), c(-2.0), c(1.0), c(0.0)]).unwrap();
        let e = cp.norm_enclosure(&CrossedProductElement::from_algebra(a), 1).unwrap();
        assert!((e.lower - 2.0).abs() < 1e-12 && (e.upper - 2.0).abs() < 1e-12);
        let e = cp.norm_enclosure(&CrossedProductElement::u(&alg, 1), 3).unwrap();
        assert!((e.lower - 1.0).abs() < 1e-12 && (e.upper - 1.0).abs() < 1e-12);
        assert_eq!(e.growth_trace, vec![0, 0, 0]);
    }

    use rand::SeedableRng;
}
