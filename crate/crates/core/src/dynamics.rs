//! The partial dynamics induced on the blocks (the primitive ideals) of a
//! finite-dimensional algebra, topological freedom and the compression
//! arguments that recover `E₀(a)` from `(σ × U)(a)`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::algebra::{is_projection, op_norm, projection_residual, AlgebraElement, Tolerance};
use crate::covariant::CovariantRep;
use crate::crossed::CrossedProductElement;
use crate::error::{Error, Result};
use crate::interactions::Interaction;
use crate::report::{CheckOutcome, InteractionReport};

/// Blocks on which the projection `p` is nonzero.
pub fn prim_support(p: &AlgebraElement, tol: Tolerance) -> Result<BTreeSet<usize>> {
    if !is_projection(p, tol) {
        return Err(Error::NotProjection { residual: projection_residual(p) });
    }
    Ok((0..p.blocks().len())
        .filter(|&i| block_seminorm(p, i) > tol.eps)
        .collect())
}

/// `ǎ(I)` at the kernel of block `i`, which is `‖block_i(a)‖`.
pub fn block_seminorm(a: &AlgebraElement, i: usize) -> f64 {
    op_norm(a.block(i))
}

/// `t_x` on blocks: `i ∈ supp ℋₓ(1)` goes to the one block `j ⊂ supp 𝒱ₓ(1)`
/// on which `a ↦ block_i(ℋₓ(a))` does not vanish.
pub fn induced_partial_map(interaction: &Interaction, x: u32, tol: Tolerance) -> Result<BTreeMap<usize, usize>> {
    let alg = interaction.algebra();
    let vx = interaction.v_unit(x);
    let hx = interaction.h_unit(x);
    let dom_neg = prim_support(&hx, tol)?;
    let dom_pos = prim_support(&vx, tol)?;
    let offsets = alg.coordinate_offsets();
    let basis = alg.basis();
    // Images of the corner 𝒜ₓ, grouped by the block they come from.
    let responses: Vec<(usize, Vec<AlgebraElement>)> = dom_pos
        .iter()
        .map(|&j| {
            let n = alg.block_dims()[j];
            let images = basis[offsets[j]..offsets[j] + n * n]
                .iter()
                .map(|e| interaction.h().apply(x, &vx.mul(e).mul(&vx)))
                .collect();
            (j, images)
        })
        .collect();
    let mut t = BTreeMap::new();
    for &i in &dom_neg {
        let candidates: Vec<usize> = responses
            .iter()
            .filter(|(_, imgs)| imgs.iter().any(|h| block_seminorm(h, i) > tol.eps))
            .map(|(j, _)| *j)
            .collect();
        match candidates.as_slice() {
            [j] => {
                t.insert(i, *j);
            }
            _ => {
                return Err(Error::AmbiguousBlock {
                    x,
                    block: i,
                    candidates,
                })
            }
        }
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialDynamics {
    pub num_blocks: usize,
    pub x_max: u32,
    /// `dom_neg[x-1] = supp ℋₓ(1)`.
    pub dom_neg: Vec<BTreeSet<usize>>,
    /// `dom_pos[x-1] = supp 𝒱ₓ(1)`.
    pub dom_pos: Vec<BTreeSet<usize>>,
    /// `maps[x-1] = t_x`.
    pub maps: Vec<BTreeMap<usize, usize>>,
}

impl PartialDynamics {
    pub fn compute(interaction: &Interaction, x_max: u32, tol: Tolerance) -> Result<Self> {
        let mut dom_neg = Vec::new();
        let mut dom_pos = Vec::new();
        let mut maps = Vec::new();
        for x in 1..=x_max {
            dom_neg.push(prim_support(&interaction.h_unit(x), tol)?);
            dom_pos.push(prim_support(&interaction.v_unit(x), tol)?);
            maps.push(induced_partial_map(interaction, x, tol)?);
        }
        Ok(Self {
            num_blocks: interaction.algebra().num_blocks(),
            x_max,
            dom_neg,
            dom_pos,
            maps,
        })
    }

    pub fn t(&self, x: u32, i: usize) -> Option<usize> {
        if x == 0 {
            return Some(i);
        }
        self.maps.get(x as usize - 1)?.get(&i).copied()
    }

    /// `t_x⁻¹(i)`.
    pub fn t_inverse(&self, x: u32, i: usize) -> Option<usize> {
        if x == 0 {
            return Some(i);
        }
        self.maps
            .get(x as usize - 1)?
            .iter()
            .find(|(_, &j)| j == i)
            .map(|(&k, _)| k)
    }

    /// Bijectivity of each `t_x`, decreasing domains and
    /// `t_{x+y} = t_x ∘ t_y` on the common domain. Residuals are counts of
    /// offending blocks.
    pub fn check_invariants(&self, tol: Tolerance) -> InteractionReport {
        let mut r = InteractionReport::default();
        for x in 1..=self.x_max {
            let k = x as usize - 1;
            let image: BTreeSet<usize> = self.maps[k].values().copied().collect();
            let not_injective = self.maps[k].len() - image.len();
            let missed = self.dom_pos[k].symmetric_difference(&image).count();
            let domain = self.maps[k].keys().copied().collect::<BTreeSet<_>>();
            let off_domain = self.dom_neg[k].symmetric_difference(&domain).count();
            r.push(CheckOutcome::scalar(
                "t_bijective",
                Some(x),
                None,
                tol,
                (not_injective + missed + off_domain) as f64,
            ));
            if x > 1 {
                let growing = self.dom_neg[k].difference(&self.dom_neg[k - 1]).count()
                    + self.dom_pos[k].difference(&self.dom_pos[k - 1]).count();
                r.push(CheckOutcome::scalar("domains_decrease", Some(x), None, tol, growing as f64));
            }
            for y in 1..x {
                let z = x - y;
                let bad = (0..self.num_blocks)
                    .filter(|&i| match self.t(z, i).and_then(|j| self.t(y, j)) {
                        Some(j) => self.t(x, i) != Some(j),
                        None => false,
                    })
                    .count();
                r.push(CheckOutcome::scalar("t_semigroup", Some(y), Some(z), tol, bad as f64));
            }
        }
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologicalFreedom {
    /// No `t_x` with `x ≤ x_max` has a fixed block.
    pub verdict: bool,
    pub x_max: u32,
    /// `(x, i)` with `t_x(i) = i`.
    pub fixed_points: Vec<(u32, usize)>,
    pub dynamics: PartialDynamics,
}

/// On a finite discrete space the interior of `⋃ Gₓ` is the union itself,
/// so freedom up to `x_max` means no fixed points.
pub fn topological_freedom_check(interaction: &Interaction, x_max: u32, tol: Tolerance) -> Result<TopologicalFreedom> {
    let dynamics = PartialDynamics::compute(interaction, x_max, tol)?;
    let fixed_points: Vec<(u32, usize)> = (1..=x_max)
        .flat_map(|x| {
            dynamics.maps[x as usize - 1]
                .iter()
                .filter(|(i, j)| i == j)
                .map(move |(&i, _)| (x, i))
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(TopologicalFreedom {
        verdict: fixed_points.is_empty(),
        x_max,
        fixed_points,
        dynamics,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressionOutcome {
    pub holds: bool,
    /// `‖P_i(σ×U)(a)P_i − P_iσ(E₀(a))P_i‖`.
    pub residual: f64,
}

/// Where block `i` goes under each degree of `a`: `t_d(i)` for `d > 0`,
/// `t_{|d|}⁻¹(i)` for `d < 0`. Errors if one of them is `i` or two coincide.
fn moved_blocks(dynamics: &PartialDynamics, degrees: &BTreeSet<i64>, i: usize) -> Result<()> {
    let mut seen: BTreeMap<usize, i64> = BTreeMap::new();
    for &d in degrees {
        let x = d.unsigned_abs() as u32;
        let target = if d > 0 { dynamics.t(x, i) } else { dynamics.t_inverse(x, i) };
        let Some(j) = target else { continue };
        if j == i {
            return Err(Error::HypothesisError {
                block: i,
                detail: format!("block {i} is fixed by degree {d}"),
            });
        }
        if let Some(prev) = seen.insert(j, d) {
            return Err(Error::HypothesisError {
                block: i,
                detail: format!("degrees {prev} and {d} both send block {i} to block {j}"),
            });
        }
    }
    Ok(())
}

fn require_single_step(a: &CrossedProductElement) -> Result<()> {
    if a.is_single_step_form() {
        Ok(())
    } else {
        Err(Error::FormError(
            "every term must be a coefficient or a single l·Û·r / l·Û*·r".into(),
        ))
    }
}

/// Compressing `(σ × U)(a)` to the block `i` kills every nonzero-degree term
/// once `i` is moved off itself by all degrees of `a`.
pub fn compression_vanishing_check(
    rep: &CovariantRep,
    interaction: &Interaction,
    a: &CrossedProductElement,
    i: usize,
    tol: Tolerance,
) -> Result<CompressionOutcome> {
    require_single_step(a)?;
    let alg = interaction.algebra();
    alg.check_same(rep.algebra())?;
    if i >= alg.num_blocks() {
        return Err(Error::Shape(format!("block {i} out of range")));
    }
    let degrees = a.degree_support();
    let x_max = a.max_abs_degree();
    if x_max > 0 {
        let dynamics = PartialDynamics::compute(interaction, x_max, tol)?;
        moved_blocks(&dynamics, &degrees, i)?;
    }
    let p = rep.sigma().apply(&alg.block_unit(i));
    let full = &p * rep.evaluate(a)? * &p;
    let e0 = &p * rep.sigma().apply(&a.e0()) * &p;
    let residual = op_norm(&(full - e0));
    Ok(CompressionOutcome {
        holds: tol.holds(residual),
        residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientBound {
    /// Topological freedom up to the largest degree in the samples.
    pub hypothesis_holds: bool,
    pub passed: bool,
    /// `‖(σ×U)(a)‖ − ‖E₀(a)‖` per sample.
    pub margins: Vec<f64>,
}

/// `‖E₀(a)‖ ≤ ‖(σ × U)(a)‖` for each sample. The freedom hypothesis is
/// evaluated and reported but not enforced, so its necessity can be shown.
pub fn theorem_6_4_check(
    rep: &CovariantRep,
    interaction: &Interaction,
    samples: &[CrossedProductElement],
    tol: Tolerance,
) -> Result<CoefficientBound> {
    for a in samples {
        require_single_step(a)?;
    }
    let x_max = samples.iter().map(CrossedProductElement::max_abs_degree).max().unwrap_or(0);
    let hypothesis_holds = x_max == 0 || topological_freedom_check(interaction, x_max, tol)?.verdict;
    let mut margins = Vec::with_capacity(samples.len());
    for a in samples {
        margins.push(op_norm(&rep.evaluate(a)?) - a.e0().norm());
    }
    Ok(CoefficientBound {
        hypothesis_holds,
        passed: margins.iter().all(|&m| m >= -tol.eps),
        margins,
    })
}

/// For blocks `i` with `t_x(i) ≠ i`, the subspaces `P₁ = σ(1_i)` and
/// `P₂ = UₓP₁Uₓ*` are orthogonal. Check `orthogonal_subspaces` with
/// `x` the degree and `y` the block.
pub fn orthogonality_check(rep: &CovariantRep, interaction: &Interaction, x: u32, tol: Tolerance) -> Result<InteractionReport> {
    let alg = interaction.algebra();
    alg.check_same(rep.algebra())?;
    let t = induced_partial_map(interaction, x, tol)?;
    let dom_pos = prim_support(&interaction.v_unit(x), tol)?;
    let u = rep.power(x);
    let mut r = InteractionReport::default();
    for (&i, &j) in &t {
        if i == j || !dom_pos.contains(&i) {
            continue;
        }
        let p1 = rep.sigma().apply(&alg.block_unit(i));
        let p2 = u.as_ref() * &p1 * u.adjoint();
        r.push(CheckOutcome::scalar(
            "orthogonal_subspaces",
            Some(x),
            Some(i as u32),
            tol,
            op_norm(&(p1 * p2)),
        ));
    }
    Ok(r)
}
