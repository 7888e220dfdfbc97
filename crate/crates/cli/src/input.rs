//! Input documents and fixtures.

use std::path::Path;

use covalg_core::actions::{Action, LinearMapOnAlgebra, MapSpec, DEFAULT_POSITIVITY_SAMPLES};
use covalg_core::corpus::{shift_fixture, trivial_fixture};
use covalg_core::covariant::{CovariantRep, RepSpec};
use covalg_core::crossed::CrossedProductElement;
use covalg_core::encoding::{matrix_from_json, MatrixJson};
use covalg_core::interactions::{derive_dual_from_rep, Interaction};
use covalg_core::{AlgebraElement, ComplexMatrix, FiniteCStarAlgebra, Tolerance};
use rand::RngCore;
use serde::Deserialize;
use serde_json::Value;

/// Failure while reading inputs; reported with exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

pub type InputResult<T> = std::result::Result<T, InputError>;

#[derive(Deserialize)]
#[serde(untagged)]
enum AlgebraDoc {
    Dims(Vec<usize>),
    Object { block_dims: Vec<usize> },
}

impl AlgebraDoc {
    fn build(self) -> InputResult<FiniteCStarAlgebra> {
        let dims = match self {
            AlgebraDoc::Dims(d) | AlgebraDoc::Object { block_dims: d } => d,
        };
        Ok(FiniteCStarAlgebra::new(dims)?)
    }
}

/// `{"algebra", "V", "H"?, "U1"?, "P"?, "x_max"?}`. Without `H`, the dual
/// is derived from `U1`.
#[derive(Deserialize)]
pub struct InteractionDoc {
    algebra: AlgebraDoc,
    #[serde(rename = "V")]
    v: MapSpec,
    #[serde(rename = "H", default)]
    h: Option<MapSpec>,
    #[serde(rename = "U1", default)]
    u1: Option<MatrixJson>,
    #[serde(rename = "P", default)]
    p: Option<Vec<AlgebraElement>>,
    #[serde(default)]
    pub x_max: Option<u32>,
}

pub struct LoadedInteraction {
    pub algebra: FiniteCStarAlgebra,
    pub v: Action,
    pub h: Option<Action>,
    pub u1: Option<ComplexMatrix>,
    pub p: Option<Vec<AlgebraElement>>,
    pub x_max: Option<u32>,
}

impl LoadedInteraction {
    pub fn interaction(&self) -> InputResult<Interaction> {
        let h = self
            .h
            .clone()
            .ok_or_else(|| InputError("interaction needs \"H\" or \"U1\"".into()))?;
        Ok(Interaction::new(self.v.clone(), h)?)
    }
}

fn action(alg: &FiniteCStarAlgebra, spec: MapSpec, tol: Tolerance, rng: &mut dyn RngCore) -> InputResult<Action> {
    let map = LinearMapOnAlgebra::from_spec(alg, spec, tol)?;
    Ok(Action::new(map, DEFAULT_POSITIVITY_SAMPLES, tol, rng)?)
}

pub fn read_json(path: &Path) -> InputResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

pub fn load_interaction(path: &Path, tol: Tolerance, rng: &mut dyn RngCore) -> InputResult<LoadedInteraction> {
    let doc: InteractionDoc = serde_json::from_value(read_json(path)?)?;
    let algebra = doc.algebra.build()?;
    let v = action(&algebra, doc.v, tol, rng)?;
    let u1 = doc.u1.as_ref().map(matrix_from_json).transpose()?;
    let h = match (doc.h, &u1) {
        (Some(spec), _) => Some(action(&algebra, spec, tol, rng)?),
        (None, Some(u)) => Some(derive_dual_from_rep(&v, u, tol)?),
        (None, None) => None,
    };
    if let Some(ps) = &doc.p {
        for q in ps {
            algebra.check_same(&q.algebra())?;
        }
    }
    Ok(LoadedInteraction {
        algebra,
        v,
        h,
        u1,
        p: doc.p,
        x_max: doc.x_max,
    })
}

pub fn load_rep(path: &Path, algebra: &FiniteCStarAlgebra, tol: Tolerance) -> InputResult<CovariantRep> {
    let spec: RepSpec = serde_json::from_value(read_json(path)?)?;
    Ok(CovariantRep::from_spec(algebra, spec, tol)?)
}

pub fn load_element(path: &Path, algebra: &FiniteCStarAlgebra) -> InputResult<CrossedProductElement> {
    Ok(CrossedProductElement::from_json(algebra, &read_json(path)?)?)
}

/// `shift:N` or `trivial`.
pub fn fixture(name: &str) -> InputResult<(FiniteCStarAlgebra, Interaction, CovariantRep)> {
    if name == "trivial" {
        return Ok(trivial_fixture());
    }
    if let Some(n) = name.strip_prefix("shift:") {
        let n: usize = n.parse().map_err(|_| InputError(format!("bad fixture size in {name:?}")))?;
        return Ok(shift_fixture(n)?);
    }
    if name == "shift" {
        return Ok(shift_fixture(4)?);
    }
    Err(InputError(format!("unknown fixture {name:?}; use shift:N or trivial")))
}
