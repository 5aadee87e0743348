//! Walk-spec files.

use serde::{Deserialize, Serialize};
use zqwalk::grouped::{subset_toggle_chain, GroupedChain, HammingModel};
use zqwalk::product::IncrementDist;
use zqwalk::{models, Error};

pub const SCHEMA: &str = "zqwalk-spec/1";

/// Named shortcuts for the standard walks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Model {
    Shift,
    Lazy { gamma: f64 },
    Uniform,
    Mixture { beta: f64, gamma: f64 },
    /// v_1, ..., v_{⌊q/2⌋}; the mass at 0 is whatever is left.
    Symmetric { v: Vec<f64> },
    SubsetToggle { a: usize },
    Neighbor,
    LeftShift,
    Hamming { qh: Vec<f64> },
    VonMises { k: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkSpec {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub increment: Option<IncrementDist<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<Model>,
}

/// A validated spec.
#[derive(Debug, Clone)]
pub enum Walk {
    Discrete {
        q: usize,
        d: usize,
        incr: IncrementDist<f64>,
        model: Option<Model>,
    },
    Torus {
        k: f64,
    },
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

impl WalkSpec {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let spec: WalkSpec = serde_json::from_str(text).map_err(|e| invalid(format!("walk spec: {e}")))?;
        if spec.schema != SCHEMA {
            return Err(invalid(format!("schema {:?}, expected {SCHEMA:?}", spec.schema)));
        }
        Ok(spec)
    }

    /// Checks the spec and fills in q and d where they are implied.
    pub fn resolve(&self) -> Result<(WalkSpec, Walk), Error> {
        let mut resolved = self.clone();
        let walk = match (&self.increment, &self.model) {
            (Some(_), Some(_)) => return Err(invalid("give either increment or model, not both")),
            (None, None) => return Err(invalid("spec needs an increment or a model")),
            (Some(incr), None) => {
                let (q, d) = (incr.q(), incr.d());
                check_matches("q", self.q, q)?;
                check_matches("d", self.d, d)?;
                resolved.q = Some(q);
                resolved.d = Some(d);
                Walk::Discrete {
                    q,
                    d,
                    incr: incr.clone(),
                    model: None,
                }
            }
            (None, Some(Model::VonMises { k })) => {
                if self.q.is_some() || self.d.is_some() {
                    return Err(invalid("von-mises lives on the circle; drop q and d"));
                }
                Walk::Torus { k: *k }
            }
            (None, Some(model)) => {
                let d = match model {
                    Model::Hamming { qh } => {
                        let d = qh.len().saturating_sub(1);
                        check_matches("d", self.d, d)?;
                        d
                    }
                    _ => self.d.ok_or_else(|| invalid("model needs d"))?,
                };
                let q = self.q.ok_or_else(|| invalid("model needs q"))?;
                resolved.d = Some(d);
                let incr = build_model(model, q, d)?;
                Walk::Discrete {
                    q,
                    d,
                    incr,
                    model: Some(model.clone()),
                }
            }
        };
        Ok((resolved, walk))
    }
}

fn check_matches(what: &str, given: Option<usize>, actual: usize) -> Result<(), Error> {
    match given {
        Some(g) if g != actual => Err(invalid(format!("{what} = {g} but the law has {what} = {actual}"))),
        _ => Ok(()),
    }
}

fn build_model(model: &Model, q: usize, d: usize) -> Result<IncrementDist<f64>, Error> {
    match model {
        Model::Shift => models::shift(q, d),
        Model::Lazy { gamma } => models::lazy(q, d, *gamma),
        Model::Uniform => models::uniform(q, d),
        Model::Mixture { beta, gamma } => models::mixture(q, d, *beta, *gamma),
        Model::Symmetric { v } => models::symmetric(q, d, v),
        Model::SubsetToggle { a } => models::subset_toggle(q, d, *a),
        Model::Neighbor => models::neighbor(q, d),
        Model::LeftShift => models::left_shift(q, d),
        Model::Hamming { qh } => models::hamming(q, qh.clone()),
        Model::VonMises { .. } => unreachable!("handled by resolve"),
    }
}

/// Grouped chain for an exchangeable walk. Subset toggle uses its closed-form
/// eigenvalues and Hamming models their Krawtchouk sums.
pub fn grouped_chain(q: usize, d: usize, incr: &IncrementDist<f64>, model: Option<&Model>) -> Result<GroupedChain<f64>, Error> {
    match model {
        Some(Model::SubsetToggle { a }) => subset_toggle_chain(q, d, *a),
        Some(Model::Hamming { qh }) => {
            let h = HammingModel::new(qh.clone())?;
            let kappa: Vec<f64> = (0..=d).map(|l| h.kappa(l, q)).collect::<Result<_, _>>()?;
            GroupedChain::from_degree_fn(q, d, |l| kappa[l])
        }
        _ => {
            if !incr.is_exchangeable() {
                return Err(Error::Precondition("the increment law is not exchangeable".into()));
            }
            GroupedChain::from_increment(incr)
        }
    }
}
