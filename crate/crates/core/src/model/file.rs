//! Model file schema: a JSON document with rationals as `"p/q"` strings
//! (integers allowed as shorthand). Filtrations are lists of partitions of
//! outcome labels per time; asset slices may be given per atom or per
//! outcome; a scalar endowment is shorthand for a constant one.

use super::{
    AdaptedProcess, AgentSpec, ExchangeKind, ExchangeSpace, ExchangeVector, Filtration,
    MarketModel, Partition, SampleSpace,
};
use crate::error::{Error, Result};
use crate::preferences::UtilityFunction;
use crate::rational::Rat;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;

#[derive(Serialize, Deserialize)]
pub struct ModelFile {
    pub outcomes: Vec<String>,
    pub reference_measure: Vec<Rat>,
    pub horizon: usize,
    pub agents: Vec<AgentFile>,
    pub exchange_space: ExchangeFile,
}

#[derive(Serialize, Deserialize)]
pub struct AgentFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub measure: Vec<Rat>,
    /// Partitions of outcome labels, one per time.
    pub filtration: Vec<Vec<Vec<String>>>,
    /// Per asset, per time: values per atom (or per outcome).
    pub assets: Vec<Vec<Vec<Rat>>>,
    pub utility: UtilityFunction,
    pub endowment: EndowmentFile,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
pub enum EndowmentFile {
    Constant(Rat),
    PerOutcome(Vec<Rat>),
}

#[derive(Serialize, Deserialize)]
pub struct ExchangeFile {
    pub kind: String,
    pub zero_sum: bool,
    pub includes_deterministic: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measurability: Option<Vec<Vec<Vec<String>>>>,
    /// Each element: one per-outcome transfer vector per agent.
    pub basis: Vec<Vec<Vec<Rat>>>,
}

fn parse_partition(
    labels: &[Vec<String>],
    index: &HashMap<&str, usize>,
    what: &str,
) -> Result<Partition> {
    let mut atoms = Vec::with_capacity(labels.len());
    for atom in labels {
        let mut ids = Vec::with_capacity(atom.len());
        for label in atom {
            let Some(&w) = index.get(label.as_str()) else {
                return Err(Error::InvalidModel(format!(
                    "{what}: unknown outcome label '{label}'"
                )));
            };
            ids.push(w);
        }
        atoms.push(ids);
    }
    Ok(Partition { atoms })
}

fn partition_labels(p: &Partition, outcomes: &[String]) -> Vec<Vec<String>> {
    p.atoms
        .iter()
        .map(|atom| atom.iter().map(|&w| outcomes[w].clone()).collect())
        .collect()
}

impl ModelFile {
    pub fn into_model(self) -> Result<MarketModel> {
        let n = self.outcomes.len();
        let index: HashMap<&str, usize> = self
            .outcomes
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        if index.len() != n {
            return Err(Error::InvalidModel("duplicate outcome labels".into()));
        }

        let mut agents = Vec::with_capacity(self.agents.len());
        for (i, a) in self.agents.into_iter().enumerate() {
            let partitions = a
                .filtration
                .iter()
                .enumerate()
                .map(|(t, p)| parse_partition(p, &index, &format!("agent {i} filtration t={t}")))
                .collect::<Result<Vec<_>>>()?;
            let filtration = Filtration { partitions };
            let assets = a
                .assets
                .iter()
                .map(|per_time| AdaptedProcess::from_atom_values(&filtration, per_time, n))
                .collect::<Result<Vec<_>>>()?;
            let endowment = match a.endowment {
                EndowmentFile::Constant(x) => vec![x; n],
                EndowmentFile::PerOutcome(v) => {
                    if v.len() != n {
                        return Err(Error::InvalidModel(format!(
                            "agent {i}: endowment has {} entries for {n} outcomes",
                            v.len()
                        )));
                    }
                    v
                }
            };
            agents.push(AgentSpec {
                name: a.name,
                subjective_measure: a.measure,
                filtration,
                assets,
                utility: a.utility,
                endowment,
            });
        }

        let kind = match self.exchange_space.kind.as_str() {
            "vector_space" => ExchangeKind::VectorSpace,
            "convex_cone" => ExchangeKind::ConvexCone,
            other => {
                return Err(Error::InvalidModel(format!(
                    "exchange_space.kind must be vector_space or convex_cone, got '{other}'"
                )))
            }
        };
        let measurability = match &self.exchange_space.measurability {
            Some(parts) => Some(
                parts
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        parse_partition(p, &index, &format!("exchange measurability agent {i}"))
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            None => None,
        };
        let basis = self
            .exchange_space
            .basis
            .into_iter()
            .map(|legs| ExchangeVector { legs })
            .collect();

        Ok(MarketModel {
            space: SampleSpace {
                outcomes: self.outcomes,
                reference_measure: self.reference_measure,
            },
            horizon: self.horizon,
            agents,
            exchange: ExchangeSpace {
                kind,
                zero_sum: self.exchange_space.zero_sum,
                includes_deterministic: self.exchange_space.includes_deterministic,
                measurability,
                basis,
            },
        })
    }

    pub fn from_model(model: &MarketModel) -> ModelFile {
        let outcomes = &model.space.outcomes;
        ModelFile {
            outcomes: outcomes.clone(),
            reference_measure: model.space.reference_measure.clone(),
            horizon: model.horizon,
            agents: model
                .agents
                .iter()
                .map(|a| AgentFile {
                    name: a.name.clone(),
                    measure: a.subjective_measure.clone(),
                    filtration: a
                        .filtration
                        .partitions
                        .iter()
                        .map(|p| partition_labels(p, outcomes))
                        .collect(),
                    assets: a
                        .assets
                        .iter()
                        .map(|asset| {
                            asset
                                .values
                                .iter()
                                .enumerate()
                                .map(|(t, slice)| {
                                    // Emit per-atom values (the compact form).
                                    a.filtration
                                        .at(t)
                                        .atoms
                                        .iter()
                                        .map(|atom| slice[atom[0]].clone())
                                        .collect()
                                })
                                .collect()
                        })
                        .collect(),
                    utility: a.utility.clone(),
                    endowment: {
                        let first = &a.endowment[0];
                        if a.endowment.iter().all(|v| v == first) {
                            EndowmentFile::Constant(first.clone())
                        } else {
                            EndowmentFile::PerOutcome(a.endowment.clone())
                        }
                    },
                })
                .collect(),
            exchange_space: ExchangeFile {
                kind: match model.exchange.kind {
                    ExchangeKind::VectorSpace => "vector_space".into(),
                    ExchangeKind::ConvexCone => "convex_cone".into(),
                },
                zero_sum: model.exchange.zero_sum,
                includes_deterministic: model.exchange.includes_deterministic,
                measurability: model
                    .exchange
                    .measurability
                    .as_ref()
                    .map(|parts| parts.iter().map(|p| partition_labels(p, outcomes)).collect()),
                basis: model
                    .exchange
                    .basis
                    .iter()
                    .map(|y| y.legs.clone())
                    .collect(),
            },
        }
    }
}

impl MarketModel {
    pub fn from_json(text: &str) -> Result<MarketModel> {
        let file: ModelFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidModel(format!("model file parse error: {e}")))?;
        file.into_model()
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile::from_model(self);
        let mut out = serde_json::to_string_pretty(&file).expect("model serialization");
        out.push('\n');
        out
    }

    pub fn load(path: &Path) -> Result<MarketModel> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidModel(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())
            .map_err(|e| Error::InvalidModel(format!("cannot write {}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{
        "outcomes": ["u", "d"],
        "reference_measure": ["1/2", "1/2"],
        "horizon": 1,
        "agents": [
            {
                "measure": ["2/3", "1/3"],
                "filtration": [[["u", "d"]], [["u"], ["d"]]],
                "assets": [[["1"], ["2", "1/2"]]],
                "utility": {"kind": "truncated_quadratic", "gamma": "1"},
                "endowment": "-1"
            }
        ],
        "exchange_space": {
            "kind": "vector_space",
            "zero_sum": true,
            "includes_deterministic": true,
            "basis": []
        }
    }"#;

    #[test]
    fn parse_round_trip() {
        let model = MarketModel::from_json(SMALL).unwrap();
        assert_eq!(model.num_outcomes(), 2);
        assert_eq!(model.agents[0].assets[0].at(1), &[Rat::from_int(2), Rat::frac(1, 2)]);
        assert_eq!(model.agents[0].endowment, vec![Rat::from_int(-1); 2]);
        assert!(model.validate().is_valid(), "{}", model.validate().summary());

        let text = model.to_json();
        let again = MarketModel::from_json(&text).unwrap();
        assert_eq!(again.to_json(), text);
    }

    #[test]
    fn unknown_label_rejected() {
        let bad = SMALL.replace("[[\"u\", \"d\"]], [[\"u\"], [\"d\"]]", "[[\"u\", \"x\"]], [[\"u\"], [\"d\"]]");
        assert!(MarketModel::from_json(&bad).is_err());
    }

    #[test]
    fn violations_surface_in_validation() {
        // Zero subjective mass on the first outcome: not equivalent.
        let bad = SMALL.replace("\"2/3\", \"1/3\"", "\"0\", \"1\"");
        let model = MarketModel::from_json(&bad).unwrap();
        let report = model.validate();
        assert!(!report.is_valid());
        assert!(report
            .violations
            .iter()
            .any(|v| v.code == "measure_not_equivalent"));
    }

    #[test]
    fn non_adapted_asset_flagged() {
        // Asset differing across outcomes of the (trivial) time-0 atom.
        let bad = SMALL.replace("[[\"1\"], [\"2\", \"1/2\"]]", "[[\"1\", \"3\"], [\"2\", \"1/2\"]]");
        let model = MarketModel::from_json(&bad).unwrap();
        let report = model.validate();
        assert!(report.violations.iter().any(|v| v.code == "not_adapted"));
    }
}
