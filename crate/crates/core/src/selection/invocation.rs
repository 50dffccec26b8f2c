use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::{MatchDegree, OntologyGraph};
use crate::registry::{Parameter, ServiceDescription};

/// A value the customer supplies, annotated with a concept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CustomerInput {
    pub name: String,
    pub concept: String,
    pub value: String,
}

impl CustomerInput {
    pub fn new(name: &str, concept: &str, value: &str) -> Self {
        Self {
            name: name.into(),
            concept: concept.into(),
            value: value.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binding {
    pub parameter: String,
    pub input: String,
    pub value: String,
    pub degree: MatchDegree,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvocationError {
    #[error("no customer input matches service parameter `{0}`")]
    Unbindable(String),
    #[error("service execution failed: {0}")]
    ExecutionFailed(String),
    #[error("inputs annotated with `{found}` but the service uses `{expected}`")]
    OntologyMismatch { expected: String, found: String },
}

/// Binds each service input to the customer input with the best non-`Fail`
/// degree; ties go to the customer input whose name sorts first.
pub fn bind_inputs(
    graph: &OntologyGraph,
    params: &[Parameter],
    inputs: &[CustomerInput],
) -> Result<Vec<Binding>, InvocationError> {
    let mut sorted: Vec<&CustomerInput> = inputs.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let mut out = Vec::with_capacity(params.len());
    for p in params {
        let mut best: Option<(MatchDegree, &CustomerInput)> = None;
        for input in &sorted {
            let degree = graph
                .match_degree(&p.concept, &input.concept)
                .unwrap_or(MatchDegree::Fail);
            if degree == MatchDegree::Fail {
                continue;
            }
            if best.is_none_or(|(d, _)| degree > d) {
                best = Some((degree, input));
            }
        }
        let (degree, input) = best.ok_or_else(|| InvocationError::Unbindable(p.name.clone()))?;
        out.push(Binding {
            parameter: p.name.clone(),
            input: input.name.clone(),
            value: input.value.clone(),
            degree,
        });
    }
    Ok(out)
}

/// Scripted stand-in for a service body: one value per declared output.
pub fn execute_stub(service: &ServiceDescription, bindings: &[Binding], sequence: u64) -> BTreeMap<String, String> {
    let digest: String = bindings.iter().map(|b| b.value.as_str()).collect::<Vec<_>>().join("+");
    service
        .outputs
        .iter()
        .map(|o| {
            (
                o.name.clone(),
                format!("{}:{}#{}[{}]", o.concept, service.service_id, sequence, digest),
            )
        })
        .collect()
}
