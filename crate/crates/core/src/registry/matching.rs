use serde::{Deserialize, Serialize};

use super::{ServiceDescription, ServiceQuery};
use crate::ontology::{MatchDegree, OntologyError, OntologyGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub service: ServiceDescription,
    pub degree: MatchDegree,
    /// Category degree first, then one entry per required output.
    pub component_degrees: Vec<MatchDegree>,
}

/// Matches one service against a query.
///
/// Each required output takes the best degree over the service's outputs; the
/// overall degree is the minimum component. Returns `None` on `Fail` or when
/// the service is annotated with another ontology.
pub fn match_service(
    graph: &OntologyGraph,
    query: &ServiceQuery,
    service: &ServiceDescription,
) -> Result<Option<MatchResult>, OntologyError> {
    if service.ontology_id != graph.id() {
        return Ok(None);
    }
    let mut components = Vec::with_capacity(1 + query.required_outputs.len());
    components.push(graph.match_degree(&query.category, &service.category)?);
    for wanted in &query.required_outputs {
        let mut best = MatchDegree::Fail;
        for out in &service.outputs {
            best = best.max(graph.match_degree(wanted, &out.concept)?);
        }
        components.push(best);
    }
    let degree = components.iter().copied().min().unwrap_or(MatchDegree::Fail);
    if degree == MatchDegree::Fail {
        return Ok(None);
    }
    Ok(Some(MatchResult {
        service: service.clone(),
        degree,
        component_degrees: components,
    }))
}

/// Degree descending, then service id ascending.
pub fn sort_results(results: &mut [MatchResult]) {
    results.sort_by(|a, b| {
        b.degree
            .cmp(&a.degree)
            .then_with(|| a.service.service_id.cmp(&b.service.service_id))
    });
}
