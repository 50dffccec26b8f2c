use std::collections::HashMap;

use super::{OntologyError, OntologyGraph};

/// Functional concept alignment from one ontology into another.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptMapping {
    source: String,
    target: String,
    pairs: Vec<(String, String)>,
    lookup: HashMap<String, usize>,
}

impl ConceptMapping {
    pub fn new(
        source: impl Into<String>,
        target: impl Into<String>,
        pairs: Vec<(String, String)>,
    ) -> Result<Self, OntologyError> {
        let mut lookup = HashMap::with_capacity(pairs.len());
        for (i, (s, _)) in pairs.iter().enumerate() {
            if lookup.insert(s.clone(), i).is_some() {
                return Err(OntologyError::Invalid(format!(
                    "mapping is not functional: `{s}` mapped twice"
                )));
            }
        }
        Ok(Self {
            source: source.into(),
            target: target.into(),
            pairs,
            lookup,
        })
    }

    /// Maps every concept of `graph` onto itself.
    pub fn identity(graph: &OntologyGraph) -> Self {
        let pairs = graph.concepts().iter().map(|c| (c.id.clone(), c.id.clone())).collect();
        Self::new(graph.id(), graph.id(), pairs).expect("concept ids are unique")
    }

    pub fn source_ontology(&self) -> &str {
        &self.source
    }

    pub fn target_ontology(&self) -> &str {
        &self.target
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    /// Checks that every pair references concepts of the two graphs.
    pub fn validate(&self, source: &OntologyGraph, target: &OntologyGraph) -> Result<(), OntologyError> {
        if source.id() != self.source || target.id() != self.target {
            return Err(OntologyError::Invalid(format!(
                "mapping {}->{} checked against {}->{}",
                self.source,
                self.target,
                source.id(),
                target.id()
            )));
        }
        for (s, t) in &self.pairs {
            for (graph, id) in [(source, s), (target, t)] {
                if !graph.contains(id) {
                    return Err(OntologyError::UnknownConcept {
                        ontology: graph.id().to_string(),
                        concept: id.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn translate(&self, concept: &str) -> Result<&str, OntologyError> {
        self.lookup
            .get(concept)
            .map(|&i| self.pairs[i].1.as_str())
            .ok_or_else(|| OntologyError::NoMapping {
                source_ontology: self.source.clone(),
                target_ontology: self.target.clone(),
                concept: concept.to_string(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::{Concept, OntologyKind};

    #[test]
    fn identity_mapping_returns_same_id() {
        let g = OntologyGraph::new(
            "g",
            OntologyKind::Domain,
            vec![Concept::new("A", "A", &[]), Concept::new("B", "B", &["A"])],
            vec![],
        )
        .unwrap();
        let m = ConceptMapping::identity(&g);
        assert_eq!(m.translate("B").unwrap(), "B");
        m.validate(&g, &g).unwrap();
    }

    #[test]
    fn empty_mapping_has_no_translation() {
        let m = ConceptMapping::new("a", "b", vec![]).unwrap();
        assert!(matches!(m.translate("X"), Err(OntologyError::NoMapping { .. })));
    }

    #[test]
    fn non_functional_mapping_rejected() {
        let pairs = vec![("A".into(), "X".into()), ("A".into(), "Y".into())];
        assert!(ConceptMapping::new("a", "b", pairs).is_err());
    }
}
