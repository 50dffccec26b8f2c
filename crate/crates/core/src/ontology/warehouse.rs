use std::collections::BTreeMap;
use std::sync::Arc;

use super::{ConceptMapping, Document, OntologyError, OntologyGraph, OntologyKind, Rule};

/// The three ontology warehouses plus the concept mappings used for mediation.
///
/// Domain and application graphs share one namespace and are consulted the
/// same way during matchmaking.
#[derive(Debug, Clone, Default)]
pub struct OntologyWarehouse {
    domain: BTreeMap<String, Arc<OntologyGraph>>,
    negotiation: BTreeMap<String, Arc<OntologyGraph>>,
    local: BTreeMap<String, Arc<OntologyGraph>>,
    mappings: Vec<ConceptMapping>,
}

impl OntologyWarehouse {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a graph, replacing any earlier version with the same id.
    pub fn insert(&mut self, graph: OntologyGraph) {
        let shelf = match graph.kind() {
            OntologyKind::Domain | OntologyKind::Application => &mut self.domain,
            OntologyKind::Negotiation => &mut self.negotiation,
            OntologyKind::LocalKnowledge => &mut self.local,
        };
        shelf.insert(graph.id().to_string(), Arc::new(graph));
    }

    /// Adds a mapping after checking it against the graphs it relates.
    pub fn insert_mapping(&mut self, mapping: ConceptMapping) -> Result<(), OntologyError> {
        let source = self
            .domain(mapping.source_ontology())
            .ok_or_else(|| OntologyError::UnknownOntology(mapping.source_ontology().to_string()))?;
        let target = self
            .domain(mapping.target_ontology())
            .ok_or_else(|| OntologyError::UnknownOntology(mapping.target_ontology().to_string()))?;
        mapping.validate(&source, &target)?;
        self.mappings.retain(|m| {
            m.source_ontology() != mapping.source_ontology() || m.target_ontology() != mapping.target_ontology()
        });
        self.mappings.push(mapping);
        Ok(())
    }

    pub fn insert_document(&mut self, doc: Document) -> Result<(), OntologyError> {
        match doc {
            Document::Ontology(g) => {
                self.insert(g);
                Ok(())
            }
            Document::Mapping(m) => self.insert_mapping(m),
        }
    }

    /// Loads ontology and mapping documents from text. Mappings are applied
    /// after every graph so file order does not matter.
    pub fn from_documents<'a>(texts: impl IntoIterator<Item = &'a str>) -> Result<Self, OntologyError> {
        let mut w = Self::new();
        let mut mappings = Vec::new();
        for text in texts {
            match super::parse_document(text)? {
                Document::Ontology(g) => w.insert(g),
                Document::Mapping(m) => mappings.push(m),
            }
        }
        for m in mappings {
            w.insert_mapping(m)?;
        }
        Ok(w)
    }

    /// Domain or application graph by id.
    pub fn domain(&self, id: &str) -> Option<Arc<OntologyGraph>> {
        self.domain.get(id).cloned()
    }

    pub fn graph(&self, id: &str) -> Option<Arc<OntologyGraph>> {
        self.domain
            .get(id)
            .or_else(|| self.negotiation.get(id))
            .or_else(|| self.local.get(id))
            .cloned()
    }

    pub fn mapping(&self, source: &str, target: &str) -> Option<&ConceptMapping> {
        self.mappings
            .iter()
            .find(|m| m.source_ontology() == source && m.target_ontology() == target)
    }

    pub fn graphs(&self) -> impl Iterator<Item = &Arc<OntologyGraph>> {
        self.domain
            .values()
            .chain(self.negotiation.values())
            .chain(self.local.values())
    }

    pub fn mappings(&self) -> &[ConceptMapping] {
        &self.mappings
    }

    /// Negotiation and local-knowledge rules whose id is namespaced `<party>.`.
    pub fn rules_for<'a>(&'a self, party: &'a str) -> impl Iterator<Item = &'a Rule> + 'a {
        self.negotiation
            .values()
            .chain(self.local.values())
            .flat_map(|g| g.rules().iter())
            .filter(move |r| r.id.strip_prefix(party).is_some_and(|rest| rest.starts_with('.')))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::{load_mapping, load_ontology};

    #[test]
    fn rules_are_namespaced_by_party() {
        let mut w = OntologyWarehouse::new();
        w.insert(
            load_ontology(
                "ontology n negotiation\nrule acme.accept acceptance utility threshold=0.5\nrule acmex.accept acceptance utility threshold=0.9\n",
            )
            .unwrap(),
        );
        let ids: Vec<_> = w.rules_for("acme").map(|r| r.id.as_str()).collect();
        assert_eq!(ids, vec!["acme.accept"]);
    }

    #[test]
    fn mapping_requires_known_graphs() {
        let mut w = OntologyWarehouse::new();
        let m = load_mapping("mapping a b\nmap X Y\n").unwrap();
        assert!(matches!(
            w.insert_mapping(m.clone()),
            Err(OntologyError::UnknownOntology(_))
        ));
        w.insert(load_ontology("ontology a domain\nconcept X \"X\"\n").unwrap());
        w.insert(load_ontology("ontology b domain\nconcept Y \"Y\"\n").unwrap());
        w.insert_mapping(m).unwrap();
        assert_eq!(w.mapping("a", "b").unwrap().translate("X").unwrap(), "Y");
    }
}
