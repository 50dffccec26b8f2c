use std::collections::HashMap;
use std::fmt;

use bitvec::vec::BitVec;
use serde::{Deserialize, Serialize};

use super::OntologyError;

/// Strength of a concept match, ordered `Fail < Subsumes < Plugin < Exact`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchDegree {
    Fail,
    Subsumes,
    Plugin,
    Exact,
}

impl MatchDegree {
    pub fn rank(self) -> u8 {
        match self {
            MatchDegree::Exact => 3,
            MatchDegree::Plugin => 2,
            MatchDegree::Subsumes => 1,
            MatchDegree::Fail => 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MatchDegree::Exact => "exact",
            MatchDegree::Plugin => "plugin",
            MatchDegree::Subsumes => "subsumes",
            MatchDegree::Fail => "fail",
        }
    }
}

impl fmt::Display for MatchDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OntologyKind {
    Domain,
    Application,
    Negotiation,
    LocalKnowledge,
}

impl OntologyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OntologyKind::Domain => "domain",
            OntologyKind::Application => "application",
            OntologyKind::Negotiation => "negotiation",
            OntologyKind::LocalKnowledge => "local-knowledge",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "domain" => OntologyKind::Domain,
            "application" => OntologyKind::Application,
            "negotiation" => OntologyKind::Negotiation,
            "local-knowledge" => OntologyKind::LocalKnowledge,
            _ => return None,
        })
    }

    /// Rule records are only meaningful for negotiation and local-knowledge graphs.
    pub fn carries_rules(self) -> bool {
        matches!(self, OntologyKind::Negotiation | OntologyKind::LocalKnowledge)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub id: String,
    pub label: String,
    pub parents: Vec<String>,
}

impl Concept {
    pub fn new(id: impl Into<String>, label: impl Into<String>, parents: &[&str]) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
            parents: parents.iter().map(|p| p.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    Reservation,
    Concession,
    Acceptance,
    TaskCapability,
}

impl RuleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RuleKind::Reservation => "reservation",
            RuleKind::Concession => "concession",
            RuleKind::Acceptance => "acceptance",
            RuleKind::TaskCapability => "task-capability",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "reservation" => RuleKind::Reservation,
            "concession" => RuleKind::Concession,
            "acceptance" => RuleKind::Acceptance,
            "task-capability" => RuleKind::TaskCapability,
            _ => return None,
        })
    }
}

/// A typed rule record. Parameters keep their document order so that
/// serialization reproduces the source record byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub id: String,
    pub kind: RuleKind,
    pub attribute: String,
    pub parameters: Vec<(String, f64)>,
}

impl Rule {
    pub fn new(id: &str, kind: RuleKind, attribute: &str, parameters: &[(&str, f64)]) -> Self {
        Self {
            id: id.to_string(),
            kind,
            attribute: attribute.to_string(),
            parameters: parameters.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.parameters.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    fn validate(&self) -> Result<(), OntologyError> {
        let invalid = |reason: &str| OntologyError::InvalidRule {
            rule: self.id.clone(),
            reason: reason.to_string(),
        };
        if self.id.is_empty() || self.attribute.is_empty() {
            return Err(invalid("rule id and attribute must be non-empty"));
        }
        for (i, (k, v)) in self.parameters.iter().enumerate() {
            if !v.is_finite() {
                return Err(invalid(&format!("parameter {k} is not finite")));
            }
            if self.parameters[..i].iter().any(|(other, _)| other == k) {
                return Err(invalid(&format!("parameter {k} given twice")));
            }
        }
        match self.kind {
            RuleKind::Concession => {
                match self.param("step") {
                    Some(step) if step > 0.0 => {}
                    _ => return Err(invalid("concession rules need step > 0")),
                }
                match self.param("max-rounds") {
                    Some(r) if r >= 1.0 && r.fract() == 0.0 => {}
                    _ => return Err(invalid("concession rules need integral max-rounds >= 1")),
                }
            }
            RuleKind::Reservation => {
                let (Some(min), Some(max)) = (self.param("min"), self.param("max")) else {
                    return Err(invalid("reservation rules need min and max"));
                };
                if min > max {
                    return Err(invalid("reservation min exceeds max"));
                }
                if let Some(p) = self.param("prefer") {
                    if p != 1.0 && p != -1.0 {
                        return Err(invalid("prefer must be 1 or -1"));
                    }
                }
            }
            RuleKind::Acceptance | RuleKind::TaskCapability => {}
        }
        Ok(())
    }
}

/// An immutable concept DAG with its reflexive-transitive subsumption closure
/// precomputed at construction.
#[derive(Debug, Clone)]
pub struct OntologyGraph {
    id: String,
    kind: OntologyKind,
    concepts: Vec<Concept>,
    rules: Vec<Rule>,
    index: HashMap<String, usize>,
    // ancestors[i][j] <=> concept i is subsumed by concept j
    ancestors: Vec<BitVec>,
}

impl PartialEq for OntologyGraph {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.kind == other.kind && self.concepts == other.concepts && self.rules == other.rules
    }
}

impl OntologyGraph {
    pub fn new(
        id: impl Into<String>,
        kind: OntologyKind,
        concepts: Vec<Concept>,
        rules: Vec<Rule>,
    ) -> Result<Self, OntologyError> {
        let id = id.into();
        if id.is_empty() {
            return Err(OntologyError::Invalid("ontology id must be non-empty".into()));
        }
        let mut index = HashMap::with_capacity(concepts.len());
        for (i, c) in concepts.iter().enumerate() {
            if c.id.is_empty() {
                return Err(OntologyError::Invalid("concept id must be non-empty".into()));
            }
            if index.insert(c.id.clone(), i).is_some() {
                return Err(OntologyError::DuplicateConcept(c.id.clone()));
            }
        }
        for c in &concepts {
            for p in &c.parents {
                if !index.contains_key(p) {
                    return Err(OntologyError::DanglingParent {
                        concept: c.id.clone(),
                        parent: p.clone(),
                    });
                }
            }
        }
        if !rules.is_empty() && !kind.carries_rules() {
            return Err(OntologyError::Invalid(format!(
                "rules are not allowed in a {} ontology",
                kind.as_str()
            )));
        }
        let mut seen_rules = std::collections::HashSet::new();
        for r in &rules {
            r.validate()?;
            if !seen_rules.insert(r.id.as_str()) {
                return Err(OntologyError::InvalidRule {
                    rule: r.id.clone(),
                    reason: "duplicate rule id".into(),
                });
            }
        }

        let parents: Vec<Vec<usize>> = concepts
            .iter()
            .map(|c| c.parents.iter().map(|p| index[p]).collect())
            .collect();
        let order = topological_order(&parents).map_err(|cycle| OntologyError::Cycle {
            cycle: cycle.into_iter().map(|i| concepts[i].id.clone()).collect(),
        })?;

        let n = concepts.len();
        let mut ancestors = vec![BitVec::repeat(false, n); n];
        for &i in &order {
            let mut set = BitVec::repeat(false, n);
            set.set(i, true);
            for &p in &parents[i] {
                set |= &ancestors[p];
            }
            ancestors[i] = set;
        }

        Ok(Self {
            id,
            kind,
            concepts,
            rules,
            index,
            ancestors,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> OntologyKind {
        self.kind
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn contains(&self, concept: &str) -> bool {
        self.index.contains_key(concept)
    }

    pub fn concept(&self, concept: &str) -> Option<&Concept> {
        self.index.get(concept).map(|&i| &self.concepts[i])
    }

    fn position(&self, concept: &str) -> Result<usize, OntologyError> {
        self.index
            .get(concept)
            .copied()
            .ok_or_else(|| OntologyError::UnknownConcept {
                ontology: self.id.clone(),
                concept: concept.to_string(),
            })
    }

    /// True iff `sup` is reachable from `sub` through parent edges, or they are equal.
    pub fn is_subconcept(&self, sub: &str, sup: &str) -> Result<bool, OntologyError> {
        let a = self.position(sub)?;
        let b = self.position(sup)?;
        Ok(self.ancestors[a][b])
    }

    pub fn match_degree(&self, requested: &str, advertised: &str) -> Result<MatchDegree, OntologyError> {
        let r = self.position(requested)?;
        let a = self.position(advertised)?;
        Ok(if r == a {
            MatchDegree::Exact
        } else if self.ancestors[a][r] {
            MatchDegree::Plugin
        } else if self.ancestors[r][a] {
            MatchDegree::Subsumes
        } else {
            MatchDegree::Fail
        })
    }

    /// All concepts subsuming `concept`, itself included, in graph order.
    pub fn ancestors_of(&self, concept: &str) -> Result<Vec<&str>, OntologyError> {
        let i = self.position(concept)?;
        Ok(self.ancestors[i]
            .iter_ones()
            .map(|j| self.concepts[j].id.as_str())
            .collect())
    }
}

/// Depth-first post-order (parents first); on failure returns one cycle as a
/// closed path (first element repeated at the end).
fn topological_order(parents: &[Vec<usize>]) -> Result<Vec<usize>, Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let n = parents.len();
    let mut mark = vec![Mark::New; n];
    let mut order = Vec::with_capacity(n);
    let mut path: Vec<usize> = Vec::new();

    for root in 0..n {
        if mark[root] != Mark::New {
            continue;
        }
        // (node, next parent index to visit)
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        mark[root] = Mark::Active;
        path.push(root);
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if *next < parents[node].len() {
                let p = parents[node][*next];
                *next += 1;
                match mark[p] {
                    Mark::New => {
                        mark[p] = Mark::Active;
                        path.push(p);
                        stack.push((p, 0));
                    }
                    Mark::Active => {
                        let start = path.iter().position(|&x| x == p).unwrap_or(0);
                        let mut cycle = path[start..].to_vec();
                        cycle.push(p);
                        return Err(cycle);
                    }
                    Mark::Done => {}
                }
            } else {
                mark[node] = Mark::Done;
                order.push(node);
                path.pop();
                stack.pop();
            }
        }
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> OntologyGraph {
        OntologyGraph::new(
            "t",
            OntologyKind::Domain,
            vec![
                Concept::new("Service", "Service", &[]),
                Concept::new("Transport", "Transport", &["Service"]),
                Concept::new("SeaFreight", "Sea freight", &["Transport"]),
                Concept::new("Warehousing", "Warehousing", &["Service"]),
            ],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn reflexive_and_direct_edge() {
        let g = small();
        assert!(g.is_subconcept("Transport", "Transport").unwrap());
        assert!(g.is_subconcept("SeaFreight", "Transport").unwrap());
        assert!(g.is_subconcept("SeaFreight", "Service").unwrap());
        assert!(!g.is_subconcept("Transport", "SeaFreight").unwrap());
    }

    #[test]
    fn degrees() {
        let g = small();
        assert_eq!(g.match_degree("Transport", "Transport").unwrap(), MatchDegree::Exact);
        assert_eq!(g.match_degree("Transport", "SeaFreight").unwrap(), MatchDegree::Plugin);
        assert_eq!(
            g.match_degree("SeaFreight", "Transport").unwrap(),
            MatchDegree::Subsumes
        );
        assert_eq!(g.match_degree("Warehousing", "SeaFreight").unwrap(), MatchDegree::Fail);
        assert!(MatchDegree::Exact > MatchDegree::Plugin);
        assert!(MatchDegree::Plugin > MatchDegree::Subsumes);
        assert!(MatchDegree::Subsumes > MatchDegree::Fail);
    }

    #[test]
    fn unknown_concept_is_an_error() {
        let g = small();
        assert!(matches!(
            g.is_subconcept("Teleportation", "Service"),
            Err(OntologyError::UnknownConcept { .. })
        ));
        assert!(g.match_degree("Service", "Teleportation").is_err());
    }

    #[test]
    fn two_cycle_is_reported() {
        let err = OntologyGraph::new(
            "c",
            OntologyKind::Domain,
            vec![Concept::new("A", "A", &["B"]), Concept::new("B", "B", &["A"])],
            vec![],
        )
        .unwrap_err();
        match err {
            OntologyError::Cycle { cycle } => {
                assert_eq!(cycle.first(), cycle.last());
                assert!(cycle.contains(&"A".to_string()) && cycle.contains(&"B".to_string()));
            }
            other => panic!("expected cycle, got {other:?}"),
        }
    }

    #[test]
    fn self_loop_is_a_cycle() {
        let err =
            OntologyGraph::new("c", OntologyKind::Domain, vec![Concept::new("A", "A", &["A"])], vec![]).unwrap_err();
        assert!(matches!(err, OntologyError::Cycle { .. }));
    }

    #[test]
    fn dangling_parent() {
        let err = OntologyGraph::new(
            "c",
            OntologyKind::Domain,
            vec![Concept::new("A", "A", &["Ghost"])],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, OntologyError::DanglingParent { .. }));
    }

    #[test]
    fn multiple_inheritance() {
        let g = OntologyGraph::new(
            "m",
            OntologyKind::Domain,
            vec![
                Concept::new("A", "A", &[]),
                Concept::new("B", "B", &[]),
                Concept::new("C", "C", &["A", "B"]),
            ],
            vec![],
        )
        .unwrap();
        assert!(g.is_subconcept("C", "A").unwrap());
        assert!(g.is_subconcept("C", "B").unwrap());
        assert_eq!(g.ancestors_of("C").unwrap(), vec!["A", "B", "C"]);
    }

    #[test]
    fn rule_invariants() {
        let bad_step = Rule::new(
            "r",
            RuleKind::Concession,
            "price",
            &[("step", 0.0), ("max-rounds", 3.0)],
        );
        let bad_res = Rule::new("r", RuleKind::Reservation, "price", &[("min", 5.0), ("max", 1.0)]);
        for rule in [bad_step, bad_res] {
            let err = OntologyGraph::new("n", OntologyKind::Negotiation, vec![], vec![rule]).unwrap_err();
            assert!(matches!(err, OntologyError::InvalidRule { .. }));
        }
        let ok = Rule::new(
            "r",
            RuleKind::Concession,
            "price",
            &[("step", 1.0), ("max-rounds", 1.0)],
        );
        assert!(OntologyGraph::new("n", OntologyKind::Negotiation, vec![], vec![ok.clone()]).is_ok());
        assert!(OntologyGraph::new("d", OntologyKind::Domain, vec![], vec![ok]).is_err());
    }
}
