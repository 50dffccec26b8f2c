//! Line-oriented text format shared by ontology and mapping documents.
//!
//! ```text
//! # comment
//! ontology port-logistics domain
//! concept Transport "Transport" Service
//! rule acme.price.res reservation price min=50 max=100 prefer=-1
//! ```
//!
//! Mapping documents start with `mapping <source-ontology> <target-ontology>`
//! and contain `map <source-id> <target-id>` records. Serialization emits one
//! record per line in the order the records were read, so a document without
//! comments or blank lines round-trips byte for byte.

use std::fmt::Write as _;

use super::{Concept, ConceptMapping, OntologyError, OntologyGraph, OntologyKind, Rule, RuleKind};

/// Either kind of document the format can hold.
#[derive(Debug, Clone, PartialEq)]
pub enum Document {
    Ontology(OntologyGraph),
    Mapping(ConceptMapping),
}

pub fn parse_document(text: &str) -> Result<Document, OntologyError> {
    enum Header {
        Ontology(String, OntologyKind),
        Mapping(String, String),
    }
    let mut header: Option<Header> = None;
    let mut concepts = Vec::new();
    let mut rules = Vec::new();
    let mut pairs = Vec::new();

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| OntologyError::Parse { line: line_no, message };
        let (keyword, rest) = line.split_once(' ').unwrap_or((line, ""));
        let rest = rest.trim();
        match keyword {
            "ontology" | "mapping" => {
                if header.is_some() {
                    return Err(err("second document header".into()));
                }
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() != 2 {
                    return Err(err(format!("expected `{keyword} <id> <...>`")));
                }
                header = Some(if keyword == "ontology" {
                    let kind = OntologyKind::parse(parts[1])
                        .ok_or_else(|| err(format!("unknown ontology kind `{}`", parts[1])))?;
                    Header::Ontology(parts[0].to_string(), kind)
                } else {
                    Header::Mapping(parts[0].to_string(), parts[1].to_string())
                });
            }
            "concept" => concepts.push(parse_concept(rest).map_err(err)?),
            "rule" => rules.push(parse_rule(rest).map_err(err)?),
            "map" => {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() != 2 {
                    return Err(err("expected `map <source-id> <target-id>`".into()));
                }
                pairs.push((parts[0].to_string(), parts[1].to_string()));
            }
            other => return Err(err(format!("unknown record kind `{other}`"))),
        }
    }

    match header {
        None => Err(OntologyError::Parse {
            line: 0,
            message: "missing `ontology` or `mapping` header".into(),
        }),
        Some(Header::Ontology(id, kind)) => {
            if !pairs.is_empty() {
                return Err(OntologyError::Invalid(
                    "`map` records belong in a mapping document".into(),
                ));
            }
            Ok(Document::Ontology(OntologyGraph::new(id, kind, concepts, rules)?))
        }
        Some(Header::Mapping(source, target)) => {
            if !concepts.is_empty() || !rules.is_empty() {
                return Err(OntologyError::Invalid(
                    "mapping documents hold only `map` records".into(),
                ));
            }
            Ok(Document::Mapping(ConceptMapping::new(source, target, pairs)?))
        }
    }
}

/// Parses an ontology document; mapping documents are rejected.
pub fn load_ontology(text: &str) -> Result<OntologyGraph, OntologyError> {
    match parse_document(text)? {
        Document::Ontology(g) => Ok(g),
        Document::Mapping(_) => Err(OntologyError::Invalid(
            "expected an ontology document, found a mapping".into(),
        )),
    }
}

pub fn load_mapping(text: &str) -> Result<ConceptMapping, OntologyError> {
    match parse_document(text)? {
        Document::Mapping(m) => Ok(m),
        Document::Ontology(_) => Err(OntologyError::Invalid(
            "expected a mapping document, found an ontology".into(),
        )),
    }
}

fn parse_concept(rest: &str) -> Result<Concept, String> {
    let (id, after) = rest.split_once(' ').ok_or("expected `concept <id> \"<label>\"`")?;
    let after = after.trim_start();
    let after = after.strip_prefix('"').ok_or("label must be double-quoted")?;
    let (label, tail) = after.split_once('"').ok_or("unterminated label")?;
    let tail = tail.trim();
    let parents = if tail.is_empty() {
        Vec::new()
    } else {
        if tail.contains(char::is_whitespace) {
            return Err("parents must be comma-separated without spaces".into());
        }
        tail.split(',')
            .map(|p| {
                if p.is_empty() {
                    Err("empty parent id".to_string())
                } else {
                    Ok(p.to_string())
                }
            })
            .collect::<Result<_, _>>()?
    };
    if id.contains(',') || id.contains('"') {
        return Err(format!("invalid concept id `{id}`"));
    }
    Ok(Concept {
        id: id.to_string(),
        label: label.to_string(),
        parents,
    })
}

fn parse_rule(rest: &str) -> Result<Rule, String> {
    let mut parts = rest.split_whitespace();
    let (Some(id), Some(kind), Some(attribute)) = (parts.next(), parts.next(), parts.next()) else {
        return Err("expected `rule <id> <kind> <attribute> key=value...`".into());
    };
    let kind = RuleKind::parse(kind).ok_or_else(|| format!("unknown rule kind `{kind}`"))?;
    let mut parameters = Vec::new();
    for kv in parts {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got `{kv}`"))?;
        let v: f64 = v.parse().map_err(|_| format!("parameter {k} is not a number"))?;
        parameters.push((k.to_string(), v));
    }
    Ok(Rule {
        id: id.to_string(),
        kind,
        attribute: attribute.to_string(),
        parameters,
    })
}

pub fn serialize_ontology(graph: &OntologyGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "ontology {} {}", graph.id(), graph.kind().as_str());
    for c in graph.concepts() {
        let _ = write!(out, "concept {} \"{}\"", c.id, c.label);
        if !c.parents.is_empty() {
            let _ = write!(out, " {}", c.parents.join(","));
        }
        out.push('\n');
    }
    for r in graph.rules() {
        let _ = write!(out, "rule {} {} {}", r.id, r.kind.as_str(), r.attribute);
        for (k, v) in &r.parameters {
            let _ = write!(out, " {k}={v}");
        }
        out.push('\n');
    }
    out
}

pub fn serialize_mapping(mapping: &ConceptMapping) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "mapping {} {}",
        mapping.source_ontology(),
        mapping.target_ontology()
    );
    for (s, t) in mapping.pairs() {
        let _ = writeln!(out, "map {s} {t}");
    }
    out
}

/// Drops comment and blank lines; the canonical form serialization reproduces.
pub fn strip_comments(text: &str) -> String {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .fold(String::new(), |mut acc, l| {
            acc.push_str(l);
            acc.push('\n');
            acc
        })
}
