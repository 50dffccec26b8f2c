use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::RegistryError;
use crate::ontology::OntologyGraph;
use crate::selection::{Direction, Preference, UtilityModel};

/// Attributes that are fractions and must lie in `[0, 1]`.
pub const FRACTION_ATTRIBUTES: &[&str] = &["reliability", "availability"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub concept: String,
}

impl Parameter {
    pub fn new(name: &str, concept: &str) -> Self {
        Self {
            name: name.to_string(),
            concept: concept.to_string(),
        }
    }
}

/// A semantically annotated service advertisement.
///
/// Drafts carry empty `service_id` (and possibly `provider_id`) until the
/// central register assigns them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceDescription {
    pub service_id: String,
    pub provider_id: String,
    pub name: String,
    pub category: String,
    pub inputs: Vec<Parameter>,
    pub outputs: Vec<Parameter>,
    pub attributes: BTreeMap<String, f64>,
    pub ontology_id: String,
}

impl ServiceDescription {
    pub fn validate(&self, graph: &OntologyGraph) -> Result<(), RegistryError> {
        if graph.id() != self.ontology_id {
            return Err(RegistryError::UnknownOntology(self.ontology_id.clone()));
        }
        if self.name.trim().is_empty() {
            return Err(RegistryError::validation("name", "must be non-empty"));
        }
        if self.name.contains('\n') {
            return Err(RegistryError::validation("name", "must be a single line"));
        }
        let concepts = std::iter::once(("category", &self.category))
            .chain(self.inputs.iter().map(|p| ("inputs", &p.concept)))
            .chain(self.outputs.iter().map(|p| ("outputs", &p.concept)));
        for (field, concept) in concepts {
            if !graph.contains(concept) {
                return Err(RegistryError::validation(
                    field,
                    &format!("unknown concept `{concept}` in `{}`", graph.id()),
                ));
            }
        }
        for (name, v) in &self.attributes {
            if !v.is_finite() {
                return Err(RegistryError::validation(
                    "attributes",
                    &format!("{name} is not finite"),
                ));
            }
            if FRACTION_ATTRIBUTES.contains(&name.as_str()) && !(0.0..=1.0).contains(v) {
                return Err(RegistryError::validation(
                    "attributes",
                    &format!("{name} must lie in [0,1]"),
                ));
            }
        }
        Ok(())
    }

    /// Text record: one `field: value` per line, attributes as `attr.<name>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if !self.service_id.is_empty() {
            let _ = writeln!(out, "service-id: {}", self.service_id);
        }
        if !self.provider_id.is_empty() {
            let _ = writeln!(out, "provider-id: {}", self.provider_id);
        }
        let _ = writeln!(out, "name: {}", self.name);
        let _ = writeln!(out, "category: {}", self.category);
        let _ = writeln!(out, "inputs: {}", join_params(&self.inputs));
        let _ = writeln!(out, "outputs: {}", join_params(&self.outputs));
        let _ = writeln!(out, "ontology-id: {}", self.ontology_id);
        for (k, v) in &self.attributes {
            let _ = writeln!(out, "attr.{k}: {v}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, RegistryError> {
        let mut d = ServiceDescription {
            service_id: String::new(),
            provider_id: String::new(),
            name: String::new(),
            category: String::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            attributes: BTreeMap::new(),
            ontology_id: String::new(),
        };
        for (line, field, value) in fields(text)? {
            match field {
                "service-id" => d.service_id = value.to_string(),
                "provider-id" => d.provider_id = value.to_string(),
                "name" => d.name = value.to_string(),
                "category" => d.category = value.to_string(),
                "inputs" => d.inputs = split_params(value).map_err(|m| RegistryError::Parse { line, message: m })?,
                "outputs" => d.outputs = split_params(value).map_err(|m| RegistryError::Parse { line, message: m })?,
                "ontology-id" => d.ontology_id = value.to_string(),
                other => {
                    let Some(attr) = other.strip_prefix("attr.") else {
                        return Err(RegistryError::Parse {
                            line,
                            message: format!("unknown field `{other}`"),
                        });
                    };
                    let v: f64 = value.parse().map_err(|_| RegistryError::Parse {
                        line,
                        message: format!("attribute {attr} is not a number"),
                    })?;
                    d.attributes.insert(attr.to_string(), v);
                }
            }
        }
        for (field, v) in [
            ("name", &d.name),
            ("category", &d.category),
            ("ontology-id", &d.ontology_id),
        ] {
            if v.is_empty() {
                return Err(RegistryError::Parse {
                    line: 0,
                    message: format!("missing field `{field}`"),
                });
            }
        }
        Ok(d)
    }
}

/// A customer's request for a service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceQuery {
    pub query_id: String,
    pub requester: String,
    pub category: String,
    pub required_outputs: Vec<String>,
    pub provided_inputs: Vec<String>,
    pub ontology_id: String,
    pub preferences: UtilityModel,
}

impl ServiceQuery {
    pub fn validate(&self, graph: &OntologyGraph) -> Result<(), RegistryError> {
        self.validate_shape()?;
        if graph.id() != self.ontology_id {
            return Err(RegistryError::UnknownOntology(self.ontology_id.clone()));
        }
        for c in std::iter::once(&self.category)
            .chain(&self.required_outputs)
            .chain(&self.provided_inputs)
        {
            if !graph.contains(c) {
                return Err(RegistryError::validation("query", &format!("unknown concept `{c}`")));
            }
        }
        Ok(())
    }

    /// Checks that need no ontology.
    pub fn validate_shape(&self) -> Result<(), RegistryError> {
        if self.required_outputs.is_empty() {
            return Err(RegistryError::validation("required-outputs", "must be non-empty"));
        }
        self.preferences
            .validate()
            .map_err(|e| RegistryError::validation("preferences", &e.to_string()))
    }

    /// Canonical form used to compare queries: sorted, lowercased concept lists.
    pub fn canonical(&self) -> String {
        let norm = |v: &[String]| {
            let mut v: Vec<String> = v.iter().map(|c| c.to_lowercase()).collect();
            v.sort();
            v.dedup();
            v.join(",")
        };
        format!(
            "ont={};cat={};out={};in={}",
            self.ontology_id.to_lowercase(),
            self.category.to_lowercase(),
            norm(&self.required_outputs),
            norm(&self.provided_inputs)
        )
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if !self.query_id.is_empty() {
            let _ = writeln!(out, "query-id: {}", self.query_id);
        }
        if !self.requester.is_empty() {
            let _ = writeln!(out, "requester: {}", self.requester);
        }
        let _ = writeln!(out, "category: {}", self.category);
        let _ = writeln!(out, "required-outputs: {}", self.required_outputs.join(","));
        let _ = writeln!(out, "provided-inputs: {}", self.provided_inputs.join(","));
        let _ = writeln!(out, "ontology-id: {}", self.ontology_id);
        for (k, p) in self.preferences.terms() {
            let _ = writeln!(out, "pref.{k}: {} {} {} {}", p.weight, p.direction, p.min, p.max);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, RegistryError> {
        let mut q = ServiceQuery {
            query_id: String::new(),
            requester: String::new(),
            category: String::new(),
            required_outputs: Vec::new(),
            provided_inputs: Vec::new(),
            ontology_id: String::new(),
            preferences: UtilityModel::default(),
        };
        let mut terms = BTreeMap::new();
        for (line, field, value) in fields(text)? {
            let list = |v: &str| -> Vec<String> {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            };
            match field {
                "query-id" => q.query_id = value.to_string(),
                "requester" => q.requester = value.to_string(),
                "category" => q.category = value.to_string(),
                "required-outputs" => q.required_outputs = list(value),
                "provided-inputs" => q.provided_inputs = list(value),
                "ontology-id" => q.ontology_id = value.to_string(),
                other => {
                    let bad = |message: String| RegistryError::Parse { line, message };
                    let attr = other
                        .strip_prefix("pref.")
                        .ok_or_else(|| bad(format!("unknown field `{other}`")))?;
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    if parts.len() != 4 {
                        return Err(bad("expected `pref.<attr>: <weight> <benefit|cost> <min> <max>`".into()));
                    }
                    let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("`{s}` is not a number")));
                    let direction =
                        Direction::parse(parts[1]).ok_or_else(|| bad(format!("unknown direction `{}`", parts[1])))?;
                    terms.insert(
                        attr.to_string(),
                        Preference {
                            weight: num(parts[0])?,
                            direction,
                            min: num(parts[2])?,
                            max: num(parts[3])?,
                        },
                    );
                }
            }
        }
        q.preferences =
            UtilityModel::new(terms).map_err(|e| RegistryError::validation("preferences", &e.to_string()))?;
        if q.category.is_empty() || q.ontology_id.is_empty() {
            return Err(RegistryError::Parse {
                line: 0,
                message: "query needs category and ontology-id".into(),
            });
        }
        Ok(q)
    }
}

fn fields(text: &str) -> Result<Vec<(usize, &str, &str)>, RegistryError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (field, value) = line.split_once(':').ok_or_else(|| RegistryError::Parse {
            line: i + 1,
            message: "expected `field: value`".into(),
        })?;
        out.push((i + 1, field.trim(), value.trim()));
    }
    Ok(out)
}

fn join_params(params: &[Parameter]) -> String {
    params
        .iter()
        .map(|p| format!("{}={}", p.name, p.concept))
        .collect::<Vec<_>>()
        .join(",")
}

fn split_params(value: &str) -> Result<Vec<Parameter>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            item.split_once('=')
                .map(|(n, c)| Parameter::new(n.trim(), c.trim()))
                .ok_or_else(|| format!("expected name=Concept, got `{item}`"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SVC: &str = "name: Le Havre sea freight\ncategory: SeaFreight\ninputs: cargo=Container,origin=Port\noutputs: bill=BillOfLading\nontology-id: port-logistics\nattr.price: 110\nattr.reliability: 0.95\n";

    #[test]
    fn description_text_round_trip() {
        let mut d = ServiceDescription::from_text(SVC).unwrap();
        assert_eq!(d.inputs.len(), 2);
        assert_eq!(d.attributes["price"], 110.0);
        assert_eq!(d.to_text(), SVC);
        d.service_id = "svc-000001".into();
        d.provider_id = "acc-000001".into();
        assert_eq!(ServiceDescription::from_text(&d.to_text()).unwrap(), d);
    }

    #[test]
    fn unknown_field_rejected() {
        let err = ServiceDescription::from_text("name: x\ncolour: red\n").unwrap_err();
        assert!(matches!(err, RegistryError::Parse { line: 2, .. }));
    }

    #[test]
    fn query_text_round_trip_and_canonical_form() {
        let text = "category: Transport\nrequired-outputs: Document\nprovided-inputs: Port,Container\nontology-id: port-logistics\npref.price: 1 cost 50 150\n";
        let q = ServiceQuery::from_text(text).unwrap();
        assert_eq!(q.to_text(), text);
        assert_eq!(
            q.canonical(),
            "ont=port-logistics;cat=transport;out=document;in=container,port"
        );
    }

    #[test]
    fn empty_required_outputs_is_invalid() {
        let q =
            ServiceQuery::from_text("category: Transport\nrequired-outputs:\nontology-id: x\npref.price: 1 cost 0 1\n")
                .unwrap();
        assert!(matches!(q.validate_shape(), Err(RegistryError::Validation { .. })));
    }
}
