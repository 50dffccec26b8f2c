use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{match_service, sort_results, MatchResult, RegistryError, ServiceDescription, ServiceQuery};
use crate::ontology::OntologyGraph;

/// The authoritative catalog of published services.
///
/// Service ids are sequential (`svc-000001`, ...). Writes are scoped to the
/// owning provider.
#[derive(Debug, Clone, Default)]
pub struct CentralRegister {
    services: BTreeMap<String, ServiceDescription>,
    next_id: u64,
}

impl CentralRegister {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.services.len()
    }

    pub fn is_empty(&self) -> bool {
        self.services.is_empty()
    }

    pub fn get(&self, service_id: &str) -> Option<&ServiceDescription> {
        self.services.get(service_id)
    }

    pub fn services(&self) -> impl Iterator<Item = &ServiceDescription> {
        self.services.values()
    }

    pub fn find_by_name(&self, provider: &str, name: &str) -> Option<&ServiceDescription> {
        self.services
            .values()
            .find(|s| s.provider_id == provider && s.name == name)
    }

    pub fn publish(&mut self, mut draft: ServiceDescription, graph: &OntologyGraph) -> Result<String, RegistryError> {
        draft.validate(graph)?;
        if draft.provider_id.is_empty() {
            return Err(RegistryError::validation("provider-id", "must be set"));
        }
        if self.find_by_name(&draft.provider_id, &draft.name).is_some() {
            return Err(RegistryError::DuplicateName {
                provider: draft.provider_id,
                name: draft.name,
            });
        }
        self.next_id += 1;
        let id = format!("svc-{:06}", self.next_id);
        draft.service_id = id.clone();
        self.services.insert(id.clone(), draft);
        Ok(id)
    }

    /// Replaces an owned service's description; the id is preserved.
    pub fn update(
        &mut self,
        provider: &str,
        service_id: &str,
        mut desc: ServiceDescription,
        graph: &OntologyGraph,
    ) -> Result<(), RegistryError> {
        self.check_owner(provider, service_id)?;
        desc.validate(graph)?;
        if let Some(other) = self.find_by_name(provider, &desc.name) {
            if other.service_id != service_id {
                return Err(RegistryError::DuplicateName {
                    provider: provider.to_string(),
                    name: desc.name,
                });
            }
        }
        desc.service_id = service_id.to_string();
        desc.provider_id = provider.to_string();
        self.services.insert(service_id.to_string(), desc);
        Ok(())
    }

    pub fn withdraw(&mut self, provider: &str, service_id: &str) -> Result<ServiceDescription, RegistryError> {
        self.check_owner(provider, service_id)?;
        Ok(self.services.remove(service_id).expect("checked above"))
    }

    fn check_owner(&self, provider: &str, service_id: &str) -> Result<(), RegistryError> {
        let current = self
            .services
            .get(service_id)
            .ok_or_else(|| RegistryError::UnknownService(service_id.to_string()))?;
        if current.provider_id != provider {
            return Err(RegistryError::NotOwner {
                service: service_id.to_string(),
                provider: provider.to_string(),
            });
        }
        Ok(())
    }

    /// Every non-`Fail` match, degree descending then id ascending.
    pub fn discover(&self, query: &ServiceQuery, graph: &OntologyGraph) -> Result<Vec<MatchResult>, RegistryError> {
        if query.ontology_id != graph.id() {
            return Err(RegistryError::UnknownOntology(query.ontology_id.clone()));
        }
        let mut out = Vec::new();
        for s in self.services.values() {
            if let Some(m) =
                match_service(graph, query, s).map_err(|e| RegistryError::validation("query", &e.to_string()))?
            {
                out.push(m);
            }
        }
        sort_results(&mut out);
        Ok(out)
    }

    /// Writes `<dir>/registry/central/<service-id>.svc`, one file per service.
    pub fn save_dir(&self, root: &Path) -> Result<(), RegistryError> {
        let dir = root.join("registry").join("central");
        fs::create_dir_all(&dir)?;
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "svc") {
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
                if !self.services.contains_key(stem) {
                    fs::remove_file(&path)?;
                }
            }
        }
        for (id, desc) in &self.services {
            fs::write(dir.join(format!("{id}.svc")), desc.to_text())?;
        }
        Ok(())
    }

    pub fn load_dir(root: &Path) -> Result<Self, RegistryError> {
        let dir = root.join("registry").join("central");
        let mut reg = Self::new();
        if !dir.exists() {
            return Ok(reg);
        }
        let mut paths: Vec<_> = fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "svc"))
            .collect();
        paths.sort();
        for path in paths {
            let desc = ServiceDescription::from_text(&fs::read_to_string(&path)?)?;
            if desc.service_id.is_empty() {
                return Err(RegistryError::validation(
                    "service-id",
                    &format!("missing in {}", path.display()),
                ));
            }
            if let Some(n) = desc.service_id.strip_prefix("svc-").and_then(|n| n.parse::<u64>().ok()) {
                reg.next_id = reg.next_id.max(n);
            }
            reg.services.insert(desc.service_id.clone(), desc);
        }
        Ok(reg)
    }
}
