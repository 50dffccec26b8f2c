use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{match_service, sort_results, CentralRegister, MatchResult, ServiceDescription, ServiceQuery};
use crate::ontology::{MatchDegree, OntologyGraph};

/// What counts as a local hit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HitPolicy {
    /// At least one non-`Fail` match among cached entries.
    #[default]
    AnyMatch,
    /// At least one cached `Exact` match.
    ExactOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CacheEntry {
    pub description: ServiceDescription,
    pub provider_link: String,
    pub request_count: u64,
    pub last_used: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Lookup {
    Hit(Vec<MatchResult>),
    Miss,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncReport {
    pub refreshed: Vec<String>,
    pub removed: Vec<String>,
}

impl SyncReport {
    pub fn is_empty(&self) -> bool {
        self.refreshed.is_empty() && self.removed.is_empty()
    }
}

/// Frequency-based cache of the most requested services.
///
/// Eviction picks the lowest request count, then the oldest `last_used`, then
/// the smallest service id.
#[derive(Debug, Clone)]
pub struct LocalRegister {
    capacity: usize,
    entries: BTreeMap<String, CacheEntry>,
    clock: u64,
}

impl LocalRegister {
    /// # Panics
    /// If `capacity` is zero.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "local register capacity must be positive");
        Self {
            capacity,
            entries: BTreeMap::new(),
            clock: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, service_id: &str) -> Option<&CacheEntry> {
        self.entries.get(service_id)
    }

    pub fn entries(&self) -> impl Iterator<Item = &CacheEntry> {
        self.entries.values()
    }

    fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    pub fn lookup(&mut self, query: &ServiceQuery, graph: &OntologyGraph, policy: HitPolicy) -> Lookup {
        let mut results: Vec<MatchResult> = self
            .entries
            .values()
            .filter_map(|e| match_service(graph, query, &e.description).ok().flatten())
            .collect();
        let hit = match policy {
            HitPolicy::AnyMatch => !results.is_empty(),
            HitPolicy::ExactOnly => results.iter().any(|m| m.degree == MatchDegree::Exact),
        };
        if !hit {
            return Lookup::Miss;
        }
        sort_results(&mut results);
        let now = self.tick();
        for m in &results {
            if let Some(e) = self.entries.get_mut(&m.service.service_id) {
                e.request_count += 1;
                e.last_used = now;
            }
        }
        Lookup::Hit(results)
    }

    /// Caches central results; returns the ids evicted to respect capacity.
    pub fn feed(&mut self, results: &[MatchResult]) -> Vec<String> {
        let mut evicted = Vec::new();
        for m in results {
            let id = m.service.service_id.clone();
            if let Some(e) = self.entries.get_mut(&id) {
                e.description = m.service.clone();
                e.provider_link = m.service.provider_id.clone();
                continue;
            }
            let now = self.tick();
            self.entries.insert(
                id,
                CacheEntry {
                    description: m.service.clone(),
                    provider_link: m.service.provider_id.clone(),
                    request_count: 1,
                    last_used: now,
                },
            );
            while self.entries.len() > self.capacity {
                let victim = self
                    .entries
                    .iter()
                    .min_by(|(ia, a), (ib, b)| {
                        a.request_count
                            .cmp(&b.request_count)
                            .then(a.last_used.cmp(&b.last_used))
                            .then(ia.cmp(ib))
                    })
                    .map(|(id, _)| id.clone())
                    .expect("non-empty");
                self.entries.remove(&victim);
                evicted.push(victim);
            }
        }
        evicted
    }

    /// Refreshes modified entries and drops ones withdrawn centrally.
    pub fn sync(&mut self, central: &CentralRegister) -> SyncReport {
        let mut report = SyncReport::default();
        let ids: Vec<String> = self.entries.keys().cloned().collect();
        for id in ids {
            match central.get(&id) {
                None => {
                    self.entries.remove(&id);
                    report.removed.push(id);
                }
                Some(current) => {
                    let entry = self.entries.get_mut(&id).expect("listed above");
                    if entry.description != *current {
                        entry.description = current.clone();
                        entry.provider_link = current.provider_id.clone();
                        report.refreshed.push(id);
                    }
                }
            }
        }
        report
    }
}
