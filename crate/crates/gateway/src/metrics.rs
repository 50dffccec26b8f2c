//! Run metrics for a finished scenario.

use std::fmt;

use coopnet_core::platform::{Platform, PlatformStats};
use num_rational::Ratio;
use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricsReport {
    pub stats: PlatformStats,
    pub trace_hash: String,
}

/// `num / den`, with an empty denominator counting as zero.
fn ratio(num: u64, den: u64) -> Ratio<u64> {
    if den == 0 {
        Ratio::from_integer(0)
    } else {
        Ratio::new(num, den)
    }
}

fn to_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

impl MetricsReport {
    pub fn from_platform(p: &Platform) -> Self {
        Self {
            stats: p.stats(),
            trace_hash: p.trace().hash(),
        }
    }

    /// Local hits over all discovery queries.
    pub fn cache_hit_rate(&self) -> Ratio<u64> {
        ratio(self.stats.local_hits, self.stats.discoveries)
    }

    pub fn mean_hops(&self) -> Ratio<u64> {
        ratio(self.stats.discovery_hops, self.stats.discoveries)
    }

    /// Rounds per finished negotiation, agreed or not.
    pub fn mean_rounds(&self) -> Ratio<u64> {
        ratio(self.stats.negotiation_rounds, self.stats.negotiations_finished)
    }

    pub fn to_json(&self) -> Value {
        let s = &self.stats;
        json!({
            "discoveries": s.discoveries,
            "local-hits": s.local_hits,
            "cache-hit-rate": to_f64(self.cache_hit_rate()),
            "cache-hit-rate-exact": self.cache_hit_rate().to_string(),
            "mean-hops-per-discovery": to_f64(self.mean_hops()),
            "contracts-concluded": s.contracts_concluded,
            "negotiations-failed": s.negotiations_failed,
            "mean-negotiation-rounds": to_f64(self.mean_rounds()),
            "trace-hash": self.trace_hash,
        })
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.stats;
        let rows = [
            ("discoveries", s.discoveries.to_string()),
            (
                "cache hit rate",
                format!(
                    "{}/{} ({:.3})",
                    s.local_hits,
                    s.discoveries,
                    to_f64(self.cache_hit_rate())
                ),
            ),
            ("mean hops per discovery", format!("{:.3}", to_f64(self.mean_hops()))),
            ("contracts concluded", s.contracts_concluded.to_string()),
            ("negotiations failed", s.negotiations_failed.to_string()),
            ("mean negotiation rounds", format!("{:.3}", to_f64(self.mean_rounds()))),
            ("trace hash", self.trace_hash.clone()),
        ];
        for (k, v) in rows {
            writeln!(f, "{k:<26}{v}")?;
        }
        Ok(())
    }
}
