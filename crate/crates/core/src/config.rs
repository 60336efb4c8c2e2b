//! Run configuration: every knob a simulation accepts, with defaults,
//! TOML round-tripping, and validation that names the offending key.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decision::{DpWeights, Scheme, ThresholdWeights};
use crate::protocol::OffsetParams;
use crate::topology::Topology;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("configuration key `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
    #[error("configuration key `topology`: unknown topology {0:?}; expected \"nsfnet\", \"cost239\", or the path of a topology file")]
    UnknownTopology(String),
    #[error("failed to parse configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("failed to read configuration file: {0}")]
    Io(#[from] std::io::Error),
}

fn invalid(key: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key, reason: reason.into() }
}

/// Complete description of one simulation run. Every field has a default,
/// so a configuration file may set only what it cares about.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Network to simulate: "nsfnet" or "cost239".
    pub topology: String,
    /// Contention-resolution scheme in force.
    pub scheme: Scheme,
    /// Offered load as a fraction of total network capacity, in (0, 1].
    pub load: f64,
    /// Seed for every random stream in the run.
    pub seed: u64,
    /// Simulated time horizon in seconds.
    pub duration_s: f64,
    /// Bursts first generated before this instant are excluded from metrics.
    pub warmup_s: f64,
    /// Mean of the exponential burst-size distribution, in bytes.
    pub mean_burst_bytes: f64,
    /// Weight of link loss rate in the per-link drop probability.
    pub alpha_blr: f64,
    /// Weight of link utilization in the per-link drop probability.
    pub alpha_u: f64,
    /// Weight of network loss rate in the adaptive deflection threshold.
    pub beta_blr: f64,
    /// Weight of network utilization in the adaptive deflection threshold.
    pub beta_u: f64,
    /// Fixed deflection threshold overriding the adaptive one, if set.
    pub pinned_sp_th: Option<f64>,
    /// Retransmission budget per burst.
    pub n_ret: u32,
    /// Deflection budget per burst lifetime under the hop-limited scheme.
    pub mlhdr_max_deflections: u32,
    /// Upper bound of the uniform idle delay before a retransmission.
    pub max_retransmit_idle_s: f64,
    /// Sliding-window length for link statistics.
    pub stats_window_s: f64,
    /// Interval between routing-table and threshold refreshes.
    pub stats_update_period_s: f64,
    /// Switching-matrix configuration time per burst.
    pub t_conf_s: f64,
    /// Header processing time per hop.
    pub t_p_s: f64,
    /// Candidate routes may be at most this factor longer than the shortest.
    pub route_stretch: f64,
    /// Record per-burst protocol events for auditing.
    pub collect_trace: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            topology: "nsfnet".to_owned(),
            scheme: Scheme::Ahdr,
            load: 0.5,
            seed: 1,
            duration_s: 60.0,
            warmup_s: 1.0,
            mean_burst_bytes: 400e3,
            alpha_blr: 0.5,
            alpha_u: 0.5,
            beta_blr: 0.4,
            beta_u: 0.2,
            pinned_sp_th: None,
            n_ret: 1,
            mlhdr_max_deflections: 1,
            max_retransmit_idle_s: 0.05,
            stats_window_s: 1.0,
            stats_update_period_s: 0.1,
            t_conf_s: 10e-6,
            t_p_s: 10e-6,
            route_stretch: 4.0,
            collect_trace: false,
        }
    }
}

impl SimConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let config: SimConfig = toml::from_str(s)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// The fully resolved configuration as TOML, defaults included.
    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("configuration always serializes")
    }

    /// Builds the configured network: a built-in by name, or any other
    /// value is taken as the path of a topology file.
    pub fn topology_instance(&self) -> Result<Topology, ConfigError> {
        match self.topology.as_str() {
            "nsfnet" => Ok(Topology::nsfnet()),
            "cost239" => Ok(Topology::cost239()),
            other => {
                let path = std::path::Path::new(other);
                if path.is_file() {
                    Topology::from_file(path).map_err(|e| {
                        invalid("topology", format!("failed to load {other:?}: {e}"))
                    })
                } else {
                    Err(ConfigError::UnknownTopology(other.to_owned()))
                }
            }
        }
    }

    pub fn dp_weights(&self) -> Result<DpWeights, ConfigError> {
        DpWeights::new(self.alpha_blr, self.alpha_u)
            .map_err(|e| invalid("alpha_blr/alpha_u", e.to_string()))
    }

    pub fn threshold_weights(&self) -> Result<ThresholdWeights, ConfigError> {
        ThresholdWeights::new(self.beta_blr, self.beta_u)
            .map_err(|e| invalid("beta_blr/beta_u", e.to_string()))
    }

    pub fn offset_params(&self) -> OffsetParams {
        OffsetParams { t_conf_s: self.t_conf_s, t_p_s: self.t_p_s }
    }

    /// Checks every field; the error names the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.topology_instance()?;
        self.dp_weights()?;
        self.threshold_weights()?;
        if !(self.load > 0.0 && self.load <= 1.0) {
            return Err(invalid("load", format!("must be in (0, 1], got {}", self.load)));
        }
        let positive: [(&'static str, f64); 6] = [
            ("mean_burst_bytes", self.mean_burst_bytes),
            ("stats_window_s", self.stats_window_s),
            ("stats_update_period_s", self.stats_update_period_s),
            ("t_conf_s", self.t_conf_s),
            ("t_p_s", self.t_p_s),
            ("max_retransmit_idle_s", self.max_retransmit_idle_s),
        ];
        for (key, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(invalid(key, format!("must be positive and finite, got {value}")));
            }
        }
        if !(self.duration_s >= 0.0 && self.duration_s.is_finite()) {
            return Err(invalid(
                "duration_s",
                format!("must be non-negative and finite, got {}", self.duration_s),
            ));
        }
        if !(self.warmup_s >= 0.0 && self.warmup_s.is_finite()) {
            return Err(invalid(
                "warmup_s",
                format!("must be non-negative and finite, got {}", self.warmup_s),
            ));
        }
        if self.duration_s < self.warmup_s {
            return Err(invalid(
                "warmup_s",
                format!(
                    "must not exceed duration_s ({} > {})",
                    self.warmup_s, self.duration_s
                ),
            ));
        }
        if let Some(th) = self.pinned_sp_th {
            if !(th >= 0.0 && th.is_finite()) {
                return Err(invalid(
                    "pinned_sp_th",
                    format!("must be non-negative and finite, got {th}"),
                ));
            }
        }
        if !(self.route_stretch >= 1.0 && self.route_stretch.is_finite()) {
            return Err(invalid(
                "route_stretch",
                format!("must be at least 1, got {}", self.route_stretch),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let config = SimConfig::default();
        config.validate().unwrap();
        assert_eq!(config.scheme, Scheme::Ahdr);
        assert_eq!(config.topology, "nsfnet");
        assert!((config.load - 0.5).abs() < 1e-12);
        assert_eq!(config.n_ret, 1);
    }

    #[test]
    fn partial_toml_fills_in_defaults() {
        let config = SimConfig::from_toml_str(
            "topology = \"cost239\"\nscheme = \"mlhdr\"\nload = 0.8\n",
        )
        .unwrap();
        assert_eq!(config.topology, "cost239");
        assert_eq!(config.scheme, Scheme::Mlhdr);
        assert!((config.load - 0.8).abs() < 1e-12);
        // Untouched keys keep their defaults.
        assert!((config.duration_s - 60.0).abs() < 1e-12);
        assert!((config.t_p_s - 10e-6).abs() < 1e-18);
    }

    #[test]
    fn toml_round_trip_preserves_everything() {
        let mut config = SimConfig::default();
        config.scheme = Scheme::DeflectOnly;
        config.pinned_sp_th = Some(0.25);
        config.seed = 42;
        let echoed = SimConfig::from_toml_str(&config.to_toml_string()).unwrap();
        assert_eq!(echoed, config);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(SimConfig::from_toml_str("does_not_exist = 3\n").is_err());
    }

    #[test]
    fn overload_is_rejected_with_the_permitted_range() {
        let mut config = SimConfig::default();
        config.load = 1.5;
        let err = config.validate().unwrap_err().to_string();
        assert!(err.contains("load"), "{err}");
        assert!(err.contains("(0, 1]"), "{err}");
    }

    #[test]
    fn topology_key_accepts_a_file_path() {
        let path = std::env::temp_dir().join("obsim_config_test_triangle.toml");
        std::fs::write(&path, "nodes = 3\nlinks = [[0, 1], [1, 2], [0, 2]]\n").unwrap();
        let mut config = SimConfig::default();
        config.topology = path.to_str().unwrap().to_owned();
        let topo = config.topology_instance().unwrap();
        assert_eq!(topo.node_count(), 3);
        assert_eq!(topo.links().len(), 3);
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn unknown_topology_is_rejected_by_name() {
        let mut config = SimConfig::default();
        config.topology = "arpanet".to_owned();
        let err = config.validate().unwrap_err().to_string();
        assert!(err.contains("topology"), "{err}");
        assert!(err.contains("arpanet"), "{err}");
    }

    #[test]
    fn errors_name_the_offending_key() {
        let cases: [(&str, Box<dyn Fn(&mut SimConfig)>); 7] = [
            ("load", Box::new(|c| c.load = 0.0)),
            ("load", Box::new(|c| c.load = 1.5)),
            ("mean_burst_bytes", Box::new(|c| c.mean_burst_bytes = -4.0)),
            ("warmup_s", Box::new(|c| c.warmup_s = 120.0)),
            ("alpha_blr/alpha_u", Box::new(|c| c.alpha_blr = 0.9)),
            ("beta_blr/beta_u", Box::new(|c| c.beta_blr = 0.95)),
            ("pinned_sp_th", Box::new(|c| c.pinned_sp_th = Some(f64::NAN))),
        ];
        for (key, mutate) in cases {
            let mut config = SimConfig::default();
            mutate(&mut config);
            let err = config.validate().unwrap_err().to_string();
            assert!(err.contains(key), "expected {key} in: {err}");
        }
    }

    #[test]
    fn scheme_names_round_trip() {
        for scheme in Scheme::ALL {
            assert_eq!(scheme.name().parse::<Scheme>().unwrap(), scheme);
        }
        assert!("obscure".parse::<Scheme>().is_err());
    }

    #[test]
    fn zero_duration_run_is_allowed() {
        let mut config = SimConfig::default();
        config.duration_s = 0.0;
        config.warmup_s = 0.0;
        config.validate().unwrap();
    }
}
