use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AlnsError;

/// ALNS parameters. Loadable from a TOML key-value file; missing keys
/// take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlnsConfig {
    pub iterations: usize,
    /// Fraction of routed tasks removed per destroy, drawn uniformly.
    pub destroy_fraction: [f64; 2],
    pub segment_length: usize,
    pub reaction_factor: f64,
    /// Scores for (new best, improved current, accepted).
    pub operator_scores: [f64; 3],
    /// Acceptance probability of a candidate 5% worse than the
    /// construction profit at the initial temperature.
    pub sa_initial_acceptance: f64,
    pub sa_cooling: f64,
    /// Inter-route moves run every this many iterations.
    pub local_search_cadence: usize,
    /// Insertion-cost noise amplitude as a fraction of the largest travel
    /// time; applied to half of the repairs.
    pub repair_noise: f64,
    pub seed: u64,
}

impl Default for AlnsConfig {
    fn default() -> Self {
        Self {
            iterations: 100,
            destroy_fraction: [0.10, 0.30],
            segment_length: 20,
            reaction_factor: 0.5,
            operator_scores: [33.0, 9.0, 1.0],
            sa_initial_acceptance: 0.5,
            sa_cooling: 0.9975,
            local_search_cadence: 10,
            repair_noise: 0.5,
            seed: 0,
        }
    }
}

impl AlnsConfig {
    /// Budget for the initial plan at time zero.
    pub fn initial() -> Self {
        Self { iterations: 1000, ..Self::default() }
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), AlnsError> {
        let bad = |msg: &str| Err(AlnsError::InvalidConfig(msg.to_string()));
        let [lo, hi] = self.destroy_fraction;
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return bad("destroy_fraction must satisfy 0 < lo <= hi <= 1");
        }
        if self.segment_length == 0 {
            return bad("segment_length must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.reaction_factor) {
            return bad("reaction_factor must lie in [0, 1]");
        }
        if self.operator_scores.iter().any(|s| !(*s >= 0.0)) {
            return bad("operator scores must be nonnegative");
        }
        if !(self.sa_initial_acceptance > 0.0 && self.sa_initial_acceptance < 1.0) {
            return bad("sa_initial_acceptance must lie in (0, 1)");
        }
        if !(self.sa_cooling > 0.0 && self.sa_cooling < 1.0) {
            return bad("sa_cooling must lie in (0, 1)");
        }
        if !(self.repair_noise >= 0.0 && self.repair_noise.is_finite()) {
            return bad("repair_noise must be a nonnegative number");
        }
        if self.local_search_cadence == 0 {
            return bad("local_search_cadence must be at least 1");
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, AlnsError> {
        let cfg: Self = toml::from_str(text).map_err(|e| AlnsError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AlnsError> {
        let text = std::fs::read_to_string(path).map_err(|e| AlnsError::InvalidConfig(e.to_string()))?;
        Self::from_toml_str(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        AlnsConfig::default().validate().unwrap();
        assert_eq!(AlnsConfig::initial().iterations, 1000);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = AlnsConfig::from_toml_str("iterations = 250\ndestroy_fraction = [0.2, 0.4]\n").unwrap();
        assert_eq!(cfg.iterations, 250);
        assert_eq!(cfg.destroy_fraction, [0.2, 0.4]);
        assert_eq!(cfg.segment_length, 20);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(AlnsConfig::from_toml_str("iterations = 0").is_err());
        assert!(AlnsConfig::from_toml_str("destroy_fraction = [0.5, 0.2]").is_err());
        assert!(AlnsConfig::from_toml_str("sa_cooling = 1.0").is_err());
        assert!(AlnsConfig::from_toml_str("unknown_key = 3").is_err());
    }
}
