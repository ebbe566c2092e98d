use super::{ModelError, DEFAULT_MAX_VALUE};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

const WEIGHT_TOLERANCE: f64 = 1e-9;

/// Weights of the four collusion indicators inside DOC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct Weights {
    gvs: f64,
    gts: f64,
    grs: f64,
    gms: f64,
}

impl Weights {
    pub const EQUAL: Weights = Weights {
        gvs: 0.25,
        gts: 0.25,
        grs: 0.25,
        gms: 0.25,
    };

    /// Weights for value similarity, time similarity, spamicity and member
    /// suspiciousness, in that order. Each must be non-negative and the sum
    /// must be 1 within 1e-9.
    pub fn new(gvs: f64, gts: f64, grs: f64, gms: f64) -> Result<Self, ModelError> {
        let all = [gvs, gts, grs, gms];
        let sum: f64 = all.iter().sum();
        if all.iter().any(|w| !(*w >= 0.0) || !w.is_finite())
            || (sum - 1.0).abs() > WEIGHT_TOLERANCE
        {
            return Err(ModelError::BadWeights(sum));
        }
        Ok(Self { gvs, gts, grs, gms })
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.gvs, self.gts, self.grs, self.gms]
    }

    pub fn gvs(&self) -> f64 {
        self.gvs
    }

    pub fn gts(&self) -> f64 {
        self.gts
    }

    pub fn grs(&self) -> f64 {
        self.grs
    }

    pub fn gms(&self) -> f64 {
        self.gms
    }
}

impl Default for Weights {
    fn default() -> Self {
        Self::EQUAL
    }
}

impl TryFrom<[f64; 4]> for Weights {
    type Error = ModelError;

    fn try_from(w: [f64; 4]) -> Result<Self, Self::Error> {
        Self::new(w[0], w[1], w[2], w[3])
    }
}

impl From<Weights> for [f64; 4] {
    fn from(w: Weights) -> Self {
        w.as_array()
    }
}

impl FromStr for Weights {
    type Err = ModelError;

    /// Parses `"0.4,0.2,0.2,0.2"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(ModelError::BadConfig(format!(
                "expected four comma-separated weights, got {:?}",
                s
            )));
        }
        let mut w = [0.0; 4];
        for (slot, part) in w.iter_mut().zip(&parts) {
            *slot = part
                .parse()
                .map_err(|_| ModelError::BadConfig(format!("not a number: {:?}", part)))?;
        }
        Self::try_from(w)
    }
}

/// Indicator values of one group plus the two aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicatorReport {
    pub gvs: f64,
    pub gts: f64,
    pub grs: f64,
    pub gms: f64,
    pub gs: f64,
    pub gps: f64,
    pub doc: f64,
    pub di: f64,
}

impl IndicatorReport {
    pub fn values(&self) -> [f64; 8] {
        [
            self.gvs, self.gts, self.grs, self.gms, self.gs, self.gps, self.doc, self.di,
        ]
    }
}

/// Parameters of one detection run. Serialized form doubles as the CLI
/// config-file schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    pub min_r: usize,
    pub min_p: usize,
    /// Widest rating time window, in days, still treated as coordinated.
    pub max_tw: u32,
    pub delta: f64,
    pub weights: Weights,
    pub prune_reviewer_min: usize,
    pub prune_product_min: usize,
    pub max_value: f64,
    /// Abort enumeration once this many bicliques have been produced.
    pub candidate_cap: usize,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            min_r: 2,
            min_p: 3,
            max_tw: 30,
            delta: 0.4,
            weights: Weights::EQUAL,
            prune_reviewer_min: 10,
            prune_product_min: 10,
            max_value: DEFAULT_MAX_VALUE,
            candidate_cap: 100_000,
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::BadConfig(msg));
        if self.min_r < 2 {
            return bad(format!("min_r must be at least 2, got {}", self.min_r));
        }
        if self.min_p < 2 {
            return bad(format!("min_p must be at least 2, got {}", self.min_p));
        }
        if self.max_tw == 0 {
            return bad("max_tw must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return bad(format!("delta must lie in [0, 1], got {}", self.delta));
        }
        if !(self.max_value >= 1.0 && self.max_value.is_finite()) {
            return Err(ModelError::BadMaxValue(self.max_value));
        }
        if self.candidate_cap == 0 {
            return bad("candidate_cap must be positive".into());
        }
        // re-check in case the struct was assembled by hand
        Weights::try_from(self.weights.as_array())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = DetectionConfig::default();
        assert_eq!(c.delta, 0.4);
        assert_eq!(c.weights.as_array(), [0.25; 4]);
        assert_eq!((c.min_r, c.min_p), (2, 3));
        assert_eq!(c.max_tw, 30);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn weights_must_sum_to_one() {
        assert!(Weights::new(0.4, 0.3, 0.2, 0.1).is_ok());
        assert_eq!(
            Weights::new(0.5, 0.5, 0.5, 0.5),
            Err(ModelError::BadWeights(2.0))
        );
        assert!(Weights::new(1.2, -0.2, 0.0, 0.0).is_err());
        assert!("0.5,0.5,0.5,0.5".parse::<Weights>().is_err());
        assert_eq!(
            "0.4, 0.2,0.2,0.2".parse::<Weights>().unwrap().as_array(),
            [0.4, 0.2, 0.2, 0.2]
        );
        assert!("0.4,0.2,0.4".parse::<Weights>().is_err());
    }

    #[test]
    fn config_json_is_partial_friendly() {
        let c: DetectionConfig = serde_json::from_str(r#"{"delta": 0.5}"#).unwrap();
        assert_eq!(c.delta, 0.5);
        assert_eq!(c.min_p, 3);
        let bad: Result<DetectionConfig, _> =
            serde_json::from_str(r#"{"weights": [0.5, 0.5, 0.5, 0.5]}"#);
        assert!(bad.is_err());
        let json = serde_json::to_string(&DetectionConfig::default()).unwrap();
        let back: DetectionConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, DetectionConfig::default());
    }

    #[test]
    fn validation_catches_bad_bounds() {
        let mut c = DetectionConfig {
            min_r: 1,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c.min_r = 2;
        c.delta = 1.5;
        assert!(c.validate().is_err());
        c.delta = 0.4;
        c.max_tw = 0;
        assert!(c.validate().is_err());
    }
}
