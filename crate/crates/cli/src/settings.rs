use crate::Failure;
use bcs_core::{DetectionConfig, Weights};
use clap::Args;
use std::path::{Path, PathBuf};

/// Detection parameters shared by several subcommands. Unset flags fall back
/// to the environment, then to `--config`, then to the built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct DetectArgs {
    /// Collusion threshold for DOC and DI [default: 0.4]
    #[arg(long, env = "BCS_DELTA")]
    pub delta: Option<f64>,
    /// DOC weights for GVS,GTS,GRS,GMS [default: 0.25,0.25,0.25,0.25]
    #[arg(long, value_name = "V,T,R,M")]
    pub weights: Option<String>,
    /// Widest coordinated time window, in days [default: 30]
    #[arg(long, env = "BCS_MAX_TW")]
    pub max_tw: Option<u32>,
    /// Minimum reviewers per group [default: 2]
    #[arg(long)]
    pub min_r: Option<usize>,
    /// Minimum products per group [default: 3]
    #[arg(long)]
    pub min_p: Option<usize>,
    /// Abort mining after this many groups [default: 100000]
    #[arg(long)]
    pub cap: Option<usize>,
}

pub fn load_config(path: Option<&Path>) -> Result<DetectionConfig, Failure> {
    let Some(path) = path else {
        return Ok(DetectionConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::config(format!("bad config {}: {e}", path.display())))
}

impl DetectArgs {
    pub fn apply(&self, mut cfg: DetectionConfig) -> Result<DetectionConfig, Failure> {
        if let Some(d) = self.delta {
            cfg.delta = d;
        }
        if let Some(w) = &self.weights {
            cfg.weights = w
                .parse::<Weights>()
                .map_err(|e| Failure::config(e.to_string()))?;
        }
        if let Some(t) = self.max_tw {
            cfg.max_tw = t;
        }
        if let Some(r) = self.min_r {
            cfg.min_r = r;
        }
        if let Some(p) = self.min_p {
            cfg.min_p = p;
        }
        if let Some(c) = self.cap {
            cfg.candidate_cap = c;
        }
        cfg.validate().map_err(|e| Failure::config(e.to_string()))?;
        Ok(cfg)
    }
}

pub fn resolve(config: Option<&PathBuf>, args: &DetectArgs) -> Result<DetectionConfig, Failure> {
    args.apply(load_config(config.map(|p| p.as_path()))?)
}
