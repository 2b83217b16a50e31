//! Run configuration: one JSON file drives solve, optimize, and sweep.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sharebounty::{
    default_eta, AttackerParams, GameConfig, MetricWeights, Money, RewardSpec, ValueVariant,
};

fn default_alpha_cap() -> f64 {
    0.8
}

fn default_grid_step() -> f64 {
    0.01
}

fn default_out_dir() -> String {
    "out".to_string()
}

/// Everything a run needs. The checked-in `configs/default.json` mirrors
/// [`RunConfig::default`], which carries the reference evaluation setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub game: GameConfig,
    pub attacker: AttackerParams,
    pub weights: MetricWeights,
    /// Schedule used by `solve` and as the sweep's champion.
    pub reward: RewardSpec,
    /// Bounty ceiling as a fraction of the full key value.
    #[serde(default = "default_alpha_cap")]
    pub alpha_cap: f64,
    /// Early-bird margin for optimized and baseline schedules.
    #[serde(default)]
    pub eta: Option<Money>,
    /// Grid pitch of the blend-weight search.
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let game = GameConfig::new(3, 3, 30, Money::from_units(6), ValueVariant::LinearCapped)
            .expect("reference game is valid");
        let eta = default_eta(&game);
        RunConfig {
            attacker: AttackerParams::new(Money::from_f64(0.4), 0.4)
                .expect("reference attacker is valid"),
            weights: MetricWeights::balanced(),
            reward: RewardSpec::capped_proposed(0.95, eta, default_alpha_cap()),
            alpha_cap: default_alpha_cap(),
            eta: Some(eta),
            grid_step: default_grid_step(),
            seed: 0,
            out_dir: default_out_dir(),
            game,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("malformed config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.game.validate().context("invalid game section")?;
        self.attacker.validate().context("invalid attacker section")?;
        self.weights.validate().context("invalid weights section")?;
        self.reward.validate().context("invalid reward section")?;
        if !(self.alpha_cap > 0.0 && self.alpha_cap <= 1.0) {
            anyhow::bail!("alpha_cap must be in (0, 1], got {}", self.alpha_cap);
        }
        if !(self.grid_step > 0.0 && self.grid_step <= 1.0) {
            anyhow::bail!("grid_step must be in (0, 1], got {}", self.grid_step);
        }
        if let Some(eta) = self.eta {
            if eta.is_negative() {
                anyhow::bail!("eta must be >= 0, got {eta}");
            }
        }
        Ok(())
    }

    /// Margin to use where a schedule needs one: the configured value or
    /// one percent of the key value.
    pub fn eta(&self) -> Money {
        self.eta.unwrap_or_else(|| default_eta(&self.game))
    }
}
