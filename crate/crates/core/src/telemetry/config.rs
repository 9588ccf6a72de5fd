use serde::{Deserialize, Serialize};

use super::event::{Millis, HOUR, MINUTE, SECOND};

/// Thresholds of the reconstruction, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    /// After consent; participants with no later event are excluded.
    pub learning_period: Millis,
    /// Inactivity that splits a session.
    pub session_gap: Millis,
    /// Hovers closer than this form one annotation view.
    pub hover_merge: Millis,
    /// Shorter hovers are discarded.
    pub hover_min: Millis,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { learning_period: 15 * MINUTE, session_gap: 2 * HOUR, hover_merge: 5 * SECOND, hover_min: SECOND }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("`{0}` must be positive")]
    NotPositive(&'static str),
    #[error("hover_min must be shorter than hover_merge")]
    HoverOrder,
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (v, name) in [
            (self.learning_period, "learning_period"),
            (self.session_gap, "session_gap"),
            (self.hover_merge, "hover_merge"),
            (self.hover_min, "hover_min"),
        ] {
            if v <= 0 {
                return Err(ConfigError::NotPositive(name));
            }
        }
        if self.hover_min >= self.hover_merge {
            return Err(ConfigError::HoverOrder);
        }
        Ok(())
    }
}
