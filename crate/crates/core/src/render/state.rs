use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use base64::engine::{DecodePaddingMode, GeneralPurpose, GeneralPurposeConfig};
use base64::Engine;
use serde::{Deserialize, Serialize};

pub const STATE_VERSION: u32 = 1;
const PREFIX: &str = "#cds=";

const ENGINE: GeneralPurpose = GeneralPurpose::new(
    &base64::alphabet::URL_SAFE,
    GeneralPurposeConfig::new().with_encode_padding(false).with_decode_padding_mode(DecodePaddingMode::Indifferent),
);

/// One pinned annotation; coordinates are CSS pixels relative to the top
/// left of the code block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pin {
    pub id: String,
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SavedState {
    pub v: u32,
    pub pins: Vec<Pin>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StateError {
    #[error("fragment does not start with `#cds=`")]
    MissingKey,
    #[error("malformed base64")]
    Base64,
    #[error("malformed state: {0}")]
    Json(String),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u64),
    #[error("pin `{0}` must be at least 1x1")]
    EmptyPin(String),
    #[error("pin `{0}` appears twice")]
    DuplicatePin(String),
}

impl SavedState {
    /// A version-1 state with pins in canonical (id) order.
    pub fn new(mut pins: Vec<Pin>) -> Self {
        pins.sort_by(|a, b| a.id.cmp(&b.id));
        Self { v: STATE_VERSION, pins }
    }

    pub fn validate(&self) -> Result<(), StateError> {
        if self.v != STATE_VERSION {
            return Err(StateError::UnsupportedVersion(self.v.into()));
        }
        let mut ids = BTreeSet::new();
        for p in &self.pins {
            if p.w == 0 || p.h == 0 {
                return Err(StateError::EmptyPin(p.id.clone()));
            }
            if !ids.insert(p.id.as_str()) {
                return Err(StateError::DuplicatePin(p.id.clone()));
            }
        }
        Ok(())
    }
}

/// `#cds=` followed by unpadded URL-safe base64 of the compact JSON form,
/// pins ordered by id.
pub fn encode_state(state: &SavedState) -> Result<String, StateError> {
    state.validate()?;
    let canonical = SavedState::new(state.pins.clone());
    let json = serde_json::to_string(&canonical).expect("state serializes");
    let mut out = String::from(PREFIX);
    ENGINE.encode_string(json.as_bytes(), &mut out);
    Ok(out)
}

/// Inverse of [`encode_state`]. Accepts the fragment with or without its
/// leading `#`, and padded or unpadded base64. Annotation ids are not
/// checked against any document.
pub fn decode_state(fragment: &str) -> Result<SavedState, StateError> {
    let payload = fragment
        .strip_prefix(PREFIX)
        .or_else(|| fragment.strip_prefix(&PREFIX[1..]))
        .ok_or(StateError::MissingKey)?;
    let bytes = ENGINE.decode(payload).map_err(|_| StateError::Base64)?;

    #[derive(Deserialize)]
    struct Version {
        v: u64,
    }
    let version: Version = serde_json::from_slice(&bytes).map_err(|e| StateError::Json(alloc::format!("{e}")))?;
    if version.v != u64::from(STATE_VERSION) {
        return Err(StateError::UnsupportedVersion(version.v));
    }
    let state: SavedState = serde_json::from_slice(&bytes).map_err(|e| StateError::Json(alloc::format!("{e}")))?;
    state.validate()?;
    Ok(SavedState::new(state.pins))
}
