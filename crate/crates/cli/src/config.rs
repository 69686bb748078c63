//! Optional TOML configuration mirroring the command-line flags; flags win.
//!
//! ```toml
//! seed = 7
//! out = "reports"
//! format = "json"
//! dims = [8, 16, 32]
//! p = 1.5
//!
//! [params]            # applied to every claim that knows the key
//! samples = 50000
//!
//! [claims.FINITE_VR]  # per-claim overrides
//! dims = [8, 16]
//! params = { groups = 2 }
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::Value;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub dims: Option<Vec<usize>>,
    pub p: Option<Value>,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default)]
    pub claims: BTreeMap<String, ClaimOverride>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimOverride {
    pub dims: Option<Vec<usize>>,
    pub bodies: Option<Vec<String>>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}
