//! JSON description of a capture: camera, ground-truth fog, noise and
//! provenance.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::camera::CameraConfig;
use crate::error::{Error, Result};
use crate::scattering::FogParams;
use crate::sim::{Integration, NoiseSpec, PhaseModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub tool_version: String,
}

impl Provenance {
    pub fn current(seed: u64) -> Self {
        Provenance {
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneInfo {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub integration: Integration,
    #[serde(default)]
    pub phase_model: PhaseModel,
    #[serde(default)]
    pub backscatter_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFiles {
    pub capture: String,
    #[serde(default)]
    pub truth_depth: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub camera: CameraConfig,
    /// Ground-truth fog of a synthetic capture; `None` for clear air or
    /// when unknown.
    #[serde(default)]
    pub fog: Option<FogParams>,
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    #[serde(default)]
    pub scene: Option<SceneInfo>,
    pub provenance: Provenance,
    pub files: ManifestFiles,
}

impl Manifest {
    /// Parse a manifest. In strict mode any key the schema does not know is
    /// an error; otherwise such keys are ignored.
    pub fn from_json(text: &str, strict: bool) -> Result<Self> {
        let raw: Value = serde_json::from_str(text)?;
        let manifest: Manifest = serde_json::from_value(raw.clone())?;
        manifest.camera.validate()?;
        if strict {
            let known = serde_json::to_value(&manifest)?;
            let mut unknown = Vec::new();
            collect_unknown(&raw, &known, "", &mut unknown);
            if !unknown.is_empty() {
                return Err(Error::Config(format!("unknown manifest keys: {}", unknown.join(", "))));
            }
        }
        Ok(manifest)
    }

    pub fn read(path: &Path, strict: bool) -> Result<Self> {
        Manifest::from_json(&std::fs::read_to_string(path)?, strict)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        super::write_atomic(path, self.to_json()?.as_bytes())
    }
}

/// Keys present in `raw` but absent from the re-serialized `known` document.
fn collect_unknown(raw: &Value, known: &Value, path: &str, out: &mut Vec<String>) {
    match (raw, known) {
        (Value::Object(r), Value::Object(k)) => {
            for (key, value) in r {
                let p = if path.is_empty() {
                    key.clone()
                } else {
                    format!("{path}.{key}")
                };
                match k.get(key) {
                    Some(kv) => collect_unknown(value, kv, &p, out),
                    None => out.push(p),
                }
            }
        }
        (Value::Array(r), Value::Array(k)) => {
            for (i, (rv, kv)) in r.iter().zip(k).enumerate() {
                collect_unknown(rv, kv, &format!("{path}[{i}]"), out);
            }
        }
        _ => {}
    }
}
