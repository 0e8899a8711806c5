//! Run configuration: YAML files with flat dotted-key overrides, merged
//! under any explicit command-line flags, and serialized next to every
//! command's outputs for reproducibility.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_yaml::Value;

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "SPHKIT_OUTPUT_ROOT";

/// Resolve the output directory: explicit path wins; otherwise a subdirectory
/// of `$SPHKIT_OUTPUT_ROOT`.
pub fn resolve_out_dir(explicit: Option<&Path>, default_name: &str) -> Result<PathBuf> {
    if let Some(path) = explicit {
        return Ok(path.to_path_buf());
    }
    if let Ok(root) = std::env::var(OUTPUT_ROOT_ENV) {
        return Ok(PathBuf::from(root).join(default_name));
    }
    bail!("no output directory: pass --out or set {OUTPUT_ROOT_ENV}")
}

/// Build a typed config: start from the command defaults, merge the YAML
/// config file (if any), then apply `--set key.path=value` overrides.
pub fn load_config<T: Serialize + DeserializeOwned>(
    defaults: &T,
    config_file: Option<&Path>,
    sets: &[String],
) -> Result<T> {
    let mut value = serde_yaml::to_value(defaults)?;
    if let Some(path) = config_file {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let overlay: Value =
            serde_yaml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        merge(&mut value, overlay);
    }
    for entry in sets {
        let (key, raw) = entry
            .split_once('=')
            .with_context(|| format!("override {entry:?} is not key=value"))?;
        let parsed: Value = serde_yaml::from_str(raw).unwrap_or(Value::String(raw.to_string()));
        set_path(&mut value, key, parsed)?;
    }
    Ok(serde_yaml::from_value(value)?)
}

fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Mapping(base_map), Value::Mapping(overlay_map)) => {
            for (k, v) in overlay_map {
                match base_map.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        base_map.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn set_path(root: &mut Value, dotted: &str, new: Value) -> Result<()> {
    let mut cursor = root;
    let parts: Vec<&str> = dotted.split('.').collect();
    for (idx, part) in parts.iter().enumerate() {
        let last = idx + 1 == parts.len();
        let map = cursor
            .as_mapping_mut()
            .with_context(|| format!("override path {dotted:?}: {part:?} is not a mapping"))?;
        let key = Value::String(part.to_string());
        if last {
            map.insert(key, new);
            return Ok(());
        }
        cursor = map
            .entry(key)
            .or_insert_with(|| Value::Mapping(Default::default()));
    }
    Ok(())
}

/// Write the effective configuration next to the outputs.
pub fn write_effective_config<T: Serialize>(out_dir: &Path, config: &T) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let text = serde_yaml::to_string(config)?;
    std::fs::write(out_dir.join("run_config.yaml"), text)?;
    Ok(())
}
