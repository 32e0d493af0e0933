use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use bwp_core::{format_layout, format_scenario, BuildingLayout, Scenario};

/// Writes `rows` under `header` to `<dir>/<name>`. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_csv(dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn num(v: f64) -> String {
    v.to_string()
}

pub fn layout_hash(layout: &BuildingLayout) -> String {
    hex::encode(Sha256::digest(format_layout(layout).as_bytes()))
}

/// Everything needed to repeat a run.
pub struct Manifest {
    body: serde_json::Map<String, Value>,
    outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut body = serde_json::Map::new();
        body.insert("command".into(), json!(command));
        body.insert("tool_version".into(), json!(env!("CARGO_PKG_VERSION")));
        body.insert("argv".into(), json!(std::env::args().collect::<Vec<_>>()));
        Self {
            body,
            outputs: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: Value) -> &mut Self {
        self.body.insert(key.into(), value);
        self
    }

    pub fn scenario(&mut self, s: &Scenario) -> &mut Self {
        self.set("scenario", json!(format_scenario(s)))
    }

    pub fn layout(&mut self, layout: &BuildingLayout) -> &mut Self {
        self.set("layout_sha256", json!(layout_hash(layout)))
            .set("layout_walls", json!(layout.walls().len()))
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.display().to_string());
        self
    }

    pub fn write(mut self, dir: &Path, threads: usize) -> Result<()> {
        self.body.insert("threads".into(), json!(threads));
        self.body.insert("outputs".into(), json!(self.outputs));
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&Value::Object(self.body))?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}
