use std::fmt;
use std::path::{Path, PathBuf};

use seeding_core::report::to_json_string;
use seeding_core::{MarketParams, VERSION};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Io(String),
    Assumptions(String),
    Verify(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Io(_) => 1,
            Failure::Assumptions(_) => 2,
            Failure::Verify(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Io(m) | Failure::Assumptions(m) | Failure::Verify(m) => {
                f.write_str(m)
            }
        }
    }
}

pub type CmdResult = Result<(), Failure>;

/// Resolved configuration echoed into every report.
#[derive(Debug, Clone, Serialize, Default)]
pub struct RunConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<MarketParams>,
    pub tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeding: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_target: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sets: Option<[Vec<usize>; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub force: bool,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct Tolerances {
    pub solver: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<f64>,
}

/// `body` with `tool`, `version` and `config` keys added.
pub fn envelope(config: &RunConfig, body: impl Serialize) -> Result<Value, Failure> {
    let mut value = serde_json::to_value(body).map_err(|e| Failure::Io(e.to_string()))?;
    let map = value
        .as_object_mut()
        .expect("report bodies are JSON objects");
    map.insert("tool".into(), json!("seeding"));
    map.insert("version".into(), json!(VERSION));
    map.insert(
        "config".into(),
        serde_json::to_value(config).map_err(|e| Failure::Io(e.to_string()))?,
    );
    Ok(value)
}

pub struct OutDir(Option<PathBuf>);

impl OutDir {
    pub fn new(path: Option<&Path>) -> Result<Self, Failure> {
        if let Some(p) = path {
            std::fs::create_dir_all(p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
        }
        Ok(Self(path.map(Path::to_path_buf)))
    }

    pub fn write(&self, name: &str, text: &str) -> CmdResult {
        if let Some(dir) = &self.0 {
            let path = dir.join(name);
            std::fs::write(&path, text)
                .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            println!("wrote {}", path.display());
        }
        Ok(())
    }

    pub fn write_json(&self, name: &str, value: &Value) -> CmdResult {
        if self.0.is_none() {
            return Ok(());
        }
        let text = to_json_string(value).map_err(|e| Failure::Io(e.to_string()))?;
        self.write(name, &text)
    }
}

/// 0-based ids to the 1-based ids used on the command line.
pub fn one_based(ids: impl IntoIterator<Item = usize>) -> Vec<usize> {
    ids.into_iter().map(|v| v + 1).collect()
}

/// Top `k` agents by `c_new`, ties by id, with their seeding `p·c_new`.
pub fn print_top(c_new: &[f64], price: f64, k: usize) {
    let mut order: Vec<usize> = (0..c_new.len()).collect();
    order.sort_by(|&i, &j| c_new[j].total_cmp(&c_new[i]).then(i.cmp(&j)));
    println!("{:>8}  {:>14}  {:>14}", "agent", "c_new", "seeding");
    for &v in order.iter().take(k) {
        println!(
            "{:>8}  {:>14.6}  {:>14.6}",
            v + 1,
            c_new[v],
            price * c_new[v]
        );
    }
}
