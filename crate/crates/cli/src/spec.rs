//! Parsers for the compact string arguments: graph generators, scan
//! families, seeding rules and 1-based id lists.

use std::collections::BTreeMap;

use seeding_core::asr::{FamilyKind, SeedingRule};
use seeding_core::graph::GraphError;
use seeding_core::{
    generate_bounded_outdegree_family, generate_core_periphery, CorePeripheryParams,
    WeightedDigraph,
};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorSpec {
    CorePeriphery {
        chi: usize,
        m: usize,
        g: f64,
    },
    BoundedOutdegree {
        n: usize,
        d: usize,
        w: f64,
        seed: u64,
    },
    Empty {
        n: usize,
    },
}

impl GeneratorSpec {
    pub fn build(&self) -> Result<WeightedDigraph, GraphError> {
        match *self {
            Self::CorePeriphery { chi, m, g } => {
                generate_core_periphery(&CorePeripheryParams::new(chi, m, g)?)
            }
            Self::BoundedOutdegree { n, d, w, seed } => {
                generate_bounded_outdegree_family(n, d, w, seed)
            }
            Self::Empty { n } => Ok(WeightedDigraph::empty(n)),
        }
    }
}

/// `name:key=value,key=value`.
fn split_spec(text: &str) -> Result<(&str, BTreeMap<&str, &str>), String> {
    let (name, rest) = text.split_once(':').unwrap_or((text, ""));
    let mut fields = BTreeMap::new();
    for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| format!("`{part}` in `{text}` is not key=value"))?;
        if fields.insert(k.trim(), v.trim()).is_some() {
            return Err(format!("`{}` given twice in `{text}`", k.trim()));
        }
    }
    Ok((name.trim(), fields))
}

struct Fields<'a> {
    spec: &'a str,
    map: BTreeMap<&'a str, &'a str>,
}

impl<'a> Fields<'a> {
    fn take<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, String> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| format!("`{key}={v}` in `{}` is not a valid value", self.spec)),
        }
    }

    fn require<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, String> {
        self.take(key)?
            .ok_or_else(|| format!("`{}` is missing `{key}=`", self.spec))
    }

    fn finish(self) -> Result<(), String> {
        match self.map.keys().next() {
            Some(k) => Err(format!("unknown key `{k}` in `{}`", self.spec)),
            None => Ok(()),
        }
    }
}

pub fn parse_generator(text: &str) -> Result<GeneratorSpec, String> {
    let (name, map) = split_spec(text)?;
    let mut f = Fields { spec: text, map };
    let spec = match name {
        "core-periphery" => GeneratorSpec::CorePeriphery {
            chi: f.require("chi")?,
            m: f.require("m")?,
            g: f.require("g")?,
        },
        "bounded-outdegree" => GeneratorSpec::BoundedOutdegree {
            n: f.require("n")?,
            d: f.require("d")?,
            w: f.take("w")?.unwrap_or(1.0),
            seed: f.take("seed")?.unwrap_or(0),
        },
        "empty" => GeneratorSpec::Empty { n: f.require("n")? },
        other => {
            return Err(format!(
                "unknown generator `{other}`; expected core-periphery, bounded-outdegree or empty"
            ))
        }
    };
    f.finish()?;
    if let GeneratorSpec::CorePeriphery { chi, m, g } = spec {
        CorePeripheryParams { chi, m, g }
            .validate()
            .map_err(|e| e.to_string())?;
    }
    Ok(spec)
}

/// Families for `asr-scan`; the schedule supplies `m` or `n`.
pub fn parse_family(text: &str) -> Result<FamilyKind, String> {
    let (name, map) = split_spec(text)?;
    let mut f = Fields { spec: text, map };
    let kind = match name {
        "core-periphery" => FamilyKind::CorePeriphery {
            chi: f.take("chi")?.unwrap_or(3),
            g: f.take("g")?.unwrap_or(0.5),
        },
        "bounded-outdegree" => FamilyKind::BoundedOutdegree {
            d: f.require("d")?,
            weight: f.take("w")?.unwrap_or(1.0),
            seed: f.take("seed")?.unwrap_or(0),
        },
        other => {
            return Err(format!(
                "unknown family `{other}`; expected core-periphery or bounded-outdegree"
            ))
        }
    };
    f.finish()?;
    Ok(kind)
}

pub fn default_schedule(kind: &FamilyKind) -> Vec<usize> {
    match kind {
        FamilyKind::CorePeriphery { .. } => vec![10, 31, 100, 316, 1000],
        _ => vec![100, 1000, 10000],
    }
}

/// `role-models`, `top-k:5` or `nodes:1,2,3` (1-based).
pub fn parse_rule(text: &str) -> Result<SeedingRule, String> {
    let (name, rest) = text.split_once(':').unwrap_or((text, ""));
    match name.trim() {
        "role-models" if rest.is_empty() => Ok(SeedingRule::RoleModels),
        "top-k" => rest
            .trim()
            .parse()
            .map(|k| SeedingRule::TopK { k })
            .map_err(|_| format!("`{text}`: top-k needs a count, e.g. top-k:5")),
        "nodes" => Ok(SeedingRule::Custom {
            nodes: parse_ids(rest)?,
        }),
        _ => Err(format!(
            "unknown rule `{text}`; expected role-models, top-k:<k> or nodes:<ids>"
        )),
    }
}

/// Comma- or whitespace-separated 1-based ids, `#` comments allowed;
/// returned 0-based.
pub fn parse_ids(text: &str) -> Result<Vec<usize>, String> {
    let mut ids = Vec::new();
    for line in text.lines() {
        let content = line.split('#').next().unwrap_or("");
        for token in content
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
        {
            match token.parse::<usize>() {
                Ok(id) if id >= 1 => ids.push(id - 1),
                _ => return Err(format!("`{token}` is not a 1-based agent id")),
            }
        }
    }
    Ok(ids)
}

/// An id list given inline or as `@path`.
pub fn read_ids(arg: &str) -> Result<Vec<usize>, String> {
    match arg.strip_prefix('@') {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
            parse_ids(&text).map_err(|e| format!("{path}: {e}"))
        }
        None => parse_ids(arg),
    }
}

pub fn parse_schedule(text: &str) -> Result<Vec<usize>, String> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| format!("`{t}` in schedule is not a size"))
        })
        .collect()
}
