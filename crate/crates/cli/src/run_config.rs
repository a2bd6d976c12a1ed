//! `key = value` run configuration shared by `train` and `gradcheck`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dgner::model::ModelConfig;
use dgner::train::TrainConfig;
use dgner::{Error, Result};

pub const PATH_KEYS: [&str; 9] = [
    "train",
    "dev",
    "test",
    "embeddings",
    "context_train",
    "context_dev",
    "context_test",
    "checkpoint",
    "output_dir",
];

/// Keys that are neither model, training nor path settings.
pub const OTHER_KEYS: [&str; 1] = ["label_closure"];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub paths: BTreeMap<&'static str, PathBuf>,
    pub label_closure: bool,
}

fn known(key: &str) -> bool {
    ModelConfig::KEYS.contains(&key)
        || TrainConfig::KEYS.contains(&key)
        || PATH_KEYS.contains(&key)
        || OTHER_KEYS.contains(&key)
}

/// Parses `key = value` lines. `#` starts a comment line.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "line {}: expected `key = value`, got `{line}`",
                i + 1
            ))
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Splits a `--set key=value` override.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{s}` is not `key=value`")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

impl RunConfig {
    /// Builds from file pairs followed by overrides (later entries win).
    /// Relative paths resolve against `base` and are stored absolute. Training defaults follow the
    /// chosen architecture unless set explicitly.
    pub fn from_pairs(pairs: &[(String, String)], base: &Path) -> Result<Self> {
        let mut merged: BTreeMap<&str, &str> = BTreeMap::new();
        for (k, v) in pairs {
            if !known(k) {
                return Err(Error::Config(format!("unknown key `{k}`")));
            }
            merged.insert(k, v);
        }
        let mut model = ModelConfig::default();
        for k in ModelConfig::KEYS {
            if let Some(v) = merged.get(k) {
                model.set(k, v)?;
            }
        }
        let mut train = TrainConfig::for_architecture(model.architecture);
        for k in TrainConfig::KEYS {
            if let Some(v) = merged.get(k) {
                train.set(k, v)?;
            }
        }
        let mut paths = BTreeMap::new();
        for k in PATH_KEYS {
            if let Some(v) = merged.get(k) {
                paths.insert(k, std::path::absolute(base.join(v))?);
            }
        }
        let label_closure = match merged.get("label_closure") {
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("invalid value `{v}` for `label_closure`")))?,
            None => model.iobes_mask,
        };
        model.validate()?;
        train.validate()?;
        Ok(RunConfig {
            model,
            train,
            paths,
            label_closure,
        })
    }

    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config `{}`: {e}", path.display())))?;
        let mut pairs = parse_pairs(&text)?;
        pairs.extend_from_slice(overrides);
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::from_pairs(&pairs, base)
    }

    pub fn path(&self, key: &str) -> Option<&Path> {
        self.paths.get(key).map(PathBuf::as_path)
    }

    pub fn required(&self, key: &str) -> Result<&Path> {
        self.path(key)
            .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }

    /// Every input path must exist before any work starts.
    pub fn check_inputs(&self) -> Result<()> {
        for (k, p) in &self.paths {
            if matches!(*k, "checkpoint" | "output_dir") {
                continue;
            }
            if !p.is_file() {
                return Err(Error::Config(format!(
                    "`{k}`: no such file `{}`",
                    p.display()
                )));
            }
        }
        Ok(())
    }

    /// Effective configuration with defaults filled in, one `key = value`
    /// per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self
            .model
            .to_pairs()
            .into_iter()
            .chain(self.train.to_pairs())
        {
            let _ = writeln!(out, "{k} = {v}");
        }
        let _ = writeln!(out, "label_closure = {}", self.label_closure);
        for (k, p) in &self.paths {
            let _ = writeln!(out, "{k} = {}", p.display());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(text: &str) -> Vec<(String, String)> {
        parse_pairs(text).unwrap()
    }

    #[test]
    fn defaults_follow_architecture() {
        let cfg =
            RunConfig::from_pairs(&pairs("architecture = bilstm-gcn\n"), Path::new(".")).unwrap();
        assert_eq!((cfg.train.epochs, cfg.train.clip), (300, Some(3.0)));
        let cfg = RunConfig::from_pairs(
            &pairs("architecture = bilstm-gcn\nepochs = 5\nclip = off"),
            Path::new("."),
        )
        .unwrap();
        assert_eq!((cfg.train.epochs, cfg.train.clip), (5, None));
        assert_eq!(
            RunConfig::from_pairs(&[], Path::new("."))
                .unwrap()
                .train
                .seed,
            42
        );
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_pairs(&pairs("# c\nfoo = 1\n"), Path::new(".")).unwrap_err();
        assert!(
            matches!(&err, Error::Config(m) if m.contains("`foo`")),
            "{err}"
        );
    }

    #[test]
    fn overrides_win_and_paths_resolve() {
        let mut p = pairs("layers = 1\ntrain = a.txt\n");
        p.push(parse_override("layers=3").unwrap());
        let cfg = RunConfig::from_pairs(&p, Path::new("/data")).unwrap();
        assert_eq!(cfg.model.layers, 3);
        assert_eq!(cfg.path("train"), Some(Path::new("/data/a.txt")));
    }

    #[test]
    fn echoed_text_reparses_to_the_same_config() {
        let cfg = RunConfig::from_pairs(
            &pairs("interaction = add\nlr = 0.05\ntrain = /x/t.txt"),
            Path::new("/"),
        )
        .unwrap();
        let again = RunConfig::from_pairs(&pairs(&cfg.to_text()), Path::new("/")).unwrap();
        assert_eq!(again, cfg);
    }
}
