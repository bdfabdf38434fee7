use std::fs;
use std::path::{Path, PathBuf};

use fact_core::corpus::{load_corpus, synth_generate, Manifest, MultiDomainCorpus, SynthConfig};
use fact_core::{FactError, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const ECHO_FILE: &str = "config.toml";
pub const SEED_ENV: &str = "FACT_SEED";

/// Where a command gets its corpus: a directory with `manifest.toml`, or an
/// in-memory synthetic corpus.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSpec {
    pub root: Option<PathBuf>,
    pub synth: Option<SynthConfig>,
}

impl DataSpec {
    pub fn load(&self) -> Result<MultiDomainCorpus> {
        match (&self.root, &self.synth) {
            (Some(root), None) => load_corpus(root, &Manifest::from_file(&root.join("manifest.toml"))?),
            (None, Some(synth)) => synth_generate(synth),
            (Some(_), Some(_)) => Err(FactError::Config(
                "data: set either data.root or data.synth, not both".into(),
            )),
            (None, None) => Err(FactError::Config(
                "data: no corpus given; pass --data <dir> or set data.root / data.synth".into(),
            )),
        }
    }
}

/// A parsed `--config` file: the typed config plus the raw table, used to
/// tell whether a key was set explicitly.
pub struct Loaded<T> {
    pub value: T,
    table: toml::Table,
}

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<Loaded<T>> {
    let Some(path) = path else {
        return Ok(Loaded {
            value: T::default(),
            table: toml::Table::new(),
        });
    };
    let text = fs::read_to_string(path).map_err(|e| FactError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| FactError::Config(format!("{}: {e}", path.display())))?;
    let value = T::deserialize(table.clone()).map_err(|e| FactError::Config(format!("{}: {e}", path.display())))?;
    Ok(Loaded { value, table })
}

impl<T> Loaded<T> {
    pub fn has(&self, key_path: &[&str]) -> bool {
        let mut cur = &self.table;
        for (i, k) in key_path.iter().enumerate() {
            match cur.get(*k) {
                Some(toml::Value::Table(t)) if i + 1 < key_path.len() => cur = t,
                Some(_) if i + 1 == key_path.len() => return true,
                _ => return false,
            }
        }
        false
    }

    /// Flag, then config file, then `FACT_SEED`, then the type's default.
    pub fn resolve_seed(&self, flag: Option<u64>, key_path: &[&str], slot: &mut u64) -> Result<()> {
        if let Some(s) = flag {
            *slot = s;
        } else if !self.has(key_path) {
            if let Ok(raw) = std::env::var(SEED_ENV) {
                *slot = raw
                    .trim()
                    .parse()
                    .map_err(|_| FactError::Config(format!("{SEED_ENV}='{raw}' is not an unsigned integer")))?;
            }
        }
        if *slot > i64::MAX as u64 {
            return Err(FactError::Config(format!("seed {} exceeds {}", slot, i64::MAX)));
        }
        Ok(())
    }
}

pub fn prepare_out(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| FactError::Io {
        path: out.to_path_buf(),
        source: e,
    })
}

pub fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = toml::to_string_pretty(value).map_err(|e| FactError::Config(format!("cannot serialize: {e}")))?;
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| FactError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Writes the fully resolved config next to the outputs.
pub fn echo<T: Serialize>(out: &Path, value: &T) -> Result<()> {
    write_toml(&out.join(ECHO_FILE), value)
}
