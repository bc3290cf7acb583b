//! Run manifest: enough provenance to tell whether two runs must have
//! produced byte-identical outputs.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use replyscope_core::error::Result;

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the resolved configuration's canonical JSON.
    pub config_sha256: String,
    pub seed: u64,
    /// Crate versions, keyed by crate name.
    pub versions: BTreeMap<String, String>,
    /// SHA-256 per input file, keyed by the path as configured.
    pub inputs: BTreeMap<String, String>,
}

fn hex(digest: &[u8]) -> String {
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = std::fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex(&hasher.finalize()))
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

impl RunManifest {
    /// Builds the manifest for one command run, digesting the resolved
    /// config and every input file it references.
    pub fn build(command: &str, config: &RunConfig, extra_inputs: &[&Path]) -> Result<Self> {
        let canonical = serde_json::to_vec(config).expect("config serializes");
        let mut inputs = BTreeMap::new();
        let mut digest_into = |path: &Path| -> Result<()> {
            inputs.insert(path.display().to_string(), sha256_file(path)?);
            Ok(())
        };
        if let Some(corpus) = &config.corpus {
            if corpus.is_file() {
                digest_into(corpus)?;
            }
        }
        for path in config.confusion.values() {
            if path.is_file() {
                digest_into(path)?;
            }
        }
        for path in extra_inputs {
            digest_into(path)?;
        }
        let mut versions = BTreeMap::new();
        versions.insert(
            "replyscope-core".to_string(),
            replyscope_core::VERSION.to_string(),
        );
        versions.insert(
            "replyscope-cli".to_string(),
            env!("CARGO_PKG_VERSION").to_string(),
        );
        Ok(RunManifest {
            command: command.to_string(),
            config_sha256: sha256_bytes(&canonical),
            seed: config.seed,
            versions,
            inputs,
        })
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        std::fs::create_dir_all(out_dir)?;
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(out_dir.join("run_manifest.json"), text + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_tracks_config_and_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = dir.path().join("c.jsonl");
        std::fs::write(&corpus, "line\n").unwrap();
        let mut cfg = RunConfig::default();
        cfg.corpus = Some(corpus.clone());

        let a = RunManifest::build("describe", &cfg, &[]).unwrap();
        let b = RunManifest::build("describe", &cfg, &[]).unwrap();
        assert_eq!(a, b);

        // Changing an input changes its digest; changing the config
        // changes the config hash.
        std::fs::write(&corpus, "other\n").unwrap();
        let c = RunManifest::build("describe", &cfg, &[]).unwrap();
        assert_ne!(a.inputs, c.inputs);
        assert_eq!(a.config_sha256, c.config_sha256);

        cfg.seed = 7;
        let d = RunManifest::build("describe", &cfg, &[]).unwrap();
        assert_ne!(c.config_sha256, d.config_sha256);

        d.write(dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("run_manifest.json")).unwrap();
        let back: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back, d);
    }
}
