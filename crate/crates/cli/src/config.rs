//! Config files, flag overrides and run manifests.
//!
//! A config file is TOML with `[protocol]`, `[lattice]`, `[adversary]`,
//! `[run]` and `[sweep]` tables. A manifest written by an earlier run is
//! JSON and carries the fully resolved config, so passing it back through
//! `--config` replays that run.

use std::path::{Path, PathBuf};

use blindver::lattice::LatticeConfig;
use blindver::protocols::{AdversarySpec, ProtocolConfig, ProtocolKind, Setup, DEFAULT_SEED};
use serde::{Deserialize, Serialize};

use crate::Failure;

/// Environment variable that sets the default output directory.
pub const OUTPUT_DIR_ENV: &str = "BLINDVER_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "out";
pub const DEFAULT_TRIALS: u64 = 1000;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Code distance of the canonical lattice; 1 means bare qubits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assert_bounds: Option<bool>,
    /// Number of trials to re-run at state level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crosscheck: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Distances such as `"3,6,9"` or `"1-8"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub protocol: ProtocolSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeConfig>,
    #[serde(default)]
    pub adversary: AdversarySpec,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

/// Written next to every set of result files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub timestamp: String,
    pub command: String,
    pub seed: u64,
    pub config: FileConfig,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, config: &FileConfig, outputs: Vec<PathBuf>) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            command: command.to_string(),
            seed: config.run.seed.unwrap_or(DEFAULT_SEED),
            config: config.clone(),
            outputs,
        }
    }
}

/// Reads a TOML config, or the config inside a JSON manifest.
pub fn load(path: &Path) -> Result<FileConfig, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        if let Ok(m) = serde_json::from_str::<RunManifest>(&text) {
            return Ok(m.config);
        }
        return serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())));
    }
    toml::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Output directory: flag or file, then the environment, then `out`.
pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

/// Parses `"3,6,9"`, `"1-8"` or a mix; keeps the order given.
pub fn parse_distances(text: &str) -> Result<Vec<usize>, Failure> {
    let bad = |t: &str| Failure::usage(format!("bad distance list {text:?} at {t:?}"));
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match item.split_once('-') {
            Some((a, b)) => {
                let a: usize = a.trim().parse().map_err(|_| bad(item))?;
                let b: usize = b.trim().parse().map_err(|_| bad(item))?;
                if a > b {
                    return Err(bad(item));
                }
                out.extend(a..=b);
            }
            None => out.push(item.parse().map_err(|_| bad(item))?),
        }
    }
    if out.is_empty() {
        return Err(Failure::usage("empty distance range".into()));
    }
    if out.contains(&0) {
        return Err(Failure::usage("distances start at 1".into()));
    }
    Ok(out)
}

/// Protocol config for a distance: `d = 1` is bare qubits, larger `d`
/// the canonical two-tube lattice.
pub fn config_for_distance(kind: ProtocolKind, d: usize, n: Option<usize>) -> Result<ProtocolConfig, Failure> {
    let base = ProtocolConfig { protocol: kind, n, lattice: None, seed: DEFAULT_SEED, trials: DEFAULT_TRIALS };
    match d {
        0 => Err(Failure::usage("distance must be at least 1".into())),
        1 => {
            let n = n.unwrap_or(match kind {
                ProtocolKind::Trap => 3,
                ProtocolKind::Topological => 1,
            });
            Ok(ProtocolConfig { n: Some(n), ..base })
        }
        d => Ok(ProtocolConfig { lattice: Some(LatticeConfig { distance: Some(d), ..Default::default() }), ..base }),
    }
}

impl FileConfig {
    pub fn protocol_config(&self) -> Result<ProtocolConfig, Failure> {
        let kind = self.protocol.protocol.ok_or_else(|| Failure::usage("no protocol given (use --protocol)".into()))?;
        match (self.protocol.d, &self.lattice) {
            (Some(_), Some(_)) => Err(Failure::usage("give either `d` or a [lattice] table, not both".into())),
            (Some(d), None) => config_for_distance(kind, d, self.protocol.n),
            (None, lattice) => Ok(ProtocolConfig {
                protocol: kind,
                n: self.protocol.n,
                lattice: lattice.clone(),
                seed: DEFAULT_SEED,
                trials: DEFAULT_TRIALS,
            }),
        }
    }

    pub fn setup(&self) -> Result<Setup, Failure> {
        Setup::new(&self.protocol_config()?).map_err(Failure::from)
    }

    /// Fills every run field so the config can be replayed as is.
    pub fn resolve_run(&mut self) {
        let r = &mut self.run;
        r.seed.get_or_insert(DEFAULT_SEED);
        r.trials.get_or_insert(DEFAULT_TRIALS);
        r.jobs.get_or_insert_with(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
        r.output_dir.get_or_insert_with(default_output_dir);
        r.assert_bounds.get_or_insert(false);
        r.crosscheck.get_or_insert(0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_sections() {
        let text = r#"
            [protocol]
            protocol = "trap"
            d = 3

            [adversary]
            kind = "targeted"
            factor = "XZ"

            [run]
            seed = 7
            trials = 500
            assert_bounds = true
        "#;
        let cfg: FileConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.protocol.protocol, Some(ProtocolKind::Trap));
        assert_eq!(cfg.run.trials, Some(500));
        let pc = cfg.protocol_config().unwrap();
        assert_eq!(pc.lattice.unwrap().distance, Some(3));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("[run]\ntrails = 5\n").is_err());
    }

    #[test]
    fn distance_one_is_bare() {
        let pc = config_for_distance(ProtocolKind::Trap, 1, None).unwrap();
        assert_eq!((pc.n, pc.lattice), (Some(3), None));
        let pc = config_for_distance(ProtocolKind::Topological, 1, Some(4)).unwrap();
        assert_eq!(pc.n, Some(4));
        assert!(config_for_distance(ProtocolKind::Trap, 0, None).is_err());
    }

    #[test]
    fn d_and_lattice_conflict() {
        let mut cfg = FileConfig::default();
        cfg.protocol.protocol = Some(ProtocolKind::Topological);
        cfg.protocol.d = Some(3);
        cfg.lattice = Some(LatticeConfig { distance: Some(3), ..Default::default() });
        assert!(cfg.protocol_config().is_err());
    }

    #[test]
    fn distance_lists() {
        assert_eq!(parse_distances("3,6,9").unwrap(), vec![3, 6, 9]);
        assert_eq!(parse_distances("1-4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_distances("2, 5-6").unwrap(), vec![2, 5, 6]);
        assert!(parse_distances("").is_err());
        assert!(parse_distances("4-2").is_err());
        assert!(parse_distances("0").is_err());
        assert!(parse_distances("x").is_err());
    }

    #[test]
    fn manifest_round_trips() {
        let mut cfg = FileConfig::default();
        cfg.protocol.protocol = Some(ProtocolKind::Trap);
        cfg.protocol.n = Some(9);
        cfg.resolve_run();
        let m = RunManifest::new("run", &cfg, vec![PathBuf::from("out/trials.csv")]);
        let text = serde_json::to_string(&m).unwrap();
        let back: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back.config, cfg);
    }
}
