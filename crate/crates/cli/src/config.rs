//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Experiment {
    NormsSuite,
    MildDecay,
    CknLedger,
    PressureSplit,
    Smallness,
    Concentration,
    BesovDecay,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::NormsSuite,
        Experiment::MildDecay,
        Experiment::CknLedger,
        Experiment::PressureSplit,
        Experiment::Smallness,
        Experiment::Concentration,
        Experiment::BesovDecay,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::NormsSuite => "norms-suite",
            Experiment::MildDecay => "mild-decay",
            Experiment::CknLedger => "ckn-ledger",
            Experiment::PressureSplit => "pressure-split",
            Experiment::Smallness => "smallness",
            Experiment::Concentration => "concentration",
            Experiment::BesovDecay => "besov-decay",
        }
    }

    /// Grid size used when the config has no `n`: the pressure identity
    /// needs the unit ball resolved, the support split needs n = 64.
    pub fn default_n(self) -> usize {
        match self {
            Experiment::PressureSplit => 128,
            Experiment::Smallness => 64,
            _ => 32,
        }
    }

    /// Keys accepted besides the common ones.
    fn keys(self) -> &'static [&'static str] {
        match self {
            Experiment::NormsSuite => &["corpus_size", "radius"],
            Experiment::MildDecay => &["dt", "horizon", "picard_tol", "smallness"],
            Experiment::CknLedger => {
                &["dt", "horizon", "stride", "viscosity", "center", "t", "k_min", "k_max", "delta", "eps_star"]
            }
            Experiment::PressureSplit => &["r_flat", "r_out", "tolerance"],
            Experiment::Smallness => {
                &["dt", "horizon", "stride", "eps_star", "energy_budget", "gamma_gate", "m_bound", "beta", "sup_threshold"]
            }
            Experiment::Concentration => &[
                "dt", "horizon", "stride", "viscosity", "t_star", "s_star", "center", "gamma", "sup_threshold", "zoom",
                "type1_bound", "r0",
            ],
            Experiment::BesovDecay => &["dt", "horizon", "stride", "p", "beta", "n_scale", "gate", "ball_radius"],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| CliError::Usage(format!("unknown experiment `{s}`")))
    }
}

const COMMON: [&str; 7] = ["experiment", "n", "length", "data", "amplitude", "modes", "out"];

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub experiment: Experiment,
    entries: BTreeMap<String, String>,
}

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_entries(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("line {}: expected key = value, got `{line}`", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(CliError::Usage(format!("line {}: empty key or value", i + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(CliError::Usage(format!("line {}: duplicate key `{k}`", i + 1)));
        }
    }
    Ok(out)
}

impl Config {
    /// Builds a configuration, resolving the experiment from the subcommand
    /// or the `experiment` key, and rejecting keys it does not use.
    pub fn new(entries: BTreeMap<String, String>, from_command: Option<Experiment>) -> Result<Self, CliError> {
        let from_key = entries.get("experiment").map(|s| s.parse::<Experiment>()).transpose()?;
        let experiment = match (from_command, from_key) {
            (Some(a), Some(b)) if a != b => {
                return Err(CliError::Usage(format!("config names experiment `{b}` but `{a}` was requested")))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(CliError::Usage("no experiment given in the command or the config".into())),
        };
        let allowed = experiment.keys();
        let unknown: Vec<&str> =
            entries.keys().map(String::as_str).filter(|k| !COMMON.contains(k) && !allowed.contains(k)).collect();
        if !unknown.is_empty() {
            return Err(CliError::Usage(format!("unknown keys for {experiment}: {}", unknown.join(", "))));
        }
        let cfg = Self { experiment, entries };
        cfg.validate_common()?;
        Ok(cfg)
    }

    fn validate_common(&self) -> Result<(), CliError> {
        let n = self.n()?;
        if !(8..=256).contains(&n) || n % 2 != 0 {
            return Err(CliError::Usage(format!("n = {n} must be even and in 8..=256")));
        }
        let length: f64 = self.get("length", 8.0)?;
        if !(length >= 8.0 && length.is_finite()) {
            return Err(CliError::Usage(format!("length = {length} must be at least 8")));
        }
        let data = self.data()?;
        if data == "random" && self.experiment != Experiment::NormsSuite {
            return Err(CliError::Usage("random data is only available to norms-suite".into()));
        }
        let amp: f64 = self.get("amplitude", 0.2)?;
        let modes: u32 = self.get("modes", 1)?;
        if !amp.is_finite() || modes == 0 {
            return Err(CliError::Usage("amplitude must be finite and modes positive".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> Result<usize, CliError> {
        self.get("n", self.experiment.default_n())
    }

    pub fn data(&self) -> Result<String, CliError> {
        let d: String = self.get("data", "taylor-green".to_string())?;
        match d.as_str() {
            "taylor-green" | "zero" | "random" => Ok(d),
            _ => Err(CliError::Usage(format!("data = {d}: expected taylor-green, zero or random"))),
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Typed value of `key`, or `default` when absent.
    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| CliError::Usage(format!("cannot parse {key} = `{v}`"))),
        }
    }

    /// Three comma-separated numbers.
    pub fn point(&self, key: &str, default: [f64; 3]) -> Result<[f64; 3], CliError> {
        let Some(v) = self.entries.get(key) else { return Ok(default) };
        let parts: Vec<f64> = v
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Usage(format!("cannot parse {key} = `{v}` as x,y,z")))?;
        <[f64; 3]>::try_from(parts).map_err(|_| CliError::Usage(format!("{key} needs exactly three components")))
    }

    /// Normalized text (sorted keys, resolved experiment) used for hashing.
    pub fn canonical(&self) -> String {
        let mut s = format!("experiment={}\n", self.experiment);
        for (k, v) in &self.entries {
            if k != "experiment" && k != "out" {
                s.push_str(&format!("{k}={v}\n"));
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_rejects_garbage() {
        let e = parse_entries("# header\nn = 16\n\nlength=8 # box\n").unwrap();
        assert_eq!(e.get("n").map(String::as_str), Some("16"));
        assert_eq!(e.get("length").map(String::as_str), Some("8"));
        assert!(parse_entries("n 16").is_err());
        assert!(parse_entries("n = 16\nn = 8").is_err());
        assert!(parse_entries("n =").is_err());
    }

    #[test]
    fn experiment_resolution_and_unknown_keys() {
        let e = parse_entries("experiment = ckn-ledger\nk_max = 4").unwrap();
        assert_eq!(Config::new(e.clone(), None).unwrap().experiment, Experiment::CknLedger);
        assert!(Config::new(e.clone(), Some(Experiment::Smallness)).is_err());
        assert!(Config::new(parse_entries("k_max = 4").unwrap(), Some(Experiment::Smallness)).is_err());
        assert!(Config::new(parse_entries("n = 16").unwrap(), None).is_err());
        assert!(Config::new(parse_entries("n = 15").unwrap(), Some(Experiment::NormsSuite)).is_err());
        assert!(Config::new(parse_entries("data = random").unwrap(), Some(Experiment::MildDecay)).is_err());
    }

    #[test]
    fn canonical_text_ignores_order_and_output() {
        let a = Config::new(parse_entries("n = 16\nlength = 8\nout = a").unwrap(), Some(Experiment::NormsSuite)).unwrap();
        let b = Config::new(parse_entries("length = 8\nn = 16\nout = b").unwrap(), Some(Experiment::NormsSuite)).unwrap();
        assert_eq!(a.canonical(), b.canonical());
        assert_eq!(a.point("center", [1.0, 2.0, 3.0]).unwrap(), [1.0, 2.0, 3.0]);
    }
}
