//! Flat `key = value` run configuration.
//!
//! Resolution order is built-in defaults, then the config file, then
//! `--set` overrides. Unknown keys and malformed values are fatal and carry
//! the line number (or override position) they came from.

use std::fmt;
use std::fmt::Write as _;

use pharmonic_core::imaging::ppm::PpmFormat;
use pharmonic_core::{Execution, LinearSolverKind, Preset, SolverConfig};

use crate::error::CliError;

/// Where a setting came from, for diagnostics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    File { path: String, line: usize },
    Override(usize),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::File { path, line } => write!(f, "{path}:{line}"),
            Origin::Override(i) => write!(f, "--set #{}", i + 1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PresetKind {
    Constant,
    SmoothedVortex,
    RandomUnit,
}

impl PresetKind {
    pub fn name(self) -> &'static str {
        match self {
            PresetKind::Constant => "constant",
            PresetKind::SmoothedVortex => "smoothed-vortex",
            PresetKind::RandomUnit => "random-unit",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "constant" => Some(PresetKind::Constant),
            "smoothed-vortex" => Some(PresetKind::SmoothedVortex),
            "random-unit" => Some(PresetKind::RandomUnit),
            _ => None,
        }
    }
}

/// Fully resolved settings of one invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub preset: PresetKind,
    pub components: usize,
    pub seed: u64,
    pub vortex_core: f64,
    /// Write a VTK snapshot every this many steps; 0 keeps only the first and last.
    pub snapshot_every: usize,
    /// Early-stop threshold on `||u_k - u_{k-1}|| / tau` for denoising; 0 disables it.
    pub stationarity_threshold: f64,
    pub ppm_format: PpmFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            nx: 32,
            ny: 32,
            lx: 1.0,
            ly: 1.0,
            preset: PresetKind::SmoothedVortex,
            components: 3,
            seed: 0,
            vortex_core: 0.1,
            snapshot_every: 10,
            stationarity_threshold: 1e-3,
            ppm_format: PpmFormat::Binary,
        }
    }
}

pub const KEYS: [&str; 23] = [
    "p",
    "eps",
    "alpha",
    "delta",
    "lambda",
    "tau",
    "t_final",
    "newton_tol",
    "newton_max_iter",
    "quad_degree_zero_order",
    "linear_solver",
    "execution",
    "nx",
    "ny",
    "lx",
    "ly",
    "preset",
    "components",
    "seed",
    "vortex_core",
    "snapshot_every",
    "stationarity_threshold",
    "ppm_format",
];

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("invalid value {value:?} for {key}"))
}

impl RunConfig {
    pub fn preset(&self) -> Preset {
        match self.preset {
            PresetKind::Constant => Preset::Constant,
            PresetKind::SmoothedVortex => Preset::SmoothedVortex {
                core: self.vortex_core,
            },
            PresetKind::RandomUnit => Preset::RandomUnit { seed: self.seed },
        }
    }

    /// Applies one setting; the error message does not include the origin.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let s = &mut self.solver;
        match key {
            "p" => s.p = num(key, value)?,
            "eps" => s.eps = num(key, value)?,
            "alpha" => s.alpha = num(key, value)?,
            "delta" => s.delta = num(key, value)?,
            "lambda" => s.lambda = num(key, value)?,
            "tau" => s.tau = num(key, value)?,
            "t_final" => s.t_final = num(key, value)?,
            "newton_tol" => s.newton_tol = num(key, value)?,
            "newton_max_iter" => s.newton_max_iter = num(key, value)?,
            "quad_degree_zero_order" => s.quad_degree_zero_order = num(key, value)?,
            "linear_solver" => {
                s.linear_solver = LinearSolverKind::parse(value)
                    .ok_or_else(|| format!("linear_solver must be direct or cg, got {value:?}"))?
            }
            "execution" => {
                s.execution = Execution::parse(value).ok_or_else(|| {
                    format!("execution must be sequential or parallel, got {value:?}")
                })?
            }
            "nx" => self.nx = num(key, value)?,
            "ny" => self.ny = num(key, value)?,
            "lx" => self.lx = num(key, value)?,
            "ly" => self.ly = num(key, value)?,
            "preset" => {
                self.preset = PresetKind::parse(value).ok_or_else(|| {
                    format!(
                        "preset must be constant, smoothed-vortex or random-unit, got {value:?}"
                    )
                })?
            }
            "components" => self.components = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "vortex_core" => self.vortex_core = num(key, value)?,
            "snapshot_every" => self.snapshot_every = num(key, value)?,
            "stationarity_threshold" => self.stationarity_threshold = num(key, value)?,
            "ppm_format" => {
                self.ppm_format = match value {
                    "binary" => PpmFormat::Binary,
                    "ascii" => PpmFormat::Ascii,
                    _ => return Err(format!("ppm_format must be binary or ascii, got {value:?}")),
                }
            }
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Checks value ranges that `SolverConfig::validate` does not cover.
    pub fn validate(&self) -> Result<(), CliError> {
        self.solver
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.nx == 0 || self.ny == 0 {
            return bad("nx and ny must be positive".into());
        }
        if !(self.lx > 0.0 && self.lx.is_finite() && self.ly > 0.0 && self.ly.is_finite()) {
            return bad("lx and ly must be positive".into());
        }
        if self.components < 2 {
            return bad(format!("components must be >= 2 (got {})", self.components));
        }
        if !(self.vortex_core > 0.0 && self.vortex_core.is_finite()) {
            return bad("vortex_core must be positive".into());
        }
        if !(self.stationarity_threshold >= 0.0 && self.stationarity_threshold.is_finite()) {
            return bad("stationarity_threshold must be >= 0".into());
        }
        Ok(())
    }

    /// Value of `key` in the same syntax the parser accepts. Floats use the
    /// shortest representation that round-trips exactly.
    pub fn get(&self, key: &str) -> Option<String> {
        let s = &self.solver;
        Some(match key {
            "p" => format!("{:?}", s.p),
            "eps" => format!("{:?}", s.eps),
            "alpha" => format!("{:?}", s.alpha),
            "delta" => format!("{:?}", s.delta),
            "lambda" => format!("{:?}", s.lambda),
            "tau" => format!("{:?}", s.tau),
            "t_final" => format!("{:?}", s.t_final),
            "newton_tol" => format!("{:?}", s.newton_tol),
            "newton_max_iter" => s.newton_max_iter.to_string(),
            "quad_degree_zero_order" => s.quad_degree_zero_order.to_string(),
            "linear_solver" => s.linear_solver.name().into(),
            "execution" => s.execution.name().into(),
            "nx" => self.nx.to_string(),
            "ny" => self.ny.to_string(),
            "lx" => format!("{:?}", self.lx),
            "ly" => format!("{:?}", self.ly),
            "preset" => self.preset.name().into(),
            "components" => self.components.to_string(),
            "seed" => self.seed.to_string(),
            "vortex_core" => format!("{:?}", self.vortex_core),
            "snapshot_every" => self.snapshot_every.to_string(),
            "stationarity_threshold" => format!("{:?}", self.stationarity_threshold),
            "ppm_format" => match self.ppm_format {
                PpmFormat::Binary => "binary".into(),
                PpmFormat::Ascii => "ascii".into(),
            },
            _ => return None,
        })
    }

    /// The resolved configuration as a config file.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).unwrap());
        }
        out
    }
}

/// Splits config text into `(key, value, line)` entries.
pub fn parse_entries(text: &str, path: &str) -> Result<Vec<(String, String, Origin)>, CliError> {
    let mut entries = Vec::new();
    let mut errors = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let origin = Origin::File {
            path: path.to_string(),
            line: i + 1,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() && !v.trim().is_empty() => {
                entries.push((k.trim().to_string(), v.trim().to_string(), origin))
            }
            _ => errors.push(format!("{origin}: expected `key = value`, got {raw:?}")),
        }
    }
    if errors.is_empty() {
        Ok(entries)
    } else {
        Err(CliError::Config(errors.join("\n")))
    }
}

/// Parses one `--set key=value` argument.
pub fn parse_override(arg: &str, index: usize) -> Result<(String, String, Origin), CliError> {
    match arg.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((
            k.trim().to_string(),
            v.trim().to_string(),
            Origin::Override(index),
        )),
        _ => Err(CliError::Config(format!(
            "--set expects key=value, got {arg:?}"
        ))),
    }
}

/// Applies entries on top of the defaults, collecting every bad line before failing.
pub fn resolve(
    file_entries: &[(String, String, Origin)],
    overrides: &[(String, String, Origin)],
) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    let mut errors = Vec::new();
    for (key, value, origin) in file_entries.iter().chain(overrides) {
        if let Err(msg) = cfg.set(key, value) {
            errors.push(format!("{origin}: {msg}"));
        }
    }
    if !errors.is_empty() {
        return Err(CliError::Config(errors.join("\n")));
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!(c.solver.p, 1.0);
        assert_eq!(c.solver.eps, 1e-2);
        assert_eq!(c.solver.delta, 1e-3);
        assert_eq!((c.nx, c.ny), (32, 32));
        assert_eq!(c.solver.newton_tol, 1e-10);
    }

    #[test]
    fn comments_blank_lines_and_whitespace() {
        let text = "# header\n\n  p = 2   # inline\nlambda=0.5\n";
        let e = parse_entries(text, "c.conf").unwrap();
        assert_eq!(e.len(), 2);
        let cfg = resolve(&e, &[]).unwrap();
        assert_eq!(cfg.solver.p, 2.0);
        assert_eq!(cfg.solver.lambda, 0.5);
    }

    #[test]
    fn unknown_key_names_key_and_line() {
        let e = parse_entries("p = 2\nlamda = 1\n", "c.conf").unwrap();
        let msg = resolve(&e, &[]).unwrap_err().to_string();
        assert!(msg.contains("\"lamda\""), "{msg}");
        assert!(msg.contains("c.conf:2"), "{msg}");
    }

    #[test]
    fn malformed_lines_are_all_reported() {
        let msg = parse_entries("p 2\nq =\n", "x").unwrap_err().to_string();
        assert!(msg.contains("x:1") && msg.contains("x:2"), "{msg}");
    }

    #[test]
    fn overrides_beat_file_values() {
        let file = parse_entries("p = 2\ndelta = 0.1\n", "f").unwrap();
        let over = vec![parse_override("p=3", 0).unwrap()];
        let cfg = resolve(&file, &over).unwrap();
        assert_eq!(cfg.solver.p, 3.0);
        assert_eq!(cfg.solver.delta, 0.1);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for (k, v) in [
            ("p", "0.5"),
            ("nx", "-1"),
            ("preset", "spiral"),
            ("quad_degree_zero_order", "3"),
        ] {
            let over = vec![parse_override(&format!("{k}={v}"), 0).unwrap()];
            assert!(
                matches!(resolve(&[], &over), Err(CliError::Config(_))),
                "{k}={v}"
            );
        }
    }

    #[test]
    fn resolved_text_round_trips() {
        let over = vec![
            parse_override("delta=0.0003", 0).unwrap(),
            parse_override("tau=0.1", 1).unwrap(),
            parse_override("preset=random-unit", 2).unwrap(),
            parse_override("linear_solver=cg", 3).unwrap(),
        ];
        let cfg = resolve(&[], &over).unwrap();
        let again = resolve(&parse_entries(&cfg.to_config_text(), "r").unwrap(), &[]).unwrap();
        assert_eq!(cfg, again);
    }
}
