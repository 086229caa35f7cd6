//! Command-line flags, the JSON config file, and the effective
//! configuration built from both.
//!
//! Precedence is flags over config file over defaults. Tolerances are set
//! with `--tol.<name> <value>`, which clap cannot express, so those pairs
//! are taken out of the argument list before parsing.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dualflow_core::profiles::ProfileSpec;
use dualflow_core::radial::Spacing;
use dualflow_core::suite::{find_flow, SuiteConfig, Tolerances};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    RunFlow,
    Verify,
    Sweep,
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    /// Onofri limit quotient against the exponent p (d = 2).
    P,
    /// Explicit gap terms against the perturbation amplitude (d >= 5).
    Epsilon,
    /// Constant identity residual against the grid size.
    N,
    /// Flow checks against the per-step change target eta.
    Dt,
}

impl SweepAxis {
    pub fn default_values(self) -> Vec<f64> {
        match self {
            Self::P => vec![16.0, 64.0, 256.0],
            Self::Epsilon => vec![-0.3, 0.1, 0.3, 1.0, 3.0],
            Self::N => vec![512.0, 1024.0, 2048.0, 4096.0],
            Self::Dt => vec![0.02, 0.01, 0.005],
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dualflow", version, about = "Radial fast-diffusion flows and checks of the inequalities they connect")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Run one flow and write its trace, snapshots and summary.
    RunFlow(CommonArgs),
    /// Run the check suite for the configured dimension.
    Verify(VerifyArgs),
    /// Evaluate one quantity along a parameter axis.
    Sweep(SweepArgs),
    /// Summarize a report written by `verify`.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON file with any of the configuration fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub d: Option<usize>,
    /// fd, fd-ccl or log; defaults to log for d = 2 and fd otherwise.
    #[arg(long)]
    pub flow: Option<String>,
    /// Initial datum as `kind:key=value,...`, e.g. `separated:T=1`, or
    /// `custom_tabulated:path=field.txt`.
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "rmax")]
    pub r_max: Option<f64>,
    /// uniform or log-stretched.
    #[arg(long)]
    pub spacing: Option<String>,
    #[arg(long)]
    pub dt0: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long = "eps-ext")]
    pub eps_ext: Option<f64>,
    #[arg(long = "max-steps")]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "gap-n")]
    pub gap_n: Option<usize>,
    #[arg(long = "family-extra")]
    pub family_extra: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Run only the named checks (repeatable).
    #[arg(long = "check")]
    pub checks: Vec<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub axis: Option<SweepAxis>,
    /// Comma-separated sweep points; each axis has defaults.
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ReportArgs {
    /// Report JSON; defaults to `<out>/report.json`.
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// The configuration file: every field optional, unknown fields rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub command: Option<Command>,
    pub d: Option<usize>,
    pub flow: Option<String>,
    pub profile: Option<ProfileSpec>,
    pub n: Option<usize>,
    pub r_max: Option<f64>,
    pub spacing: Option<Spacing>,
    pub dt0: Option<f64>,
    pub eta: Option<f64>,
    pub eps_ext: Option<f64>,
    pub max_steps: Option<usize>,
    pub tolerances: Option<BTreeMap<String, f64>>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub gap_n: Option<usize>,
    pub family_extra: Option<usize>,
    pub checks: Option<Vec<String>>,
    pub axis: Option<SweepAxis>,
    pub values: Option<Vec<f64>>,
    pub input: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|source| CliError::Config { path: path.to_path_buf(), source })
    }
}

/// The effective configuration, echoed into every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub d: usize,
    pub flow: String,
    pub profile: Option<ProfileSpec>,
    pub n: usize,
    pub r_max: Option<f64>,
    pub spacing: Spacing,
    pub dt0: f64,
    pub eta: f64,
    pub eps_ext: f64,
    pub max_steps: usize,
    pub tolerances: Tolerances,
    pub out: PathBuf,
    pub seed: u64,
    pub gap_n: usize,
    pub family_extra: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<SweepAxis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
}

pub fn default_flow(d: usize) -> &'static str {
    if d == 2 {
        "log"
    } else {
        "fd"
    }
}

impl RunConfig {
    /// Defaults for `command`, before any file or flag is applied.
    pub fn defaults(command: Command) -> Self {
        let s = SuiteConfig::default();
        Self {
            command,
            d: s.d,
            flow: default_flow(s.d).to_string(),
            profile: None,
            n: s.n,
            r_max: s.r_max,
            spacing: s.spacing,
            dt0: s.dt0,
            eta: s.eta,
            eps_ext: s.eps_ext,
            max_steps: s.max_steps,
            tolerances: s.tolerances,
            out: PathBuf::from("out"),
            seed: s.seed,
            gap_n: s.gap_n,
            family_extra: s.family_extra,
            checks: None,
            axis: None,
            values: None,
            input: None,
        }
    }

    /// Builds the effective configuration from parsed flags, the config
    /// file they name, and `--tol.<name>` overrides.
    pub fn resolve(sub: &Sub, tol_flags: &[(String, f64)]) -> Result<Self> {
        let (command, common) = match sub {
            Sub::RunFlow(c) => (Command::RunFlow, c),
            Sub::Verify(v) => (Command::Verify, &v.common),
            Sub::Sweep(s) => (Command::Sweep, &s.common),
            Sub::Report(r) => (Command::Report, &r.common),
        };
        let file = match &common.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        if let Some(c) = file.command {
            if c != command {
                return Err(CliError::Usage(format!(
                    "config file is for command {c:?}, but {command:?} was invoked"
                )));
            }
        }
        let mut cfg = Self::defaults(command);
        let mut flow_given = false;

        // Config file.
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = file.$f.clone() { cfg.$f = v; } )* };
        }
        take!(d, n, spacing, dt0, eta, eps_ext, max_steps, out, seed, gap_n, family_extra);
        if file.r_max.is_some() {
            cfg.r_max = file.r_max;
        }
        if let Some(f) = file.flow.clone() {
            cfg.flow = f;
            flow_given = true;
        }
        cfg.profile = file.profile.clone();
        cfg.checks = file.checks.clone();
        cfg.axis = file.axis;
        cfg.values = file.values.clone();
        cfg.input = file.input.clone();
        if let Some(tols) = &file.tolerances {
            for (k, v) in tols {
                cfg.tolerances.set(k, *v).map_err(|e| CliError::Usage(e.to_string()))?;
            }
        }

        // Flags.
        macro_rules! flag {
            ($($f:ident),*) => { $( if let Some(v) = common.$f.clone() { cfg.$f = v; } )* };
        }
        flag!(d, n, dt0, eta, eps_ext, max_steps, out, seed, gap_n, family_extra);
        if common.r_max.is_some() {
            cfg.r_max = common.r_max;
        }
        if let Some(s) = &common.spacing {
            cfg.spacing = s.parse().map_err(|e: dualflow_core::Error| CliError::Usage(e.to_string()))?;
        }
        if let Some(f) = &common.flow {
            cfg.flow = f.clone();
            flow_given = true;
        }
        if let Some(p) = &common.profile {
            cfg.profile = Some(p.parse().map_err(|e: dualflow_core::Error| CliError::Usage(e.to_string()))?);
        }
        match sub {
            Sub::Verify(v) if !v.checks.is_empty() => cfg.checks = Some(v.checks.clone()),
            Sub::Sweep(s) => {
                if s.axis.is_some() {
                    cfg.axis = s.axis;
                }
                if !s.values.is_empty() {
                    cfg.values = Some(s.values.clone());
                }
            }
            Sub::Report(r) if r.input.is_some() => cfg.input = r.input.clone(),
            _ => {}
        }
        for (k, v) in tol_flags {
            cfg.tolerances.set(k, *v).map_err(|e| CliError::Usage(e.to_string()))?;
        }
        if !flow_given {
            cfg.flow = default_flow(cfg.d).to_string();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |e: dualflow_core::Error| CliError::Usage(e.to_string());
        self.suite().validate().map_err(usage)?;
        let flow = find_flow(&self.flow).map_err(usage)?;
        flow.validate(self.d).map_err(usage)?;
        if let Some(p) = &self.profile {
            p.validate(self.d).map_err(usage)?;
        }
        if self.command == Command::Sweep {
            let axis = self.axis.ok_or_else(|| CliError::Usage("sweep needs --axis (p, epsilon, n or dt)".into()))?;
            match axis {
                SweepAxis::P if self.d != 2 => {
                    return Err(CliError::Usage(format!("the p sweep is two-dimensional: needs d = 2, got d = {}", self.d)))
                }
                SweepAxis::Epsilon if self.d < 5 => {
                    return Err(CliError::Usage(format!("the epsilon sweep needs d >= 5, got d = {}", self.d)))
                }
                _ => {}
            }
            if self.sweep_values().iter().any(|v| !v.is_finite()) {
                return Err(CliError::Usage("sweep values must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn sweep_values(&self) -> Vec<f64> {
        match (&self.values, self.axis) {
            (Some(v), _) => v.clone(),
            (None, Some(axis)) => axis.default_values(),
            (None, None) => Vec::new(),
        }
    }

    pub fn suite(&self) -> SuiteConfig {
        SuiteConfig {
            d: self.d,
            n: self.n,
            r_max: self.r_max,
            spacing: self.spacing,
            dt0: self.dt0,
            eta: self.eta,
            eps_ext: self.eps_ext,
            max_steps: self.max_steps,
            seed: self.seed,
            gap_n: self.gap_n,
            family_extra: self.family_extra,
            profile: self.profile.clone(),
            tolerances: self.tolerances.clone(),
        }
    }
}

/// Removes `--tol.<name> <value>` and `--tol.<name>=<value>` from `args`.
pub fn split_tolerance_flags(args: Vec<String>) -> Result<(Vec<String>, Vec<(String, f64)>)> {
    let mut rest = Vec::with_capacity(args.len());
    let mut tols = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(spec) = arg.strip_prefix("--tol.") else {
            rest.push(arg);
            continue;
        };
        let (name, value) = match spec.split_once('=') {
            Some((n, v)) => (n.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| CliError::Usage(format!("--tol.{spec} needs a value")))?;
                (spec.to_string(), v)
            }
        };
        if name.is_empty() {
            return Err(CliError::Usage("--tol. needs a check name".into()));
        }
        let value: f64 =
            value.parse().map_err(|_| CliError::Usage(format!("--tol.{name}: '{value}' is not a number")))?;
        tols.push((name, value));
    }
    Ok((rest, tols))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn resolve(line: &str) -> Result<RunConfig> {
        let (rest, tols) = split_tolerance_flags(args(line))?;
        let cli = Cli::try_parse_from(rest).map_err(|e| CliError::Usage(e.to_string()))?;
        RunConfig::resolve(&cli.command, &tols)
    }

    #[test]
    fn tolerance_flags_are_extracted() {
        let (rest, tols) = split_tolerance_flags(args("dualflow verify --tol.kappa 1e-2 --d 5 --tol.lemma=0")).unwrap();
        assert_eq!(rest, args("dualflow verify --d 5"));
        assert_eq!(tols, vec![("kappa".to_string(), 1e-2), ("lemma".to_string(), 0.0)]);
        assert!(split_tolerance_flags(args("x --tol.kappa")).is_err());
        assert!(split_tolerance_flags(args("x --tol.kappa abc")).is_err());
    }

    #[test]
    fn flow_defaults_follow_the_dimension() {
        assert_eq!(resolve("dualflow verify --d 2").unwrap().flow, "log");
        assert_eq!(resolve("dualflow verify --d 3").unwrap().flow, "fd");
        assert_eq!(resolve("dualflow run-flow --flow log --d 3").unwrap_err().exit_code(), 2);
        assert_eq!(resolve("dualflow run-flow --flow fd --d 2").unwrap_err().exit_code(), 2);
        assert_eq!(resolve("dualflow verify --tol.nonsense 1").unwrap_err().exit_code(), 2);
        assert_eq!(resolve("dualflow sweep --axis epsilon --d 4").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn flags_override_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"d": 6, "n": 256, "seed": 9, "tolerances": {"kappa": 0.5}}"#).unwrap();
        let cfg = resolve(&format!("dualflow verify --config {} --n 128 --tol.kappa 0.25", path.display())).unwrap();
        assert_eq!((cfg.d, cfg.n, cfg.seed), (6, 128, 9));
        assert_eq!(cfg.tolerances.get("kappa"), 0.25);
        assert_eq!(cfg.tolerances.get("lemma"), 1e-8);

        fs::write(&path, r#"{"dimension": 6}"#).unwrap();
        let err = resolve(&format!("dualflow verify --config {}", path.display())).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
