//! The four subcommands. Each returns the process exit status; errors
//! carry their own status (see [`CliError::exit_code`]).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use dualflow_core::constants::{ConstantsGrid, ConstantsTable};
use dualflow_core::logflow::{onofri_limit_quotient, onofri_limit_value, OnofriInput};
use dualflow_core::profiles::bump;
use dualflow_core::radial::{io, RadialField};
use dualflow_core::report::{CheckReport, Verdict};
use dualflow_core::suite::{
    ccl_identity_check, check_registry, explicit_gap_terms, find_flow, flow_grid, initial_datum, run_suite,
    Perturbation, SuiteConfig, SuiteContext,
};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, SweepAxis};
use crate::error::{CliError, Result};
use crate::output::{write_atomic, write_json};

/// Center of the bump perturbing the optimizer in the epsilon sweep.
pub const SWEEP_R0: f64 = 1.0;

/// Counts of each verdict.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub pass: usize,
    pub fail: usize,
    pub diagnostic: usize,
    pub skipped: usize,
}

impl Tally {
    pub fn of(reports: &[CheckReport]) -> Self {
        let mut t = Self::default();
        for r in reports {
            match r.verdict {
                Verdict::Pass => t.pass += 1,
                Verdict::Fail => t.fail += 1,
                Verdict::Diagnostic => t.diagnostic += 1,
                Verdict::Skipped => t.skipped += 1,
            }
        }
        t
    }
}

/// The document written by `verify`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: RunConfig,
    pub tally: Tally,
    pub reports: Vec<CheckReport>,
}

/// The document written by `run-flow`.
#[derive(Debug, Clone, Serialize)]
pub struct FlowSummaryDoc<'a> {
    pub config: &'a RunConfig,
    pub flow: &'a str,
    #[serde(with = "dualflow_core::report::nonfinite::map")]
    pub values: BTreeMap<String, f64>,
    pub reports: Vec<CheckReport>,
}

#[derive(Serialize)]
struct Diagnostics<'a> {
    config: &'a RunConfig,
    error: String,
}

pub fn dispatch(cfg: &RunConfig) -> Result<i32> {
    use crate::config::Command::*;
    match cfg.command {
        RunFlow => cmd_run_flow(cfg),
        Verify => cmd_verify(cfg),
        Sweep => cmd_sweep(cfg),
        Report => cmd_report(cfg),
    }
}

/// Runs the configured flow and writes `trace.csv`, any extra CSV,
/// `fields/field_NNNN.txt` snapshots, `summary.json` and `config.json`
/// into the output directory. A failed run writes `diagnostics.json`.
pub fn cmd_run_flow(cfg: &RunConfig) -> Result<i32> {
    let suite = cfg.suite();
    let flow = find_flow(&cfg.flow)?;
    let constants = ConstantsTable::default();
    write_json(&cfg.out.join("config.json"), cfg)?;
    let run = || -> dualflow_core::Result<_> {
        let grid = flow_grid(flow.as_ref(), &suite)?;
        let v0 = initial_datum(flow.as_ref(), &suite, &grid)?;
        let output = flow.run(&v0, &suite, &constants)?;
        let summary = flow.summarize(&output, &suite, &constants)?;
        Ok((output, summary))
    };
    let (output, summary) = match run() {
        Ok(x) => x,
        Err(e) => {
            write_json(&cfg.out.join("diagnostics.json"), &Diagnostics { config: cfg, error: e.to_string() })?;
            return Err(e.into());
        }
    };
    write_atomic(&cfg.out.join("trace.csv"), &output.trace_csv())?;
    for (stem, csv) in output.extra_csv() {
        write_atomic(&cfg.out.join(format!("{stem}.csv")), &csv)?;
    }
    for (k, (t, field)) in output.fields()?.iter().enumerate() {
        let path = cfg.out.join("fields").join(format!("field_{k:04}.txt"));
        info!("snapshot {k} at t = {t:e}");
        write_atomic(&path, &io::field_to_string(field))?;
    }
    for r in summary.reports.iter().filter(|r| !r.passed()) {
        warn!("{}: residual {:e} above tolerance {:e}", r.name, r.residual, r.tolerance);
    }
    let doc = FlowSummaryDoc { config: cfg, flow: flow.name(), values: summary.values, reports: summary.reports };
    write_json(&cfg.out.join("summary.json"), &doc)?;
    for (k, v) in &doc.values {
        println!("{k} = {v:.10e}");
    }
    Ok(0)
}

/// Runs the suite and writes `report.json`; exits 1 iff a graded check
/// failed.
pub fn cmd_verify(cfg: &RunConfig) -> Result<i32> {
    let report = verify_report(cfg)?;
    write_json(&cfg.out.join("report.json"), &report)?;
    print_reports(&report.reports);
    Ok(i32::from(report.tally.fail > 0))
}

/// The suite's reports for `cfg`, without writing anything.
pub fn verify_report(cfg: &RunConfig) -> Result<SuiteReport> {
    let ctx = SuiteContext::new(cfg.suite(), Arc::new(ConstantsTable::default()));
    let reports = run_suite(&ctx, &check_registry(), cfg.checks.as_deref())
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(SuiteReport { config: cfg.clone(), tally: Tally::of(&reports), reports })
}

fn print_reports(reports: &[CheckReport]) {
    for r in reports {
        let verdict = match r.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Diagnostic => "DIAG",
            Verdict::Skipped => "SKIP",
        };
        let mut line = format!("{verdict} {:<60}", r.name);
        if matches!(r.verdict, Verdict::Pass | Verdict::Fail) {
            let _ = write!(line, " residual {:.3e} tol {:.1e}", r.residual, r.tolerance);
        }
        if let Some(note) = r.notes.iter().find(|n| n.starts_with("failed") || n.starts_with("error") || n.starts_with("skipped")) {
            let _ = write!(line, "  ({note})");
        }
        println!("{line}");
    }
    let t = Tally::of(reports);
    println!("{} passed, {} failed, {} diagnostic, {} skipped", t.pass, t.fail, t.diagnostic, t.skipped);
}

fn csv_row(values: &[f64]) -> String {
    let cells: Vec<String> = values.iter().map(|v| format!("{v:.16e}")).collect();
    cells.join(",") + "\n"
}

/// One row per sweep point, written to `sweep_<axis>.csv`.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<i32> {
    let axis = cfg.axis.ok_or_else(|| CliError::Usage("sweep needs --axis".into()))?;
    let csv = sweep_csv(cfg, axis)?;
    let name = match axis {
        SweepAxis::P => "p",
        SweepAxis::Epsilon => "epsilon",
        SweepAxis::N => "n",
        SweepAxis::Dt => "dt",
    };
    write_json(&cfg.out.join("config.json"), cfg)?;
    write_atomic(&cfg.out.join(format!("sweep_{name}.csv")), &csv)?;
    print!("{csv}");
    Ok(0)
}

pub fn sweep_csv(cfg: &RunConfig, axis: SweepAxis) -> Result<String> {
    let values = cfg.sweep_values();
    let suite = cfg.suite();
    let constants = ConstantsTable::default();
    let mut out = String::new();
    match axis {
        SweepAxis::P => {
            let grid = constants.grid().build(2)?;
            let g = OnofriInput::new(RadialField::from_fn(grid, |r| bump(r, 1.0))?)?.centered()?;
            let limit = onofri_limit_value(&g)?;
            out.push_str("p,quotient,limit,abs_error\n");
            for &p in &values {
                let q = onofri_limit_quotient(&g, p)?;
                out.push_str(&csv_row(&[p, q, limit, (q - limit).abs()]));
            }
        }
        SweepAxis::Epsilon => {
            let s = constants.sobolev(cfg.d)?;
            let grid = constants.grid().build(cfg.d)?;
            out.push_str("epsilon,lhs,sobolev_deficit,norm_power,rhs,ratio,constant\n");
            for &eps in &values {
                let w = Perturbation { eps, r0: SWEEP_R0 }.field(&grid)?;
                let t = explicit_gap_terms(&w, s, cfg.tolerances.get("explicit_gap"))?;
                let ratio = t.ratio.unwrap_or(f64::NAN);
                out.push_str(&csv_row(&[eps, t.lhs, t.sobolev_deficit, t.norm_power, t.rhs, ratio, t.constant]));
            }
        }
        SweepAxis::N => {
            out.push_str("n,residual\n");
            for &n in &values {
                if !(n >= 2.0 && n.fract() == 0.0) {
                    return Err(CliError::Usage(format!("grid sizes must be integers >= 2, got {n}")));
                }
                let table = ConstantsTable::new(ConstantsGrid { n: n as usize, ..ConstantsGrid::default() });
                let r = ccl_identity_check(cfg.d, &table, cfg.tolerances.get("constant_identity"))?;
                out.push_str(&csv_row(&[n, r.residual]));
            }
        }
        SweepAxis::Dt => {
            let flow = find_flow(&cfg.flow)?;
            let grid = flow_grid(flow.as_ref(), &suite)?;
            let v0 = initial_datum(flow.as_ref(), &suite, &grid)?;
            let mut header: Option<Vec<String>> = None;
            for &eta in &values {
                let point = SuiteConfig { eta, ..suite.clone() };
                point.validate().map_err(|e| CliError::Usage(e.to_string()))?;
                let output = flow.run(&v0, &point, &constants)?;
                let summary = flow.summarize(&output, &point, &constants)?;
                let mut names = vec!["eta".to_string()];
                let mut row = vec![eta];
                for (k, v) in &summary.values {
                    names.push(k.clone());
                    row.push(*v);
                }
                for r in &summary.reports {
                    names.push(format!("{}_residual", r.name));
                    row.push(r.residual);
                }
                match &header {
                    None => {
                        out.push_str(&(names.join(",") + "\n"));
                        header = Some(names);
                    }
                    Some(h) if *h != names => {
                        return Err(CliError::Core(dualflow_core::Error::Domain(format!(
                            "sweep point eta = {eta} produced columns {names:?}, expected {h:?}"
                        ))))
                    }
                    Some(_) => {}
                }
                out.push_str(&csv_row(&row));
            }
        }
    }
    Ok(out)
}

/// Prints a report written by `verify`; exits 1 iff it records a failure.
pub fn cmd_report(cfg: &RunConfig) -> Result<i32> {
    let path: PathBuf = cfg.input.clone().unwrap_or_else(|| cfg.out.join("report.json"));
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let report: SuiteReport = serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.clone(), source })?;
    println!(
        "report {} (d = {}, n = {}, seed = {})",
        path.display(),
        report.config.d,
        report.config.n,
        report.config.seed
    );
    print_reports(&report.reports);
    Ok(i32::from(Tally::of(&report.reports).fail > 0))
}
