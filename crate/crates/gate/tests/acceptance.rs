//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
//! fails. Runs the suite through the same entry points as `verify` and
//! grades the reported quantities at the stated tolerances.

use std::fmt::Write as _;
use std::fs;
use std::time::{Duration, Instant};

use dualflow_cli::{cmd_verify, verify_report, Command, RunConfig};
use dualflow_core::constants::ConstantsTable;
use dualflow_core::flow::{run_flow, second_derivative_check, FlowParams, SobolevConstant};
use dualflow_core::logflow::{h2_derivative_check, run_log_flow, LogFlowParams, MassOneDensity};
use dualflow_core::profiles::sobolev_flow_exponent;
use dualflow_core::radial::make_grid;
use dualflow_core::report::{CheckReport, Verdict};
use dualflow_core::suite::{ccl_identity_check, hls_power, SuiteConfig, FLOW_DATA, LOG_FLOW_DATA, T_END};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        let detail = detail.into();
        Self { pass, detail: detail.trim_end_matches("; ").to_string() }
    }
}

/// Reports keyed by `name` or `name[label]`.
struct Suite {
    reports: Vec<CheckReport>,
    elapsed: Duration,
}

impl Suite {
    fn run(d: usize, checks: Option<&[&str]>) -> Self {
        let mut cfg = RunConfig::defaults(Command::Verify);
        cfg.d = d;
        cfg.flow = dualflow_cli::default_flow(d).to_string();
        cfg.checks = checks.map(|c| c.iter().map(|s| s.to_string()).collect());
        let start = Instant::now();
        let report = verify_report(&cfg).expect("suite runs");
        Self { reports: report.reports, elapsed: start.elapsed() }
    }

    fn named(&self, name: &str) -> Vec<&CheckReport> {
        let prefix = format!("{name}[");
        self.reports.iter().filter(|r| r.name == name || r.name.starts_with(&prefix)).collect()
    }

    fn q(r: &CheckReport, key: &str) -> f64 {
        *r.quantities.get(key).unwrap_or_else(|| panic!("{} has no quantity {key}", r.name))
    }
}

fn all_pass(reports: &[&CheckReport]) -> bool {
    !reports.is_empty() && reports.iter().all(|r| r.verdict == Verdict::Pass)
}

fn failures(reports: &[&CheckReport]) -> String {
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| r.verdict != Verdict::Pass)
        .map(|r| format!("{} ({:?}, residual {:.2e})", r.name, r.verdict, r.residual))
        .collect();
    if failed.is_empty() {
        String::new()
    } else {
        format!("; not passing: {}", failed.join(", "))
    }
}

fn c01_optimizer_residual(s3: &Suite, s5: &Suite) -> Outcome {
    let mut pass = true;
    let mut detail = String::new();
    for (d, s) in [(3, s3), (5, s5)] {
        let r = s.named("optimizer_residual")[0];
        let res = Suite::q(r, "residual_n2048");
        let order = Suite::q(r, "observed_order");
        pass &= res <= 1e-4 && order > 1.8;
        let _ = write!(detail, "d={d}: residual {res:.2e}, order {order:.2}; ");
    }
    Outcome::new(pass, detail)
}

fn c02_constant_identities() -> Outcome {
    let start = Instant::now();
    let table = ConstantsTable::default();
    let mut pass = true;
    let mut detail = String::new();
    for d in 2..=5 {
        let r = ccl_identity_check(d, &table, 1e-5).expect("identity computes");
        pass &= r.passed();
        let _ = write!(detail, "d={d}: {:.2e}; ", r.residual);
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(10);
    Outcome::new(pass, format!("{detail}{:.2} s", elapsed.as_secs_f64()))
}

fn c03_closed_forms(s2: &Suite) -> Outcome {
    let r = s2.named("closed_forms");
    let worst = r.iter().map(|r| r.residual).fold(0.0, f64::max);
    Outcome::new(all_pass(&r) && r.len() == 3, format!("worst relative error {worst:.2e}{}", failures(&r)))
}

fn c04_monotonicity(s5: &Suite) -> Outcome {
    let r: Vec<&CheckReport> = s5.named("hd_monotonicity");
    let perturbed = r.iter().filter(|r| r.name.contains("eps=")).count();
    let worst = r.iter().map(|r| r.residual).fold(0.0, f64::max);
    let pass = all_pass(&r) && perturbed >= 3 && s5.elapsed < Duration::from_secs(60);
    Outcome::new(
        pass,
        format!(
            "{perturbed} perturbed runs, worst decrease/|H(0)| {worst:.2e}, whole d=5 suite {:.1} s{}",
            s5.elapsed.as_secs_f64(),
            failures(&r)
        ),
    )
}

fn c05_extinction(s5: &Suite) -> Outcome {
    let bounds = s5.named("decay_bounds");
    let sep = s5.named("separated_extinction");
    let mut all = bounds.clone();
    all.extend(&sep);
    let r = sep[0];
    Outcome::new(
        all_pass(&all),
        format!(
            "{} sandwich runs; separated slope {:.5} vs {:.5}, T_hat {:.5}{}",
            bounds.len(),
            Suite::q(r, "slope"),
            Suite::q(r, "expected_slope"),
            Suite::q(r, "t_hat"),
            failures(&all)
        ),
    )
}

/// Baseline and halved-step residuals of the second-derivative identity on
/// the perturbed runs.
fn c06_second_derivative(s5: &Suite) -> Outcome {
    let r = s5.named("second_derivative");
    let mut pass = all_pass(&r);
    let mut detail = String::new();
    let d = 5;
    let base = SuiteConfig { d, ..SuiteConfig::default() };
    let grid = make_grid(d, base.r_max_for("fd"), base.n, base.spacing).unwrap();
    let q = hls_power(d);
    for p in FLOW_DATA {
        let v0 = p.field(&grid).and_then(|w| w.map(|x| x.powf(q))).unwrap();
        let residual = |scale: f64| {
            let mut params = FlowParams::new(sobolev_flow_exponent(d), SobolevConstant::Realized);
            params.control = base.control();
            params.control.eta *= scale;
            params.control.dt0 *= scale;
            params.eps_ext = base.eps_ext;
            let trace = run_flow(&v0, &params).unwrap();
            let r = second_derivative_check(&trace, 3e-2).unwrap();
            Suite::q(&r, "residual_h_second")
        };
        let (coarse, fine) = (residual(1.0), residual(0.5));
        let gain = coarse / fine;
        pass &= coarse <= 3e-2 && gain >= 1.5;
        let _ = write!(detail, "{}: {coarse:.2e} -> {fine:.2e} (x{gain:.2}); ", p.label());
    }
    Outcome::new(pass, format!("{detail}{}", failures(&r).trim_start_matches("; ")))
}

fn c07_theorem_gap(s5: &Suite) -> Outcome {
    let r = s5.named("theorem_gap");
    let opt = r.iter().find(|r| r.name.contains("optimizer")).expect("optimizer report");
    let scale = Suite::q(opt, "scale");
    let null = Suite::q(opt, "lhs").abs() < 1e-8 * scale && Suite::q(opt, "rhs").abs() < 1e-8 * scale;
    let perturbed: Vec<String> = r
        .iter()
        .filter(|r| !r.name.contains("optimizer"))
        .map(|r| format!("{:.2e}", r.residual))
        .collect();
    Outcome::new(
        all_pass(&r) && null && perturbed.len() >= 2,
        format!(
            "perturbed relative mismatch [{}]; optimizer sides {:.1e}, {:.1e} at scale {scale:.2e}{}",
            perturbed.join(", "),
            Suite::q(opt, "lhs"),
            Suite::q(opt, "rhs"),
            failures(&r)
        ),
    )
}

fn c08_explicit_gap(s5: &Suite, s6: &Suite) -> Outcome {
    let mut all = Vec::new();
    let mut detail = String::new();
    for (d, s) in [(5, s5), (6, s6)] {
        let g = s.named("explicit_gap");
        let _ = write!(
            detail,
            "d={d}: {} violations, max ratio {:.4} <= C {:.4}; ",
            Suite::q(g[0], "violations"),
            Suite::q(g[0], "max_ratio"),
            Suite::q(g[0], "constant")
        );
        all.extend(g);
        all.extend(s.named("kappa_bound"));
    }
    Outcome::new(all_pass(&all), format!("{detail}{} kappa runs{}", all.len() - 2, failures(&all)))
}

fn c09_onofri_limit(s2: &Suite) -> Outcome {
    let r = s2.named("onofri_limit")[0];
    let errors: Vec<f64> = [16, 64, 256].iter().map(|p| Suite::q(r, &format!("error_p{p}"))).collect();
    let lowest = [16, 64, 256].iter().map(|p| Suite::q(r, &format!("quotient_p{p}"))).fold(f64::INFINITY, f64::min);
    let decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    Outcome::new(
        decreasing && lowest >= 1.0 - 1e-6,
        format!("errors {:.2e}, {:.2e}, {:.2e}; lowest quotient {lowest:.6}", errors[0], errors[1], errors[2]),
    )
}

fn c10_duality(s2: &Suite) -> Outcome {
    let r = s2.named("loghls_duality")[0];
    let at_mu = Suite::q(r, "deficit_at_mu");
    let min = Suite::q(r, "min_deficit");
    let gap = Suite::q(r, "max_gap_mismatch");
    Outcome::new(
        at_mu.abs() <= 1e-5 && min > 0.0 && gap <= 1e-6,
        format!("deficit at mu {at_mu:.2e}, min deficit {min:.3e}, Legendre mismatch {gap:.2e}"),
    )
}

fn c11_lemma(s2: &Suite) -> Outcome {
    let curves = s2.named("exp_moment_curve");
    let lemma = s2.named("loghls_derivative_lemma");
    let mut bad = Vec::new();
    for c in &curves {
        let q = |k| Suite::q(c, k);
        if q("h_zero").abs() > 1e-10 || q("h_half").abs() > 1e-10 {
            bad.push(format!("{}: h(0), h(1/2) not zero", c.name));
        }
        if q("min_h_second") < -1e-6 {
            bad.push(format!("{}: min h'' {:.2e}", c.name, q("min_h_second")));
        }
        if q("min_h_third") < -1e-6 {
            bad.push(format!("{}: min h''' {:.2e}", c.name, q("min_h_third")));
        }
    }
    for l in &lemma {
        let q = |k| Suite::q(l, k);
        if q("h_one_minus_h_prime_half") < -1e-8 {
            bad.push(format!("{}: h(1) - h'(1/2) = {:.2e}", l.name, q("h_one_minus_h_prime_half")));
        }
        if q("margin") < 0.0 {
            bad.push(format!("{}: margin {:.2e}", l.name, q("margin")));
        }
    }
    let pass = bad.is_empty() && curves.len() == 5 && lemma.len() == 5;
    Outcome::new(pass, if pass { "all five samples satisfy every requirement".into() } else { bad.join("; ") })
}

fn c12_log_flow(s2: &Suite) -> Outcome {
    let mut all = s2.named("h2_derivative");
    all.extend(s2.named("h2_monotonicity"));
    all.extend(s2.named("log_stationarity"));
    let drift = all
        .iter()
        .filter_map(|r| r.quantities.get("mass_drift"))
        .copied()
        .fold(0.0, f64::max);
    let mut pass = all_pass(&all) && drift <= 1e-8;
    let mut detail = format!("max mass drift {drift:.1e}; ");
    let base = SuiteConfig { d: 2, ..SuiteConfig::default() };
    let grid = make_grid(2, base.r_max_for("log"), base.n, base.spacing).unwrap();
    for b in LOG_FLOW_DATA {
        let v0 = MassOneDensity::perturbed_moon(&b.field(&grid).unwrap()).unwrap();
        let residual = |scale: f64| {
            let mut params = LogFlowParams { control: base.control(), t_end: T_END, ..LogFlowParams::default() };
            params.control.eta *= scale;
            params.control.dt0 *= scale;
            h2_derivative_check(&run_log_flow(&v0, &params).unwrap(), 3e-2).unwrap().residual
        };
        let (coarse, fine) = (residual(1.0), residual(0.5));
        pass &= fine < coarse;
        let _ = write!(detail, "{}: {coarse:.2e} -> {fine:.2e}; ", b.label());
    }
    Outcome::new(pass, format!("{detail}{}", failures(&all).trim_start_matches("; ")))
}

fn c13_probe(s2: &Suite) -> Outcome {
    let r = s2.named("failed_scheme_probe");
    let ratios: Vec<String> =
        r.iter().map(|r| format!("{:.3}", Suite::q(r, "ratio_over_j_j_second"))).collect();
    Outcome::new(
        all_pass(&r) && r.len() == 5,
        format!("4J'^2/(J J'') = [{}] (reported only){}", ratios.join(", "), failures(&r)),
    )
}

fn c14_determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("dualflow-acceptance-{}", std::process::id()));
    let mut cfg = RunConfig::defaults(Command::Verify);
    cfg.d = 2;
    cfg.flow = "log".into();
    cfg.out = dir.clone();
    let read = |cfg: &RunConfig| {
        cmd_verify(cfg).expect("verify runs");
        fs::read(dir.join("report.json")).expect("report written")
    };
    let first = read(&cfg);
    let second = read(&cfg);
    let _ = fs::remove_dir_all(&dir);
    Outcome::new(first == second && !first.is_empty(), format!("{} bytes, identical: {}", first.len(), first == second))
}

fn main() {
    let s2 = Suite::run(2, None);
    let s3 = Suite::run(3, Some(&["optimizer_residual"]));
    let s5 = Suite::run(5, None);
    let s6 = Suite::run(6, Some(&["explicit_gap", "kappa_bound"]));

    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("optimizer residual", Box::new(|| c01_optimizer_residual(&s3, &s5))),
        ("constant identities", Box::new(c02_constant_identities)),
        ("planar closed forms", Box::new(|| c03_closed_forms(&s2))),
        ("HLS functional monotone along the flow", Box::new(|| c04_monotonicity(&s5))),
        ("extinction time bounds", Box::new(|| c05_extinction(&s5))),
        ("second-derivative identity", Box::new(|| c06_second_derivative(&s5))),
        ("integral identity for the HLS deficit", Box::new(|| c07_theorem_gap(&s5))),
        ("explicit deficit bound and kappa bound", Box::new(|| c08_explicit_gap(&s5, &s6))),
        ("Onofri limit", Box::new(|| c09_onofri_limit(&s2))),
        ("log-HLS duality", Box::new(|| c10_duality(&s2))),
        ("exponential-moment curve and energy bound", Box::new(|| c11_lemma(&s2))),
        ("logarithmic flow", Box::new(|| c12_log_flow(&s2))),
        ("Cauchy-Schwarz probe", Box::new(|| c13_probe(&s2))),
        ("determinism", Box::new(c14_determinism)),
    ];

    // Evaluate everything first so the verify output of the determinism
    // run does not interleave with the criterion lines.
    let outcomes: Vec<Outcome> = criteria.iter().map(|(_, check)| check()).collect();
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!();
    for (k, ((name, _), o)) in criteria.iter().zip(&outcomes).enumerate() {
        println!("criterion {:02} {name}: {} ({})", k + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
