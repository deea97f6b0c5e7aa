use std::io::Write;
use std::path::Path;

use fbdesign::criteria::{c_constant, mc_mse_quantile, tail_q, CMode, CriterionReport, MseEstimator};
use fbdesign::designs::{for_each_balanced, match_pairs, perfect_balance, PbSolver, SearchConfig, SearchOutcome};
use fbdesign::sim::{density_export, run_scenario, summary_table, ScenarioConfig, ScenarioResult};
use fbdesign::toy::{toy_enumerate_check, toy_eta, toy_table1, toy_threshold, ToyConfig};
use fbdesign::{io, tol, AllocationCovariance, CovariateMatrix, DesignDistribution, DesignKind, ResponseSpec};
use serde::Serialize;

use crate::args::{CModeArg, Cli, Command, CriteriaArgs, DesignArgs, FModeArg, Format, SimulateArgs};
use crate::output::{json, key_value_csv, key_value_text, sink};
use crate::CliError;

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let fmt = cli.format;
    match &cli.command {
        Command::Enumerate { n, out } => enumerate(*n, out.as_deref(), fmt.unwrap_or(Format::Csv)),
        Command::Design(args) => design(args, fmt.unwrap_or(Format::Json)),
        Command::Criteria(args) => criteria(args, fmt.unwrap_or(Format::Json)),
        Command::Toy { m, a, delta } => toy(*m, *a, *delta, fmt.unwrap_or(Format::Text)),
        Command::Simulate(args) => simulate(args, fmt.unwrap_or(Format::Text)),
        Command::Export { result, bins, out } => export(result, *bins, out.as_deref(), fmt.unwrap_or(Format::Csv)),
    }
}

fn require_seed(seed: Option<u64>, why: &str) -> Result<u64, CliError> {
    seed.ok_or_else(|| CliError::Usage(format!("--seed is required {why}")))
}

fn enumerate(n: usize, out: Option<&Path>, fmt: Format) -> Result<(), CliError> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(fbdesign::Error::InvalidSubjectCount(n).into());
    }
    if n > tol::MAX_ENUMERATION_N {
        return Err(fbdesign::Error::EnumerationCap {
            n,
            cap: tol::MAX_ENUMERATION_N,
        }
        .into());
    }
    let mut w = sink(out)?;
    let mut failure = None;
    let mut first = true;
    let mut line = String::new();
    match fmt {
        Format::Csv => {
            let header: Vec<String> = (0..n).map(|j| format!("w{j}")).collect();
            writeln!(w, "{}", header.join(","))?;
        }
        Format::Json => write!(w, "[")?,
        Format::Text => {}
    }
    for_each_balanced(n, |alloc| {
        if failure.is_some() {
            return;
        }
        line.clear();
        let sep = match fmt {
            Format::Text => " ",
            _ => ",",
        };
        for (j, v) in alloc.iter().enumerate() {
            if j > 0 {
                line.push_str(sep);
            }
            line.push_str(if *v > 0 { "1" } else { "-1" });
        }
        let res = match fmt {
            Format::Json => {
                let res = write!(w, "{}[{line}]", if first { "" } else { "," });
                first = false;
                res
            }
            _ => writeln!(w, "{line}"),
        };
        if let Err(e) = res {
            failure = Some(e);
        }
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    if fmt == Format::Json {
        writeln!(w, "]")?;
    }
    w.flush()?;
    Ok(())
}

/// A design without a materialized support: `Σ_w` comes from closed forms.
fn compact_design(
    kind: DesignKind,
    x: &CovariateMatrix,
    seed: Option<u64>,
    restarts: usize,
) -> Result<(DesignDistribution, Option<SearchOutcome>), CliError> {
    Ok(match kind {
        DesignKind::Crfb => (DesignDistribution::crfb_sampled(x.n())?, None),
        DesignKind::Pm => (DesignDistribution::pm_sampled(match_pairs(x)), None),
        _ => {
            let (solver, seed) = if x.n() <= tol::MAX_ENUMERATION_N {
                (PbSolver::Brute, seed.unwrap_or(0))
            } else {
                let seed = require_seed(seed, "for greedy perfect-balance search above n = 24")?;
                (PbSolver::Greedy { restarts }, seed)
            };
            let outcome = perfect_balance(x, solver, &SearchConfig::new(restarts, seed)?)?;
            let w = outcome.allocation.clone();
            let d = DesignDistribution::uniform(DesignKind::Pb, vec![w.negated(), w])?;
            (d, Some(outcome))
        }
    })
}

#[derive(Serialize)]
struct DesignOutput {
    kind: DesignKind,
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    w_star: Option<SearchOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pairs: Option<fbdesign::PairSet>,
    lambda_max: f64,
    frobenius_sq: f64,
    sigma: AllocationCovariance,
}

fn design(args: &DesignArgs, fmt: Format) -> Result<(), CliError> {
    let x = io::read_covariates(&args.x)?;
    let (d, outcome) = compact_design(args.design.into(), &x, args.seed, args.restarts)?;
    let sigma = d.covariance()?;
    let w = sink(args.out.as_deref())?;
    match fmt {
        Format::Csv => io::write_matrix_csv(w, &sigma.rows())?,
        Format::Json => json(
            w,
            &DesignOutput {
                kind: d.kind(),
                n: d.n(),
                w_star: outcome,
                pairs: d.pairs().cloned(),
                lambda_max: sigma.lambda_max(),
                frobenius_sq: sigma.frobenius_sq(),
                sigma,
            },
        )?,
        Format::Text => {
            let mut rows = vec![
                ("design", d.kind().to_string()),
                ("n", d.n().to_string()),
                ("lambda_max", sigma.lambda_max().to_string()),
                ("frobenius_sq", sigma.frobenius_sq().to_string()),
            ];
            if let Some(o) = &outcome {
                let ws: Vec<String> = o.allocation.as_slice().iter().map(i8::to_string).collect();
                rows.push(("w_star", ws.join(" ")));
                rows.push(("imbalance", o.imbalance.to_string()));
            }
            if let Some(p) = d.pairs() {
                let ps: Vec<String> = p.pairs().iter().map(|(i, j)| format!("({i},{j})")).collect();
                rows.push(("pairs", ps.join(" ")));
            }
            key_value_text(w, &rows)?;
        }
    }
    Ok(())
}

fn report_rows(r: &CriterionReport) -> Vec<(&'static str, String)> {
    let mut rows = vec![
        ("n", r.n.to_string()),
        ("B1", r.b1.to_string()),
        ("B2", r.b2.to_string()),
        ("R", r.r.to_string()),
        ("lambda_max", r.lambda_max.to_string()),
        ("mean_mse", r.mean_mse.to_string()),
        ("var_mse", r.var_mse.to_string()),
        ("Q", r.q.to_string()),
        ("c_used", r.c_used.to_string()),
        ("gamma_term", r.gamma_term.to_string()),
    ];
    if let Some(q) = r.mc_quantile {
        rows.push(("mc_quantile", q.to_string()));
    }
    rows
}

fn criteria(args: &CriteriaArgs, fmt: Format) -> Result<(), CliError> {
    let x = io::read_covariates(&args.x)?;
    let f = match args.f_mode {
        FModeArg::Identity => x.column(0),
        FModeArg::Zero => vec![0.0; x.n()],
    };
    let (d, _) = compact_design(args.design.into(), &x, args.seed, args.restarts)?;
    let sigma = d.covariance()?;
    let spec = ResponseSpec::gaussian(1.0, f, args.sigma_z)?;
    let c = c_constant(match args.c_mode {
        CModeArg::Chebyshev => CMode::Chebyshev(args.q),
        CModeArg::Gaussian => CMode::Gaussian,
    })?;
    let mut report = tail_q(&spec, &sigma, c)?;
    if let Some(draws) = args.mc_draws {
        let seed = require_seed(args.seed, "with --mc-draws")?;
        let (summary, samples) = mc_mse_quantile(&spec, &d, args.q, draws, MseEstimator::Exact, seed)?;
        if summary.low_draw_warning {
            eprintln!("warning: {draws} noise draws is too few for a reliable quantile");
        }
        report.mc_quantile = Some(summary.quantile);
        if let Some(path) = &args.samples_out {
            io::write_samples_csv(sink(Some(path))?, &samples)?;
        }
    } else if args.samples_out.is_some() {
        return Err(CliError::Usage("--samples-out needs --mc-draws".into()));
    }
    let w = sink(None)?;
    match fmt {
        Format::Json => json(w, &report),
        Format::Csv => key_value_csv(w, &report_rows(&report)),
        Format::Text => key_value_text(w, &report_rows(&report)),
    }
}

#[derive(Serialize)]
struct ToyOutput {
    config: ToyConfig,
    eta: f64,
    threshold: f64,
    formula: fbdesign::toy::ToyTable,
    enumeration: fbdesign::toy::ToyTable,
    max_abs_diff: f64,
}

fn toy(m: usize, a: f64, delta: f64, fmt: Format) -> Result<(), CliError> {
    let cfg = ToyConfig::new(m, a, delta)?;
    let formula = toy_table1(&cfg)?;
    let enumeration = toy_enumerate_check(&cfg)?;
    let out = ToyOutput {
        config: cfg,
        eta: toy_eta(&cfg)?,
        threshold: toy_threshold(m),
        formula,
        enumeration,
        max_abs_diff: formula.max_abs_diff(&enumeration),
    };
    let mut w = sink(None)?;
    const LABELS: [(&str, &str); 6] = [
        ("CRFB", "observed_imbalance"),
        ("CRFB", "unobserved_imbalance"),
        ("CRFB", "mse"),
        ("matching", "observed_imbalance"),
        ("matching", "unobserved_imbalance"),
        ("matching", "mse"),
    ];
    let (fv, ev) = (formula.values(), enumeration.values());
    match fmt {
        Format::Json => json(&mut w, &out)?,
        Format::Csv => {
            writeln!(w, "design,metric,formula,enumeration")?;
            for (k, (design, metric)) in LABELS.iter().enumerate() {
                writeln!(w, "{design},{metric},{},{}", fv[k], ev[k])?;
            }
        }
        Format::Text => {
            writeln!(w, "m = {m}, a = {a}, delta = {delta}")?;
            writeln!(w, "eta = {:.4}, threshold sqrt((m-1)/m) = {:.4}", out.eta, out.threshold)?;
            writeln!(w, "{:<10} {:<22} {:>12} {:>12}", "design", "metric", "formula", "enumeration")?;
            for (k, (design, metric)) in LABELS.iter().enumerate() {
                writeln!(w, "{design:<10} {metric:<22} {:>12.6} {:>12.6}", fv[k], ev[k])?;
            }
            writeln!(w, "max |formula - enumeration| = {:.3e}", out.max_abs_diff)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn scenario_from_args(args: &SimulateArgs) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match (&args.preset, &args.config) {
        (Some(name), _) => {
            let seed = require_seed(args.seed, "for presets")?;
            fbdesign::sim::preset(name)?.with_seed(seed)
        }
        (None, Some(path)) => {
            let file = std::fs::File::open(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            let mut cfg: ScenarioConfig = serde_json::from_reader(file)
                .map_err(|e| CliError::Usage(format!("bad scenario config: {e}")))?;
            if let Some(seed) = args.seed {
                cfg.seed = seed;
            }
            cfg
        }
        (None, None) => return Err(CliError::Usage("give --preset or --config".into())),
    };
    if let Some(v) = args.n_z {
        cfg.n_z_draws = v;
    }
    if let Some(v) = args.n_w {
        cfg.n_w_draws = v;
    }
    if let Some(r) = args.restarts {
        match &mut cfg.pb_solver {
            PbSolver::Greedy { restarts } => *restarts = r,
            PbSolver::Brute => {
                return Err(CliError::Usage(
                    "--restarts applies only to scenarios using greedy search".into(),
                ))
            }
        }
    }
    if args.imbalance_ceiling.is_some() {
        cfg.imbalance_ceiling = args.imbalance_ceiling;
    }
    cfg.exact |= args.exact;
    Ok(cfg)
}

fn write_outputs(dir: &Path, result: &ScenarioResult, bins: usize) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
    json(sink(Some(&dir.join("result.json")))?, result)?;
    density_export(result, bins)?.write_csv(sink(Some(&dir.join("density.csv")))?)?;
    let mut s = sink(Some(&dir.join("summary.txt")))?;
    s.write_all(summary_table(result).as_bytes())?;
    s.flush()?;
    for d in &result.designs {
        let name = format!("samples_{}.csv", d.design.name().to_lowercase());
        io::write_samples_csv(sink(Some(&dir.join(name)))?, &d.samples)?;
    }
    Ok(())
}

fn simulate(args: &SimulateArgs, fmt: Format) -> Result<(), CliError> {
    let cfg = scenario_from_args(args)?;
    let result = run_scenario(&cfg)?;
    for warning in &result.warnings {
        eprintln!("warning: {warning}");
    }
    if let Some(dir) = &args.out {
        write_outputs(dir, &result, args.bins)?;
        if args.summary {
            print!("{}", summary_table(&result));
        }
        return Ok(());
    }
    let mut w = sink(None)?;
    match fmt {
        Format::Json => json(w, &result)?,
        Format::Csv => density_export(&result, args.bins)?.write_csv(w)?,
        Format::Text => {
            w.write_all(summary_table(&result).as_bytes())?;
            w.flush()?;
        }
    }
    Ok(())
}

fn export(result: &Path, bins: usize, out: Option<&Path>, fmt: Format) -> Result<(), CliError> {
    let file = std::fs::File::open(result)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", result.display())))?;
    let result: ScenarioResult = serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| CliError::Usage(format!("bad result file: {e}")))?;
    let table = density_export(&result, bins)?;
    let w = sink(out)?;
    match fmt {
        Format::Json => json(w, &table.rows),
        _ => Ok(table.write_csv(w)?),
    }
}
