use std::path::{Path, PathBuf};

use schrostab_core::identities::{run_identity_suite, MultiplierReport, SuiteConfig};
use schrostab_core::{
    fit_decay_rate, resolvent_sweep, simulate_with, spectral_abscissa, Complex64, InitialData,
    Propagator, Scheme, SemiDiscreteSystem, SweepConfig,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliResult, Failure};
use crate::output::{num, write_csv, write_json, write_text, Format, Outputs, Report, VERSION};
use crate::svg::{Chart, Scale, Series};
use crate::{InitPreset, ResolventArgs, SchemeChoice, SimulateArgs, SpectrumArgs, VerifyArgs};

const MAX_N: usize = 2047;

/// Everything needed to rerun a command, echoed into each report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_grid: Option<SweepConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<InitPreset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub propagator: Option<Propagator>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<SuiteConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub formats: Vec<Format>,
}

impl RunConfig {
    fn new(command: &'static str) -> Self {
        Self {
            command,
            scheme: None,
            n_list: None,
            n: None,
            k: None,
            beta_grid: None,
            dt: None,
            t_final: None,
            seed: None,
            init: None,
            init_file: None,
            propagator: None,
            fit_window: None,
            suite: None,
            out: None,
            formats: Vec::new(),
        }
    }
}

fn scheme_name(choice: SchemeChoice) -> String {
    serde_json::to_value(choice)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

fn check_n_list(n_list: &[usize]) -> CliResult<()> {
    if n_list.is_empty() {
        return Err(Failure::Usage("--n-list must not be empty".into()));
    }
    if let Some(&n) = n_list.iter().find(|&&n| n == 0 || n > MAX_N) {
        return Err(Failure::Usage(format!("N must lie in 1..={MAX_N}, got {n}")));
    }
    Ok(())
}

fn outputs(out_dir: &Path, out: &Option<PathBuf>, default: &str, formats: &[Format]) -> CliResult<(Outputs, PathBuf)> {
    let out = out.clone().unwrap_or_else(|| PathBuf::from(default));
    Ok((Outputs::new(out_dir, &out, formats)?, out))
}

#[derive(Debug, Serialize)]
struct SpectrumRow {
    scheme: Scheme,
    n: usize,
    h: f64,
    k: f64,
    abscissa: f64,
    max_eigen_residual: f64,
}

#[derive(Debug, Serialize)]
struct Results<T> {
    results: Vec<T>,
}

pub fn spectrum(out_dir: &Path, args: &SpectrumArgs) -> CliResult<()> {
    check_n_list(&args.n_list)?;
    let (outs, out) = outputs(out_dir, &args.output.out, "spectrum.csv", &args.output.format)?;
    let config = RunConfig {
        scheme: Some(scheme_name(args.scheme)),
        n_list: Some(args.n_list.clone()),
        k: Some(args.k),
        out: Some(out),
        formats: args.output.format.clone(),
        ..RunConfig::new("spectrum")
    };

    let mut rows = Vec::new();
    let mut eigen_rows = Vec::new();
    for scheme in args.scheme.schemes() {
        for &n in &args.n_list {
            let system = SemiDiscreteSystem::new(scheme, n, args.k)?;
            let report = spectral_abscissa(&system)?;
            if args.eigenvalues {
                for l in &report.eigenvalues {
                    eigen_rows.push(vec![scheme.to_string(), n.to_string(), num(l.re), num(l.im)]);
                }
            }
            rows.push(SpectrumRow {
                scheme,
                n,
                h: report.h,
                k: report.k,
                abscissa: report.abscissa,
                max_eigen_residual: report.max_eigen_residual,
            });
        }
    }

    if outs.wants(Format::Csv) {
        let table: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    r.scheme.to_string(),
                    r.n.to_string(),
                    num(r.h),
                    num(r.k),
                    num(r.abscissa),
                    num(r.max_eigen_residual),
                ]
            })
            .collect();
        write_csv(outs.csv(), &["scheme", "N", "h", "k", "abscissa", "max_eigen_residual"], &table)?;
    }
    if args.eigenvalues {
        write_csv(&outs.sibling_csv("eigenvalues"), &["scheme", "N", "re", "im"], &eigen_rows)?;
    }
    if outs.wants(Format::Svg) {
        let series = args
            .scheme
            .schemes()
            .into_iter()
            .map(|scheme| Series {
                name: scheme.to_string(),
                points: rows
                    .iter()
                    .filter(|r| r.scheme == scheme)
                    .map(|r| (r.n as f64, r.abscissa.abs()))
                    .collect(),
            })
            .collect();
        let chart = Chart {
            title: format!("Maximal real part of the spectrum, k = {}", args.k),
            x_label: "N".into(),
            y_label: "|max Re λ|".into(),
            x_scale: Scale::Log,
            y_scale: Scale::Log,
            series,
        };
        write_text(&outs.svg(), &chart.render())?;
    }
    if outs.wants(Format::Json) {
        let report = Report {
            tool: VERSION,
            config: &config,
            body: Results { results: rows },
        };
        write_json(&outs.json(), &report)?;
    }
    println!("spectrum: {} rows -> {}", args.n_list.len() * args.scheme.schemes().len(), outs.csv().display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct ResolventSummary {
    scheme: Scheme,
    n: usize,
    h: f64,
    k: f64,
    sup_norm: f64,
    argmax_beta: f64,
    points: usize,
}

fn sweep_config(args: &ResolventArgs) -> SweepConfig {
    SweepConfig {
        beta_min: args.beta_min,
        beta_max: args.beta_max,
        linear_steps: args.linear_steps,
        log_decades: args.log_decades,
        log_points_per_decade: args.log_points_per_decade,
        include_eigen_imag: !args.no_eigen_imag,
        explicit: args.betas.clone(),
    }
}

/// `sign(β) log10(1 + |β|)`, so both half-lines fit one linear axis.
fn symlog(beta: f64) -> f64 {
    beta.signum() * beta.abs().ln_1p() / std::f64::consts::LN_10
}

pub fn resolvent(out_dir: &Path, args: &ResolventArgs) -> CliResult<()> {
    check_n_list(&args.n_list)?;
    let (outs, out) = outputs(out_dir, &args.output.out, "resolvent.csv", &args.output.format)?;
    let sweep = sweep_config(args);
    let config = RunConfig {
        scheme: Some(scheme_name(args.scheme)),
        n_list: Some(args.n_list.clone()),
        k: Some(args.k),
        beta_grid: Some(sweep.clone()),
        out: Some(out),
        formats: args.output.format.clone(),
        ..RunConfig::new("resolvent")
    };

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    let mut series = Vec::new();
    for scheme in args.scheme.schemes() {
        for &n in &args.n_list {
            let system = SemiDiscreteSystem::new(scheme, n, args.k)?;
            let report = resolvent_sweep(&system, &sweep)?;
            for (b, v) in report.beta_grid.iter().zip(&report.norms) {
                rows.push(vec![scheme.to_string(), n.to_string(), num(args.k), num(*b), num(*v)]);
            }
            series.push(Series {
                name: format!("{scheme} N={n}"),
                points: report.beta_grid.iter().map(|&b| symlog(b)).zip(report.norms.iter().copied()).collect(),
            });
            summaries.push(ResolventSummary {
                scheme,
                n,
                h: system.mesh().h(),
                k: args.k,
                sup_norm: report.sup_norm,
                argmax_beta: report.argmax_beta,
                points: report.beta_grid.len(),
            });
        }
    }

    if outs.wants(Format::Csv) {
        write_csv(outs.csv(), &["scheme", "N", "k", "beta", "norm"], &rows)?;
        let table: Vec<Vec<String>> = summaries
            .iter()
            .map(|s| {
                vec![
                    s.scheme.to_string(),
                    s.n.to_string(),
                    num(s.k),
                    num(s.sup_norm),
                    num(s.argmax_beta),
                ]
            })
            .collect();
        write_csv(
            &outs.sibling_csv("summary"),
            &["scheme", "N", "k", "sup_norm", "argmax_beta"],
            &table,
        )?;
    }
    if outs.wants(Format::Svg) {
        let chart = Chart {
            title: format!("Resolvent norm on the imaginary axis, k = {}", args.k),
            x_label: "sign(β) log10(1 + |β|)".into(),
            y_label: "||(iβ - A)^-1||".into(),
            x_scale: Scale::Linear,
            y_scale: Scale::Log,
            series,
        };
        write_text(&outs.svg(), &chart.render())?;
    }
    if outs.wants(Format::Json) {
        let report = Report {
            tool: VERSION,
            config: &config,
            body: Results { results: summaries },
        };
        write_json(&outs.json(), &report)?;
    }
    println!("resolvent: {} rows -> {}", rows.len(), outs.csv().display());
    Ok(())
}

#[derive(Debug, Deserialize)]
struct ComplexRecord {
    re: f64,
    im: f64,
}

fn read_initial_file(path: &Path) -> CliResult<Vec<Complex64>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut values = Vec::new();
    for record in reader.deserialize() {
        let r: ComplexRecord = record.map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        values.push(Complex64::new(r.re, r.im));
    }
    Ok(values)
}

#[derive(Debug, Serialize)]
struct SimulationSummary {
    scheme: Scheme,
    n: usize,
    h: f64,
    k: f64,
    steps: usize,
    initial_energy: f64,
    final_energy: f64,
    max_abs_step_gap: f64,
    max_energy_increase: f64,
    omega_fit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit_error: Option<String>,
}

#[derive(Debug, Serialize)]
struct Single<T> {
    result: T,
}

pub fn simulate(out_dir: &Path, args: &SimulateArgs) -> CliResult<()> {
    if args.n == 0 || args.n > MAX_N {
        return Err(Failure::Usage(format!("N must lie in 1..={MAX_N}, got {}", args.n)));
    }
    let (outs, out) = outputs(out_dir, &args.output.out, "simulate.csv", &args.output.format)?;
    let fit_window = [args.fit_start.unwrap_or(args.t_final / 2.0), args.fit_end.unwrap_or(args.t_final)];
    let propagator = Propagator::from(args.propagator);
    let config = RunConfig {
        scheme: Some(args.scheme.to_string()),
        n: Some(args.n),
        k: Some(args.k),
        dt: Some(args.dt),
        t_final: Some(args.t_final),
        seed: Some(args.seed),
        init: Some(args.init),
        init_file: args.init_file.clone(),
        propagator: Some(propagator),
        fit_window: Some(fit_window),
        out: Some(out),
        formats: args.output.format.clone(),
        ..RunConfig::new("simulate")
    };

    let system = SemiDiscreteSystem::new(args.scheme, args.n, args.k)?;
    let data = match args.init {
        InitPreset::Random => InitialData::Random { seed: args.seed },
        InitPreset::Sine => InitialData::Sine,
        InitPreset::File => {
            let path = args
                .init_file
                .as_ref()
                .ok_or_else(|| Failure::Usage("--init file requires --init-file".into()))?;
            InitialData::Values(read_initial_file(path)?)
        }
    };
    let w0 = data.realize(system.mesh())?;
    let trace = simulate_with(&system, &w0, args.dt, args.t_final, propagator)?;
    let (omega_fit, fit_error) = match fit_decay_rate(&trace, fit_window[0], fit_window[1]) {
        Ok(w) => (Some(w), None),
        Err(schrostab_core::Error::Domain(msg)) => (None, Some(msg)),
        Err(e) => return Err(e.into()),
    };

    if outs.wants(Format::Csv) {
        let rows: Vec<Vec<String>> = (0..trace.len())
            .map(|i| {
                vec![
                    num(trace.times[i]),
                    num(trace.energies[i]),
                    num(trace.boundary_values[i].norm()),
                    if i == 0 { String::new() } else { num(trace.step_gaps[i - 1]) },
                ]
            })
            .collect();
        write_csv(outs.csv(), &["t", "energy", "boundary_abs", "step_gap"], &rows)?;
    }
    if outs.wants(Format::Svg) {
        let chart = Chart {
            title: format!("Energy decay, {} N = {} k = {}", args.scheme, args.n, args.k),
            x_label: "t".into(),
            y_label: "E(t)".into(),
            x_scale: Scale::Linear,
            y_scale: Scale::Log,
            series: vec![Series {
                name: "energy".into(),
                points: trace.times.iter().copied().zip(trace.energies.iter().copied()).collect(),
            }],
        };
        write_text(&outs.svg(), &chart.render())?;
    }
    let summary = SimulationSummary {
        scheme: args.scheme,
        n: args.n,
        h: system.mesh().h(),
        k: args.k,
        steps: trace.step_gaps.len(),
        initial_energy: trace.energies[0],
        final_energy: trace.energies[trace.len() - 1],
        max_abs_step_gap: trace.max_abs_step_gap(),
        max_energy_increase: trace.max_energy_increase(),
        omega_fit,
        fit_error,
    };
    match summary.omega_fit {
        Some(w) => println!("simulate: {} steps, omega_fit {} -> {}", summary.steps, num(w), outs.csv().display()),
        None => println!("simulate: {} steps, no decay fit -> {}", summary.steps, outs.csv().display()),
    }
    if outs.wants(Format::Json) {
        let report = Report {
            tool: VERSION,
            config: &config,
            body: Single { result: summary },
        };
        write_json(&outs.json(), &report)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct VerifyBody {
    passed: bool,
    gaps: Vec<MultiplierReport>,
}

fn print_table(reports: &[MultiplierReport]) {
    println!(
        "{:<22} {:>5} {:>6} {:>8} {:>11} {:>8}  status",
        "identity", "N", "k", "samples", "rel_gap", "tol"
    );
    for r in reports {
        println!(
            "{:<22} {:>5} {:>6} {:>8} {:>11.3e} {:>8.0e}  {}",
            r.identity.as_str(),
            r.n,
            r.k,
            r.samples,
            r.relative_gap,
            r.tolerance,
            if r.passed { "ok" } else { "FAIL" }
        );
    }
}

pub fn verify(args: &VerifyArgs) -> CliResult<()> {
    let suite = SuiteConfig {
        n_list: args.n_list.clone(),
        k_list: args.k_list.clone(),
        samples: args.samples,
        seed: args.seed,
        beta: args.beta,
        dense_cap: args.dense_cap,
        perturb: args.perturb,
    };
    let config = RunConfig {
        suite: Some(suite.clone()),
        formats: if args.json { vec![Format::Json] } else { Vec::new() },
        ..RunConfig::new("verify")
    };
    let reports = run_identity_suite(&suite)?;
    let failed = reports.iter().filter(|r| !r.passed).count();
    if args.json {
        let report = Report {
            tool: VERSION,
            config: &config,
            body: VerifyBody {
                passed: failed == 0,
                gaps: reports.clone(),
            },
        };
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print_table(&reports);
        println!("{} of {} checks passed", reports.len() - failed, reports.len());
    }
    if failed > 0 {
        return Err(Failure::Verification(failed, reports.len()));
    }
    Ok(())
}
