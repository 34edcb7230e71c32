use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use geoconsensus::analysis::{fit_exponential, fit_power, predicted_rate, RateFit, RateModel, DEFAULT_WINDOW_FRACTION};
use geoconsensus::diagnostics::{diameter, write_csv, RunSummary};
use geoconsensus::dynamics::ParticleEnsemble;
use geoconsensus::experiments::{
    figure1_runs, run_figure1, run_with_diagnostics, weak_config, weak_ensemble, weak_potential, RunOutput,
    FIGURE1_SEED, WEAK_PARTICLES, WEAK_SEED,
};
use geoconsensus::io::{diameter_svg, read_diameter_series, write_json, write_snapshot, RateReport};
use geoconsensus::manifold::{sample_ball, Euclidean, Hyperbolic, Manifold, ManifoldKind, Sphere, So3};
use geoconsensus::potential::{PotentialKind, PotentialSpec};
use geoconsensus::verify::{verify_all, verify_manifold, CorruptedLog, VerifyReport, DEFAULT_SEED};
use serde::Serialize;

use crate::config::{self, ExperimentConfig, Masses};
use crate::failure::Failure;
use crate::output::Outputs;
use crate::GlobalArgs;

/// Final weak functional below which the weak demo passes.
const WEAK_FUNCTIONAL_LIMIT: f64 = 1e-6;

/// Allowed final diameter above the dead-zone radius.
const WEAK_DIAMETER_SLACK: f64 = 1e-3;

macro_rules! with_manifold {
    ($kind:expr, |$m:ident| $body:expr) => {
        match $kind {
            ManifoldKind::Euclidean(n) => {
                let $m = Euclidean::new(n);
                $body
            }
            ManifoldKind::Sphere => {
                let $m = Sphere;
                $body
            }
            ManifoldKind::Hyperbolic => {
                let $m = Hyperbolic;
                $body
            }
            ManifoldKind::So3 => {
                let $m = So3;
                $body
            }
        }
    };
}

fn seed_of(cfg: &ExperimentConfig, g: &GlobalArgs) -> u64 {
    g.seed.unwrap_or(cfg.sampling.seed)
}

fn initial_state<M: Manifold>(m: M, cfg: &ExperimentConfig, seed: u64) -> Result<(ParticleEnsemble<M>, M::Point), Failure> {
    let center = match &cfg.manifold.center {
        Some(c) => m.point(c)?,
        None => m.origin(),
    };
    let points = sample_ball(&m, &center, cfg.scheme(), seed, cfg.particles.n)?;
    let e = match &cfg.particles.masses {
        Masses::Named(_) => ParticleEnsemble::uniform(m, points)?,
        Masses::Explicit(w) => ParticleEnsemble::new(m, points, w.clone())?,
    };
    Ok((e, center))
}

/// Runs a config, streaming snapshots to `jsonl` when given.
fn execute<M: Manifold>(
    m: M,
    cfg: &ExperimentConfig,
    p: &PotentialSpec,
    seed: u64,
    mut jsonl: Option<&mut dyn Write>,
) -> Result<(f64, RunOutput<M>), Failure> {
    let (e0, center) = initial_state(m, cfg, seed)?;
    let sim = cfg.simulation(center).with_seed(seed);
    let out = run_with_diagnostics(&e0, p, &sim, false, |t, e| match jsonl.as_mut() {
        Some(w) => write_snapshot(t, e, &mut **w),
        None => Ok(()),
    })?;
    Ok((diameter(&e0), out))
}

fn csv_bytes(out: &[geoconsensus::diagnostics::TimeSeriesRecord]) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    write_csv(out, &mut buf)?;
    Ok(buf)
}

/// Semi-log for potentials with `g'(0) > 0`, log-log otherwise.
fn rate_model(p: &PotentialSpec) -> RateModel {
    if p.g_prime(0.0) > 0.0 {
        RateModel::Exponential
    } else {
        RateModel::Power
    }
}

fn fit(series: &[(f64, f64)], model: RateModel, window: f64) -> geoconsensus::Result<RateFit> {
    match model {
        RateModel::Exponential => fit_exponential(series, window),
        RateModel::Power => fit_power(series, window),
    }
}

#[derive(Serialize)]
struct SimulateReport {
    manifold: String,
    particles: usize,
    seed: u64,
    initial_diameter: f64,
    final_diameter: f64,
    summary: RunSummary,
    rate: Option<RateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate_unavailable: Option<String>,
}

pub fn simulate(path: &Path, g: &GlobalArgs) -> Result<(), Failure> {
    let cfg = config::load(path)?;
    let p = cfg.potential()?;
    let seed = seed_of(&cfg, g);
    let mut outputs = Outputs::new(&g.out);
    let jsonl = outputs.open(&cfg.outputs.jsonl)?;
    let (d0, records, summary) = with_manifold!(cfg.manifold.kind, |m| {
        let (d0, out) = execute(m, &cfg, &p, seed, Some(outputs.writer(jsonl)))?;
        (d0, out.records, out.summary)
    });
    let series: Vec<(f64, f64)> = records.iter().map(|r| (r.t, r.diameter)).collect();
    let model = rate_model(&p);
    let fitted = fit(&series, model, DEFAULT_WINDOW_FRACTION);
    let bound = predicted_rate(&p, &cfg.descriptor(), cfg.ball_radius(), d0).ok().map(|r| r.bound_rate());
    let final_diameter = series.last().map_or(d0, |s| s.1);
    let report = SimulateReport {
        manifold: cfg.manifold.kind.to_string(),
        particles: cfg.particles.n,
        seed,
        initial_diameter: d0,
        final_diameter,
        summary,
        rate: fitted.as_ref().ok().map(|f| RateReport::new(f, bound)),
        rate_unavailable: fitted.as_ref().err().map(|e| e.to_string()),
    };

    outputs.write_bytes(&cfg.outputs.csv, &csv_bytes(&records)?)?;
    outputs.write(&cfg.outputs.report, |w| write_json(&report, w))?;
    let svg_path = cfg.outputs.svg.clone().or_else(|| g.svg.then(|| PathBuf::from("diameter.svg")));
    if let Some(svg) = svg_path {
        outputs.write_bytes(&svg, diameter_svg(&series, model, fitted.as_ref().ok()).as_bytes())?;
    }
    let written = outputs.commit()?;

    println!("{} steps, {} snapshots, diameter {d0:.6} -> {final_diameter:.6e}", summary.steps, records.len());
    match (&fitted, bound) {
        (Ok(f), Some(b)) => println!("{:?} fit slope {:.6} (r2 {:.6}), bound rate {b:.6}", f.model, f.slope, f.r_squared),
        (Ok(f), None) => println!("{:?} fit slope {:.6} (r2 {:.6})", f.model, f.slope, f.r_squared),
        (Err(e), _) => println!("no rate fit: {e}"),
    }
    for w in written {
        println!("wrote {}", w.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct Figure1Row {
    beta: f64,
    model: RateModel,
    slope: f64,
    expected: f64,
    band: (f64, f64),
    r_squared: f64,
    window: (f64, f64),
    bound_rate: f64,
    pass: bool,
    csv: String,
}

pub fn reproduce_figure1(only: &[f64], g: &GlobalArgs) -> Result<(), Failure> {
    let runs: Vec<_> = figure1_runs().into_iter().filter(|r| only.is_empty() || only.contains(&r.beta)).collect();
    if runs.is_empty() {
        return Err(Failure::Usage(format!(
            "no preset with beta in {only:?}; presets are {:?}",
            figure1_runs().map(|r| r.beta)
        )));
    }
    let seed = g.seed.unwrap_or(FIGURE1_SEED);
    let mut outputs = Outputs::new(&g.out);
    let mut rows = Vec::new();
    println!("{:>5}  {:<11}  {:>9}  {:>9}  {:>19}  {:>8}  verdict", "beta", "fit", "slope", "expected", "band", "r2");
    for run in &runs {
        let res = run_figure1(run, seed, false, |_, _| Ok(()))?;
        let name = format!("figure1_beta{}.csv", run.beta);
        outputs.write_bytes(Path::new(&name), &csv_bytes(&res.output.records)?)?;
        if g.svg {
            let svg = diameter_svg(&res.output.diameter_series(), res.fit.model, Some(&res.fit));
            outputs.write_bytes(Path::new(&format!("figure1_beta{}.svg", run.beta)), svg.as_bytes())?;
        }
        let band = run.band();
        let pass = res.within_band();
        let fit_name = match res.fit.model {
            RateModel::Exponential => "semi-log",
            RateModel::Power => "log-log",
        };
        println!(
            "{:>5}  {:<11}  {:>9.5}  {:>9.5}  [{:>8.4}, {:>8.4}]  {:>8.6}  {}",
            run.beta,
            fit_name,
            res.fit.slope,
            run.expected_slope(),
            band.0,
            band.1,
            res.fit.r_squared,
            if pass { "PASS" } else { "FAIL" }
        );
        rows.push(Figure1Row {
            beta: run.beta,
            model: res.fit.model,
            slope: res.fit.slope,
            expected: run.expected_slope(),
            band,
            r_squared: res.fit.r_squared,
            window: res.fit.window,
            bound_rate: res.prediction.bound_rate(),
            pass,
            csv: name,
        });
    }
    outputs.write(Path::new("figure1_report.json"), |w| write_json(&rows, w))?;
    outputs.commit()?;
    let failed: Vec<String> =
        rows.iter().filter(|r| !r.pass).map(|r| format!("beta {} slope {:.5}", r.beta, r.slope)).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Acceptance(format!("slope outside its band: {}", failed.join(", "))))
    }
}

pub fn verify_geometry(samples: usize, corrupt_log: bool, g: &GlobalArgs) -> Result<(), Failure> {
    if samples == 0 {
        return Err(Failure::Usage("--samples must be at least 1".into()));
    }
    let seed = g.seed.unwrap_or(DEFAULT_SEED);
    let report = if corrupt_log {
        VerifyReport { seed, samples, suites: verify_manifold(&CorruptedLog(Sphere), samples, seed)? }
    } else {
        verify_all(samples, seed)?
    };
    print!("{report}");
    if report.passed() {
        return Ok(());
    }
    let mut lines = Vec::new();
    for w in report.witnesses() {
        let line = serde_json::to_string(w).map_err(geoconsensus::Error::from)?;
        eprintln!("witness {line}");
        lines.push(line);
    }
    let mut outputs = Outputs::new(&g.out);
    outputs.write_bytes(Path::new("witnesses.jsonl"), (lines.join("\n") + "\n").as_bytes())?;
    outputs.commit()?;
    Err(Failure::Acceptance(format!("{} failing samples; witnesses in witnesses.jsonl", report.failures())))
}

#[derive(Serialize)]
struct WeakReport {
    zeta: f64,
    initial_diameter: f64,
    final_diameter: f64,
    final_weak_functional: f64,
    summary: RunSummary,
    pass: bool,
}

pub fn weak_demo(path: Option<&Path>, g: &GlobalArgs) -> Result<(), Failure> {
    let (zeta, d0, out_records, summary, csv_path) = match path {
        Some(path) => {
            let cfg = config::load(path)?;
            let p = cfg.potential()?;
            let PotentialKind::TruncatedPowerLaw { zeta, .. } = p.kind else {
                return Err(Failure::Usage(
                    "weak-demo needs a truncated_power_law potential; use simulate for other potentials".into(),
                ));
            };
            let seed = seed_of(&cfg, g);
            let (d0, records, summary) = with_manifold!(cfg.manifold.kind, |m| {
                let (d0, out) = execute(m, &cfg, &p, seed, None)?;
                (d0, out.records, out.summary)
            });
            (zeta, d0, records, summary, cfg.outputs.csv.clone())
        }
        None => {
            let p = weak_potential();
            let seed = g.seed.unwrap_or(WEAK_SEED);
            let e0 = weak_ensemble(WEAK_PARTICLES, seed)?;
            let out = run_with_diagnostics(&e0, &p, &weak_config(seed), false, |_, _| Ok(()))?;
            let zeta = p.dead_zone().unwrap_or_default();
            (zeta, diameter(&e0), out.records, out.summary, PathBuf::from("weak_demo.csv"))
        }
    };
    let last = out_records.last().expect("a run records its initial state");
    let wf = last.weak_functional.unwrap_or(f64::INFINITY);
    let pass = wf < WEAK_FUNCTIONAL_LIMIT && last.diameter <= zeta + WEAK_DIAMETER_SLACK;

    println!("{:>10}  {:>12}  {:>14}", "t", "diameter", "weak");
    let stride = (out_records.len() / 10).max(1);
    for (k, r) in out_records.iter().enumerate() {
        if k % stride == 0 || k + 1 == out_records.len() {
            println!("{:>10.3}  {:>12.8}  {:>14.6e}", r.t, r.diameter, r.weak_functional.unwrap_or(f64::NAN));
        }
    }
    let report = WeakReport {
        zeta,
        initial_diameter: d0,
        final_diameter: last.diameter,
        final_weak_functional: wf,
        summary,
        pass,
    };
    let mut outputs = Outputs::new(&g.out);
    outputs.write_bytes(&csv_path, &csv_bytes(&out_records)?)?;
    outputs.write(Path::new("weak_demo.json"), |w| write_json(&report, w))?;
    if g.svg {
        let series: Vec<(f64, f64)> = out_records.iter().map(|r| (r.t, r.diameter)).collect();
        outputs.write_bytes(Path::new("weak_demo.svg"), diameter_svg(&series, RateModel::Exponential, None).as_bytes())?;
    }
    outputs.commit()?;
    let verdict = format!(
        "final diameter {:.6} (limit {:.6}), final weak functional {wf:.3e} (limit {WEAK_FUNCTIONAL_LIMIT:e})",
        last.diameter,
        zeta + WEAK_DIAMETER_SLACK
    );
    if pass {
        println!("PASS: {verdict}");
        Ok(())
    } else {
        Err(Failure::Acceptance(verdict))
    }
}

pub fn fit_rate(csv: &Path, model: RateModel, window: f64, g: &GlobalArgs) -> Result<(), Failure> {
    let file = File::open(csv).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", csv.display())))?;
    let series = read_diameter_series(file)?;
    let fitted = fit(&series, model, window)?;
    let report = RateReport::new(&fitted, None);
    let mut text = Vec::new();
    write_json(&report, &mut text)?;
    std::io::stdout().write_all(&text)?;
    if !fitted.is_reliable() {
        eprintln!("warning: r2 = {:.6} is below the reliability threshold", fitted.r_squared);
    }
    let mut outputs = Outputs::new(&g.out);
    outputs.write_bytes(Path::new("rate_report.json"), &text)?;
    if g.svg {
        outputs.write_bytes(Path::new("rate_fit.svg"), diameter_svg(&series, model, Some(&fitted)).as_bytes())?;
    }
    outputs.commit()?;
    Ok(())
}
