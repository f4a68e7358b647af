use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use symcc_core::config::ExperimentConfig;
use symcc_core::dsr::{self, FitnessData, TargetMode};
use symcc_core::env::{self, CollectSpec, ExperienceDataset, Units};
use symcc_core::eval::{self, Axis, PhaseSpec, Slice};
use symcc_core::expr::TokenSet;
use symcc_core::netsim::{self, Scenario, Topology};
use symcc_core::policy::{PolicyHandle, SharedPolicy, SymbolicPolicy};

use crate::manifest::RunManifest;
use crate::{
    AnalyzeArgs, CollectArgs, Common, EvaluateArgs, Figure, PhaseArg, RegressArgs, SimulateArgs,
    UnitsArg, UsageError,
};

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&common.config).map_err(|e| usage(e.to_string()))?;
    if let Some(u) = common.units {
        cfg.units = match u {
            UnitsArg::S => Units::Seconds,
            UnitsArg::Ms => Units::Milliseconds,
        };
    }
    // The top-level units govern every stage.
    cfg.regression.units = cfg.units;
    Ok(cfg)
}

fn revalidate(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate().map_err(|e| usage(e.to_string()))
}

fn prepare_out(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = out.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<()> {
    let mut w = create(out, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn init_jobs(jobs: Option<usize>) -> Result<()> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

fn require_input(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("{what} `{}` not found", path.display())))
    }
}

/// Built-in name, infix expression, `external`, or a hall-of-fame JSON
/// whose top entry becomes the policy.
fn resolve_policy(name: &str, cfg: &ExperimentConfig) -> Result<PolicyHandle> {
    if name == "external" {
        let spec = cfg
            .external
            .clone()
            .ok_or_else(|| usage("policy `external` needs an `external` section in the config"))?;
        return Ok(PolicyHandle::External(spec));
    }
    if name.ends_with(".json") {
        let path = Path::new(name);
        require_input(path, "hall of fame")?;
        let text = std::fs::read_to_string(path)?;
        let entries = dsr::read_hall_of_fame(&text).map_err(|e| usage(format!("{name}: {e}")))?;
        let top = entries
            .first()
            .ok_or_else(|| usage(format!("{name}: hall of fame is empty")))?;
        let tree = top
            .tree(&TokenSet::regression())
            .map_err(|e| usage(format!("{name}: {e}")))?;
        return Ok(PolicyHandle::Symbolic(SymbolicPolicy::new(tree, cfg.units)));
    }
    PolicyHandle::from_name(name, cfg.units).map_err(|e| usage(format!("policy `{name}`: {e}")))
}

fn require_symbolic(handle: &PolicyHandle, what: &str) -> Result<SymbolicPolicy> {
    handle.as_symbolic().cloned().ok_or_else(|| {
        usage(format!(
            "{what} needs a symbolic policy, got `{}`",
            handle.describe()
        ))
    })
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    policy: String,
    summary: &'a netsim::RunSummary,
    flows: &'a [netsim::FlowSummary],
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let mut cfg = load_config(&args.common)?;
    if let Some(d) = args.duration {
        cfg.scenario.duration_s = d;
    }
    if let Some(p) = args.policy {
        cfg.simulate.policy = p;
    }
    if let Some(s) = args.common.seed {
        cfg.simulate.seed = s;
    }
    revalidate(&cfg)?;
    let handle = resolve_policy(&cfg.simulate.policy, &cfg)?;
    let out = &args.common.out;
    prepare_out(out)?;

    let mut agent = SharedPolicy::from_handle(&handle)?;
    let trace = netsim::run(&cfg.scenario, &mut agent, cfg.simulate.seed)?;
    let mut w = create(out, "trace.csv")?;
    trace.write_csv(&mut w)?;
    w.flush()?;
    write_json(
        out,
        "summary.json",
        &SimulateReport {
            policy: handle.describe(),
            summary: &trace.summary,
            flows: &trace.flows,
        },
    )?;
    let s = &trace.summary;
    println!(
        "utilization {:.4}  losses {}  windows {}  conservation violations {}",
        s.utilization,
        s.loss_count,
        trace.records.len(),
        s.conservation_violations
    );

    let mut m = RunManifest::new(
        "simulate",
        &args.common.config,
        cfg.simulate.seed,
        out,
        &cfg,
    );
    m.outputs = vec!["trace.csv".into(), "summary.json".into()];
    m.write()
}

pub fn collect(args: CollectArgs) -> Result<()> {
    let mut cfg = load_config(&args.common)?;
    if let Some(d) = args.duration {
        cfg.scenario.duration_s = d;
    }
    if let Some(e) = args.epsilon {
        cfg.collect.epsilon = e;
    }
    if let Some(p) = args.policy {
        cfg.collect.expert = p;
    }
    if let Some(s) = args.common.seed {
        cfg.collect.seed = s;
    }
    revalidate(&cfg)?;
    init_jobs(args.jobs)?;
    let expert = resolve_policy(&cfg.collect.expert, &cfg)?;
    let out = &args.common.out;
    prepare_out(out)?;

    let specs: Vec<CollectSpec> = cfg
        .collect_pairs()
        .into_iter()
        .enumerate()
        .map(|(i, p)| CollectSpec {
            scenario: Scenario {
                topology: Topology {
                    pair_count: p,
                    ..cfg.scenario.topology.clone()
                },
                ..cfg.scenario.clone()
            },
            epsilon: cfg.collect.epsilon,
            seed: cfg.collect.seed.wrapping_add(i as u64),
        })
        .collect();
    let parts = specs
        .par_iter()
        .map(|spec| {
            log::info!(
                "collecting p={} seed={}",
                spec.scenario.topology.pair_count,
                spec.seed
            );
            env::collect(&expert, spec)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let ds = ExperienceDataset::union(parts);
    ds.save(&out.join("dataset.csv"))?;
    println!("{} rows from {} run(s)", ds.len(), specs.len());

    let mut m = RunManifest::new("collect", &args.common.config, cfg.collect.seed, out, &cfg);
    m.outputs = vec!["dataset.csv".into(), "dataset.json".into()];
    m.write()
}

pub fn regress(args: RegressArgs) -> Result<()> {
    let mut cfg = load_config(&args.common)?;
    if let Some(s) = args.common.seed {
        cfg.regression.seed = s;
    }
    revalidate(&cfg)?;
    init_jobs(args.jobs)?;
    require_input(&args.dataset, "dataset")?;
    let ds = ExperienceDataset::load(&args.dataset)
        .map_err(|e| usage(format!("{}: {e}", args.dataset.display())))?;
    let data = FitnessData::from_dataset(&ds, cfg.units, cfg.regression.target)
        .map_err(|e| usage(format!("{}: {e}", args.dataset.display())))?;
    let out = &args.common.out;
    prepare_out(out)?;

    let result = dsr::run_regression(&data, &cfg.regression)?;
    let mut w = create(out, "hall_of_fame.json")?;
    result.write_hall_of_fame(&cfg.regression, &mut w)?;
    w.flush()?;
    let mut w = create(out, "curve.csv")?;
    result.write_curve(&mut w)?;
    w.flush()?;

    println!(
        "{} iterations, {} distinct expressions, stopped by {}",
        result.curve.len(),
        result.expressions_evaluated,
        result.stopped_by
    );
    println!("pareto front (complexity, fitness, expression):");
    for e in result.hall_of_fame.pareto_front() {
        println!("{:>4}  {:.6}  {}", e.complexity, e.fitness, e.infix);
    }

    let mut m = RunManifest::new(
        "regress",
        &args.common.config,
        cfg.regression.seed,
        out,
        &cfg,
    );
    m.inputs = vec![args.dataset.display().to_string()];
    m.outputs = vec!["hall_of_fame.json".into(), "curve.csv".into()];
    m.write()
}

#[derive(Serialize)]
struct HoldoutReport {
    policy: String,
    dataset: String,
    rows: usize,
    nrmse: Option<f64>,
    fitness: f64,
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let mut cfg = load_config(&args.common)?;
    match args.phase {
        PhaseArg::One => cfg.evaluate.phase = PhaseSpec::phase_one(),
        PhaseArg::Two => cfg.evaluate.phase = PhaseSpec::phase_two(),
        PhaseArg::Config | PhaseArg::None => {}
    }
    if let Some(d) = args.duration {
        cfg.evaluate.phase.duration_s = d;
    }
    if let Some(s) = args.common.seed {
        cfg.evaluate.phase.seeds = vec![s];
    }
    revalidate(&cfg)?;
    init_jobs(args.jobs)?;
    if args.phase == PhaseArg::None && args.holdout.is_none() {
        return Err(usage(
            "nothing to evaluate: pass --holdout or a phase other than `none`",
        ));
    }
    let handle = resolve_policy(&args.policy, &cfg)?;
    let holdout = match &args.holdout {
        Some(path) => {
            let policy = require_symbolic(&handle, "--holdout")?;
            require_input(path, "holdout dataset")?;
            Some((path.clone(), policy))
        }
        None => None,
    };
    let out = &args.common.out;
    prepare_out(out)?;
    let mut outputs = Vec::new();
    let mut inputs = Vec::new();

    if args.phase != PhaseArg::None {
        let result = eval::run_phase(&cfg.evaluate.phase, &handle)?;
        let mut w = create(out, "metrics.csv")?;
        result.write_csv(&mut w)?;
        w.flush()?;
        write_json(out, "evaluation.json", &result)?;
        outputs.extend(["metrics.csv".to_string(), "evaluation.json".to_string()]);
        println!("{} scenarios under {}", result.rows.len(), result.policy);
        for r in &result.rows {
            println!(
                "{:<18} util {:.4}  losses {:>8}  jain {}  actions [{:.3}, {:.3}]",
                r.scenario,
                r.utilization,
                r.loss_count,
                r.jain.map_or("-".to_string(), |j| format!("{j:.4}")),
                r.min_action,
                r.max_action
            );
        }
    }

    if let Some((path, policy)) = holdout {
        let report = holdout_fitness(&path, &policy, cfg.units)?;
        println!(
            "behavioural-cloning fitness {:.6} over {} rows",
            report.fitness, report.rows
        );
        write_json(out, "holdout.json", &report)?;
        outputs.push("holdout.json".into());
        inputs.push(path.display().to_string());
    }

    let seed = cfg.evaluate.phase.seeds[0];
    let mut m = RunManifest::new("evaluate", &args.common.config, seed, out, &cfg);
    m.inputs = inputs;
    m.outputs = outputs;
    m.write()
}

fn holdout_fitness(path: &Path, policy: &SymbolicPolicy, units: Units) -> Result<HoldoutReport> {
    let shown = path.display().to_string();
    let ds = ExperienceDataset::load(path).map_err(|e| usage(format!("{shown}: {e}")))?;
    let data = FitnessData::from_dataset(&ds, units, TargetMode::Action)
        .map_err(|e| usage(format!("{shown}: {e}")))?;
    Ok(HoldoutReport {
        policy: policy.expr.to_infix(),
        dataset: shown,
        rows: data.len(),
        nrmse: data.nrmse(&policy.expr),
        fitness: data.fitness(&policy.expr),
    })
}

#[derive(Serialize)]
struct ContourSummary {
    capacity_bps: f64,
    c_s: f64,
    file: String,
    straddles_unit_action: bool,
    unit_level_cells: usize,
}

#[derive(Serialize)]
struct SpanSummary {
    capacity_bps: f64,
    rtt_ratio: f64,
    points: usize,
    increase_fraction: f64,
}

#[derive(Default, Serialize)]
struct AnalysisReport {
    policy: String,
    contour: Vec<ContourSummary>,
    cosine_span: Vec<SpanSummary>,
    max_action_gap: Option<f64>,
}

pub fn analyze(args: AnalyzeArgs) -> Result<()> {
    let cfg = load_config(&args.common)?;
    let handle = resolve_policy(&args.policy, &cfg)?;
    let policy = require_symbolic(&handle, "analyze")?;
    let root_is_cos = policy.expr.root() == symcc_core::expr::Token::Cos;
    if args.figure == Figure::CosineSpan && !root_is_cos {
        return Err(usage(format!(
            "cosine-span needs a cos-rooted policy, got `{}`",
            policy.expr.to_infix()
        )));
    }
    let out = &args.common.out;
    prepare_out(out)?;
    let a = &cfg.analyze;
    let min_rtt = |cap: f64| {
        Topology {
            bottleneck_capacity_bps: cap,
            ..cfg.scenario.topology.clone()
        }
        .analytic_min_rtt()
    };
    let slices: Vec<Slice> = a
        .capacities_bps
        .iter()
        .flat_map(|&cap| a.rtt_ratios.iter().map(move |&r| (cap, r)))
        .map(|(cap, r)| Slice {
            rtt_ratio: r,
            c: min_rtt(cap),
        })
        .collect();
    let axis = Axis {
        points: a.points,
        ..a.grid.i_ratio
    };
    let mut report = AnalysisReport {
        policy: policy.expr.to_infix(),
        ..Default::default()
    };
    let mut outputs = Vec::new();
    let wants = |f: Figure| args.figure == f || args.figure == Figure::All;

    if wants(Figure::Contour) {
        for &cap in &a.capacities_bps {
            let c = min_rtt(cap);
            let grid = eval::contour_grid(&policy, c, a.grid);
            let file = format!("contour_{}M.csv", cap / 1e6);
            let mut w = create(out, &file)?;
            grid.write_csv(&mut w)?;
            w.flush()?;
            report.contour.push(ContourSummary {
                capacity_bps: cap,
                c_s: c,
                straddles_unit_action: grid.straddles(1.0),
                unit_level_cells: grid.level_set(1.0).len(),
                file: file.clone(),
            });
            outputs.push(file);
        }
    }
    if wants(Figure::CosineSpan) {
        if root_is_cos {
            let points = eval::cosine_span(&policy, &slices, axis)?;
            let mut w = create(out, "cosine_span.csv")?;
            eval::write_rows(&points, &mut w)?;
            w.flush()?;
            outputs.push("cosine_span.csv".into());
            for (k, s) in slices.iter().enumerate() {
                let chunk = &points[k * a.points..(k + 1) * a.points];
                let inc = chunk.iter().filter(|p| p.action > 1.0).count();
                report.cosine_span.push(SpanSummary {
                    capacity_bps: a.capacities_bps[k / a.rtt_ratios.len()],
                    rtt_ratio: s.rtt_ratio,
                    points: a.points,
                    increase_fraction: inc as f64 / a.points as f64,
                });
            }
        } else {
            log::warn!(
                "skipping cosine span: `{}` is not cos-rooted",
                report.policy
            );
        }
    }
    if wants(Figure::Response) {
        let points = eval::intersend_response(&policy, &slices, axis);
        let mut w = create(out, "response.csv")?;
        eval::write_rows(&points, &mut w)?;
        w.flush()?;
        outputs.push("response.csv".into());
        report.max_action_gap = Some(eval::max_action_gap(&points));
    }
    write_json(out, "analysis.json", &report)?;
    outputs.push("analysis.json".into());
    for c in &report.contour {
        println!(
            "contour {:>6} Mbps: unit level set {} cells",
            c.capacity_bps / 1e6,
            c.unit_level_cells
        );
    }
    for s in &report.cosine_span {
        println!(
            "cosine span {:>6} Mbps, rtt ratio {}: {:.3} increase",
            s.capacity_bps / 1e6,
            s.rtt_ratio,
            s.increase_fraction
        );
    }

    let mut m = RunManifest::new("analyze", &args.common.config, 0, out, &cfg);
    m.outputs = outputs;
    m.write()
}
