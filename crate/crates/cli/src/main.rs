mod args;
mod data;

use std::fmt::Write as _;
use std::io::Write as _;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::Parser;
use egoae::demo::{run_limitation_demo, LimitationConfig};
use egoae::error::{GraphError, MatchError, TemplateError};
use egoae::graph::{make_split, Split};
use egoae::matcher::{build_index, AeSetMode, EgoAeIndex, MatchOptions};
use egoae::model::{train, ChannelInput, Fusion, GrapeModel, ModelConfig, TrainReport};
use egoae::orbits::orbit_partition;
use egoae::search::{default_eval_config, search, SearchConfig};
use egoae::synthetic::{cycle_vs_triangle, planted_triangles, two_star};
use egoae::templates::{catalogue, templates_to_json, Domain, TemplateJson};
use rayon::prelude::*;
use serde::Serialize;

use args::{Cli, Command, GlobalArgs, LabeledArgs, MatchArgs, ModelArgs, SearchArgs, SyntheticKind, TemplateArgs, TemplatesAction};
use data::{load_dataset, load_graph, resolve_templates, write, write_id_map};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EGOAE_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Some(threads) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: could not configure {threads} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

/// 2 for bad input (files, formats, templates), 1 for everything else.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    let input = err.chain().any(|e| {
        e.is::<GraphError>()
            || e.is::<TemplateError>()
            || e.is::<MatchError>()
            || e.is::<std::io::Error>()
            || e.is::<serde_json::Error>()
            || e.is::<InputError>()
    });
    if input {
        2
    } else {
        1
    }
}

/// Invalid arguments or inputs not covered by the library error types.
#[derive(Debug)]
pub(crate) struct InputError(pub(crate) String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn run(cli: &Cli) -> Result<ExitCode> {
    let g = &cli.global;
    match &cli.command {
        Command::Orbits { file } => cmd_orbits(g, file),
        Command::Match {
            data,
            templates,
            matching,
            ego,
        } => cmd_match(g, data, templates, matching, *ego),
        Command::Train {
            data,
            templates,
            model,
            matching,
            runs,
            grid,
        } => cmd_train(g, data, templates, model, matching, *runs, *grid),
        Command::Search {
            data,
            search,
            model,
            matching,
        } => cmd_search(g, data, search, model, matching),
        Command::DemoLimitation { layers, seeds, hidden } => cmd_demo(g, *layers, *seeds, *hidden),
        Command::Templates { action } => cmd_templates(action),
        Command::Generate {
            kind,
            triangles,
            hexagons,
            stars_per_class,
            leaves,
        } => cmd_generate(g, *kind, *triangles, *hexagons, *stars_per_class, *leaves),
    }
}

fn print_json_line(value: &impl Serialize) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn cmd_orbits(g: &GlobalArgs, file: &std::path::Path) -> Result<ExitCode> {
    for t in data::read_templates(file, g.size_cap)? {
        print_json_line(&orbit_partition(&t).report())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn match_options(args: &MatchArgs) -> MatchOptions {
    MatchOptions {
        max_matches_per_ego: args.max_matches,
        ae_mode: if args.multiset { AeSetMode::Multiset } else { AeSetMode::Union },
    }
}

#[derive(Serialize)]
struct EgoRecord<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    template: Option<usize>,
    ego: usize,
    matches: usize,
    ae_sets: &'a [Vec<usize>],
}

fn cmd_match(
    g: &GlobalArgs,
    data: &args::GraphArgs,
    templates: &TemplateArgs,
    matching: &MatchArgs,
    ego: Option<usize>,
) -> Result<ExitCode> {
    let loaded = load_graph(g, data)?;
    let graph = &loaded.graph;
    let templates = resolve_templates(templates, g.size_cap)?;
    if let Some(v) = ego {
        if v >= graph.num_nodes() {
            return Err(InputError(format!("ego {v} outside graph of {} nodes", graph.num_nodes())).into());
        }
    }
    let opts = match_options(matching);
    let several = templates.len() > 1;
    for (ti, t) in templates.iter().enumerate() {
        let idx = build_index(graph, t, &opts).with_context(|| format!("matching {t}"))?;
        let egos: Vec<usize> = match ego {
            Some(v) => vec![v],
            None => (0..graph.num_nodes()).collect(),
        };
        for v in egos {
            print_json_line(&EgoRecord {
                template: several.then_some(ti),
                ego: v,
                matches: idx.matches(v).len(),
                ae_sets: idx.ae_sets(v),
            })?;
        }
    }
    write_id_map(&g.out_dir, &loaded)?;
    Ok(ExitCode::SUCCESS)
}

fn model_config(args: &ModelArgs, base: ModelConfig, seed: u64) -> ModelConfig {
    let mut c = base;
    c.seed = seed;
    if let Some(v) = args.layers {
        c.layers = v;
    }
    if let Some(v) = args.hidden {
        c.hidden = v;
    }
    if let Some(v) = args.dropout {
        c.dropout = v;
    }
    if let Some(v) = args.l2 {
        c.l2 = v;
    }
    if let Some(v) = args.lr {
        c.lr = v;
    }
    if let Some(v) = args.max_epochs {
        c.max_epochs = v;
    }
    if let Some(v) = args.patience {
        c.patience = v;
    }
    if args.per_channel_input {
        c.channel_input = ChannelInput::PerChannel;
    }
    if args.sum_fusion {
        c.fusion = Fusion::Sum;
    }
    if args.freeze_orbit_weights {
        c.learn_orbit_weights = false;
    }
    c
}

struct RunOutcome {
    seed: u64,
    split: Split,
    report: TrainReport,
    model: GrapeModel,
}

fn run_once(
    config: &ModelConfig,
    seed: u64,
    indices: &[EgoAeIndex],
    ds: &data::Dataset,
) -> Result<RunOutcome> {
    let split = make_split(ds.loaded.graph.num_nodes(), seed)?;
    let config = ModelConfig { seed, ..config.clone() };
    let mut model = GrapeModel::new(config, indices, ds.features.dim(), ds.labels.num_classes())?;
    let report = train(&mut model, indices, ds.features.values(), &ds.labels, &split)
        .with_context(|| format!("training run with seed {seed}"))?;
    Ok(RunOutcome {
        seed,
        split,
        report,
        model,
    })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Serialize)]
struct RunMetrics {
    seed: u64,
    test_accuracy: f64,
    val_accuracy: f64,
    train_accuracy: f64,
    best_epoch: usize,
    epochs_run: usize,
    alphas: Vec<Vec<f64>>,
    betas: Vec<Vec<Vec<f64>>>,
}

#[derive(Serialize)]
struct GridPoint {
    config: ModelConfig,
    mean_val_accuracy: f64,
    mean_test_accuracy: f64,
}

#[derive(Serialize)]
struct Metrics {
    templates: Vec<TemplateJson>,
    config: ModelConfig,
    runs: usize,
    seeds: Vec<u64>,
    test_accuracies: Vec<f64>,
    mean_test_accuracy: f64,
    std_test_accuracy: f64,
    mean_val_accuracy: f64,
    checkpoint_run: usize,
    per_run: Vec<RunMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<Vec<GridPoint>>,
}

fn cmd_train(
    g: &GlobalArgs,
    data: &LabeledArgs,
    templates: &TemplateArgs,
    model_args: &ModelArgs,
    matching: &MatchArgs,
    runs: usize,
    grid: bool,
) -> Result<ExitCode> {
    if runs == 0 {
        return Err(InputError("--runs must be at least 1".into()).into());
    }
    let ds = load_dataset(g, data)?;
    let templates = resolve_templates(templates, g.size_cap)?;
    let opts = match_options(matching);
    let indices = templates
        .iter()
        .map(|t| build_index(&ds.loaded.graph, t, &opts).with_context(|| format!("matching {t}")))
        .collect::<Result<Vec<_>>>()?;
    let base = model_config(model_args, ModelConfig::default(), g.seed);
    base.validate().map_err(|e| InputError(e.to_string()))?;
    let configs = if grid { ModelConfig::grid(&base) } else { vec![base] };
    let seeds: Vec<u64> = (0..runs as u64).map(|r| g.seed + r).collect();

    let mut best: Option<(ModelConfig, Vec<RunOutcome>, f64)> = None;
    let mut grid_points = Vec::new();
    for config in &configs {
        let outcomes = seeds
            .par_iter()
            .map(|&s| run_once(config, s, &indices, &ds))
            .collect::<Result<Vec<_>>>()?;
        let vals: Vec<f64> = outcomes.iter().map(|o| o.report.best_val_acc).collect();
        let tests: Vec<f64> = outcomes.iter().map(|o| o.report.test_acc).collect();
        let mean_val = mean_std(&vals).0;
        grid_points.push(GridPoint {
            config: config.clone(),
            mean_val_accuracy: mean_val,
            mean_test_accuracy: mean_std(&tests).0,
        });
        if best.as_ref().is_none_or(|(_, _, v)| mean_val > *v) {
            best = Some((config.clone(), outcomes, mean_val));
        }
    }
    let (config, outcomes, mean_val) = best.expect("at least one configuration");

    let tests: Vec<f64> = outcomes.iter().map(|o| o.report.test_acc).collect();
    let (mean, std) = mean_std(&tests);
    let checkpoint_run = outcomes
        .iter()
        .enumerate()
        .fold(0, |b, (i, o)| if o.report.best_val_acc > outcomes[b].report.best_val_acc { i } else { b });

    let out = &g.out_dir;
    for (r, o) in outcomes.iter().enumerate() {
        let dir = out.join("runs").join(format!("run_{r}"));
        write(&dir, "train_log.csv", o.report.log_csv())?;
        write(&dir, "split.json", serde_json::to_string_pretty(&o.split)?)?;
    }
    let chosen = &outcomes[checkpoint_run];
    write(out, "train_log.csv", chosen.report.log_csv())?;
    write(out, "split.json", serde_json::to_string_pretty(&chosen.split)?)?;
    write(out, "checkpoint.json", serde_json::to_string(&chosen.model)?)?;
    write_id_map(out, &ds.loaded)?;

    let metrics = Metrics {
        templates: templates.iter().map(|t| t.to_json()).collect(),
        config,
        runs,
        seeds: outcomes.iter().map(|o| o.seed).collect(),
        test_accuracies: tests,
        mean_test_accuracy: mean,
        std_test_accuracy: std,
        mean_val_accuracy: mean_val,
        checkpoint_run,
        per_run: outcomes
            .iter()
            .map(|o| RunMetrics {
                seed: o.seed,
                test_accuracy: o.report.test_acc,
                val_accuracy: o.report.best_val_acc,
                train_accuracy: o.report.train_acc,
                best_epoch: o.report.best_epoch,
                epochs_run: o.report.epochs_run,
                alphas: o.report.alphas.clone(),
                betas: o.report.betas.clone(),
            })
            .collect(),
        grid: grid.then_some(grid_points),
    };
    write(out, "metrics.json", serde_json::to_string_pretty(&metrics)?)?;
    println!("test accuracy {:.4} +- {:.4} over {runs} run(s)", mean, std);
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SearchSummary<'a> {
    best_fitness: f64,
    best_generation: usize,
    generations_run: usize,
    contains_triangle: bool,
    best_gene: Vec<TemplateJson>,
    time: egoae::search::TimeComposition,
    split_seed: u64,
    history: &'a [egoae::search::GenerationRecord],
}

fn cmd_search(
    g: &GlobalArgs,
    data: &LabeledArgs,
    args: &SearchArgs,
    model_args: &ModelArgs,
    matching: &MatchArgs,
) -> Result<ExitCode> {
    if !(args.budget >= 0.0 && args.budget.is_finite()) {
        return Err(InputError(format!("invalid budget {}", args.budget)).into());
    }
    let ds = load_dataset(g, data)?;
    let config = SearchConfig {
        pool_size: args.pool_size,
        templates_per_gene: args.templates_per_gene,
        eliminate: args.eliminate,
        p_node: args.p_node,
        p_edge: args.p_edge,
        p_cross: args.p_cross,
        generations: args.generations,
        budget: Some(Duration::from_secs_f64(args.budget)),
        size_cap: g.size_cap,
        seed: g.seed,
        eval: model_config(model_args, default_eval_config(), g.seed),
        match_options: match_options(matching),
        cache_checks: args.cache_checks,
        record_timing: !args.omit_timings,
    };
    config.validate().map_err(|e| InputError(e.to_string()))?;
    let split = make_split(ds.loaded.graph.num_nodes(), g.seed)?;
    let result = search(&ds.loaded.graph, ds.features.values(), &ds.labels, &split, &config)?;

    let out = &g.out_dir;
    write(out, "best_gene.json", templates_to_json(&result.best.templates))?;
    write(out, "search_history.csv", result.history_csv())?;
    write(out, "split.json", serde_json::to_string_pretty(&split)?)?;
    write_id_map(out, &ds.loaded)?;
    let summary = SearchSummary {
        best_fitness: result.best.fitness.unwrap_or(0.0),
        best_generation: result.best_generation,
        generations_run: result.history.len().saturating_sub(1),
        contains_triangle: result.best.contains_triangle(),
        best_gene: result.best.templates.iter().map(|t| t.to_json()).collect(),
        time: result.time,
        split_seed: g.seed,
        history: &result.history,
    };
    write(out, "search_summary.json", serde_json::to_string_pretty(&summary)?)?;

    let t = result.time;
    println!("best fitness {:.4} (generation {})", summary.best_fitness, summary.best_generation);
    println!("time composition (s)");
    println!("  scratch matching     {:>10.3}", t.scratch_match_s);
    println!("  incremental matching {:>10.3}", t.incremental_match_s);
    println!("  model evaluation     {:>10.3}", t.eval_s);
    println!("  total                {:>10.3}", t.total_s);
    Ok(ExitCode::SUCCESS)
}

fn cmd_demo(g: &GlobalArgs, layers: usize, seeds: usize, hidden: usize) -> Result<ExitCode> {
    if layers == 0 || seeds == 0 || hidden == 0 {
        return Err(InputError("--layers, --seeds and --hidden must be positive".into()).into());
    }
    let config = LimitationConfig {
        max_layers: layers,
        seeds,
        hidden,
        base_seed: g.seed,
        ..LimitationConfig::default()
    };
    let report = run_limitation_demo(&config)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    if report.passed {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "demo failed: message passing {}, triangle template separated {}/{} seeds",
            if report.mpnn_passed { "indistinguishable as expected" } else { "separated nodes" },
            report.grape_separated,
            seeds
        );
        Ok(ExitCode::from(1))
    }
}

fn cmd_templates(action: &TemplatesAction) -> Result<ExitCode> {
    match action {
        TemplatesAction::List { domain } => {
            let templates = match domain {
                Some(d) => catalogue::for_domain(d.parse::<Domain>()?),
                None => catalogue::all().into_iter().chain([catalogue::s11_cyclic()]).collect(),
            };
            let mut out = String::new();
            for t in templates {
                let p = orbit_partition(&t);
                let _ = writeln!(
                    out,
                    "{:<11} {:<10} nodes={} orbits={} {}",
                    t.name().unwrap_or("-"),
                    if t.is_directed() { "directed" } else { "undirected" },
                    t.num_nodes(),
                    p.num_orbits(),
                    t
                );
            }
            print!("{out}");
        }
        TemplatesAction::Show { name } => {
            let Some(t) = catalogue::by_name(name) else {
                return Err(InputError(format!("no catalogue template named {name:?}")).into());
            };
            #[derive(Serialize)]
            struct Shown {
                template: TemplateJson,
                orbits: egoae::orbits::OrbitReport,
                canonical_form: String,
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&Shown {
                    template: t.to_json(),
                    orbits: orbit_partition(&t).report(),
                    canonical_form: t.canonical_form().to_string(),
                })?
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_generate(
    g: &GlobalArgs,
    kind: SyntheticKind,
    triangles: usize,
    hexagons: usize,
    stars_per_class: usize,
    leaves: usize,
) -> Result<ExitCode> {
    let ds = match kind {
        SyntheticKind::TwoStar => {
            if stars_per_class == 0 || leaves == 0 {
                bail!(InputError("--stars-per-class and --leaves must be positive".into()));
            }
            two_star(stars_per_class, leaves, g.seed)
        }
        SyntheticKind::CycleVsTriangle => {
            if triangles == 0 && hexagons == 0 {
                bail!(InputError("need at least one triangle or hexagon".into()));
            }
            cycle_vs_triangle(triangles, hexagons, g.seed)
        }
        SyntheticKind::PlantedTriangles => planted_triangles(g.seed),
    };
    let out = &g.out_dir;
    write(out, "edges.txt", ds.graph.to_edge_list())?;
    let mut labels = String::new();
    for (v, l) in ds.labels.labels().iter().enumerate() {
        let _ = writeln!(labels, "{v},{l}");
    }
    write(out, "labels.csv", labels)?;
    let mut features = String::new();
    for row in ds.features.values().rows() {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(features, "{}", cells.join(","));
    }
    write(out, "features.csv", features)?;
    println!(
        "wrote {} nodes, {} edges to {}",
        ds.graph.num_nodes(),
        ds.graph.num_edges(),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}
