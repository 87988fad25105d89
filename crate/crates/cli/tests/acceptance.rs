//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! blocking criterion fails. `cargo test -p egoae-cli --test acceptance`.
//!
//! The Cora check is skipped unless `EGOAE_CORA_DIR` names a directory with
//! `edges.txt`, `features.csv` and `labels.csv`.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use egoae::demo::{limitation_graph, CYCLE_NODE, TRIANGLE_NODE};
use egoae::graph::{make_split, FeatureMatrix, Graph, LabelVector};
use egoae::matcher::{build_index, derive_index, EgoAeIndex, MatchCounters, MatchList, MatchOptions};
use egoae::model::mpnn::MpnnBaseline;
use egoae::model::{train, GrapeModel, Mode, ModelConfig};
use egoae::orbits::orbit_partition;
use egoae::search::{search, SearchConfig};
use egoae::synthetic::{cycle_vs_triangle, gnp, planted_triangles};
use egoae::templates::{catalogue, Mutation};
use ndarray::Array2;
use oracles::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

/// Template name, expected orbits when stated explicitly, orbit count.
type OrbitExpectation = (&'static str, Option<Vec<Vec<usize>>>, usize);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn orbit_catalogue() -> Outcome {
    let start = Instant::now();
    let singletons = |n: usize| (0..n).map(|u| vec![u]).collect::<Vec<_>>();
    let expected: Vec<OrbitExpectation> = vec![
        ("S1", Some(vec![vec![0], vec![1]]), 2),
        ("S2", Some(singletons(3)), 3),
        ("S3", Some(vec![vec![0], vec![1, 2]]), 2),
        ("S4", Some(singletons(4)), 4),
        ("S5", Some(vec![vec![0], vec![1, 2, 3]]), 2),
        ("S6", Some(vec![vec![0], vec![1, 2], vec![3]]), 3),
        ("S7", None, 2),
        ("S8", None, 2),
        ("S9", None, 2),
        ("S10", Some(singletons(3)), 3),
        ("S11", Some(vec![vec![0], vec![1, 2]]), 2),
    ];
    for (name, sets, count) in expected {
        let t = catalogue::by_name(name).ok_or_else(|| format!("{name} missing"))?;
        let got = orbit_partition(&t).orbits();
        let oracle = naive_orbits(&t);
        ensure(got == oracle, || format!("{name}: {got:?} but enumeration gives {oracle:?}"))?;
        ensure(got.len() == count, || format!("{name}: {} orbits, expected {count}", got.len()))?;
        if let Some(sets) = sets {
            ensure(got == sets, || format!("{name}: {got:?}, expected {sets:?}"))?;
        }
    }
    let cyclic = catalogue::s11_cyclic();
    ensure(orbit_partition(&cyclic).orbits() == naive_orbits(&cyclic), || "S11-cyclic differs from oracle".into())?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("11 templates (+ cyclic S11 variant) in {elapsed:.2?}"))
}

fn matcher_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut total_matches = 0;
    for i in 0..50 {
        let n = rng.random_range(10..=60);
        let degree: f64 = rng.random_range(2.0..5.0);
        let directed = i % 5 == 4;
        let g = gnp(n, degree / n as f64, directed, 1000 + i as u64);
        let adj = graph_adjacency(&g);
        for _ in 0..10 {
            let t = random_template(&mut rng, 5, directed, 0.3);
            for ego in 0..n {
                let (got, _) = egoae::matcher::match_template_with(&g, &t, ego, usize::MAX).map_err(|e| e.to_string())?;
                let expected = naive_matches(&adj, &t, ego);
                ensure(got.to_vecs() == expected, || {
                    format!("graph {i} (n={n}), template {t}, ego {ego}: {} vs {} matches", got.len(), expected.len())
                })?;
                total_matches += expected.len();
            }
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!("50 graphs x 10 templates, {total_matches} matches, in {elapsed:.2?}"))
}

fn incremental_soundness() -> Outcome {
    let start = Instant::now();
    let opts = MatchOptions::unlimited();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut steps = 0;
    for chain in 0..25 {
        let directed = chain % 4 == 3;
        let n = rng.random_range(20..=40);
        let g = gnp(n, 3.5 / n as f64, directed, 500 + chain as u64);
        let mut t = random_template(&mut rng, 2, directed, 0.0);
        let mut idx = build_index(&g, &t, &opts).map_err(|e| e.to_string())?;
        for depth in 0..4 {
            let Some(m) = random_mutation(&t, &mut rng, 6) else { break };
            let child = t.apply(&m, 6).map_err(|e| e.to_string())?;
            let derived = derive_index(&g, &idx, &m, &opts).map_err(|e| e.to_string())?;
            let fresh = build_index(&g, &child, &opts).map_err(|e| e.to_string())?;
            ensure(derived == fresh, || format!("chain {chain}, depth {depth}: {child} differs from fresh build"))?;
            check_index(&g, &derived).map_err(|e| format!("chain {chain}, depth {depth}: {e}"))?;
            t = child;
            idx = derived;
            steps += 1;
        }
    }
    let ex = worked_example();
    let parent = build_index(&ex.graph, &ex.template, &opts).map_err(|e| e.to_string())?;
    ensure(parent.matches(ex.ego).to_vecs() == ex.parent_matches, || "worked example: parent matches differ".into())?;
    let by_node = derive_index(&ex.graph, &parent, &ex.node_mutation, &opts).map_err(|e| e.to_string())?;
    ensure(by_node.matches(ex.ego).to_vecs() == ex.node_child_matches, || {
        format!("worked example node mutation: {:?}", by_node.matches(ex.ego).to_vecs())
    })?;
    let by_edge = derive_index(&ex.graph, &parent, &ex.edge_mutation, &opts).map_err(|e| e.to_string())?;
    ensure(by_edge.matches(ex.ego).to_vecs() == ex.edge_child_matches, || {
        format!("worked example edge mutation: {:?}", by_edge.matches(ex.ego).to_vecs())
    })?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(30))?;
    Ok(format!("{steps} derivations over 25 chains + worked example, in {elapsed:.2?}"))
}

/// Each step of the chain is timed three times both ways; the fastest
/// repetition of each side is compared, so a cold first pass cannot decide
/// the outcome in either direction.
fn incremental_speed() -> Outcome {
    const REPEATS: usize = 3;
    let g = gnp(2000, 0.005, false, 0);
    let opts = MatchOptions::unlimited();
    let chain = [
        Mutation::AddNode { attach_to: 1, outward: true },
        Mutation::AddNode { attach_to: 2, outward: true },
        Mutation::AddEdge { from: 0, to: 3 },
    ];
    let mut t = catalogue::s1();
    let mut parent = build_index(&g, &t, &opts).map_err(|e| e.to_string())?;
    let (mut inc, mut scratch) = (MatchCounters::default(), MatchCounters::default());
    let (mut inc_time, mut scratch_time) = (Duration::ZERO, Duration::ZERO);
    for m in &chain {
        let child = t.apply(m, 6).map_err(|e| e.to_string())?;
        let (mut best_scratch, mut best_inc) = (Duration::MAX, Duration::MAX);
        let mut built = None;
        for _ in 0..REPEATS {
            let s = Instant::now();
            let fresh = build_index(&g, &child, &opts).map_err(|e| e.to_string())?;
            best_scratch = best_scratch.min(s.elapsed());
            let s = Instant::now();
            let derived = derive_index(&g, &parent, m, &opts).map_err(|e| e.to_string())?;
            best_inc = best_inc.min(s.elapsed());
            built = Some((fresh, derived));
        }
        let (fresh, derived) = built.expect("at least one repetition");
        ensure(derived == fresh, || format!("{child}: derived index differs"))?;
        inc += derived.counters();
        scratch += fresh.counters();
        inc_time += best_inc;
        scratch_time += best_scratch;
        t = child;
        parent = derived;
    }
    ensure(inc.candidate_expansions < scratch.candidate_expansions, || {
        format!("expansions incremental {} vs scratch {}", inc.candidate_expansions, scratch.candidate_expansions)
    })?;
    ensure(inc_time < scratch_time, || format!("time incremental {inc_time:.2?} vs scratch {scratch_time:.2?}"))?;
    Ok(format!(
        "expansions {} vs {}, best-of-{REPEATS} time {inc_time:.2?} vs {scratch_time:.2?} ({} final matches)",
        inc.candidate_expansions,
        scratch.candidate_expansions,
        parent.total_matches()
    ))
}

fn limitation_demo() -> Outcome {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_egoae"))
        .args(["demo-limitation", "--layers", "5", "--seeds", "20"])
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(out.status.success(), || format!("exit status {}", out.status))?;
    let report: Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let depths = report["mpnn"].as_array().ok_or("no mpnn entries")?;
    ensure(depths.len() == 5, || format!("{} depths reported", depths.len()))?;
    for d in depths {
        ensure(d["mpnn_max_distance"].as_f64() == Some(0.0), || format!("nonzero distance {d}"))?;
    }
    let distances = report["grape_distances"].as_array().ok_or("no distances")?;
    let separated = distances.iter().filter(|d| d.as_f64().is_some_and(|x| x > 1e-6)).count();
    ensure(separated == 20 && distances.len() == 20, || format!("separated {separated}/{}", distances.len()))?;

    // Independent evidence: color refinement cannot split the graph, and the
    // triangle template matches at triangle nodes only.
    let g = limitation_graph();
    let colors = wl_colors(&g);
    ensure(colors.iter().all(|&c| c == colors[0]), || "1-WL separates the graph".into())?;
    let adj = graph_adjacency(&g);
    let s3 = catalogue::s3();
    ensure(naive_matches(&adj, &s3, CYCLE_NODE).is_empty(), || "triangle matched at a cycle node".into())?;
    ensure(!naive_matches(&adj, &s3, TRIANGLE_NODE).is_empty(), || "no triangle at a triangle node".into())?;
    within(elapsed, Duration::from_secs(10))?;
    let min = distances.iter().filter_map(Value::as_f64).fold(f64::INFINITY, f64::min);
    Ok(format!("depths 1-5 distance 0, 20/20 seeds separated (min {min:.3e}), in {elapsed:.2?}"))
}

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let g = gnp(20, 0.25, false, 11);
    let opts = MatchOptions::unlimited();
    let indices: Vec<EgoAeIndex> = [catalogue::s1(), catalogue::s3()]
        .iter()
        .map(|t| build_index(&g, t, &opts))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let x = FeatureMatrix::random(20, 4, 11).values().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let labels = LabelVector::new((0..20).map(|_| rng.random_range(0..3)).collect());
    let train_nodes: Vec<usize> = (0..12).collect();
    let config = ModelConfig { layers: 2, hidden: 8, seed: 11, ..Default::default() };
    let model = GrapeModel::new(config, &indices, 4, 3).map_err(|e| e.to_string())?;
    let worst = max_gradient_error(&model, &indices, &x, &labels, &train_nodes, 1e-5);
    let elapsed = start.elapsed();
    ensure(worst < 1e-4, || format!("max relative error {worst:.3e}"))?;
    within(elapsed, Duration::from_secs(30))?;
    Ok(format!("{} parameters, max relative error {worst:.2e}, in {elapsed:.2?}", model.params.num_scalars()))
}

fn determinism_and_invariance() -> Outcome {
    let data = cycle_vs_triangle(8, 4, 3);
    let n = data.graph.num_nodes();
    let split = make_split(n, 3).map_err(|e| e.to_string())?;
    let opts = MatchOptions::unlimited();
    let templates = [catalogue::s1(), catalogue::s3()];
    let indices: Vec<EgoAeIndex> = templates
        .iter()
        .map(|t| build_index(&data.graph, t, &opts))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let x = data.features.values();
    let config = ModelConfig { max_epochs: 60, seed: 9, ..Default::default() };

    let run = || -> Result<_, String> {
        let mut model = GrapeModel::new(config.clone(), &indices, 1, 2).map_err(|e| e.to_string())?;
        let report = train(&mut model, &indices, x, &data.labels, &split).map_err(|e| e.to_string())?;
        Ok((model, report))
    };
    let (model, a) = run()?;
    let (_, b) = run()?;
    let bits = |r: &egoae::model::TrainReport| {
        r.log
            .iter()
            .flat_map(|e| [e.epoch as u64, e.train_loss.to_bits(), e.val_acc.to_bits(), e.lr.to_bits()])
            .collect::<Vec<_>>()
    };
    ensure(bits(&a) == bits(&b) && a.log_csv() == b.log_csv(), || "training logs differ between runs".into())?;

    // Same graph from a shuffled, partly reversed edge list, and indices
    // whose sets are handed over in scrambled order.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut edges: Vec<_> = data
        .graph
        .edges()
        .iter()
        .map(|&(u, v)| if rng.random_bool(0.5) { (v, u) } else { (u, v) })
        .collect();
    edges.shuffle(&mut rng);
    let reordered = Graph::new(n, &edges, false);
    let rebuilt: Vec<EgoAeIndex> = templates
        .iter()
        .map(|t| build_index(&reordered, t, &opts))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let scrambled: Vec<EgoAeIndex> = indices
        .iter()
        .map(|idx| {
            let matches: Vec<MatchList> = (0..n).map(|v| idx.matches(v).clone()).collect();
            let sets = (0..n)
                .map(|v| {
                    idx.ae_sets(v)
                        .iter()
                        .map(|s| {
                            let mut s = s.clone();
                            s.shuffle(&mut rng);
                            s
                        })
                        .collect()
                })
                .collect();
            EgoAeIndex::from_parts(idx.template().clone(), matches, sets)
        })
        .collect();
    let reference = model.forward(&indices, x, Mode::Eval).map_err(|e| e.to_string())?;
    for other in [&rebuilt, &scrambled] {
        let trace = model.forward(other, x, Mode::Eval).map_err(|e| e.to_string())?;
        let same = reference.logits.iter().zip(trace.logits.iter()).all(|(p, q)| p.to_bits() == q.to_bits());
        ensure(same, || "forward output changed under neighbor reordering".into())?;
    }

    let mut alphas = a.alphas.concat();
    for seed in 0..20 {
        let m = GrapeModel::new(ModelConfig { seed, ..config.clone() }, &indices, 1, 2).map_err(|e| e.to_string())?;
        let y = Array2::from_shape_fn((n, 1), |(v, _)| 1.0 + (v % 7) as f64);
        alphas.extend(m.forward(&indices, &y, Mode::Eval).map_err(|e| e.to_string())?.alphas().concat());
    }
    let min_alpha = alphas.iter().copied().fold(f64::INFINITY, f64::min);
    ensure(min_alpha >= 0.0, || format!("negative fusion weight {min_alpha}"))?;
    Ok(format!("{} epochs identical, reorderings bitwise equal, min alpha {min_alpha:.3}", a.log.len()))
}

fn genetic_search() -> Outcome {
    let start = Instant::now();
    let mut found = 0;
    let mut lines = Vec::new();
    for seed in 0..10u64 {
        let data = planted_triangles(seed);
        let split = make_split(data.graph.num_nodes(), seed).map_err(|e| e.to_string())?;
        let config = SearchConfig { generations: Some(20), budget: None, seed, ..SearchConfig::default() };
        let result = search(&data.graph, data.features.values(), &data.labels, &split, &config).map_err(|e| e.to_string())?;
        let mut running = f64::NEG_INFINITY;
        for (prev, next) in result.history.iter().zip(result.history.iter().skip(1)) {
            ensure(next.best_so_far >= prev.best_so_far, || {
                format!("seed {seed}: best-so-far fell at generation {}", next.generation)
            })?;
        }
        for r in &result.history {
            running = running.max(r.best_fitness);
            ensure(r.best_so_far == running, || format!("seed {seed}: best-so-far is not the running maximum"))?;
            ensure(r.cache_mismatches == 0, || format!("seed {seed}: cached index disagreed with a fresh build"))?;
        }
        let csv = result.history_csv();
        let mut rows = csv.lines();
        ensure(
            rows.next() == Some("generation,best_fitness,mean_fitness,scratch_match_s,incremental_match_s,eval_s"),
            || "unexpected history header".into(),
        )?;
        let mut parts = [0.0; 3];
        for row in rows {
            let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap_or(f64::NAN)).collect();
            ensure(cols.len() == 6 && cols[3..].iter().all(|c| *c >= 0.0), || format!("bad history row {row}"))?;
            for k in 0..3 {
                parts[k] += cols[3 + k];
            }
        }
        ensure(parts.iter().sum::<f64>() <= result.time.total_s + 1e-3, || {
            format!("seed {seed}: time parts exceed the total")
        })?;
        let hit = result.best.contains_triangle() && result.best_generation <= 20;
        found += usize::from(hit);
        lines.push(format!(
            "seed {seed}: best {:.3} at generation {} triangle={hit} (scratch {:.1}s, incremental {:.1}s, eval {:.1}s)",
            result.history.last().map_or(0.0, |r| r.best_so_far),
            result.best_generation,
            parts[0],
            parts[1],
            parts[2]
        ));
    }
    for l in &lines {
        println!("    {l}");
    }
    let elapsed = start.elapsed();
    ensure(found >= 8, || format!("triangle found in {found}/10 seeds"))?;
    within(elapsed, Duration::from_secs(600))?;
    Ok(format!("triangle-bearing best gene in {found}/10 seeds, in {elapsed:.1?}"))
}

fn synthetic_end_to_end() -> Outcome {
    let opts = MatchOptions::unlimited();
    let (mut grape_acc, mut mpnn_acc) = (Vec::new(), Vec::new());
    for seed in 0..5u64 {
        let data = cycle_vs_triangle(20, 10, seed);
        let split = make_split(data.graph.num_nodes(), seed).map_err(|e| e.to_string())?;
        let x = data.features.values();
        let config = ModelConfig { seed, ..Default::default() };
        let indices: Vec<EgoAeIndex> = [catalogue::s1(), catalogue::s3()]
            .iter()
            .map(|t| build_index(&data.graph, t, &opts))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let mut model = GrapeModel::new(config.clone(), &indices, 1, 2).map_err(|e| e.to_string())?;
        grape_acc.push(train(&mut model, &indices, x, &data.labels, &split).map_err(|e| e.to_string())?.test_acc);
        let mut baseline = MpnnBaseline::new(&data.graph, 1, 2, config).map_err(|e| e.to_string())?;
        mpnn_acc.push(baseline.train(x, &data.labels, &split).map_err(|e| e.to_string())?.test_acc);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (g, m) = (mean(&grape_acc), mean(&mpnn_acc));
    ensure(g - m >= 0.20, || format!("GRAPE {g:.3} vs MPNN {m:.3}"))?;
    Ok(format!("mean test accuracy over 5 seeds: GRAPE(S1,S3) {g:.3}, MPNN {m:.3}"))
}

/// `None` when the data is not available.
fn cora() -> Option<Outcome> {
    let dir = std::env::var_os("EGOAE_CORA_DIR")?;
    let dir = std::path::PathBuf::from(dir);
    let out_dir = tempfile::tempdir().ok()?;
    let run = || -> Outcome {
        let out = Command::new(env!("CARGO_BIN_EXE_egoae"))
            .arg("--out-dir")
            .arg(out_dir.path())
            .arg("train")
            .arg("--edges")
            .arg(dir.join("edges.txt"))
            .arg("--features")
            .arg(dir.join("features.csv"))
            .arg("--labels")
            .arg(dir.join("labels.csv"))
            .args(["--row-normalize", "--domain", "citation", "--runs", "10", "--grid"])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
        let text = std::fs::read_to_string(out_dir.path().join("metrics.json")).map_err(|e| e.to_string())?;
        let metrics: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        let mean = metrics["mean_test_accuracy"].as_f64().ok_or("no mean in metrics")?;
        let std = metrics["std_test_accuracy"].as_f64().unwrap_or(f64::NAN);
        ensure(mean >= 0.84, || format!("mean test accuracy {mean:.3} +- {std:.3}"))?;
        Ok(format!("mean test accuracy {mean:.3} +- {std:.3} over 10 runs"))
    };
    Some(run())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("orbit catalogue", orbit_catalogue),
        ("matcher oracle equivalence", matcher_oracle),
        ("incremental soundness", incremental_soundness),
        ("incremental speed", incremental_speed),
        ("limitation demo", limitation_demo),
        ("gradient check", gradient_check),
        ("determinism and invariance", determinism_and_invariance),
        ("genetic search", genetic_search),
        ("synthetic end-to-end", synthetic_end_to_end),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    match cora() {
        None => println!("SKIP cora reproduction (non-blocking): set EGOAE_CORA_DIR to run"),
        Some(Ok(detail)) => println!("PASS cora reproduction (non-blocking): {detail}"),
        Some(Err(detail)) => println!("FAIL cora reproduction (non-blocking): {detail}"),
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
