//! Evolutionary search over template sets.
//!
//! A gene is a list of `L` anchored templates. Each generation mutates and
//! recombines the pool, scores every new gene by training a reduced-budget
//! network on it, and replaces the worst genes with clones of the best.
//! Templates produced by mutation keep a lineage (parent template plus the
//! mutations applied) so their match index can be derived from the parent's
//! cached index instead of being matched from scratch.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{MatchError, SearchError};
use crate::graph::{Graph, LabelVector, Split};
use crate::matcher::{build_index, derive_index, EgoAeIndex, MatchOptions};
use crate::model::{train, GrapeModel, ModelConfig};
use crate::templates::{catalogue, AnchoredTemplate, CanonicalForm, Mutation, DEFAULT_SIZE_CAP};

/// Resampling attempts before a drawn mutation is skipped.
const MUTATION_TRIES: usize = 10;

/// Where a template came from: `steps` applied in order to `parent` give a
/// template isomorphic (anchor fixed) to the child.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lineage {
    pub parent: AnchoredTemplate,
    pub steps: Vec<Mutation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gene {
    /// Canonically labeled templates.
    pub templates: Vec<AnchoredTemplate>,
    pub lineage: Vec<Option<Lineage>>,
    pub fitness: Option<f64>,
}

impl Gene {
    pub fn new(templates: Vec<AnchoredTemplate>) -> Self {
        let templates: Vec<_> = templates.iter().map(AnchoredTemplate::canonicalized).collect();
        Self {
            lineage: vec![None; templates.len()],
            templates,
            fitness: None,
        }
    }

    /// Sorted canonical forms: two genes with equal keys train identical models.
    pub fn key(&self) -> Vec<CanonicalForm> {
        let mut key: Vec<_> = self.templates.iter().map(AnchoredTemplate::canonical_form).collect();
        key.sort();
        key
    }

    /// Templates in key order, the order in which they become model channels.
    pub fn sorted_templates(&self) -> Vec<AnchoredTemplate> {
        let mut t = self.templates.clone();
        t.sort_by_cached_key(AnchoredTemplate::canonical_form);
        t
    }

    pub fn contains_triangle(&self) -> bool {
        self.templates.iter().any(AnchoredTemplate::contains_triangle)
    }
}

#[derive(Debug, Clone)]
struct CachedIndex {
    index: Arc<EgoAeIndex>,
    /// No ego in this index or any ancestor it was derived from was truncated.
    complete: bool,
}

pub struct GenePool {
    pub genes: Vec<Gene>,
    pub generation: usize,
    /// Gene protected from mutation and crossover, set by [`select`].
    pub elite: Option<usize>,
    pub size_cap: usize,
    rng: ChaCha8Rng,
    match_cache: HashMap<CanonicalForm, CachedIndex>,
    fitness_cache: HashMap<Vec<CanonicalForm>, f64>,
}

impl GenePool {
    pub fn match_cache_len(&self) -> usize {
        self.match_cache.len()
    }

    pub fn cached_index(&self, form: &CanonicalForm) -> Option<&EgoAeIndex> {
        self.match_cache.get(form).map(|c| &*c.index)
    }

    pub fn cached_fitness(&self, key: &[CanonicalForm]) -> Option<f64> {
        self.fitness_cache.get(key).copied()
    }

    fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// `b` genes of `l` edge templates. Directed pools draw each slot from the
/// inward and outward edge templates.
pub fn init_pool(b: usize, l: usize, directed: bool, seed: u64) -> Result<GenePool, SearchError> {
    if b < 2 {
        return Err(SearchError::Config(format!("pool size must be at least 2, got {b}")));
    }
    if l < 1 {
        return Err(SearchError::Config("genes need at least one template".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let genes = (0..b)
        .map(|_| {
            let templates = (0..l)
                .map(|_| {
                    if !directed {
                        catalogue::s1()
                    } else if rng.random_bool(0.5) {
                        catalogue::s7()
                    } else {
                        catalogue::s8()
                    }
                })
                .collect();
            Gene::new(templates)
        })
        .collect();
    Ok(GenePool {
        genes,
        generation: 0,
        elite: None,
        size_cap: DEFAULT_SIZE_CAP,
        rng,
        match_cache: HashMap::new(),
        fitness_cache: HashMap::new(),
    })
}

/// Draws the mutations for one template: a node mutation with probability
/// `p_n`, then an edge mutation with probability `p_e`. Returns the steps
/// taken and the resulting (not yet canonical) template.
pub fn mutate_template(
    t: &AnchoredTemplate,
    p_e: f64,
    p_n: f64,
    cap: usize,
    rng: &mut impl Rng,
) -> (AnchoredTemplate, Vec<Mutation>) {
    let mut current = t.clone();
    let mut steps = Vec::new();
    if rng.random_bool(p_n) {
        for _ in 0..MUTATION_TRIES {
            let attach_to = rng.random_range(0..current.num_nodes());
            let outward = !current.is_directed() || rng.random_bool(0.5);
            let m = Mutation::AddNode { attach_to, outward };
            if let Ok(child) = current.apply(&m, cap) {
                current = child;
                steps.push(m);
                break;
            }
        }
    }
    if rng.random_bool(p_e) {
        let options = current.edge_mutations();
        if !options.is_empty() {
            for _ in 0..MUTATION_TRIES {
                let m = options[rng.random_range(0..options.len())];
                if let Ok(child) = current.apply(&m, cap) {
                    current = child;
                    steps.push(m);
                    break;
                }
            }
        }
    }
    (current, steps)
}

/// Mutates every template of every gene except the elite, in place.
pub fn mutate(pool: &mut GenePool, p_e: f64, p_n: f64) -> Result<(), SearchError> {
    check_probability("edge mutation", p_e)?;
    check_probability("node mutation", p_n)?;
    let cap = pool.size_cap;
    for gi in 0..pool.genes.len() {
        if pool.elite == Some(gi) {
            continue;
        }
        for slot in 0..pool.genes[gi].templates.len() {
            let parent = pool.genes[gi].templates[slot].clone();
            let (child, steps) = mutate_template(&parent, p_e, p_n, cap, pool.rng());
            if steps.is_empty() {
                continue;
            }
            let gene = &mut pool.genes[gi];
            gene.templates[slot] = child.canonicalized();
            gene.lineage[slot] = Some(Lineage { parent, steps });
            gene.fitness = None;
        }
    }
    Ok(())
}

/// Pairs the non-elite genes at random and swaps each aligned slot of a pair
/// with probability `p_c`. With an odd number of participants the last one
/// after shuffling sits out.
pub fn crossover(pool: &mut GenePool, p_c: f64) -> Result<(), SearchError> {
    check_probability("crossover", p_c)?;
    if pool.genes.len() < 2 {
        return Err(SearchError::Config("crossover needs at least two genes".into()));
    }
    let mut order: Vec<usize> = (0..pool.genes.len()).filter(|&i| pool.elite != Some(i)).collect();
    order.shuffle(pool.rng());
    for pair in order.chunks_exact(2) {
        let (a, b) = (pair[0], pair[1]);
        let slots = pool.genes[a].templates.len().min(pool.genes[b].templates.len());
        for s in 0..slots {
            if !pool.rng.random_bool(p_c) {
                continue;
            }
            let (ga, gb) = two_mut(&mut pool.genes, a, b);
            std::mem::swap(&mut ga.templates[s], &mut gb.templates[s]);
            std::mem::swap(&mut ga.lineage[s], &mut gb.lineage[s]);
            if ga.templates[s] != gb.templates[s] {
                ga.fitness = None;
                gb.fitness = None;
            }
        }
    }
    Ok(())
}

fn two_mut<T>(v: &mut [T], a: usize, b: usize) -> (&mut T, &mut T) {
    assert_ne!(a, b);
    if a < b {
        let (lo, hi) = v.split_at_mut(b);
        (&mut lo[a], &mut hi[0])
    } else {
        let (lo, hi) = v.split_at_mut(a);
        (&mut hi[0], &mut lo[b])
    }
}

fn check_probability(what: &str, p: f64) -> Result<(), SearchError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(SearchError::Config(format!("{what} probability {p} outside [0, 1]")))
    }
}

/// Drops the `z` worst genes (lower index first among ties) and appends
/// clones of the best survivors, round-robin over the top `z`. The best
/// survivor becomes the pool's elite.
pub fn select(pool: &mut GenePool, z: usize) -> Result<(), SearchError> {
    let b = pool.genes.len();
    if z >= b {
        return Err(SearchError::Config(format!("elimination size {z} must be below pool size {b}")));
    }
    let fitness = |g: &Gene| g.fitness.unwrap_or(0.0);
    let mut worst_first: Vec<usize> = (0..b).collect();
    worst_first.sort_by(|&i, &j| fitness(&pool.genes[i]).total_cmp(&fitness(&pool.genes[j])).then(i.cmp(&j)));
    let mut removed = worst_first[..z].to_vec();
    removed.sort_unstable();
    let survivors: Vec<Gene> = (0..b)
        .filter(|i| removed.binary_search(i).is_err())
        .map(|i| pool.genes[i].clone())
        .collect();
    let mut ranked: Vec<usize> = (0..survivors.len()).collect();
    ranked.sort_by(|&i, &j| fitness(&survivors[j]).total_cmp(&fitness(&survivors[i])).then(i.cmp(&j)));
    let donors = &ranked[..z.min(ranked.len())];
    let mut genes = survivors.clone();
    for k in 0..z {
        genes.push(survivors[donors[k % donors.len()]].clone());
    }
    pool.elite = Some(ranked[0]);
    pool.genes = genes;
    Ok(())
}

/// Inputs shared by every evaluation.
pub struct EvalContext<'a> {
    pub graph: &'a Graph,
    pub features: &'a Array2<f64>,
    pub labels: &'a LabelVector,
    pub split: &'a Split,
    pub model: ModelConfig,
    pub match_options: MatchOptions,
}

/// What one call to [`evaluate_pool`] did.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EvalStats {
    pub scratch_match: Duration,
    pub incremental_match: Duration,
    pub training: Duration,
    pub scratch_builds: usize,
    pub incremental_builds: usize,
    pub match_cache_hits: usize,
    pub fitness_cache_hits: usize,
    pub trainings: usize,
    pub failed_genes: usize,
    pub candidate_expansions: u64,
    pub node_visits: u64,
}

/// Reduced training budget used to score genes.
pub fn default_eval_config() -> ModelConfig {
    ModelConfig {
        max_epochs: 100,
        patience: 20,
        ..ModelConfig::default()
    }
}

fn index_for(
    pool: &mut GenePool,
    ctx: &EvalContext<'_>,
    template: &AnchoredTemplate,
    lineage: Option<&Lineage>,
    stats: &mut EvalStats,
) -> Result<(), MatchError> {
    let form = template.canonical_form();
    if pool.match_cache.contains_key(&form) {
        stats.match_cache_hits += 1;
        return Ok(());
    }
    let parent = lineage.and_then(|l| {
        pool.match_cache
            .get(&l.parent.canonical_form())
            .filter(|c| c.complete)
            .map(|c| (l, c.index.clone()))
    });
    let entry = if let Some((lineage, parent)) = parent {
        let start = Instant::now();
        let mut current = (*parent).clone();
        let mut truncated = false;
        for step in &lineage.steps {
            current = derive_index(ctx.graph, &current, step, &ctx.match_options)?;
            truncated |= current.counters().truncated_egos > 0;
            let c = current.counters();
            stats.candidate_expansions += c.candidate_expansions;
            stats.node_visits += c.node_visits;
        }
        let (_, perm) = current.template().canonical_relabeling();
        let index = current.relabel(&perm);
        stats.incremental_match += start.elapsed();
        stats.incremental_builds += 1;
        CachedIndex {
            index: Arc::new(index),
            complete: !truncated,
        }
    } else {
        let start = Instant::now();
        let index = build_index(ctx.graph, template, &ctx.match_options)?;
        stats.scratch_match += start.elapsed();
        stats.scratch_builds += 1;
        let c = index.counters();
        stats.candidate_expansions += c.candidate_expansions;
        stats.node_visits += c.node_visits;
        CachedIndex {
            complete: c.truncated_egos == 0,
            index: Arc::new(index),
        }
    };
    debug_assert_eq!(entry.index.template(), template);
    pool.match_cache.insert(form, entry);
    Ok(())
}

fn train_gene(ctx: &EvalContext<'_>, indices: &[Arc<EgoAeIndex>]) -> Result<f64, SearchError> {
    let refs: Vec<&EgoAeIndex> = indices.iter().map(|a| &**a).collect();
    let mut model = GrapeModel::new(
        ctx.model.clone(),
        &refs,
        ctx.features.ncols(),
        ctx.labels.num_classes(),
    )?;
    let report = train(&mut model, &refs, ctx.features, ctx.labels, ctx.split)?;
    Ok(report.best_val_acc)
}

#[cfg(feature = "parallel")]
fn map_jobs<T: Sync, R: Send>(jobs: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    jobs.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_jobs<T: Sync, R: Send>(jobs: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    jobs.iter().map(f).collect()
}

/// Scores every gene whose fitness is unknown. Matching runs first, reusing
/// cached indices and lineage; the distinct untrained genes are then trained
/// independently. A gene whose matching or training fails gets fitness 0.
pub fn evaluate_pool(pool: &mut GenePool, ctx: &EvalContext<'_>) -> EvalStats {
    let mut stats = EvalStats::default();
    let mut pending: BTreeMap<Vec<CanonicalForm>, Vec<usize>> = BTreeMap::new();
    for (i, gene) in pool.genes.iter_mut().enumerate() {
        if gene.fitness.is_some() {
            continue;
        }
        let key = gene.key();
        if let Some(&f) = pool.fitness_cache.get(&key) {
            gene.fitness = Some(f);
            stats.fitness_cache_hits += 1;
        } else {
            pending.entry(key).or_default().push(i);
        }
    }

    let mut jobs = Vec::new();
    for (key, members) in pending {
        let gene = pool.genes[members[0]].clone();
        let mut ok = true;
        for (t, lineage) in gene.templates.iter().zip(&gene.lineage) {
            if let Err(e) = index_for(pool, ctx, t, lineage.as_ref(), &mut stats) {
                log::warn!("matching {t} failed: {e}");
                ok = false;
            }
        }
        if ok {
            let indices: Vec<_> = gene
                .sorted_templates()
                .iter()
                .map(|t| pool.match_cache[&t.canonical_form()].index.clone())
                .collect();
            jobs.push((key, members, Some(indices)));
        } else {
            jobs.push((key, members, None));
        }
    }

    let start = Instant::now();
    let results = map_jobs(&jobs, |(_, _, indices)| match indices {
        Some(indices) => train_gene(ctx, indices),
        None => Err(SearchError::Config("template matching failed".into())),
    });
    stats.training = start.elapsed();

    for ((key, members, indices), result) in jobs.into_iter().zip(results) {
        if indices.is_some() {
            stats.trainings += 1;
        }
        let fitness = result.unwrap_or_else(|e| {
            log::warn!("gene evaluation failed: {e}");
            stats.failed_genes += 1;
            0.0
        });
        pool.fitness_cache.insert(key, fitness);
        for i in members {
            pool.genes[i].fitness = Some(fitness);
        }
    }
    stats
}

/// Scores a single gene with the same caches as [`evaluate_pool`].
pub fn evaluate(pool: &mut GenePool, gene: &Gene, ctx: &EvalContext<'_>) -> (f64, EvalStats) {
    let saved_genes = std::mem::replace(&mut pool.genes, vec![Gene { fitness: None, ..gene.clone() }]);
    let saved_elite = pool.elite.take();
    let stats = evaluate_pool(pool, ctx);
    let fitness = pool.genes[0].fitness.unwrap_or(0.0);
    pool.genes = saved_genes;
    pool.elite = saved_elite;
    (fitness, stats)
}

/// Recomputes up to `samples` randomly chosen cached indices from scratch and
/// returns how many differed from the cached copy.
pub fn verify_match_cache(
    pool: &GenePool,
    ctx: &EvalContext<'_>,
    samples: usize,
    rng: &mut impl Rng,
) -> (usize, usize) {
    let mut forms: Vec<_> = pool.match_cache.keys().cloned().collect();
    forms.sort();
    let picked: Vec<_> = forms.choose_multiple(rng, samples).cloned().collect::<Vec<_>>();
    let mut mismatches = 0;
    for form in &picked {
        let cached = &pool.match_cache[form];
        if !cached.complete {
            continue;
        }
        match build_index(ctx.graph, cached.index.template(), &ctx.match_options) {
            Ok(fresh) if fresh == *cached.index => {}
            _ => {
                log::error!("cached index for {} differs from a fresh build", cached.index.template());
                mismatches += 1;
            }
        }
    }
    (picked.len(), mismatches)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchConfig {
    pub pool_size: usize,
    pub templates_per_gene: usize,
    pub eliminate: usize,
    pub p_node: f64,
    pub p_edge: f64,
    pub p_cross: f64,
    /// Generation limit; `None` runs until the budget is spent.
    pub generations: Option<usize>,
    /// Wall-clock limit checked before each generation.
    pub budget: Option<Duration>,
    pub size_cap: usize,
    pub seed: u64,
    pub eval: ModelConfig,
    pub match_options: MatchOptions,
    /// Cached indices re-verified against fresh builds per generation.
    pub cache_checks: usize,
    /// When `false`, timing columns are written as zeros so that histories
    /// of identical runs compare byte for byte.
    pub record_timing: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            pool_size: 16,
            templates_per_gene: 3,
            eliminate: 4,
            p_node: 0.3,
            p_edge: 0.3,
            p_cross: 0.5,
            generations: None,
            budget: Some(Duration::from_secs(3000)),
            size_cap: DEFAULT_SIZE_CAP,
            seed: 0,
            eval: default_eval_config(),
            match_options: MatchOptions::default(),
            cache_checks: 1,
            record_timing: true,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.pool_size < 2 {
            return Err(SearchError::Config("pool size must be at least 2".into()));
        }
        if self.templates_per_gene < 1 {
            return Err(SearchError::Config("genes need at least one template".into()));
        }
        if self.eliminate >= self.pool_size {
            return Err(SearchError::Config("elimination size must be below pool size".into()));
        }
        check_probability("node mutation", self.p_node)?;
        check_probability("edge mutation", self.p_edge)?;
        check_probability("crossover", self.p_cross)?;
        if self.generations.is_none() && self.budget.is_none() {
            return Err(SearchError::Config("set a generation limit, a budget, or both".into()));
        }
        if self.size_cap < 2 {
            return Err(SearchError::Config("size cap must allow an edge".into()));
        }
        self.eval.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_so_far: f64,
    pub scratch_match_s: f64,
    pub incremental_match_s: f64,
    pub eval_s: f64,
    pub scratch_builds: usize,
    pub incremental_builds: usize,
    pub match_cache_hits: usize,
    pub fitness_cache_hits: usize,
    pub trainings: usize,
    pub failed_genes: usize,
    pub candidate_expansions: u64,
    pub node_visits: u64,
    pub cache_checks: usize,
    pub cache_mismatches: usize,
}

/// Total time per category, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeComposition {
    pub scratch_match_s: f64,
    pub incremental_match_s: f64,
    pub eval_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    pub best: Gene,
    pub best_generation: usize,
    pub history: Vec<GenerationRecord>,
    pub time: TimeComposition,
}

impl SearchResult {
    /// CSV `generation,best_fitness,mean_fitness,scratch_match_s,incremental_match_s,eval_s`.
    pub fn history_csv(&self) -> String {
        let mut out = String::from("generation,best_fitness,mean_fitness,scratch_match_s,incremental_match_s,eval_s\n");
        for r in &self.history {
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{:.6},{:.6}",
                r.generation, r.best_fitness, r.mean_fitness, r.scratch_match_s, r.incremental_match_s, r.eval_s
            );
        }
        out
    }
}

/// Runs the evolutionary loop: evaluate and select the initial pool, then
/// mutate, cross over, evaluate and select once per generation until the
/// generation limit or the budget is reached.
pub fn search(
    g: &Graph,
    x: &Array2<f64>,
    labels: &LabelVector,
    split: &Split,
    config: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    config.validate()?;
    let ctx = EvalContext {
        graph: g,
        features: x,
        labels,
        split,
        model: config.eval.clone(),
        match_options: config.match_options,
    };
    let started = Instant::now();
    let mut pool = init_pool(config.pool_size, config.templates_per_gene, g.is_directed(), config.seed)?;
    pool.size_cap = config.size_cap;
    let mut check_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_cace);
    let mut history = Vec::new();
    let mut best: Option<(Gene, usize)> = None;
    let mut totals = TimeComposition {
        scratch_match_s: 0.0,
        incremental_match_s: 0.0,
        eval_s: 0.0,
        total_s: 0.0,
    };
    let seconds = |d: Duration| if config.record_timing { d.as_secs_f64() } else { 0.0 };

    let mut generation = 0;
    loop {
        if generation > 0 {
            if config.generations.is_some_and(|k| generation > k)
                || config.budget.is_some_and(|b| started.elapsed() >= b)
            {
                break;
            }
            pool.generation = generation;
            mutate(&mut pool, config.p_edge, config.p_node)?;
            crossover(&mut pool, config.p_cross)?;
        }
        let stats = evaluate_pool(&mut pool, &ctx);
        let (checks, mismatches) = verify_match_cache(&pool, &ctx, config.cache_checks, &mut check_rng);

        let fitness: Vec<f64> = pool.genes.iter().map(|g| g.fitness.unwrap_or(0.0)).collect();
        let (top, top_fitness) = fitness
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &f)| if f > acc.1 { (i, f) } else { acc });
        if best.as_ref().is_none_or(|(b, _)| top_fitness > b.fitness.unwrap_or(0.0)) {
            best = Some((pool.genes[top].clone(), generation));
        }
        let best_so_far = best.as_ref().and_then(|(b, _)| b.fitness).unwrap_or(0.0);
        let record = GenerationRecord {
            generation,
            best_fitness: top_fitness,
            mean_fitness: fitness.iter().sum::<f64>() / fitness.len() as f64,
            best_so_far,
            scratch_match_s: seconds(stats.scratch_match),
            incremental_match_s: seconds(stats.incremental_match),
            eval_s: seconds(stats.training),
            scratch_builds: stats.scratch_builds,
            incremental_builds: stats.incremental_builds,
            match_cache_hits: stats.match_cache_hits,
            fitness_cache_hits: stats.fitness_cache_hits,
            trainings: stats.trainings,
            failed_genes: stats.failed_genes,
            candidate_expansions: stats.candidate_expansions,
            node_visits: stats.node_visits,
            cache_checks: checks,
            cache_mismatches: mismatches,
        };
        log::info!(
            "generation {generation}: best {:.4}, mean {:.4}, best so far {:.4}",
            record.best_fitness,
            record.mean_fitness,
            record.best_so_far
        );
        totals.scratch_match_s += record.scratch_match_s;
        totals.incremental_match_s += record.incremental_match_s;
        totals.eval_s += record.eval_s;
        history.push(record);
        select(&mut pool, config.eliminate)?;
        generation += 1;
    }

    totals.total_s = seconds(started.elapsed());
    let (best, best_generation) = best.expect("initial generation is always evaluated");
    Ok(SearchResult {
        best,
        best_generation,
        history,
        time: totals,
    })
}
