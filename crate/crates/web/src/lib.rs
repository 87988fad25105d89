//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export takes and returns JSON strings. The plain functions
//! (`*_json`) hold the logic and are what the native tests call.

use egoae::demo::{limitation_graph, run_limitation_demo, LimitationConfig};
use egoae::graph::parse_edge_list;
use egoae::matcher::{build_index, MatchOptions};
use egoae::orbits::orbit_partition;
use egoae::templates::{catalogue, parse_template, TemplateJson};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Upper bound on graph size accepted from the page.
const MAX_NODES: usize = 2_000;

#[derive(Serialize)]
struct CatalogueEntry {
    name: String,
    template: TemplateJson,
    orbits: Vec<Vec<usize>>,
}

pub fn catalogue_json() -> String {
    let entries: Vec<_> = catalogue::all()
        .into_iter()
        .chain([catalogue::s11_cyclic()])
        .map(|t| CatalogueEntry {
            name: t.name().unwrap_or_default().to_owned(),
            orbits: orbit_partition(&t).orbits(),
            template: t.to_json(),
        })
        .collect();
    serde_json::to_string(&entries).expect("serializable")
}

/// Orbit report `{"orbits": [...], "group_size": n}` for one template object.
pub fn orbits_json(template: &str) -> Result<String, String> {
    let t = parse_template(template).map_err(|e| e.to_string())?;
    serde_json::to_string(&orbit_partition(&t).report()).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct EgoView {
    ego: usize,
    num_nodes: usize,
    edges: Vec<[usize; 2]>,
    matches: Vec<Vec<usize>>,
    ae_sets: Vec<Vec<usize>>,
    orbits: Vec<Vec<usize>>,
    truncated: bool,
}

/// Matches of `template` at `ego` in an edge list, with the Ego-AE sets.
/// Node ids in the output are the dense ids of the loaded graph.
pub fn ego_view_json(edges: &str, directed: bool, template: &str, ego: usize, max_matches: usize) -> Result<String, String> {
    let loaded = parse_edge_list(edges, directed).map_err(|e| e.to_string())?;
    let g = &loaded.graph;
    if g.num_nodes() > MAX_NODES {
        return Err(format!("graph has {} nodes; the demo accepts at most {MAX_NODES}", g.num_nodes()));
    }
    if ego >= g.num_nodes() {
        return Err(format!("ego {ego} outside graph of {} nodes", g.num_nodes()));
    }
    let t = parse_template(template).map_err(|e| e.to_string())?;
    let opts = MatchOptions {
        max_matches_per_ego: max_matches.max(1),
        ..MatchOptions::default()
    };
    let idx = build_index(g, &t, &opts).map_err(|e| e.to_string())?;
    let view = EgoView {
        ego,
        num_nodes: g.num_nodes(),
        edges: g.edges().iter().map(|&(u, v)| [u, v]).collect(),
        matches: idx.matches(ego).to_vecs(),
        ae_sets: idx.ae_sets(ego).to_vec(),
        orbits: idx.partition().orbits(),
        truncated: idx.counters().truncated_egos > 0,
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

/// Runs the limitation check and returns its report, plus the graph it used.
pub fn limitation_json(max_layers: usize, seeds: usize) -> Result<String, String> {
    if max_layers == 0 || max_layers > 8 || seeds == 0 || seeds > 100 {
        return Err("layers must be in 1..=8 and seeds in 1..=100".into());
    }
    let config = LimitationConfig {
        max_layers,
        seeds,
        ..LimitationConfig::default()
    };
    let report = run_limitation_demo(&config).map_err(|e| e.to_string())?;
    let g = limitation_graph();
    let mut value = serde_json::to_value(&report).map_err(|e| e.to_string())?;
    value["edges"] = serde_json::to_value(g.edges()).map_err(|e| e.to_string())?;
    value["num_nodes"] = g.num_nodes().into();
    Ok(value.to_string())
}

#[wasm_bindgen]
pub fn catalogue() -> String {
    catalogue_json()
}

#[wasm_bindgen]
pub fn orbits(template: &str) -> Result<String, JsValue> {
    orbits_json(template).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = egoView)]
pub fn ego_view(edges: &str, directed: bool, template: &str, ego: usize, max_matches: usize) -> Result<String, JsValue> {
    ego_view_json(edges, directed, template, ego, max_matches).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = limitationDemo)]
pub fn limitation_demo(max_layers: usize, seeds: usize) -> Result<String, JsValue> {
    limitation_json(max_layers, seeds).map_err(|e| JsValue::from_str(&e))
}
