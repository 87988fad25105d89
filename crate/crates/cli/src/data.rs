use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use egoae::graph::{load_edge_list, load_features, load_labels, FeatureMatrix, LabelVector, LoadedGraph};
use egoae::templates::{catalogue, parse_templates, AnchoredTemplate, Domain};

use crate::args::{GlobalArgs, GraphArgs, LabeledArgs, TemplateArgs};
use crate::InputError;

pub struct Dataset {
    pub loaded: LoadedGraph,
    pub features: FeatureMatrix,
    pub labels: LabelVector,
}

pub fn directed(global: &GlobalArgs) -> bool {
    global.directed && !global.ignore_direction
}

pub fn load_graph(global: &GlobalArgs, args: &GraphArgs) -> Result<LoadedGraph> {
    let loaded = load_edge_list(&args.edges, directed(global))
        .with_context(|| format!("loading edge list {}", args.edges.display()))?;
    log::info!(
        "graph: {} nodes, {} edges, directed = {}",
        loaded.graph.num_nodes(),
        loaded.graph.num_edges(),
        loaded.graph.is_directed()
    );
    Ok(loaded)
}

pub fn load_dataset(global: &GlobalArgs, args: &LabeledArgs) -> Result<Dataset> {
    let loaded = load_graph(global, &args.graph)?;
    let n = loaded.graph.num_nodes();
    let features = if global.dummy_features {
        FeatureMatrix::ones(n)
    } else if let Some(dim) = global.random_features {
        FeatureMatrix::random(n, dim, global.seed)
    } else if let Some(path) = &args.features {
        load_features(path, n).with_context(|| format!("loading features {}", path.display()))?
    } else {
        log::warn!("no feature file given; using all-ones features");
        FeatureMatrix::ones(n)
    };
    let features = if args.row_normalize { features.row_normalized() } else { features };
    let labels = load_labels(&args.labels, n, |id| loaded.dense_id(id))
        .with_context(|| format!("loading labels {}", args.labels.display()))?;
    Ok(Dataset {
        loaded,
        features,
        labels,
    })
}

pub fn resolve_templates(args: &TemplateArgs, cap: usize) -> Result<Vec<AnchoredTemplate>> {
    if let Some(path) = &args.templates {
        read_templates(path, cap)
    } else if let Some(domain) = &args.domain {
        Ok(catalogue::for_domain(domain.parse::<Domain>()?))
    } else if let Some(names) = &args.template {
        names
            .iter()
            .map(|name| {
                catalogue::by_name(name)
                    .ok_or_else(|| InputError(format!("no catalogue template named {name:?}")).into())
            })
            .collect()
    } else {
        bail!(InputError("specify one of --templates, --domain or --template".into()))
    }
}

pub fn read_templates(path: &Path, cap: usize) -> Result<Vec<AnchoredTemplate>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_templates(&text, cap).with_context(|| format!("parsing templates in {}", path.display()))
}

pub fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

/// Writes the dense-to-original id table when the loader renumbered nodes.
pub fn write_id_map(dir: &Path, loaded: &LoadedGraph) -> Result<()> {
    if loaded.was_remapped() {
        write(dir, "id_map.csv", loaded.id_map_csv())?;
    }
    Ok(())
}
