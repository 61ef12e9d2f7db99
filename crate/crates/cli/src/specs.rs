//! Parsing of graph, weighting, event and walk descriptions.

use std::fs;
use std::path::Path;

use lipwalk::graph::{generate, parse_graph, GraphKind};
use lipwalk::oracle::EventKind;
use lipwalk::walk::{PolicyKind, ThetaRule, WalkSpec};
use lipwalk::weighting::{
    bottleneck_weighting, parse_weighting, random_lipschitz_weighting, target_decay_weighting, uniform_weighting,
    EdgeWeighting,
};
use lipwalk::{Graph, VertexSet};
use rand::SeedableRng;
use rand_xoshiro::SplitMix64;
use serde::Serialize;

use crate::cli::{GraphArgs, WeightArgs};
use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Serialize)]
pub struct GraphInfo {
    pub source: String,
    pub n: usize,
    pub m: usize,
    pub min_degree: usize,
    pub max_degree: usize,
}

impl GraphInfo {
    pub fn new(source: String, g: &Graph) -> Self {
        Self {
            source,
            n: g.n(),
            m: g.m(),
            min_degree: g.min_degree(),
            max_degree: g.max_degree(),
        }
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_graph(args: &GraphArgs, seed: Option<u64>) -> CliResult<(Graph, GraphInfo)> {
    let g = match (&args.graph, &args.generate) {
        (Some(path), None) => {
            let g = parse_graph(&read(path)?).map_err(|source| CliError::File {
                path: path.display().to_string(),
                source,
            })?;
            (g, path.display().to_string())
        }
        (None, Some(spec)) => {
            let kind = GraphKind::parse(spec)?;
            let seed = match (kind.is_random(), seed) {
                (true, None) => {
                    return Err(CliError::Input(format!("`{spec}` is a random family and needs --seed")));
                }
                (_, s) => s.unwrap_or(0),
            };
            (generate(&kind, seed)?, spec.clone())
        }
        _ => {
            return Err(CliError::Input(
                "exactly one of --graph or --generate is required".into(),
            ))
        }
    };
    let info = GraphInfo::new(g.1, &g.0);
    Ok((g.0, info))
}

pub fn maybe_graph(args: &GraphArgs, seed: Option<u64>) -> CliResult<Option<(Graph, GraphInfo)>> {
    if args.graph.is_none() && args.generate.is_none() {
        return Ok(None);
    }
    load_graph(args, seed).map(Some)
}

fn number<T: std::str::FromStr>(spec: &str, field: &str, what: &str) -> CliResult<T> {
    field
        .parse()
        .map_err(|_| CliError::Input(format!("`{spec}`: {what} `{field}` is not a valid number")))
}

pub fn vertex_list(n: usize, spec: &str, list: &str) -> CliResult<VertexSet> {
    let indices = list
        .split(',')
        .map(|v| number::<usize>(spec, v.trim(), "vertex"))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(VertexSet::from_indices(n, indices)?)
}

/// Resolves the weighting and returns it with a label for reports.
pub fn load_weighting(args: &WeightArgs, g: &Graph, seed: Option<u64>) -> CliResult<(EdgeWeighting, String)> {
    if let Some(path) = &args.weighting_file {
        let w = parse_weighting(g, &read(path)?).map_err(|source| CliError::File {
            path: path.display().to_string(),
            source,
        })?;
        return Ok((w, format!("file:{}", path.display())));
    }
    let spec = args.weighting.as_str();
    let parts: Vec<&str> = spec.split(':').collect();
    let w = match parts.as_slice() {
        ["uniform"] => uniform_weighting(g),
        ["target_decay" | "target-decay", theta, targets] => {
            let theta: f64 = number(spec, theta, "θ")?;
            target_decay_weighting(g, &vertex_list(g.n(), spec, targets)?, theta)?
        }
        ["bottleneck", beta] => bottleneck_weighting(g, number(spec, beta, "β")?)?,
        ["random", sigma, rest @ ..] if rest.len() <= 1 => {
            let sigma: f64 = number(spec, sigma, "σ")?;
            let perturbations = match rest {
                [p] => number(spec, p, "perturbation count")?,
                _ => 4 * g.m(),
            };
            let seed = seed.ok_or_else(|| CliError::Input(format!("weighting `{spec}` needs --seed")))?;
            let mut rng = SplitMix64::seed_from_u64(seed);
            random_lipschitz_weighting(g, sigma, perturbations, &mut rng)?.1
        }
        _ => return Err(CliError::Input(format!("unknown weighting `{spec}`"))),
    };
    Ok((w, spec.to_string()))
}

pub fn parse_event(n: usize, spec: &str) -> CliResult<EventKind> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    Ok(match kind {
        "hit" | "hit_any" | "hit-any" => EventKind::HitAny(vertex_list(n, spec, arg)?),
        "hit_all" | "hit-all" => EventKind::HitAll(vertex_list(n, spec, arg)?),
        "cover" if arg.is_empty() => EventKind::CoverAll,
        "return" if arg.is_empty() => EventKind::ReturnToStart,
        _ => return Err(CliError::Input(format!("unknown event `{spec}`"))),
    })
}

pub fn parse_policy(spec: &str) -> CliResult<PolicyKind> {
    Ok(match spec.split_once(':') {
        None if spec == "uniform" => PolicyKind::Uniform,
        None if spec == "nearest_unvisited" || spec == "nearest-unvisited" => PolicyKind::NearestUnvisited,
        Some(("toward", v)) => PolicyKind::TowardVertex {
            target: number(spec, v, "vertex")?,
        },
        _ => return Err(CliError::Input(format!("unknown policy `{spec}`"))),
    })
}

pub fn parse_theta(spec: Option<&str>, psi: Option<f64>) -> CliResult<ThetaRule> {
    Ok(match spec {
        None | Some("capped") => ThetaRule::Capped { psi },
        Some("full") => ThetaRule::Full,
        Some(v) => ThetaRule::Fixed {
            theta: number(v, v, "θ")?,
        },
    })
}

pub fn parse_walk(kind: &str, eps: f64, theta: ThetaRule, policy: PolicyKind) -> CliResult<WalkSpec> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(CliError::Input(format!("--eps must lie in [0, 1], got {eps}")));
    }
    Ok(match kind {
        "srw" => WalkSpec::Srw,
        "tbrw" => WalkSpec::Tbrw { eps, policy },
        "phase" => WalkSpec::Phase { eps, theta },
        "crw" => WalkSpec::Crw { policy },
        other => return Err(CliError::Input(format!("unknown walk `{other}`"))),
    })
}
