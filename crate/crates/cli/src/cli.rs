use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "lipwalk",
    version,
    about = "Batch experiments on weighted and biased random walks"
)]
#[command(args_override_self = true)]
pub struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectrum, spectral gap and (for small graphs) conductance of a weighted walk.
    Spectral(SpectralArgs),
    /// Lipschitz constant and stationary ratio bounds of a weighting.
    LipschitzAudit(LipschitzArgs),
    /// Gap robustness bounds and per-set lemma checks.
    RobustnessAudit(RobustnessArgs),
    /// Monte Carlo cover times.
    CoverSim(CoverArgs),
    /// Exact boosting bounds for one event.
    BoostAudit(BoostArgs),
    /// Exhaustive boosting sweep plus randomized convexity and majorization audits.
    LemmaSweep(SweepArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectral(_) => "spectral",
            Command::LipschitzAudit(_) => "lipschitz-audit",
            Command::RobustnessAudit(_) => "robustness-audit",
            Command::CoverSim(_) => "cover-sim",
            Command::BoostAudit(_) => "boost-audit",
            Command::LemmaSweep(_) => "lemma-sweep",
        }
    }
}

pub const COMMANDS: &[&str] = &[
    "spectral",
    "lipschitz-audit",
    "robustness-audit",
    "cover-sim",
    "boost-audit",
    "lemma-sweep",
];

#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// Edge-list file: an `n m` header followed by `u v` lines.
    #[arg(long, conflicts_with = "generate")]
    pub graph: Option<PathBuf>,
    /// Generator spec, e.g. `cycle:64`, `complete:4`, `hypercube:3`,
    /// `circulant:8:1,2`, `random_regular:512:3`.
    #[arg(long)]
    pub generate: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct WeightArgs {
    /// `uniform`, `target_decay:THETA:V1,V2,..`, `bottleneck:BETA` or
    /// `random:SIGMA[:PERTURBATIONS]`.
    #[arg(long, default_value = "uniform", conflicts_with = "weighting_file")]
    pub weighting: String,
    /// Weighting file with one `u v weight` line per edge.
    #[arg(long)]
    pub weighting_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Seed for every random choice; required by randomized steps.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "lipwalk-out")]
    pub out: PathBuf,
    /// Omit the timestamp line from output files.
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Debug, Args)]
pub struct SpectralArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub weight: WeightArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Analyse the lazy chain `(P + I)/2`.
    #[arg(long)]
    pub lazy: bool,
}

#[derive(Debug, Args)]
pub struct LipschitzArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub weight: WeightArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Also require the weighting to be σ-Lipschitz.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Largest distance audited (default: the diameter).
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub weight: WeightArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Expansion lower bound ψ (default: exact for n <= 24, else γ/2).
    #[arg(long)]
    pub psi: Option<f64>,
    /// Random sets audited.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Also check the bottleneck witness ball for this β.
    #[arg(long)]
    pub witness_beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CoverArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// `srw`, `tbrw`, `phase` or `crw`.
    #[arg(long, default_value = "srw")]
    pub walk: String,
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    /// Phase strategy θ: `capped` (default), `full` or a number.
    #[arg(long)]
    pub theta: Option<String>,
    /// Expansion value used by the capped θ rule on graphs with n > 24.
    #[arg(long)]
    pub psi: Option<f64>,
    /// Controller for `tbrw` and `crw`: `nearest_unvisited`, `uniform` or `toward:V`.
    #[arg(long, default_value = "nearest_unvisited")]
    pub policy: String,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    /// Fixed start vertex (default: rotate over all vertices when n <= 64, else 0).
    #[arg(long)]
    pub start: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BoostArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// `hit:V`, `hit_all:V1,V2`, `hit_any:V1,V2`, `cover` or `return`.
    #[arg(long)]
    pub event: String,
    /// Horizon.
    #[arg(long)]
    pub t: usize,
    #[arg(long)]
    pub eps: f64,
    /// Single η (default: the standard grid for the maximum degree).
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub start: usize,
    /// Audit every start vertex.
    #[arg(long)]
    pub all_starts: bool,
    /// Also run the cover-time lower bound demo with this C.
    #[arg(long)]
    pub cover_c: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep a single graph instead of the catalog.
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Catalog graphs on 2..=max_n vertices.
    #[arg(long, default_value_t = 6)]
    pub max_n: usize,
    #[arg(long, default_value_t = 5)]
    pub max_t: usize,
    #[arg(long, default_value_t = 2)]
    pub max_targets: usize,
    /// Leave out the cover event.
    #[arg(long)]
    pub no_cover: bool,
    /// Randomized convexity and majorization draws.
    #[arg(long, default_value_t = 10_000)]
    pub draws: usize,
    /// Write every audited instance to audit.jsonl rather than failures only.
    #[arg(long)]
    pub all_lines: bool,
}

/// Splices `--config FILE` into the argument list: each `key=value` line
/// becomes `--key value`, placed before the user's flags so that flags win.
/// A `command=` key supplies the subcommand when none is given.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>, CliError> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut iter = args.into_iter();
    let prog = iter.next().unwrap_or_else(|| "lipwalk".into());
    while let Some(a) = iter.next() {
        if a == "--config" {
            config = Some(
                iter.next()
                    .ok_or_else(|| CliError::Input("--config needs a file".into()))?,
            );
        } else if let Some(path) = a.strip_prefix("--config=") {
            config = Some(path.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else {
        let mut out = vec![prog];
        out.extend(rest);
        return Ok(out);
    };
    let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let mut command = None;
    let mut flags = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| CliError::Config {
            path: path.clone(),
            line: i + 1,
            message: format!("expected `key=value`, found `{line}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || key.starts_with('-') {
            return Err(CliError::Config {
                path: path.clone(),
                line: i + 1,
                message: format!("invalid key `{key}`"),
            });
        }
        let key = key.replace('_', "-");
        if key == "command" {
            if !COMMANDS.contains(&value) {
                return Err(CliError::Config {
                    path: path.clone(),
                    line: i + 1,
                    message: format!("unknown command `{value}`"),
                });
            }
            command = Some(value.to_string());
            continue;
        }
        match value {
            "true" => flags.push(format!("--{key}")),
            "false" => {}
            v => {
                flags.push(format!("--{key}"));
                flags.push(v.to_string());
            }
        }
    }
    let position = rest.iter().position(|a| COMMANDS.contains(&a.as_str()));
    let (before, sub, after) = match position {
        Some(p) => (rest[..p].to_vec(), rest[p].clone(), rest[p + 1..].to_vec()),
        None => {
            let sub = command.ok_or_else(|| CliError::Input(format!("{path}: no subcommand given")))?;
            (Vec::new(), sub, rest)
        }
    };
    let mut out = vec![prog];
    out.extend(before);
    out.push(sub);
    out.extend(flags);
    out.extend(after);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn config_lines_become_flags_before_user_flags() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# sweep\ncommand = cover-sim\ntrials=50\nno_timestamp=true\nseed=3").unwrap();
        let path = f.path().to_str().unwrap();
        let out = expand_config(strings(&["lipwalk", "--config", path, "--trials", "7"])).unwrap();
        assert_eq!(
            out,
            strings(&[
                "lipwalk",
                "cover-sim",
                "--trials",
                "50",
                "--no-timestamp",
                "--seed",
                "3",
                "--trials",
                "7"
            ])
        );
        let parsed = Cli::try_parse_from(&out).unwrap();
        match parsed.command {
            Command::CoverSim(c) => assert_eq!((c.trials, c.common.seed), (7, Some(3))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn config_errors_carry_line_numbers() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "trials=5\n\nnonsense").unwrap();
        let path = f.path().to_str().unwrap().to_string();
        let err = expand_config(strings(&["lipwalk", "spectral", "--config", &path])).unwrap_err();
        assert!(matches!(err, CliError::Config { line: 3, .. }), "{err}");
    }

    #[test]
    fn no_config_passes_through() {
        let args = strings(&["lipwalk", "spectral", "--generate", "cycle:6"]);
        assert_eq!(expand_config(args.clone()).unwrap(), args);
    }
}
