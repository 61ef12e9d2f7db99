use lipwalk::chain::{cheeger_audit, round_to_12, spectral_summary};
use lipwalk::graph::EXHAUSTIVE_LIMIT;
use lipwalk::means::{random_convexity_audit, random_schur_audit};
use lipwalk::oracle::{
    boost_bounds, boost_sweep, connected_graphs, cover_lower_demo, eta_grid, optimal_tbrw_event_prob, srw_event_prob,
    BoostAuditLine, EventSpec, LineSelection, SweepConfig,
};
use lipwalk::robustness::{
    bottleneck_witness_check, gap_robustness_check, random_set_audits, LemmaReport, RobustnessContext,
};
use lipwalk::walk::{estimate_cover_time, WalkSpec};
use lipwalk::weighting::{induced_chain, is_lipschitz, lipschitz_beta, stationary_ratio_audit};
use lipwalk::Graph;
use serde_json::{json, Value};

use crate::cli::{BoostArgs, Command, CommonArgs, CoverArgs, LipschitzArgs, RobustnessArgs, SpectralArgs, SweepArgs};
use crate::error::{CliError, CliResult};
use crate::output::Outputs;
use crate::specs::{load_graph, load_weighting, maybe_graph, parse_event, parse_policy, parse_theta, parse_walk};

/// Result of one subcommand: whether every audit passed, and the summary
/// that was written.
pub struct Report {
    pub passed: bool,
    pub summary: String,
}

pub fn dispatch(command: &Command) -> CliResult<Report> {
    match command {
        Command::Spectral(a) => spectral(a),
        Command::LipschitzAudit(a) => lipschitz(a),
        Command::RobustnessAudit(a) => robustness(a),
        Command::CoverSim(a) => cover(a),
        Command::BoostAudit(a) => boost(a),
        Command::LemmaSweep(a) => sweep(a),
    }
}

fn need_seed(common: &CommonArgs, what: &str) -> CliResult<u64> {
    common
        .seed
        .ok_or_else(|| CliError::Input(format!("{what} is randomized and needs --seed")))
}

fn finish(out: &Outputs, passed: bool, mut summary: Value) -> CliResult<Report> {
    summary["passed"] = json!(passed);
    let summary = out.summary(&summary)?;
    Ok(Report { passed, summary })
}

fn spectral(a: &SpectralArgs) -> CliResult<Report> {
    let (g, info) = load_graph(&a.graph, a.common.seed)?;
    let (w, label) = load_weighting(&a.weight, &g, a.common.seed)?;
    let out = Outputs::new(&a.common)?;
    let mut chain = induced_chain(&g, &w);
    if a.lazy {
        chain = chain.lazy();
    }
    let spectrum = spectral_summary(&chain)?;
    let cheeger = if g.n() <= EXHAUSTIVE_LIMIT {
        Some(cheeger_audit(&chain)?)
    } else {
        None
    };
    let rows: Vec<Vec<String>> = spectrum
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &v)| vec![i.to_string(), round_to_12(v).to_string()])
        .collect();
    out.csv(&["index", "eigenvalue"], &rows)?;
    let passed = cheeger.as_ref().is_none_or(|c| c.holds);
    finish(
        &out,
        passed,
        json!({
            "command": "spectral",
            "graph": info,
            "weighting": label,
            "lazy": a.lazy,
            "spectral": spectrum,
            "cheeger": cheeger,
        }),
    )
}

fn lipschitz(a: &LipschitzArgs) -> CliResult<Report> {
    let (g, info) = load_graph(&a.graph, a.common.seed)?;
    let (w, label) = load_weighting(&a.weight, &g, a.common.seed)?;
    if let Some(s) = a.sigma {
        if s.is_nan() || s < 1.0 {
            return Err(CliError::Input(format!("--sigma must be >= 1, got {s}")));
        }
    }
    let out = Outputs::new(&a.common)?;
    let diameter = g.diameter().0;
    let k_max = a.k.unwrap_or(diameter);
    let audits: Vec<_> = (0..=k_max).map(|k| stationary_ratio_audit(&g, &w, k)).collect();
    let rows: Vec<Vec<String>> = audits
        .iter()
        .map(|r| {
            vec![
                r.k.to_string(),
                r.pairs_checked.to_string(),
                r.violations.to_string(),
                if r.min_log_margin.is_finite() {
                    r.min_log_margin.to_string()
                } else {
                    String::new()
                },
            ]
        })
        .collect();
    out.csv(&["k", "pairs_checked", "violations", "min_log_margin"], &rows)?;
    let sigma_ok = a.sigma.map(|s| is_lipschitz(&g, &w, s));
    let violations: usize = audits.iter().map(|r| r.violations).sum();
    let passed = violations == 0 && sigma_ok != Some(false);
    finish(
        &out,
        passed,
        json!({
            "command": "lipschitz-audit",
            "graph": info,
            "weighting": label,
            "beta": lipschitz_beta(&g, &w),
            "sigma": a.sigma,
            "sigma_lipschitz": sigma_ok,
            "diameter": diameter,
            "k_max": k_max,
            "ratio_violations": violations,
        }),
    )
}

fn robustness(a: &RobustnessArgs) -> CliResult<Report> {
    let (g, info) = load_graph(&a.graph, a.common.seed)?;
    let (w, label) = load_weighting(&a.weight, &g, a.common.seed)?;
    let seed = if a.samples > 0 {
        Some(need_seed(&a.common, "random set sampling")?)
    } else {
        None
    };
    let out = Outputs::new(&a.common)?;
    let mut passed = true;
    let gap = if g.regular_degree().is_none() {
        json!({"skipped": "graph is not regular"})
    } else {
        match gap_robustness_check(&g, &w, a.psi) {
            Ok(r) => {
                passed &= r.holds();
                json!(r)
            }
            Err(lipwalk::Error::Precondition(m)) => json!({ "skipped": m }),
            Err(e) => return Err(e.into()),
        }
    };
    let ctx = RobustnessContext::new(&g, &w, a.psi)?;
    let audits = match seed {
        Some(s) => random_set_audits(&ctx, a.samples, s)?,
        None => Vec::new(),
    };
    let mut report = LemmaReport::default();
    for (_, audit) in &audits {
        report.record_set(audit);
    }
    report.record(&ctx.bucket_locality()?);
    passed &= report.failures() == 0;
    let lines: Vec<Value> = audits
        .iter()
        .enumerate()
        .map(|(i, (set, audit))| json!({"sample": i, "set": set, "audit": audit}))
        .collect();
    out.jsonl(&lines)?;
    let witness = match a.witness_beta {
        Some(beta) => {
            let r = bottleneck_witness_check(&g, beta)?;
            passed &= r.holds;
            Some(r)
        }
        None => None,
    };
    finish(
        &out,
        passed,
        json!({
            "command": "robustness-audit",
            "graph": info,
            "weighting": label,
            "psi": ctx.psi,
            "psi_exact": ctx.psi_exact,
            "k": ctx.k,
            "sigma": ctx.sigma,
            "beta": ctx.beta,
            "within_budget": ctx.within_budget(),
            "gap_check": gap,
            "lemmas": report,
            "witness": witness,
        }),
    )
}

fn cover(a: &CoverArgs) -> CliResult<Report> {
    let seed = need_seed(&a.common, "cover-sim")?;
    let (g, info) = load_graph(&a.graph, Some(seed))?;
    if a.trials == 0 {
        return Err(CliError::Input("--trials must be >= 1".into()));
    }
    let theta = parse_theta(a.theta.as_deref(), a.psi)?;
    let spec = parse_walk(&a.walk, a.eps, theta, parse_policy(&a.policy)?)?;
    let resolved_theta = match &spec {
        WalkSpec::Phase { eps, theta } => Some(theta.theta(&g, *eps)?),
        _ => None,
    };
    let out = Outputs::new(&a.common)?;
    let est = estimate_cover_time(&g, &spec, a.trials, seed, a.start)?;
    let rows: Vec<Vec<String>> = est
        .records
        .iter()
        .map(|r| vec![r.trial.to_string(), r.start_vertex.to_string(), r.steps.to_string()])
        .collect();
    out.csv(&["trial", "start_vertex", "steps"], &rows)?;
    finish(
        &out,
        true,
        json!({
            "command": "cover-sim",
            "graph": info,
            "walk": spec,
            "theta": resolved_theta,
            "seed": seed,
            "estimate": est,
        }),
    )
}

fn boost(a: &BoostArgs) -> CliResult<Report> {
    let (g, info) = load_graph(&a.graph, a.common.seed)?;
    let kind = parse_event(g.n(), &a.event)?;
    if !(0.0..=1.0).contains(&a.eps) {
        return Err(CliError::Input(format!("--eps must lie in [0, 1], got {}", a.eps)));
    }
    if a.start >= g.n() {
        return Err(CliError::Input(format!("--start {} is not a vertex", a.start)));
    }
    let etas = match a.eta {
        Some(e) => vec![e],
        None => eta_grid(g.max_degree()),
    };
    let starts: Vec<usize> = if a.all_starts {
        (0..g.n()).collect()
    } else {
        vec![a.start]
    };
    let event = EventSpec::new(kind.clone(), a.t);
    let demo = match a.cover_c {
        Some(c) => Some(cover_lower_demo(&g, a.start, c, a.eps)?),
        None => None,
    };
    let out = Outputs::new(&a.common)?;
    let mut lines = Vec::new();
    let mut per_start = Vec::new();
    for &u in &starts {
        let p = srw_event_prob(&g, u, &event)?;
        let q = optimal_tbrw_event_prob(&g, u, &event, a.eps)?;
        per_start.push(json!({"start": u, "p": p, "q_star": q}));
        for &eta in &etas {
            let r = boost_bounds(&g, a.t, a.eps, eta, p, q)?;
            lines.push((r.holds, BoostAuditLine::new(&info.source, &kind, u, &r)));
        }
    }
    let failures = lines.iter().filter(|(h, _)| !h).count();
    let lines: Vec<BoostAuditLine> = lines.into_iter().map(|(_, l)| l).collect();
    out.jsonl(&lines)?;
    let passed = failures == 0 && demo.as_ref().is_none_or(|d| d.consistent);
    finish(
        &out,
        passed,
        json!({
            "command": "boost-audit",
            "graph": info,
            "event": kind.to_string(),
            "t": a.t,
            "eps": a.eps,
            "etas": etas,
            "starts": per_start,
            "instances": lines.len(),
            "failures": failures,
            "cover_lower": demo,
        }),
    )
}

fn sweep(a: &SweepArgs) -> CliResult<Report> {
    let seed = need_seed(&a.common, "lemma-sweep")?;
    let graphs: Vec<(String, Graph)> = match maybe_graph(&a.graph, Some(seed))? {
        Some((g, info)) => vec![(info.source, g)],
        None => {
            if !(2..=6).contains(&a.max_n) {
                return Err(CliError::Input(format!("--max-n must lie in 2..=6, got {}", a.max_n)));
            }
            let mut out = Vec::new();
            for n in 2..=a.max_n {
                for (i, g) in connected_graphs(n)?.into_iter().enumerate() {
                    out.push((format!("catalog:{n}#{i}"), g));
                }
            }
            out
        }
    };
    let cfg = SweepConfig {
        max_t: a.max_t,
        max_targets: a.max_targets,
        include_cover: !a.no_cover,
        lines: if a.all_lines {
            LineSelection::All
        } else {
            LineSelection::Failures
        },
        ..SweepConfig::default()
    };
    let out = Outputs::new(&a.common)?;
    let result = boost_sweep(&graphs, &cfg)?;
    out.jsonl(&result.lines)?;
    let mut convexity = Vec::new();
    let mut stream = 0u64;
    for d in [2usize, 3, 5, 8] {
        for eta in [0.25, 0.5, 1.0] {
            for eps in [0.0, (d as f64).powf(-2.0 * eta), 1.0 / d as f64, 1.0] {
                let r = random_convexity_audit(d, eps, eta, a.draws, seed ^ stream)?;
                stream += 1;
                convexity.push(json!({"d": d, "eta": eta, "eps": eps, "audit": r}));
            }
        }
    }
    let conv_violations: usize = convexity
        .iter()
        .map(|c| c["audit"]["violations"].as_u64().unwrap_or(0) as usize)
        .sum();
    let schur = random_schur_audit(&[1.0, 1.5, 2.0, 4.0, f64::INFINITY], a.draws, seed ^ stream)?;
    let passed = result.holds() && conv_violations == 0 && schur.violations == 0;
    finish(
        &out,
        passed,
        json!({
            "command": "lemma-sweep",
            "graphs": graphs.len(),
            "sweep": result,
            "convexity": convexity,
            "convexity_violations": conv_violations,
            "schur": schur,
        }),
    )
}
