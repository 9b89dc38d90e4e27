//! Property and acceptance suites behind `rfcover verify`.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rfcover::analysis::{check_cover, exact_visitation, max_reach, truncate};
use rfcover::experiments::{self, Outcome};
use rfcover::{BlockMdp, Policy, Seed};

/// Models shipped with the binary, checked when no fixture directory is given.
const SHIPPED: &[(&str, &str)] = &[
    ("lock.json", include_str!("../fixtures/lock.json")),
    ("random_block.json", include_str!("../fixtures/random_block.json")),
    ("gadget.json", include_str!("../fixtures/gadget.json")),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Invariants,
    Acceptance,
    All,
}

pub fn load_fixtures(dir: Option<&Path>) -> Result<Vec<(String, String)>> {
    let Some(dir) = dir else {
        return Ok(SHIPPED.iter().map(|&(n, t)| (n.to_string(), t.to_string())).collect());
    };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading fixture directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
            Ok((name, text))
        })
        .collect()
}

fn model_checks(mdp: &BlockMdp) -> Result<(), String> {
    let d = exact_visitation(mdp, &Policy::uniform());
    for h in 0..mdp.horizon() {
        let total: f64 = d.layer(h).iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(format!("uniform visitation at layer {h} sums to {total}"));
        }
    }
    let witnesses: Vec<Policy> = (0..mdp.horizon())
        .flat_map(|h| (0..mdp.num_states()).map(move |s| (h, s)))
        .map(|(h, s)| max_reach(mdp, h, s).1)
        .collect();
    let report = check_cover(mdp, &witnesses, 0.0);
    if !report.pass {
        return Err(format!("max-reach witnesses miss the optimum by {:.3e}", report.worst_deficit));
    }
    let t = truncate(mdp, &[], 0.05, 0.05).map_err(|e| e.to_string())?;
    let cut = exact_visitation(t.model(), &Policy::uniform());
    for h in 0..mdp.horizon() {
        for s in 0..mdp.num_states() {
            if !t.reachable(h)[s] && cut.state(h, s) != 0.0 {
                return Err(format!("truncated state ({h}, {s}) keeps mass"));
            }
        }
    }
    Ok(())
}

fn fixture_outcome(name: &str, text: &str) -> Outcome {
    let start = std::time::Instant::now();
    let verdict = BlockMdp::from_json(text).map_err(|e| format!("constructor invariant violated: {e}")).and_then(
        |m| {
            model_checks(&m)?;
            Ok(format!("H={} S={} A={} X={}", m.horizon(), m.num_states(), m.num_actions(), m.num_obs()))
        },
    );
    let (pass, summary) = match verdict {
        Ok(s) => (true, s),
        Err(e) => (false, e),
    };
    Outcome {
        id: format!("fixture {name}"),
        pass,
        summary,
        elapsed_secs: start.elapsed().as_secs_f64(),
    }
}

/// Fixture checks followed by reduced-size property suites.
pub fn invariants(fixtures: &[(String, String)], seed: Seed) -> Vec<Outcome> {
    let mut out: Vec<Outcome> = fixtures.iter().map(|(n, t)| fixture_outcome(n, t)).collect();
    let renamed = |mut o: Outcome, name: &str| {
        o.id = format!("{name} ({})", o.id);
        o
    };
    out.push(renamed(experiments::ac6(20, 10, seed.derive("truncation")), "truncation"));
    out.push(renamed(experiments::ac7(5, 10, seed.derive("gadget")), "gadget fidelity"));
    out.push(renamed(experiments::ac3(20, seed.derive("psdp")), "psdp optimality"));
    out
}

pub fn run(suite: Suite, fixtures: Option<&Path>, seed: Seed) -> Result<Vec<Outcome>> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Invariants | Suite::All) {
        out.extend(invariants(&load_fixtures(fixtures)?, seed));
    }
    if matches!(suite, Suite::Acceptance | Suite::All) {
        out.extend(experiments::run_all(seed));
    }
    Ok(out)
}
