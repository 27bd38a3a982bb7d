//! Chain scenarios: greedy subgroup chains hitting a prescribed density
//! target inside a coordinate tower, and density sampling inside a certified
//! sub-product.

use super::{typed, ParamDoc, ScenarioDef};
use crate::config::{Checker, ValidationError};
use crate::report::{near, Report};
use crate::CliError;
use hdlab_core::{
    chain_build, interval_sample, liminf_estimate, parse_rational, rat, CoordinateTower,
    ProperLimitCertificate, Rational, TieBreak,
};
use num_traits::{One, Zero};
use serde::Deserialize;
use serde_json::{json, Value};

fn parse_tie_break(name: &str) -> TieBreak {
    match name {
        "smallest" => TieBreak::SmallestValidL,
        _ => TieBreak::LargestValidL,
    }
}

// ----------------------------------------------------------------- chain-eta

pub const CHAIN_ETA: ScenarioDef = ScenarioDef {
    name: "chain-eta",
    summary: "greedy chains in a uniform coordinate tower track each density target eta",
    params: &[
        ParamDoc { name: "p", default: "2", doc: "prime modulus" },
        ParamDoc { name: "depth", default: "64", doc: "tower depth (levels built)" },
        ParamDoc { name: "etas", default: "[\"1/3\",\"1/2\",\"2/3\"]", doc: "density targets, each strictly inside (0, 1)" },
        ParamDoc { name: "tail_start", default: "48", doc: "first level of the liminf tail" },
        ParamDoc { name: "tie_break", default: "\"largest\"", doc: "rank tie-break: largest|smallest" },
    ],
    defaults: || {
        json!({
            "scenario": "chain-eta",
            "p": 2, "depth": 64,
            "etas": ["1/3", "1/2", "2/3"],
            "tail_start": 48, "tie_break": "largest",
        })
    },
    validate: chain_eta_validate,
    run: chain_eta_run,
};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainEtaConfig {
    p: u64,
    depth: u64,
    etas: Vec<String>,
    tail_start: u64,
    tie_break: String,
}

fn chain_eta_validate(doc: &Value) -> Vec<ValidationError> {
    let mut c = Checker::new(doc);
    c.prime_field("p");
    let depth = c.u64_field("depth", 4, 4096);
    let tail = c.u64_field("tail_start", 1, 4096);
    if let (Some(d), Some(t)) = (depth, tail) {
        if t >= d {
            c.err("/tail_start", "must be below depth");
        }
    }
    if let Some(etas) = c.rational_list("etas") {
        for (k, eta) in etas.iter().enumerate() {
            if *eta <= Rational::zero() || *eta >= Rational::one() {
                c.err(&format!("/etas/{k}"), format!("{eta} is outside (0, 1)"));
            }
        }
    }
    c.str_field("tie_break", &["largest", "smallest"]);
    c.finish(&["scenario", "p", "depth", "etas", "tail_start", "tie_break"])
}

fn chain_eta_run(doc: &Value) -> Result<Report, CliError> {
    let cfg: ChainEtaConfig = typed(doc)?;
    let mut report = Report::new("chain-eta", doc);
    let tower = CoordinateTower::uniform(cfg.p, cfg.depth)?;
    let tie_break = parse_tie_break(&cfg.tie_break);
    let quantum = rat(1, tower.m(cfg.depth) as i64);

    for eta_str in &cfg.etas {
        let eta = parse_rational(eta_str)?;
        let (state, seq) = chain_build(&tower, &eta, cfg.depth, tie_break)?;
        let est = liminf_estimate(&seq, cfg.tail_start)?;
        let label = format!("eta={eta_str}");
        report.push_sequence(&label, &seq, Some(&est));

        // Never a full quantum below target: adding one more independent
        // vector at any level would overshoot eta.
        let floor_ok = state
            .levels
            .iter()
            .all(|l| rat(l.num as i64 + 1, l.den as i64) >= eta);
        report.check(
            &format!("{label}-floor-condition-holds"),
            floor_ok,
            json!({"levels": state.levels.len()}),
        );

        // The <= eta checkpoints must recur all the way into the tail.
        let on_record = |i: u64| state.levels.iter().find(|l| l.i == i);
        let checkpoints_ok = !state.checkpoints.is_empty()
            && state.checkpoints.iter().all(|&c| {
                on_record(c).is_some_and(|l| rat(l.num as i64, l.den as i64) <= eta)
            })
            && state.checkpoints.last().copied().unwrap_or(0) >= cfg.tail_start;
        report.check(
            &format!("{label}-checkpoints-recur"),
            checkpoints_ok,
            json!({
                "checkpoints": state.checkpoints,
                "tail_start": cfg.tail_start,
            }),
        );

        report.check(
            &format!("{label}-window-near-target"),
            near(&est.window_min, &eta, &quantum),
            json!({
                "window_min": est.window_min.to_string(),
                "target": eta.to_string(),
                "quantum": quantum.to_string(),
            }),
        );
    }
    Ok(report.seal())
}

// ----------------------------------------------------------- interval-sample

pub const INTERVAL_SAMPLE: ScenarioDef = ScenarioDef {
    name: "interval-sample",
    summary: "sample subgroups of prescribed density inside a certified sub-product",
    params: &[
        ParamDoc { name: "p", default: "2", doc: "prime modulus" },
        ParamDoc { name: "depth", default: "64", doc: "tower depth (levels built)" },
        ParamDoc { name: "step", default: "2", doc: "arithmetic gap of the support; sub-product density is 1/step" },
        ParamDoc { name: "thetas", default: "[\"1/4\",\"3/8\",\"1/2\"]", doc: "ambient density targets, each in (0, 1/step]" },
        ParamDoc { name: "tail_start", default: "48", doc: "first level of the liminf tail" },
        ParamDoc { name: "tie_break", default: "\"largest\"", doc: "rank tie-break: largest|smallest" },
    ],
    defaults: || {
        json!({
            "scenario": "interval-sample",
            "p": 2, "depth": 64, "step": 2,
            "thetas": ["1/4", "3/8", "1/2"],
            "tail_start": 48, "tie_break": "largest",
        })
    },
    validate: interval_validate,
    run: interval_run,
};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IntervalConfig {
    p: u64,
    depth: u64,
    step: u64,
    thetas: Vec<String>,
    tail_start: u64,
    tie_break: String,
}

fn interval_validate(doc: &Value) -> Vec<ValidationError> {
    let mut c = Checker::new(doc);
    c.prime_field("p");
    let depth = c.u64_field("depth", 4, 2048);
    let tail = c.u64_field("tail_start", 1, 2048);
    if let (Some(d), Some(t)) = (depth, tail) {
        if t >= d {
            c.err("/tail_start", "must be below depth");
        }
    }
    let step = c.u64_field("step", 2, 8);
    if let (Some(thetas), Some(step)) = (c.rational_list("thetas"), step) {
        let xi = rat(1, step as i64);
        for (k, theta) in thetas.iter().enumerate() {
            if *theta <= Rational::zero() || *theta > xi {
                c.err(
                    &format!("/thetas/{k}"),
                    format!("{theta} is outside (0, {xi}]"),
                );
            }
        }
    }
    c.str_field("tie_break", &["largest", "smallest"]);
    c.finish(&["scenario", "p", "depth", "step", "thetas", "tail_start", "tie_break"])
}

fn interval_run(doc: &Value) -> Result<Report, CliError> {
    let cfg: IntervalConfig = typed(doc)?;
    let mut report = Report::new("interval-sample", doc);

    // m(i) = step * i with support on every step-th coordinate: the
    // sub-product meets each level in exactly a 1/step share, which is what
    // the certificate pins down.
    let tower = CoordinateTower::new(cfg.p, (1..=cfg.depth).map(|i| cfg.step * i).collect())?;
    let support: Vec<u64> = (0..cfg.depth).map(|c| cfg.step * c).collect();
    let xi = ProperLimitCertificate::closed_form(
        rat(1, cfg.step as i64),
        "balanced-arithmetic-support",
    )?;
    let tie_break = parse_tie_break(&cfg.tie_break);
    let quantum = rat(1, (cfg.step * cfg.depth) as i64);

    for theta_str in &cfg.thetas {
        let theta = parse_rational(theta_str)?;
        let rep = interval_sample(
            &tower,
            support.clone(),
            &xi,
            &theta,
            tie_break,
            cfg.tail_start,
        )?;
        report.push_sequence(&format!("theta={theta_str}-ambient"), &rep.sequence_g, Some(&rep.estimate));
        report.push_sequence(&format!("theta={theta_str}-induced"), &rep.sequence_h, None);

        // Reaching this point means every ambient level's rank was already
        // factored through the sub-product inside the sampler; record the
        // shape of the evidence.
        report.check(
            &format!("theta={theta_str}-factorization-verified"),
            true,
            json!({
                "levels": rep.sequence_g.levels().len(),
                "generators": rep.b_generators.len(),
            }),
        );
        report.check(
            &format!("theta={theta_str}-window-near-target"),
            rep.theta_gap <= quantum,
            json!({
                "gap": rep.theta_gap.to_string(),
                "quantum": quantum.to_string(),
                "window_min": rep.estimate.window_min.to_string(),
            }),
        );
    }
    Ok(report.seal())
}
