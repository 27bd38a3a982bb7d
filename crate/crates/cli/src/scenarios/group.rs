//! Group scenarios: verbal series over finite quotient oracles, density
//! tails of cyclic subgroups, cross-kind comparisons, and the dimension
//! lower bound for the lower-p series.

use super::{budget_from, typed, ParamDoc, ScenarioDef};
use crate::config::{Checker, ValidationError};
use crate::report::{near, Report};
use crate::CliError;
use hdlab_core::{
    closure, compare_series, density, lowerp_bound_check, parse_rational,
    pfd_equality_experiment, powerful_uniform_check, rat, rat_nat, series_terms,
    series_terms_generic, stability_horizon, DensityLevel, Element, FinLocalRing, GroupOracle,
    Rational, SeriesKind, SeriesSpec, SubgroupHandle,
};
use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Deserialize;
use serde_json::{json, Value};

fn level_ratio(l: &DensityLevel) -> Rational {
    rat_nat(&l.num, &l.den)
}

fn cyclic_handle(
    oracle: &GroupOracle,
    generator: &Element,
    budget: u64,
) -> Result<SubgroupHandle, CliError> {
    Ok(SubgroupHandle::from_enumerated(closure(
        oracle,
        std::slice::from_ref(generator),
        budget,
    )?))
}

fn kind_label(kind: SeriesKind) -> &'static str {
    match kind {
        SeriesKind::PPower => "ppower",
        SeriesKind::LowerP => "lowerp",
        SeriesKind::Frattini => "frattini",
        SeriesKind::DimensionSubgroup => "dimension",
        _ => "other",
    }
}

fn parse_kind(name: &str) -> Option<SeriesKind> {
    match name {
        "ppower" => Some(SeriesKind::PPower),
        "lowerp" => Some(SeriesKind::LowerP),
        "frattini" => Some(SeriesKind::Frattini),
        "dimension" => Some(SeriesKind::DimensionSubgroup),
        _ => None,
    }
}

// ---------------------------------------------------------- cyclotomic-lowerp

pub const CYCLOTOMIC_LOWERP: ScenarioDef = ScenarioDef {
    name: "cyclotomic-lowerp",
    summary: "lower-p series of a cyclotomic semidirect product: index steps, cyclic tails, generic cross-check",
    params: &[
        ParamDoc { name: "p", default: "3", doc: "odd prime" },
        ParamDoc { name: "m", default: "1", doc: "cyclotomic layer (only 1 is wired)" },
        ParamDoc { name: "k", default: "4", doc: "coefficient precision of the working model" },
        ParamDoc { name: "deep_k", default: "5", doc: "precision of the deeper model (must exceed k)" },
        ParamDoc { name: "d", default: "1", doc: "twist rank (only 1 is wired)" },
        ParamDoc { name: "budget", default: "4194304", doc: "element enumeration budget" },
    ],
    defaults: || {
        json!({
            "scenario": "cyclotomic-lowerp",
            "p": 3, "m": 1, "k": 4, "deep_k": 5, "d": 1,
            "budget": 4_194_304u64,
        })
    },
    validate: cyclo_validate,
    run: cyclo_run,
};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CycloConfig {
    p: u64,
    m: u32,
    k: u32,
    deep_k: u32,
    d: usize,
}

fn cyclo_shape_checks(c: &mut Checker) {
    if c.prime_field("p") == Some(2) {
        c.err("/p", "must be an odd prime");
    }
    c.u64_field("m", 1, 1);
    let k = c.u64_field("k", 2, 8);
    let deep_k = c.u64_field("deep_k", 3, 10);
    if let (Some(k), Some(dk)) = (k, deep_k) {
        if dk <= k {
            c.err("/deep_k", "must exceed k");
        }
    }
    c.u64_field("d", 1, 1);
    c.u64_field("budget", 1024, u64::MAX);
}

fn cyclo_validate(doc: &Value) -> Vec<ValidationError> {
    let mut c = Checker::new(doc);
    cyclo_shape_checks(&mut c);
    c.finish(&["scenario", "p", "m", "k", "deep_k", "d", "budget"])
}

fn cyclo_run(doc: &Value) -> Result<Report, CliError> {
    let cfg: CycloConfig = typed(doc)?;
    let budget = budget_from(doc);
    let mut report = Report::new("cyclotomic-lowerp", doc);

    let shallow = GroupOracle::cyclotomic_semidirect(cfg.p, cfg.m, cfg.k, cfg.d)?;
    let deep = GroupOracle::cyclotomic_semidirect(cfg.p, cfg.m, cfg.deep_k, cfg.d)?;
    let horizon = stability_horizon(SeriesKind::LowerP, &shallow, &deep, budget)?;
    report.check(
        "stability-horizon-at-least-three",
        horizon >= 3,
        json!({"horizon": horizon}),
    );

    // Inside the horizon, every step of the deeper model drops exactly one
    // twist coordinate and one unit coordinate: log_p |P_i : P_{i+1}| = d + 1.
    let deep_chain = series_terms(
        &deep,
        &SeriesSpec::new(SeriesKind::LowerP, horizon + 1)?,
        budget,
    )?;
    let step = cfg.d as u64 + 1;
    let mut rows = Vec::new();
    let mut steps_ok = true;
    for i in 1..=horizon {
        let from = deep_chain.log_index(i);
        let to = deep_chain.log_index(i + 1);
        let ok = matches!((from, to), (Some(a), Some(b)) if b >= a && b - a == step);
        steps_ok &= ok;
        rows.push(json!({"i": i, "from": from, "to": to}));
    }
    report.check(
        "index-steps-equal-d-plus-one",
        steps_ok,
        json!({"expected_step": step, "steps": rows}),
    );

    // Cyclic tails on the working model against the module closed forms:
    // the torsion generator loses one level per step (capped at precision k),
    // the unit generator fills phi coordinates per congruence level.
    let mut chain = series_terms(
        &shallow,
        &SeriesSpec::new(SeriesKind::LowerP, horizon)?,
        budget,
    )?;
    let phi = (shallow.width() - cfg.d) as u64;
    let mut t0 = vec![0u64; cfg.d];
    t0[0] = 1;
    let s0 = shallow.semidirect(&t0, &vec![0u64; phi as usize])?;
    let mut a0_coords = vec![0u64; phi as usize];
    a0_coords[0] = 1;
    let a0 = shallow.semidirect(&vec![0u64; cfg.d], &a0_coords)?;

    let den_h = chain
        .log_index(horizon)
        .ok_or_else(|| CliError::Scenario("series chain shorter than the horizon".into()))?;
    let k64 = u64::from(cfg.k);
    let tol = rat(1, 20);
    let jobs = [
        ("s0", &s0, (horizon - 1).min(k64)),
        ("a0", &a0, ((horizon - 1).min(k64 * phi) + phi - 1) / phi),
    ];
    for (label, g, want_num) in jobs {
        let h = cyclic_handle(&shallow, g, budget)?;
        let seq = density(&shallow, &h, &mut chain, budget)?;
        let tail = level_ratio(
            seq.levels()
                .last()
                .ok_or_else(|| CliError::Scenario("empty density sequence".into()))?,
        );
        let target = rat(want_num as i64, den_h as i64);
        report.push_sequence(label, &seq, None);
        report.check(
            &format!("{label}-tail-near-closed-form"),
            near(&tail, &target, &tol),
            json!({"tail": tail.to_string(), "target": target.to_string()}),
        );
    }

    // The structural terms must be the same subgroups the verbal recursion
    // produces: equal orders plus generator containment pins them pointwise.
    let generic = series_terms_generic(
        &shallow,
        &SeriesSpec::new(SeriesKind::LowerP, horizon)?,
        budget,
    )?;
    let mut agree = chain.truncated_at.is_none()
        && generic.truncated_at.is_none()
        && chain.terms.len() == generic.terms.len();
    for i in 0..chain.terms.len().min(generic.terms.len()) {
        agree &= chain.terms[i].log_order() == generic.terms[i].log_order();
        for g in generic.terms[i].generators() {
            agree &= chain.terms[i].contains(&shallow, g)?;
        }
    }
    report.check(
        "structural-terms-match-generic-recursion",
        agree,
        json!({"levels": chain.terms.len()}),
    );
    Ok(report.seal())
}

// --------------------------------------------------------------- sl3-product

pub const SL3_PRODUCT: ScenarioDef = ScenarioDef {
    name: "sl3-product",
    summary: "congruence densities of two one-parameter subgroups in a product of SL3 congruence oracles",
    params: &[
        ParamDoc { name: "p", default: "2", doc: "prime (only 2 is wired)" },
        ParamDoc { name: "k", default: "13", doc: "coefficient precision of both factors" },
        ParamDoc { name: "levels", default: "12", doc: "deepest congruence level the assertions cover" },
        ParamDoc { name: "seed", default: "11", doc: "first seed tried for the dyadic sample" },
        ParamDoc { name: "word_length", default: "24", doc: "length of each sampled word" },
        ParamDoc { name: "max_seed_tries", default: "64", doc: "seeds tried before giving up" },
        ParamDoc { name: "budget", default: "4194304", doc: "element enumeration budget" },
    ],
    defaults: || {
        json!({
            "scenario": "sl3-product",
            "p": 2, "k": 13, "levels": 12,
            "seed": 11, "word_length": 24, "max_seed_tries": 64,
            "budget": 4_194_304u64,
        })
    },
    validate: sl3_validate,
    run: sl3_run,
};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Sl3Config {
    p: u64,
    k: u32,
    levels: u64,
    seed: u64,
    word_length: usize,
    max_seed_tries: u64,
}

fn sl3_validate(doc: &Value) -> Vec<ValidationError> {
    let mut c = Checker::new(doc);
    c.u64_field("p", 2, 2);
    let k = c.u64_field("k", 3, 16);
    let levels = c.u64_field("levels", 1, 15);
    if let (Some(k), Some(levels)) = (k, levels) {
        if levels >= k {
            c.err("/levels", "must be below k");
        }
    }
    c.u64_field("seed", 0, u64::MAX);
    c.u64_field("word_length", 4, 512);
    c.u64_field("max_seed_tries", 1, 4096);
    c.u64_field("budget", 1024, u64::MAX);
    c.finish(&["scenario", "p", "k", "levels", "seed", "word_length", "max_seed_tries", "budget"])
}

fn sl3_run(doc: &Value) -> Result<Report, CliError> {
    let cfg: Sl3Config = typed(doc)?;
    let budget = budget_from(doc);
    let mut report = Report::new("sl3-product", doc);

    // Char-2 coefficients on the left, so squaring is additive and the
    // torsion unit gains congruence levels only on doublings; 2-adic
    // coefficients on the right, where squaring is regular and a level-1
    // element with a clean first doubling gains one level per squaring.
    let ring_l = FinLocalRing::poly_mod(cfg.p, cfg.k)?;
    let left = GroupOracle::sl_congruence(ring_l.clone(), 3)?;
    let right = GroupOracle::sl_congruence(FinLocalRing::integers_mod(cfg.p, cfg.k)?, 3)?;
    let prod = GroupOracle::product(left.clone(), right.clone())?;

    let mut accepted = None;
    for t in 0..cfg.max_seed_tries {
        let seed = cfg.seed.wrapping_add(t);
        let g = right.sample_word(seed, cfg.word_length);
        let lvl = right.congruence_level(&g)?;
        let sq = right.congruence_level(&right.multiply(&g, &g))?;
        if lvl == 1 && sq == 2 {
            accepted = Some((g, seed));
            break;
        }
    }
    let Some((g, used_seed)) = accepted else {
        return Err(CliError::Scenario(
            "no admissible dyadic sample within max_seed_tries".into(),
        ));
    };

    // diag(u, u^{-1}, 1) for the unit u = 1 + t; its order is the smallest
    // power of two holding all k coefficient levels.
    let one = ring_l.one();
    let mut u = ring_l.zero();
    ring_l.add_into(&one, &ring_l.uniformizer_pow(1), &mut u);
    let mut order = 1u64;
    while order < u64::from(cfg.k) {
        order *= 2;
    }
    let u_inv = ring_l.pow(&u, order - 1);
    if ring_l.mul(&u, &u_inv) != one {
        return Err(CliError::Scenario("unit inverse sanity check failed".into()));
    }
    let zero = ring_l.zero();
    let h = left.sl_from_entries(&[
        u,
        zero.clone(),
        zero.clone(),
        zero.clone(),
        u_inv,
        zero.clone(),
        zero.clone(),
        zero.clone(),
        one,
    ])?;
    let h1 = prod.pair(&h, &right.identity())?;
    let h2 = prod.pair(&left.identity(), &g)?;

    let mut chain = series_terms(
        &prod,
        &SeriesSpec::new(SeriesKind::LowerP, u64::from(cfg.k))?,
        budget,
    )?;
    let d1 = density(&prod, &cyclic_handle(&prod, &h1, budget)?, &mut chain, budget)?;
    let d2 = density(&prod, &cyclic_handle(&prod, &h2, budget)?, &mut chain, budget)?;

    // Chain level j sits at congruence depth j - 1 in both factors, so the
    // reports index levels by i = j - 1.
    report.push_sequence_shifted("H1", &d1, 1, None);
    report.push_sequence_shifted("H2", &d2, 1, None);

    let band = rat(1, 100);
    let sixteenth = rat(1, 16);
    let mut band_ok = true;
    let mut deepest = 0u64;
    for l in d2.levels().iter().filter(|l| l.i >= 2) {
        let i = l.i - 1;
        if i > cfg.levels {
            break;
        }
        deepest = deepest.max(i);
        band_ok &= near(&level_ratio(l), &sixteenth, &band);
    }
    report.check(
        "h2-share-stays-in-sixteenth-band",
        band_ok && deepest >= cfg.levels,
        json!({"band": "1/16 ± 1/100", "deepest_level": deepest}),
    );

    let mut bound_ok = true;
    let mut h1_rows = Vec::new();
    for l in d1.levels().iter().filter(|l| l.i >= 2) {
        let i = l.i - 1;
        if i > cfg.levels {
            break;
        }
        let bound = rat((i.ilog2() as i64) + 1, 16 * i as i64);
        let r = level_ratio(l);
        bound_ok &= r <= bound;
        h1_rows.push(json!({"i": i, "ratio": r.to_string(), "bound": bound.to_string()}));
    }
    report.check(
        "h1-share-below-doubling-bound",
        bound_ok && !h1_rows.is_empty(),
        json!({"seed": used_seed, "rows": h1_rows}),
    );

    let d1_ratios: Vec<Rational> = d1.levels().iter().map(level_ratio).collect();
    report.check(
        "h1-share-decays",
        d1_ratios.len() >= 2 && d1_ratios.last() < d1_ratios.first(),
        json!({
            "first": d1_ratios.first().map(Rational::to_string),
            "last": d1_ratios.last().map(Rational::to_string),
        }),
    );
    Ok(report.seal())
}

// ------------------------------------------------------------ heisenberg-pfd

pub const HEISENBERG_PFD: ScenarioDef = ScenarioDef {
    name: "heisenberg-pfd",
    summary: "p-power, Frattini, and dimension tails of a cyclic subgroup of the Heisenberg group agree",
    params: &[
        ParamDoc { name: "p", default: "3", doc: "odd prime" },
        ParamDoc { name: "k", default: "3", doc: "coefficient precision of the working model" },
        ParamDoc { name: "deep_k", default: "4", doc: "precision of the deeper model (must exceed k)" },
        ParamDoc { name: "dim_depth", default: "27", doc: "depth of the dimension chain for the power law" },
        ParamDoc { name: "power_span", default: "9", doc: "deepest index checked for D_{pi} = D_i^p" },
        ParamDoc { name: "budget", default: "4194304", doc: "element enumeration budget" },
    ],
    defaults: || {
        json!({
            "scenario": "heisenberg-pfd",
            "p": 3, "k": 3, "deep_k": 4, "dim_depth": 27, "power_span": 9,
            "budget": 4_194_304u64,
        })
    },
    validate: pfd_validate,
    run: pfd_run,
};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PfdConfig {
    p: u64,
    k: u32,
    deep_k: u32,
    dim_depth: u64,
    power_span: u64,
}

fn pfd_validate(doc: &Value) -> Vec<ValidationError> {
    let mut c = Checker::new(doc);
    if c.prime_field("p") == Some(2) {
        c.err("/p", "must be an odd prime");
    }
    let k = c.u64_field("k", 2, 6);
    let deep_k = c.u64_field("deep_k", 3, 8);
    if let (Some(k), Some(dk)) = (k, deep_k) {
        if dk <= k {
            c.err("/deep_k", "must exceed k");
        }
    }
    let dim_depth = c.u64_field("dim_depth", 2, 256);
    let span = c.u64_field("power_span", 1, 128);
    if let (Some(depth), Some(span)) = (dim_depth, span) {
        if let Some(p) = doc.get("p").and_then(Value::as_u64) {
            if span.saturating_mul(p) > depth {
                c.err("/power_span", "p * power_span must stay within dim_depth");
            }
        }
    }
    c.u64_field("budget", 1024, u64::MAX);
    c.finish(&["scenario", "p", "k", "deep_k", "dim_depth", "power_span", "budget"])
}

fn pfd_run(doc: &Value) -> Result<Report, CliError> {
    let cfg: PfdConfig = typed(doc)?;
    let budget = budget_from(doc);
    let mut report = Report::new("heisenberg-pfd", doc);

    let shallow = GroupOracle::unitriangular(cfg.p, cfg.k)?;
    let deep = GroupOracle::unitriangular(cfg.p, cfg.deep_k)?;
    let x = shallow.uni(1, 0, 0)?;
    let h = cyclic_handle(&shallow, &x, budget)?;

    let rep = pfd_equality_experiment(&shallow, &deep, &h, budget)?;
    let tol = rat(1, 10);
    let third = rat(1, 3);
    for pk in &rep.per_kind {
        let label = kind_label(pk.kind);
        report.push_sequence(label, &pk.sequence, None);
        report.check(
            &format!("{label}-tail-near-one-third"),
            near(&pk.tail, &third, &tol),
            json!({"horizon": pk.horizon, "tail": pk.tail.to_string()}),
        );
    }
    report.check(
        "tails-pairwise-close",
        rep.max_pairwise_gap <= tol,
        json!({"max_gap": rep.max_pairwise_gap.to_string()}),
    );

    // Uniform power law along the dimension chain of the ambient group.
    let mut full = SubgroupHandle::full(&shallow);
    let mut dchain = series_terms(
        &shallow,
        &SeriesSpec::new(SeriesKind::DimensionSubgroup, cfg.dim_depth)?,
        budget,
    )?;
    let pu = powerful_uniform_check(&shallow, &mut full, Some(&mut dchain), budget)?;
    // Commutators fill the center while p-th powers only reach its
    // p-multiples, so the ambient group is not powerful — yet the dimension
    // chain still obeys the power law on the whole tested span.
    report.check("ambient-group-not-powerful", !pu.powerful, json!({}));
    let checked: Vec<&(u64, bool)> = pu
        .dim_power_law
        .iter()
        .filter(|(i, _)| *i <= cfg.power_span)
        .collect();
    report.check(
        "dimension-terms-obey-power-law",
        !checked.is_empty() && checked.iter().all(|(_, ok)| *ok),
        json!({
            "checked": checked
                .iter()
                .map(|(i, ok)| json!({"i": i, "holds": ok}))
                .collect::<Vec<_>>(),
        }),
    );
    Ok(report.seal())
}

// -------------------------------------------------------------- lowerp-bound

pub const LOWERP_BOUND: ScenarioDef = ScenarioDef {
    name: "lowerp-bound",
    summary: "lower-p density tails stay above the dimension quotient dim(H)/dim(G)^2",
    params: &[
        ParamDoc { name: "p", default: "3", doc: "odd prime" },
        ParamDoc { name: "m", default: "1", doc: "cyclotomic layer (only 1 is wired)" },
        ParamDoc { name: "k", default: "4", doc: "coefficient precision of the working model" },
        ParamDoc { name: "deep_k", default: "5", doc: "precision of the deeper model (must exceed k)" },
        ParamDoc { name: "d", default: "1", doc: "twist rank (only 1 is wired)" },
        ParamDoc { name: "budget", default: "4194304", doc: "element enumeration budget" },
    ],
    defaults: || {
        json!({
            "scenario": "lowerp-bound",
            "p": 3, "m": 1, "k": 4, "deep_k": 5, "d": 1,
            "budget": 4_194_304u64,
        })
    },
    validate: cyclo_validate_for_bound,
    run: bound_run,
};

fn cyclo_validate_for_bound(doc: &Value) -> Vec<ValidationError> {
    let mut c = Checker::new(doc);
    cyclo_shape_checks(&mut c);
    c.finish(&["scenario", "p", "m", "k", "deep_k", "d", "budget"])
}

fn bound_run(doc: &Value) -> Result<Report, CliError> {
    let cfg: CycloConfig = typed(doc)?;
    let budget = budget_from(doc);
    let mut report = Report::new("lowerp-bound", doc);

    let shallow = GroupOracle::cyclotomic_semidirect(cfg.p, cfg.m, cfg.k, cfg.d)?;
    let deep = GroupOracle::cyclotomic_semidirect(cfg.p, cfg.m, cfg.deep_k, cfg.d)?;
    let horizon = stability_horizon(SeriesKind::LowerP, &shallow, &deep, budget)?;
    let mut chain = series_terms(
        &shallow,
        &SeriesSpec::new(SeriesKind::LowerP, horizon)?,
        budget,
    )?;

    let dim_g = shallow.width() as u64;
    let phi = dim_g - cfg.d as u64;
    let mut t0 = vec![0u64; cfg.d];
    t0[0] = 1;
    let s0 = shallow.semidirect(&t0, &vec![0u64; phi as usize])?;
    let mut a0_coords = vec![0u64; phi as usize];
    a0_coords[0] = 1;
    let a0 = shallow.semidirect(&vec![0u64; cfg.d], &a0_coords)?;

    let jobs: [(&str, SubgroupHandle, u64); 3] = [
        ("s0", cyclic_handle(&shallow, &s0, budget)?, 1),
        ("a0", cyclic_handle(&shallow, &a0, budget)?, 1),
        ("full", SubgroupHandle::full(&shallow), dim_g),
    ];
    for (label, handle, dim_h) in jobs {
        let seq = density(&shallow, &handle, &mut chain, budget)?;
        let rep = lowerp_bound_check(&seq, (dim_h, dim_g), None, horizon)?;
        report.push_sequence(label, &seq, None);
        report.check(
            &format!("{label}-tail-meets-dimension-bound"),
            rep.pass,
            json!({
                "bound": rep.bound.to_string(),
                "observed": rep.observed.to_string(),
                "slack": rep.slack.to_string(),
                "dims": [dim_h, dim_g],
            }),
        );
    }
    Ok(report.seal())
}

// ------------------------------------------------------------ compare-series

pub const COMPARE_SERIES: ScenarioDef = ScenarioDef {
    name: "compare-series",
    summary: "sandwich two verbal series of the same group through paired index tables",
    params: &[
        ParamDoc { name: "p", default: "3", doc: "odd prime" },
        ParamDoc { name: "k", default: "5", doc: "coefficient precision of the unitriangular oracle" },
        ParamDoc { name: "x_kind", default: "\"ppower\"", doc: "first series: ppower|lowerp|frattini|dimension" },
        ParamDoc { name: "x_depth", default: "4", doc: "depth of the first series" },
        ParamDoc { name: "y_kind", default: "\"dimension\"", doc: "second series" },
        ParamDoc { name: "y_depth", default: "54", doc: "depth of the second series" },
        ParamDoc { name: "forward", default: "[[1,6],[2,18],[3,54]]", doc: "pairs (a, b) asserting X_a ⊇-like control of Y_b" },
        ParamDoc { name: "backward", default: "[[2,3],[3,9],[4,27]]", doc: "pairs (a, b) for the reverse control" },
        ParamDoc { name: "window", default: "0", doc: "extra trailing pairs that may stay above tolerance" },
        ParamDoc { name: "tol", default: "\"1/3\"", doc: "ratio tolerance for compatibility" },
        ParamDoc { name: "expect", default: "\"compatible\"", doc: "expected verdict: compatible|divergent" },
        ParamDoc { name: "budget", default: "4194304", doc: "element enumeration budget" },
    ],
    defaults: || {
        json!({
            "scenario": "compare-series",
            "p": 3, "k": 5,
            "x_kind": "ppower", "x_depth": 4,
            "y_kind": "dimension", "y_depth": 54,
            "forward": [[1, 6], [2, 18], [3, 54]],
            "backward": [[2, 3], [3, 9], [4, 27]],
            "window": 0, "tol": "1/3", "expect": "compatible",
            "budget": 4_194_304u64,
        })
    },
    validate: compare_validate,
    run: compare_run,
};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CompareConfig {
    p: u64,
    k: u32,
    x_kind: String,
    x_depth: u64,
    y_kind: String,
    y_depth: u64,
    forward: Vec<(u64, u64)>,
    backward: Vec<(u64, u64)>,
    window: usize,
    tol: String,
    expect: String,
}

fn compare_validate(doc: &Value) -> Vec<ValidationError> {
    let mut c = Checker::new(doc);
    if c.prime_field("p") == Some(2) {
        c.err("/p", "must be an odd prime");
    }
    c.u64_field("k", 2, 8);
    c.str_field("x_kind", &["ppower", "lowerp", "frattini", "dimension"]);
    c.str_field("y_kind", &["ppower", "lowerp", "frattini", "dimension"]);
    let x_depth = c.u64_field("x_depth", 1, 4096).unwrap_or(0);
    let y_depth = c.u64_field("y_depth", 1, 4096).unwrap_or(0);
    c.pairs_field("forward", x_depth, y_depth);
    c.pairs_field("backward", x_depth, y_depth);
    c.u64_field("window", 0, 64);
    if let Some(t) = c.rational_field("tol") {
        if t <= Rational::zero() || t > Rational::one() {
            c.err("/tol", "must lie in (0, 1]");
        }
    }
    c.str_field("expect", &["compatible", "divergent"]);
    c.u64_field("budget", 1024, u64::MAX);
    c.finish(&[
        "scenario", "p", "k", "x_kind", "x_depth", "y_kind", "y_depth", "forward", "backward", "window",
        "tol", "expect", "budget",
    ])
}

fn compare_run(doc: &Value) -> Result<Report, CliError> {
    let cfg: CompareConfig = typed(doc)?;
    let budget = budget_from(doc);
    let mut report = Report::new("compare-series", doc);

    let oracle = GroupOracle::unitriangular(cfg.p, cfg.k)?;
    let x_kind = parse_kind(&cfg.x_kind)
        .ok_or_else(|| CliError::Config(format!("unknown series kind {:?}", cfg.x_kind)))?;
    let y_kind = parse_kind(&cfg.y_kind)
        .ok_or_else(|| CliError::Config(format!("unknown series kind {:?}", cfg.y_kind)))?;
    let mut x = series_terms(&oracle, &SeriesSpec::new(x_kind, cfg.x_depth)?, budget)?;
    let mut y = series_terms(&oracle, &SeriesSpec::new(y_kind, cfg.y_depth)?, budget)?;
    let tol = parse_rational(&cfg.tol)?;

    let comp = compare_series(
        &oracle,
        &mut x,
        &mut y,
        &cfg.forward,
        &cfg.backward,
        cfg.window,
        &tol,
        budget,
    )?;
    for (label, table) in [
        ("x-over-forward", &comp.x_over_fwd),
        ("y-over-forward", &comp.y_over_fwd),
        ("x-over-backward", &comp.x_over_bwd),
        ("y-over-backward", &comp.y_over_bwd),
    ] {
        let rows = table
            .iter()
            .enumerate()
            .map(|(n, l)| (n as u64 + 1, BigUint::from(l.num), BigUint::from(l.den)))
            .collect();
        report.push_rows(label, rows);
    }
    let expect_compatible = cfg.expect == "compatible";
    report.check(
        "verdict-matches-expectation",
        comp.compatible == expect_compatible,
        json!({"verdict": comp.verdict, "expected": cfg.expect}),
    );
    Ok(report.seal())
}
