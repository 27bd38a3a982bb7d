//! Lattice scenarios: procyclic spectra in `Z_p^2`, apartment patterns,
//! the prescribed-density window, and lifts to `Z_p^3`.

use super::{typed, ParamDoc, ScenarioDef};
use crate::config::{Checker, ValidationError};
use crate::report::{near, Report};
use crate::CliError;
use hdlab_core::{
    apartment_realize, apartment_spectrum, apartment_spectrum_window, ceil_rational,
    hdim_cyclic, lift_filtration, liminf_estimate, parse_rational, rat, rat_nat, CyclicTarget,
    DensityLevel, DensitySequence, LatticeFiltration, PrescribedDensity, Rational, ScaledPAdic,
    Schedule,
};
use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use serde::Deserialize;
use serde_json::{json, Value};

fn level_ratio(l: &DensityLevel) -> Rational {
    rat_nat(&l.num, &l.den)
}

// ---------------------------------------------------------------- zp2-ppower

pub const ZP2_PPOWER: ScenarioDef = ScenarioDef {
    name: "zp2-ppower",
    summary: "spectrum of procyclic subgroup densities in Z_p^2 under the p-power filtration",
    params: &[
        ParamDoc { name: "p", default: "3", doc: "prime modulus" },
        ParamDoc { name: "window", default: "24", doc: "filtration window length" },
        ParamDoc { name: "tail_start", default: "12", doc: "first level of the liminf tail" },
    ],
    defaults: || json!({"scenario": "zp2-ppower", "p": 3, "window": 24, "tail_start": 12}),
    validate: zp2_validate,
    run: zp2_run,
};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Zp2Config {
    p: u64,
    window: u64,
    tail_start: u64,
}

fn zp2_validate(doc: &Value) -> Vec<ValidationError> {
    let mut c = Checker::new(doc);
    c.prime_field("p");
    let w = c.u64_field("window", 2, 4096);
    let t = c.u64_field("tail_start", 1, 4096);
    if let (Some(w), Some(t)) = (w, t) {
        if t >= w {
            c.err("/tail_start", format!("tail start {t} leaves no window below {w}"));
        }
    }
    c.finish(&["scenario", "p", "window", "tail_start"])
}

fn zp2_run(doc: &Value) -> Result<Report, CliError> {
    let cfg: Zp2Config = typed(doc)?;
    let mut report = Report::new("zp2-ppower", doc);
    let filt = LatticeFiltration::p_power(cfg.p, cfg.window)?;
    let mut points: Vec<Rational> = Vec::new();

    let half = rat(1, 2);
    for (label, lam) in [("lambda=0", 0i64), ("lambda=1", 1), ("lambda=p", cfg.p as i64)] {
        let lambda = ScaledPAdic::exact_integer(cfg.p, lam)?;
        let cd = hdim_cyclic(&filt, &CyclicTarget::UnitFirst { lambda }, cfg.tail_start)?;
        let exact = cd.estimate.exact.clone();
        report.push_sequence(label, &cd.sequence, Some(&cd.estimate));
        report.check(
            &format!("{label}-hdim-exactly-one-half"),
            exact.as_ref() == Some(&half),
            json!({
                "window_min": cd.estimate.window_min.to_string(),
                "exact": exact.as_ref().map(Rational::to_string),
                "certificate": cd.estimate.certificate,
            }),
        );
        points.push(exact.unwrap_or(cd.estimate.window_min));
    }

    // The trivial and full subgroups close the spectrum from both ends:
    // HG_i = G_i and HG_i = Z_p^2 respectively, at every level.
    for (label, full) in [("trivial", false), ("full", true)] {
        let levels = filt
            .entries()
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let den = e.index_exponent();
                let num = if full { den.clone() } else { BigUint::zero() };
                DensityLevel::new(i as u64, num, den)
            })
            .collect();
        let seq = DensitySequence::new(cfg.p, levels)?;
        let est = liminf_estimate(&seq, cfg.tail_start)?;
        let want = if full { Rational::one() } else { Rational::zero() };
        report.push_sequence(label, &seq, Some(&est));
        report.check(
            &format!("{label}-hdim-exact"),
            est.exact.as_ref() == Some(&want),
            json!({"exact": est.exact.as_ref().map(Rational::to_string)}),
        );
        points.push(est.exact.unwrap_or(est.window_min));
    }

    points.sort();
    points.dedup();
    let expected = vec![Rational::zero(), half, Rational::one()];
    report.check(
        "spectrum-is-zero-half-one",
        points == expected,
        json!({"points": points.iter().map(Rational::to_string).collect::<Vec<_>>()}),
    );
    Ok(report.seal())
}

// ----------------------------------------------------------------- apartment

pub const APARTMENT: ScenarioDef = ScenarioDef {
    name: "apartment",
    summary: "realize a spectrum triple as an apartment filtration and round-trip it",
    params: &[
        ParamDoc { name: "p", default: "3", doc: "prime modulus" },
        ParamDoc { name: "xi", default: "1/5", doc: "spectrum minimum" },
        ParamDoc { name: "eta", default: "1/4", doc: "second spectrum point" },
        ParamDoc { name: "zeta", default: "3/4", doc: "top interior spectrum point" },
        ParamDoc { name: "window", default: "40", doc: "levels to materialize" },
    ],
    defaults: || {
        json!({
            "scenario": "apartment",
            "p": 3,
            "xi": "1/5",
            "eta": "1/4",
            "zeta": "3/4",
            "window": 40,
        })
    },
    validate: apartment_validate,
    run: apartment_run,
};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ApartmentConfig {
    p: u64,
    xi: String,
    eta: String,
    zeta: String,
    window: u64,
}

/// The two realizable arms of the constraint, checked on exact rationals.
fn realizable(xi: &Rational, eta: &Rational, zeta: &Rational) -> bool {
    let half = rat(1, 2);
    let unit = Rational::zero()..=Rational::one();
    if ![xi, eta, zeta].iter().all(|v| unit.contains(*v)) {
        return false;
    }
    let co_zeta = Rational::one() - zeta;
    (xi <= eta && *eta <= co_zeta && co_zeta <= half)
        || (zeta == eta && *xi <= co_zeta && co_zeta <= half)
}

fn apartment_validate(doc: &Value) -> Vec<ValidationError> {
    let mut c = Checker::new(doc);
    c.prime_field("p");
    let xi = c.rational_in("xi", &Rational::zero(), &Rational::one());
    let eta = c.rational_in("eta", &Rational::zero(), &Rational::one());
    let zeta = c.rational_in("zeta", &Rational::zero(), &Rational::one());
    c.u64_field("window", 1, 4096);
    if let (Some(xi), Some(eta), Some(zeta)) = (xi, eta, zeta) {
        if !realizable(&xi, &eta, &zeta) {
            c.err(
                "/xi",
                format!(
                    "({xi}, {eta}, {zeta}) violates the restriction: need \
                     xi <= eta <= 1 - zeta <= 1/2, or zeta = eta with xi <= 1 - zeta <= 1/2"
                ),
            );
        }
    }
    c.finish(&["scenario", "p", "xi", "eta", "zeta", "window"])
}

fn apartment_run(doc: &Value) -> Result<Report, CliError> {
    let cfg: ApartmentConfig = typed(doc)?;
    let mut report = Report::new("apartment", doc);
    let xi = parse_rational(&cfg.xi)?;
    let eta = parse_rational(&cfg.eta)?;
    let zeta = parse_rational(&cfg.zeta)?;

    let (filt, pattern) = apartment_realize(cfg.p, &xi, &eta, &zeta, cfg.window)?;
    let spectrum = apartment_spectrum(&pattern)?;
    let mut expected = vec![Rational::zero(), xi.clone(), eta.clone(), zeta.clone(), Rational::one()];
    expected.sort();
    expected.dedup();

    let pairs: Vec<(BigUint, BigUint)> =
        filt.entries().iter().map(|e| (e.a.clone(), e.b.clone())).collect();
    let window_view = apartment_spectrum_window(&pairs)?;
    report.push_rows(
        "window-slopes",
        filt.entries()
            .iter()
            .enumerate()
            .map(|(i, e)| (i as u64, e.a.clone(), &e.a + &e.b))
            .collect(),
    );

    report.check(
        "round-trip-is-exact",
        spectrum.exact
            && spectrum.points == expected
            && spectrum.xi == xi
            && spectrum.eta == eta
            && spectrum.zeta == zeta,
        json!({
            "points": spectrum.points.iter().map(Rational::to_string).collect::<Vec<_>>(),
            "window_view": {
                "xi": window_view.xi.to_string(),
                "eta": window_view.eta.to_string(),
                "zeta": window_view.zeta.to_string(),
            },
        }),
    );

    // Triples off both arms of the restriction must be refused outright.
    let violating = [
        ("1/4", "1/5", "3/4"),
        ("1/5", "2/3", "3/4"),
        ("1/5", "1/4", "1/4"),
        ("6/5", "1/4", "3/4"),
    ];
    let mut rejections = Vec::new();
    let mut all_rejected = true;
    for (x, e, z) in violating {
        let triple = (parse_rational(x)?, parse_rational(e)?, parse_rational(z)?);
        match apartment_realize(cfg.p, &triple.0, &triple.1, &triple.2, cfg.window) {
            Err(err) => rejections.push(json!({
                "triple": format!("({x}, {e}, {z})"),
                "error": err.to_string(),
            })),
            Ok(_) => {
                all_rejected = false;
                rejections.push(json!({
                    "triple": format!("({x}, {e}, {z})"),
                    "error": "accepted",
                }));
            }
        }
    }
    report.check("rejects-unrealizable-triples", all_rejected, json!({"cases": rejections}));
    Ok(report.seal())
}

// -------------------------------------------------------------------- prop34

pub const PROP34: ScenarioDef = ScenarioDef {
    name: "prop34",
    summary: "prescribed-density window: ratios pinned just above nu with anchor-level brackets",
    params: &[
        ParamDoc { name: "p", default: "3", doc: "prime modulus" },
        ParamDoc { name: "nu", default: "2/5", doc: "target density in [1/(p+1), (p-1)/(p+1)]" },
        ParamDoc { name: "window", default: "82", doc: "last materialized level" },
        ParamDoc { name: "tail_start", default: "1", doc: "first level of the liminf tail" },
        ParamDoc {
            name: "extend_for_anchor",
            default: "true",
            doc: "materialize a second window when the next anchor lies past this one",
        },
    ],
    defaults: || {
        json!({
            "scenario": "prop34",
            "p": 3,
            "nu": "2/5",
            "window": 82,
            "tail_start": 1,
            "extend_for_anchor": true,
        })
    },
    validate: prop34_validate,
    run: prop34_run,
};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Prop34Config {
    p: u64,
    nu: String,
    window: u64,
    tail_start: u64,
    extend_for_anchor: bool,
}

/// Largest anchor position worth materializing a second window for.
const ANCHOR_EXTEND_CAP: u64 = 4096;

fn prop34_validate(doc: &Value) -> Vec<ValidationError> {
    let mut c = Checker::new(doc);
    if let Some(p) = c.prime_field("p") {
        let lo = Rational::new(BigInt::one(), BigInt::from(p + 1));
        let hi = Rational::new(BigInt::from(p - 1), BigInt::from(p + 1));
        c.rational_in("nu", &lo, &hi);
    } else {
        c.rational_field("nu");
    }
    let w = c.u64_field("window", 1, 8190);
    let t = c.u64_field("tail_start", 1, 8190);
    if let (Some(w), Some(t)) = (w, t) {
        if t > w {
            c.err("/tail_start", format!("tail start {t} lies past the window end {w}"));
        }
    }
    c.bool_field("extend_for_anchor");
    c.finish(&["scenario", "p", "nu", "window", "tail_start", "extend_for_anchor"])
}

fn prop34_run(doc: &Value) -> Result<Report, CliError> {
    let cfg: Prop34Config = typed(doc)?;
    let mut report = Report::new("prop34", doc);
    let nu = parse_rational(&cfg.nu)?;
    let pd = PrescribedDensity::new(cfg.p, nu.clone(), Some(cfg.window))?;
    let seq = pd.density()?;
    let est = liminf_estimate(&seq, cfg.tail_start)?;
    report.push_sequence("prescribed", &seq, Some(&est));

    // First-level value straight from the defining formula: the base anchor
    // sits at 1, so r_1 = max(p, p^2 - g(1)) / (p (p + 1)) with
    // g(1) = ceil(p^2 - p (p + 1) nu - 1).
    let p_big = BigInt::from(cfg.p);
    let g1 = ceil_rational(
        &(Rational::from_integer(&p_big * &p_big)
            - Rational::from_integer(&p_big * (cfg.p + 1)) * &nu
            - Rational::one()),
    );
    let expected_r1 = Rational::new(
        (&p_big * &p_big - g1).max(p_big.clone()),
        &p_big * (cfg.p + 1),
    );
    let r1 = level_ratio(&seq.levels()[1]);
    report.check(
        "r1-matches-closed-form",
        r1 == expected_r1,
        json!({"r1": r1.to_string(), "expected": expected_r1.to_string()}),
    );

    let above = seq.levels().iter().skip(1).all(|l| level_ratio(l) > nu);
    report.check("every-ratio-exceeds-nu", above, json!({"nu": nu.to_string()}));

    // Bracket r at the first two anchors: nu <= r <= nu + 1/(p^lambda (p+1)).
    // An anchor past this window gets its own, longer window.
    let mut anchor_data = Vec::new();
    let mut brackets_hold = true;
    for anchor in pd.anchors().iter().take(2) {
        let Some(lambda) = anchor.lambda.to_u64().filter(|l| *l <= ANCHOR_EXTEND_CAP) else {
            anchor_data.push(json!({
                "lambda": anchor.lambda.to_string(),
                "skipped": "anchor past the extension cap",
            }));
            continue;
        };
        let ratio = if lambda <= cfg.window {
            level_ratio(&seq.levels()[lambda as usize])
        } else if cfg.extend_for_anchor {
            let wide = PrescribedDensity::new(cfg.p, nu.clone(), Some(lambda))?;
            level_ratio(&wide.density()?.levels()[lambda as usize])
        } else {
            anchor_data.push(json!({
                "lambda": lambda.to_string(),
                "skipped": "outside the window and extension is disabled",
            }));
            continue;
        };
        let upper = &nu
            + Rational::new(BigInt::one(), BigInt::from(cfg.p).pow(lambda as u32) * (cfg.p + 1));
        let ok = ratio >= nu && ratio <= upper;
        brackets_hold &= ok;
        anchor_data.push(json!({
            "lambda": lambda.to_string(),
            "ratio": ratio.to_string(),
            "upper": upper.to_string(),
            "within": ok,
        }));
    }
    report.check("anchor-ratios-stay-in-bracket", brackets_hold, json!({"anchors": anchor_data}));
    Ok(report.seal())
}

// ---------------------------------------------------------------------- lift

pub const LIFT: ScenarioDef = ScenarioDef {
    name: "lift",
    summary: "lift a Z_p^2 filtration through Z_p^3 -> Z_p^2 with vanishing kernel share",
    params: &[
        ParamDoc { name: "p", default: "3", doc: "prime modulus" },
        ParamDoc { name: "nu", default: "2/5", doc: "target density of the base filtration" },
        ParamDoc { name: "window", default: "8", doc: "levels of the target window" },
        ParamDoc {
            name: "kernel_tolerance",
            default: "1/50",
            doc: "required bound on the final kernel ratio",
        },
        ParamDoc {
            name: "sample_tolerance",
            default: "1/50",
            doc: "allowed gap between a sampled subgroup and its image density",
        },
    ],
    defaults: || {
        json!({
            "scenario": "lift",
            "p": 3,
            "nu": "2/5",
            "window": 8,
            "kernel_tolerance": "1/50",
            "sample_tolerance": "1/50",
        })
    },
    validate: lift_validate,
    run: lift_run,
};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LiftConfig {
    p: u64,
    nu: String,
    window: u64,
    kernel_tolerance: String,
    sample_tolerance: String,
}

fn lift_validate(doc: &Value) -> Vec<ValidationError> {
    let mut c = Checker::new(doc);
    if let Some(p) = c.prime_field("p") {
        let lo = Rational::new(BigInt::one(), BigInt::from(p + 1));
        let hi = Rational::new(BigInt::from(p - 1), BigInt::from(p + 1));
        c.rational_in("nu", &lo, &hi);
    } else {
        c.rational_field("nu");
    }
    c.u64_field("window", 2, 512);
    c.rational_in("kernel_tolerance", &Rational::zero(), &Rational::one());
    c.rational_in("sample_tolerance", &Rational::zero(), &Rational::one());
    c.finish(&["scenario", "p", "nu", "window", "kernel_tolerance", "sample_tolerance"])
}

/// Fixed battery of generator sets sampled for the image-agreement check.
fn sample_battery() -> Vec<Vec<Vec<BigInt>>> {
    let vecs = |rows: &[[i64; 3]]| {
        rows.iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>())
            .collect::<Vec<_>>()
    };
    vec![
        vecs(&[[1, 0, 0], [0, 1, 0]]),
        vecs(&[[1, 1, 0], [0, 0, 1]]),
        vecs(&[[2, 1, 3]]),
        vecs(&[[1, 0, 1], [0, 1, 2], [3, 3, 3]]),
    ]
}

fn lift_run(doc: &Value) -> Result<Report, CliError> {
    let cfg: LiftConfig = typed(doc)?;
    let mut report = Report::new("lift", doc);
    let nu = parse_rational(&cfg.nu)?;
    let kernel_tol = parse_rational(&cfg.kernel_tolerance)?;
    let sample_tol = parse_rational(&cfg.sample_tolerance)?;

    let target = PrescribedDensity::new(cfg.p, nu, None)?.to_filtration(cfg.window)?;
    let phi: Vec<Vec<BigInt>> = vec![
        vec![BigInt::one(), BigInt::zero(), BigInt::zero()],
        vec![BigInt::zero(), BigInt::one(), BigInt::zero()],
    ];
    let lifted = lift_filtration(&phi, &target, &Schedule::SqrtDen)?;

    // Re-apply the map to every lifted level and demand the stored image.
    let mut image_exact = true;
    for lvl in lifted.levels() {
        image_exact &= lvl.subgroup.image(lifted.map())? == lvl.image;
    }
    report.check(
        "image-recovers-target-levels",
        image_exact,
        json!({"levels": lifted.levels().len()}),
    );

    let kd = lifted.kernel_density();
    let ratios: Vec<Rational> = kd
        .levels()
        .iter()
        .filter(|l| !l.den.is_zero())
        .map(level_ratio)
        .collect();
    report.push_sequence("kernel", &kd, None);
    let decreasing = ratios.windows(2).all(|w| w[1] < w[0]);
    report.check(
        "kernel-share-strictly-decreases",
        decreasing,
        json!({"first": ratios.first().map(Rational::to_string),
               "last": ratios.last().map(Rational::to_string)}),
    );
    let final_ok = ratios.last().is_some_and(|r| *r <= kernel_tol);
    report.check(
        "kernel-share-final-below-tolerance",
        final_ok,
        json!({"last": ratios.last().map(Rational::to_string),
               "tolerance": kernel_tol.to_string()}),
    );

    for (s, gens) in sample_battery().into_iter().enumerate() {
        let sub = lifted.subgroup_density(&gens)?;
        let img = lifted.image_density(&gens)?;
        report.push_sequence(&format!("sample-{s}-subgroup"), &sub, None);
        report.push_sequence(&format!("sample-{s}-image"), &img, None);
        let last = |seq: &DensitySequence| {
            seq.levels().iter().rev().find(|l| !l.den.is_zero()).map(level_ratio)
        };
        let (a, b) = (last(&sub), last(&img));
        let ok = match (&a, &b) {
            (Some(a), Some(b)) => near(a, b, &sample_tol),
            _ => false,
        };
        report.check(
            &format!("sample-{s}-matches-image"),
            ok,
            json!({"subgroup": a.map(|r| r.to_string()),
                   "image": b.map(|r| r.to_string()),
                   "tolerance": sample_tol.to_string()}),
        );
    }
    Ok(report.seal())
}
