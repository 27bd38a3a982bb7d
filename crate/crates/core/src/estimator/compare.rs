//! Diagnostics over pairs and triples of density data: the thinning
//! comparison between two filtration chains, the three-series equality
//! experiment on analytic families, the lower-p-series dimension bound,
//! and the exact product rule for induced filtrations.

use super::density::{density, join_log, ProperLimitCertificate};
use super::EstimatorError;
use crate::arith::{DensitySequence, Rational};
use crate::group::{
    series_terms, stability_horizon, GroupOracle, SeriesChain, SeriesKind, SeriesSpec,
    SubgroupHandle,
};
use num_bigint::BigInt;
use num_traits::{One, Zero};

/// One pairing step of a chain comparison: the log-excess of the join
/// `X_a ∨ Y_b` over the reference term, normalized by the join's own
/// log-index in the ambient group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonLevel {
    pub x_index: u64,
    pub y_index: u64,
    /// `log_p |X_a Y_b : reference|` where the reference is one of the two
    /// paired terms.
    pub num: u64,
    /// `log_p |G : X_a Y_b|`.
    pub den: u64,
}

impl ComparisonLevel {
    /// The comparison ratio, undefined when the join is the whole group.
    pub fn ratio(&self) -> Option<Rational> {
        if self.den == 0 {
            None
        } else {
            Some(Rational::new(BigInt::from(self.num), BigInt::from(self.den)))
        }
    }
}

/// The four excess sequences of a two-sided chain comparison and the
/// verdict drawn from their tail window.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesComparison {
    pub x_over_fwd: Vec<ComparisonLevel>,
    pub y_over_fwd: Vec<ComparisonLevel>,
    pub x_over_bwd: Vec<ComparisonLevel>,
    pub y_over_bwd: Vec<ComparisonLevel>,
    pub compatible: bool,
    pub verdict: String,
}

fn check_pairing(
    table: &[(u64, u64)],
    x_last: u64,
    y_last: u64,
) -> Result<(), EstimatorError> {
    if table.is_empty() {
        return Err(EstimatorError::BadPairing { position: 0 });
    }
    let mut prev: Option<(u64, u64)> = None;
    for (position, &(a, b)) in table.iter().enumerate() {
        if a > x_last || b > y_last {
            return Err(EstimatorError::BadPairing { position });
        }
        if let Some((pa, pb)) = prev {
            if a < pa || b < pb {
                return Err(EstimatorError::BadPairing { position });
            }
        }
        prev = Some((a, b));
    }
    Ok(())
}

fn window_falls(seq: &[ComparisonLevel], window: usize, tol: &Rational) -> bool {
    let w = if window == 0 { seq.len() } else { window.min(seq.len()) };
    let tail = &seq[seq.len() - w..];
    let mut ratios: Vec<Rational> = Vec::new();
    for l in tail {
        match l.ratio() {
            Some(r) => ratios.push(r),
            // join = G: harmless when the reference term is G too,
            // otherwise the excess cannot shrink and the pair diverges
            None if l.num == 0 => ratios.push(Rational::zero()),
            None => return false,
        }
    }
    match (ratios.first(), ratios.last()) {
        (Some(first), Some(last)) => last <= tol && last <= first,
        _ => false,
    }
}

/// Evaluate the two thinning ratios of a chain comparison along two
/// pairing tables (each a monotone list of `(x level, y level)`, one table
/// per thinning direction). For every pair the join `X_a ∨ Y_b` is
/// computed and both excesses `log|join : X_a|` and `log|join : Y_b|` are
/// normalized by `log|G : join|`. The verdict is "compatible" exactly when
/// all four sequences end their window at most `tol` without rising.
pub fn compare_series(
    oracle: &GroupOracle,
    x: &mut SeriesChain,
    y: &mut SeriesChain,
    forward: &[(u64, u64)],
    backward: &[(u64, u64)],
    window: usize,
    tol: &Rational,
    budget: u64,
) -> Result<SeriesComparison, EstimatorError> {
    let ambient = x.ambient_log_order;
    assert_eq!(ambient, y.ambient_log_order, "chains must share the ambient group");
    check_pairing(forward, x.last_index(), y.last_index())?;
    check_pairing(backward, x.last_index(), y.last_index())?;
    let mut sequences: Vec<(Vec<ComparisonLevel>, Vec<ComparisonLevel>)> = Vec::new();
    for table in [forward, backward] {
        let mut x_over = Vec::new();
        let mut y_over = Vec::new();
        for &(a, b) in table {
            let join = join_log(
                oracle,
                &mut x.terms[a as usize],
                &mut y.terms[b as usize],
                budget,
            )?;
            let den = ambient - join;
            x_over.push(ComparisonLevel {
                x_index: a,
                y_index: b,
                num: join - x.terms[a as usize].log_order(),
                den,
            });
            y_over.push(ComparisonLevel {
                x_index: a,
                y_index: b,
                num: join - y.terms[b as usize].log_order(),
                den,
            });
        }
        sequences.push((x_over, y_over));
    }
    let (x_over_bwd, y_over_bwd) = sequences.pop().expect("two tables");
    let (x_over_fwd, y_over_fwd) = sequences.pop().expect("two tables");
    let compatible = [&x_over_fwd, &y_over_fwd, &x_over_bwd, &y_over_bwd]
        .into_iter()
        .all(|s| window_falls(s, window, tol));
    let verdict = if compatible {
        "compatible (ratios \u{2193} 0 on window)".to_string()
    } else {
        "divergent".to_string()
    };
    Ok(SeriesComparison { x_over_fwd, y_over_fwd, x_over_bwd, y_over_bwd, compatible, verdict })
}

/// Density data of one subgroup along one series family, cut at the
/// truncation-stability horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct PfdKind {
    pub kind: SeriesKind,
    pub horizon: u64,
    /// Ratio at the deepest usable level.
    pub tail: Rational,
    pub sequence: DensitySequence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PfdReport {
    pub per_kind: Vec<PfdKind>,
    pub max_pairwise_gap: Rational,
}

/// Evaluate the density of `H` along the p-power, Frattini, and dimension
/// series of the same group, each truncated at the horizon where a deeper
/// model of the family stops agreeing. On analytic families all three
/// tails approach the same dimension ratio.
pub fn pfd_equality_experiment(
    shallow: &GroupOracle,
    deep: &GroupOracle,
    h: &SubgroupHandle,
    budget: u64,
) -> Result<PfdReport, EstimatorError> {
    let kinds = [SeriesKind::PPower, SeriesKind::Frattini, SeriesKind::DimensionSubgroup];
    let mut per_kind = Vec::new();
    for kind in kinds {
        let horizon = stability_horizon(kind, shallow, deep, budget)?;
        if horizon == 0 {
            return Err(EstimatorError::HorizonTooShort { usable: 0, need: 3 });
        }
        let mut chain = series_terms(shallow, &SeriesSpec::new(kind, horizon)?, budget)?;
        let sequence = density(shallow, h, &mut chain, budget)?;
        let usable = sequence.levels().len() as u64;
        if usable < 3 {
            return Err(EstimatorError::HorizonTooShort { usable, need: 3 });
        }
        let tail = sequence.levels().last().expect("nonempty").ratio();
        per_kind.push(PfdKind { kind, horizon, tail, sequence });
    }
    let mut max_pairwise_gap = Rational::zero();
    for a in &per_kind {
        for b in &per_kind {
            let mut d = &a.tail - &b.tail;
            if d < Rational::zero() {
                d = -d;
            }
            if d > max_pairwise_gap {
                max_pairwise_gap = d;
            }
        }
    }
    Ok(PfdReport { per_kind, max_pairwise_gap })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerPBoundReport {
    pub bound: Rational,
    pub slack: Rational,
    /// Minimum tail ratio.
    pub observed: Rational,
    pub pass: bool,
}

/// Check the dimension bound for the lower-p series: every tail ratio must
/// stay at or above `dim(H)/dim(G)^2` up to the configured slack (default:
/// one quantum `1/m(horizon)` at the deepest level).
pub fn lowerp_bound_check(
    seq: &DensitySequence,
    dims: (u64, u64),
    slack: Option<Rational>,
    tail_start: u64,
) -> Result<LowerPBoundReport, EstimatorError> {
    let (dim_h, dim_g) = dims;
    assert!(dim_g >= 1 && dim_h <= dim_g, "need dim H <= dim G with dim G >= 1");
    let last = seq
        .levels()
        .last()
        .ok_or(EstimatorError::HorizonTooShort { usable: 0, need: 1 })?;
    let bound = Rational::new(BigInt::from(dim_h), BigInt::from(dim_g) * BigInt::from(dim_g));
    let slack =
        slack.unwrap_or_else(|| Rational::new(BigInt::one(), BigInt::from(last.den.clone())));
    let mut observed: Option<Rational> = None;
    for level in seq.tail(tail_start) {
        let r = level.ratio();
        observed = Some(match observed {
            None => r,
            Some(m) => m.min(r),
        });
    }
    let observed =
        observed.ok_or(EstimatorError::HorizonTooShort { usable: 0, need: 1 })?;
    let pass = observed >= &bound - &slack;
    Ok(LowerPBoundReport { bound, slack, observed, pass })
}

/// Per-level outcome of the product-rule check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultLevel {
    pub i: u64,
    /// `log|B G_i : G_i| = log|B H_i : H_i|` at this level.
    pub num_exact: bool,
    /// `log|H : H_i| = log|H G_i : G_i|` and the ambient denominators
    /// agree at this level.
    pub den_exact: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicativityReport {
    pub certificate: ProperLimitCertificate,
    pub levels: Vec<MultLevel>,
    pub all_exact: bool,
}

/// Verify the exact level-wise factorization `ratio_G(B, i) =
/// ratio_H(B, i) · ratio_G(H, i)` for `B ≤ H ≤ G`, given the three density
/// sequences (`B` and `H` along the ambient chain, `B` along the
/// filtration induced on `H`). The factorization reduces to two integer
/// identities per level — the shared numerator and the telescoping
/// denominator — and both are required exactly, with no tolerance. The
/// limit statement additionally needs the density of `H` to exist as a
/// proper limit, so a closed-form certificate is mandatory.
pub fn multiplicativity_check(
    g_of_b: &DensitySequence,
    g_of_h: &DensitySequence,
    h_of_b: &DensitySequence,
    certificate: Option<&ProperLimitCertificate>,
) -> Result<MultiplicativityReport, EstimatorError> {
    let certificate =
        certificate.ok_or(EstimatorError::MissingCertificate)?.clone();
    let mut levels = Vec::new();
    let mut all_exact = true;
    for hb in h_of_b.levels() {
        let gb = g_of_b
            .levels()
            .iter()
            .find(|l| l.i == hb.i)
            .expect("induced level missing from the ambient B sequence");
        let gh = g_of_h
            .levels()
            .iter()
            .find(|l| l.i == hb.i)
            .expect("induced level missing from the ambient H sequence");
        let num_exact = gb.num == hb.num;
        let den_exact = hb.den == gh.num && gb.den == gh.den;
        all_exact &= num_exact && den_exact;
        levels.push(MultLevel { i: hb.i, num_exact, den_exact });
    }
    if levels.is_empty() {
        return Err(EstimatorError::HorizonTooShort { usable: 0, need: 1 });
    }
    Ok(MultiplicativityReport { certificate, levels, all_exact })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, DensityLevel};
    use crate::estimator::density::induced_density;
    use crate::group::{closure, StructuralSet, DEFAULT_BUDGET};

    fn lower_p(g: &GroupOracle, depth: u64) -> SeriesChain {
        series_terms(g, &SeriesSpec::new(SeriesKind::LowerP, depth).unwrap(), DEFAULT_BUDGET)
            .unwrap()
    }

    #[test]
    fn identical_chains_are_compatible() {
        let g = GroupOracle::unitriangular(3, 3).unwrap();
        let mut x = lower_p(&g, 5);
        let mut y = x.clone();
        let pairs: Vec<(u64, u64)> = (1..=5).map(|i| (i, i)).collect();
        let report = compare_series(
            &g,
            &mut x,
            &mut y,
            &pairs,
            &pairs,
            3,
            &Rational::zero(),
            DEFAULT_BUDGET,
        )
        .unwrap();
        assert!(report.compatible);
        assert_eq!(report.verdict, "compatible (ratios \u{2193} 0 on window)");
        for seq in [&report.x_over_fwd, &report.y_over_fwd, &report.x_over_bwd] {
            assert!(seq.iter().all(|l| l.num == 0));
        }
    }

    #[test]
    fn ppower_and_frattini_coincide_on_cyclic_groups() {
        let g = GroupOracle::cyclic(3, 5).unwrap();
        let mut x =
            series_terms(&g, &SeriesSpec::new(SeriesKind::PPower, 4).unwrap(), DEFAULT_BUDGET)
                .unwrap();
        let mut y =
            series_terms(&g, &SeriesSpec::new(SeriesKind::Frattini, 4).unwrap(), DEFAULT_BUDGET)
                .unwrap();
        let pairs: Vec<(u64, u64)> = (1..=4).map(|i| (i, i)).collect();
        let report = compare_series(
            &g,
            &mut x,
            &mut y,
            &pairs,
            &pairs,
            0,
            &Rational::zero(),
            DEFAULT_BUDGET,
        )
        .unwrap();
        assert!(report.compatible);
        let zero = report
            .x_over_fwd
            .iter()
            .chain(&report.y_over_fwd)
            .all(|l| l.num == 0);
        assert!(zero);
    }

    #[test]
    fn axis_box_chain_diverges_from_lower_p() {
        let g = GroupOracle::unitriangular(3, 3).unwrap();
        let mut x = lower_p(&g, 4);
        // first-coordinate congruence chain: never absorbs the y and z
        // directions, so the lower-p terms stick out more and more
        let mut terms = vec![SubgroupHandle::full(&g)];
        for i in 1..=3 {
            terms.push(
                SubgroupHandle::structural(&g, StructuralSet::Box { x: i, y: 0, z: 0 })
                    .unwrap(),
            );
        }
        let mut y = SeriesChain {
            kind: SeriesKind::PPower,
            ambient_log_order: g.log_order(),
            terms,
            truncated_at: None,
        };
        let forward = [(2, 1), (3, 2), (4, 3)];
        let backward = [(2, 1), (3, 2), (4, 3)];
        let report = compare_series(
            &g,
            &mut x,
            &mut y,
            &forward,
            &backward,
            0,
            &rat(1, 100),
            DEFAULT_BUDGET,
        )
        .unwrap();
        assert!(!report.compatible);
        assert_eq!(report.verdict, "divergent");
        let ratios: Vec<Rational> =
            report.x_over_fwd.iter().map(|l| l.ratio().unwrap()).collect();
        assert_eq!(ratios, vec![rat(1, 1), rat(3, 2), rat(5, 3)]);
        assert!(report.y_over_fwd.iter().all(|l| l.num == 0));
    }

    #[test]
    fn pairing_tables_must_be_monotone_and_in_range() {
        let g = GroupOracle::unitriangular(3, 3).unwrap();
        let mut x = lower_p(&g, 4);
        let mut y = x.clone();
        let good = [(1, 1), (2, 2)];
        for (table, position) in [
            (vec![], 0usize),
            (vec![(2, 1), (1, 2)], 1),
            (vec![(1, 1), (2, 9)], 1),
        ] {
            let err = compare_series(
                &g,
                &mut x,
                &mut y,
                &table,
                &good,
                0,
                &Rational::zero(),
                DEFAULT_BUDGET,
            )
            .unwrap_err();
            assert_eq!(err, EstimatorError::BadPairing { position });
        }
    }

    #[test]
    fn heisenberg_pfd_tails_cluster_near_one_third() {
        let shallow = GroupOracle::unitriangular(3, 3).unwrap();
        let deep = GroupOracle::unitriangular(3, 4).unwrap();
        let x = shallow.uni(1, 0, 0).unwrap();
        let h = SubgroupHandle::from_enumerated(
            closure(&shallow, [&x], DEFAULT_BUDGET).unwrap(),
        );
        let report = pfd_equality_experiment(&shallow, &deep, &h, DEFAULT_BUDGET).unwrap();
        let horizons: Vec<u64> = report.per_kind.iter().map(|k| k.horizon).collect();
        assert_eq!(horizons, vec![3, 3, 27]);
        let tails: Vec<Rational> = report.per_kind.iter().map(|k| k.tail.clone()).collect();
        assert_eq!(tails, vec![rat(1, 3), rat(3, 8), rat(1, 3)]);
        assert_eq!(report.max_pairwise_gap, rat(1, 24));
        assert!(report.per_kind.iter().all(|k| k.sequence.levels().len() >= 3));
    }

    #[test]
    fn shallow_pair_reports_horizon_too_short() {
        let shallow = GroupOracle::unitriangular(3, 2).unwrap();
        let deep = GroupOracle::unitriangular(3, 3).unwrap();
        let h = SubgroupHandle::full(&shallow);
        let err = pfd_equality_experiment(&shallow, &deep, &h, DEFAULT_BUDGET).unwrap_err();
        assert_eq!(err, EstimatorError::HorizonTooShort { usable: 2, need: 3 });
    }

    #[test]
    fn bound_check_applies_dimension_slack() {
        let seq = DensitySequence::new(
            3,
            (2..=5).map(|i| DensityLevel::new(i, i - 1, 2 * (i - 1))).collect(),
        )
        .unwrap();
        // all ratios are exactly 1/2
        let report = lowerp_bound_check(&seq, (2, 3), Some(rat(1, 100)), 2).unwrap();
        assert_eq!(report.bound, rat(2, 9));
        assert_eq!(report.observed, rat(1, 2));
        assert!(report.pass);
        // default slack is one quantum at the deepest level
        let report = lowerp_bound_check(&seq, (2, 3), None, 2).unwrap();
        assert_eq!(report.slack, rat(1, 8));
        // a tail sitting at 1/4 misses a 1/3 bound by more than the slack
        let low = DensitySequence::new(
            3,
            (2..=4).map(|i| DensityLevel::new(i, i - 1, 4 * (i - 1))).collect(),
        )
        .unwrap();
        let report = lowerp_bound_check(&low, (3, 3), Some(rat(1, 100)), 2).unwrap();
        assert_eq!(report.bound, rat(1, 3));
        assert!(!report.pass);
    }

    #[test]
    fn product_rule_requires_certificate_and_exactness() {
        let g_of_b = DensitySequence::new(
            3,
            (1..=6).map(|i| DensityLevel::new(i, i - 1, 2 * i)).collect(),
        )
        .unwrap();
        let g_of_h = DensitySequence::new(
            3,
            (1..=6).map(|i| DensityLevel::new(i, i, 2 * i)).collect(),
        )
        .unwrap();
        let h_of_b = DensitySequence::new(
            3,
            (2..=6).map(|i| DensityLevel::new(i, i - 1, i)).collect(),
        )
        .unwrap();
        assert_eq!(
            multiplicativity_check(&g_of_b, &g_of_h, &h_of_b, None).unwrap_err(),
            EstimatorError::MissingCertificate
        );
        let cert = ProperLimitCertificate::closed_form(rat(1, 2), "balanced-support").unwrap();
        let report =
            multiplicativity_check(&g_of_b, &g_of_h, &h_of_b, Some(&cert)).unwrap();
        assert!(report.all_exact);
        assert_eq!(report.levels.len(), 5);
        // perturb one induced numerator: that level must be flagged
        let bent = DensitySequence::new(
            3,
            (2..=6)
                .map(|i| DensityLevel::new(i, if i == 4 { i } else { i - 1 }, i))
                .collect(),
        )
        .unwrap();
        let report = multiplicativity_check(&g_of_b, &g_of_h, &bent, Some(&cert)).unwrap();
        assert!(!report.all_exact);
        let flagged: Vec<u64> =
            report.levels.iter().filter(|l| !l.num_exact).map(|l| l.i).collect();
        assert_eq!(flagged, vec![4]);
    }

    #[test]
    fn product_rule_holds_on_a_computed_triple() {
        let g = GroupOracle::cyclic(3, 4).unwrap();
        let mut chain =
            series_terms(&g, &SeriesSpec::new(SeriesKind::PPower, 5).unwrap(), DEFAULT_BUDGET)
                .unwrap();
        let hp = g.element_from_coords(vec![3]).unwrap();
        let bp = g.element_from_coords(vec![9]).unwrap();
        let mut h =
            SubgroupHandle::from_enumerated(closure(&g, [&hp], DEFAULT_BUDGET).unwrap());
        let b = SubgroupHandle::from_enumerated(closure(&g, [&bp], DEFAULT_BUDGET).unwrap());
        let g_of_b = density(&g, &b, &mut chain, DEFAULT_BUDGET).unwrap();
        let g_of_h = density(&g, &h, &mut chain, DEFAULT_BUDGET).unwrap();
        let h_of_b = induced_density(&g, &mut h, &b, &mut chain, DEFAULT_BUDGET).unwrap();
        let cert = ProperLimitCertificate::closed_form(rat(1, 1), "index-p-line").unwrap();
        let report =
            multiplicativity_check(&g_of_b, &g_of_h, &h_of_b, Some(&cert)).unwrap();
        assert!(report.all_exact, "levels: {:?}", report.levels);
    }
}
