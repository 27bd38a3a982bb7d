//! Recursive construction of a closed subgroup with prescribed density
//! inside a coordinate-product tower.
//!
//! The builder maintains an ascending chain `H_1 ⊆ H_2 ⊆ ...` satisfying,
//! at every level `i`,
//!
//! 1. `H_i G_i = H_{i'} G_i` for `i ≤ i'` — later stages never disturb
//!    earlier projections;
//! 2. `log_p|H_i G_i : G_i| / m(i) ≥ η − 1/m(i)` — the running ratio never
//!    falls more than one quantum below the target;
//! 3. `log_p|H_i G_i : G_i| / m(i) ≤ η` at infinitely many `i` — witnessed
//!    here by an explicit checkpoint log.
//!
//! Each step either extends at the very next level (its ratio is still at
//! most `η`) or freezes the subgroup and advances to the minimal level
//! whose ratio falls strictly below `η` again; both paths finish by
//! choosing a log-order `l` inside the exact bracket
//! `max(l', ⌈η·m⌉−1) ≤ l ≤ min(l'', ⌊η·m⌋)` and realizing it with fresh
//! coordinate generators, so every quantity stays an integer or an exact
//! rational throughout.

use num_traits::{One, ToPrimitive, Zero};

use super::density::ProperLimitCertificate;
use super::tower::{CoordinateTower, Echelon, SubTower};
use super::EstimatorError;
use crate::arith::{
    ceil_rational, floor_rational, liminf_estimate, ratio_bound_persists, DensityLevel,
    DensitySequence, HdimEstimate, Rational,
};
use num_bigint::{BigInt, BigUint};

/// How to pick `l` when the bracket admits more than one value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieBreak {
    /// Largest valid `l`: reaches the `≤ η` checkpoints with the least
    /// slack below the target.
    LargestValidL,
    /// Smallest valid `l`.
    SmallestValidL,
}

/// What happened at one level of the construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepCase {
    /// Level covered by externally supplied seed generators.
    Seed,
    /// Concluding level of a step: `l` chosen inside the bracket, subgroup
    /// possibly extended, ratio at most the target.
    Extend,
    /// Intermediate level of an advance: subgroup unchanged, ratio still
    /// above the target.
    Frozen,
}

#[derive(Debug, Clone)]
pub struct ChainLevel {
    pub i: u64,
    /// `log_p|H_i G_i : G_i|`.
    pub num: u64,
    /// `m(i)`.
    pub den: u64,
    pub case: StepCase,
}

/// The full record of a run: per-level data, the checkpoint log for the
/// `≤ η` condition, and the ascending generator sets (level `i` owns the
/// first `stage_sizes[i-1]` generators).
#[derive(Debug, Clone)]
pub struct ChainState {
    pub eta: Rational,
    pub levels: Vec<ChainLevel>,
    pub checkpoints: Vec<u64>,
    pub generators: Vec<Vec<u64>>,
    pub stage_sizes: Vec<usize>,
}

impl ChainState {
    /// Generators of `H_i`.
    pub fn subgroup_at(&self, i: u64) -> &[Vec<u64>] {
        &self.generators[..self.stage_sizes[i as usize - 1]]
    }
}

fn ratio_le(num: u64, den: u64, eta: &Rational) -> bool {
    Rational::new(num.into(), den.into()) <= *eta
}

fn ratio_lt(num: u64, den: u64, eta: &Rational) -> bool {
    Rational::new(num.into(), den.into()) < *eta
}

/// Condition 2 at one level: `num/den ≥ η − 1/den`, i.e. `num + 1 ≥ η·den`.
fn floor_condition(num: u64, den: u64, eta: &Rational) -> bool {
    Rational::new((num + 1).into(), den.into()) >= *eta
}

/// Build a chain from scratch over the first `steps` levels of the tower.
pub fn chain_build(
    tower: &CoordinateTower,
    eta: &Rational,
    steps: u64,
    tie_break: TieBreak,
) -> Result<(ChainState, DensitySequence), EstimatorError> {
    run(tower, eta, steps, tie_break, &[], 0)
}

/// Resume the construction from externally supplied generators that stand
/// for the chain through `seed_level`; the seed must satisfy the running
/// floor condition at every covered level.
pub fn chain_build_seeded(
    tower: &CoordinateTower,
    eta: &Rational,
    steps: u64,
    tie_break: TieBreak,
    seed: &[Vec<u64>],
    seed_level: u64,
) -> Result<(ChainState, DensitySequence), EstimatorError> {
    if seed_level == 0 || seed_level > steps {
        return Err(EstimatorError::BadSeed { level: seed_level });
    }
    run(tower, eta, steps, tie_break, seed, seed_level)
}

fn run(
    tower: &CoordinateTower,
    eta: &Rational,
    steps: u64,
    tie_break: TieBreak,
    seed: &[Vec<u64>],
    seed_level: u64,
) -> Result<(ChainState, DensitySequence), EstimatorError> {
    if *eta < Rational::zero() || *eta > Rational::one() {
        return Err(EstimatorError::TargetOutOfRange(eta.to_string()));
    }
    if steps == 0 || steps > tower.depth() {
        return Err(EstimatorError::TowerDepthExhausted { depth: tower.depth() });
    }
    let p = tower.p();
    let width = tower.width();
    let mut ech = Echelon::new(p, width as usize);
    let mut generators: Vec<Vec<u64>> = Vec::new();
    let mut stage_sizes: Vec<usize> = Vec::new();
    let mut levels: Vec<ChainLevel> = Vec::new();
    let mut checkpoints: Vec<u64> = Vec::new();

    for v in seed {
        if v.len() as u64 != width {
            return Err(EstimatorError::BadSeed { level: 0 });
        }
        let reduced: Vec<u64> = v.iter().map(|&x| x % p).collect();
        ech.insert(&reduced);
        generators.push(reduced);
    }
    for i in 1..=seed_level {
        let num = ech.rank_at(tower.m(i));
        if !floor_condition(num, tower.m(i), eta) {
            return Err(EstimatorError::BadSeed { level: i });
        }
        if ratio_le(num, tower.m(i), eta) {
            checkpoints.push(i);
        }
        levels.push(ChainLevel { i, num, den: tower.m(i), case: StepCase::Seed });
        stage_sizes.push(generators.len());
    }

    let mut j = seed_level;
    while j < steps {
        // decide where this step concludes
        let next_num = ech.rank_at(tower.m(j + 1));
        let k = if ratio_le(next_num, tower.m(j + 1), eta) {
            j + 1
        } else {
            // advance: freeze the subgroup until the ratio falls strictly
            // below the target again
            let mut found = None;
            for cand in j + 2..=steps {
                if ratio_lt(ech.rank_at(tower.m(cand)), tower.m(cand), eta) {
                    found = Some(cand);
                    break;
                }
            }
            let Some(k) = found else {
                return Err(EstimatorError::TowerDepthExhausted { depth: steps });
            };
            for i in j + 1..k {
                let num = ech.rank_at(tower.m(i));
                // the ratio exceeds eta here, so the floor holds with room
                assert!(floor_condition(num, tower.m(i), eta), "frozen level breaks the floor");
                levels.push(ChainLevel { i, num, den: tower.m(i), case: StepCase::Frozen });
                stage_sizes.push(generators.len());
            }
            // the step bound carries the floor across the advance:
            // the ratio at k-1 is >= eta, hence the widened ratio stays
            // >= eta >= eta - 1/m(k)
            let x = BigUint::from(ech.rank_at(tower.m(k - 1)));
            let y = BigUint::from(tower.m(k - 1));
            let z = BigUint::from(tower.m(k) - tower.m(k - 1));
            assert!(ratio_bound_persists(&x, &y, &z, eta), "advance loses the step bound");
            k
        };

        let m_k = tower.m(k);
        let l_lo = ech.rank_at(m_k);
        let l_hi = ech.rank_at(tower.m(k - 1)) + (m_k - tower.m(k - 1));
        // both entry paths guarantee the floor for the upper bound: the
        // widened previous-level index never loses more than one quantum
        assert!(floor_condition(l_hi, m_k, eta), "upper realization bound breaks the floor");
        let eta_m = eta * Rational::from_integer(m_k.into());
        let bracket_lo = (ceil_rational(&eta_m) - BigInt::one())
            .max(BigInt::zero())
            .to_u64()
            .expect("small");
        let bracket_hi = floor_rational(&eta_m).max(BigInt::zero()).to_u64().expect("small");
        let lower = l_lo.max(bracket_lo);
        let upper = l_hi.min(bracket_hi);
        assert!(lower <= upper, "the realization bracket is never empty");
        let l = match tie_break {
            TieBreak::LargestValidL => upper,
            TieBreak::SmallestValidL => lower,
        };

        // realize log-order l with fresh coordinate generators from the
        // newest block; each new column outside the lead set adds exactly
        // one to the rank, and projections below m(k-1) are untouched,
        // which is what keeps condition 1 intact
        let mut c = tower.m(k - 1);
        while ech.rank_at(m_k) < l {
            assert!(c < m_k, "fresh block exhausted before reaching l");
            if !ech.has_lead(c as usize) {
                let mut v = vec![0u64; width as usize];
                v[c as usize] = 1;
                let grew = ech.insert(&v);
                assert!(grew, "fresh non-lead coordinates are independent");
                generators.push(v);
            }
            c += 1;
        }
        let num = ech.rank_at(m_k);
        assert_eq!(num, l, "realization must land exactly on l");
        assert!(floor_condition(num, m_k, eta), "step result breaks the floor");
        assert!(ratio_le(num, m_k, eta), "step result misses the checkpoint bound");
        levels.push(ChainLevel { i: k, num, den: m_k, case: StepCase::Extend });
        stage_sizes.push(generators.len());
        checkpoints.push(k);
        j = k;
    }

    let seq = DensitySequence::new(
        p,
        levels.iter().map(|l| DensityLevel::new(l.i, l.num, l.den)).collect(),
    )?;
    let state = ChainState {
        eta: eta.clone(),
        levels,
        checkpoints,
        generators,
        stage_sizes,
    };
    Ok((state, seq))
}

/// Outcome of one interval-sampling run: the generators of the sampled
/// subgroup in ambient coordinates, its density data against both the
/// ambient and the induced tower, the underlying chain state, and the tail
/// estimate of the ambient ratio sequence.
#[derive(Debug, Clone)]
pub struct IntervalSampleReport {
    pub b_generators: Vec<Vec<u64>>,
    pub sequence_g: DensitySequence,
    pub sequence_h: DensitySequence,
    pub state: ChainState,
    pub estimate: HdimEstimate,
    /// `|window_min − θ|`.
    pub theta_gap: Rational,
}

/// Sample a subgroup `B` of prescribed density `theta` inside the
/// sub-product on `support`, whose own density `xi` must be certified as a
/// proper limit. The chain construction runs inside the sub-product at the
/// rescaled target `theta/xi`; the resulting generators are embedded back
/// into ambient coordinates, and the ambient ratio sequence is checked to
/// factor exactly through the induced one at every level before its tail
/// window is required to land within one quantum `1/m(depth)` of `theta`.
pub fn interval_sample(
    tower: &CoordinateTower,
    support: Vec<u64>,
    xi: &ProperLimitCertificate,
    theta: &Rational,
    tie_break: TieBreak,
    tail_start: u64,
) -> Result<IntervalSampleReport, EstimatorError> {
    if *theta <= Rational::zero() || *theta > xi.value {
        return Err(EstimatorError::TargetOutOfRange(theta.to_string()));
    }
    let sub = SubTower::new(tower, support)?;
    let target = theta / &xi.value;
    let depth_h = sub.induced().depth();
    let (state, sequence_h) = chain_build(sub.induced(), &target, depth_h, tie_break)?;
    let width = tower.width();
    let b_generators: Vec<Vec<u64>> =
        state.generators.iter().map(|v| sub.embed(v, width)).collect();
    let mut ech = Echelon::new(tower.p(), width as usize);
    for g in &b_generators {
        ech.insert(g);
    }
    // induced numerator keyed by induced denominator, with the empty level
    // standing in for ambient cuts that precede every support coordinate
    let mut num_by_den: Vec<(u64, u64)> = vec![(0, 0)];
    for l in sequence_h.levels() {
        num_by_den.push((
            u64::try_from(&l.den).expect("tower denominators fit u64"),
            u64::try_from(&l.num).expect("tower numerators fit u64"),
        ));
    }
    let mut levels_g = Vec::new();
    for i in 1..=tower.depth() {
        let cut = tower.m(i);
        let m_h = sub.support().iter().filter(|&&c| c < cut).count() as u64;
        let num = ech.rank_at(cut);
        let expected = num_by_den
            .iter()
            .find(|(d, _)| *d == m_h)
            .map(|(_, n)| *n)
            .expect("every support count matches an induced level");
        // the ambient numerator must factor through the sub-product
        assert_eq!(num, expected, "factorization broke at ambient level {i}");
        levels_g.push(DensityLevel::new(i, num, cut));
    }
    let sequence_g = DensitySequence::new(tower.p(), levels_g)?;
    let estimate = liminf_estimate(&sequence_g, tail_start)?;
    let mut theta_gap = &estimate.window_min - theta;
    if theta_gap < Rational::zero() {
        theta_gap = -theta_gap;
    }
    let quantum = Rational::new(BigInt::one(), tower.m(tower.depth()).into());
    assert!(
        theta_gap <= quantum,
        "window {} misses the target {} by more than one quantum",
        estimate.window_min,
        theta
    );
    Ok(IntervalSampleReport { b_generators, sequence_g, sequence_h, state, estimate, theta_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;

    fn uniform(p: u64, depth: u64) -> CoordinateTower {
        CoordinateTower::uniform(p, depth).unwrap()
    }

    #[test]
    fn bracket_at_level_four_allows_two_choices() {
        // at i = 4 the valid l are {1, 2}; the largest-l policy takes 2
        let t = uniform(3, 8);
        let (largest, _) =
            chain_build(&t, &rat(1, 2), 4, TieBreak::LargestValidL).unwrap();
        assert_eq!(largest.levels.last().unwrap().num, 2);
        let (smallest, _) =
            chain_build(&t, &rat(1, 2), 4, TieBreak::SmallestValidL).unwrap();
        assert_eq!(smallest.levels.last().unwrap().num, 1);
    }

    #[test]
    fn largest_policy_tracks_the_floor_of_eta_m() {
        let t = uniform(2, 64);
        for eta in [rat(1, 3), rat(1, 2), rat(2, 3)] {
            let (state, seq) =
                chain_build(&t, &eta, 64, TieBreak::LargestValidL).unwrap();
            for level in &state.levels {
                let scaled = &eta * Rational::from_integer(level.den.into());
                assert_eq!(
                    Some(level.num),
                    floor_rational(&scaled).to_u64(),
                    "level {}",
                    level.i
                );
                // every level is a checkpoint under this policy
                assert!(matches!(level.case, StepCase::Extend));
            }
            assert_eq!(state.checkpoints.len(), 64);
            // the worst tail deficit is under one quantum of the window
            let min_tail = seq
                .tail(48)
                .map(|l| l.ratio())
                .min()
                .unwrap();
            assert!(&eta - &min_tail <= rat(1, 64));
            assert!(min_tail <= eta);
        }
    }

    #[test]
    fn full_and_empty_targets_are_degenerate_chains() {
        let t = uniform(5, 12);
        let (full, seq) = chain_build(&t, &rat(1, 1), 12, TieBreak::LargestValidL).unwrap();
        assert!(full.levels.iter().all(|l| l.num == l.den));
        assert_eq!(seq.last().unwrap().ratio(), rat(1, 1));
        let (empty, seq) = chain_build(&t, &rat(0, 1), 12, TieBreak::LargestValidL).unwrap();
        assert!(empty.levels.iter().all(|l| l.num == 0));
        assert!(empty.generators.is_empty());
        assert_eq!(seq.last().unwrap().ratio(), rat(0, 1));
    }

    #[test]
    fn seeded_overshoot_freezes_until_strictly_below_target() {
        // seed spans coordinates {0, 2, 3} through level 4: ratio 3/4 at
        // level 4 forces an advance; 3/6 = 1/2 is not strictly below 1/2,
        // so the advance lands at level 7, concluding with l = 3; the next
        // step at level 8 admits {3, 4} and the largest-l policy takes 4
        let t = uniform(2, 10);
        let e = |c: usize| {
            let mut v = vec![0u64; 10];
            v[c] = 1;
            v
        };
        let seed = vec![e(0), e(2), e(3)];
        let (state, _) =
            chain_build_seeded(&t, &rat(1, 2), 8, TieBreak::LargestValidL, &seed, 4).unwrap();
        let by_index: Vec<(u64, u64, StepCase)> =
            state.levels.iter().map(|l| (l.i, l.num, l.case)).collect();
        assert_eq!(
            by_index,
            vec![
                (1, 1, StepCase::Seed),
                (2, 1, StepCase::Seed),
                (3, 2, StepCase::Seed),
                (4, 3, StepCase::Seed),
                (5, 3, StepCase::Frozen),
                (6, 3, StepCase::Frozen),
                (7, 3, StepCase::Extend),
                (8, 4, StepCase::Extend),
            ]
        );
        assert_eq!(state.checkpoints, vec![2, 7, 8]);
        // ascending-chain witness: earlier stages are prefixes
        assert_eq!(state.subgroup_at(6).len(), 3);
        assert_eq!(state.subgroup_at(8).len(), 4);
    }

    #[test]
    fn conditions_hold_at_every_step_for_many_targets() {
        let t = uniform(3, 40);
        for (n, d) in [(1u64, 5u64), (2, 5), (3, 7), (5, 8), (7, 9)] {
            let eta = Rational::new((n as i64).into(), (d as i64).into());
            let (state, _) = chain_build(&t, &eta, 40, TieBreak::LargestValidL).unwrap();
            let mut replay = Echelon::new(3, 40);
            let mut used = 0usize;
            for level in &state.levels {
                // condition 1: the generators owned by this stage already
                // determine the projection; replaying them yields num
                while used < state.stage_sizes[level.i as usize - 1] {
                    replay.insert(&state.generators[used]);
                    used += 1;
                }
                assert_eq!(replay.rank_at(level.den), level.num, "level {}", level.i);
                // condition 2 exactly
                assert!(floor_condition(level.num, level.den, &eta));
            }
            // condition 3: checkpoints keep appearing
            assert!(!state.checkpoints.is_empty());
            assert!(*state.checkpoints.last().unwrap() >= 35);
        }
    }

    #[test]
    fn too_shallow_towers_error_out_of_the_advance() {
        // a seed far above the target cannot come back down in 3 levels
        let t = uniform(2, 3);
        let seed = vec![
            vec![1, 0, 0],
            vec![0, 1, 0],
        ];
        let err = chain_build_seeded(&t, &rat(1, 4), 3, TieBreak::LargestValidL, &seed, 2)
            .unwrap_err();
        assert_eq!(err, EstimatorError::TowerDepthExhausted { depth: 3 });
    }

    #[test]
    fn bad_targets_and_seeds_are_rejected() {
        let t = uniform(2, 4);
        assert!(matches!(
            chain_build(&t, &rat(3, 2), 4, TieBreak::LargestValidL),
            Err(EstimatorError::TargetOutOfRange(_))
        ));
        assert!(matches!(
            chain_build(&t, &rat(1, 2), 9, TieBreak::LargestValidL),
            Err(EstimatorError::TowerDepthExhausted { depth: 4 })
        ));
        // a seed that falls below the floor is refused at the first level
        // where the deficit exceeds one quantum
        let seed = vec![vec![0, 0, 0, 1]];
        assert!(matches!(
            chain_build_seeded(&t, &rat(1, 1), 4, TieBreak::LargestValidL, &seed, 2),
            Err(EstimatorError::BadSeed { level: 2 })
        ));
    }

    fn even_tower(p: u64, depth: u64) -> (CoordinateTower, Vec<u64>) {
        // m(i) = 2i with the sub-product on the even coordinates, which
        // owns exactly half of every level
        let tower = CoordinateTower::new(p, (1..=depth).map(|i| 2 * i).collect()).unwrap();
        let support: Vec<u64> = (0..depth).map(|c| 2 * c).collect();
        (tower, support)
    }

    #[test]
    fn interval_sampler_hits_targets_through_an_even_support() {
        let (tower, support) = even_tower(2, 64);
        let xi = ProperLimitCertificate::closed_form(rat(1, 2), "balanced-even-support")
            .unwrap();
        for (theta, target) in [
            (rat(1, 4), rat(1, 2)),
            (rat(3, 8), rat(3, 4)),
            (rat(1, 2), rat(1, 1)),
        ] {
            let report = interval_sample(
                &tower,
                support.clone(),
                &xi,
                &theta,
                TieBreak::LargestValidL,
                48,
            )
            .unwrap();
            assert_eq!(report.state.eta, target);
            assert!(
                report.theta_gap <= rat(1, 128),
                "theta {}: gap {}",
                theta,
                report.theta_gap
            );
            for g in &report.b_generators {
                for (c, &v) in g.iter().enumerate() {
                    assert!(v == 0 || c % 2 == 0, "generator leaked off the support");
                }
            }
        }
    }

    #[test]
    fn sampling_the_whole_certificate_fills_the_subproduct() {
        let (tower, support) = even_tower(3, 16);
        let xi =
            ProperLimitCertificate::closed_form(rat(1, 2), "balanced-even-support").unwrap();
        let report = interval_sample(
            &tower,
            support.clone(),
            &xi,
            &rat(1, 2),
            TieBreak::LargestValidL,
            12,
        )
        .unwrap();
        assert_eq!(report.b_generators.len(), support.len());
        // num = i against den = 2i at every ambient level: the constant
        // tail certifies the exact value
        assert_eq!(report.estimate.exact, Some(rat(1, 2)));
        assert_eq!(report.theta_gap, rat(0, 1));
    }

    #[test]
    fn targets_outside_the_certificate_are_rejected() {
        let (tower, support) = even_tower(2, 8);
        let xi = ProperLimitCertificate::closed_form(rat(1, 2), "balanced").unwrap();
        for bad in [rat(2, 3), rat(0, 1)] {
            let err = interval_sample(
                &tower,
                support.clone(),
                &xi,
                &bad,
                TieBreak::LargestValidL,
                6,
            )
            .unwrap_err();
            assert!(matches!(err, EstimatorError::TargetOutOfRange(_)));
        }
    }
}
