//! Stability audits and brute-force enumeration of the stable set.
//!
//! Two independent enumerators are kept on purpose: the school-by-school
//! subset search (fast path) and the raw assignment-space scan (oracle).
//! Their agreement is itself a test.

use thiserror::Error;

use crate::model::{
    Alternative, Matching, ModelError, PreferenceProfile, SchoolChoiceContext, SchoolId, StudentId,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StabilityError {
    #[error("stable-set search space of {required} candidates exceeds the budget of {budget}")]
    BudgetExceeded { required: u128, budget: u64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Full audit of one matching. All violations are listed, not just the
/// first, so counterexample fixtures are self-describing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilityReport {
    pub individually_rational: bool,
    /// Students assigned to a school they rank below the outside option.
    pub ir_violations: Vec<StudentId>,
    /// `(i, s)`: student prefers `s` to her assignment and `s` has a free seat.
    pub wasteful_pairs: Vec<(StudentId, SchoolId)>,
    /// `(i, s, j)`: student `i` prefers `s`, `j` sits there, and `i ≻_s j`.
    pub envy_triples: Vec<(StudentId, SchoolId, StudentId)>,
    /// Wasteful pairs plus the `(i, s)` projection of envy triples.
    pub blocking_pairs: Vec<(StudentId, SchoolId)>,
    pub stable: bool,
}

pub fn audit_matching(
    matching: &Matching,
    ctx: &SchoolChoiceContext,
    profile: &PreferenceProfile,
) -> Result<StabilityReport, StabilityError> {
    matching.check_capacities(ctx)?;
    let mut report = StabilityReport {
        individually_rational: true,
        ir_violations: Vec::new(),
        wasteful_pairs: Vec::new(),
        envy_triples: Vec::new(),
        blocking_pairs: Vec::new(),
        stable: false,
    };
    let assigned: Vec<Vec<StudentId>> = ctx
        .schools()
        .map(|s| matching.assigned_to(Alternative::School(s)))
        .collect();
    for i in ctx.students() {
        let pref = profile.get(i);
        let mine = matching.of(i);
        if !pref.weakly_prefers(mine, Alternative::Outside) {
            report.ir_violations.push(i);
        }
        for s in ctx.schools() {
            let seat = Alternative::School(s);
            if !pref.prefers(seat, mine) {
                continue;
            }
            let mut blocks = false;
            if assigned[s.index()].len() < ctx.capacity(s) {
                report.wasteful_pairs.push((i, s));
                blocks = true;
            }
            for &j in &assigned[s.index()] {
                if ctx.priority(s).higher(i, j) {
                    report.envy_triples.push((i, s, j));
                    blocks = true;
                }
            }
            if blocks {
                report.blocking_pairs.push((i, s));
            }
        }
    }
    report.individually_rational = report.ir_violations.is_empty();
    report.stable = report.individually_rational
        && report.wasteful_pairs.is_empty()
        && report.envy_triples.is_empty();
    Ok(report)
}

pub fn is_stable(
    matching: &Matching,
    ctx: &SchoolChoiceContext,
    profile: &PreferenceProfile,
) -> bool {
    audit_matching(matching, ctx, profile).map(|r| r.stable).unwrap_or(false)
}

fn check_budget(ctx: &SchoolChoiceContext, budget: u64) -> Result<(), StabilityError> {
    let required = (ctx.n_schools() as u128 + 1)
        .checked_pow(ctx.n_students() as u32)
        .unwrap_or(u128::MAX);
    if required > budget as u128 {
        return Err(StabilityError::BudgetExceeded { required, budget });
    }
    Ok(())
}

/// Enumerate the stable set by assigning student subsets school by school,
/// pruning inadmissible seats and capacity violations early. Results are
/// sorted by assignment vector.
pub fn enumerate_stable(
    ctx: &SchoolChoiceContext,
    profile: &PreferenceProfile,
    budget: u64,
) -> Result<Vec<Matching>, StabilityError> {
    check_budget(ctx, budget)?;
    let n = ctx.n_students();
    assert!(n <= 60, "subset enumeration uses u64 masks");
    let mut out = Vec::new();
    let mut assignment = vec![Alternative::Outside; n];

    fn fill_school(
        ctx: &SchoolChoiceContext,
        profile: &PreferenceProfile,
        school: usize,
        available: u64,
        assignment: &mut Vec<Alternative>,
        out: &mut Vec<Matching>,
    ) {
        if school == ctx.n_schools() {
            let m = Matching::new(assignment.clone());
            if audit_matching(&m, ctx, profile).map(|r| r.stable).unwrap_or(false) {
                out.push(m);
            }
            return;
        }
        let s = SchoolId::from_index(school);
        // only students who find s admissible can hold a seat in a stable
        // (hence individually rational) matching
        let eligible: Vec<usize> = (0..ctx.n_students())
            .filter(|&i| {
                available & (1 << i) != 0 && profile.get(StudentId::from_index(i)).finds_admissible(s)
            })
            .collect();
        let cap = ctx.capacity(s);
        for pick in 0u64..(1 << eligible.len()) {
            if pick.count_ones() as usize > cap {
                continue;
            }
            let mut taken = 0u64;
            for (pos, &i) in eligible.iter().enumerate() {
                if pick & (1 << pos) != 0 {
                    assignment[i] = Alternative::School(s);
                    taken |= 1 << i;
                }
            }
            fill_school(ctx, profile, school + 1, available & !taken, assignment, out);
            for (pos, &i) in eligible.iter().enumerate() {
                if pick & (1 << pos) != 0 {
                    assignment[i] = Alternative::Outside;
                }
            }
        }
    }

    fill_school(ctx, profile, 0, (1 << n) - 1, &mut assignment, &mut out);
    out.sort();
    Ok(out)
}

/// Oracle enumerator: scan every function from students to `S ∪ {s0}` and
/// keep the stable ones. Slower than `enumerate_stable`, kept as an
/// independent cross-check.
pub fn enumerate_stable_naive(
    ctx: &SchoolChoiceContext,
    profile: &PreferenceProfile,
    budget: u64,
) -> Result<Vec<Matching>, StabilityError> {
    check_budget(ctx, budget)?;
    let n = ctx.n_students();
    let base = ctx.n_schools() + 1;
    let total = (base as u64).pow(n as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut c = code;
        let assignment: Vec<Alternative> = (0..n)
            .map(|_| {
                let digit = (c % base as u64) as usize;
                c /= base as u64;
                Alternative::from_code(digit, ctx.n_schools())
            })
            .collect();
        let m = Matching::new(assignment);
        if m.check_capacities(ctx).is_err() {
            continue;
        }
        if audit_matching(&m, ctx, profile)?.stable {
            out.push(m);
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::DEFAULT_BUDGET;
    use crate::model::matching_from_labels;

    #[test]
    fn all_outside_is_wasteful_when_seats_exist() {
        let ctx = SchoolChoiceContext::from_tables(2, &[1], &[&[1, 2]]).unwrap();
        let profile = PreferenceProfile::from_tables(1, &[&[1, 0], &[1, 0]]).unwrap();
        let m = matching_from_labels(&[0, 0]);
        let report = audit_matching(&m, &ctx, &profile).unwrap();
        assert!(!report.wasteful_pairs.is_empty());
        assert!(!report.stable);
        assert!(report.individually_rational);
    }

    #[test]
    fn blocking_pairs_union_holds() {
        let ctx = SchoolChoiceContext::from_tables(3, &[1, 1], &[&[1, 2, 3], &[3, 2, 1]]).unwrap();
        let profile =
            PreferenceProfile::from_tables(2, &[&[2, 1, 0], &[2, 1, 0], &[1, 2, 0]]).unwrap();
        let m = matching_from_labels(&[1, 0, 2]);
        let report = audit_matching(&m, &ctx, &profile).unwrap();
        let mut expected: Vec<(StudentId, SchoolId)> = report.wasteful_pairs.clone();
        expected.extend(report.envy_triples.iter().map(|&(i, s, _)| (i, s)));
        expected.sort();
        expected.dedup();
        let mut got = report.blocking_pairs.clone();
        got.sort();
        got.dedup();
        assert_eq!(got, expected);
    }

    #[test]
    fn audit_rejects_capacity_violations() {
        let ctx = SchoolChoiceContext::from_tables(2, &[1], &[&[1, 2]]).unwrap();
        let profile = PreferenceProfile::from_tables(1, &[&[1, 0], &[1, 0]]).unwrap();
        let m = matching_from_labels(&[1, 1]);
        assert!(matches!(
            audit_matching(&m, &ctx, &profile),
            Err(StabilityError::Model(ModelError::CapacityViolation(_)))
        ));
    }

    #[test]
    fn student_preferring_outside_stays_out() {
        let ctx = SchoolChoiceContext::from_tables(1, &[1], &[&[1]]).unwrap();
        let profile = PreferenceProfile::from_tables(1, &[&[0, 1]]).unwrap();
        let stable = enumerate_stable(&ctx, &profile, DEFAULT_BUDGET).unwrap();
        assert_eq!(stable, vec![matching_from_labels(&[0])]);
    }

    #[test]
    fn enumerators_agree_on_a_small_instance() {
        let ctx = SchoolChoiceContext::from_tables(4, &[2, 2], &[&[2, 1, 3, 4], &[3, 4, 2, 1]])
            .unwrap();
        let profile = PreferenceProfile::from_tables(
            2,
            &[&[2, 1, 0], &[2, 1, 0], &[1, 2, 0], &[1, 2, 0]],
        )
        .unwrap();
        let fast = enumerate_stable(&ctx, &profile, DEFAULT_BUDGET).unwrap();
        let naive = enumerate_stable_naive(&ctx, &profile, DEFAULT_BUDGET).unwrap();
        assert_eq!(fast, naive);
        assert_eq!(fast.len(), 3);
    }

    #[test]
    fn budget_is_enforced() {
        let ctx = SchoolChoiceContext::from_tables(2, &[1], &[&[1, 2]]).unwrap();
        let profile = PreferenceProfile::from_tables(1, &[&[1, 0], &[1, 0]]).unwrap();
        assert!(matches!(
            enumerate_stable(&ctx, &profile, 3),
            Err(StabilityError::BudgetExceeded { .. })
        ));
    }
}
