//! Exhaustive and sampled property sweeps over grids of small contexts.
//!
//! The grid fixes the first school's priority order to the identity —
//! relabeling students maps any context onto one of these — and ranges over
//! every priority order for the remaining schools, every capacity vector up
//! to the bound, and every preference profile.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::axioms::{check, Axiom, SearchScope};
use crate::charax::detect_ergin_cycles;
use crate::externalities::{
    check_sp_externalities, da_bar, ColleaguePreference, DaBar, ExtPreference,
};
use crate::fixtures::fixture_mechanisms;
use crate::mechanisms::{DaStudent, Mechanism};
use crate::model::{
    Preference, PreferenceProfile, PriorityOrder, SchoolChoiceContext, SchoolId, StudentId,
};
use crate::orders::OrderSpace;
use crate::stability::is_stable;

#[derive(Clone, Copy, Debug)]
pub struct GridBounds {
    pub max_students: usize,
    pub max_schools: usize,
    pub max_capacity: usize,
}

impl Default for GridBounds {
    fn default() -> Self {
        GridBounds {
            max_students: 4,
            max_schools: 2,
            max_capacity: 3,
        }
    }
}

fn permutations_of(n: usize) -> Vec<Vec<StudentId>> {
    fn go(items: &[StudentId]) -> Vec<Vec<StudentId>> {
        if items.is_empty() {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for (pos, &x) in items.iter().enumerate() {
            let mut rest = items.to_vec();
            rest.remove(pos);
            for mut tail in go(&rest) {
                tail.insert(0, x);
                out.push(tail);
            }
        }
        out
    }
    go(&(0..n).map(StudentId::from_index).collect::<Vec<_>>())
}

fn capacity_vectors(n_schools: usize, max_capacity: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n_schools {
        let mut next = Vec::new();
        for prefix in &out {
            for q in 1..=max_capacity {
                let mut v = prefix.clone();
                v.push(q);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

fn build_context(
    n_students: usize,
    orderings: &[Vec<StudentId>],
    capacities: &[usize],
) -> SchoolChoiceContext {
    let students = (1..=n_students).map(|i| i.to_string()).collect();
    let schools = (1..=orderings.len()).map(|k| format!("s{k}")).collect();
    let priorities = orderings
        .iter()
        .enumerate()
        .map(|(k, ranking)| {
            PriorityOrder::new(SchoolId::from_index(k), ranking.clone(), n_students)
                .expect("permutation")
        })
        .collect();
    SchoolChoiceContext::new(students, schools, priorities, capacities.to_vec())
        .expect("grid contexts are well-formed")
}

/// Every context with `n ≤ max_students`, `|S| ≤ max_schools`, capacities in
/// `1..=max_capacity`, and priority profiles up to relabeling of students
/// (the first school's order is the identity).
pub fn grid_contexts(bounds: &GridBounds) -> Vec<SchoolChoiceContext> {
    let mut contexts = Vec::new();
    for n in 1..=bounds.max_students {
        let identity: Vec<StudentId> = (0..n).map(StudentId::from_index).collect();
        let perms = permutations_of(n);
        for s in 1..=bounds.max_schools {
            // orders for schools 2..s range over all permutations
            let mut order_choices: Vec<Vec<Vec<StudentId>>> = vec![vec![identity.clone()]];
            for _ in 1..s {
                order_choices.push(perms.clone());
            }
            let mut combos: Vec<Vec<Vec<StudentId>>> = vec![vec![]];
            for choices in &order_choices {
                let mut next = Vec::new();
                for prefix in &combos {
                    for c in choices {
                        let mut v = prefix.clone();
                        v.push(c.clone());
                        next.push(v);
                    }
                }
                combos = next;
            }
            for orderings in combos {
                for caps in capacity_vectors(s, bounds.max_capacity) {
                    contexts.push(build_context(n, &orderings, &caps));
                }
            }
        }
    }
    contexts
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub kind: String,
    pub contexts: u64,
    pub instances: u64,
    pub counterexamples: Vec<String>,
    pub seed: Option<u64>,
    pub elapsed_ms: u128,
}

impl SweepReport {
    pub fn clean(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

fn axiom_sweep(kind: &str, axiom: Axiom, bounds: &GridBounds) -> SweepReport {
    let start = Instant::now();
    let mut report = SweepReport {
        kind: kind.to_string(),
        contexts: 0,
        instances: 0,
        counterexamples: Vec::new(),
        seed: None,
        elapsed_ms: 0,
    };
    let scope = SearchScope {
        find_all: false,
        ..SearchScope::exhaustive()
    };
    for ctx in grid_contexts(bounds) {
        report.contexts += 1;
        report.instances += crate::orders::ProfileSpace::new(ctx.n_students(), ctx.n_schools())
            .count();
        let outcome = check(axiom, &DaStudent, &ctx, &scope).expect("grid within budget");
        if let Some(cex) = outcome.first() {
            report.counterexamples.push(format!(
                "context #{}: {:?}",
                report.contexts - 1,
                cex.violation
            ));
        }
    }
    report.elapsed_ms = start.elapsed().as_millis();
    report
}

/// Deferred acceptance is locally non-bossy: exhaustive over the grid, every
/// profile, every unilateral misreport.
pub fn sweep_local_non_bossiness(bounds: &GridBounds) -> SweepReport {
    axiom_sweep("theorem1", Axiom::LocalNonBossy, bounds)
}

/// A student whose school changes under deferred acceptance shares no
/// colleague across the two outcomes.
pub fn sweep_colleague_disjointness(bounds: &GridBounds) -> SweepReport {
    axiom_sweep("remark1", Axiom::ColleagueDisjointness, bounds)
}

fn implication_sweep(kind: &str, consequent: Axiom, bounds: &GridBounds, max_coalition: usize) -> SweepReport {
    let start = Instant::now();
    let mut report = SweepReport {
        kind: kind.to_string(),
        contexts: 0,
        instances: 0,
        counterexamples: Vec::new(),
        seed: None,
        elapsed_ms: 0,
    };
    let scope = SearchScope {
        max_coalition,
        ..SearchScope::exhaustive()
    };
    let mut cases: Vec<(Box<dyn Mechanism>, SchoolChoiceContext, String)> = fixture_mechanisms()
        .into_iter()
        .map(|(m, ctx)| {
            let label = m.name().to_string();
            (m, ctx, label)
        })
        .collect();
    for (idx, ctx) in grid_contexts(bounds).into_iter().enumerate() {
        cases.push((Box::new(DaStudent), ctx, format!("da@grid#{idx}")));
    }
    for (mech, ctx, label) in cases {
        report.contexts += 1;
        let lnb = check(Axiom::LocalNonBossy, mech.as_ref(), &ctx, &scope)
            .expect("within budget")
            .holds();
        let sp = check(Axiom::StrategyProof, mech.as_ref(), &ctx, &scope)
            .expect("within budget")
            .holds();
        if !(lnb && sp) {
            continue;
        }
        report.instances += 1;
        let conclusion = check(consequent, mech.as_ref(), &ctx, &scope).expect("within budget");
        if let Some(cex) = conclusion.first() {
            report
                .counterexamples
                .push(format!("{label}: {:?}", cex.violation));
        }
    }
    report.elapsed_ms = start.elapsed().as_millis();
    report
}

/// Locally non-bossy and strategy-proof mechanisms are locally group
/// strategy-proof, over the registered mechanisms and the grid.
pub fn sweep_schoolmate_coalition_sp(bounds: &GridBounds, max_coalition: usize) -> SweepReport {
    implication_sweep("lemma1", Axiom::LocalGroupStrategyProof, bounds, max_coalition)
}

/// Locally non-bossy and strategy-proof mechanisms are locally group
/// non-bossy, over the registered mechanisms and the grid.
pub fn sweep_schoolmate_coalition_nb(bounds: &GridBounds, max_coalition: usize) -> SweepReport {
    implication_sweep("lemma2", Axiom::LocalGroupNonBossy, bounds, max_coalition)
}

/// Ergin-acyclicity of the priorities is equivalent to group
/// strategy-proofness of deferred acceptance: checked for every priority
/// profile (not up to relabeling) on the given universe and capacities.
pub fn sweep_acyclicity_group_sp(
    n_students: usize,
    capacity_pairs: &[(usize, usize)],
    max_coalition: usize,
) -> SweepReport {
    let start = Instant::now();
    let mut report = SweepReport {
        kind: "corollary2".to_string(),
        contexts: 0,
        instances: 0,
        counterexamples: Vec::new(),
        seed: None,
        elapsed_ms: 0,
    };
    let scope = SearchScope {
        max_coalition,
        ..SearchScope::exhaustive()
    };
    let perms = permutations_of(n_students);
    for &(q1, q2) in capacity_pairs {
        for p1 in &perms {
            for p2 in &perms {
                report.contexts += 1;
                let ctx = build_context(n_students, &[p1.clone(), p2.clone()], &[q1, q2]);
                let acyclic = detect_ergin_cycles(&ctx).is_empty();
                let group_sp = check(Axiom::GroupStrategyProof, &DaStudent, &ctx, &scope)
                    .expect("within budget")
                    .holds();
                if acyclic == group_sp {
                    report.instances += 1;
                } else {
                    report.counterexamples.push(format!(
                        "q=({q1},{q2}) priorities {:?} / {:?}: acyclic={acyclic}, group-sp={group_sp}",
                        p1, p2
                    ));
                }
            }
        }
    }
    report.elapsed_ms = start.elapsed().as_millis();
    report
}

/// Random colleague-domain profile over a context.
pub fn random_colleague_profile<R: Rng>(
    ctx: &SchoolChoiceContext,
    rng: &mut R,
) -> Vec<ExtPreference> {
    ctx.students()
        .map(|i| ExtPreference::Colleague(ColleaguePreference::random(ctx, i, rng)))
        .collect()
}

/// On every Ergin-cyclic grid context, sampled colleague-domain profiles:
/// deferred acceptance over the induced rankings must be immune to every
/// school-ranking deviation (judged by the deviator's true colleague
/// preference) and its outcome stable on the induced problem.
pub fn sweep_colleague_domain_sp(bounds: &GridBounds, samples: u64, seed: u64) -> SweepReport {
    let start = Instant::now();
    let mut report = SweepReport {
        kind: "theorem3".to_string(),
        contexts: 0,
        instances: 0,
        counterexamples: Vec::new(),
        seed: Some(seed),
        elapsed_ms: 0,
    };
    let cyclic: Vec<SchoolChoiceContext> = grid_contexts(bounds)
        .into_iter()
        .filter(|ctx| !detect_ergin_cycles(ctx).is_empty())
        .collect();
    report.contexts = cyclic.len() as u64;
    if cyclic.is_empty() {
        report.elapsed_ms = start.elapsed().as_millis();
        return report;
    }
    let per_context = samples.div_ceil(cyclic.len() as u64).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for ctx in &cyclic {
        for _ in 0..per_context {
            report.instances += 1;
            let profile = random_colleague_profile(ctx, &mut rng);
            let outcome = da_bar(ctx, &profile);
            let induced = crate::externalities::induced_profile(&profile);
            if !is_stable(&outcome, ctx, &induced) {
                report
                    .counterexamples
                    .push(format!("unstable outcome on context with {} students", ctx.n_students()));
                continue;
            }
            if let Some(cex) = check_sp_externalities(&DaBar, ctx, &profile, false).unwrap() {
                report.counterexamples.push(format!(
                    "manipulation by {:?} on context with {} students",
                    cex.deviator,
                    ctx.n_students()
                ));
            }
        }
    }
    report.elapsed_ms = start.elapsed().as_millis();
    report
}

/// Seeded random problem for the randomized oracle suites.
pub fn random_problem<R: Rng>(
    rng: &mut R,
    max_students: usize,
    max_schools: usize,
    max_capacity: usize,
) -> (SchoolChoiceContext, PreferenceProfile) {
    let n = rng.random_range(1..=max_students);
    let s = rng.random_range(1..=max_schools);
    let mut orderings = Vec::new();
    let mut caps = Vec::new();
    for _ in 0..s {
        let mut order: Vec<StudentId> = (0..n).map(StudentId::from_index).collect();
        for i in (1..order.len()).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        orderings.push(order);
        caps.push(rng.random_range(1..=max_capacity));
    }
    let ctx = build_context(n, &orderings, &caps);
    let space = OrderSpace::new(s);
    let prefs: Vec<Preference> = (0..n)
        .map(|i| space.preference(StudentId::from_index(i), rng.random_range(0..space.len())))
        .collect();
    let profile = PreferenceProfile::new(prefs).expect("owners aligned");
    (ctx, profile)
}

/// The named sweeps exposed on the command line.
pub fn run_sweep(
    kind: &str,
    bounds: &GridBounds,
    samples: u64,
    seed: u64,
    max_coalition: usize,
) -> Option<SweepReport> {
    match kind {
        "theorem1" => Some(sweep_local_non_bossiness(bounds)),
        "remark1" => Some(sweep_colleague_disjointness(bounds)),
        "lemma1" => Some(sweep_schoolmate_coalition_sp(bounds, max_coalition)),
        "lemma2" => Some(sweep_schoolmate_coalition_nb(bounds, max_coalition)),
        "corollary2" => Some(sweep_acyclicity_group_sp(
            bounds.max_students,
            &[(1, 1), (2, 1)],
            max_coalition,
        )),
        "theorem3" => Some(sweep_colleague_domain_sp(bounds, samples, seed)),
        _ => None,
    }
}

/// Sanity anchor for the sweep machinery: the trivial one-student grid runs
/// clean and counts its instances.
#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_grid_counts() {
        let bounds = GridBounds {
            max_students: 2,
            max_schools: 2,
            max_capacity: 1,
        };
        let contexts = grid_contexts(&bounds);
        // n=1: s=1 (1) + s=2 (1); n=2: s=1 (1) + s=2 (2 orders)
        assert_eq!(contexts.len(), 5);
    }

    #[test]
    fn trivial_sweep_is_clean() {
        let bounds = GridBounds {
            max_students: 1,
            max_schools: 1,
            max_capacity: 1,
        };
        let report = sweep_local_non_bossiness(&bounds);
        assert!(report.clean());
        assert_eq!(report.contexts, 1);
    }

    #[test]
    fn da_outcome_is_stable_on_random_problems() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let (ctx, profile) = random_problem(&mut rng, 5, 3, 3);
            let m = crate::mechanisms::da_student(&ctx, &profile);
            assert!(is_stable(&m, &ctx, &profile));
        }
    }
}
