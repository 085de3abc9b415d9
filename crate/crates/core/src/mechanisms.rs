//! The concrete mechanisms: student-proposing deferred acceptance, the
//! school-optimal stable mechanism, immediate acceptance (Boston), serial
//! dictatorship, and the school-median stable mechanism.
//!
//! Deferred-acceptance rounds process all unassigned students
//! simultaneously; the round structure is kept so executions can be traced.

use thiserror::Error;

use crate::model::{
    Alternative, Matching, PreferenceProfile, SchoolChoiceContext, SchoolId, StudentId,
};
use crate::stability;

/// A deterministic rule mapping each problem to a matching.
pub trait Mechanism {
    fn name(&self) -> &str;
    fn run(&self, ctx: &SchoolChoiceContext, profile: &PreferenceProfile) -> Matching;
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MechanismError {
    #[error("instance too large: {required} candidate assignments exceed the budget of {budget}")]
    InstanceTooLarge { required: u128, budget: u64 },
    #[error("order is not a permutation of the students")]
    NotAPermutation,
}

/// One round of a proposal algorithm, for trace output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Round {
    pub proposals: Vec<(StudentId, SchoolId)>,
    pub rejections: Vec<(StudentId, SchoolId)>,
}

pub type Trace = Vec<Round>;

fn all_students(ctx: &SchoolChoiceContext) -> Vec<StudentId> {
    ctx.students().collect()
}

/// Student-proposing deferred acceptance restricted to `members`; everyone
/// else is left outside. `members` must be ascending.
pub(crate) fn da_student_among_traced(
    ctx: &SchoolChoiceContext,
    profile: &PreferenceProfile,
    members: &[StudentId],
    trace: Option<&mut Trace>,
) -> Matching {
    let n = ctx.n_students();
    let mut present = vec![false; n];
    for &i in members {
        present[i.index()] = true;
    }
    // pointer into each member's ranking; stops at the outside option
    let mut next: Vec<usize> = vec![0; n];
    let mut held_by: Vec<Option<SchoolId>> = vec![None; n];
    let mut held: Vec<Vec<StudentId>> = vec![Vec::new(); ctx.n_schools()];
    let mut rounds: Trace = Vec::new();

    loop {
        let mut proposals: Vec<Vec<StudentId>> = vec![Vec::new(); ctx.n_schools()];
        let mut proposed = false;
        for &i in members {
            if held_by[i.index()].is_some() {
                continue;
            }
            let pref = profile.get(i);
            match pref.ranking()[next[i.index()]] {
                Alternative::School(s) => {
                    proposals[s.index()].push(i);
                    proposed = true;
                }
                Alternative::Outside => {}
            }
        }
        if !proposed {
            break;
        }
        let mut round = Round {
            proposals: Vec::new(),
            rejections: Vec::new(),
        };
        for s in ctx.schools() {
            for &i in &proposals[s.index()] {
                round.proposals.push((i, s));
            }
            if proposals[s.index()].is_empty() {
                continue;
            }
            let mut pool = std::mem::take(&mut held[s.index()]);
            pool.extend(proposals[s.index()].iter().copied());
            pool.sort_by_key(|&i| ctx.priority(s).rank(i));
            let keep = ctx.capacity(s).min(pool.len());
            for &i in &pool[..keep] {
                held_by[i.index()] = Some(s);
            }
            for &i in &pool[keep..] {
                held_by[i.index()] = None;
                next[i.index()] += 1;
                round.rejections.push((i, s));
            }
            held[s.index()] = pool[..keep].to_vec();
        }
        rounds.push(round);
    }
    if let Some(t) = trace {
        *t = rounds;
    }
    Matching::new(
        (0..n)
            .map(|i| match held_by[i] {
                Some(s) if present[i] => Alternative::School(s),
                _ => Alternative::Outside,
            })
            .collect(),
    )
}

pub(crate) fn da_student_among(
    ctx: &SchoolChoiceContext,
    profile: &PreferenceProfile,
    members: &[StudentId],
) -> Matching {
    da_student_among_traced(ctx, profile, members, None)
}

/// Student-proposing deferred acceptance: the student-optimal stable
/// mechanism.
pub fn da_student(ctx: &SchoolChoiceContext, profile: &PreferenceProfile) -> Matching {
    da_student_among(ctx, profile, &all_students(ctx))
}

pub fn da_student_traced(
    ctx: &SchoolChoiceContext,
    profile: &PreferenceProfile,
) -> (Matching, Trace) {
    let mut trace = Vec::new();
    let m = da_student_among_traced(ctx, profile, &all_students(ctx), Some(&mut trace));
    (m, trace)
}

/// School-proposing deferred acceptance: the school-optimal stable
/// mechanism. Students hold the best admissible offer; schools work down
/// their priority orders.
pub(crate) fn da_school_among(
    ctx: &SchoolChoiceContext,
    profile: &PreferenceProfile,
    members: &[StudentId],
) -> Matching {
    let n = ctx.n_students();
    let mut present = vec![false; n];
    for &i in members {
        present[i.index()] = true;
    }
    let mut next: Vec<usize> = vec![0; ctx.n_schools()];
    let mut holding: Vec<Option<SchoolId>> = vec![None; n];
    let mut filled: Vec<usize> = vec![0; ctx.n_schools()];

    loop {
        let mut offers: Vec<(SchoolId, StudentId)> = Vec::new();
        for s in ctx.schools() {
            let ranking = ctx.priority(s).ranking();
            let mut free = ctx.capacity(s) - filled[s.index()];
            while free > 0 && next[s.index()] < ranking.len() {
                let i = ranking[next[s.index()]];
                next[s.index()] += 1;
                if !present[i.index()] {
                    continue;
                }
                offers.push((s, i));
                free -= 1;
            }
        }
        if offers.is_empty() {
            break;
        }
        for (s, i) in offers {
            let pref = profile.get(i);
            let incoming = Alternative::School(s);
            if !pref.prefers(incoming, Alternative::Outside) {
                continue; // inadmissible offer, rejected outright
            }
            match holding[i.index()] {
                Some(cur) if !pref.prefers(incoming, Alternative::School(cur)) => {
                    // keeps the current offer; s's seat stays free
                }
                prev => {
                    if let Some(cur) = prev {
                        filled[cur.index()] -= 1;
                    }
                    holding[i.index()] = Some(s);
                    filled[s.index()] += 1;
                }
            }
        }
    }
    Matching::new(
        (0..n)
            .map(|i| match holding[i] {
                Some(s) if present[i] => Alternative::School(s),
                _ => Alternative::Outside,
            })
            .collect(),
    )
}

pub fn da_school(ctx: &SchoolChoiceContext, profile: &PreferenceProfile) -> Matching {
    da_school_among(ctx, profile, &all_students(ctx))
}

/// Immediate acceptance: in round `k` every still-unassigned student applies
/// to the `k`-th school on her admissible list, and acceptances are final.
pub fn boston_traced(ctx: &SchoolChoiceContext, profile: &PreferenceProfile) -> (Matching, Trace) {
    let n = ctx.n_students();
    let mut assigned: Vec<Option<SchoolId>> = vec![None; n];
    let mut free: Vec<usize> = ctx.capacities().to_vec();
    let mut rounds = Vec::new();
    let admissible: Vec<Vec<SchoolId>> = (0..n)
        .map(|i| profile.get(StudentId::from_index(i)).admissible())
        .collect();

    for k in 0.. {
        let mut applications: Vec<Vec<StudentId>> = vec![Vec::new(); ctx.n_schools()];
        let mut any = false;
        for i in 0..n {
            if assigned[i].is_some() || k >= admissible[i].len() {
                continue;
            }
            applications[admissible[i][k].index()].push(StudentId::from_index(i));
            any = true;
        }
        if !any {
            break;
        }
        let mut round = Round {
            proposals: Vec::new(),
            rejections: Vec::new(),
        };
        for s in ctx.schools() {
            let mut pool = applications[s.index()].clone();
            for &i in &pool {
                round.proposals.push((i, s));
            }
            pool.sort_by_key(|&i| ctx.priority(s).rank(i));
            let keep = free[s.index()].min(pool.len());
            for &i in &pool[..keep] {
                assigned[i.index()] = Some(s);
            }
            for &i in &pool[keep..] {
                round.rejections.push((i, s));
            }
            free[s.index()] -= keep;
        }
        rounds.push(round);
    }
    let matching = Matching::new(
        assigned
            .into_iter()
            .map(|a| a.map(Alternative::School).unwrap_or(Alternative::Outside))
            .collect(),
    );
    (matching, rounds)
}

pub fn boston(ctx: &SchoolChoiceContext, profile: &PreferenceProfile) -> Matching {
    boston_traced(ctx, profile).0
}

/// Serial dictatorship: students pick in the given order; each receives her
/// most preferred alternative with remaining capacity (the outside option is
/// always available).
pub fn serial_dictatorship(
    ctx: &SchoolChoiceContext,
    profile: &PreferenceProfile,
    order: &[StudentId],
) -> Result<Matching, MechanismError> {
    let mut seen = vec![false; ctx.n_students()];
    for &i in order {
        if i.index() >= ctx.n_students() || seen[i.index()] {
            return Err(MechanismError::NotAPermutation);
        }
        seen[i.index()] = true;
    }
    if !seen.iter().all(|&b| b) {
        return Err(MechanismError::NotAPermutation);
    }
    Ok(serial_dictatorship_among(ctx, profile, order))
}

/// Serial dictatorship over a subset of students; `order` lists exactly the
/// participants.
pub(crate) fn serial_dictatorship_among(
    ctx: &SchoolChoiceContext,
    profile: &PreferenceProfile,
    order: &[StudentId],
) -> Matching {
    let mut free: Vec<usize> = ctx.capacities().to_vec();
    let mut assignment = vec![Alternative::Outside; ctx.n_students()];
    for &i in order {
        for &a in profile.get(i).ranking() {
            match a {
                Alternative::Outside => break,
                Alternative::School(s) if free[s.index()] > 0 => {
                    free[s.index()] -= 1;
                    assignment[i.index()] = a;
                    break;
                }
                Alternative::School(_) => {}
            }
        }
    }
    Matching::new(assignment)
}

/// The school-median stable matching over the full stable set: with `k`
/// stable matchings, each student takes her `(k+1)/2`-th weakly best stable
/// assignment when `k` is odd and her `(k+2)/2`-th when `k` is even.
pub fn school_median(
    ctx: &SchoolChoiceContext,
    profile: &PreferenceProfile,
    budget: u64,
) -> Result<Matching, MechanismError> {
    let stable = stability::enumerate_stable(ctx, profile, budget).map_err(|e| match e {
        stability::StabilityError::BudgetExceeded { required, budget } => {
            MechanismError::InstanceTooLarge { required, budget }
        }
        stability::StabilityError::Model(_) => unreachable!("enumeration builds valid matchings"),
    })?;
    let k = stable.len();
    debug_assert!(k >= 1, "the stable set is never empty");
    let pick = if k % 2 == 1 { k.div_ceil(2) } else { k / 2 + 1 };
    let assignment = ctx
        .students()
        .map(|i| {
            let mut mine: Vec<Alternative> = stable.iter().map(|m| m.of(i)).collect();
            mine.sort_by_key(|&a| profile.get(i).rank(a));
            mine[pick - 1]
        })
        .collect();
    Ok(Matching::new(assignment))
}

/// Default ceiling on the number of candidate assignments the brute-force
/// stable-set machinery will consider.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

pub struct DaStudent;

impl Mechanism for DaStudent {
    fn name(&self) -> &str {
        "da"
    }
    fn run(&self, ctx: &SchoolChoiceContext, profile: &PreferenceProfile) -> Matching {
        da_student(ctx, profile)
    }
}

pub struct DaSchool;

impl Mechanism for DaSchool {
    fn name(&self) -> &str {
        "da-school"
    }
    fn run(&self, ctx: &SchoolChoiceContext, profile: &PreferenceProfile) -> Matching {
        da_school(ctx, profile)
    }
}

pub struct Boston;

impl Mechanism for Boston {
    fn name(&self) -> &str {
        "boston"
    }
    fn run(&self, ctx: &SchoolChoiceContext, profile: &PreferenceProfile) -> Matching {
        boston(ctx, profile)
    }
}

pub struct SerialDictatorship {
    pub order: Vec<StudentId>,
}

impl Mechanism for SerialDictatorship {
    fn name(&self) -> &str {
        "sd"
    }
    fn run(&self, ctx: &SchoolChoiceContext, profile: &PreferenceProfile) -> Matching {
        serial_dictatorship(ctx, profile, &self.order).expect("order validated at construction")
    }
}

pub struct SchoolMedian {
    pub budget: u64,
}

impl Default for SchoolMedian {
    fn default() -> Self {
        SchoolMedian {
            budget: DEFAULT_BUDGET,
        }
    }
}

impl Mechanism for SchoolMedian {
    fn name(&self) -> &str {
        "median"
    }
    fn run(&self, ctx: &SchoolChoiceContext, profile: &PreferenceProfile) -> Matching {
        school_median(ctx, profile, self.budget).expect("instance within the configured budget")
    }
}
