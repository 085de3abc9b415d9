//! Preferences over colleagues and the induced mechanisms.
//!
//! A school-lexicographic preference over colleagues factors into a strict
//! school ranking plus, per school, a strict ranking of the feasible
//! colleague sets: two matchings placing the owner at different schools are
//! compared by the school ranking; at the same school only the set of
//! schoolmates matters; identical school and schoolmates means indifference.
//!
//! Whether the unassigned are colleague-sensitive (whether two matchings
//! that leave the owner unassigned may be strictly ranked by who else is
//! unassigned) is a modeling switch: an owner with an `outside_ranking`
//! compares unassigned sets, one without is indifferent across them.

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::mechanisms::{da_school, da_student};
use crate::model::{
    Alternative, Matching, Preference, PreferenceProfile, SchoolChoiceContext, SchoolId, StudentId,
};
use crate::orders::{mask_members, mask_of_students, OrderSpace};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExternalityError {
    #[error("colleague ranking for school #{school} does not cover the feasible colleague sets")]
    IncompleteColleagueRanking { school: usize },
    #[error("profile length does not match the context")]
    ProfileMismatch,
    #[error("colleague profile document: {0}")]
    BadDocument(String),
}

/// Strict ranking of colleague-set bitmasks, best first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColleagueOrder {
    sets: Vec<u32>,
    rank_of_set: Vec<Option<usize>>,
}

impl ColleagueOrder {
    fn new(sets: Vec<u32>, n_students: usize) -> Self {
        let mut rank_of_set = vec![None; 1 << n_students];
        for (rank, &s) in sets.iter().enumerate() {
            rank_of_set[s as usize] = Some(rank);
        }
        ColleagueOrder { sets, rank_of_set }
    }

    pub fn sets(&self) -> &[u32] {
        &self.sets
    }

    fn rank(&self, set: u32) -> Option<usize> {
        self.rank_of_set[set as usize]
    }
}

/// Sorted-member (index-lexicographic) order over subset masks: the default
/// colleague ranking when a profile does not spell one out.
pub fn id_lexicographic_sets(masks: &[u32]) -> Vec<u32> {
    let mut sorted = masks.to_vec();
    sorted.sort_by_key(|&m| mask_members(m));
    sorted
}

fn feasible_colleague_sets(ctx: &SchoolChoiceContext, owner: StudentId, school: SchoolId) -> Vec<u32> {
    let others = mask_of_students(
        &ctx.students().filter(|&i| i != owner).collect::<Vec<_>>(),
    );
    crate::orders::subsets_of_pool(others, 0, ctx.capacity(school).saturating_sub(1))
}

fn all_other_sets(ctx: &SchoolChoiceContext, owner: StudentId) -> Vec<u32> {
    let others = mask_of_students(
        &ctx.students().filter(|&i| i != owner).collect::<Vec<_>>(),
    );
    crate::orders::subsets_of_pool(others, 0, ctx.n_students())
}

/// A school-lexicographic preference over colleagues: school ranking plus a
/// per-school strict order over feasible colleague sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColleaguePreference {
    owner: StudentId,
    school_ranking: Preference,
    colleague_rankings: Vec<ColleagueOrder>,
    outside_ranking: Option<ColleagueOrder>,
}

impl ColleaguePreference {
    pub fn new(
        ctx: &SchoolChoiceContext,
        school_ranking: Preference,
        colleague_rankings: Vec<Vec<u32>>,
        outside_ranking: Option<Vec<u32>>,
    ) -> Result<Self, ExternalityError> {
        let owner = school_ranking.owner();
        let n = ctx.n_students();
        let mut orders = Vec::new();
        for s in ctx.schools() {
            let sets = &colleague_rankings[s.index()];
            let mut feasible = feasible_colleague_sets(ctx, owner, s);
            let mut listed = sets.clone();
            feasible.sort_unstable();
            listed.sort_unstable();
            if feasible != listed {
                return Err(ExternalityError::IncompleteColleagueRanking { school: s.index() });
            }
            orders.push(ColleagueOrder::new(sets.clone(), n));
        }
        let outside = match outside_ranking {
            None => None,
            Some(sets) => {
                let mut all = all_other_sets(ctx, owner);
                let mut listed = sets.clone();
                all.sort_unstable();
                listed.sort_unstable();
                if all != listed {
                    return Err(ExternalityError::IncompleteColleagueRanking {
                        school: ctx.n_schools(),
                    });
                }
                Some(ColleagueOrder::new(sets, n))
            }
        };
        Ok(ColleaguePreference {
            owner,
            school_ranking,
            colleague_rankings: orders,
            outside_ranking: outside,
        })
    }

    /// Colleague-agnostic preference: the given school ranking with every
    /// colleague order defaulted to index-lexicographic (including at the
    /// outside option).
    pub fn colleague_agnostic(ctx: &SchoolChoiceContext, school_ranking: Preference) -> Self {
        let owner = school_ranking.owner();
        let colleague_rankings = ctx
            .schools()
            .map(|s| id_lexicographic_sets(&feasible_colleague_sets(ctx, owner, s)))
            .collect();
        let outside = Some(id_lexicographic_sets(&all_other_sets(ctx, owner)));
        ColleaguePreference::new(ctx, school_ranking, colleague_rankings, outside)
            .expect("defaults cover the feasible sets")
    }

    /// Seeded random member of the colleague domain.
    pub fn random<R: Rng>(ctx: &SchoolChoiceContext, owner: StudentId, rng: &mut R) -> Self {
        let orders = OrderSpace::new(ctx.n_schools());
        let idx = rng.random_range(0..orders.len());
        let school_ranking = orders.preference(owner, idx);
        let colleague_rankings = ctx
            .schools()
            .map(|s| {
                let mut sets = feasible_colleague_sets(ctx, owner, s);
                sets.shuffle(rng);
                sets
            })
            .collect();
        let mut outside = all_other_sets(ctx, owner);
        outside.shuffle(rng);
        ColleaguePreference::new(ctx, school_ranking, colleague_rankings, Some(outside))
            .expect("random orders cover the feasible sets")
    }

    pub fn owner(&self) -> StudentId {
        self.owner
    }

    pub fn school_ranking(&self) -> &Preference {
        &self.school_ranking
    }

    pub fn with_school_ranking(&self, school_ranking: Preference) -> Self {
        ColleaguePreference {
            owner: self.owner,
            school_ranking,
            colleague_rankings: self.colleague_rankings.clone(),
            outside_ranking: self.outside_ranking.clone(),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Comparison {
    Prefers,
    Indifferent,
    Dispreferred,
}

impl Comparison {
    pub fn flipped(self) -> Comparison {
        match self {
            Comparison::Prefers => Comparison::Dispreferred,
            Comparison::Indifferent => Comparison::Indifferent,
            Comparison::Dispreferred => Comparison::Prefers,
        }
    }
}

fn colleague_mask(m: &Matching, owner: StudentId) -> u32 {
    mask_of_students(&m.colleagues(owner))
}

/// Lexicographic comparison of two matchings from the owner's point of
/// view: own school first, then schoolmates.
pub fn compare_matchings(cp: &ColleaguePreference, mu: &Matching, eta: &Matching) -> Comparison {
    let owner = cp.owner;
    let a = mu.of(owner);
    let b = eta.of(owner);
    if a != b {
        return if cp.school_ranking.prefers(a, b) {
            Comparison::Prefers
        } else {
            Comparison::Dispreferred
        };
    }
    let mine = colleague_mask(mu, owner);
    let theirs = colleague_mask(eta, owner);
    if mine == theirs {
        return Comparison::Indifferent;
    }
    let order = match a {
        Alternative::School(s) => Some(&cp.colleague_rankings[s.index()]),
        Alternative::Outside => cp.outside_ranking.as_ref(),
    };
    match order {
        None => Comparison::Indifferent,
        Some(order) => match (order.rank(mine), order.rank(theirs)) {
            (Some(x), Some(y)) if x < y => Comparison::Prefers,
            (Some(_), Some(_)) => Comparison::Dispreferred,
            // unseen sets only arise for infeasible inputs; stay neutral
            _ => Comparison::Indifferent,
        },
    }
}

/// A preference in the wider school-lexicographic domain: same-school
/// comparisons read an explicit best-first list of matchings instead of a
/// colleague-set order. Pairs absent from the list are indifferent.
#[derive(Clone, Debug)]
pub enum ExtPreference {
    Colleague(ColleaguePreference),
    Lexicographic {
        school_ranking: Preference,
        matching_order: Vec<Matching>,
    },
}

impl ExtPreference {
    pub fn owner(&self) -> StudentId {
        match self {
            ExtPreference::Colleague(cp) => cp.owner(),
            ExtPreference::Lexicographic { school_ranking, .. } => school_ranking.owner(),
        }
    }

    /// The induced ranking over `S ∪ {s0}`. The factored representation
    /// stores it directly; consistency with matching-level comparisons is a
    /// tested invariant, not an assumption.
    pub fn induced_school_preference(&self) -> &Preference {
        match self {
            ExtPreference::Colleague(cp) => cp.school_ranking(),
            ExtPreference::Lexicographic { school_ranking, .. } => school_ranking,
        }
    }

    pub fn compare(&self, mu: &Matching, eta: &Matching) -> Comparison {
        match self {
            ExtPreference::Colleague(cp) => compare_matchings(cp, mu, eta),
            ExtPreference::Lexicographic {
                school_ranking,
                matching_order,
            } => {
                let owner = school_ranking.owner();
                let a = mu.of(owner);
                let b = eta.of(owner);
                if a != b {
                    return if school_ranking.prefers(a, b) {
                        Comparison::Prefers
                    } else {
                        Comparison::Dispreferred
                    };
                }
                if mu == eta {
                    return Comparison::Indifferent;
                }
                let pos = |m: &Matching| matching_order.iter().position(|x| x == m);
                match (pos(mu), pos(eta)) {
                    (Some(x), Some(y)) if x < y => Comparison::Prefers,
                    (Some(x), Some(y)) if x > y => Comparison::Dispreferred,
                    _ => Comparison::Indifferent,
                }
            }
        }
    }
}

pub type ExtProfile = Vec<ExtPreference>;

pub fn induced_profile(profile: &[ExtPreference]) -> PreferenceProfile {
    PreferenceProfile::new(
        profile
            .iter()
            .map(|p| p.induced_school_preference().clone())
            .collect(),
    )
    .expect("owners aligned")
}

/// A mechanism over colleague-domain profiles.
pub trait ColleagueMechanism {
    fn name(&self) -> &str;
    fn assign(&self, ctx: &SchoolChoiceContext, profile: &[ExtPreference]) -> Matching;
}

/// Student-proposing deferred acceptance on the induced school rankings.
pub struct DaBar;

impl ColleagueMechanism for DaBar {
    fn name(&self) -> &str {
        "da-bar"
    }
    fn assign(&self, ctx: &SchoolChoiceContext, profile: &[ExtPreference]) -> Matching {
        da_student(ctx, &induced_profile(profile))
    }
}

pub fn da_bar(ctx: &SchoolChoiceContext, profile: &[ExtPreference]) -> Matching {
    DaBar.assign(ctx, profile)
}

/// The school-optimal stable matching of the induced problem: the stable
/// selection most opposed to `DaBar`.
pub struct SchoolOptimalSelection;

impl ColleagueMechanism for SchoolOptimalSelection {
    fn name(&self) -> &str {
        "school-optimal-selection"
    }
    fn assign(&self, ctx: &SchoolChoiceContext, profile: &[ExtPreference]) -> Matching {
        da_school(ctx, &induced_profile(profile))
    }
}

#[derive(Clone, Debug)]
pub struct ExtCounterexample {
    pub deviator: StudentId,
    pub report: ExtPreference,
    pub truthful: Matching,
    pub deviant: Matching,
}

impl ExtCounterexample {
    pub fn replay(
        &self,
        mech: &dyn ColleagueMechanism,
        ctx: &SchoolChoiceContext,
        profile: &[ExtPreference],
    ) -> bool {
        let truthful = mech.assign(ctx, profile);
        let mut deviated = profile.to_vec();
        deviated[self.deviator.index()] = self.report.clone();
        let deviant = mech.assign(ctx, &deviated);
        truthful == self.truthful
            && deviant == self.deviant
            && profile[self.deviator.index()].compare(&deviant, &truthful) == Comparison::Prefers
    }
}

/// Manipulation audit at matching-comparison level: for every member, every
/// deviant school ranking (as a colleague-agnostic report, which stays in
/// the domain) is tried, and the outcomes are compared under the deviator's
/// true preference. Deviant colleague orders are pointless against
/// mechanisms that read only the induced school rankings; setting
/// `deviate_colleague_orders` additionally permutes those for black-box
/// rules.
pub fn check_sp_externalities(
    mech: &dyn ColleagueMechanism,
    ctx: &SchoolChoiceContext,
    profile: &[ExtPreference],
    deviate_colleague_orders: bool,
) -> Result<Option<ExtCounterexample>, ExternalityError> {
    if profile.len() != ctx.n_students() {
        return Err(ExternalityError::ProfileMismatch);
    }
    let truthful = mech.assign(ctx, profile);
    let orders = OrderSpace::new(ctx.n_schools());
    for i in ctx.students() {
        for idx in 0..orders.len() {
            let ranking = orders.preference(i, idx);
            let mut reports: Vec<ExtPreference> = vec![ExtPreference::Colleague(
                ColleaguePreference::colleague_agnostic(ctx, ranking.clone()),
            )];
            if deviate_colleague_orders {
                reports.extend(colleague_order_variants(ctx, i, &ranking));
            }
            for report in reports {
                let mut deviated = profile.to_vec();
                deviated[i.index()] = report.clone();
                let deviant = mech.assign(ctx, &deviated);
                if profile[i.index()].compare(&deviant, &truthful) == Comparison::Prefers {
                    return Ok(Some(ExtCounterexample {
                        deviator: i,
                        report,
                        truthful,
                        deviant,
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// All permutations of the deviator's per-school colleague orders, for
/// black-box mechanisms. Kept tiny: contexts beyond a handful of feasible
/// sets would explode and are rejected upstream by the caller's sizing.
fn colleague_order_variants(
    ctx: &SchoolChoiceContext,
    owner: StudentId,
    ranking: &Preference,
) -> Vec<ExtPreference> {
    fn perms(items: &[u32]) -> Vec<Vec<u32>> {
        if items.is_empty() {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for (pos, &x) in items.iter().enumerate() {
            let mut rest = items.to_vec();
            rest.remove(pos);
            for mut tail in perms(&rest) {
                tail.insert(0, x);
                out.push(tail);
            }
        }
        out
    }
    let mut variants: Vec<Vec<Vec<u32>>> = vec![Vec::new()];
    for s in ctx.schools() {
        let sets = feasible_colleague_sets(ctx, owner, s);
        let school_perms = perms(&sets);
        let mut next = Vec::new();
        for prefix in &variants {
            for p in &school_perms {
                let mut v = prefix.clone();
                v.push(p.clone());
                next.push(v);
            }
        }
        variants = next;
    }
    let outside = id_lexicographic_sets(&all_other_sets(ctx, owner));
    variants
        .into_iter()
        .map(|colleague_rankings| {
            ExtPreference::Colleague(
                ColleaguePreference::new(
                    ctx,
                    ranking.clone(),
                    colleague_rankings,
                    Some(outside.clone()),
                )
                .expect("permutations cover the feasible sets"),
            )
        })
        .collect()
}

/// Stability in the externality domain, evaluated through matching-level
/// comparisons: `(i, s)` blocks when moving `i` into `s` (bumping the
/// lowest-priority seated student if full, which needs `i` to outrank her)
/// produces a matching `i` strictly prefers.
pub fn is_stable_externalities(
    matching: &Matching,
    ctx: &SchoolChoiceContext,
    profile: &[ExtPreference],
) -> bool {
    for i in ctx.students() {
        // individual rationality: dropping to the outside option must not be
        // a strict improvement
        if matching.of(i) != Alternative::Outside {
            let mut out = matching.assignment().to_vec();
            out[i.index()] = Alternative::Outside;
            if profile[i.index()].compare(&Matching::new(out), matching) == Comparison::Prefers {
                return false;
            }
        }
        for s in ctx.schools() {
            let seat = Alternative::School(s);
            if matching.of(i) == seat {
                continue;
            }
            let seated = matching.assigned_to(seat);
            let mut candidates: Vec<Vec<Alternative>> = Vec::new();
            if seated.len() < ctx.capacity(s) {
                let mut joined = matching.assignment().to_vec();
                joined[i.index()] = seat;
                candidates.push(joined);
            } else {
                for &j in &seated {
                    if ctx.priority(s).higher(i, j) {
                        let mut swapped = matching.assignment().to_vec();
                        swapped[j.index()] = Alternative::Outside;
                        swapped[i.index()] = seat;
                        candidates.push(swapped);
                    }
                }
            }
            for cand in candidates {
                if profile[i.index()].compare(&Matching::new(cand), matching) == Comparison::Prefers
                {
                    return false;
                }
            }
        }
    }
    true
}

/// Interchange form of a colleague-domain profile: per student a
/// `school_ranking` plus, optionally, per school an ordered list of
/// colleague sets (best first). Omitted colleague orders default to
/// index-lexicographic; the students that were defaulted are reported so
/// callers can flag the modeling choice.
pub fn parse_colleague_profile(
    text: &str,
    ctx: &SchoolChoiceContext,
) -> Result<(Vec<ExtPreference>, Vec<StudentId>), ExternalityError> {
    use std::collections::BTreeMap;

    #[derive(serde::Deserialize)]
    struct StudentDoc {
        school_ranking: Vec<String>,
        #[serde(default)]
        colleagues: BTreeMap<String, Vec<Vec<String>>>,
    }

    let doc: BTreeMap<String, StudentDoc> =
        serde_json::from_str(text).map_err(|e| ExternalityError::BadDocument(e.to_string()))?;
    if doc.len() != ctx.n_students() {
        return Err(ExternalityError::ProfileMismatch);
    }
    let mut prefs: Vec<Option<ExtPreference>> = vec![None; ctx.n_students()];
    let mut defaulted = Vec::new();
    for (name, entry) in &doc {
        let owner = ctx
            .student_by_name(name)
            .map_err(|e| ExternalityError::BadDocument(e.to_string()))?;
        let ranking = entry
            .school_ranking
            .iter()
            .map(|a| ctx.alternative_by_name(a))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ExternalityError::BadDocument(e.to_string()))?;
        let school_ranking = Preference::new(owner, ranking, ctx.n_schools())
            .map_err(|e| ExternalityError::BadDocument(e.to_string()))?;
        let cp = if entry.colleagues.is_empty() {
            defaulted.push(owner);
            ColleaguePreference::colleague_agnostic(ctx, school_ranking)
        } else {
            let mut rankings = Vec::new();
            for s in ctx.schools() {
                let listed = entry.colleagues.get(ctx.school_name(s)).ok_or_else(|| {
                    ExternalityError::BadDocument(format!(
                        "student `{name}` lists colleague orders but omits school `{}`",
                        ctx.school_name(s)
                    ))
                })?;
                let sets = listed
                    .iter()
                    .map(|set| {
                        set.iter()
                            .map(|n| ctx.student_by_name(n))
                            .collect::<Result<Vec<_>, _>>()
                            .map(|ids| mask_of_students(&ids))
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| ExternalityError::BadDocument(e.to_string()))?;
                rankings.push(sets);
            }
            let outside = entry
                .colleagues
                .get("s0")
                .map(|listed| {
                    listed
                        .iter()
                        .map(|set| {
                            set.iter()
                                .map(|n| ctx.student_by_name(n))
                                .collect::<Result<Vec<_>, _>>()
                                .map(|ids| mask_of_students(&ids))
                        })
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| ExternalityError::BadDocument(e.to_string()))
                })
                .transpose()?
                .unwrap_or_else(|| id_lexicographic_sets(&all_other_sets(ctx, owner)));
            ColleaguePreference::new(ctx, school_ranking, rankings, Some(outside))?
        };
        prefs[owner.index()] = Some(ExtPreference::Colleague(cp));
    }
    let prefs = prefs
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or(ExternalityError::ProfileMismatch)?;
    Ok((prefs, defaulted))
}

/// Brute-force stable set of the externality problem.
pub fn enumerate_stable_externalities(
    ctx: &SchoolChoiceContext,
    profile: &[ExtPreference],
) -> Vec<Matching> {
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
        if m.check_capacities(ctx).is_ok() && is_stable_externalities(&m, ctx, profile) {
            out.push(m);
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::matching_from_labels;

    fn ctx2() -> SchoolChoiceContext {
        SchoolChoiceContext::from_tables(3, &[2, 1], &[&[1, 2, 3], &[3, 2, 1]]).unwrap()
    }

    fn ranking(owner: usize, labels: &[usize]) -> Preference {
        let profile =
            PreferenceProfile::from_tables(2, &[labels, labels, labels]).unwrap();
        profile.get(StudentId::from_index(owner)).clone()
    }

    #[test]
    fn same_school_same_colleagues_is_indifference() {
        let ctx = ctx2();
        let cp = ColleaguePreference::colleague_agnostic(&ctx, ranking(0, &[1, 2, 0]));
        let mu = matching_from_labels(&[1, 1, 2]);
        let eta = matching_from_labels(&[1, 1, 2]);
        assert_eq!(compare_matchings(&cp, &mu, &eta), Comparison::Indifferent);
    }

    #[test]
    fn different_schools_follow_the_school_ranking() {
        let ctx = ctx2();
        let cp = ColleaguePreference::colleague_agnostic(&ctx, ranking(0, &[2, 1, 0]));
        let mu = matching_from_labels(&[2, 1, 1]);
        let eta = matching_from_labels(&[1, 1, 2]);
        assert_eq!(compare_matchings(&cp, &mu, &eta), Comparison::Prefers);
        assert_eq!(compare_matchings(&cp, &eta, &mu), Comparison::Dispreferred);
    }

    #[test]
    fn same_school_different_colleagues_is_strict() {
        let ctx = ctx2();
        let cp = ColleaguePreference::colleague_agnostic(&ctx, ranking(0, &[1, 2, 0]));
        let mu = matching_from_labels(&[1, 1, 2]); // colleagues {2}
        let eta = matching_from_labels(&[1, 2, 1]); // colleagues {3}
        let forward = compare_matchings(&cp, &mu, &eta);
        assert_ne!(forward, Comparison::Indifferent);
        assert_eq!(compare_matchings(&cp, &eta, &mu), forward.flipped());
    }

    #[test]
    fn outside_sensitivity_is_a_switch() {
        let ctx = ctx2();
        let sensitive = ColleaguePreference::colleague_agnostic(&ctx, ranking(0, &[0, 1, 2]));
        let mut insensitive = sensitive.clone();
        insensitive.outside_ranking = None;
        let mu = matching_from_labels(&[0, 0, 2]); // unassigned with 2
        let eta = matching_from_labels(&[0, 2, 0]); // unassigned with 3
        assert_ne!(compare_matchings(&sensitive, &mu, &eta), Comparison::Indifferent);
        assert_eq!(compare_matchings(&insensitive, &mu, &eta), Comparison::Indifferent);
    }

    #[test]
    fn da_bar_reads_only_school_rankings() {
        let ctx = ctx2();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        use rand::SeedableRng;
        let profile: Vec<ExtPreference> = ctx
            .students()
            .map(|i| ExtPreference::Colleague(ColleaguePreference::random(&ctx, i, &mut rng)))
            .collect();
        let baseline = da_bar(&ctx, &profile);
        // permute every colleague order; the outcome must not move
        let permuted: Vec<ExtPreference> = profile
            .iter()
            .map(|p| match p {
                ExtPreference::Colleague(cp) => {
                    let mut other = ColleaguePreference::random(&ctx, cp.owner(), &mut rng);
                    other.school_ranking = cp.school_ranking().clone();
                    ExtPreference::Colleague(other)
                }
                other => other.clone(),
            })
            .collect();
        assert_eq!(da_bar(&ctx, &permuted), baseline);
    }

    #[test]
    fn colleague_profile_documents_parse_with_defaults() {
        let ctx = ctx2();
        let text = r#"{
            "1": {"school_ranking": ["s1", "s2", "s0"],
                  "colleagues": {"s1": [["2"], ["3"], []], "s2": [[]]}},
            "2": {"school_ranking": ["s2", "s1", "s0"]},
            "3": {"school_ranking": ["s1", "s2", "s0"]}
        }"#;
        let (profile, defaulted) = parse_colleague_profile(text, &ctx).unwrap();
        assert_eq!(defaulted, vec![StudentId(1), StudentId(2)]);
        assert_eq!(
            profile[0].induced_school_preference().top(),
            Alternative::School(SchoolId(0))
        );
        // student 1 prefers colleague 2 over colleague 3 at s1
        let mu = matching_from_labels(&[1, 1, 2]);
        let eta = matching_from_labels(&[1, 2, 1]);
        assert_eq!(profile[0].compare(&mu, &eta), Comparison::Prefers);

        // an incomplete colleague order is rejected
        let bad = r#"{
            "1": {"school_ranking": ["s1", "s2", "s0"],
                  "colleagues": {"s1": [["2"]], "s2": [[]]}},
            "2": {"school_ranking": ["s2", "s1", "s0"]},
            "3": {"school_ranking": ["s1", "s2", "s0"]}
        }"#;
        assert!(parse_colleague_profile(bad, &ctx).is_err());
    }

    #[test]
    fn constant_mechanisms_are_immune_vacuously() {
        struct Always(Matching);
        impl ColleagueMechanism for Always {
            fn name(&self) -> &str {
                "constant"
            }
            fn assign(&self, _: &SchoolChoiceContext, _: &[ExtPreference]) -> Matching {
                self.0.clone()
            }
        }
        let ctx = ctx2();
        let mech = Always(matching_from_labels(&[1, 1, 2]));
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let profile: Vec<ExtPreference> = ctx
            .students()
            .map(|i| ExtPreference::Colleague(ColleaguePreference::random(&ctx, i, &mut rng)))
            .collect();
        assert!(check_sp_externalities(&mech, &ctx, &profile, false)
            .unwrap()
            .is_none());
    }

    #[test]
    fn single_student_gets_top_admissible_school() {
        let ctx = SchoolChoiceContext::from_tables(1, &[1], &[&[1]]).unwrap();
        let pref = PreferenceProfile::from_tables(1, &[&[1, 0]]).unwrap();
        let profile = vec![ExtPreference::Colleague(
            ColleaguePreference::colleague_agnostic(&ctx, pref.get(StudentId(0)).clone()),
        )];
        assert_eq!(da_bar(&ctx, &profile), matching_from_labels(&[1]));
    }
}
