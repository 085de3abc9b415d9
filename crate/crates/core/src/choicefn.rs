//! General school choice functions: responsive rules, explicit tables,
//! rankings over candidate sets, the structural conditions
//! (substitutability, law of aggregate demand, q-acceptance), deferred
//! acceptance over choice functions, and choice-based stability audits.
//!
//! Student subsets are bitmasks (bit `i` = student with index `i`); explicit
//! tables are materialized over all subsets and are limited to twelve
//! students.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::mechanisms::Mechanism;
use crate::model::{
    Alternative, Matching, PreferenceProfile, PriorityOrder, SchoolChoiceContext, SchoolId,
    StudentId,
};
use crate::orders::mask_members;

pub const MAX_TABLE_STUDENTS: usize = 12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChoiceFnError {
    #[error("explicit choice tables support at most {MAX_TABLE_STUDENTS} students, got {0}")]
    TooManyStudents(usize),
    #[error("choice table is missing an entry for a subset")]
    IncompleteTable,
    #[error("chosen set is not a subset of the candidates")]
    NotASubset,
    #[error("deferred acceptance over these choice functions did not settle within {0} rounds")]
    NoFixedPoint(usize),
}

/// A rule selecting an accepted subset from every candidate set, for one
/// school.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChoiceFunction {
    school: SchoolId,
    n_students: usize,
    rule: ChoiceRule,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum ChoiceRule {
    Responsive {
        rank_of: Vec<usize>,
        capacity: usize,
    },
    Table {
        choices: Vec<u32>,
    },
}

impl ChoiceFunction {
    /// Top-`capacity` selection by a priority order.
    pub fn responsive(school: SchoolId, priority: &PriorityOrder, capacity: usize) -> Self {
        let n = priority.ranking().len();
        let rank_of = (0..n)
            .map(|i| priority.rank(StudentId::from_index(i)))
            .collect();
        ChoiceFunction {
            school,
            n_students: n,
            rule: ChoiceRule::Responsive { rank_of, capacity },
        }
    }

    /// Explicit table over every subset of the population.
    pub fn from_table(
        school: SchoolId,
        n_students: usize,
        table: &BTreeMap<u32, u32>,
    ) -> Result<Self, ChoiceFnError> {
        if n_students > MAX_TABLE_STUDENTS {
            return Err(ChoiceFnError::TooManyStudents(n_students));
        }
        let mut choices = vec![0u32; 1 << n_students];
        for set in 0u32..(1 << n_students) {
            let chosen = *table.get(&set).ok_or(ChoiceFnError::IncompleteTable)?;
            if chosen & !set != 0 {
                return Err(ChoiceFnError::NotASubset);
            }
            choices[set as usize] = chosen;
        }
        Ok(ChoiceFunction {
            school,
            n_students,
            rule: ChoiceRule::Table { choices },
        })
    }

    /// Choice induced by a strict ranking over candidate sets: from `N'`,
    /// pick the best-ranked listed subset of `N'`. Sets absent from the list
    /// are never chosen; listing the empty set makes the rule total.
    pub fn from_ranked_sets(
        school: SchoolId,
        n_students: usize,
        ranked_sets: &[u32],
    ) -> Result<Self, ChoiceFnError> {
        if n_students > MAX_TABLE_STUDENTS {
            return Err(ChoiceFnError::TooManyStudents(n_students));
        }
        let mut choices = vec![0u32; 1 << n_students];
        for set in 0u32..(1 << n_students) {
            choices[set as usize] = ranked_sets
                .iter()
                .copied()
                .find(|&cand| cand & !set == 0)
                .unwrap_or(0);
        }
        Ok(ChoiceFunction {
            school,
            n_students,
            rule: ChoiceRule::Table { choices },
        })
    }

    pub fn school(&self) -> SchoolId {
        self.school
    }

    pub fn n_students(&self) -> usize {
        self.n_students
    }

    /// `C(N')` as a bitmask.
    pub fn choose(&self, set: u32) -> u32 {
        match &self.rule {
            ChoiceRule::Responsive { rank_of, capacity } => {
                let mut members = mask_members(set);
                members.sort_by_key(|i| rank_of[i.index()]);
                members
                    .into_iter()
                    .take(*capacity)
                    .fold(0, |m, i| m | (1 << i.index()))
            }
            ChoiceRule::Table { choices } => choices[set as usize],
        }
    }

    pub fn chooses(&self, student: StudentId, set: u32) -> bool {
        self.choose(set) & (1 << student.index()) != 0
    }

    pub fn is_table(&self) -> bool {
        matches!(self.rule, ChoiceRule::Table { .. })
    }

    /// Materialize as a table over all subsets.
    pub fn table(&self) -> Vec<u32> {
        (0u32..(1 << self.n_students)).map(|s| self.choose(s)).collect()
    }
}

/// Witness that substitutability fails: `student` is chosen from the larger
/// set but dropped from the smaller one containing her.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubstitutabilityWitness {
    pub student: StudentId,
    pub smaller: u32,
    pub larger: u32,
}

/// `i ∈ N' ⊆ N''` and `i ∈ C(N'')` imply `i ∈ C(N')`.
pub fn check_substitutable(cf: &ChoiceFunction) -> Result<(), SubstitutabilityWitness> {
    let n = cf.n_students();
    for larger in 1u32..(1 << n) {
        let chosen = cf.choose(larger);
        // walk proper subsets of `larger`
        let mut smaller = (larger - 1) & larger;
        loop {
            let kept = cf.choose(smaller);
            let dropped = chosen & smaller & !kept;
            if dropped != 0 {
                return Err(SubstitutabilityWitness {
                    student: StudentId::from_index(dropped.trailing_zeros() as usize),
                    smaller,
                    larger,
                });
            }
            if smaller == 0 {
                break;
            }
            smaller = (smaller - 1) & larger;
        }
    }
    Ok(())
}

/// `N' ⊆ N''` implies `|C(N')| ≤ |C(N'')|`.
pub fn check_lad(cf: &ChoiceFunction) -> Result<(), (u32, u32)> {
    let n = cf.n_students();
    for larger in 1u32..(1 << n) {
        let big = cf.choose(larger).count_ones();
        let mut smaller = (larger - 1) & larger;
        loop {
            if cf.choose(smaller).count_ones() > big {
                return Err((smaller, larger));
            }
            if smaller == 0 {
                break;
            }
            smaller = (smaller - 1) & larger;
        }
    }
    Ok(())
}

/// If some `q` satisfies `|C(N')| = min(q, |N'|)` for all `N'`, return it;
/// otherwise return a witnessing subset. The only candidate is the size
/// chosen from the full population.
pub fn check_q_acceptance(cf: &ChoiceFunction) -> Result<usize, u32> {
    let n = cf.n_students();
    let full: u32 = if n == 32 { u32::MAX } else { (1 << n) - 1 };
    let q = cf.choose(full).count_ones() as usize;
    for set in 0u32..(1 << n) {
        let want = q.min(set.count_ones() as usize);
        if cf.choose(set).count_ones() as usize != want {
            return Err(set);
        }
    }
    Ok(q)
}

/// Structural warnings for running deferred acceptance over arbitrary choice
/// functions.
pub fn structural_warnings(choices: &[ChoiceFunction]) -> Vec<String> {
    let mut warnings = Vec::new();
    for cf in choices {
        if check_substitutable(cf).is_err() {
            warnings.push(format!(
                "choice function #{} is not substitutable; deferred acceptance may misbehave",
                cf.school().index()
            ));
        }
        if check_lad(cf).is_err() {
            warnings.push(format!(
                "choice function #{} violates the law of aggregate demand",
                cf.school().index()
            ));
        }
    }
    warnings
}

/// Deferred acceptance where each school evaluates its held set plus the new
/// proposals through its choice function every round.
pub fn da_with_choice(
    profile: &PreferenceProfile,
    choices: &[ChoiceFunction],
) -> Result<Matching, ChoiceFnError> {
    let n = profile.len();
    let n_schools = choices.len();
    let round_bound = n * n_schools + 1;
    let mut next = vec![0usize; n];
    let mut held_at: Vec<Option<SchoolId>> = vec![None; n];
    let mut held: Vec<u32> = vec![0; n_schools];

    for _ in 0..=round_bound {
        let mut proposals: Vec<u32> = vec![0; n_schools];
        let mut proposed = false;
        for i in 0..n {
            if held_at[i].is_some() {
                continue;
            }
            let pref = profile.get(StudentId::from_index(i));
            if let Alternative::School(s) = pref.ranking()[next[i]] {
                proposals[s.index()] |= 1 << i;
                proposed = true;
            }
        }
        if !proposed {
            let assignment = (0..n)
                .map(|i| {
                    held_at[i]
                        .map(Alternative::School)
                        .unwrap_or(Alternative::Outside)
                })
                .collect();
            return Ok(Matching::new(assignment));
        }
        for s in 0..n_schools {
            if proposals[s] == 0 {
                continue;
            }
            let pool = held[s] | proposals[s];
            let keep = choices[s].choose(pool);
            let rejected = pool & !keep;
            for i in mask_members(rejected) {
                held_at[i.index()] = None;
                next[i.index()] += 1;
            }
            for i in mask_members(keep) {
                held_at[i.index()] = Some(SchoolId::from_index(s));
            }
            held[s] = keep;
        }
    }
    Err(ChoiceFnError::NoFixedPoint(round_bound))
}

/// Stability with choice functions: individual rationality asks every held
/// set to be chosen from itself; a pair `(i, s)` blocks when `i` prefers `s`
/// and `s` would pick her out of its current class plus her.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChoiceStabilityReport {
    pub individually_rational: bool,
    /// Students seated below their outside option.
    pub ir_student_violations: Vec<StudentId>,
    /// Schools whose held set is not a fixed point of their choice.
    pub ir_school_violations: Vec<SchoolId>,
    pub blocking_pairs: Vec<(StudentId, SchoolId)>,
    pub stable: bool,
}

pub fn audit_choice_stability(
    matching: &Matching,
    profile: &PreferenceProfile,
    choices: &[ChoiceFunction],
) -> ChoiceStabilityReport {
    let n = profile.len();
    let mut report = ChoiceStabilityReport {
        individually_rational: true,
        ir_student_violations: Vec::new(),
        ir_school_violations: Vec::new(),
        blocking_pairs: Vec::new(),
        stable: false,
    };
    for i in (0..n).map(StudentId::from_index) {
        if !profile.get(i).weakly_prefers(matching.of(i), Alternative::Outside) {
            report.ir_student_violations.push(i);
        }
    }
    let held: Vec<u32> = choices
        .iter()
        .map(|cf| {
            crate::orders::mask_of_students(
                &matching.assigned_to(Alternative::School(cf.school())),
            )
        })
        .collect();
    for (s, cf) in choices.iter().enumerate() {
        if cf.choose(held[s]) != held[s] {
            report.ir_school_violations.push(SchoolId::from_index(s));
        }
    }
    for i in (0..n).map(StudentId::from_index) {
        for (s, cf) in choices.iter().enumerate() {
            let seat = Alternative::School(SchoolId::from_index(s));
            if profile.get(i).prefers(seat, matching.of(i))
                && cf.chooses(i, held[s] | (1 << i.index()))
            {
                report.blocking_pairs.push((i, SchoolId::from_index(s)));
            }
        }
    }
    report.individually_rational =
        report.ir_student_violations.is_empty() && report.ir_school_violations.is_empty();
    report.stable = report.individually_rational && report.blocking_pairs.is_empty();
    report
}

/// First school at which `i` blocks `matching`, if any.
pub fn blocks_matching(
    i: StudentId,
    matching: &Matching,
    profile: &PreferenceProfile,
    choices: &[ChoiceFunction],
) -> Option<SchoolId> {
    for (s, cf) in choices.iter().enumerate() {
        let sid = SchoolId::from_index(s);
        let seat = Alternative::School(sid);
        let held = crate::orders::mask_of_students(&matching.assigned_to(seat));
        if profile.get(i).prefers(seat, matching.of(i)) && cf.chooses(i, held | (1 << i.index())) {
            return Some(sid);
        }
    }
    None
}

/// Deferred acceptance over stored choice functions, as a fixed-population
/// mechanism. The context argument supplies names only; seats are governed
/// by the choice functions.
pub struct ChoiceDa {
    pub choices: Vec<ChoiceFunction>,
}

impl Mechanism for ChoiceDa {
    fn name(&self) -> &str {
        "da-choice"
    }
    fn run(&self, ctx: &SchoolChoiceContext, profile: &PreferenceProfile) -> Matching {
        debug_assert_eq!(ctx.n_schools(), self.choices.len());
        da_with_choice(profile, &self.choices).expect("choice DA settles on these inputs")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orders::mask_of_students;

    fn responsive123(q: usize) -> ChoiceFunction {
        let order = PriorityOrder::new(
            SchoolId(0),
            vec![StudentId(0), StudentId(1), StudentId(2)],
            3,
        )
        .unwrap();
        ChoiceFunction::responsive(SchoolId(0), &order, q)
    }

    #[test]
    fn responsive_takes_top_q() {
        let cf = responsive123(2);
        assert_eq!(cf.choose(0b111), 0b011);
        assert_eq!(cf.choose(0), 0);
        assert_eq!(cf.choose(0b100), 0b100);
    }

    #[test]
    fn responsive_is_substitutable_and_q_acceptant() {
        let cf = responsive123(2);
        assert!(check_substitutable(&cf).is_ok());
        assert!(check_lad(&cf).is_ok());
        assert_eq!(check_q_acceptance(&cf), Ok(2));
        assert_eq!(check_q_acceptance(&responsive123(1)), Ok(1));
    }

    #[test]
    fn constructed_violation_is_caught() {
        // C({1,2}) = {1} but C({1,2,3}) = {2,3}: dropping 2 from the smaller
        // set violates substitutability
        let mut table = BTreeMap::new();
        for set in 0u32..8 {
            table.insert(set, set);
        }
        table.insert(0b011, 0b001);
        table.insert(0b111, 0b110);
        let cf = ChoiceFunction::from_table(SchoolId(0), 3, &table).unwrap();
        let witness = check_substitutable(&cf).unwrap_err();
        assert!(witness.larger == 0b111);
    }

    #[test]
    fn table_must_choose_subsets() {
        let mut table = BTreeMap::new();
        for set in 0u32..4 {
            table.insert(set, set);
        }
        table.insert(0b01, 0b10);
        assert_eq!(
            ChoiceFunction::from_table(SchoolId(0), 2, &table).unwrap_err(),
            ChoiceFnError::NotASubset
        );
    }

    #[test]
    fn ranked_sets_pick_best_listed_subset() {
        // {1,2} > {3} > {1} > {2} > {} ; unlisted sets fall through
        let sets = [
            mask_of_students(&[StudentId(0), StudentId(1)]),
            mask_of_students(&[StudentId(2)]),
            mask_of_students(&[StudentId(0)]),
            mask_of_students(&[StudentId(1)]),
            0,
        ];
        let cf = ChoiceFunction::from_ranked_sets(SchoolId(0), 3, &sets).unwrap();
        assert_eq!(cf.choose(0b111), 0b011);
        assert_eq!(cf.choose(0b110), 0b100); // {2,3} → {3}
        assert_eq!(cf.choose(0b100), 0b100);
    }

    #[test]
    fn choice_da_matches_plain_da_on_a_responsive_instance() {
        let ctx = SchoolChoiceContext::from_tables(3, &[1, 2], &[&[1, 2, 3], &[3, 2, 1]]).unwrap();
        let profile =
            PreferenceProfile::from_tables(2, &[&[1, 2, 0], &[1, 2, 0], &[2, 1, 0]]).unwrap();
        let choices: Vec<ChoiceFunction> = ctx
            .schools()
            .map(|s| ChoiceFunction::responsive(s, ctx.priority(s), ctx.capacity(s)))
            .collect();
        assert_eq!(
            da_with_choice(&profile, &choices).unwrap(),
            crate::mechanisms::da_student(&ctx, &profile)
        );
    }
}
