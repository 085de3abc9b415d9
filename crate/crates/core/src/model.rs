//! Domain model for school choice: students, schools, priority orders,
//! preference profiles, and matchings.
//!
//! Identifiers are strings at the interchange boundary and dense indices
//! internally. The outside option `s0` is a distinguished variant of the
//! assignment codomain, never a member of the school set.

use std::collections::BTreeSet;

use thiserror::Error;

/// Dense index of a student within a context.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct StudentId(pub u32);

impl StudentId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(i: usize) -> Self {
        StudentId(i as u32)
    }
}

/// Dense index of a school within a context.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct SchoolId(pub u32);

impl SchoolId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(i: usize) -> Self {
        SchoolId(i as u32)
    }
}

/// What a student can end up with: a school seat or the outside option.
///
/// `Outside` sorts after every school, so lexicographic comparisons of
/// assignment vectors are deterministic.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Alternative {
    School(SchoolId),
    Outside,
}

impl Alternative {
    /// Compact code: schools map to their index, the outside option to
    /// `n_schools`. Used to index rank tables.
    pub fn code(self, n_schools: usize) -> usize {
        match self {
            Alternative::School(s) => s.index(),
            Alternative::Outside => n_schools,
        }
    }

    pub fn from_code(code: usize, n_schools: usize) -> Alternative {
        if code == n_schools {
            Alternative::Outside
        } else {
            Alternative::School(SchoolId::from_index(code))
        }
    }

    pub fn school(self) -> Option<SchoolId> {
        match self {
            Alternative::School(s) => Some(s),
            Alternative::Outside => None,
        }
    }

    pub fn is_outside(self) -> bool {
        matches!(self, Alternative::Outside)
    }
}

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum ModelError {
    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),
    #[error("`s0` is reserved for the outside option and cannot name a school")]
    ReservedSchoolId,
    #[error("school `{0}`: capacity must be at least 1")]
    CapacityTooSmall(String),
    #[error("school `{school}`: priority order is not a strict total order over the students: {detail}")]
    NonTotalPriority { school: String, detail: String },
    #[error("student `{student}`: non-total preference: {detail}")]
    NonTotalPreference { student: String, detail: String },
    #[error("unknown student `{0}`")]
    UnknownStudent(String),
    #[error("unknown school or alternative `{0}`")]
    UnknownAlternative(String),
    #[error("subpopulation is not a subset of the context's students")]
    NotASubset,
    #[error("matching assigns more students to school `{0}` than its capacity")]
    CapacityViolation(String),
    #[error("preference profile domain does not equal the student set")]
    ProfileDomainMismatch,
}

/// A strict total order of all students, from a school's point of view.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PriorityOrder {
    school: SchoolId,
    ranking: Vec<StudentId>,
    rank_of: Vec<usize>,
}

impl PriorityOrder {
    pub fn new(
        school: SchoolId,
        ranking: Vec<StudentId>,
        n_students: usize,
    ) -> Result<Self, ModelError> {
        let mut rank_of = vec![usize::MAX; n_students];
        for (rank, &i) in ranking.iter().enumerate() {
            if i.index() >= n_students {
                return Err(ModelError::NonTotalPriority {
                    school: format!("#{}", school.index()),
                    detail: format!("student index {} out of range", i.index()),
                });
            }
            if rank_of[i.index()] != usize::MAX {
                return Err(ModelError::NonTotalPriority {
                    school: format!("#{}", school.index()),
                    detail: format!("student #{} listed twice", i.index()),
                });
            }
            rank_of[i.index()] = rank;
        }
        if ranking.len() != n_students {
            return Err(ModelError::NonTotalPriority {
                school: format!("#{}", school.index()),
                detail: format!("lists {} of {} students", ranking.len(), n_students),
            });
        }
        Ok(PriorityOrder {
            school,
            ranking,
            rank_of,
        })
    }

    pub fn school(&self) -> SchoolId {
        self.school
    }

    pub fn ranking(&self) -> &[StudentId] {
        &self.ranking
    }

    /// Position of `i`, zero is highest priority.
    pub fn rank(&self, i: StudentId) -> usize {
        self.rank_of[i.index()]
    }

    /// `i ≻_s j`
    pub fn higher(&self, i: StudentId, j: StudentId) -> bool {
        self.rank(i) < self.rank(j)
    }
}

/// The fixed environment: students, schools, priorities, and capacities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchoolChoiceContext {
    student_names: Vec<String>,
    school_names: Vec<String>,
    priorities: Vec<PriorityOrder>,
    capacities: Vec<usize>,
}

impl SchoolChoiceContext {
    pub fn new(
        student_names: Vec<String>,
        school_names: Vec<String>,
        priorities: Vec<PriorityOrder>,
        capacities: Vec<usize>,
    ) -> Result<Self, ModelError> {
        let mut seen = BTreeSet::new();
        for name in student_names.iter().chain(school_names.iter()) {
            if !seen.insert(name.clone()) {
                return Err(ModelError::DuplicateId(name.clone()));
            }
        }
        if school_names.iter().any(|s| s == "s0") {
            return Err(ModelError::ReservedSchoolId);
        }
        if priorities.len() != school_names.len() || capacities.len() != school_names.len() {
            return Err(ModelError::ProfileDomainMismatch);
        }
        for (k, cap) in capacities.iter().enumerate() {
            if *cap < 1 {
                return Err(ModelError::CapacityTooSmall(school_names[k].clone()));
            }
        }
        for (k, p) in priorities.iter().enumerate() {
            if p.school().index() != k || p.ranking().len() != student_names.len() {
                return Err(ModelError::NonTotalPriority {
                    school: school_names[k].clone(),
                    detail: "priority order does not cover the student population".into(),
                });
            }
        }
        Ok(SchoolChoiceContext {
            student_names,
            school_names,
            priorities,
            capacities,
        })
    }

    /// Integer-labelled construction helper: student `i` is named `i+1`,
    /// school `k` is named `s{k+1}`, priorities given as 1-based student
    /// labels.
    pub fn from_tables(
        n_students: usize,
        capacities: &[usize],
        priorities: &[&[usize]],
    ) -> Result<Self, ModelError> {
        let student_names = (1..=n_students).map(|i| i.to_string()).collect();
        let school_names = (1..=capacities.len()).map(|k| format!("s{k}")).collect();
        let mut orders = Vec::new();
        for (k, ranking) in priorities.iter().enumerate() {
            let ids = ranking
                .iter()
                .map(|&label| StudentId::from_index(label - 1))
                .collect();
            orders.push(PriorityOrder::new(SchoolId::from_index(k), ids, n_students)?);
        }
        SchoolChoiceContext::new(student_names, school_names, orders, capacities.to_vec())
    }

    pub fn n_students(&self) -> usize {
        self.student_names.len()
    }

    pub fn n_schools(&self) -> usize {
        self.school_names.len()
    }

    pub fn students(&self) -> impl Iterator<Item = StudentId> {
        (0..self.n_students()).map(StudentId::from_index)
    }

    pub fn schools(&self) -> impl Iterator<Item = SchoolId> {
        (0..self.n_schools()).map(SchoolId::from_index)
    }

    /// Every alternative a preference must rank: all schools plus `s0`.
    pub fn alternatives(&self) -> impl Iterator<Item = Alternative> {
        let n = self.n_schools();
        (0..=n).map(move |c| Alternative::from_code(c, n))
    }

    pub fn capacity(&self, s: SchoolId) -> usize {
        self.capacities[s.index()]
    }

    pub fn capacities(&self) -> &[usize] {
        &self.capacities
    }

    pub fn priority(&self, s: SchoolId) -> &PriorityOrder {
        &self.priorities[s.index()]
    }

    pub fn student_name(&self, i: StudentId) -> &str {
        &self.student_names[i.index()]
    }

    pub fn school_name(&self, s: SchoolId) -> &str {
        &self.school_names[s.index()]
    }

    pub fn alternative_name(&self, a: Alternative) -> &str {
        match a {
            Alternative::School(s) => self.school_name(s),
            Alternative::Outside => "s0",
        }
    }

    pub fn student_by_name(&self, name: &str) -> Result<StudentId, ModelError> {
        self.student_names
            .iter()
            .position(|n| n == name)
            .map(StudentId::from_index)
            .ok_or_else(|| ModelError::UnknownStudent(name.to_string()))
    }

    pub fn alternative_by_name(&self, name: &str) -> Result<Alternative, ModelError> {
        if name == "s0" {
            return Ok(Alternative::Outside);
        }
        self.school_names
            .iter()
            .position(|n| n == name)
            .map(|k| Alternative::School(SchoolId::from_index(k)))
            .ok_or_else(|| ModelError::UnknownAlternative(name.to_string()))
    }

    pub fn school_by_name(&self, name: &str) -> Result<SchoolId, ModelError> {
        match self.alternative_by_name(name)? {
            Alternative::School(s) => Ok(s),
            Alternative::Outside => Err(ModelError::UnknownAlternative(name.to_string())),
        }
    }

    /// Induced context on a subpopulation: students outside it are deleted
    /// from every priority order, relative order preserved. Students are
    /// re-indexed densely (ascending original index); names carry over, so
    /// reports keep the original labels.
    pub fn restrict_priorities(
        &self,
        subpopulation: &BTreeSet<StudentId>,
    ) -> Result<SchoolChoiceContext, ModelError> {
        if subpopulation.iter().any(|i| i.index() >= self.n_students()) {
            return Err(ModelError::NotASubset);
        }
        let kept: Vec<StudentId> = subpopulation.iter().copied().collect();
        let student_names = kept
            .iter()
            .map(|&i| self.student_names[i.index()].clone())
            .collect();
        let mut priorities = Vec::new();
        for s in self.schools() {
            let ranking = self
                .priority(s)
                .ranking()
                .iter()
                .filter(|i| subpopulation.contains(i))
                .map(|&old| StudentId::from_index(kept.binary_search(&old).unwrap()))
                .collect();
            priorities.push(PriorityOrder::new(s, ranking, kept.len())?);
        }
        SchoolChoiceContext::new(
            student_names,
            self.school_names.clone(),
            priorities,
            self.capacities.clone(),
        )
    }
}

/// One student's strict ranking of all schools plus the outside option.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Preference {
    owner: StudentId,
    ranking: Vec<Alternative>,
    rank_of: Vec<usize>,
}

impl Preference {
    pub fn new(
        owner: StudentId,
        ranking: Vec<Alternative>,
        n_schools: usize,
    ) -> Result<Self, ModelError> {
        let mut rank_of = vec![usize::MAX; n_schools + 1];
        for (rank, &a) in ranking.iter().enumerate() {
            let code = a.code(n_schools);
            if code > n_schools {
                return Err(ModelError::NonTotalPreference {
                    student: format!("#{}", owner.index()),
                    detail: "alternative out of range".into(),
                });
            }
            if rank_of[code] != usize::MAX {
                return Err(ModelError::NonTotalPreference {
                    student: format!("#{}", owner.index()),
                    detail: "alternative listed twice".into(),
                });
            }
            rank_of[code] = rank;
        }
        if ranking.len() != n_schools + 1 {
            return Err(ModelError::NonTotalPreference {
                student: format!("#{}", owner.index()),
                detail: format!(
                    "ranks {} of {} alternatives (every school and s0 must appear)",
                    ranking.len(),
                    n_schools + 1
                ),
            });
        }
        Ok(Preference {
            owner,
            ranking,
            rank_of,
        })
    }

    pub fn owner(&self) -> StudentId {
        self.owner
    }

    pub fn n_schools(&self) -> usize {
        self.rank_of.len() - 1
    }

    pub fn ranking(&self) -> &[Alternative] {
        &self.ranking
    }

    pub fn rank(&self, a: Alternative) -> usize {
        self.rank_of[a.code(self.n_schools())]
    }

    /// Strict comparison `a P_i b`.
    pub fn prefers(&self, a: Alternative, b: Alternative) -> bool {
        self.rank(a) < self.rank(b)
    }

    /// Weak comparison `a R_i b`.
    pub fn weakly_prefers(&self, a: Alternative, b: Alternative) -> bool {
        self.rank(a) <= self.rank(b)
    }

    pub fn top(&self) -> Alternative {
        self.ranking[0]
    }

    pub fn finds_admissible(&self, s: SchoolId) -> bool {
        self.prefers(Alternative::School(s), Alternative::Outside)
    }

    /// `A(P_i)`: schools ranked above the outside option, best first. This is
    /// also the truncation of the ranking at `s0`.
    pub fn admissible(&self) -> Vec<SchoolId> {
        self.ranking
            .iter()
            .take_while(|a| !a.is_outside())
            .filter_map(|a| a.school())
            .collect()
    }

    /// Replace the owner, keeping the ranking. Used when a report written for
    /// one seat is re-used as another student's report.
    pub fn reowned(&self, owner: StudentId) -> Preference {
        Preference {
            owner,
            ranking: self.ranking.clone(),
            rank_of: self.rank_of.clone(),
        }
    }
}

/// One preference per student, indexed by student.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreferenceProfile {
    prefs: Vec<Preference>,
}

impl PreferenceProfile {
    pub fn new(prefs: Vec<Preference>) -> Result<Self, ModelError> {
        for (i, p) in prefs.iter().enumerate() {
            if p.owner().index() != i {
                return Err(ModelError::ProfileDomainMismatch);
            }
        }
        Ok(PreferenceProfile { prefs })
    }

    /// Construction helper matching `SchoolChoiceContext::from_tables`:
    /// row `i` lists student `i+1`'s ranking, `0` standing for the outside
    /// option and `k > 0` for school `s{k}`.
    pub fn from_tables(n_schools: usize, rankings: &[&[usize]]) -> Result<Self, ModelError> {
        let mut prefs = Vec::new();
        for (i, row) in rankings.iter().enumerate() {
            let ranking = row
                .iter()
                .map(|&label| {
                    if label == 0 {
                        Alternative::Outside
                    } else {
                        Alternative::School(SchoolId::from_index(label - 1))
                    }
                })
                .collect();
            prefs.push(Preference::new(StudentId::from_index(i), ranking, n_schools)?);
        }
        PreferenceProfile::new(prefs)
    }

    pub fn len(&self) -> usize {
        self.prefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefs.is_empty()
    }

    pub fn get(&self, i: StudentId) -> &Preference {
        &self.prefs[i.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Preference> {
        self.prefs.iter()
    }

    /// Profile with student `i`'s preference replaced; everyone else as in
    /// `self`.
    pub fn replaced(&self, pref: Preference) -> PreferenceProfile {
        let mut prefs = self.prefs.clone();
        let idx = pref.owner().index();
        prefs[idx] = pref;
        PreferenceProfile { prefs }
    }

    pub fn replaced_many(&self, reports: &[Preference]) -> PreferenceProfile {
        let mut prefs = self.prefs.clone();
        for r in reports {
            prefs[r.owner().index()] = r.clone();
        }
        PreferenceProfile { prefs }
    }
}

/// A capacity-respecting assignment of every student to a school or the
/// outside option.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Matching {
    assignment: Vec<Alternative>,
}

impl Matching {
    pub fn new(assignment: Vec<Alternative>) -> Self {
        Matching { assignment }
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// `μ(i)`
    pub fn of(&self, i: StudentId) -> Alternative {
        self.assignment[i.index()]
    }

    pub fn assignment(&self) -> &[Alternative] {
        &self.assignment
    }

    /// `μ(s)` (also defined for the outside option), ascending student index.
    pub fn assigned_to(&self, a: Alternative) -> Vec<StudentId> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == a)
            .map(|(i, _)| StudentId::from_index(i))
            .collect()
    }

    pub fn count_assigned_to(&self, a: Alternative) -> usize {
        self.assignment.iter().filter(|&&b| b == a).count()
    }

    /// Schoolmates of `i`: students other than `i` with the same assignment
    /// (including the unassigned set when `i` is unassigned).
    pub fn colleagues(&self, i: StudentId) -> Vec<StudentId> {
        let mine = self.of(i);
        self.assigned_to(mine)
            .into_iter()
            .filter(|&j| j != i)
            .collect()
    }

    pub fn check_capacities(&self, ctx: &SchoolChoiceContext) -> Result<(), ModelError> {
        for s in ctx.schools() {
            if self.count_assigned_to(Alternative::School(s)) > ctx.capacity(s) {
                return Err(ModelError::CapacityViolation(ctx.school_name(s).to_string()));
            }
        }
        Ok(())
    }

    /// Render as the interchange form `((1,s1),(2,s0),...)` for reports.
    pub fn display(&self, ctx: &SchoolChoiceContext) -> String {
        let cells: Vec<String> = self
            .assignment
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                format!(
                    "({},{})",
                    ctx.student_name(StudentId::from_index(i)),
                    ctx.alternative_name(a)
                )
            })
            .collect();
        format!("({})", cells.join(","))
    }
}

/// Matching construction helper matching `from_tables` labelling: entry `i`
/// is student `i+1`'s school label (`0` = outside).
pub fn matching_from_labels(labels: &[usize]) -> Matching {
    Matching::new(
        labels
            .iter()
            .map(|&l| {
                if l == 0 {
                    Alternative::Outside
                } else {
                    Alternative::School(SchoolId::from_index(l - 1))
                }
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_ctx() -> SchoolChoiceContext {
        SchoolChoiceContext::from_tables(4, &[2, 1], &[&[1, 2, 3, 4], &[4, 3, 2, 1]]).unwrap()
    }

    #[test]
    fn prefers_reads_ranking() {
        // P_1: s2, s1, s0
        let p = PreferenceProfile::from_tables(2, &[&[2, 1, 0]]).unwrap();
        let pref = p.get(StudentId(0));
        let s1 = Alternative::School(SchoolId(0));
        let s2 = Alternative::School(SchoolId(1));
        assert!(pref.prefers(s2, s1));
        assert!(!pref.prefers(s1, s2));
        assert!(pref.weakly_prefers(s1, s1));
        assert!(!pref.prefers(s1, s1));
    }

    #[test]
    fn admissible_is_truncation() {
        let p = PreferenceProfile::from_tables(3, &[&[2, 0, 1, 3]]).unwrap();
        assert_eq!(p.get(StudentId(0)).admissible(), vec![SchoolId(1)]);
    }

    #[test]
    fn non_total_preference_rejected() {
        // omits s0
        let err = Preference::new(
            StudentId(0),
            vec![Alternative::School(SchoolId(0))],
            1,
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::NonTotalPreference { .. }));
    }

    #[test]
    fn restriction_preserves_relative_order() {
        let ctx = small_ctx();
        let sub: BTreeSet<StudentId> = [StudentId(1), StudentId(3)].into_iter().collect();
        let restricted = ctx.restrict_priorities(&sub).unwrap();
        assert_eq!(restricted.n_students(), 2);
        // ≻_s1: 1,2,3,4 restricted to {2,4} keeps 2 before 4
        assert_eq!(restricted.student_name(restricted.priority(SchoolId(0)).ranking()[0]), "2");
        assert_eq!(restricted.student_name(restricted.priority(SchoolId(0)).ranking()[1]), "4");
        // ≻_s2: 4,3,2,1 keeps 4 before 2
        assert_eq!(restricted.student_name(restricted.priority(SchoolId(1)).ranking()[0]), "4");
    }

    #[test]
    fn restriction_to_full_population_is_identity() {
        let ctx = small_ctx();
        let all: BTreeSet<StudentId> = ctx.students().collect();
        assert_eq!(ctx.restrict_priorities(&all).unwrap(), ctx);
    }

    #[test]
    fn restriction_rejects_foreign_students() {
        let ctx = small_ctx();
        let sub: BTreeSet<StudentId> = [StudentId(9)].into_iter().collect();
        assert_eq!(ctx.restrict_priorities(&sub).unwrap_err(), ModelError::NotASubset);
    }

    #[test]
    fn capacity_must_be_positive() {
        let err = SchoolChoiceContext::from_tables(1, &[0], &[&[1]]).unwrap_err();
        assert!(matches!(err, ModelError::CapacityTooSmall(_)));
    }

    #[test]
    fn matching_capacity_check() {
        let ctx = small_ctx();
        let m = matching_from_labels(&[2, 2, 1, 1]);
        assert!(matches!(
            m.check_capacities(&ctx),
            Err(ModelError::CapacityViolation(_))
        ));
        let ok = matching_from_labels(&[1, 2, 1, 0]);
        assert!(ok.check_capacities(&ctx).is_ok());
    }

    #[test]
    fn colleagues_include_the_unassigned_set() {
        let m = matching_from_labels(&[1, 0, 0, 1]);
        assert_eq!(m.colleagues(StudentId(1)), vec![StudentId(2)]);
        assert_eq!(m.colleagues(StudentId(0)), vec![StudentId(3)]);
    }
}
