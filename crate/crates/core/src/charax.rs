//! Variable-population mechanisms and the characterization engine: the six
//! axioms (individual rationality, weak non-wastefulness,
//! population-monotonicity, strategy-proofness, S-WrARP, weak local
//! non-bossiness), derived school choice functions, priority recovery, and
//! the equivalence sweep against priority-based deferred acceptance.
//!
//! A variable-population mechanism fixes the schools and capacities and maps
//! every non-empty subpopulation plus preference profile to a matching on
//! that subpopulation. Its output must depend only on the members' truncated
//! rankings; the engine verifies this before trusting memoized evaluations.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::choicefn::ChoiceFunction;
use crate::mechanisms::da_student_among;
use crate::model::{
    Alternative, Matching, Preference, PreferenceProfile, PriorityOrder, SchoolChoiceContext,
    SchoolId, StudentId,
};
use crate::orders::{pack_matching, packed_assigned_mask, packed_of, ProfileSpace};

/// Non-empty subset of the student universe, as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Population(pub u32);

impl Population {
    pub fn full(n: usize) -> Population {
        Population(((1u64 << n) - 1) as u32)
    }

    pub fn from_members(members: &[StudentId]) -> Population {
        Population(crate::orders::mask_of_students(members))
    }

    pub fn contains(self, i: StudentId) -> bool {
        self.0 & (1 << i.index()) != 0
    }

    pub fn members(self) -> Vec<StudentId> {
        crate::orders::mask_members(self.0)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: Population) -> bool {
        self.0 & !other.0 == 0
    }

    /// All non-empty subpopulations of a universe of size `n`.
    pub fn all(n: usize) -> Vec<Population> {
        (1u32..(1 << n)).map(Population).collect()
    }
}

/// A mechanism over a fixed `[N̄, S, q]` environment, defined for every
/// subpopulation and profile.
pub trait VariablePopulationMechanism {
    fn name(&self) -> &str;
    /// The environment: universe of students, schools, capacities (and any
    /// priorities the rule happens to use).
    fn universe(&self) -> &SchoolChoiceContext;
    /// Matching on the members of `pop`; entries of non-members are
    /// reported as the outside option and carry no meaning.
    fn assign(&self, pop: Population, profile: &PreferenceProfile) -> Matching;
}

/// Priority-based deferred acceptance `DA^≻`: run student-proposing DA on
/// the induced priorities of the present students.
pub struct DaPriority {
    ctx: SchoolChoiceContext,
}

impl DaPriority {
    pub fn new(ctx: SchoolChoiceContext) -> Self {
        DaPriority { ctx }
    }
}

impl VariablePopulationMechanism for DaPriority {
    fn name(&self) -> &str {
        "da-priority"
    }
    fn universe(&self) -> &SchoolChoiceContext {
        &self.ctx
    }
    fn assign(&self, pop: Population, profile: &PreferenceProfile) -> Matching {
        da_student_among(&self.ctx, profile, &pop.members())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, PartialOrd, Ord)]
pub enum VpAxiom {
    IndividualRationality,
    WeakNonWastefulness,
    PopulationMonotonicity,
    StrategyProofness,
    SWrarp,
    WeakLocalNonBossiness,
}

impl VpAxiom {
    pub const ALL: [VpAxiom; 6] = [
        VpAxiom::IndividualRationality,
        VpAxiom::WeakNonWastefulness,
        VpAxiom::PopulationMonotonicity,
        VpAxiom::StrategyProofness,
        VpAxiom::SWrarp,
        VpAxiom::WeakLocalNonBossiness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VpAxiom::IndividualRationality => "individual-rationality",
            VpAxiom::WeakNonWastefulness => "weak-non-wastefulness",
            VpAxiom::PopulationMonotonicity => "population-monotonicity",
            VpAxiom::StrategyProofness => "strategy-proofness",
            VpAxiom::SWrarp => "s-wrarp",
            VpAxiom::WeakLocalNonBossiness => "weak-local-non-bossiness",
        }
    }
}

/// Clause data for a violated variable-population axiom; every variant
/// stores enough to re-run the mechanism and re-check the clause.
#[derive(Clone, Debug)]
pub enum VpWitness {
    NotIndividuallyRational {
        population: Population,
        profile: PreferenceProfile,
        student: StudentId,
    },
    Wasteful {
        population: Population,
        profile: PreferenceProfile,
        student: StudentId,
        school: SchoolId,
    },
    NotPopulationMonotonic {
        population: Population,
        larger_population: Population,
        profile: PreferenceProfile,
        student: StudentId,
    },
    Manipulable {
        population: Population,
        profile: PreferenceProfile,
        report: Preference,
        student: StudentId,
    },
    SWrarpViolation {
        school: SchoolId,
        set_a: Population,
        set_b: Population,
        kept: StudentId,
        entrant: StudentId,
    },
    WeaklyLocallyBossy {
        population: Population,
        profile: PreferenceProfile,
        report: Preference,
        student: StudentId,
        school: SchoolId,
    },
}

#[derive(Clone, Debug)]
pub struct AxiomVerdict {
    pub axiom: VpAxiom,
    pub holds: bool,
    pub witness: Option<VpWitness>,
}

impl AxiomVerdict {
    fn holds(axiom: VpAxiom) -> Self {
        AxiomVerdict {
            axiom,
            holds: true,
            witness: None,
        }
    }

    fn violated(axiom: VpAxiom, witness: VpWitness) -> Self {
        AxiomVerdict {
            axiom,
            holds: false,
            witness: Some(witness),
        }
    }
}

/// Re-run the mechanism on a stored witness and confirm the clause.
pub fn replay_witness(mech: &dyn VariablePopulationMechanism, witness: &VpWitness) -> bool {
    let ctx = mech.universe();
    match witness {
        VpWitness::NotIndividuallyRational {
            population,
            profile,
            student,
        } => {
            let m = mech.assign(*population, profile);
            !profile
                .get(*student)
                .weakly_prefers(m.of(*student), Alternative::Outside)
        }
        VpWitness::Wasteful {
            population,
            profile,
            student,
            school,
        } => {
            let m = mech.assign(*population, profile);
            let seat = Alternative::School(*school);
            m.of(*student) == Alternative::Outside
                && profile.get(*student).prefers(seat, Alternative::Outside)
                && members_at(&m, seat, *population).len() < ctx.capacity(*school)
        }
        VpWitness::NotPopulationMonotonic {
            population,
            larger_population,
            profile,
            student,
        } => {
            let small = mech.assign(*population, profile);
            let large = mech.assign(*larger_population, profile);
            !profile
                .get(*student)
                .weakly_prefers(small.of(*student), large.of(*student))
        }
        VpWitness::Manipulable {
            population,
            profile,
            report,
            student,
        } => {
            let truthful = mech.assign(*population, profile);
            let deviant = mech.assign(*population, &profile.replaced(report.clone()));
            profile
                .get(*student)
                .prefers(deviant.of(*student), truthful.of(*student))
        }
        VpWitness::SWrarpViolation {
            school,
            set_a,
            set_b,
            kept,
            entrant,
        } => {
            let pa = single_school_profile(ctx, *school);
            let a = mech.assign(*set_a, &pa);
            let b = mech.assign(*set_b, &pa);
            let seat = Alternative::School(*school);
            a.of(*kept) == seat
                && b.of(*entrant) == seat
                && a.of(*entrant) != seat
                && b.of(*kept) != seat
        }
        VpWitness::WeaklyLocallyBossy {
            population,
            profile,
            report,
            student,
            school,
        } => {
            let truthful = mech.assign(*population, profile);
            let deviant = mech.assign(*population, &profile.replaced(report.clone()));
            let seat = Alternative::School(*school);
            truthful.of(*student) == seat
                && deviant.of(*student) == seat
                && members_at(&truthful, seat, *population) != members_at(&deviant, seat, *population)
        }
    }
}

fn members_at(m: &Matching, seat: Alternative, pop: Population) -> Vec<StudentId> {
    m.assigned_to(seat)
        .into_iter()
        .filter(|&i| pop.contains(i))
        .collect()
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CharaxError {
    #[error("universe of {0} students is beyond the exhaustive engine (limit 8)")]
    UniverseTooLarge(usize),
    #[error("exhaustive scope would need {estimate} evaluations, over the budget of {budget}")]
    BudgetExceeded { estimate: u128, budget: u64 },
    #[error(
        "mechanism output depends on more than the truncated rankings; \
         derived choice functions would be ill-defined"
    )]
    TruncationDependent,
}

#[derive(Clone, Debug)]
pub enum VpScope {
    Exhaustive,
    Sampled { per_population: u64, seed: u64 },
}

impl VpScope {
    pub fn exhaustive() -> Self {
        VpScope::Exhaustive
    }
}

const VP_BUDGET: u64 = 2_000_000_000;

/// Shared evaluation state: outcomes are memoized per population and
/// truncation class of the members' rankings.
pub struct VpEngine<'a> {
    mech: &'a dyn VariablePopulationMechanism,
    space: ProfileSpace,
    class_of_order: Vec<usize>,
    n_classes: u64,
    memo: HashMap<(u32, u64), u32>,
}

impl<'a> VpEngine<'a> {
    pub fn new(mech: &'a dyn VariablePopulationMechanism) -> Result<Self, CharaxError> {
        let ctx = mech.universe();
        if ctx.n_students() > 8 {
            return Err(CharaxError::UniverseTooLarge(ctx.n_students()));
        }
        let space = ProfileSpace::new(ctx.n_students(), ctx.n_schools());
        let mut classes: BTreeMap<Vec<Alternative>, usize> = BTreeMap::new();
        let mut class_of_order = Vec::with_capacity(space.orders().len());
        for idx in 0..space.orders().len() {
            let order = space.orders().order(idx);
            let truncation: Vec<Alternative> =
                order.iter().copied().take_while(|a| !a.is_outside()).collect();
            let next = classes.len();
            let class = *classes.entry(truncation).or_insert(next);
            class_of_order.push(class);
        }
        Ok(VpEngine {
            mech,
            space,
            n_classes: classes.len() as u64,
            class_of_order,
            memo: HashMap::new(),
        })
    }

    pub fn space(&self) -> &ProfileSpace {
        &self.space
    }

    fn ctx(&self) -> &SchoolChoiceContext {
        self.mech.universe()
    }

    fn class_key(&self, pop: Population, code: u64) -> u64 {
        let mut key = 0u64;
        for i in (0..self.ctx().n_students()).rev() {
            let id = StudentId::from_index(i);
            let digit = if pop.contains(id) {
                self.class_of_order[self.space.order_index(code, id)] as u64
            } else {
                0
            };
            key = key * self.n_classes + digit;
        }
        key
    }

    pub fn outcome(&mut self, pop: Population, code: u64) -> u32 {
        let key = (pop.0, self.class_key(pop, code));
        if let Some(&packed) = self.memo.get(&key) {
            return packed;
        }
        let profile = self.space.profile(code);
        let m = self.mech.assign(pop, &profile);
        let packed = pack_matching(&m, self.ctx().n_schools());
        self.memo.insert(key, packed);
        packed
    }

    fn profile_codes(&self, scope: &VpScope, salt: u64) -> Vec<u64> {
        match scope {
            VpScope::Exhaustive => (0..self.space.count()).collect(),
            VpScope::Sampled { per_population, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ salt);
                (0..*per_population)
                    .map(|_| rng.random_range(0..self.space.count()))
                    .collect()
            }
        }
    }

    fn guard(&self, scope: &VpScope) -> Result<(), CharaxError> {
        let per_pop = match scope {
            VpScope::Exhaustive => self.space.count() as u128,
            VpScope::Sampled { per_population, .. } => *per_population as u128,
        };
        let n = self.ctx().n_students() as u128;
        let estimate = (1u128 << self.ctx().n_students())
            * per_pop
            * n
            * self.space.radix() as u128;
        if estimate > VP_BUDGET as u128 {
            return Err(CharaxError::BudgetExceeded {
                estimate,
                budget: VP_BUDGET,
            });
        }
        Ok(())
    }
}

/// The canonical single-admissible-school report: `s` first, then the
/// outside option, then the remaining schools in index order.
pub fn single_school_report(owner: StudentId, school: SchoolId, n_schools: usize) -> Preference {
    let mut ranking = vec![Alternative::School(school), Alternative::Outside];
    for k in 0..n_schools {
        if k != school.index() {
            ranking.push(Alternative::School(SchoolId::from_index(k)));
        }
    }
    Preference::new(owner, ranking, n_schools).expect("constructed order is total")
}

/// Profile where every student in the universe reports `school` as her only
/// admissible school.
pub fn single_school_profile(ctx: &SchoolChoiceContext, school: SchoolId) -> PreferenceProfile {
    PreferenceProfile::new(
        ctx.students()
            .map(|i| single_school_report(i, school, ctx.n_schools()))
            .collect(),
    )
    .expect("owners aligned")
}

/// Output depends only on `[N, S, q, (P^t_i)_{i∈N}]`: permuting inadmissible
/// tails or changing absent students' preferences must not move the
/// matching. Checked by comparing every profile against its class
/// representative.
pub fn check_truncation_invariance(
    mech: &dyn VariablePopulationMechanism,
    scope: &VpScope,
) -> Result<bool, CharaxError> {
    let engine = VpEngine::new(mech)?;
    engine.guard(scope)?;
    let ctx = mech.universe();
    let mut reps: HashMap<(u32, u64), u32> = HashMap::new();
    for pop in Population::all(ctx.n_students()) {
        for code in engine.profile_codes(scope, pop.0 as u64) {
            let profile = engine.space.profile(code);
            let packed = pack_matching(&mech.assign(pop, &profile), ctx.n_schools());
            let key = (pop.0, engine.class_key(pop, code));
            match reps.get(&key) {
                Some(&seen) if seen != packed => return Ok(false),
                Some(_) => {}
                None => {
                    reps.insert(key, packed);
                }
            }
        }
    }
    Ok(true)
}

pub fn check_individually_rational(
    mech: &dyn VariablePopulationMechanism,
    scope: &VpScope,
) -> Result<AxiomVerdict, CharaxError> {
    let mut engine = VpEngine::new(mech)?;
    engine.guard(scope)?;
    let ctx = mech.universe();
    let n_schools = ctx.n_schools();
    for pop in Population::all(ctx.n_students()) {
        for code in engine.profile_codes(scope, pop.0 as u64) {
            let packed = engine.outcome(pop, code);
            let profile = engine.space.profile(code);
            for i in pop.members() {
                let mine = packed_of(packed, i, n_schools);
                if !profile.get(i).weakly_prefers(mine, Alternative::Outside) {
                    return Ok(AxiomVerdict::violated(
                        VpAxiom::IndividualRationality,
                        VpWitness::NotIndividuallyRational {
                            population: pop,
                            profile,
                            student: i,
                        },
                    ));
                }
            }
        }
    }
    Ok(AxiomVerdict::holds(VpAxiom::IndividualRationality))
}

pub fn check_weak_non_wasteful(
    mech: &dyn VariablePopulationMechanism,
    scope: &VpScope,
) -> Result<AxiomVerdict, CharaxError> {
    let mut engine = VpEngine::new(mech)?;
    engine.guard(scope)?;
    let ctx = mech.universe();
    let n = ctx.n_students();
    let n_schools = ctx.n_schools();
    for pop in Population::all(n) {
        for code in engine.profile_codes(scope, pop.0 as u64) {
            let packed = engine.outcome(pop, code);
            let profile = engine.space.profile(code);
            for i in pop.members() {
                if packed_of(packed, i, n_schools) != Alternative::Outside {
                    continue;
                }
                for s in ctx.schools() {
                    let seat = Alternative::School(s);
                    if !profile.get(i).prefers(seat, Alternative::Outside) {
                        continue;
                    }
                    let filled =
                        (packed_assigned_mask(packed, seat, n, n_schools) & pop.0).count_ones();
                    if (filled as usize) < ctx.capacity(s) {
                        return Ok(AxiomVerdict::violated(
                            VpAxiom::WeakNonWastefulness,
                            VpWitness::Wasteful {
                                population: pop,
                                profile,
                                student: i,
                                school: s,
                            },
                        ));
                    }
                }
            }
        }
    }
    Ok(AxiomVerdict::holds(VpAxiom::WeakNonWastefulness))
}

pub fn check_population_monotonic(
    mech: &dyn VariablePopulationMechanism,
    scope: &VpScope,
) -> Result<AxiomVerdict, CharaxError> {
    let mut engine = VpEngine::new(mech)?;
    engine.guard(scope)?;
    let ctx = mech.universe();
    let n_schools = ctx.n_schools();
    for larger in Population::all(ctx.n_students()) {
        for code in engine.profile_codes(scope, larger.0 as u64) {
            let big = engine.outcome(larger, code);
            let profile = engine.space.profile(code);
            // proper non-empty subsets of `larger`
            let mut sub = (larger.0 - 1) & larger.0;
            while sub != 0 {
                let pop = Population(sub);
                let small = engine.outcome(pop, code);
                for i in pop.members() {
                    let in_small = packed_of(small, i, n_schools);
                    let in_big = packed_of(big, i, n_schools);
                    if !profile.get(i).weakly_prefers(in_small, in_big) {
                        return Ok(AxiomVerdict::violated(
                            VpAxiom::PopulationMonotonicity,
                            VpWitness::NotPopulationMonotonic {
                                population: pop,
                                larger_population: larger,
                                profile,
                                student: i,
                            },
                        ));
                    }
                }
                sub = (sub - 1) & larger.0;
            }
        }
    }
    Ok(AxiomVerdict::holds(VpAxiom::PopulationMonotonicity))
}

pub fn check_strategy_proof_vp(
    mech: &dyn VariablePopulationMechanism,
    scope: &VpScope,
) -> Result<AxiomVerdict, CharaxError> {
    let mut engine = VpEngine::new(mech)?;
    engine.guard(scope)?;
    let ctx = mech.universe();
    let n_schools = ctx.n_schools();
    let radix = engine.space.radix() as usize;
    for pop in Population::all(ctx.n_students()) {
        for code in engine.profile_codes(scope, pop.0 as u64) {
            let truthful = engine.outcome(pop, code);
            let profile = engine.space.profile(code);
            for i in pop.members() {
                let own = packed_of(truthful, i, n_schools);
                let truth_idx = engine.space.order_index(code, i);
                for idx in 0..radix {
                    if idx == truth_idx {
                        continue;
                    }
                    let dev_code = engine.space.with_order(code, i, idx);
                    let deviant = engine.outcome(pop, dev_code);
                    if profile.get(i).prefers(packed_of(deviant, i, n_schools), own) {
                        let report = engine.space.orders().preference(i, idx);
                        return Ok(AxiomVerdict::violated(
                            VpAxiom::StrategyProofness,
                            VpWitness::Manipulable {
                                population: pop,
                                profile,
                                report,
                                student: i,
                            },
                        ));
                    }
                }
            }
        }
    }
    Ok(AxiomVerdict::holds(VpAxiom::StrategyProofness))
}

pub fn check_weak_local_non_bossy(
    mech: &dyn VariablePopulationMechanism,
    scope: &VpScope,
) -> Result<AxiomVerdict, CharaxError> {
    let mut engine = VpEngine::new(mech)?;
    engine.guard(scope)?;
    let ctx = mech.universe();
    let n = ctx.n_students();
    let n_schools = ctx.n_schools();
    let radix = engine.space.radix() as usize;
    for pop in Population::all(n) {
        for code in engine.profile_codes(scope, pop.0 as u64) {
            let truthful = engine.outcome(pop, code);
            let profile = engine.space.profile(code);
            for i in pop.members() {
                let own = packed_of(truthful, i, n_schools);
                let Some(school) = own.school() else {
                    continue; // the clause ranges over real schools only
                };
                let truth_idx = engine.space.order_index(code, i);
                for idx in 0..radix {
                    if idx == truth_idx {
                        continue;
                    }
                    let dev_code = engine.space.with_order(code, i, idx);
                    let deviant = engine.outcome(pop, dev_code);
                    if packed_of(deviant, i, n_schools) == own
                        && packed_assigned_mask(truthful, own, n, n_schools) & pop.0
                            != packed_assigned_mask(deviant, own, n, n_schools) & pop.0
                    {
                        let report = engine.space.orders().preference(i, idx);
                        return Ok(AxiomVerdict::violated(
                            VpAxiom::WeakLocalNonBossiness,
                            VpWitness::WeaklyLocallyBossy {
                                population: pop,
                                profile,
                                report,
                                student: i,
                                school,
                            },
                        ));
                    }
                }
            }
        }
    }
    Ok(AxiomVerdict::holds(VpAxiom::WeakLocalNonBossiness))
}

/// The school choice function a mechanism reveals at `s`:
/// `C(N) = Φ_s(N, (P^s, …, P^s))`. Well-defined only for
/// truncation-invariant mechanisms; a second representative profile with the
/// inadmissible tails reversed guards against silent dependence.
pub fn derive_choice_function(
    mech: &dyn VariablePopulationMechanism,
    school: SchoolId,
) -> Result<ChoiceFunction, CharaxError> {
    let ctx = mech.universe();
    let n = ctx.n_students();
    if n > 8 {
        return Err(CharaxError::UniverseTooLarge(n));
    }
    let canonical = single_school_profile(ctx, school);
    let reversed = PreferenceProfile::new(
        ctx.students()
            .map(|i| {
                let mut ranking = vec![Alternative::School(school), Alternative::Outside];
                for k in (0..ctx.n_schools()).rev() {
                    if k != school.index() {
                        ranking.push(Alternative::School(SchoolId::from_index(k)));
                    }
                }
                Preference::new(i, ranking, ctx.n_schools()).expect("total order")
            })
            .collect(),
    )
    .expect("owners aligned");
    let seat = Alternative::School(school);
    let mut table = BTreeMap::new();
    table.insert(0u32, 0u32);
    for pop in Population::all(n) {
        let chosen = members_at(&mech.assign(pop, &canonical), seat, pop);
        let again = members_at(&mech.assign(pop, &reversed), seat, pop);
        if chosen != again {
            return Err(CharaxError::TruncationDependent);
        }
        table.insert(pop.0, crate::orders::mask_of_students(&chosen));
    }
    ChoiceFunction::from_table(school, n, &table).map_err(|_| CharaxError::TruncationDependent)
}

/// `(q+1)`-WrARP for a choice function: over every pair of candidate sets of
/// size `q+1` sharing `i` and `j`, if `i` is chosen from the first and `j`
/// enters at the second while `i` drops out, the pair witnesses a violation.
pub fn check_wrarp_q1(cf: &ChoiceFunction, q: usize) -> Result<(), VpWitness> {
    let n = cf.n_students();
    if q + 1 > n {
        return Ok(());
    }
    let sets = crate::orders::subsets_of_size(n, q + 1, q + 1);
    for &a in &sets {
        let chosen_a = cf.choose(a);
        for &b in &sets {
            if a == b {
                continue;
            }
            let chosen_b = cf.choose(b);
            let common = a & b;
            let dropped = common & chosen_a & !chosen_b;
            let entered = common & chosen_b & !chosen_a;
            if dropped != 0 && entered != 0 {
                return Err(VpWitness::SWrarpViolation {
                    school: cf.school(),
                    set_a: Population(a),
                    set_b: Population(b),
                    kept: StudentId::from_index(dropped.trailing_zeros() as usize),
                    entrant: StudentId::from_index(entered.trailing_zeros() as usize),
                });
            }
        }
    }
    Ok(())
}

/// S-WrARP of a mechanism: the `(q_s+1)`-WrARP of every derived choice
/// function.
pub fn check_swrarp(mech: &dyn VariablePopulationMechanism) -> Result<AxiomVerdict, CharaxError> {
    let ctx = mech.universe();
    for s in ctx.schools() {
        let cf = derive_choice_function(mech, s)?;
        if let Err(witness) = check_wrarp_q1(&cf, ctx.capacity(s)) {
            return Ok(AxiomVerdict::violated(VpAxiom::SWrarp, witness));
        }
    }
    Ok(AxiomVerdict::holds(VpAxiom::SWrarp))
}

/// Result of trying to rationalize a choice function by a priority order
/// with quota `q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RecoveredPriority {
    Responsive {
        ranking: Vec<StudentId>,
        /// The quota never binds (`|N̄| ≤ q`), so any order works; index
        /// order is returned.
        unconstrained: bool,
    },
    NotResponsive {
        /// A candidate set on which no priority order reproduces the choice.
        witness: Vec<StudentId>,
    },
}

/// Recover a priority order from a choice table, if one rationalizes it.
///
/// Students are scored by how many candidate sets select them; for a
/// responsive rule that score is strictly decreasing below the top-`q`
/// block, whose internal order never binds and is fixed by index. The
/// candidate is then verified against every subset.
pub fn recover_priority(cf: &ChoiceFunction, q: usize) -> RecoveredPriority {
    let n = cf.n_students();
    let mut score = vec![0u64; n];
    for set in 0u32..(1 << n) {
        let chosen = cf.choose(set);
        for i in crate::orders::mask_members(chosen) {
            score[i.index()] += 1;
        }
    }
    let mut ranking: Vec<StudentId> = (0..n).map(StudentId::from_index).collect();
    ranking.sort_by_key(|i| (u64::MAX - score[i.index()], i.index()));
    let order = PriorityOrder::new(cf.school(), ranking.clone(), n).expect("permutation");
    let candidate = ChoiceFunction::responsive(cf.school(), &order, q);
    for set in 0u32..(1 << n) {
        if candidate.choose(set) != cf.choose(set) {
            return RecoveredPriority::NotResponsive {
                witness: crate::orders::mask_members(set),
            };
        }
    }
    RecoveredPriority::Responsive {
        ranking,
        unconstrained: n <= q,
    }
}

#[derive(Clone, Debug)]
pub struct CharacterizationReport {
    pub truncation_invariant: bool,
    /// The six verdicts in canonical order (IR, WNW, PM, SP, S-WrARP, WLNB).
    pub axioms: Vec<AxiomVerdict>,
    /// Recovered priority order per school, when all axioms hold.
    pub recovered: Option<Vec<(SchoolId, Vec<StudentId>)>>,
    /// Whether the mechanism equals priority DA under the recovered orders,
    /// over the whole scope. `None` when recovery did not run.
    pub equivalent: Option<bool>,
    /// First disagreement, which would signal an axiom-checker escape.
    pub mismatch: Option<(Population, PreferenceProfile)>,
}

impl CharacterizationReport {
    pub fn failed_axioms(&self) -> Vec<VpAxiom> {
        self.axioms
            .iter()
            .filter(|v| !v.holds)
            .map(|v| v.axiom)
            .collect()
    }

    pub fn all_hold(&self) -> bool {
        self.truncation_invariant && self.axioms.iter().all(|v| v.holds)
    }
}

/// Run the six axiom checks; on success recover a priority profile from the
/// derived choice functions and compare the mechanism with priority DA on
/// every population and profile in scope.
pub fn verify_characterization(
    mech: &dyn VariablePopulationMechanism,
    scope: &VpScope,
) -> Result<CharacterizationReport, CharaxError> {
    let truncation_invariant = check_truncation_invariance(mech, scope)?;
    let axioms = vec![
        check_individually_rational(mech, scope)?,
        check_weak_non_wasteful(mech, scope)?,
        check_population_monotonic(mech, scope)?,
        check_strategy_proof_vp(mech, scope)?,
        check_swrarp(mech)?,
        check_weak_local_non_bossy(mech, scope)?,
    ];
    let mut report = CharacterizationReport {
        truncation_invariant,
        axioms,
        recovered: None,
        equivalent: None,
        mismatch: None,
    };
    if !report.all_hold() {
        return Ok(report);
    }

    let ctx = mech.universe();
    let mut priorities = Vec::new();
    let mut recovered = Vec::new();
    for s in ctx.schools() {
        let cf = derive_choice_function(mech, s)?;
        match recover_priority(&cf, ctx.capacity(s)) {
            RecoveredPriority::Responsive { ranking, .. } => {
                priorities.push(
                    PriorityOrder::new(s, ranking.clone(), ctx.n_students())
                        .expect("permutation"),
                );
                recovered.push((s, ranking));
            }
            RecoveredPriority::NotResponsive { .. } => {
                // the axioms guarantee responsiveness; a failure here means
                // a checker escaped and the equivalence sweep must not run
                report.equivalent = Some(false);
                return Ok(report);
            }
        }
    }
    let da_ctx = SchoolChoiceContext::new(
        ctx.students().map(|i| ctx.student_name(i).to_string()).collect(),
        ctx.schools().map(|s| ctx.school_name(s).to_string()).collect(),
        priorities,
        ctx.capacities().to_vec(),
    )
    .expect("recovered environment is well-formed");
    let da = DaPriority::new(da_ctx);

    let mut engine = VpEngine::new(mech)?;
    let mut da_engine = VpEngine::new(&da)?;
    for pop in Population::all(ctx.n_students()) {
        for code in engine.profile_codes(scope, pop.0 as u64) {
            let ours = engine.outcome(pop, code) & pop_mask_packed(pop, ctx.n_schools());
            let theirs = da_engine.outcome(pop, code) & pop_mask_packed(pop, ctx.n_schools());
            if ours != theirs {
                report.equivalent = Some(false);
                report.mismatch = Some((pop, engine.space.profile(code)));
                report.recovered = Some(recovered);
                return Ok(report);
            }
        }
    }
    report.recovered = Some(recovered);
    report.equivalent = Some(true);
    Ok(report)
}

/// Mask keeping only the packed nibbles of population members.
fn pop_mask_packed(pop: Population, _n_schools: usize) -> u32 {
    let mut mask = 0u32;
    for i in pop.members() {
        mask |= 0xF << (4 * i.index());
    }
    mask
}

/// One Ergin-cycle: `i ≻_s j ≻_s k ≻_{s'} i` with disjoint top sets filling
/// the remaining seats.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErginCycle {
    pub school: SchoolId,
    pub other_school: SchoolId,
    pub i: StudentId,
    pub j: StudentId,
    pub k: StudentId,
    pub set_at_school: Vec<StudentId>,
    pub set_at_other: Vec<StudentId>,
}

/// Exhaustive Ergin-cycle scan over a context. Empty result means the
/// priority profile is acyclic.
pub fn detect_ergin_cycles(ctx: &SchoolChoiceContext) -> Vec<ErginCycle> {
    let mut cycles = Vec::new();
    for s in ctx.schools() {
        for s2 in ctx.schools() {
            if s == s2 {
                continue;
            }
            for i in ctx.students() {
                for j in ctx.students() {
                    for k in ctx.students() {
                        if i == j || j == k || i == k {
                            continue;
                        }
                        if !(ctx.priority(s).higher(i, j)
                            && ctx.priority(s).higher(j, k)
                            && ctx.priority(s2).higher(k, i))
                        {
                            continue;
                        }
                        let trio = [i, j, k];
                        let above_j: u32 = crate::orders::mask_of_students(
                            &ctx.students()
                                .filter(|&m| !trio.contains(&m) && ctx.priority(s).higher(m, j))
                                .collect::<Vec<_>>(),
                        );
                        let above_i: u32 = crate::orders::mask_of_students(
                            &ctx.students()
                                .filter(|&m| !trio.contains(&m) && ctx.priority(s2).higher(m, i))
                                .collect::<Vec<_>>(),
                        );
                        let need_s = ctx.capacity(s) - 1;
                        let need_s2 = ctx.capacity(s2) - 1;
                        let found = crate::orders::subsets_of_pool(above_j, need_s, need_s)
                            .into_iter()
                            .find_map(|ns| {
                                crate::orders::subsets_of_pool(above_i & !ns, need_s2, need_s2)
                                    .into_iter()
                                    .next()
                                    .map(|ns2| (ns, ns2))
                            });
                        if let Some((ns, ns2)) = found {
                            cycles.push(ErginCycle {
                                school: s,
                                other_school: s2,
                                i,
                                j,
                                k,
                                set_at_school: crate::orders::mask_members(ns),
                                set_at_other: crate::orders::mask_members(ns2),
                            });
                        }
                    }
                }
            }
        }
    }
    cycles
}

pub fn is_ergin_acyclic(ctx: &SchoolChoiceContext) -> bool {
    detect_ergin_cycles(ctx).is_empty()
}
