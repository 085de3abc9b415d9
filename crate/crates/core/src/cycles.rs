//! Improvement graphs, blocking sets, edge replacement, and cycle
//! extraction: the constructive machinery behind the local non-bossiness of
//! deferred acceptance.
//!
//! Given two matchings `μ` (baseline) and `μ'` (target), `I` is the set of
//! students strictly preferring `μ'`. The graph `G` has as nodes the
//! students sitting, under `μ`, at alternatives whose assignment changes,
//! and an edge `[i, j]` whenever `i ∈ I` and `μ(j) = μ'(i)`. Edge
//! replacement reroutes edges through the highest-priority in-graph blocker,
//! producing a multigraph whose cycles are improving and blocked only from
//! outside the node set.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{
    Alternative, Matching, Preference, PreferenceProfile, SchoolChoiceContext, StudentId,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CycleError {
    #[error("the two matchings are identical")]
    IdenticalMatchings,
    #[error("edge [{0:?}, {1:?}] is not in the graph")]
    MissingEdge(StudentId, StudentId),
    #[error("a node has no incoming edge; the graph does not come from a displacement chain")]
    MissingInEdge(StudentId),
    #[error("the cycle is not improving on the baseline matching")]
    NotImproving,
}

/// Directed multigraph over students, together with the matchings that
/// induced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImprovementGraph {
    nodes: BTreeSet<StudentId>,
    edges: Vec<(StudentId, StudentId)>,
    baseline: Matching,
    target: Matching,
}

impl ImprovementGraph {
    pub fn nodes(&self) -> &BTreeSet<StudentId> {
        &self.nodes
    }

    /// Edge multiset, sorted.
    pub fn edges(&self) -> &[(StudentId, StudentId)] {
        &self.edges
    }

    pub fn baseline(&self) -> &Matching {
        &self.baseline
    }

    pub fn target(&self) -> &Matching {
        &self.target
    }

    pub fn has_edge(&self, i: StudentId, j: StudentId) -> bool {
        self.edges.contains(&(i, j))
    }
}

/// An ordered tuple of distinct students, read cyclically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cycle(Vec<StudentId>);

impl Cycle {
    pub fn new(members: Vec<StudentId>) -> Self {
        assert!(!members.is_empty());
        let set: BTreeSet<_> = members.iter().collect();
        assert_eq!(set.len(), members.len(), "cycle members must be distinct");
        Cycle(members)
    }

    pub fn members(&self) -> &[StudentId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Consecutive pairs `[i_l, i_{l+1}]`, wrapping around.
    pub fn edges(&self) -> impl Iterator<Item = (StudentId, StudentId)> + '_ {
        (0..self.0.len()).map(move |l| (self.0[l], self.0[(l + 1) % self.0.len()]))
    }

    /// Rotate so the smallest member comes first; cycles equal up to
    /// rotation normalize to the same representative.
    pub fn normalized(&self) -> Cycle {
        let min_pos = self
            .0
            .iter()
            .enumerate()
            .min_by_key(|(_, &i)| i)
            .map(|(p, _)| p)
            .unwrap();
        let mut members = self.0.clone();
        members.rotate_left(min_pos);
        Cycle(members)
    }

    pub fn reversed(&self) -> Cycle {
        let mut members = self.0.clone();
        members.reverse();
        Cycle(members)
    }
}

/// Students strictly preferring the target to the baseline.
pub fn improvers(mu: &Matching, mu_prime: &Matching, profile: &PreferenceProfile) -> Vec<StudentId> {
    profile
        .iter()
        .filter(|p| p.prefers(mu_prime.of(p.owner()), mu.of(p.owner())))
        .map(Preference::owner)
        .collect()
}

fn displacement_edges(
    mu: &Matching,
    mu_prime: &Matching,
    improvers: &[StudentId],
) -> Vec<(StudentId, StudentId)> {
    let mut edges = Vec::new();
    for &i in improvers {
        for j in mu.assigned_to(mu_prime.of(i)) {
            edges.push((i, j));
        }
    }
    edges.sort();
    edges
}

/// The graph `G`: nodes are the students assigned under `μ` to alternatives
/// whose assignment differs between `μ` and `μ'`; each improver points to
/// the students holding her target seat.
pub fn build_graph(
    mu: &Matching,
    mu_prime: &Matching,
    ctx: &SchoolChoiceContext,
    profile: &PreferenceProfile,
) -> Result<ImprovementGraph, CycleError> {
    if mu == mu_prime {
        return Err(CycleError::IdenticalMatchings);
    }
    let mut nodes = BTreeSet::new();
    for a in ctx.alternatives() {
        let before = mu.assigned_to(a);
        if before != mu_prime.assigned_to(a) {
            nodes.extend(before);
        }
    }
    let improvers = improvers(mu, mu_prime, profile);
    let edges = displacement_edges(mu, mu_prime, &improvers);
    Ok(ImprovementGraph {
        nodes,
        edges,
        baseline: mu.clone(),
        target: mu_prime.clone(),
    })
}

/// The variant `G*`: nodes are the students assigned under `μ` to the
/// alternatives occupied by improvers; edges as in `G`.
pub fn build_graph_star(
    mu: &Matching,
    mu_prime: &Matching,
    ctx: &SchoolChoiceContext,
    profile: &PreferenceProfile,
) -> ImprovementGraph {
    let improvers = improvers(mu, mu_prime, profile);
    let occupied: BTreeSet<Alternative> = improvers.iter().map(|&i| mu.of(i)).collect();
    let nodes = ctx
        .students()
        .filter(|&i| occupied.contains(&mu.of(i)))
        .collect();
    let edges = displacement_edges(mu, mu_prime, &improvers);
    ImprovementGraph {
        nodes,
        edges,
        baseline: mu.clone(),
        target: mu_prime.clone(),
    }
}

/// `k` μ-blocks `[i, j]`: `k` strictly prefers `μ(j)` to her own seat and
/// outranks `i` there. Nobody blocks an edge into the outside option.
pub fn mu_blocks(
    k: StudentId,
    i: StudentId,
    j: StudentId,
    mu: &Matching,
    ctx: &SchoolChoiceContext,
    profile: &PreferenceProfile,
) -> bool {
    let target = mu.of(j);
    let Some(school) = target.school() else {
        return false;
    };
    profile.get(k).prefers(target, mu.of(k)) && ctx.priority(school).higher(k, i)
}

/// Blockers of `[i, j]` within the graph's node set.
pub fn blocking_set(
    i: StudentId,
    j: StudentId,
    graph: &ImprovementGraph,
    ctx: &SchoolChoiceContext,
    profile: &PreferenceProfile,
) -> Result<Vec<StudentId>, CycleError> {
    if !graph.has_edge(i, j) {
        return Err(CycleError::MissingEdge(i, j));
    }
    Ok(graph
        .nodes
        .iter()
        .copied()
        .filter(|&k| mu_blocks(k, i, j, &graph.baseline, ctx, profile))
        .collect())
}

/// Edge replacement: every edge whose in-graph blocking set is non-empty is
/// replaced by an edge from the highest-priority blocker (at the target
/// seat's school) to the same head. Parallel edges are kept; the result is
/// a multigraph.
pub fn edge_replace(
    graph: &ImprovementGraph,
    ctx: &SchoolChoiceContext,
    profile: &PreferenceProfile,
) -> ImprovementGraph {
    let mu = &graph.baseline;
    let mut edges = Vec::new();
    for &(i, j) in &graph.edges {
        let blockers: Vec<StudentId> = graph
            .nodes
            .iter()
            .copied()
            .filter(|&k| mu_blocks(k, i, j, mu, ctx, profile))
            .collect();
        match mu.of(j).school() {
            Some(school) if !blockers.is_empty() => {
                let best = blockers
                    .into_iter()
                    .min_by_key(|&k| ctx.priority(school).rank(k))
                    .unwrap();
                edges.push((best, j));
            }
            _ => edges.push((i, j)),
        }
    }
    edges.sort();
    ImprovementGraph {
        nodes: graph.nodes.clone(),
        edges,
        baseline: graph.baseline.clone(),
        target: graph.target.clone(),
    }
}

/// Walk backwards from the smallest node, always stepping to the smallest
/// predecessor, until a node repeats; the visited stretch, read against the
/// walk, is a cycle. Deterministic given the id order.
pub fn find_cycle(graph: &ImprovementGraph) -> Result<Cycle, CycleError> {
    for &v in &graph.nodes {
        if !graph.edges.iter().any(|&(_, head)| head == v) {
            return Err(CycleError::MissingInEdge(v));
        }
    }
    let start = *graph.nodes.iter().next().expect("graph has nodes");
    let mut path = vec![start];
    loop {
        let tail = *path.last().unwrap();
        let pred = graph
            .edges
            .iter()
            .filter(|&&(_, head)| head == tail)
            .map(|&(src, _)| src)
            .min()
            .expect("positive in-degree checked above");
        if let Some(pos) = path.iter().position(|&v| v == pred) {
            // path[pos..] walked backwards is the cycle; reverse it so
            // consecutive members follow directed edges
            let mut members: Vec<StudentId> = path[pos..].to_vec();
            members.reverse();
            return Ok(Cycle::new(members).normalized());
        }
        path.push(pred);
    }
}

/// Every member strictly prefers the next member's baseline seat.
pub fn is_improving_cycle(cycle: &Cycle, mu: &Matching, profile: &PreferenceProfile) -> bool {
    cycle
        .edges()
        .all(|(i, j)| profile.get(i).prefers(mu.of(j), mu.of(i)))
}

/// Students (inside or outside the graph) blocking any edge of the cycle.
pub fn cycle_blockers(
    cycle: &Cycle,
    mu: &Matching,
    ctx: &SchoolChoiceContext,
    profile: &PreferenceProfile,
) -> Result<Vec<StudentId>, CycleError> {
    if !is_improving_cycle(cycle, mu, profile) {
        return Err(CycleError::NotImproving);
    }
    Ok(ctx
        .students()
        .filter(|&k| cycle.edges().any(|(i, j)| mu_blocks(k, i, j, mu, ctx, profile)))
        .collect())
}

/// Reassign along the cycle: each member takes the next member's seat.
/// School fill counts are unchanged, so capacities are preserved.
pub fn apply_cycle(
    mu: &Matching,
    cycle: &Cycle,
    profile: &PreferenceProfile,
) -> Result<Matching, CycleError> {
    if !is_improving_cycle(cycle, mu, profile) {
        return Err(CycleError::NotImproving);
    }
    let mut assignment: Vec<Alternative> = mu.assignment().to_vec();
    for (i, j) in cycle.edges() {
        assignment[i.index()] = mu.of(j);
    }
    Ok(Matching::new(assignment))
}

/// Case split used by the local non-bossiness argument: the new report
/// shrinks (weakly) the set of schools ranked above the pivot.
pub fn is_monotonic_transformation(
    old: &Preference,
    new: &Preference,
    pivot: Alternative,
) -> bool {
    debug_assert_eq!(old.n_schools(), new.n_schools());
    new.ranking()
        .iter()
        .take_while(|&&a| a != pivot)
        .filter(|a| !a.is_outside())
        .all(|&a| old.prefers(a, pivot))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{matching_from_labels, PreferenceProfile, SchoolChoiceContext};

    fn swap_instance() -> (SchoolChoiceContext, PreferenceProfile, Matching, Matching) {
        // two students each preferring the other's seat
        let ctx = SchoolChoiceContext::from_tables(2, &[1, 1], &[&[1, 2], &[2, 1]]).unwrap();
        let profile = PreferenceProfile::from_tables(2, &[&[2, 1, 0], &[1, 2, 0]]).unwrap();
        let mu = matching_from_labels(&[1, 2]);
        let mu_prime = matching_from_labels(&[2, 1]);
        (ctx, profile, mu, mu_prime)
    }

    #[test]
    fn single_swap_gives_a_two_cycle() {
        let (ctx, profile, mu, mu_prime) = swap_instance();
        let g = build_graph(&mu, &mu_prime, &ctx, &profile).unwrap();
        assert_eq!(g.nodes().len(), 2);
        assert_eq!(
            g.edges(),
            &[(StudentId(0), StudentId(1)), (StudentId(1), StudentId(0))]
        );
        let cycle = find_cycle(&g).unwrap();
        assert_eq!(cycle.members(), &[StudentId(0), StudentId(1)]);
        assert!(is_improving_cycle(&cycle, &mu, &profile));
        // each target school ranks its incoming student first, so nothing
        // blocks the exchange from inside or outside
        assert_eq!(
            blocking_set(StudentId(0), StudentId(1), &g, &ctx, &profile).unwrap(),
            vec![]
        );
        assert_eq!(cycle_blockers(&cycle, &mu, &ctx, &profile).unwrap(), vec![]);
        let eta = apply_cycle(&mu, &cycle, &profile).unwrap();
        assert_eq!(eta, mu_prime);
    }

    #[test]
    fn singleton_cycles_never_improve() {
        let (_, profile, mu, _) = swap_instance();
        let lone = Cycle::new(vec![StudentId(0)]);
        assert!(!is_improving_cycle(&lone, &mu, &profile));
        assert!(matches!(
            apply_cycle(&mu, &lone, &profile),
            Err(CycleError::NotImproving)
        ));
    }

    #[test]
    fn identical_matchings_are_rejected() {
        let (ctx, profile, mu, _) = swap_instance();
        assert_eq!(
            build_graph(&mu, &mu, &ctx, &profile).unwrap_err(),
            CycleError::IdenticalMatchings
        );
    }

    #[test]
    fn non_improving_cycle_is_rejected() {
        // both students already sit at their favourite school; no exchange
        // cycle can improve on that
        let profile = PreferenceProfile::from_tables(2, &[&[1, 2, 0], &[2, 1, 0]]).unwrap();
        let mu = matching_from_labels(&[1, 2]);
        let bad = Cycle::new(vec![StudentId(0), StudentId(1)]);
        assert!(matches!(
            apply_cycle(&mu, &bad, &profile),
            Err(CycleError::NotImproving)
        ));
    }

    #[test]
    fn graph_star_contains_improvers() {
        let (ctx, profile, mu, mu_prime) = swap_instance();
        let g = build_graph_star(&mu, &mu_prime, &ctx, &profile);
        for i in improvers(&mu, &mu_prime, &profile) {
            assert!(g.nodes().contains(&i));
        }
    }

    #[test]
    fn empty_improver_set_gives_empty_star_graph() {
        let ctx = SchoolChoiceContext::from_tables(2, &[1, 1], &[&[1, 2], &[2, 1]]).unwrap();
        let profile = PreferenceProfile::from_tables(2, &[&[1, 2, 0], &[2, 1, 0]]).unwrap();
        let mu = matching_from_labels(&[1, 2]);
        let other = matching_from_labels(&[2, 1]);
        let g = build_graph_star(&mu, &other, &ctx, &profile);
        assert!(g.nodes().is_empty());
        assert!(g.edges().is_empty());
    }

    #[test]
    fn blocking_set_requires_the_edge() {
        let (ctx, profile, mu, mu_prime) = swap_instance();
        let g = build_graph(&mu, &mu_prime, &ctx, &profile).unwrap();
        assert!(matches!(
            blocking_set(StudentId(0), StudentId(0), &g, &ctx, &profile),
            Err(CycleError::MissingEdge(..))
        ));
    }

    #[test]
    fn monotonic_transformation_predicate() {
        let n_schools = 2;
        let base = PreferenceProfile::from_tables(n_schools, &[&[2, 1, 0]]).unwrap();
        let shrunk = PreferenceProfile::from_tables(n_schools, &[&[1, 2, 0]]).unwrap();
        let pivot = Alternative::School(crate::model::SchoolId(0));
        // {s : s P' s1} = {} ⊆ {s2} = {s : s P s1}
        assert!(is_monotonic_transformation(
            base.get(StudentId(0)),
            shrunk.get(StudentId(0)),
            pivot
        ));
        assert!(!is_monotonic_transformation(
            shrunk.get(StudentId(0)),
            base.get(StudentId(0)),
            pivot
        ));
    }
}
