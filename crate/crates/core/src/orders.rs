//! Enumeration machinery for exhaustive searches: all strict linear orders
//! over the alternatives, profile spaces with integer codes, and memoized
//! mechanism outcome tables.
//!
//! A profile over `n` students is coded in mixed radix base `k`, where `k`
//! is the number of linear orders of `S ∪ {s0}`. Matchings are packed into
//! a `u32` (4 bits per student), which bounds the exhaustive paths to 8
//! students and 15 alternatives — far beyond the desk-scale grids used here.

use std::collections::HashMap;

use crate::model::{
    Alternative, Matching, Preference, PreferenceProfile, SchoolChoiceContext, StudentId,
};

/// All strict linear orders over `S ∪ {s0}` for a given school count, in
/// lexicographic order of their code sequences.
#[derive(Clone, Debug)]
pub struct OrderSpace {
    n_schools: usize,
    orders: Vec<Vec<Alternative>>,
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (pos, &x) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(pos);
        for mut tail in permutations(&rest) {
            tail.insert(0, x);
            out.push(tail);
        }
    }
    out
}

impl OrderSpace {
    pub fn new(n_schools: usize) -> Self {
        let codes: Vec<usize> = (0..=n_schools).collect();
        let orders = permutations(&codes)
            .into_iter()
            .map(|perm| {
                perm.into_iter()
                    .map(|c| Alternative::from_code(c, n_schools))
                    .collect()
            })
            .collect();
        OrderSpace { n_schools, orders }
    }

    pub fn n_schools(&self) -> usize {
        self.n_schools
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    pub fn order(&self, idx: usize) -> &[Alternative] {
        &self.orders[idx]
    }

    pub fn preference(&self, owner: StudentId, idx: usize) -> Preference {
        Preference::new(owner, self.orders[idx].clone(), self.n_schools)
            .expect("enumerated orders are total")
    }

    pub fn index_of(&self, pref: &Preference) -> usize {
        self.orders
            .iter()
            .position(|o| o.as_slice() == pref.ranking())
            .expect("preference over the same alternatives")
    }
}

/// The space of full preference profiles for `n` students.
#[derive(Clone, Debug)]
pub struct ProfileSpace {
    space: OrderSpace,
    n_students: usize,
}

impl ProfileSpace {
    pub fn new(n_students: usize, n_schools: usize) -> Self {
        ProfileSpace {
            space: OrderSpace::new(n_schools),
            n_students,
        }
    }

    pub fn orders(&self) -> &OrderSpace {
        &self.space
    }

    pub fn n_students(&self) -> usize {
        self.n_students
    }

    pub fn radix(&self) -> u64 {
        self.space.len() as u64
    }

    /// Total number of profiles, `k^n`.
    pub fn count(&self) -> u64 {
        self.radix().pow(self.n_students as u32)
    }

    pub fn order_index(&self, code: u64, student: StudentId) -> usize {
        let k = self.radix();
        ((code / k.pow(student.index() as u32)) % k) as usize
    }

    pub fn profile(&self, code: u64) -> PreferenceProfile {
        let prefs = (0..self.n_students)
            .map(|i| {
                let id = StudentId::from_index(i);
                self.space.preference(id, self.order_index(code, id))
            })
            .collect();
        PreferenceProfile::new(prefs).expect("owners aligned by construction")
    }

    pub fn code_of(&self, profile: &PreferenceProfile) -> u64 {
        let k = self.radix();
        let mut code = 0u64;
        for i in (0..self.n_students).rev() {
            code = code * k + self.space.index_of(profile.get(StudentId::from_index(i))) as u64;
        }
        code
    }

    /// Code of the profile equal to `code` except that `student` reports the
    /// order with index `order_idx`.
    pub fn with_order(&self, code: u64, student: StudentId, order_idx: usize) -> u64 {
        let k = self.radix();
        let place = k.pow(student.index() as u32);
        let old = self.order_index(code, student) as u64;
        code - old * place + order_idx as u64 * place
    }
}

pub const PACKED_NONE: u32 = u32::MAX;

/// Pack a matching into 4 bits per student.
pub fn pack_matching(m: &Matching, n_schools: usize) -> u32 {
    debug_assert!(m.len() <= 8 && n_schools < 15);
    let mut packed = 0u32;
    for i in (0..m.len()).rev() {
        packed = (packed << 4) | m.of(StudentId::from_index(i)).code(n_schools) as u32;
    }
    packed
}

pub fn unpack_matching(packed: u32, n_students: usize, n_schools: usize) -> Matching {
    let assignment = (0..n_students)
        .map(|i| Alternative::from_code(((packed >> (4 * i)) & 0xF) as usize, n_schools))
        .collect();
    Matching::new(assignment)
}

/// Assignment of one student inside a packed matching.
pub fn packed_of(packed: u32, i: StudentId, n_schools: usize) -> Alternative {
    Alternative::from_code(((packed >> (4 * i.index())) & 0xF) as usize, n_schools)
}

/// Set of students packed-assigned to an alternative, as a bitmask.
pub fn packed_assigned_mask(packed: u32, a: Alternative, n_students: usize, n_schools: usize) -> u32 {
    let want = a.code(n_schools) as u32;
    let mut mask = 0u32;
    for i in 0..n_students {
        if (packed >> (4 * i)) & 0xF == want {
            mask |= 1 << i;
        }
    }
    mask
}

enum Table {
    Dense(Vec<u32>),
    Sparse(HashMap<u64, u32>),
}

const DENSE_LIMIT: u64 = 1 << 24;

/// Lazily memoized mechanism outcomes over a profile space.
pub struct OutcomeTable<'a> {
    mech: &'a dyn crate::mechanisms::Mechanism,
    ctx: &'a SchoolChoiceContext,
    space: &'a ProfileSpace,
    table: Table,
    evaluations: u64,
}

impl<'a> OutcomeTable<'a> {
    pub fn new(
        mech: &'a dyn crate::mechanisms::Mechanism,
        ctx: &'a SchoolChoiceContext,
        space: &'a ProfileSpace,
    ) -> Self {
        assert!(ctx.n_students() <= 8, "packed tables support up to 8 students");
        let table = if space.count() <= DENSE_LIMIT {
            Table::Dense(vec![PACKED_NONE; space.count() as usize])
        } else {
            Table::Sparse(HashMap::new())
        };
        OutcomeTable {
            mech,
            ctx,
            space,
            table,
            evaluations: 0,
        }
    }

    pub fn outcome(&mut self, code: u64) -> u32 {
        let cached = match &self.table {
            Table::Dense(v) => v[code as usize],
            Table::Sparse(m) => *m.get(&code).unwrap_or(&PACKED_NONE),
        };
        if cached != PACKED_NONE {
            return cached;
        }
        let profile = self.space.profile(code);
        let matching = self.mech.run(self.ctx, &profile);
        let packed = pack_matching(&matching, self.ctx.n_schools());
        self.evaluations += 1;
        match &mut self.table {
            Table::Dense(v) => v[code as usize] = packed,
            Table::Sparse(m) => {
                m.insert(code, packed);
            }
        }
        packed
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }
}

/// Subsets of `{0..n}` of size `min_size..=max_size`, as bitmasks in
/// ascending mask order.
pub fn subsets_of_size(n: usize, min_size: usize, max_size: usize) -> Vec<u32> {
    (0u32..(1 << n))
        .filter(|m| {
            let c = m.count_ones() as usize;
            c >= min_size && c <= max_size
        })
        .collect()
}

/// Subsets of the set given by `pool` (a bitmask) with sizes in range.
pub fn subsets_of_pool(pool: u32, min_size: usize, max_size: usize) -> Vec<u32> {
    let members: Vec<u32> = (0..32).filter(|b| pool & (1 << b) != 0).collect();
    let mut out = Vec::new();
    for mask in 0u32..(1 << members.len()) {
        let c = mask.count_ones() as usize;
        if c < min_size || c > max_size {
            continue;
        }
        let mut set = 0u32;
        for (pos, &bit) in members.iter().enumerate() {
            if mask & (1 << pos) != 0 {
                set |= 1 << bit;
            }
        }
        out.push(set);
    }
    out.sort_unstable();
    out
}

pub fn mask_members(mask: u32) -> Vec<StudentId> {
    (0..32)
        .filter(|b| mask & (1 << b) != 0)
        .map(|b| StudentId::from_index(b as usize))
        .collect()
}

pub fn mask_of_students(students: &[StudentId]) -> u32 {
    students.iter().fold(0, |m, i| m | (1 << i.index()))
}
