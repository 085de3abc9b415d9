//! Instance documents: the JSON interchange format for contexts, preference
//! profiles, matchings, and choice-function schools.
//!
//! ```json
//! {
//!   "students": ["1", "2"],
//!   "schools": [
//!     {"id": "s1", "capacity": 2, "priority": ["1", "2"]},
//!     {"id": "s2", "capacity": 1, "priority": ["2", "1"]}
//!   ],
//!   "preferences": {"1": ["s1", "s2", "s0"], "2": ["s2", "s1", "s0"]}
//! }
//! ```
//!
//! A school entry may instead carry `choice` (an explicit table keyed by
//! comma-joined sorted subsets) or `preference_over_sets` (an ordered list
//! of subsets, best first) in place of `priority` + `capacity`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::choicefn::{ChoiceFunction, ChoiceFnError};
use crate::model::{
    Alternative, Matching, ModelError, Preference, PreferenceProfile, PriorityOrder,
    SchoolChoiceContext, SchoolId, StudentId,
};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("malformed document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("{0}")]
    Model(#[from] ModelError),
    #[error("{0}")]
    Choice(#[from] ChoiceFnError),
    #[error("school `{school}`: {detail}")]
    BadSchool { school: String, detail: String },
    #[error("student `{student}`: {detail}")]
    BadPreference { student: String, detail: String },
    #[error("document has no `preferences` section")]
    MissingPreferences,
    #[error("matching document: {0}")]
    BadMatching(String),
    #[error("school `{0}` uses a choice table; the operation needs priority-and-capacity schools")]
    NotResponsive(String),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SchoolDoc {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priority: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choice: Option<BTreeMap<String, Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preference_over_sets: Option<Vec<Vec<String>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct InstanceDoc {
    pub students: Vec<String>,
    pub schools: Vec<SchoolDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preferences: Option<BTreeMap<String, Vec<String>>>,
}

/// A parsed instance: the context (always with a priority order and capacity
/// per school — placeholders for choice-table schools), the profile if the
/// document carried one, and per-school choice functions.
#[derive(Clone, Debug)]
pub struct Instance {
    pub context: SchoolChoiceContext,
    pub profile: Option<PreferenceProfile>,
    pub choices: Vec<ChoiceFunction>,
    /// Schools whose entry was a choice table or a ranking over sets rather
    /// than a priority order.
    pub table_schools: Vec<SchoolId>,
}

impl Instance {
    pub fn require_profile(&self) -> Result<&PreferenceProfile, InstanceError> {
        self.profile.as_ref().ok_or(InstanceError::MissingPreferences)
    }

    /// The context, provided every school came with priority + capacity.
    pub fn require_responsive(&self) -> Result<&SchoolChoiceContext, InstanceError> {
        if let Some(&s) = self.table_schools.first() {
            return Err(InstanceError::NotResponsive(
                self.context.school_name(s).to_string(),
            ));
        }
        Ok(&self.context)
    }
}

fn subset_key_to_students(
    key: &str,
    ctx: &SchoolChoiceContext,
) -> Result<Vec<StudentId>, ModelError> {
    if key.is_empty() {
        return Ok(Vec::new());
    }
    key.split(',').map(|name| ctx.student_by_name(name)).collect()
}

/// Canonical key for a student subset: comma-joined names, sorted by the
/// students' position in the context.
pub fn subset_key(students: &[StudentId], ctx: &SchoolChoiceContext) -> String {
    let mut sorted: Vec<StudentId> = students.to_vec();
    sorted.sort();
    sorted
        .iter()
        .map(|&i| ctx.student_name(i))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn parse_document(doc: &InstanceDoc) -> Result<Instance, InstanceError> {
    let students = doc.students.clone();
    let school_names: Vec<String> = doc.schools.iter().map(|s| s.id.clone()).collect();

    // a skeleton context resolves names; placeholder priorities are replaced
    // below for real priority schools
    let n = students.len();
    let placeholder: Vec<PriorityOrder> = (0..school_names.len())
        .map(|k| {
            PriorityOrder::new(
                SchoolId::from_index(k),
                (0..n).map(StudentId::from_index).collect(),
                n,
            )
            .expect("identity order is total")
        })
        .collect();
    let skeleton = SchoolChoiceContext::new(
        students.clone(),
        school_names.clone(),
        placeholder,
        vec![1; school_names.len()],
    )?;

    let mut priorities = Vec::new();
    let mut capacities = Vec::new();
    let mut table_schools = Vec::new();
    let mut choices: Vec<Option<ChoiceFunction>> = Vec::new();

    for (k, school) in doc.schools.iter().enumerate() {
        let sid = SchoolId::from_index(k);
        match (&school.priority, &school.choice, &school.preference_over_sets) {
            (Some(priority), None, None) => {
                let capacity = school.capacity.ok_or_else(|| InstanceError::BadSchool {
                    school: school.id.clone(),
                    detail: "priority school needs a capacity".into(),
                })?;
                if capacity < 1 {
                    return Err(ModelError::CapacityTooSmall(school.id.clone()).into());
                }
                let ranking = priority
                    .iter()
                    .map(|name| skeleton.student_by_name(name))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| InstanceError::BadSchool {
                        school: school.id.clone(),
                        detail: e.to_string(),
                    })?;
                let order =
                    PriorityOrder::new(sid, ranking, n).map_err(|_| InstanceError::BadSchool {
                        school: school.id.clone(),
                        detail: "priority order is not a total order over the students".into(),
                    })?;
                choices.push(Some(ChoiceFunction::responsive(sid, &order, capacity)));
                priorities.push(order);
                capacities.push(capacity);
            }
            (None, Some(table), None) => {
                let mut masks = BTreeMap::new();
                for (key, chosen) in table {
                    let set = subset_key_to_students(key, &skeleton)
                        .map_err(|e| InstanceError::BadSchool {
                            school: school.id.clone(),
                            detail: e.to_string(),
                        })?;
                    let picked = chosen
                        .iter()
                        .map(|name| skeleton.student_by_name(name))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| InstanceError::BadSchool {
                            school: school.id.clone(),
                            detail: e.to_string(),
                        })?;
                    masks.insert(
                        crate::orders::mask_of_students(&set),
                        crate::orders::mask_of_students(&picked),
                    );
                }
                let cf = ChoiceFunction::from_table(sid, n, &masks)?;
                table_schools.push(sid);
                // placeholder order and a capacity wide enough to be inert
                priorities.push(PriorityOrder::new(
                    sid,
                    (0..n).map(StudentId::from_index).collect(),
                    n,
                )?);
                capacities.push(school.capacity.unwrap_or(n.max(1)));
                choices.push(Some(cf));
            }
            (None, None, Some(ranked_sets)) => {
                let sets = ranked_sets
                    .iter()
                    .map(|set| {
                        set.iter()
                            .map(|name| skeleton.student_by_name(name))
                            .collect::<Result<Vec<_>, _>>()
                            .map(|ids| crate::orders::mask_of_students(&ids))
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| InstanceError::BadSchool {
                        school: school.id.clone(),
                        detail: e.to_string(),
                    })?;
                let cf = ChoiceFunction::from_ranked_sets(sid, n, &sets)?;
                table_schools.push(sid);
                priorities.push(PriorityOrder::new(
                    sid,
                    (0..n).map(StudentId::from_index).collect(),
                    n,
                )?);
                capacities.push(school.capacity.unwrap_or(n.max(1)));
                choices.push(Some(cf));
            }
            _ => {
                return Err(InstanceError::BadSchool {
                    school: school.id.clone(),
                    detail:
                        "give exactly one of `priority` (+`capacity`), `choice`, or `preference_over_sets`"
                            .into(),
                })
            }
        }
    }

    let context = SchoolChoiceContext::new(students, school_names, priorities, capacities)?;

    let profile = match &doc.preferences {
        None => None,
        Some(prefs) => {
            if prefs.len() != context.n_students() {
                return Err(ModelError::ProfileDomainMismatch.into());
            }
            let mut by_student: Vec<Option<Preference>> = vec![None; context.n_students()];
            for (name, ranking) in prefs {
                let owner = context.student_by_name(name)?;
                let alts = ranking
                    .iter()
                    .map(|a| context.alternative_by_name(a))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| InstanceError::BadPreference {
                        student: name.clone(),
                        detail: e.to_string(),
                    })?;
                let pref = Preference::new(owner, alts, context.n_schools()).map_err(|e| {
                    InstanceError::BadPreference {
                        student: name.clone(),
                        detail: match e {
                            ModelError::NonTotalPreference { detail, .. } => {
                                format!("non-total preference: {detail}")
                            }
                            other => other.to_string(),
                        },
                    }
                })?;
                by_student[owner.index()] = Some(pref);
            }
            let prefs: Vec<Preference> = by_student
                .into_iter()
                .collect::<Option<Vec<_>>>()
                .ok_or(ModelError::ProfileDomainMismatch)?;
            Some(PreferenceProfile::new(prefs)?)
        }
    };

    Ok(Instance {
        context,
        profile,
        choices: choices.into_iter().map(Option::unwrap).collect(),
        table_schools,
    })
}

pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let doc: InstanceDoc = serde_json::from_str(text)?;
    parse_document(&doc)
}

/// Serialize a context and optional profile back into the document form.
/// Responsive schools round-trip exactly; table schools are emitted as
/// explicit choice tables.
pub fn to_document(
    ctx: &SchoolChoiceContext,
    profile: Option<&PreferenceProfile>,
    choices: &[ChoiceFunction],
    table_schools: &[SchoolId],
) -> InstanceDoc {
    let schools = ctx
        .schools()
        .map(|s| {
            if table_schools.contains(&s) {
                let cf = &choices[s.index()];
                let mut table = BTreeMap::new();
                for set in 0u32..(1 << ctx.n_students()) {
                    let chosen = crate::orders::mask_members(cf.choose(set))
                        .iter()
                        .map(|&i| ctx.student_name(i).to_string())
                        .collect();
                    table.insert(
                        subset_key(&crate::orders::mask_members(set), ctx),
                        chosen,
                    );
                }
                SchoolDoc {
                    id: ctx.school_name(s).to_string(),
                    capacity: None,
                    priority: None,
                    choice: Some(table),
                    preference_over_sets: None,
                }
            } else {
                SchoolDoc {
                    id: ctx.school_name(s).to_string(),
                    capacity: Some(ctx.capacity(s)),
                    priority: Some(
                        ctx.priority(s)
                            .ranking()
                            .iter()
                            .map(|&i| ctx.student_name(i).to_string())
                            .collect(),
                    ),
                    choice: None,
                    preference_over_sets: None,
                }
            }
        })
        .collect();
    let preferences = profile.map(|p| {
        p.iter()
            .map(|pref| {
                (
                    ctx.student_name(pref.owner()).to_string(),
                    pref.ranking()
                        .iter()
                        .map(|&a| ctx.alternative_name(a).to_string())
                        .collect(),
                )
            })
            .collect()
    });
    InstanceDoc {
        students: ctx.students().map(|i| ctx.student_name(i).to_string()).collect(),
        schools,
        preferences,
    }
}

pub fn serialize_instance(
    ctx: &SchoolChoiceContext,
    profile: Option<&PreferenceProfile>,
) -> String {
    let choices: Vec<ChoiceFunction> = ctx
        .schools()
        .map(|s| ChoiceFunction::responsive(s, ctx.priority(s), ctx.capacity(s)))
        .collect();
    serde_json::to_string_pretty(&to_document(ctx, profile, &choices, &[])).expect("serializable")
}

/// `{student: school-or-s0}`
pub fn matching_to_document(m: &Matching, ctx: &SchoolChoiceContext) -> BTreeMap<String, String> {
    ctx.students()
        .map(|i| {
            (
                ctx.student_name(i).to_string(),
                ctx.alternative_name(m.of(i)).to_string(),
            )
        })
        .collect()
}

pub fn matching_from_document(
    doc: &BTreeMap<String, String>,
    ctx: &SchoolChoiceContext,
) -> Result<Matching, InstanceError> {
    if doc.len() != ctx.n_students() {
        return Err(InstanceError::BadMatching(format!(
            "assigns {} of {} students",
            doc.len(),
            ctx.n_students()
        )));
    }
    let mut assignment = vec![Alternative::Outside; ctx.n_students()];
    for (name, target) in doc {
        let i = ctx.student_by_name(name)?;
        assignment[i.index()] = ctx.alternative_by_name(target)?;
    }
    Ok(Matching::new(assignment))
}
