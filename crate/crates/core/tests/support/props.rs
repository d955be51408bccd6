//! Plan-language and knowledge-base properties over the public API.

use proptest::prelude::*;
use taskbot_core::{parse_plan, serialize_plan, EntityName, EntrySource, KbEntry, KbMode, KnowledgeBase, Plan, Pose, SubTask};

pub fn entity() -> impl Strategy<Value = EntityName> {
    "[a-z]{1,8}( [a-z]{1,8}){0,2}".prop_filter_map("non-article", |s| EntityName::new(&s).ok())
}

pub fn subtask() -> impl Strategy<Value = SubTask> {
    prop_oneof![entity().prop_map(SubTask::Navigate), entity().prop_map(SubTask::Grab), Just(SubTask::Drop)]
}

pub fn plan() -> impl Strategy<Value = Plan> {
    prop::collection::vec(subtask(), 1..8).prop_map(Plan::new)
}

pub fn check_round_trip(plan: &Plan) -> Result<(), TestCaseError> {
    prop_assert_eq!(&parse_plan(&serialize_plan(plan)).unwrap(), plan);
    Ok(())
}

/// A plan with one prose line spliced in, and where to splice it.
pub fn prose_plan() -> impl Strategy<Value = String> {
    (prop::collection::vec(subtask(), 0..4), "[A-Za-z']{1,10}", "[ a-zA-Z0-9,.()!?'-]{0,40}", 0usize..5)
        .prop_filter("not a verb", |(_, word, _, _)| {
            !["navigate", "grab", "drop"].contains(&word.to_ascii_lowercase().as_str())
        })
        .prop_map(|(good, word, rest, pos)| {
            let mut lines: Vec<String> = good.iter().map(ToString::to_string).collect();
            lines.insert(pos.min(lines.len()), format!("{word} {rest}"));
            lines.join("\n")
        })
}

pub fn check_prose_rejected(text: &str) -> Result<(), TestCaseError> {
    prop_assert!(parse_plan(text).is_err(), "accepted {:?}", text);
    Ok(())
}

pub const LANDMARKS: [&str; 3] = ["living room", "kitchen", "kids room"];
pub const POOL: [&str; 8] = ["kitchen", "cup", "banana", "laptop", "living room", "bowl", "teddy bear", "bed"];

pub fn inserts() -> impl Strategy<Value = Vec<(usize, f64)>> {
    prop::collection::vec((0..POOL.len(), -10.0f64..10.0), 0..40)
}

fn kb(mode: KbMode) -> KnowledgeBase {
    let entries = LANDMARKS
        .iter()
        .enumerate()
        .map(|(i, n)| KbEntry::initial(EntityName::new(n).unwrap(), Pose::new(i as f64, 0.0, 0.0)))
        .collect();
    KnowledgeBase::new(entries, mode).unwrap()
}

/// Growing: keys only accumulate in first-seen order, accepted writes are
/// readable, and initial entries stay initial.
pub fn check_kb_growing(ops: &[(usize, f64)]) -> Result<(), TestCaseError> {
    let mut kb = kb(KbMode::Growing);
    let initial = kb.clone();
    let mut keys = kb.snapshot();
    for (t, (i, x)) in ops.iter().enumerate() {
        let name = EntityName::new(POOL[*i]).unwrap();
        let pose = Pose::new(*x, -x, 0.0);
        if kb.insert(&name, pose, t as f64) {
            prop_assert_eq!(kb.lookup(&name), Some(pose));
        }
        let next = kb.snapshot();
        prop_assert_eq!(&next[..keys.len()], &keys[..]);
        keys = next;
    }
    for entry in initial.to_document() {
        prop_assert_eq!(kb.entry(&entry.name).unwrap().source, EntrySource::Initial);
        prop_assert_eq!(kb.lookup(&entry.name), initial.lookup(&entry.name));
    }
    Ok(())
}

/// Fixed: every insert is refused and nothing changes.
pub fn check_kb_fixed(ops: &[(usize, f64)]) -> Result<(), TestCaseError> {
    let mut kb = kb(KbMode::Fixed);
    let initial = kb.clone();
    for (t, (i, x)) in ops.iter().enumerate() {
        prop_assert!(!kb.insert(&EntityName::new(POOL[*i]).unwrap(), Pose::new(*x, *x, 0.0), t as f64));
    }
    prop_assert_eq!(kb, initial);
    Ok(())
}
