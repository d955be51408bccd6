//! Synthetic instruction dataset built from the two task skeletons.
//!
//! Prompts are assembled from structured choices (target names, verb and
//! filler variants) and the expected plan is derived from those choices, not
//! from the template planner, so that comparing the two is a real check.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::system_header;
use super::template::{PATTERN_WORDS, STOP_WORDS};
use crate::plan::{EntityName, Plan, SubTask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Skeleton {
    Navigation,
    Manipulation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub system_header: String,
    pub prompt: String,
    #[serde(with = "plan_text")]
    pub expected_plan: Plan,
    pub skeleton: Skeleton,
}

mod plan_text {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use crate::plan::Plan;

    pub fn serialize<S: Serializer>(plan: &Plan, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&plan.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Plan, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<DatasetRecord>,
    pub test: Vec<DatasetRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatasetError {
    #[error("insufficient vocabulary: {0}")]
    InsufficientVocabulary(String),
    #[error("n_total must be at least 2, got {0}")]
    TooFewRecords(usize),
    #[error("split ratio must be strictly between 0 and 1")]
    InvalidRatio,
}

const NAV_LEADS: [&str; 7] = ["", "please ", "hey, ", "robot, ", "could you ", "when you get a chance ", "okay "];
const NAV_VERBS: [&str; 2] = ["go to", "navigate to"];
const TAILS: [&str; 12] = [
    "",
    "",
    " now",
    " please",
    " to check if the delivery truck is still here",
    " and wait there",
    ", thanks",
    ".",
    " so i can find you",
    " then stop",
    " for a quick look",
    " if you can",
];
const SITUATIONS: [&str; 8] = [
    "",
    "i'm hungry",
    "i'm feeling lonely",
    "guests are here and they are thirsty",
    "my son forgot his toy",
    "we are tidying up",
    "it is getting late",
    "the meeting starts soon",
];
const CARRY_VERBS: [&str; 4] = ["bring", "take", "move", "carry"];

fn usable(name: &EntityName) -> bool {
    name.as_str().split(' ').all(|w| !STOP_WORDS.contains(&w) && !PATTERN_WORDS.contains(&w))
}

/// Landmark sets used to vary the system header.
pub fn default_headers() -> Vec<Vec<EntityName>> {
    let sets: [&[&str]; 6] = [
        &["living room", "kitchen", "kids room"],
        &["lounge", "lobby", "office", "meeting room"],
        &["garage", "driveway", "front door"],
        &["lab", "workshop", "storage room", "vending machine"],
        &["bedroom", "bathroom", "hallway", "dining room"],
        &["reception", "cafeteria", "library", "printer room"],
    ];
    sets.iter().map(|s| s.iter().map(|n| EntityName::new(n).expect("canonical")).collect()).collect()
}

fn title_case_first(s: &str, rng: &mut ChaCha8Rng) -> String {
    if !rng.random_bool(0.5) {
        return s.to_string();
    }
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    items.choose(rng).expect("non-empty table")
}

fn article(rng: &mut ChaCha8Rng) -> &'static str {
    if rng.random_bool(0.8) { "the " } else { "" }
}

fn navigation(rng: &mut ChaCha8Rng, landmarks: &[EntityName], classes: &[EntityName]) -> (String, Plan) {
    let target = if rng.random_bool(0.7) { pick(rng, landmarks) } else { pick(rng, classes) }.clone();
    let prompt = format!(
        "{}{} {}{}{}",
        pick(rng, &NAV_LEADS),
        pick(rng, &NAV_VERBS),
        article(rng),
        target,
        pick(rng, &TAILS)
    );
    (prompt, Plan::new(vec![SubTask::Navigate(target)]))
}

fn manipulation(rng: &mut ChaCha8Rng, landmarks: &[EntityName], classes: &[EntityName]) -> (String, Plan) {
    let object = pick(rng, classes).clone();
    let dest = if rng.random_bool(0.8) { pick(rng, landmarks) } else { pick(rng, classes) }.clone();
    if rng.random_bool(0.4) {
        let origin = pick(rng, landmarks).clone();
        let prompt = format!(
            "{}go to {}{} grab {} {} and bring it to {}{}{}",
            pick(rng, &NAV_LEADS),
            article(rng),
            origin,
            if rng.random_bool(0.5) { "a" } else { "the" },
            object,
            article(rng),
            dest,
            pick(rng, &TAILS)
        );
        let plan = Plan::new(vec![SubTask::Navigate(origin), SubTask::Grab(object), SubTask::Navigate(dest), SubTask::Drop]);
        (prompt, plan)
    } else {
        let situation = pick(rng, &SITUATIONS);
        let sep = if situation.is_empty() { "" } else if rng.random_bool(0.5) { ", " } else { " " };
        let prompt = format!(
            "{situation}{sep}{} the {} to {}{}{}",
            pick(rng, &CARRY_VERBS),
            object,
            article(rng),
            dest,
            pick(rng, &TAILS)
        );
        let plan = Plan::new(vec![
            SubTask::Navigate(object.clone()),
            SubTask::Grab(object),
            SubTask::Navigate(dest),
            SubTask::Drop,
        ]);
        (prompt, plan)
    }
}

pub fn generate_dataset(
    class_names: &[EntityName],
    headers: &[Vec<EntityName>],
    n_total: usize,
    split_ratio: f64,
    seed: u64,
) -> Result<Dataset, DatasetError> {
    if n_total < 2 {
        return Err(DatasetError::TooFewRecords(n_total));
    }
    if !(split_ratio > 0.0 && split_ratio < 1.0) {
        return Err(DatasetError::InvalidRatio);
    }
    let classes: Vec<EntityName> = class_names.iter().filter(|c| usable(c)).cloned().collect();
    if classes.is_empty() {
        return Err(DatasetError::InsufficientVocabulary("no usable class names".into()));
    }
    let headers: Vec<Vec<EntityName>> = headers
        .iter()
        .map(|h| h.iter().filter(|n| usable(n)).cloned().collect::<Vec<_>>())
        .filter(|h| !h.is_empty())
        .collect();
    if headers.is_empty() {
        return Err(DatasetError::InsufficientVocabulary("no header with usable landmark names".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(n_total);
    for _ in 0..n_total {
        let landmarks = pick(&mut rng, &headers);
        // some headers also list objects the robot has already seen
        let seen: Vec<&EntityName> = (0..rng.random_range(0..=3)).map(|_| pick(&mut rng, &classes)).collect();
        let header = system_header(landmarks.iter().chain(seen.iter().copied()).map(|n| n.as_str()));
        let skeleton = if rng.random_bool(0.5) { Skeleton::Navigation } else { Skeleton::Manipulation };
        let (prompt, expected_plan) = match skeleton {
            Skeleton::Navigation => navigation(&mut rng, landmarks, &classes),
            Skeleton::Manipulation => manipulation(&mut rng, landmarks, &classes),
        };
        let prompt = title_case_first(&prompt, &mut rng);
        records.push(DatasetRecord { system_header: header, prompt, expected_plan, skeleton });
    }

    let n_train = ((n_total as f64 * split_ratio).round() as usize).clamp(1, n_total - 1);
    let test = records.split_off(n_train);
    Ok(Dataset { train: records, test })
}

/// One JSON object per line.
pub fn records_to_jsonl(records: &[DatasetRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}
