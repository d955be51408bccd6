//! The subtask action language shared by planners and the executor.
//!
//! A plan is one subtask per line:
//!
//! ```text
//! navigate(vending machine)
//! grab(bottle)
//! navigate(office)
//! drop()
//! ```
//!
//! Parsing is all-or-nothing: a single line of prose fails the whole plan.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const ARTICLES: [&str; 3] = ["the", "a", "an"];

/// Characters treated as word separators inside entity names.
fn is_separator(c: char) -> bool {
    matches!(
        c,
        '-' | '_' | '\u{2010}' | '\u{2011}' | '\u{2012}' | '\u{2013}' | '\u{2014}' | '\u{2212}'
    ) || c.is_whitespace()
}

fn is_forbidden(c: char) -> bool {
    matches!(c, '(' | ')' | ',') || c.is_control()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EntityError {
    #[error("entity name is empty after normalization")]
    EmptyEntity,
    #[error("entity name contains forbidden character {0:?}")]
    InvalidCharacter(char),
}

/// Canonical form of a landmark or object name: lowercase words separated by
/// single spaces, with no leading article.
pub fn normalize_entity(raw: &str) -> Result<String, EntityError> {
    if let Some(c) = raw.chars().find(|c| is_forbidden(*c) && !c.is_whitespace()) {
        return Err(EntityError::InvalidCharacter(c));
    }
    let lowered = raw.to_lowercase();
    let mut words: Vec<&str> = lowered.split(is_separator).filter(|w| !w.is_empty()).collect();
    let leading = words.iter().take_while(|w| ARTICLES.contains(w)).count();
    words.drain(..leading);
    if words.is_empty() {
        return Err(EntityError::EmptyEntity);
    }
    Ok(words.join(" "))
}

/// A canonical entity name. Construction always goes through
/// [`normalize_entity`], so two names compare equal iff they denote the same
/// knowledge-base key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EntityName(String);

impl EntityName {
    pub fn new(raw: &str) -> Result<Self, EntityError> {
        normalize_entity(raw).map(EntityName)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for EntityName {
    type Error = EntityError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        EntityName::new(&value)
    }
}

impl From<EntityName> for String {
    fn from(value: EntityName) -> Self {
        value.0
    }
}

impl FromStr for EntityName {
    type Err = EntityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityName::new(s)
    }
}

impl fmt::Display for EntityName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl PartialEq<str> for EntityName {
    fn eq(&self, other: &str) -> bool {
        self.0 == other
    }
}

impl PartialEq<&str> for EntityName {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Navigate,
    Grab,
    Drop,
}

impl ActionKind {
    pub fn keyword(self) -> &'static str {
        match self {
            ActionKind::Navigate => "navigate",
            ActionKind::Grab => "grab",
            ActionKind::Drop => "drop",
        }
    }

    fn from_keyword(word: &str) -> Option<Self> {
        match word.to_ascii_lowercase().as_str() {
            "navigate" => Some(ActionKind::Navigate),
            "grab" => Some(ActionKind::Grab),
            "drop" => Some(ActionKind::Drop),
            _ => None,
        }
    }
}

/// One atomic action. Navigate and grab always carry a target, drop never does;
/// the enum makes the other combinations unrepresentable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "target", rename_all = "snake_case")]
pub enum SubTask {
    Navigate(EntityName),
    Grab(EntityName),
    Drop,
}

impl SubTask {
    pub fn kind(&self) -> ActionKind {
        match self {
            SubTask::Navigate(_) => ActionKind::Navigate,
            SubTask::Grab(_) => ActionKind::Grab,
            SubTask::Drop => ActionKind::Drop,
        }
    }

    pub fn target(&self) -> Option<&EntityName> {
        match self {
            SubTask::Navigate(t) | SubTask::Grab(t) => Some(t),
            SubTask::Drop => None,
        }
    }

    /// Convenience constructor for tests and fixtures.
    pub fn navigate(target: &str) -> Self {
        SubTask::Navigate(EntityName::new(target).expect("valid entity"))
    }

    pub fn grab(target: &str) -> Self {
        SubTask::Grab(EntityName::new(target).expect("valid entity"))
    }
}

impl fmt::Display for SubTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.target() {
            Some(t) => write!(f, "{}({})", self.kind().keyword(), t),
            None => write!(f, "{}()", self.kind().keyword()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Plan {
    pub subtasks: Vec<SubTask>,
}

impl Plan {
    pub fn new(subtasks: Vec<SubTask>) -> Self {
        Plan { subtasks }
    }

    pub fn len(&self) -> usize {
        self.subtasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subtasks.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SubTask> {
        self.subtasks.iter()
    }

    /// True when the plan manipulates objects (contains a grab or drop).
    pub fn is_manipulation(&self) -> bool {
        self.subtasks.iter().any(|s| !matches!(s, SubTask::Navigate(_)))
    }
}

impl FromIterator<SubTask> for Plan {
    fn from_iter<I: IntoIterator<Item = SubTask>>(iter: I) -> Self {
        Plan::new(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseErrorReason {
    UnknownAction,
    MissingArgument,
    UnexpectedArgument,
    MalformedLine,
    EmptyInput,
}

impl fmt::Display for ParseErrorReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ParseErrorReason::UnknownAction => "unknown_action",
            ParseErrorReason::MissingArgument => "missing_argument",
            ParseErrorReason::UnexpectedArgument => "unexpected_argument",
            ParseErrorReason::MalformedLine => "malformed_line",
            ParseErrorReason::EmptyInput => "empty_input",
        };
        f.write_str(s)
    }
}

/// `line_number` is 1-based; it is 0 for [`ParseErrorReason::EmptyInput`].
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("line {line_number}: {reason}")]
pub struct ParseError {
    pub line_number: usize,
    pub reason: ParseErrorReason,
}

fn parse_line(line: &str, line_number: usize) -> Result<SubTask, ParseError> {
    let fail = |reason| ParseError { line_number, reason };

    let open = line.find('(').ok_or(fail(ParseErrorReason::MalformedLine))?;
    if !line.ends_with(')') {
        return Err(fail(ParseErrorReason::MalformedLine));
    }
    let keyword = line[..open].trim_end();
    if keyword.is_empty() || !keyword.chars().all(|c| c.is_ascii_alphabetic() || c == '_') {
        return Err(fail(ParseErrorReason::MalformedLine));
    }
    let arg = &line[open + 1..line.len() - 1];
    if arg.chars().any(is_forbidden) {
        return Err(fail(ParseErrorReason::MalformedLine));
    }
    let kind = ActionKind::from_keyword(keyword).ok_or(fail(ParseErrorReason::UnknownAction))?;
    let arg = arg.trim();

    match kind {
        ActionKind::Drop if arg.is_empty() => Ok(SubTask::Drop),
        ActionKind::Drop => Err(fail(ParseErrorReason::UnexpectedArgument)),
        ActionKind::Navigate | ActionKind::Grab => {
            let name = EntityName::new(arg).map_err(|_| fail(ParseErrorReason::MissingArgument))?;
            Ok(if kind == ActionKind::Navigate {
                SubTask::Navigate(name)
            } else {
                SubTask::Grab(name)
            })
        }
    }
}

/// Parse planner output into a [`Plan`]. Blank lines are skipped; any other
/// line that is not a well-formed subtask fails the whole parse.
pub fn parse_plan(text: &str) -> Result<Plan, ParseError> {
    let mut subtasks = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        subtasks.push(parse_line(line, idx + 1)?);
    }
    if subtasks.is_empty() {
        return Err(ParseError { line_number: 0, reason: ParseErrorReason::EmptyInput });
    }
    Ok(Plan::new(subtasks))
}

/// Inverse of [`parse_plan`]. The empty plan serializes to the empty string;
/// callers that need to distinguish "no plan" carry that separately.
pub fn serialize_plan(plan: &Plan) -> String {
    plan.subtasks.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n")
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_plan(self))
    }
}

impl FromStr for Plan {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_plan(s)
    }
}
