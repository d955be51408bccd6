//! Named landmarks and detected objects with their poses.
//!
//! Entries are keyed by canonical entity name. Initial entries come from the
//! scenario map and are never overwritten; detected entries are upserted with
//! last-write-wins semantics when the knowledge base is growing, and rejected
//! when it is fixed.

use std::sync::{Arc, RwLock};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Pose;
use crate::plan::EntityName;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KbMode {
    Fixed,
    Growing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntrySource {
    Initial,
    Detected,
}

/// One knowledge-base row. `detected_at` is the simulation time of the write
/// that produced the stored pose; it is `None` for initial entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KbEntry {
    pub name: EntityName,
    #[serde(flatten)]
    pub pose: Pose,
    pub source: EntrySource,
    pub detected_at: Option<f64>,
}

impl KbEntry {
    pub fn initial(name: EntityName, pose: Pose) -> Self {
        KbEntry { name, pose, source: EntrySource::Initial, detected_at: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KbError {
    #[error("duplicate knowledge-base entry {0:?}")]
    DuplicateName(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    // Insertion order doubles as snapshot order: initial entries are inserted
    // first and an upsert keeps the slot of the first detection.
    entries: IndexMap<EntityName, KbEntry>,
    mode: KbMode,
}

impl KnowledgeBase {
    pub fn new(initial: Vec<KbEntry>, mode: KbMode) -> Result<Self, KbError> {
        let mut entries = IndexMap::with_capacity(initial.len());
        for mut entry in initial {
            if entries.contains_key(&entry.name) {
                return Err(KbError::DuplicateName(entry.name.to_string()));
            }
            entry.source = EntrySource::Initial;
            entry.detected_at = None;
            entries.insert(entry.name.clone(), entry);
        }
        Ok(KnowledgeBase { entries, mode })
    }

    /// Rebuild from an exported document. Detected rows are kept as detected.
    pub fn from_entries(rows: Vec<KbEntry>, mode: KbMode) -> Result<Self, KbError> {
        let mut entries = IndexMap::with_capacity(rows.len());
        for entry in rows {
            if entries.contains_key(&entry.name) {
                return Err(KbError::DuplicateName(entry.name.to_string()));
            }
            entries.insert(entry.name.clone(), entry);
        }
        Ok(KnowledgeBase { entries, mode })
    }

    pub fn mode(&self) -> KbMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, name: &EntityName) -> bool {
        self.entries.contains_key(name)
    }

    /// Record a detection. Returns whether the knowledge base accepted it.
    pub fn insert(&mut self, name: &EntityName, pose: Pose, time: f64) -> bool {
        if self.mode == KbMode::Fixed {
            return false;
        }
        match self.entries.get_mut(name) {
            Some(existing) if existing.source == EntrySource::Initial => false,
            Some(existing) => {
                existing.pose = pose;
                existing.detected_at = Some(time);
                true
            }
            None => {
                self.entries.insert(
                    name.clone(),
                    KbEntry {
                        name: name.clone(),
                        pose,
                        source: EntrySource::Detected,
                        detected_at: Some(time),
                    },
                );
                true
            }
        }
    }

    pub fn lookup(&self, name: &EntityName) -> Option<Pose> {
        self.entries.get(name).map(|e| e.pose)
    }

    pub fn entry(&self, name: &EntityName) -> Option<&KbEntry> {
        self.entries.get(name)
    }

    /// Entity names in prompt order: initial entries first, then detected
    /// entries in order of first detection.
    pub fn snapshot(&self) -> Vec<EntityName> {
        self.entries.keys().cloned().collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = &KbEntry> {
        self.entries.values()
    }

    /// Rows in snapshot order, suitable for serialization.
    pub fn to_document(&self) -> Vec<KbEntry> {
        self.entries.values().cloned().collect()
    }
}

/// Knowledge base shared between the detection loop and the executor. Every
/// operation takes the lock once, so readers never see a partial insert.
#[derive(Debug, Clone)]
pub struct SharedKnowledgeBase(Arc<RwLock<KnowledgeBase>>);

impl SharedKnowledgeBase {
    pub fn new(kb: KnowledgeBase) -> Self {
        SharedKnowledgeBase(Arc::new(RwLock::new(kb)))
    }

    pub fn insert(&self, name: &EntityName, pose: Pose, time: f64) -> bool {
        self.0.write().expect("kb lock poisoned").insert(name, pose, time)
    }

    pub fn lookup(&self, name: &EntityName) -> Option<Pose> {
        self.0.read().expect("kb lock poisoned").lookup(name)
    }

    pub fn snapshot(&self) -> Vec<EntityName> {
        self.0.read().expect("kb lock poisoned").snapshot()
    }

    pub fn read<R>(&self, f: impl FnOnce(&KnowledgeBase) -> R) -> R {
        f(&self.0.read().expect("kb lock poisoned"))
    }
}
