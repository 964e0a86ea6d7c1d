//! On-disk knowledge storage.
//!
//! ```text
//! <root>/store.json              settings (negative-example strategy)
//! <root>/kb.json                 background knowledge plus logged operations
//! <root>/logs/logs.csv           the ingested log
//! <root>/logs/mapping.json       its column mapping
//! <root>/candidates/<skill>.json ranked candidate lists
//! <root>/descriptions/<skill>.json curated skill descriptions
//! <root>/.lock                   advisory lock
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use skilldesc::ingest::{self, NegativeStrategy};
use skilldesc::reasoner::ExampleSet;
use skilldesc::recommender::CandidateList;
use skilldesc::{ClassId, KnowledgeBase, SkillDescription};

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[serde(default)]
    pub negatives: NegativeStrategy,
}

pub struct Store {
    root: PathBuf,
    _lock: File,
}

impl Store {
    /// Opens the store for reading; other readers may hold it too.
    pub fn open(root: &Path) -> Result<Self> {
        if !root.join("kb.json").is_file() {
            return Err(crate::Coded::io(format!(
                "{} is not a skill store (run `skilldesc ingest` first)",
                root.display()
            )));
        }
        let lock = Self::lock_file(root)?;
        lock.lock_shared().with_context(|| format!("locking {}", root.display()))?;
        Ok(Store { root: root.to_owned(), _lock: lock })
    }

    /// Opens (creating if needed) the store for writing, excluding all
    /// other users until dropped.
    pub fn open_for_writing(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        let lock = Self::lock_file(root)?;
        lock.lock().with_context(|| format!("locking {}", root.display()))?;
        Ok(Store { root: root.to_owned(), _lock: lock })
    }

    fn lock_file(root: &Path) -> Result<File> {
        let path = root.join(".lock");
        OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .with_context(|| format!("opening {}", path.display()))
    }

    pub fn kb_path(&self) -> PathBuf {
        self.root.join("kb.json")
    }

    pub fn log_path(&self) -> PathBuf {
        self.root.join("logs").join("logs.csv")
    }

    pub fn mapping_path(&self) -> PathBuf {
        self.root.join("logs").join("mapping.json")
    }

    pub fn candidates_path(&self, skill: &str) -> PathBuf {
        self.root.join("candidates").join(format!("{skill}.json"))
    }

    pub fn description_path(&self, skill: &str) -> PathBuf {
        self.root.join("descriptions").join(format!("{skill}.json"))
    }

    pub fn settings(&self) -> Result<Settings> {
        let path = self.root.join("store.json");
        if !path.exists() {
            return Ok(Settings::default());
        }
        let text = read(&path)?;
        serde_json::from_str(&text).with_context(|| format!("reading {}", path.display()))
    }

    pub fn write_settings(&self, settings: &Settings) -> Result<()> {
        let text = serde_json::to_string_pretty(settings)? + "\n";
        write(&self.root.join("store.json"), &text)
    }

    pub fn kb(&self) -> Result<KnowledgeBase> {
        Ok(ingest::load_kb(self.kb_path())?)
    }

    pub fn examples(&self, kb: &KnowledgeBase, skill: &str) -> Result<ExampleSet> {
        Ok(ingest::select_examples(kb, skill, self.settings()?.negatives)?)
    }

    pub fn candidates(&self, kb: &KnowledgeBase, skill: &str) -> Result<CandidateList> {
        let path = self.candidates_path(skill);
        if !path.exists() {
            return Err(crate::Coded::examples(format!(
                "no candidates for {skill} (run `skilldesc learn --skill {skill}` first)"
            )));
        }
        let examples = self.examples(kb, skill)?;
        let list = CandidateList::from_json(&read(&path)?, kb, &examples)
            .with_context(|| format!("reading {}", path.display()))?;
        Ok(list)
    }

    pub fn description(&self, kb: &KnowledgeBase, skill: &str) -> Result<Option<SkillDescription>> {
        let path = self.description_path(skill);
        if !path.exists() {
            return Ok(None);
        }
        let d = SkillDescription::from_json(&read(&path)?, kb).with_context(|| format!("reading {}", path.display()))?;
        Ok(Some(d))
    }

    /// Skills each module performed, according to the ingested log.
    pub fn module_skills(&self) -> Result<BTreeMap<ClassId, BTreeSet<ClassId>>> {
        let path = self.log_path();
        if !path.exists() {
            return Ok(BTreeMap::new());
        }
        let file = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
        let rows = ingest::read_log(file)?;
        Ok(ingest::module_skills(&rows))
    }
}

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| skilldesc::Error::Io { path: path.to_owned(), source: e }.into())
}

/// Writes through a temporary file so readers never see partial content.
pub fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
