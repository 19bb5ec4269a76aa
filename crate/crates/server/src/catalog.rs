// SPDX-License-Identifier: Apache-2.0

//! Exercises loaded from a directory of YAML files. The task id is the file
//! name without its `.yaml`/`.yml` extension.
//!
//! [`Catalog::refresh`] re-reads files whose modification time changed. A
//! file that stops parsing keeps its last good version until it is fixed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::{Duration, SystemTime};

use qlearn_core::{parse_exercise, Exercise};

#[derive(Debug)]
struct Entry {
    exercise: Arc<Exercise>,
    modified: Option<SystemTime>,
}

#[derive(Debug, Default)]
struct State {
    entries: BTreeMap<String, Entry>,
    /// Last seen modification time of files that failed to parse.
    failed: BTreeMap<String, Option<SystemTime>>,
}

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct RefreshReport {
    pub loaded: Vec<String>,
    pub removed: Vec<String>,
    pub failed: Vec<(String, String)>,
}

#[derive(Debug, Default)]
pub struct Catalog {
    dir: Option<PathBuf>,
    state: RwLock<State>,
}

fn task_id(path: &Path) -> Option<String> {
    let ext = path.extension()?.to_str()?;
    if ext != "yaml" && ext != "yml" {
        return None;
    }
    Some(path.file_stem()?.to_str()?.to_owned())
}

impl Catalog {
    /// Loads every exercise in `dir`.
    pub fn load_dir(dir: impl Into<PathBuf>) -> std::io::Result<(Catalog, RefreshReport)> {
        let dir = dir.into();
        std::fs::read_dir(&dir)?;
        let catalog = Catalog {
            dir: Some(dir),
            state: RwLock::default(),
        };
        let report = catalog.refresh();
        Ok((catalog, report))
    }

    /// A fixed catalog, for tests.
    pub fn from_exercises(exercises: impl IntoIterator<Item = (String, Exercise)>) -> Catalog {
        let entries = exercises
            .into_iter()
            .map(|(id, exercise)| {
                (
                    id,
                    Entry {
                        exercise: Arc::new(exercise),
                        modified: None,
                    },
                )
            })
            .collect();
        Catalog {
            dir: None,
            state: RwLock::new(State {
                entries,
                failed: BTreeMap::new(),
            }),
        }
    }

    pub fn get(&self, id: &str) -> Option<Arc<Exercise>> {
        let state = self.state.read().unwrap_or_else(|e| e.into_inner());
        state.entries.get(id).map(|e| Arc::clone(&e.exercise))
    }

    /// Task ids with their headers.
    pub fn list(&self) -> Vec<(String, Option<String>)> {
        let state = self.state.read().unwrap_or_else(|e| e.into_inner());
        state
            .entries
            .iter()
            .map(|(id, e)| (id.clone(), e.exercise.header().map(str::to_owned)))
            .collect()
    }

    /// Re-reads changed, new and deleted files.
    pub fn refresh(&self) -> RefreshReport {
        let mut report = RefreshReport::default();
        let Some(dir) = &self.dir else {
            return report;
        };
        let files: BTreeMap<String, (PathBuf, Option<SystemTime>)> = match std::fs::read_dir(dir) {
            Ok(rd) => rd
                .filter_map(Result::ok)
                .filter_map(|e| {
                    let path = e.path();
                    let id = task_id(&path)?;
                    let modified = e.metadata().ok().and_then(|m| m.modified().ok());
                    Some((id, (path, modified)))
                })
                .collect(),
            Err(e) => {
                tracing::warn!(dir = %dir.display(), error = %e, "cannot read exercise directory");
                return report;
            }
        };

        let mut state = self.state.write().unwrap_or_else(|e| e.into_inner());
        let gone: Vec<String> = state
            .entries
            .keys()
            .filter(|id| !files.contains_key(*id))
            .cloned()
            .collect();
        for id in gone {
            state.entries.remove(&id);
            report.removed.push(id);
        }
        state.failed.retain(|id, _| files.contains_key(id));

        for (id, (path, modified)) in files {
            let unchanged = match (state.entries.get(&id), state.failed.get(&id)) {
                (_, Some(failed_at)) => *failed_at == modified && modified.is_some(),
                (Some(entry), None) => entry.modified == modified && modified.is_some(),
                (None, None) => false,
            };
            if unchanged {
                continue;
            }
            let parsed = std::fs::read_to_string(&path)
                .map_err(|e| e.to_string())
                .and_then(|text| parse_exercise(&text).map_err(|e| e.to_string()));
            match parsed {
                Ok(p) => {
                    for w in &p.warnings {
                        tracing::warn!(task = %id, "{w}");
                    }
                    state.failed.remove(&id);
                    state.entries.insert(
                        id.clone(),
                        Entry {
                            exercise: Arc::new(p.value),
                            modified,
                        },
                    );
                    report.loaded.push(id);
                }
                Err(e) => {
                    tracing::warn!(task = %id, error = %e, "exercise not loaded");
                    state.failed.insert(id.clone(), modified);
                    report.failed.push((id, e));
                }
            }
        }
        report
    }
}

/// Polls the exercise directory every `every`.
pub fn spawn_reloader(catalog: Arc<Catalog>, every: Duration) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(every);
        tick.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
        tick.tick().await;
        loop {
            tick.tick().await;
            let c = Arc::clone(&catalog);
            if let Ok(report) = tokio::task::spawn_blocking(move || c.refresh()).await {
                if !report.loaded.is_empty() || !report.removed.is_empty() {
                    tracing::info!(loaded = ?report.loaded, removed = ?report.removed, "exercises reloaded");
                }
            }
        }
    })
}
