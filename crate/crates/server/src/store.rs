// SPDX-License-Identifier: Apache-2.0

//! Attempt persistence.
//!
//! Attempts are append-only: each submission for a `(task, user)` pair gets
//! the next attempt number and is never changed afterwards. Both stores take
//! a lock around the read-then-insert so numbers stay gap-free under
//! concurrent submissions.

use std::path::Path;
use std::sync::Mutex;

use rusqlite::{params, Connection, OptionalExtension};
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("database error: {0}")]
    Sqlite(#[from] rusqlite::Error),
    #[error("stored record is corrupt: {0}")]
    Corrupt(String),
}

/// An attempt about to be stored.
#[derive(Debug, Clone)]
pub struct NewAttempt {
    pub task_id: String,
    pub user_id: String,
    pub submitted_at: String,
    pub correct: bool,
    pub circuit: Value,
    pub result: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AttemptRecord {
    pub id: i64,
    pub task_id: String,
    pub user_id: String,
    /// 1-based position in this user's sequence for the task.
    pub attempt_number: u32,
    pub submitted_at: String,
    pub correct: bool,
    pub circuit: Value,
    /// The full grade result, counterexample included.
    pub result: Value,
}

pub trait AttemptStore: Send + Sync {
    fn append(&self, attempt: NewAttempt) -> Result<AttemptRecord, StoreError>;

    /// Attempts for a task in submission order, optionally for one user.
    fn list(&self, task_id: &str, user_id: Option<&str>) -> Result<Vec<AttemptRecord>, StoreError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TaskStats {
    pub attempt_count: usize,
    /// Mean attempt number of each user's first correct attempt; users who
    /// never got it right are left out. `None` when nobody has.
    pub average_attempts_to_correct: Option<f64>,
}

/// Statistics over a task's attempts, in submission order.
pub fn task_stats(attempts: &[AttemptRecord]) -> TaskStats {
    let mut first_correct: std::collections::BTreeMap<&str, u32> = Default::default();
    for a in attempts.iter().filter(|a| a.correct) {
        first_correct
            .entry(a.user_id.as_str())
            .and_modify(|n| *n = (*n).min(a.attempt_number))
            .or_insert(a.attempt_number);
    }
    let average = (!first_correct.is_empty()).then(|| {
        let total: u64 = first_correct.values().map(|&n| u64::from(n)).sum();
        total as f64 / first_correct.len() as f64
    });
    TaskStats {
        attempt_count: attempts.len(),
        average_attempts_to_correct: average,
    }
}

/// Process-local store, lost on restart.
#[derive(Debug, Default)]
pub struct MemoryStore {
    records: Mutex<Vec<AttemptRecord>>,
}

impl MemoryStore {
    pub fn new() -> MemoryStore {
        MemoryStore::default()
    }
}

impl AttemptStore for MemoryStore {
    fn append(&self, a: NewAttempt) -> Result<AttemptRecord, StoreError> {
        let mut records = self.records.lock().unwrap_or_else(|e| e.into_inner());
        let previous = records
            .iter()
            .filter(|r| r.task_id == a.task_id && r.user_id == a.user_id)
            .count();
        let record = AttemptRecord {
            id: records.len() as i64 + 1,
            task_id: a.task_id,
            user_id: a.user_id,
            attempt_number: previous as u32 + 1,
            submitted_at: a.submitted_at,
            correct: a.correct,
            circuit: a.circuit,
            result: a.result,
        };
        records.push(record.clone());
        Ok(record)
    }

    fn list(&self, task_id: &str, user_id: Option<&str>) -> Result<Vec<AttemptRecord>, StoreError> {
        let records = self.records.lock().unwrap_or_else(|e| e.into_inner());
        Ok(records
            .iter()
            .filter(|r| r.task_id == task_id && user_id.is_none_or(|u| r.user_id == u))
            .cloned()
            .collect())
    }
}

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS attempts (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    task_id TEXT NOT NULL,
    user_id TEXT NOT NULL,
    attempt_number INTEGER NOT NULL,
    submitted_at TEXT NOT NULL,
    correct INTEGER NOT NULL,
    circuit TEXT NOT NULL,
    result TEXT NOT NULL,
    UNIQUE (task_id, user_id, attempt_number)
);
CREATE INDEX IF NOT EXISTS attempts_by_task ON attempts (task_id, id);
CREATE TRIGGER IF NOT EXISTS attempts_no_update BEFORE UPDATE ON attempts
BEGIN SELECT RAISE(ABORT, 'attempts are append-only'); END;
CREATE TRIGGER IF NOT EXISTS attempts_no_delete BEFORE DELETE ON attempts
BEGIN SELECT RAISE(ABORT, 'attempts are append-only'); END;
";

/// SQLite-backed store. One connection behind a mutex; writes are
/// serialized.
pub struct SqliteStore {
    conn: Mutex<Connection>,
}

impl SqliteStore {
    pub fn open(path: impl AsRef<Path>) -> Result<SqliteStore, StoreError> {
        Self::init(Connection::open(path)?)
    }

    pub fn in_memory() -> Result<SqliteStore, StoreError> {
        Self::init(Connection::open_in_memory()?)
    }

    fn init(conn: Connection) -> Result<SqliteStore, StoreError> {
        conn.pragma_update(None, "journal_mode", "WAL").ok();
        conn.execute_batch(SCHEMA)?;
        Ok(SqliteStore { conn: Mutex::new(conn) })
    }

    fn row(row: &rusqlite::Row<'_>) -> rusqlite::Result<RawRow> {
        Ok((
            row.get(0)?,
            row.get(1)?,
            row.get(2)?,
            row.get(3)?,
            row.get(4)?,
            row.get(5)?,
            row.get(6)?,
            row.get(7)?,
        ))
    }
}

/// id, task, user, attempt number, timestamp, correct, circuit JSON, result JSON
type RawRow = (i64, String, String, u32, String, bool, String, String);

impl AttemptStore for SqliteStore {
    fn append(&self, a: NewAttempt) -> Result<AttemptRecord, StoreError> {
        let mut conn = self.conn.lock().unwrap_or_else(|e| e.into_inner());
        let tx = conn.transaction()?;
        let last: Option<u32> = tx
            .query_row(
                "SELECT MAX(attempt_number) FROM attempts WHERE task_id = ?1 AND user_id = ?2",
                params![a.task_id, a.user_id],
                |r| r.get(0),
            )
            .optional()?
            .flatten();
        let number = last.unwrap_or(0) + 1;
        tx.execute(
            "INSERT INTO attempts (task_id, user_id, attempt_number, submitted_at, correct, circuit, result)
             VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)",
            params![
                a.task_id,
                a.user_id,
                number,
                a.submitted_at,
                a.correct,
                a.circuit.to_string(),
                a.result.to_string()
            ],
        )?;
        let id = tx.last_insert_rowid();
        tx.commit()?;
        Ok(AttemptRecord {
            id,
            task_id: a.task_id,
            user_id: a.user_id,
            attempt_number: number,
            submitted_at: a.submitted_at,
            correct: a.correct,
            circuit: a.circuit,
            result: a.result,
        })
    }

    fn list(&self, task_id: &str, user_id: Option<&str>) -> Result<Vec<AttemptRecord>, StoreError> {
        let conn = self.conn.lock().unwrap_or_else(|e| e.into_inner());
        let mut stmt = conn.prepare(
            "SELECT id, task_id, user_id, attempt_number, submitted_at, correct, circuit, result
             FROM attempts WHERE task_id = ?1 AND (?2 IS NULL OR user_id = ?2) ORDER BY id",
        )?;
        let rows = stmt.query_map(params![task_id, user_id], Self::row)?;
        let mut out = Vec::new();
        for row in rows {
            let (id, task_id, user_id, attempt_number, submitted_at, correct, circuit, result) = row?;
            let parse =
                |s: &str| serde_json::from_str(s).map_err(|e| StoreError::Corrupt(format!("attempt {id}: {e}")));
            out.push(AttemptRecord {
                id,
                task_id,
                user_id,
                attempt_number,
                submitted_at,
                correct,
                circuit: parse(&circuit)?,
                result: parse(&result)?,
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn attempt(task: &str, user: &str, correct: bool) -> NewAttempt {
        NewAttempt {
            task_id: task.into(),
            user_id: user.into(),
            submitted_at: "2026-01-01T00:00:00Z".into(),
            correct,
            circuit: serde_json::json!({"placements": []}),
            result: serde_json::json!({"correct": correct}),
        }
    }

    fn exercise_store(store: &dyn AttemptStore) {
        assert!(store.list("t", None).unwrap().is_empty());
        let a = store.append(attempt("t", "alice", false)).unwrap();
        let b = store.append(attempt("t", "bob", true)).unwrap();
        let c = store.append(attempt("t", "alice", true)).unwrap();
        store.append(attempt("other", "alice", true)).unwrap();
        assert_eq!((a.attempt_number, b.attempt_number, c.attempt_number), (1, 1, 2));
        let all = store.list("t", None).unwrap();
        assert_eq!(all.iter().map(|r| r.id).collect::<Vec<_>>(), [a.id, b.id, c.id]);
        let alice = store.list("t", Some("alice")).unwrap();
        assert_eq!(alice.len(), 2);
        assert_eq!(alice[1].result, serde_json::json!({"correct": true}));
        let stats = task_stats(&all);
        assert_eq!(stats.attempt_count, 3);
        assert_eq!(stats.average_attempts_to_correct, Some(1.5));
    }

    #[test]
    fn memory_store() {
        exercise_store(&MemoryStore::new());
    }

    #[test]
    fn sqlite_store() {
        exercise_store(&SqliteStore::in_memory().unwrap());
    }

    #[test]
    fn sqlite_rejects_updates() {
        let store = SqliteStore::in_memory().unwrap();
        store.append(attempt("t", "u", false)).unwrap();
        let conn = store.conn.lock().unwrap();
        assert!(conn.execute("UPDATE attempts SET correct = 1", []).is_err());
        assert!(conn.execute("DELETE FROM attempts", []).is_err());
    }

    #[test]
    fn stats_examples() {
        let mk = |user: &str, n: u32, correct: bool| AttemptRecord {
            id: 0,
            task_id: "t".into(),
            user_id: user.into(),
            attempt_number: n,
            submitted_at: String::new(),
            correct,
            circuit: Value::Null,
            result: Value::Null,
        };
        assert_eq!(
            task_stats(&[]),
            TaskStats {
                attempt_count: 0,
                average_attempts_to_correct: None
            }
        );
        let third = [mk("a", 1, false), mk("a", 2, false), mk("a", 3, true)];
        assert_eq!(task_stats(&third).average_attempts_to_correct, Some(3.0));
        let mut two = vec![mk("a", 1, true)];
        two.extend((1..=5).map(|n| mk("b", n, n == 5)));
        assert_eq!(task_stats(&two).average_attempts_to_correct, Some(3.0));
        // a user who never succeeds does not count
        let never = [mk("a", 1, true), mk("c", 1, false), mk("c", 2, false)];
        assert_eq!(task_stats(&never).average_attempts_to_correct, Some(1.0));
        // later correct attempts do not move the first one
        let again = [mk("a", 1, false), mk("a", 2, true), mk("a", 3, true)];
        assert_eq!(task_stats(&again).average_attempts_to_correct, Some(2.0));
    }
}
