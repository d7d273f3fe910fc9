//! Resumable profile computation.
//!
//! The checkpoint is a JSON-lines file: a header naming the evaluator
//! fingerprint, pair mode and baseline, then one line per finished task.
//! Work proceeds in chunks; each chunk is appended and flushed before the
//! next starts, so an interrupted run loses at most one chunk.

use super::{assemble, compute_baseline, run_tasks, tasks, CounterfactualError, CounterfactualProfile, PairMode, Task};
use crate::par::Execution;
use crate::recsys::Evaluator;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    fingerprint: String,
    mode: PairMode,
    num_features: usize,
    baseline: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    task: Task,
    delta: f64,
}

fn err(path: &Path, message: impl Into<String>) -> CounterfactualError {
    CounterfactualError::Checkpoint {
        path: path.display().to_string(),
        message: message.into(),
    }
}

type Finished = HashMap<Task, f64>;

/// Reads finished tasks from an existing checkpoint and truncates the file
/// after the last complete entry, dropping a partially written line.
fn read_checkpoint(path: &Path) -> Result<Option<(Header, Finished)>, CounterfactualError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(err(path, e.to_string())),
    };
    let mut lines = text.split_inclusive('\n');
    let header: Header = match lines.next() {
        Some(line) if line.ends_with('\n') => serde_json::from_str(line).map_err(|e| err(path, e.to_string()))?,
        _ => return Ok(None),
    };
    let mut valid = text.find('\n').map_or(0, |p| p + 1);
    let mut done = HashMap::new();
    for line in lines {
        let Some(entry) = line
            .ends_with('\n')
            .then(|| serde_json::from_str::<Entry>(line).ok())
            .flatten()
        else {
            break;
        };
        done.insert(entry.task, entry.delta);
        valid += line.len();
    }
    if valid < text.len() {
        let file = OpenOptions::new()
            .write(true)
            .open(path)
            .map_err(|e| err(path, e.to_string()))?;
        file.set_len(valid as u64).map_err(|e| err(path, e.to_string()))?;
    }
    Ok(Some((header, done)))
}

/// Like [`super::compute_profile`], resuming from and appending to the
/// checkpoint at `path`. The result is identical to an uninterrupted run.
pub fn compute_profile_checkpointed<E: Evaluator + ?Sized>(
    evaluator: &E,
    mode: PairMode,
    exec: Execution,
    path: &Path,
    chunk_size: usize,
) -> Result<CounterfactualProfile, CounterfactualError> {
    let fingerprint = evaluator.fingerprint();
    let n = evaluator.num_features();
    let (baseline, mut done) = match read_checkpoint(path)? {
        Some((h, done)) => {
            if h.fingerprint != fingerprint || h.mode != mode || h.num_features != n {
                return Err(err(path, "checkpoint was written for different inputs"));
            }
            log::info!("resuming from {} with {} finished tasks", path.display(), done.len());
            (h.baseline, done)
        }
        None => {
            let baseline = compute_baseline(evaluator)?;
            let header = Header {
                fingerprint,
                mode,
                num_features: n,
                baseline,
            };
            let line = serde_json::to_string(&header).map_err(|e| err(path, e.to_string()))?;
            std::fs::write(path, line + "\n").map_err(|e| err(path, e.to_string()))?;
            (baseline, HashMap::new())
        }
    };

    let all = tasks(n, mode);
    let pending: Vec<Task> = all.iter().copied().filter(|t| !done.contains_key(t)).collect();
    let mut file = OpenOptions::new()
        .append(true)
        .open(path)
        .map_err(|e| err(path, e.to_string()))?;
    for chunk in pending.chunks(chunk_size.max(1)) {
        let deltas = run_tasks(evaluator, baseline, chunk, exec)?;
        let mut buf = String::new();
        for (&task, &delta) in chunk.iter().zip(&deltas) {
            buf.push_str(&serde_json::to_string(&Entry { task, delta }).map_err(|e| err(path, e.to_string()))?);
            buf.push('\n');
            done.insert(task, delta);
        }
        file.write_all(buf.as_bytes()).map_err(|e| err(path, e.to_string()))?;
        file.flush().map_err(|e| err(path, e.to_string()))?;
    }
    let deltas: Vec<f64> = all.iter().map(|t| done[t]).collect();
    assemble(evaluator, baseline, mode, &deltas)
}
