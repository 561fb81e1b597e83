//! File handling shared by the per-file pipeline stages: sorted listings,
//! stem pairing, atomic output writes and a small worker pool.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::CliError;

/// Sorted files in `dir` whose name ends with `suffix`.
pub fn list_files(dir: &Path, suffix: &str) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.ends_with(suffix))
        })
        .collect();
    files.sort();
    Ok(files)
}

/// File stem up to the first '.'; the pairing key between stage
/// directories.
pub fn stem(path: &Path) -> String {
    stresskit_core::io::stem_of(path)
}

/// The sibling artifact for `stem` in `dir`, which must exist.
pub fn paired_file(dir: &Path, stem: &str, suffix: &str) -> Result<PathBuf, String> {
    let path = dir.join(format!("{stem}{suffix}"));
    if path.is_file() {
        Ok(path)
    } else {
        Err(format!("missing {}", path.display()))
    }
}

/// Write via a temp file in the same directory plus rename, so readers
/// never observe a half-written artifact.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(
        ".{name}.tmp-{}",
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos())
            .unwrap_or(0)
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileOutcome {
    Written,
    Skipped,
}

#[derive(Debug, Default)]
pub struct StageSummary {
    pub written: usize,
    pub skipped: usize,
    pub errors: Vec<(PathBuf, String)>,
}

/// Run `work` over every file with up to `jobs` workers. Outcomes keep
/// the input order. With `fail_fast`, workers stop picking up new files
/// after the first error.
pub fn process_files<F>(
    files: &[PathBuf],
    jobs: usize,
    fail_fast: bool,
    work: F,
) -> StageSummary
where
    F: Fn(&Path) -> Result<FileOutcome, String> + Sync,
{
    let jobs = jobs.max(1).min(files.len().max(1));
    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let results: Mutex<Vec<Option<Result<FileOutcome, String>>>> =
        Mutex::new(vec![None; files.len()]);

    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                if fail_fast && abort.load(Ordering::Relaxed) {
                    break;
                }
                let index = next.fetch_add(1, Ordering::Relaxed);
                if index >= files.len() {
                    break;
                }
                let outcome = work(&files[index]);
                if outcome.is_err() {
                    abort.store(true, Ordering::Relaxed);
                }
                results.lock().unwrap()[index] = Some(outcome);
            });
        }
    });

    let mut summary = StageSummary::default();
    for (index, slot) in results.into_inner().unwrap().into_iter().enumerate() {
        match slot {
            Some(Ok(FileOutcome::Written)) => summary.written += 1,
            Some(Ok(FileOutcome::Skipped)) => summary.skipped += 1,
            Some(Err(message)) => summary.errors.push((files[index].clone(), message)),
            None => {} // not attempted after fail-fast abort
        }
    }
    summary
}
