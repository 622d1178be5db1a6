use std::collections::BTreeMap;
use std::sync::mpsc;

use crate::{CliError, Result};

/// Runs `job` on `workers` threads for every index in `todo` and hands the
/// results to `sink` on the calling thread, in the order of `todo`.
pub(crate) fn run_ordered<T, F, S>(todo: &[usize], workers: usize, job: F, mut sink: S) -> Result<()>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
    S: FnMut(usize, T) -> Result<()>,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let job = &job;
    let (tx, rx) = mpsc::channel();
    pool.in_place_scope_fifo(|s| {
        for &i in todo {
            let tx = tx.clone();
            s.spawn_fifo(move |_| {
                let _ = tx.send((i, job(i)));
            });
        }
        drop(tx);
        let mut pending = BTreeMap::new();
        let mut next = 0;
        for (i, v) in rx {
            pending.insert(i, v);
            while let Some(v) = todo.get(next).and_then(|k| pending.remove(k)) {
                sink(todo[next], v)?;
                next += 1;
            }
        }
        Ok(())
    })
}
