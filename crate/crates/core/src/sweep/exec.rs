//! Point scheduling. With the `parallel` feature and more than one worker, points
//! are spread over a rayon pool with dynamic load balancing and results stream
//! back to the calling thread; otherwise they run in order on the calling thread.

use super::SweepRecord;
use crate::Result;

/// Evaluates `work(i)` for every index in `pending` and hands each result to
/// `sink` on the calling thread, in completion order. A failing sink stops the run.
pub(crate) fn run_points<W, S>(pending: &[usize], workers: usize, work: W, sink: S) -> Result<()>
where
    W: Fn(usize) -> SweepRecord + Sync,
    S: FnMut(usize, SweepRecord) -> Result<()>,
{
    let workers = resolve_workers(workers);
    if workers <= 1 || pending.len() <= 1 {
        return sequential(pending, work, sink);
    }
    parallel(pending, workers, work, sink)
}

/// `0` means every available core.
pub fn resolve_workers(workers: usize) -> usize {
    if workers == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        workers
    }
}

fn sequential<W, S>(pending: &[usize], work: W, mut sink: S) -> Result<()>
where
    W: Fn(usize) -> SweepRecord,
    S: FnMut(usize, SweepRecord) -> Result<()>,
{
    for &i in pending {
        sink(i, work(i))?;
    }
    Ok(())
}

#[cfg(feature = "parallel")]
fn parallel<W, S>(pending: &[usize], workers: usize, work: W, mut sink: S) -> Result<()>
where
    W: Fn(usize) -> SweepRecord + Sync,
    S: FnMut(usize, SweepRecord) -> Result<()>,
{
    use rayon::prelude::*;
    use std::sync::atomic::{AtomicBool, Ordering};
    use std::sync::mpsc;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| crate::Error::config(format!("cannot start {workers} workers: {e}")))?;
    let stop = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|scope| {
        let (work, stop) = (&work, &stop);
        scope.spawn(move || {
            pool.install(|| {
                pending.par_iter().with_max_len(1).for_each_with(tx, |tx, &i| {
                    if !stop.load(Ordering::Relaxed) {
                        let _ = tx.send((i, work(i)));
                    }
                })
            })
        });
        for (i, rec) in rx {
            if let Err(e) = sink(i, rec) {
                stop.store(true, Ordering::Relaxed);
                return Err(e);
            }
        }
        Ok(())
    })
}

#[cfg(not(feature = "parallel"))]
fn parallel<W, S>(pending: &[usize], _workers: usize, work: W, sink: S) -> Result<()>
where
    W: Fn(usize) -> SweepRecord + Sync,
    S: FnMut(usize, SweepRecord) -> Result<()>,
{
    sequential(pending, work, sink)
}
