//! Worker pool for independent runs.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Worker count from `MORL_THREADS`, else the machine's parallelism.
pub fn worker_count() -> usize {
    std::env::var("MORL_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Evaluates `job(0..n)` on up to `threads` workers and returns the results
/// in index order. The first error by index wins.
pub fn run_indexed<T, E, F>(n: usize, threads: usize, job: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync,
{
    let workers = threads.clamp(1, n.max(1));
    if workers == 1 {
        return (0..n).map(&job).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<T, E>>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let r = job(i);
                slots.lock().expect("result slots")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots")
        .into_iter()
        .map(|r| r.expect("every index ran"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_keep_index_order() {
        for threads in [1, 3, 8] {
            let out: Result<Vec<usize>, ()> = run_indexed(20, threads, |i| Ok(i * i));
            assert_eq!(out.unwrap(), (0..20).map(|i| i * i).collect::<Vec<_>>());
        }
    }

    #[test]
    fn first_error_by_index() {
        let out: Result<Vec<usize>, usize> = run_indexed(10, 4, |i| if i % 4 == 3 { Err(i) } else { Ok(i) });
        assert_eq!(out, Err(3));
    }
}
