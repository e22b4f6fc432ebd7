//! Ensembles of independent trajectories on a fixed number of workers.
//!
//! Results come back in task order whatever the scheduling, so any merge
//! done over them in sequence is deterministic.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Applies `f` to every task on up to `workers` threads and returns the
/// results in task order.
pub fn ordered_map<T, R, F>(tasks: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = workers.clamp(1, tasks.len().max(1));
    if workers == 1 {
        return tasks.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = tasks.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= tasks.len() {
                    break;
                }
                let r = f(&tasks[i]);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("every task ran"))
        .collect()
}

/// Worker count from `SRB_GRAD_THREADS`, or 1 if unset or invalid.
pub fn default_workers() -> usize {
    std::env::var("SRB_GRAD_THREADS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&w: &usize| w >= 1)
        .unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_are_in_task_order() {
        let tasks: Vec<u64> = (0..37).collect();
        let serial = ordered_map(&tasks, 1, |&t| t * t);
        for w in [2, 3, 8, 100] {
            assert_eq!(ordered_map(&tasks, w, |&t| t * t), serial);
        }
        assert!(ordered_map(&[] as &[u64], 4, |&t| t).is_empty());
    }
}
