//! Order-preserving fan-out over frozen inputs.

/// Worker count from `EAT_THREADS`, defaulting to 1.
pub fn threads_from_env() -> usize {
    std::env::var("EAT_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(1)
}

/// Applies `f` to every item on up to `threads` scoped workers. Results come
/// back in input order, so output is independent of the worker count.
pub fn map_ordered<T, R, Fun>(items: &[T], threads: usize, f: Fun) -> Vec<R>
where
    T: Sync,
    R: Send,
    Fun: Fn(&T) -> R + Sync,
{
    let threads = threads.max(1).min(items.len().max(1));
    if threads == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| {
                let f = &f;
                scope.spawn(move || part.iter().map(f).collect::<Vec<R>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}
