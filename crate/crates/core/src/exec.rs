//! Worker-pool control for the sweeps. The worker count bounds scheduling
//! only; results are byte-identical at any setting.

/// Run `f` inside a dedicated pool of `workers` threads. `None` or zero
/// uses the process-global default pool.
#[cfg(feature = "parallel")]
pub fn with_worker_pool<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match workers {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("failed to build worker pool")
            .install(f),
        _ => f(),
    }
}

/// Without the `parallel` feature everything runs on the calling thread.
#[cfg(not(feature = "parallel"))]
pub fn with_worker_pool<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    let _ = workers;
    f()
}
