//! Execution policy: sequential or thread-parallel map over independent work
//! items, with order-deterministic collection.
//!
//! Results are keyed by item index and reduced in index order by callers, so a
//! run produces bit-identical output regardless of worker count. With the
//! `parallel` feature disabled, `Parallel` silently degrades to `Sequential`.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecPolicy {
    Sequential,
    /// Thread pool with the given size; 0 means "let the runtime decide".
    Parallel { threads: usize },
}

impl Default for ExecPolicy {
    fn default() -> Self {
        ExecPolicy::Parallel { threads: 0 }
    }
}

impl ExecPolicy {
    pub fn from_workers(workers: usize) -> Self {
        match workers {
            1 => ExecPolicy::Sequential,
            n => ExecPolicy::Parallel { threads: n },
        }
    }

    /// Map `f` over `0..n`, returning results in index order.
    pub fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match *self {
            ExecPolicy::Sequential => (0..n).map(f).collect(),
            ExecPolicy::Parallel { threads } => parallel_map(n, threads, f),
        }
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let run = || (0..n).into_par_iter().map(&f).collect();
    if threads == 0 {
        run()
    } else {
        // A dedicated pool so the requested width is honored even when the
        // global pool was already initialized with a different size.
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(n: usize, _threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        // A reduction whose result depends on evaluation order would differ
        // between policies; index-ordered collection must not.
        let work = |i: usize| {
            let x = (i as f64 + 0.5).sin() * 1e-3;
            x * x + x.cos()
        };
        let a = ExecPolicy::Sequential.map_indexed(257, work);
        let b = ExecPolicy::Parallel { threads: 4 }.map_indexed(257, work);
        let c = ExecPolicy::Parallel { threads: 3 }.map_indexed(257, work);
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn empty_and_single() {
        let v = ExecPolicy::default().map_indexed(0, |i| i);
        assert!(v.is_empty());
        let v = ExecPolicy::Sequential.map_indexed(1, |i| i + 7);
        assert_eq!(v, vec![7]);
    }
}
