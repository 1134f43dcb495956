//! Data-parallel helpers. With the `parallel` feature the batch loops run on the
//! rayon pool; without it, or with [`Exec::Sequential`], they run in order on
//! the calling thread. Results are always collected in index order, so the
//! output never depends on the schedule.

/// Execution policy for batch loops (per-mode solves, sweeps, samples).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Maps `f` over `0..n`, collecting results in index order.
pub fn map_range<R, F>(exec: Exec, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Maps `f` over a slice, collecting results in order.
pub fn map_slice<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Applies `f` to each chunk of `data` of length `chunk`.
pub fn for_each_chunk_mut<T, F>(exec: Exec, data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
        return;
    }
    let _ = exec;
    data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

/// Runs two closures, concurrently when allowed.
pub fn join<A, B, RA, RB>(exec: Exec, a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return rayon::join(a, b);
    }
    let _ = exec;
    (a(), b())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_schedule_independent() {
        let seq = map_range(Exec::Sequential, 1000, |i| (i as f64).sqrt());
        let par = map_range(Exec::Parallel, 1000, |i| (i as f64).sqrt());
        assert_eq!(seq, par);
    }

    #[test]
    fn chunks_visit_every_element() {
        let mut v = vec![0usize; 64];
        for_each_chunk_mut(Exec::Parallel, &mut v, 8, |i, c| c.iter_mut().for_each(|x| *x = i));
        assert_eq!(v[63], 7);
        assert_eq!(v[8], 1);
    }
}
