//! Execution strategy for the data-parallel loops.
//!
//! Without the `parallel` feature, [`Execution::Parallel`] runs the same
//! sequential code as [`Execution::Sequential`].

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run loops concurrently.
    pub const fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }

    pub fn map_range<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
            _ => (0..n).map(f).collect(),
        }
    }

    pub fn try_map_range<T, E, F>(self, n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
            _ => (0..n).map(f).collect(),
        }
    }

    /// Maximum of `f` over `0..n`; `0.0` for an empty range. NaN values are
    /// ignored by `f64::max`.
    pub fn max_range<F>(self, n: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..n).into_par_iter().map(f).reduce(|| 0.0, f64::max),
            _ => (0..n).map(f).fold(0.0, f64::max),
        }
    }

    /// Calls `f(index, chunk)` on consecutive `chunk_len`-sized pieces of `data`.
    pub fn for_each_chunk_mut<T, F>(self, data: &mut [T], chunk_len: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => data
                .par_chunks_mut(chunk_len)
                .enumerate()
                .for_each(|(i, c)| f(i, c)),
            _ => data
                .chunks_mut(chunk_len)
                .enumerate()
                .for_each(|(i, c)| f(i, c)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree() {
        for exec in [Execution::Sequential, Execution::Parallel] {
            assert_eq!(exec.map_range(5, |i| i * i), vec![0, 1, 4, 9, 16]);
            assert_eq!(exec.max_range(4, |i| (i as f64 - 1.5).abs()), 1.5);
            assert_eq!(exec.max_range(0, |_| 1.0), 0.0);
            let mut v = vec![0usize; 6];
            exec.for_each_chunk_mut(&mut v, 2, |i, c| c.iter_mut().for_each(|x| *x = i));
            assert_eq!(v, vec![0, 0, 1, 1, 2, 2]);
            let r: Result<Vec<usize>, &str> =
                exec.try_map_range(3, |i| if i == 2 { Err("two") } else { Ok(i) });
            assert_eq!(r, Err("two"));
        }
    }
}
