//! Replication driver.
//!
//! Replicate `i` of a run seeded with `seed` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` switched to stream `i`. Streams are
//! addressed by counter, so a replicate's randomness does not depend on which
//! worker runs it or in what order, and outputs come back in replicate order.
//! With the `parallel` feature the replicates are spread over the rayon pool;
//! without it they run in a plain loop.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random stream for one replicate.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Runs `f` for every replicate in `0..reps`, always on the calling thread.
pub fn replicate_sequential<T, F>(seed: u64, reps: u64, f: F) -> Vec<T>
where
    F: Fn(u64, &mut ChaCha8Rng) -> T,
{
    (0..reps)
        .map(|i| f(i, &mut replicate_rng(seed, i)))
        .collect()
}

/// Runs `f` for every replicate in `0..reps` on the rayon pool.
#[cfg(feature = "parallel")]
pub fn replicate_parallel<T, F>(seed: u64, reps: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..reps)
        .into_par_iter()
        .map(|i| f(i, &mut replicate_rng(seed, i)))
        .collect()
}

/// Runs every replicate, in parallel when the `parallel` feature is on.
#[cfg(feature = "parallel")]
pub fn replicate<T, F>(seed: u64, reps: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync + Send,
{
    replicate_parallel(seed, reps, f)
}

#[cfg(not(feature = "parallel"))]
pub fn replicate<T, F>(seed: u64, reps: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync + Send,
{
    replicate_sequential(seed, reps, f)
}

/// Number of worker threads replicates will use.
pub fn worker_count() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_order_independent() {
        let seq = replicate_sequential(42, 64, |_, rng| rng.random::<u64>());
        let any = replicate(42, 64, |_, rng| rng.random::<u64>());
        assert_eq!(seq, any);
        let reversed: Vec<u64> = (0..64u64)
            .rev()
            .map(|i| replicate_rng(42, i).random::<u64>())
            .collect();
        assert_eq!(seq.iter().rev().copied().collect::<Vec<_>>(), reversed);
        assert_ne!(seq[0], seq[1]);
    }
}
