//! Running moments and deterministic parallel trial blocks.

use std::ops::Range;

use rayon::prelude::*;

/// Trials per work unit. Block boundaries are fixed, so any number of
/// workers produces bit-identical reductions.
pub const TRIAL_BLOCK: u64 = 64;

/// Mean and variance accumulator (Welford, merged with Chan's rule).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunningStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Runs `work` over fixed blocks of trial indices in parallel and returns the
/// per-block results in trial order.
pub fn map_trial_blocks<T, F>(trials: u64, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync + Send,
{
    let blocks = trials.div_ceil(TRIAL_BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * TRIAL_BLOCK;
            work(start..(start + TRIAL_BLOCK).min(trials))
        })
        .collect()
}

/// Binomial standard error `√(p(1−p)/n)`.
pub fn binomial_stderr(p: f64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (p * (1.0 - p) / n as f64).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn merge_matches_sequential(xs in prop::collection::vec(-1e3f64..1e3, 1..200), split in 0usize..200) {
            let split = split.min(xs.len());
            let mut all = RunningStats::default();
            xs.iter().for_each(|&x| all.push(x));
            let (mut a, mut b) = (RunningStats::default(), RunningStats::default());
            xs[..split].iter().for_each(|&x| a.push(x));
            xs[split..].iter().for_each(|&x| b.push(x));
            a.merge(&b);
            prop_assert_eq!(a.count(), all.count());
            prop_assert!((a.mean() - all.mean()).abs() <= 1e-9 * (1.0 + all.mean().abs()));
            prop_assert!((a.variance() - all.variance()).abs() <= 1e-7 * (1.0 + all.variance()));
        }
    }

    #[test]
    fn blocks_cover_all_trials_in_order() {
        let blocks = map_trial_blocks(200, |r| r);
        assert_eq!(blocks.first().unwrap().start, 0);
        assert_eq!(blocks.last().unwrap().end, 200);
        for w in blocks.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
    }

    #[test]
    fn reduction_independent_of_worker_count() {
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                let parts = map_trial_blocks(1000, |r| {
                    let mut s = RunningStats::default();
                    r.for_each(|t| s.push((t as f64).sin()));
                    s
                });
                let mut s = RunningStats::default();
                parts.iter().for_each(|p| s.merge(p));
                (s.mean().to_bits(), s.variance().to_bits())
            })
        };
        assert_eq!(run(1), run(3));
    }
}
