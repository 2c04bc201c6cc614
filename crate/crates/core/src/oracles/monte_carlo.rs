//! Seeded Monte Carlo over quasi-static fading draws.
//!
//! Trials are split into a fixed number of partitions. Partition `p` draws
//! from ChaCha8 seeded with `seed` on stream `p`, so every random number is a
//! pure function of `(seed, partition, counter)`. Partitions run on the rayon
//! pool and their statistics are merged in partition order, which makes the
//! estimate bit-identical for a fixed `(seed, trials, partitions)` no matter
//! how many threads execute it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use super::{Method, OutageEstimate};
use crate::error::{Error, Result};
use crate::fb_core::outage_at_snr;

pub const MIN_TRIALS: u64 = 10_000;
pub const DEFAULT_PARTITIONS: u32 = 64;

pub type McRng = ChaCha8Rng;

/// How one fading draw contributes to the estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum McMode {
    /// Average the per-draw error probability itself.
    #[default]
    Soft,
    /// Draw a packet error with the per-draw probability and average the
    /// 0/1 outcomes.
    Bernoulli,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarlo {
    pub trials: u64,
    pub seed: u64,
    pub partitions: u32,
    pub mode: McMode,
}

impl MonteCarlo {
    pub fn new(trials: u64, seed: u64) -> Result<Self> {
        if trials < MIN_TRIALS {
            return Err(Error::domain("trials", format!("need at least {MIN_TRIALS} trials, got {trials}")));
        }
        Ok(MonteCarlo {
            trials,
            seed,
            partitions: DEFAULT_PARTITIONS,
            mode: McMode::Soft,
        })
    }

    pub fn with_partitions(mut self, partitions: u32) -> Result<Self> {
        if partitions == 0 {
            return Err(Error::domain("partitions", "need at least one partition"));
        }
        self.partitions = partitions;
        Ok(self)
    }

    pub fn with_mode(mut self, mode: McMode) -> Self {
        self.mode = mode;
        self
    }

    /// Averages `per_draw` (an error probability in [0, 1] for one joint
    /// fading realization) over all trials.
    pub fn run<F>(&self, per_draw: F) -> OutageEstimate
    where
        F: Fn(&mut McRng) -> f64 + Sync,
    {
        let parts = u64::from(self.partitions).min(self.trials);
        let base = self.trials / parts;
        let extra = self.trials % parts;
        let mode = self.mode;
        let stats: Vec<Moments> = (0..parts)
            .into_par_iter()
            .map(|p| {
                let count = base + u64::from(p < extra);
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(p);
                let mut m = Moments::default();
                for _ in 0..count {
                    let q = per_draw(&mut rng);
                    let x = match mode {
                        McMode::Soft => q,
                        McMode::Bernoulli => f64::from(u8::from(rng.random::<f64>() < q)),
                    };
                    m.push(x);
                }
                m
            })
            .collect();

        let total = stats.iter().fold(Moments::default(), |acc, m| acc.merge(m));
        let var = if total.count > 1 {
            total.m2 / (total.count - 1) as f64
        } else {
            0.0
        };
        OutageEstimate {
            value: total.mean.clamp(0.0, 1.0),
            method: Method::MonteCarlo,
            std_error: Some((var / total.count as f64).sqrt()),
            trials: Some(self.trials),
            seed: Some(self.seed),
        }
    }
}

/// Running mean and sum of squared deviations (Welford/Chan).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: &Moments) -> Moments {
        if other.count == 0 {
            return self;
        }
        if self.count == 0 {
            return *other;
        }
        let n = self.count + other.count;
        let d = other.mean - self.mean;
        let (na, nb) = (self.count as f64, other.count as f64);
        Moments {
            count: n,
            mean: self.mean + d * nb / n as f64,
            m2: self.m2 + other.m2 + d * d * na * nb / n as f64,
        }
    }
}

/// Unit-mean exponential draw (|h|^2 of a Rayleigh coefficient).
#[inline]
pub fn draw_gain(rng: &mut McRng) -> f64 {
    rng.sample(Exp1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum McLink {
    SingleRayleigh { mean: f64 },
    MrcPair { omega_z: f64, omega_y: f64 },
}

/// Monte Carlo estimate of the exact-`Q` outage of one link.
pub fn fading_outage_mc(n: f64, rate: f64, link: McLink, trials: u64, seed: u64) -> Result<OutageEstimate> {
    let mc = MonteCarlo::new(trials, seed)?;
    fading_outage_mc_with(n, rate, link, &mc)
}

pub fn fading_outage_mc_with(n: f64, rate: f64, link: McLink, mc: &MonteCarlo) -> Result<OutageEstimate> {
    if !(n.is_finite() && n >= 1.0) {
        return Err(Error::domain("n", format!("expected n >= 1, got {n}")));
    }
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::domain("rate", format!("expected finite rate > 0, got {rate}")));
    }
    let est = match link {
        McLink::SingleRayleigh { mean } => {
            check_mean("mean", mean)?;
            mc.run(|rng| outage_at_snr(n, rate, mean * draw_gain(rng)))
        }
        McLink::MrcPair { omega_z, omega_y } => {
            check_mean("omega_z", omega_z)?;
            check_mean("omega_y", omega_y)?;
            mc.run(|rng| {
                let w = omega_z * draw_gain(rng) + omega_y * draw_gain(rng);
                outage_at_snr(n, rate, w)
            })
        }
    };
    Ok(est)
}

fn check_mean(field: &'static str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::domain(field, format!("expected a finite positive mean, got {v}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_few_trials() {
        assert!(fading_outage_mc(500.0, 0.5, McLink::SingleRayleigh { mean: 10.0 }, 9_999, 1).is_err());
    }

    #[test]
    fn saturated_links() {
        let e = fading_outage_mc(500.0, 50.0, McLink::SingleRayleigh { mean: 1.0 }, 20_000, 3).unwrap();
        assert!(e.value >= 1.0 - 1e-6);
        assert!(e.std_error.unwrap() < 1e-6);
        let e = fading_outage_mc(500.0, 0.5, McLink::SingleRayleigh { mean: 1e9 }, 20_000, 3).unwrap();
        assert!(e.value <= 1e-6);
    }

    #[test]
    fn reproducible_bit_for_bit() {
        let link = McLink::MrcPair { omega_z: 7.0, omega_y: 3.0 };
        let a = fading_outage_mc(500.0, 0.5, link, 50_000, 42).unwrap();
        let b = fading_outage_mc(500.0, 0.5, link, 50_000, 42).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.std_error.unwrap().to_bits(), b.std_error.unwrap().to_bits());
        let c = fading_outage_mc(500.0, 0.5, link, 50_000, 43).unwrap();
        assert_ne!(a.value, c.value);
    }

    #[test]
    fn thread_count_does_not_matter() {
        let mc = MonteCarlo::new(30_000, 9).unwrap();
        let link = McLink::SingleRayleigh { mean: 4.0 };
        let many = fading_outage_mc_with(200.0, 1.0, link, &mc).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let one = pool.install(|| fading_outage_mc_with(200.0, 1.0, link, &mc).unwrap());
        assert_eq!(many.value.to_bits(), one.value.to_bits());
    }

    #[test]
    fn bernoulli_mode_is_unbiased_but_noisier() {
        let link = McLink::SingleRayleigh { mean: 10.0 };
        let soft = MonteCarlo::new(200_000, 5).unwrap();
        let hard = soft.with_mode(McMode::Bernoulli);
        let s = fading_outage_mc_with(500.0, 0.5, link, &soft).unwrap();
        let h = fading_outage_mc_with(500.0, 0.5, link, &hard).unwrap();
        assert!(h.std_error.unwrap() > s.std_error.unwrap());
        let se = h.std_error.unwrap().hypot(s.std_error.unwrap());
        assert!((h.value - s.value).abs() < 5.0 * se);
    }

    #[test]
    fn moments_merge_matches_sequential() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 101.0).collect();
        let mut seq = Moments::default();
        xs.iter().for_each(|&x| seq.push(x));
        let (a, b) = xs.split_at(333);
        let mut ma = Moments::default();
        a.iter().for_each(|&x| ma.push(x));
        let mut mb = Moments::default();
        b.iter().for_each(|&x| mb.push(x));
        let m = ma.merge(&mb);
        assert!((m.mean - seq.mean).abs() < 1e-14);
        assert!((m.m2 - seq.m2).abs() < 1e-10);
    }
}
