//! Deterministic, platform-independent pseudo-random data for tests,
//! sweeps, and set generation. Counter-based: every value is a pure
//! function of (seed, counter), so results are reproducible regardless
//! of worker count or call order.

use num_complex::Complex64;

use crate::transform::{GridFn, Side};

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Uniform f64 in [0,1) from (seed, counter).
#[inline]
pub fn unit_f64(seed: u64, counter: u64) -> f64 {
    let h = mix64(seed ^ mix64(counter));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// A tiny sequential generator for places where a stream is more natural.
#[derive(Debug, Clone)]
pub struct SplitMix {
    state: u64,
}

impl SplitMix {
    pub fn new(seed: u64) -> Self {
        SplitMix { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        mix64(self.state)
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in 0..n.
    pub fn next_below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }
}

/// Random complex-valued 2-D grid with entries uniform in the unit square
/// [-1,1] x [-1,1]i.
pub fn random_complex_grid(p: u64, seed: u64) -> GridFn {
    let mut rng = SplitMix::new(seed);
    let values = (0..p * p)
        .map(|_| Complex64::new(2.0 * rng.next_f64() - 1.0, 2.0 * rng.next_f64() - 1.0))
        .collect();
    GridFn::from_values(p, 2, Side::Physical, values).unwrap()
}

/// Random +-1-valued real 2-D grid.
pub fn random_pm1_grid(p: u64, seed: u64) -> GridFn {
    let mut rng = SplitMix::new(seed);
    let values = (0..p * p)
        .map(|_| Complex64::new(if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 }, 0.0))
        .collect();
    GridFn::from_values(p, 2, Side::Physical, values).unwrap()
}

/// Random [0,1]-valued real 2-D grid.
pub fn random_unit_interval_grid(p: u64, seed: u64) -> GridFn {
    let mut rng = SplitMix::new(seed);
    let values = (0..p * p)
        .map(|_| Complex64::new(rng.next_f64(), 0.0))
        .collect();
    GridFn::from_values(p, 2, Side::Physical, values).unwrap()
}

/// Random complex 1-D function on F_p.
pub fn random_complex_line(p: u64, seed: u64) -> Vec<Complex64> {
    let mut rng = SplitMix::new(seed);
    (0..p)
        .map(|_| Complex64::new(2.0 * rng.next_f64() - 1.0, 2.0 * rng.next_f64() - 1.0))
        .collect()
}
