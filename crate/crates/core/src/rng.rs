//! SplitMix64 generator and the coordinate sampler built on it.
//!
//! The generator is fixed here rather than pulled from a crate so that draws
//! are identical across platforms and dependency upgrades.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal via Box–Muller (one value per call).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn normal_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.normal()).collect()
    }
}

/// Samples coordinate i with probability √Lᵢ / S, S = Σ √Lₖ.
#[derive(Debug, Clone)]
pub struct CoordinateSampler {
    probs: Vec<f64>,
    cdf: Vec<f64>,
    s: f64,
    rng: SplitMix64,
}

impl CoordinateSampler {
    pub fn new(coordinate_l: &[f64], seed: u64) -> Result<Self> {
        if coordinate_l.is_empty() {
            return Err(Error::MissingCoordinateData);
        }
        if coordinate_l.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::InvalidArgument("coordinate constants must be positive".into()));
        }
        let roots: Vec<f64> = coordinate_l.iter().map(|l| l.sqrt()).collect();
        let s: f64 = roots.iter().sum();
        let probs: Vec<f64> = roots.iter().map(|r| r / s).collect();
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cdf.push(acc);
        }
        Ok(Self { probs, cdf, s, rng: SplitMix64::new(seed) })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// S = Σ √Lᵢ.
    pub fn s(&self) -> f64 {
        self.s
    }

    /// Inverse-CDF draw; a uniform landing exactly on a boundary selects the
    /// lower index.
    pub fn sample(&mut self) -> usize {
        let u = self.rng.next_f64() * self.cdf[self.cdf.len() - 1];
        Self::locate(&self.cdf, u)
    }

    fn locate(cdf: &[f64], u: f64) -> usize {
        cdf.iter().position(|&c| u <= c).unwrap_or(cdf.len() - 1)
    }
}
