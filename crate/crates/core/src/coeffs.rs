//! Scalar coefficient sequences θ, θ̃ and φ.
//!
//! * θ₀ = 1, θₖ₊₁ = (1 + √(4θₖ² + 1)) / 2
//! * θ̃ₖ = (1 + √(8θₖ₋₁² + 1)) / 2 for k ≥ 1
//! * φ₀ = 0, φₖ₊₁ = φₖ + 1 + √(1 + φₖ), the positive root of
//!   (2φₖ₊₁ − φₖ) = (φₖ₊₁ − φₖ)²
//!
//! Values are cached in a shared table that grows geometrically on demand.

use crate::error::{Error, Result};
use std::sync::{OnceLock, RwLock};

/// Largest index the table will extend to.
pub const MAX_INDEX: usize = 10_000_000;

#[derive(Debug, Default)]
struct Seqs {
    theta: Vec<f64>,
    phi: Vec<f64>,
}

impl Seqs {
    fn extend_to(&mut self, k: usize) {
        if self.theta.is_empty() {
            self.theta.push(1.0);
            self.phi.push(0.0);
        }
        let target = (k + 1).max(2 * self.theta.len()).min(MAX_INDEX + 1);
        while self.theta.len() < target {
            let t = *self.theta.last().unwrap();
            self.theta.push(theta_next(t));
            let p = *self.phi.last().unwrap();
            self.phi.push(phi_next(p));
        }
    }
}

/// One step of the θ recurrence.
pub fn theta_next(t: f64) -> f64 {
    (1.0 + (4.0 * t * t + 1.0).sqrt()) / 2.0
}

/// One step of the φ recurrence.
pub fn phi_next(p: f64) -> f64 {
    p + 1.0 + (1.0 + p).sqrt()
}

/// θ̃ from θₖ₋₁.
pub fn theta_tilde_from(theta_prev: f64) -> f64 {
    (1.0 + (8.0 * theta_prev * theta_prev + 1.0).sqrt()) / 2.0
}

/// Memoized θ, θ̃, φ table. Reads take a shared lock; extension takes the
/// write lock, so concurrent readers always observe identical values.
#[derive(Debug, Default)]
pub struct CoefficientTable {
    inner: RwLock<Seqs>,
}

impl CoefficientTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Process-wide shared table.
    pub fn global() -> &'static CoefficientTable {
        static TABLE: OnceLock<CoefficientTable> = OnceLock::new();
        TABLE.get_or_init(CoefficientTable::new)
    }

    fn check(k: usize) -> Result<()> {
        if k > MAX_INDEX {
            return Err(Error::IndexTooLarge { index: k, cap: MAX_INDEX });
        }
        Ok(())
    }

    fn read<F: Fn(&Seqs) -> f64>(&self, k: usize, f: F) -> Result<f64> {
        Self::check(k)?;
        {
            let guard = self.inner.read().expect("coefficient lock poisoned");
            if k < guard.theta.len() {
                return Ok(f(&guard));
            }
        }
        let mut guard = self.inner.write().expect("coefficient lock poisoned");
        if k >= guard.theta.len() {
            guard.extend_to(k);
        }
        Ok(f(&guard))
    }

    pub fn theta(&self, k: usize) -> Result<f64> {
        self.read(k, |s| s.theta[k])
    }

    pub fn theta_tilde(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::OutOfDomain { sequence: "theta_tilde", index: 0 });
        }
        Ok(theta_tilde_from(self.theta(k - 1)?))
    }

    pub fn phi(&self, k: usize) -> Result<f64> {
        self.read(k, |s| s.phi[k])
    }

    /// θ₀..θₙ inclusive.
    pub fn theta_range(&self, n: usize) -> Result<Vec<f64>> {
        self.theta(n)?;
        let guard = self.inner.read().expect("coefficient lock poisoned");
        Ok(guard.theta[..=n].to_vec())
    }

    /// φ₀..φₙ inclusive.
    pub fn phi_range(&self, n: usize) -> Result<Vec<f64>> {
        self.phi(n)?;
        let guard = self.inner.read().expect("coefficient lock poisoned");
        Ok(guard.phi[..=n].to_vec())
    }

    /// Number of cached entries.
    pub fn cached_len(&self) -> usize {
        self.inner.read().expect("coefficient lock poisoned").theta.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors() {
        let t = CoefficientTable::new();
        assert_eq!(t.theta(0).unwrap(), 1.0);
        assert!((t.theta(1).unwrap() - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-15);
        assert_eq!(t.theta_tilde(1).unwrap(), 2.0);
        assert_eq!(t.phi(0).unwrap(), 0.0);
        assert_eq!(t.phi(1).unwrap(), 2.0);
        assert!((t.phi(2).unwrap() - (3.0 + 3f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn domain_errors() {
        let t = CoefficientTable::new();
        assert!(matches!(t.theta_tilde(0), Err(Error::OutOfDomain { .. })));
        assert!(matches!(t.phi(MAX_INDEX + 1), Err(Error::IndexTooLarge { .. })));
    }

    #[test]
    fn cache_grows_geometrically() {
        let t = CoefficientTable::new();
        t.theta(10).unwrap();
        let n = t.cached_len();
        t.theta(n).unwrap();
        assert!(t.cached_len() >= 2 * n);
    }
}
