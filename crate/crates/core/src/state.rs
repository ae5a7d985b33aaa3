//! Canonical phase-space states and model parameters.

use crate::error::EvalError;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// N canonical pairs `(q, p)`; the point at which every observable is
/// evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    q: Vec<f64>,
    p: Vec<f64>,
}

impl PhaseState {
    /// Build a state, enforcing equal lengths and finite entries.
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self, EvalError> {
        if q.len() != p.len() {
            return Err(EvalError::MismatchedState {
                positions: q.len(),
                momenta: p.len(),
            });
        }
        if q.is_empty() {
            return Err(EvalError::EmptyState);
        }
        if q.iter().chain(p.iter()).any(|x| !x.is_finite()) {
            return Err(EvalError::NonFinite);
        }
        Ok(PhaseState { q, p })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// Flat `[q..., p...]` vector of length 2N.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.dim());
        v.extend_from_slice(&self.q);
        v.extend_from_slice(&self.p);
        v
    }

    /// Inverse of [`PhaseState::to_flat`].
    pub fn from_flat(x: &[f64]) -> Result<Self, EvalError> {
        let n = x.len() / 2;
        PhaseState::new(x[..n].to_vec(), x[n..].to_vec())
    }

    /// Same sites in reverse order (q, p reversed together).
    pub fn reversed(&self) -> Self {
        let mut q = self.q.clone();
        let mut p = self.p.clone();
        q.reverse();
        p.reverse();
        PhaseState { q, p }
    }

    /// State with negated momenta, for time-reversal checks.
    pub fn momentum_reversed(&self) -> Self {
        PhaseState {
            q: self.q.clone(),
            p: self.p.iter().map(|x| -x).collect(),
        }
    }
}

/// Deformation, signature and coupling parameters of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Deformation parameter; `z = 0` is the undeformed limit.
    pub z: f64,
    /// Centrifugal coefficients, one per site.
    pub b: Vec<f64>,
    /// Signature parameter κ₂ = λ₂²; negative values select Lorentzian
    /// signature at the geometry level. Must be nonzero.
    pub kappa2: f64,
    /// Oscillator constant ω ≥ 0.
    pub omega: f64,
    /// Kepler constant.
    pub k: f64,
}

impl ModelParams {
    /// Free system: no centrifugal terms, no couplings, Euclidean signature.
    pub fn free(n: usize, z: f64) -> Self {
        ModelParams {
            z,
            b: vec![0.0; n],
            kappa2: 1.0,
            omega: 0.0,
            k: 0.0,
        }
    }

    pub fn with_b(mut self, b: Vec<f64>) -> Self {
        self.b = b;
        self
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.k = k;
        self
    }

    pub fn validate(&self, n: usize) -> Result<(), EvalError> {
        if self.b.len() != n {
            return Err(EvalError::DimensionMismatch {
                state: n,
                expected: self.b.len(),
            });
        }
        if self.kappa2 == 0.0 {
            return Err(EvalError::Domain("kappa2 must be nonzero".into()));
        }
        if !self.z.is_finite()
            || !self.kappa2.is_finite()
            || !self.omega.is_finite()
            || !self.k.is_finite()
            || self.b.iter().any(|x| !x.is_finite())
        {
            return Err(EvalError::NonFinite);
        }
        Ok(())
    }

    /// Check a state against the singular set of the realization: sites with
    /// `b_i ≠ 0` must keep `q_i ≠ 0`.
    pub fn check_regular(&self, state: &PhaseState) -> Result<(), EvalError> {
        for (i, (&qi, &bi)) in state.q().iter().zip(self.b.iter()).enumerate() {
            if bi != 0.0 && qi == 0.0 {
                return Err(EvalError::SingularConfiguration { index: i, b: bi });
            }
        }
        Ok(())
    }
}

/// Sampling box for random regular states, kept away from the `q_i = 0`
/// singularities: `q_i ∈ [0.2, 1.2]`, `p_i ∈ [-1, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct SampleBox {
    pub q_lo: f64,
    pub q_hi: f64,
    pub p_lo: f64,
    pub p_hi: f64,
}

impl Default for SampleBox {
    fn default() -> Self {
        SampleBox {
            q_lo: 0.2,
            q_hi: 1.2,
            p_lo: -1.0,
            p_hi: 1.0,
        }
    }
}

/// Seeded, reproducible stream of random states in a box.
pub struct StateSampler {
    rng: ChaCha8Rng,
    n: usize,
    bx: SampleBox,
}

impl StateSampler {
    pub fn new(n: usize, seed: u64) -> Self {
        StateSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            n,
            bx: SampleBox::default(),
        }
    }

    pub fn with_box(mut self, bx: SampleBox) -> Self {
        self.bx = bx;
        self
    }

    pub fn next_state(&mut self) -> PhaseState {
        let q = (0..self.n)
            .map(|_| self.rng.random_range(self.bx.q_lo..self.bx.q_hi))
            .collect();
        let p = (0..self.n)
            .map(|_| self.rng.random_range(self.bx.p_lo..self.bx.p_hi))
            .collect();
        PhaseState::new(q, p).expect("sample box yields valid states")
    }

    pub fn take(&mut self, count: usize) -> Vec<PhaseState> {
        (0..count).map(|_| self.next_state()).collect()
    }
}
