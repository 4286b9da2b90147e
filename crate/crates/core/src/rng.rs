//! Counter-based random number generation (Philox4x64-10) and Gaussian
//! sampling.
//!
//! Every random number in the simulator is a pure function of
//! (seed, purpose, trajectory, step, entry, substep), so ensembles are
//! reproducible bit-for-bit regardless of how trajectories are scheduled
//! across worker threads, and a single trajectory can be resampled in
//! isolation. The generator is the standard 10-round Philox4x64 bijection;
//! each 256-bit block feeds one Box–Muller transform, yielding the two
//! independent unit normals that make up one complex matrix entry.

use num_complex::Complex64;

use crate::linalg::ComplexMatrix;

/// Philox4x64 round multipliers.
const M0: u64 = 0xD2E7470EE14C6C93;
const M1: u64 = 0xCA5A826395121157;
/// Weyl key-schedule increments (golden ratio and √3 − 1 in 0.64 fixed point).
const W0: u64 = 0x9E3779B97F4A7C15;
const W1: u64 = 0xBB67AE8584CAA73B;
const ROUNDS: usize = 10;

/// Domain separator baked into the key so that logically distinct consumers
/// of the same seed never share a stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    /// Driving noise dM for trajectory evolution.
    Increments = 1,
    /// Synthetic matrix fixtures (initial conditions, test inputs).
    Fixtures = 2,
    /// One-step conditional moment sampling in the SDE verifier.
    OneStep = 3,
}

/// Keyed Philox4x64-10 instance.
#[derive(Clone, Copy, Debug)]
pub struct Philox {
    key: [u64; 2],
}

#[inline]
fn mulhilo(a: u64, b: u64) -> (u64, u64) {
    let p = (a as u128) * (b as u128);
    ((p >> 64) as u64, p as u64)
}

impl Philox {
    /// Key the generator with a user seed and a purpose separator.
    pub fn new(seed: u64, purpose: Purpose) -> Self {
        Philox {
            key: [seed, purpose as u64],
        }
    }

    /// The 10-round Philox4x64 block function: counter → 256 random bits.
    pub fn block(&self, counter: [u64; 4]) -> [u64; 4] {
        let mut x = counter;
        let mut k = self.key;
        for _ in 0..ROUNDS {
            let (hi0, lo0) = mulhilo(M0, x[0]);
            let (hi1, lo1) = mulhilo(M1, x[2]);
            x = [hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0];
            k[0] = k[0].wrapping_add(W0);
            k[1] = k[1].wrapping_add(W1);
        }
        x
    }
}

/// Map 64 random bits to the open interval (0, 1): the top 52 bits plus a
/// half offset, k + 0.5 being exactly representable for every k < 2⁵², so
/// the result lies in [2⁻⁵³, 1 − 2⁻⁵³] and log(u) is always finite.
#[inline]
pub fn u64_to_unit(x: u64) -> f64 {
    ((x >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Box–Muller: two uniform words → two independent standard normals.
#[inline]
pub fn normal_pair(w0: u64, w1: u64) -> (f64, f64) {
    let u0 = u64_to_unit(w0);
    let u1 = u64_to_unit(w1);
    let r = (-2.0 * u0.ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u1;
    (r * theta.cos(), r * theta.sin())
}

/// A deterministic Gaussian stream addressed by (trajectory, step, entry,
/// substep). One Philox block per address; words 0 and 1 feed Box–Muller.
#[derive(Clone, Copy, Debug)]
pub struct NoiseStream {
    philox: Philox,
}

impl NoiseStream {
    pub fn new(seed: u64, purpose: Purpose) -> Self {
        NoiseStream {
            philox: Philox::new(seed, purpose),
        }
    }

    /// Two independent standard normals at the given address.
    #[inline]
    pub fn gauss_pair(&self, traj: u64, step: u64, entry: u64, substep: u64) -> (f64, f64) {
        let b = self.philox.block([traj, step, entry, substep]);
        normal_pair(b[0], b[1])
    }

    /// n×n matrix with independent entries scale·(g_R + i·g_I), g standard
    /// normal. With scale = √(dt/2n) this is the Brownian increment dM;
    /// with scale = √(t/2n) it is a Ginibre-distributed M(t) started from 0.
    pub fn gaussian_matrix(
        &self,
        n: usize,
        traj: u64,
        step: u64,
        substep: u64,
        scale: f64,
    ) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(n);
        for j in 0..n {
            for k in 0..n {
                let entry = (j * n + k) as u64;
                let (gr, gi) = self.gauss_pair(traj, step, entry, substep);
                m[(j, k)] = Complex64::new(scale * gr, scale * gi);
            }
        }
        m
    }
}
