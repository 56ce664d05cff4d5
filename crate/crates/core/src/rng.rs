//! Addressable complex Gaussian streams.
//!
//! Every trial owns a ChaCha8 stream keyed by `(seed, trial)`. Inside a trial,
//! each matrix occupies its own slot of the keystream and each complex entry
//! consumes exactly two 64-bit words (Box-Muller, no rejection), so entry `e`
//! of slot `s` always sits at word position `(s << SLOT_SHIFT) + 4 e`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

const SLOT_SHIFT: u32 = 40;
const WORDS_PER_ENTRY: u128 = 4;
const INV_2_53: f64 = 1.0 / (1u64 << 53) as f64;

/// Keystream regions reserved for each random object of a trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Slot {
    ChannelF = 0,
    ChannelG = 1,
    PilotNoiseF = 2,
    PilotNoiseG = 3,
    EstimateF = 4,
    EstimateG = 5,
    ErrorF = 6,
    ErrorG = 7,
    /// Conditionally Gaussian interference residuals of the reduced sampler.
    Residual = 8,
    /// Uniform draws such as the probed user index.
    Aux = 9,
    /// Strictly lower Bartlett factors of the reduced sampler.
    GramF = 10,
    GramG = 11,
    /// Bartlett diagonals (gamma variates, variable word consumption).
    GramDiagF = 12,
    GramDiagG = 13,
}

/// Random source for one trial.
#[derive(Clone, Debug)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, trial: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        Self { rng }
    }

    /// Positions the stream at entry `entry` of `slot`.
    pub fn seek(&mut self, slot: Slot, entry: u64) {
        let pos = ((slot as u128) << SLOT_SHIFT) + WORDS_PER_ENTRY * entry as u128;
        self.rng.set_word_pos(pos);
    }

    /// Next circularly-symmetric complex Gaussian with unit variance.
    #[inline]
    pub fn next_cn(&mut self) -> Complex64 {
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        box_muller(a, b)
    }

    /// Fills `out` with i.i.d. `CN(0, variance)` entries starting at `entry` of `slot`.
    pub fn fill_cn(&mut self, slot: Slot, entry: u64, variance: f64, out: &mut [Complex64]) {
        self.seek(slot, entry);
        let scale = variance.sqrt();
        for z in out.iter_mut() {
            *z = self.next_cn() * scale;
        }
    }

    /// Gamma variates with unit scale and the given shapes, drawn in order
    /// from the start of `slot`. Rejection sampling makes word usage
    /// data-dependent, so a slot holding gamma draws holds nothing else.
    pub fn fill_gamma(&mut self, slot: Slot, shapes: impl IntoIterator<Item = f64>, out: &mut [f64]) {
        self.seek(slot, 0);
        for (o, a) in out.iter_mut().zip(shapes) {
            *o = Gamma::new(a, 1.0).expect("gamma shape must be positive").sample(&mut self.rng);
        }
    }

    /// Uniform index in `0..n` drawn from the start of `slot`.
    pub fn uniform_index(&mut self, slot: Slot, n: usize) -> usize {
        self.seek(slot, 0);
        let u = (self.rng.next_u64() >> 11) as f64 * INV_2_53;
        ((u * n as f64) as usize).min(n - 1)
    }
}

#[inline]
fn box_muller(a: u64, b: u64) -> Complex64 {
    // u1 in (0, 1], u2 in [0, 1)
    let u1 = ((a >> 11) + 1) as f64 * INV_2_53;
    let u2 = (b >> 11) as f64 * INV_2_53;
    let r = (-u1.ln()).sqrt();
    let (s, c) = (TAU * u2).sin_cos();
    Complex64::new(r * c, r * s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_are_addressable() {
        let mut s = RngStream::new(7, 3);
        let mut block = vec![Complex64::default(); 16];
        s.fill_cn(Slot::ErrorG, 0, 1.0, &mut block);
        let mut tail = vec![Complex64::default(); 4];
        s.fill_cn(Slot::ErrorG, 9, 1.0, &mut tail);
        assert_eq!(&block[9..13], &tail[..]);
    }

    #[test]
    fn streams_differ_by_trial_and_slot() {
        let mut a = RngStream::new(1, 0);
        let mut b = RngStream::new(1, 1);
        a.seek(Slot::ChannelF, 0);
        b.seek(Slot::ChannelF, 0);
        assert_ne!(a.next_cn(), b.next_cn());
        a.seek(Slot::ChannelG, 0);
        let g = a.next_cn();
        a.seek(Slot::ChannelF, 0);
        assert_ne!(a.next_cn(), g);
    }

    #[test]
    fn unit_variance_and_circular() {
        let mut s = RngStream::new(42, 0);
        let mut v = vec![Complex64::default(); 200_000];
        s.fill_cn(Slot::ChannelF, 0, 1.0, &mut v);
        let n = v.len() as f64;
        let mean: Complex64 = v.iter().sum::<Complex64>() / n;
        let power = v.iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
        let pseudo: Complex64 = v.iter().map(|z| z * z).sum::<Complex64>() / n;
        assert!(mean.norm() < 0.01);
        assert!((power - 1.0).abs() < 0.01);
        assert!(pseudo.norm() < 0.01);
    }

    #[test]
    fn box_muller_never_takes_log_of_zero() {
        assert!(box_muller(0, 0).norm().is_finite());
        assert_eq!(box_muller(u64::MAX, 0).norm(), 0.0);
    }
}
