//! Deterministic random streams.
//!
//! Every random draw in a simulation comes from a ChaCha8 stream addressed by
//! `(seed, drop, role, index)`. The key is derived from `(seed, drop)` and the
//! 64-bit ChaCha stream id packs `(role, index)`, so any draw can be
//! regenerated independently of how work is split across threads, and a run
//! with fewer drops produces a prefix of a run with more.

use core::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::{Distribution, StandardNormal, StandardUniform};

/// What a stream is used for. Distinct roles never share draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Role {
    Geometry = 1,
    Shadowing = 2,
    /// Small-scale fading, uplink pilot noise and downlink pilot noise of one
    /// channel realization.
    ChannelSample = 3,
    /// Stand-alone draws used by diagnostics and moment checks.
    Diagnostic = 4,
}

const INDEX_BITS: u32 = 56;

/// Largest per-role index a stream can address.
pub const MAX_STREAM_INDEX: u64 = (1 << INDEX_BITS) - 1;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Opens the stream for `(seed, drop, role, index)`.
///
/// # Panics
///
/// If `index` exceeds [`MAX_STREAM_INDEX`].
pub fn stream(seed: u64, drop: u64, role: Role, index: u64) -> ChaCha8Rng {
    assert!(index <= MAX_STREAM_INDEX, "stream index out of range");
    let mut state = seed ^ splitmix64(&mut drop.clone()).rotate_left(17);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(((role as u64) << INDEX_BITS) | index);
    rng
}

/// Draws `CN(0, 1)`: independent real and imaginary parts with variance 1/2.
#[inline]
pub fn complex_normal<R: RngCore + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

#[inline]
pub fn standard_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Uniform draw on `[0, 1)`.
#[inline]
pub fn unit_uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    StandardUniform.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn first_words(mut rng: ChaCha8Rng) -> [u64; 4] {
        [rng.next_u64(), rng.next_u64(), rng.next_u64(), rng.next_u64()]
    }

    #[test]
    fn same_address_same_stream() {
        assert_eq!(
            first_words(stream(7, 3, Role::ChannelSample, 11)),
            first_words(stream(7, 3, Role::ChannelSample, 11))
        );
    }

    #[test]
    fn every_coordinate_changes_the_stream() {
        let base = first_words(stream(7, 3, Role::ChannelSample, 11));
        assert_ne!(base, first_words(stream(8, 3, Role::ChannelSample, 11)));
        assert_ne!(base, first_words(stream(7, 4, Role::ChannelSample, 11)));
        assert_ne!(base, first_words(stream(7, 3, Role::Geometry, 11)));
        assert_ne!(base, first_words(stream(7, 3, Role::ChannelSample, 12)));
    }

    #[test]
    fn complex_normal_uses_half_variance_per_component() {
        let mut rng = stream(1, 0, Role::Diagnostic, 0);
        let n = 200_000;
        let (mut re2, mut im2) = (0.0, 0.0);
        for _ in 0..n {
            let z = complex_normal(&mut rng);
            re2 += z.re * z.re;
            im2 += z.im * z.im;
        }
        // Var of the sample second moment is 2σ⁴/n = 0.5/n; 5σ band.
        let band = 5.0 * libm::sqrt(0.5 / n as f64);
        assert!((re2 / n as f64 - 0.5).abs() < band);
        assert!((im2 / n as f64 - 0.5).abs() < band);
    }
}
