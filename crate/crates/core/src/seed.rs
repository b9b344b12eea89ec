//! Reproducible random initial conditions.
//!
//! The generator is `ChaCha8Rng::seed_from_u64(seed)` (rand_chacha 0.9). A
//! uniform liveness in the open interval (0, 1) is drawn from one 64-bit
//! output `x` as
//!
//! - binary64: `((x >> 12) + 0.5) * 2^-52`
//! - binary32: `((x >> 41) + 0.5) * 2^-23`
//!
//! Both are exact in the target precision, so the value never rounds to 0 or 1.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::numeric::Precision;

/// Name recorded in manifests for the generator and bit-to-real mapping.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng::seed_from_u64 (rand_chacha 0.9), open-interval mantissa mapping";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw in (0, 1), exactly representable in `precision`.
pub fn uniform_open(rng: &mut impl RngCore, precision: Precision) -> f64 {
    let x = rng.next_u64();
    match precision {
        Precision::Binary64 => ((x >> 12) as f64 + 0.5) * (2.0f64).powi(-52),
        Precision::Binary32 => ((x >> 41) as f64 + 0.5) * (2.0f64).powi(-23),
    }
}

/// Dead grid in which `⌊f · width · height⌋` distinct cells, chosen uniformly
/// without replacement, receive a liveness drawn uniformly from (0, 1).
pub fn seed_random(
    width: usize,
    height: usize,
    fraction: f64,
    rng_seed: u64,
    precision: Precision,
) -> Result<Grid> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidConfig(format!(
            "seeding fraction must lie in [0, 1], got {fraction}"
        )));
    }
    if width == 0 || height == 0 {
        return Err(Error::InvalidConfig(format!(
            "grid dimensions must be positive, got {width}x{height}"
        )));
    }
    let n = width * height;
    let k = ((fraction * n as f64).floor() as usize).min(n);
    let mut rng = rng(rng_seed);

    // Partial Fisher-Yates: the first k entries become the chosen cells.
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        order.swap(i, j);
    }
    let mut grid = Grid::new(width, height, precision);
    for &idx in &order[..k] {
        let a = uniform_open(&mut rng, precision);
        grid.set(idx / width, idx % width, a)?;
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_fraction_is_dead() {
        let g = seed_random(10, 10, 0.0, 3, Precision::Binary32).unwrap();
        assert_eq!(g.count_above(0.0), 0);
    }

    #[test]
    fn full_fraction_covers_every_cell() {
        let g = seed_random(12, 9, 1.0, 3, Precision::Binary32).unwrap();
        assert_eq!(g.count_above(0.0), 108);
        assert!(g.liveness().iter().all(|&a| a > 0.0 && a < 1.0));
    }

    #[test]
    fn exact_count_of_seeded_cells() {
        let g = seed_random(100, 100, 0.2, 1, Precision::Binary32).unwrap();
        assert_eq!(g.count_above(0.0), 2000);
    }

    #[test]
    fn same_seed_same_grid() {
        for p in [Precision::Binary32, Precision::Binary64] {
            let a = seed_random(30, 20, 0.5, 99, p).unwrap();
            let b = seed_random(30, 20, 0.5, 99, p).unwrap();
            assert!(a.same_cells(&b));
            let c = seed_random(30, 20, 0.5, 100, p).unwrap();
            assert!(!a.same_cells(&c));
        }
    }

    #[test]
    fn rejects_fraction_outside_unit_interval() {
        assert!(seed_random(4, 4, 1.2, 0, Precision::Binary64).is_err());
        assert!(seed_random(4, 4, -0.1, 0, Precision::Binary64).is_err());
    }

    #[test]
    fn uniform_draws_stay_inside_open_interval() {
        struct Fixed(u64);
        impl RngCore for Fixed {
            fn next_u32(&mut self) -> u32 {
                self.0 as u32
            }
            fn next_u64(&mut self) -> u64 {
                self.0
            }
            fn fill_bytes(&mut self, _: &mut [u8]) {
                unimplemented!()
            }
        }
        for p in [Precision::Binary32, Precision::Binary64] {
            let lo = uniform_open(&mut Fixed(0), p);
            let hi = uniform_open(&mut Fixed(u64::MAX), p);
            assert!(lo > 0.0 && hi < 1.0, "{p}: {lo} {hi}");
            assert!(p.is_representable(lo) && p.is_representable(hi));
        }
    }

    #[test]
    fn frozen_first_draws() {
        // Guards the documented generator and mapping against silent changes.
        assert_eq!(rng(42).next_u64(), 12578764544318200737);
        let g = seed_random(4, 1, 1.0, 42, Precision::Binary64).unwrap();
        let bits: Vec<u64> = g.liveness().iter().map(|a| a.to_bits()).collect();
        assert_eq!(
            bits,
            [4601373070768303510, 4594570857989418692, 4598870465064152466, 4603825980764259021]
        );
        let g = seed_random(4, 1, 1.0, 42, Precision::Binary32).unwrap();
        assert_eq!(
            g.liveness(),
            [0.4275164008140564, 0.14995890855789185, 0.2885938286781311, 0.6273605227470398]
        );
    }
}
