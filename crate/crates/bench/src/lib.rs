//! Fixed benchmark inputs shared by the criterion benches.

use distrep_core::generate::{generate, Kind};
use distrep_core::numeric::{int, rational};
use distrep_core::{Instance, Norm, Rational};

/// Seeded random instance with `n` rectangles in `0..=d`.
pub fn random_instance(n: usize, d: i64) -> Instance {
    Instance::ingest(&generate(Kind::Random, n, d, 0xBE7C + n as u64)).expect("generator output is valid")
}

/// A radius of the right order for `inst`: about the spacing `D/√n`
/// (squared for L2), in scaled units.
pub fn typical_radius(inst: &Instance, norm: Norm) -> Rational {
    let n = inst.len() as i64;
    let root = (1..).find(|k| k * k >= n).expect("n is finite");
    let delta = rational(inst.d(), root);
    if norm.squared() {
        &delta * &delta
    } else {
        delta * int(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_deterministic() {
        assert_eq!(random_instance(30, 100), random_instance(30, 100));
        let inst = random_instance(16, 100);
        assert_eq!(typical_radius(&inst, Norm::L1), rational(inst.d(), 4));
        assert_eq!(typical_radius(&inst, Norm::L2), rational(inst.d() * inst.d(), 16));
    }
}
