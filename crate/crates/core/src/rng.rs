//! Splittable seed derivation.
//!
//! Every random stream in the simulator is keyed by `(master seed, domain,
//! index)`, so a window or bootstrap resample draws the same numbers no
//! matter which thread evaluates it or in what order.

use rand::SeedableRng;
use rand_pcg::Pcg64;

/// Generator used for all simulation streams.
pub type StreamRng = Pcg64;

/// Independent stream families derived from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Arrivals = 1,
    Bins = 2,
    Detector = 3,
    Bootstrap = 4,
    Synthetic = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix `(master, domain, index)` into a 64-bit child seed.
pub fn derive_seed(master: u64, domain: Domain, index: u64) -> u64 {
    let a = splitmix64(master ^ (domain as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
    splitmix64(a ^ splitmix64(index))
}

/// Generator for stream `index` of `domain` under `master`.
pub fn stream(master: u64, domain: Domain, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, domain, index))
}
