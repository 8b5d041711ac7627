//! Labeled seed derivation: every random component gets its own stream
//! derived from one master seed.

use crate::hierarchy::name_key;
use crate::minhash::mix64;

pub fn derive_seed(master: u64, label: &str, index: u64) -> u64 {
    mix64(mix64(master ^ name_key(label)).wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}
