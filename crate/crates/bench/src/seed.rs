//! Per-component seeds. Every random draw in an experiment comes from
//! `derive_seed(global, tag)`: the first eight bytes (little endian) of
//! SHA-256 over the global seed's little-endian bytes followed by the UTF-8
//! tag. Tags name the component, e.g. `"split"`, `"lstm/init"`, `"cv/folds"`.

use sha2::{Digest, Sha256};

pub fn derive_seed(global: u64, tag: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(global.to_le_bytes());
    h.update(tag.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Lowercase hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
