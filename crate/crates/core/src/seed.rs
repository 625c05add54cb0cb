//! Platform-independent seed derivation.

use sha2::{Digest, Sha256};

/// First 8 bytes (little endian) of SHA-256 over length-prefixed parts.
pub fn hash64(parts: &[&[u8]]) -> u64 {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// A child seed of `base` for the stream named `tag`, item `index`.
pub fn derive(base: u64, tag: &str, index: u64) -> u64 {
    hash64(&[&base.to_le_bytes(), tag.as_bytes(), &index.to_le_bytes()])
}
