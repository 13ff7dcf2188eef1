//! Shell around the design library: file formats, project configuration,
//! and the documents the `sawfilt` binary passes between its subcommands.

// Validation deliberately writes `!(x > 0.0)` instead of `x <= 0.0`: the
// negated form also rejects NaN, which must fail every bound it meets.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod docs;
pub mod error;
pub mod touchstone;

/// Lowercase hex of a SHA-256 digest over `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::Digest as _;
    sha2::Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
