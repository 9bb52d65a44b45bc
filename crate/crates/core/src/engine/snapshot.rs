//! Checksummed pool snapshots.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::demm::DemmPool;

use super::EngineError;

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub format_version: u32,
    /// Hex SHA-256 of the compact JSON encoding of `pool`.
    pub checksum: String,
    pub pool: DemmPool,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Digest of a pool's canonical JSON encoding.
pub fn state_digest(pool: &DemmPool) -> String {
    sha256_hex(serde_json::to_string(pool).expect("pool serializes").as_bytes())
}

pub fn snapshot(pool: &DemmPool) -> String {
    let env = Snapshot { format_version: SNAPSHOT_VERSION, checksum: state_digest(pool), pool: pool.clone() };
    let mut s = serde_json::to_string_pretty(&env).expect("snapshot serializes");
    s.push('\n');
    s
}

/// Parses a snapshot, verifying version, checksum and the pool's internal consistency.
pub fn restore(text: &str) -> Result<DemmPool, EngineError> {
    let corrupt = |m: String| EngineError::Integrity(m);
    let de = &mut serde_json::Deserializer::from_str(text);
    let env: Snapshot = serde_path_to_error::deserialize(de)
        .map_err(|e| corrupt(format!("unreadable snapshot at {}: {}", e.path(), e.inner())))?;
    if env.format_version != SNAPSHOT_VERSION {
        return Err(corrupt(format!("unsupported snapshot format_version {}", env.format_version)));
    }
    let actual = state_digest(&env.pool);
    if actual != env.checksum {
        return Err(corrupt(format!("checksum mismatch: recorded {}, computed {actual}", env.checksum)));
    }
    env.pool.check_consistency().map_err(|e| corrupt(e.to_string()))?;
    Ok(env.pool)
}
