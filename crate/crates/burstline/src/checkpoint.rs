//! Binary checkpoint files, little-endian:
//!
//! ```text
//! magic "BRST" | u32 version | u64 step_index | u32 nx | u32 ny | u32 gamma
//! | u64 payload_block_size | nx blocks of payload_block_size bytes
//! ```

use std::fs;
use std::path::Path;

use burstline_core::burst::{Checkpoint, CheckpointHeader};

use crate::error::CliError;

pub const MAGIC: [u8; 4] = *b"BRST";
pub const HEADER_LEN: usize = 36;

pub fn encode(c: &Checkpoint) -> Vec<u8> {
    let h = &c.header;
    let mut out = Vec::with_capacity(HEADER_LEN + c.payload.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&h.version.to_le_bytes());
    out.extend_from_slice(&h.step_index.to_le_bytes());
    out.extend_from_slice(&h.nx.to_le_bytes());
    out.extend_from_slice(&h.ny.to_le_bytes());
    out.extend_from_slice(&h.gamma.to_le_bytes());
    out.extend_from_slice(&h.payload_block_size.to_le_bytes());
    out.extend_from_slice(&c.payload);
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], CliError> {
        let (head, rest) = self
            .bytes
            .split_first_chunk::<N>()
            .ok_or_else(|| CliError::Parse("checkpoint truncated".into()))?;
        self.bytes = rest;
        Ok(*head)
    }

    fn u32(&mut self) -> Result<u32, CliError> {
        self.take().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Result<u64, CliError> {
        self.take().map(u64::from_le_bytes)
    }
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint, CliError> {
    let mut cur = Cursor { bytes };
    if cur.take::<4>()? != MAGIC {
        return Err(CliError::Parse("not a checkpoint file (bad magic)".into()));
    }
    let header = CheckpointHeader {
        version: cur.u32()?,
        step_index: cur.u64()?,
        nx: cur.u32()?,
        ny: cur.u32()?,
        gamma: cur.u32()?,
        payload_block_size: cur.u64()?,
    };
    let checkpoint = Checkpoint {
        header,
        payload: cur.bytes.to_vec(),
    };
    checkpoint
        .validate()
        .map_err(|e| CliError::Parse(e.to_string()))?;
    Ok(checkpoint)
}

pub fn save(path: &Path, c: &Checkpoint) -> Result<(), CliError> {
    fs::write(path, encode(c)).map_err(|e| CliError::io(path, e))
}

pub fn load(path: &Path) -> Result<Checkpoint, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use burstline_core::burst::{write_checkpoint, SimSnapshot};
    use burstline_core::domain::DomainSpec;

    fn sample() -> Checkpoint {
        let spec = DomainSpec {
            nx: 5,
            ..DomainSpec::TABLE2
        };
        write_checkpoint(&SimSnapshot::synthetic(9, 77, spec, 2, 8))
    }

    #[test]
    fn layout() {
        let bytes = encode(&sample());
        assert_eq!(bytes.len(), HEADER_LEN + 40);
        assert_eq!(&bytes[..4], b"BRST");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..16], &77u64.to_le_bytes());
        assert_eq!(&bytes[16..20], &5u32.to_le_bytes());
        assert_eq!(&bytes[20..24], &600u32.to_le_bytes());
        assert_eq!(&bytes[24..28], &2u32.to_le_bytes());
        assert_eq!(&bytes[28..36], &8u64.to_le_bytes());
        assert_eq!(decode(&bytes).unwrap(), sample());
    }

    #[test]
    fn rejects_damage() {
        let bytes = encode(&sample());
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode(&bytes[..20]).is_err());
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(decode(&magic).is_err());
        let mut version = bytes;
        version[4] = 2;
        assert!(decode(&version).is_err());
    }
}
