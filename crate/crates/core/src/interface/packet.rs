//! Level-tagged packets carrying one reliability level's bits each.
//!
//! Wire layout (big-endian):
//!
//! ```text
//! magic 0x5A4A (2) | version (1) | level_index (1) | session_id (4)
//! | sequence_number (2) | payload_bit_count (2) | payload (ceil(count/8))
//! ```
//!
//! Payload bits are packed most-significant-bit first. Level indices are 1-based.

use crate::error::{Error, Result};
use crate::interface::medium::Codeword;
use crate::interface::profile::ReliabilityProfile;

pub const MAGIC: u16 = 0x5A4A;
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterfacePacket {
    pub version: u8,
    pub level_index: u8,
    pub session_id: u32,
    pub sequence_number: u16,
    pub payload_bit_count: u16,
    pub payload: Vec<u8>,
}

impl InterfacePacket {
    pub fn wire_len(&self) -> usize {
        HEADER_LEN + self.payload.len()
    }

    /// Payload as one `u8` per bit.
    pub fn bits(&self) -> Vec<u8> {
        (0..self.payload_bit_count as usize)
            .map(|i| (self.payload[i / 8] >> (7 - i % 8)) & 1)
            .collect()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.wire_len());
        out.extend_from_slice(&MAGIC.to_be_bytes());
        out.push(self.version);
        out.push(self.level_index);
        out.extend_from_slice(&self.session_id.to_be_bytes());
        out.extend_from_slice(&self.sequence_number.to_be_bytes());
        out.extend_from_slice(&self.payload_bit_count.to_be_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parse one packet from the front of `buf`; returns it and the bytes consumed.
    /// `base` is the offset of `buf` within the enclosing stream, used in errors.
    pub fn decode(buf: &[u8], base: usize) -> Result<(Self, usize)> {
        let short = |at: usize, what: &str| Error::Format {
            offset: base + at,
            msg: format!("truncated packet: missing {what}"),
        };
        if buf.len() < HEADER_LEN {
            return Err(short(buf.len(), "header"));
        }
        let magic = u16::from_be_bytes([buf[0], buf[1]]);
        if magic != MAGIC {
            return Err(Error::Format {
                offset: base,
                msg: format!("bad magic 0x{magic:04X}, expected 0x{MAGIC:04X}"),
            });
        }
        let payload_bit_count = u16::from_be_bytes([buf[10], buf[11]]);
        let payload_len = (payload_bit_count as usize).div_ceil(8);
        if buf.len() < HEADER_LEN + payload_len {
            return Err(short(buf.len(), "payload bytes"));
        }
        let packet = Self {
            version: buf[2],
            level_index: buf[3],
            session_id: u32::from_be_bytes([buf[4], buf[5], buf[6], buf[7]]),
            sequence_number: u16::from_be_bytes([buf[8], buf[9]]),
            payload_bit_count,
            payload: buf[HEADER_LEN..HEADER_LEN + payload_len].to_vec(),
        };
        Ok((packet, HEADER_LEN + payload_len))
    }
}

fn pack_bits(bits: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        out[i / 8] |= b << (7 - i % 8);
    }
    out
}

/// One packet per level, in level order, sequence numbers counting from 0.
pub fn pack(
    codeword: &Codeword,
    profile: &ReliabilityProfile,
    session_id: u32,
) -> Result<Vec<InterfacePacket>> {
    if codeword.len() != profile.codeword_bits() {
        return Err(Error::Contract(format!(
            "codeword has {} bits, profile expects {}",
            codeword.len(),
            profile.codeword_bits()
        )));
    }
    if profile.levels() > u8::MAX as usize || profile.bits_per_level() > u16::MAX as usize {
        return Err(Error::Profile(
            "profile too large for the packet header fields".into(),
        ));
    }
    Ok((1..=profile.levels())
        .map(|level| {
            let bits = &codeword.bits()[profile.level_range(level)];
            InterfacePacket {
                version: VERSION,
                level_index: level as u8,
                session_id,
                sequence_number: (level - 1) as u16,
                payload_bit_count: bits.len() as u16,
                payload: pack_bits(bits),
            }
        })
        .collect())
}

/// Reassemble a codeword from one packet per level, in any arrival order.
pub fn unpack(packets: &[InterfacePacket], profile: &ReliabilityProfile) -> Result<Codeword> {
    let session = packets.first().map(|p| p.session_id);
    let mut slots: Vec<Option<&InterfacePacket>> = vec![None; profile.levels()];
    for p in packets {
        if p.version != VERSION {
            return Err(Error::Protocol(format!(
                "packet version {} not supported (expected {VERSION})",
                p.version
            )));
        }
        if Some(p.session_id) != session {
            return Err(Error::Protocol(format!(
                "session id {} does not match {}",
                p.session_id,
                session.unwrap()
            )));
        }
        let level = p.level_index as usize;
        if level == 0 || level > profile.levels() {
            return Err(Error::Protocol(format!(
                "level index {level} outside 1..={}",
                profile.levels()
            )));
        }
        if p.payload_bit_count as usize != profile.bits_per_level() {
            return Err(Error::Protocol(format!(
                "level {level} carries {} bits, profile expects {}",
                p.payload_bit_count,
                profile.bits_per_level()
            )));
        }
        if slots[level - 1].replace(p).is_some() {
            return Err(Error::Protocol(format!(
                "duplicate packet for level {level}"
            )));
        }
    }
    let mut bits = Vec::with_capacity(profile.codeword_bits());
    for (i, slot) in slots.iter().enumerate() {
        let p = slot.ok_or(Error::IncompleteSession { level: i + 1 })?;
        bits.extend(p.bits());
    }
    Codeword::new(bits)
}

/// Concatenated wire bytes of several packets.
pub fn encode_stream(packets: &[InterfacePacket]) -> Vec<u8> {
    packets.iter().flat_map(|p| p.encode()).collect()
}

pub fn decode_stream(bytes: &[u8]) -> Result<Vec<InterfacePacket>> {
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let (p, used) = InterfacePacket::decode(&bytes[pos..], pos)?;
        out.push(p);
        pos += used;
    }
    Ok(out)
}
