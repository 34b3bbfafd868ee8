//! Binary checkpoints of ADO states.
//!
//! Layout: 8-byte magic, u32 little-endian header length, JSON header, then
//! 8 little-endian f64 per ADO (re/im of b00, b01, b10, b11) in enumeration order.

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::space::HierarchySpace;
use super::state::{AdoState, Block, Role};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SBHEOMCK";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub version: u32,
    pub n_real: usize,
    pub n_imag: usize,
    pub depth: usize,
    pub ado_count: usize,
    pub fit_hash: String,
    pub role: String,
    /// Simulation time of the stored state.
    pub time: f64,
    pub rescaled: bool,
}

impl CheckpointHeader {
    pub fn for_state(state: &AdoState, fit_hash: &str, time: f64, rescaled: bool) -> Self {
        let space = state.space();
        Self {
            version: 1,
            n_real: space.n_real(),
            n_imag: space.n_imag(),
            depth: space.depth(),
            ado_count: space.len(),
            fit_hash: fit_hash.to_string(),
            role: role_tag(state.role()).to_string(),
            time,
            rescaled,
        }
    }
}

fn role_tag(role: Role) -> &'static str {
    match role {
        Role::Density => "density",
        Role::Quasi => "quasi",
    }
}

pub fn write_checkpoint<W: Write>(
    mut w: W,
    header: &CheckpointHeader,
    state: &AdoState,
) -> Result<()> {
    let json = serde_json::to_vec(header).map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    let mut buf = Vec::with_capacity(state.len() * 64);
    for b in state.blocks() {
        for z in &b.0 {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads a checkpoint, checking it against `space`.
pub fn read_checkpoint<R: Read>(
    mut r: R,
    space: Arc<HierarchySpace>,
) -> Result<(CheckpointHeader, AdoState)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not an ADO checkpoint".into()));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut json)?;
    let header: CheckpointHeader =
        serde_json::from_slice(&json).map_err(|e| Error::Format(e.to_string()))?;
    if header.n_real != space.n_real()
        || header.n_imag != space.n_imag()
        || header.depth != space.depth()
        || header.ado_count != space.len()
    {
        return Err(Error::Mismatch(format!(
            "checkpoint hierarchy ({}, {}, H={}) does not match ({}, {}, H={})",
            header.n_real,
            header.n_imag,
            header.depth,
            space.n_real(),
            space.n_imag(),
            space.depth()
        )));
    }
    let role = match header.role.as_str() {
        "density" => Role::Density,
        "quasi" => Role::Quasi,
        other => return Err(Error::Format(format!("unknown role {other:?}"))),
    };
    let mut raw = vec![0u8; header.ado_count * 64];
    r.read_exact(&mut raw)?;
    let f = |k: usize| f64::from_le_bytes(raw[8 * k..8 * k + 8].try_into().unwrap());
    let blocks = (0..header.ado_count)
        .map(|i| {
            let base = 8 * i;
            Block([
                Complex64::new(f(base), f(base + 1)),
                Complex64::new(f(base + 2), f(base + 3)),
                Complex64::new(f(base + 4), f(base + 5)),
                Complex64::new(f(base + 6), f(base + 7)),
            ])
        })
        .collect();
    let state = AdoState::from_blocks(space, blocks, role).expect("length checked");
    Ok((header, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heom::space::{enumerate_space, DEFAULT_ADO_BUDGET};

    #[test]
    fn round_trip_is_bit_exact() {
        let space = Arc::new(enumerate_space(2, 1, 2, DEFAULT_ADO_BUDGET).unwrap());
        let blocks = (0..space.len())
            .map(|i| {
                let x = i as f64;
                Block([
                    Complex64::new(x.sin(), 1.0 / (x + 3.0)),
                    Complex64::new(-x, x.sqrt()),
                    Complex64::new(0.1 * x, f64::MIN_POSITIVE),
                    Complex64::new(x.cos(), -0.0),
                ])
            })
            .collect();
        let state = AdoState::from_blocks(space.clone(), blocks, Role::Quasi).unwrap();
        let header = CheckpointHeader::for_state(&state, "abc", 12.5, false);
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &header, &state).unwrap();
        let (h2, s2) = read_checkpoint(buf.as_slice(), space).unwrap();
        assert_eq!(h2, header);
        assert_eq!(s2.role(), Role::Quasi);
        for (a, b) in state.blocks().iter().zip(s2.blocks()) {
            for k in 0..4 {
                assert_eq!(a.0[k].re.to_bits(), b.0[k].re.to_bits());
                assert_eq!(a.0[k].im.to_bits(), b.0[k].im.to_bits());
            }
        }
    }

    #[test]
    fn wrong_space_is_rejected() {
        let space = Arc::new(enumerate_space(1, 1, 2, DEFAULT_ADO_BUDGET).unwrap());
        let state = AdoState::product(space, Block::plus_state());
        let mut buf = Vec::new();
        write_checkpoint(
            &mut buf,
            &CheckpointHeader::for_state(&state, "h", 0.0, false),
            &state,
        )
        .unwrap();
        let other = Arc::new(enumerate_space(1, 1, 3, DEFAULT_ADO_BUDGET).unwrap());
        assert!(matches!(
            read_checkpoint(buf.as_slice(), other),
            Err(Error::Mismatch(_))
        ));
    }
}
