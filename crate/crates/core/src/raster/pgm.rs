use std::fs;
use std::path::Path;

use super::EdgeMap;
use crate::error::{Error, Result};

/// Binary PGM (P5, maxval 255) encoding of an edge map.
pub fn encode_pgm(map: &EdgeMap) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", map.width(), map.height());
    let mut out = Vec::with_capacity(header.len() + map.values().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(map.values());
    out
}

pub fn write_pgm(map: &EdgeMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(map)).map_err(|e| Error::io(path, e))
}
