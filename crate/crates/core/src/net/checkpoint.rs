//! Network checkpoints.
//!
//! Layout: a magic line `BIASPROBE-NET 1\n`, one line of JSON header, then
//! the learnable tensors in canonical order as little-endian `f64`:
//!
//! ```text
//! BIASPROBE-NET 1
//! {"arch":"mlp-relu-i2-d3-w64-a1.0-p1.0-b1.0","init":{...},"tensors":[{"name":"h0.weight","len":128},...]}
//! <raw little-endian f64 values>
//! ```
//!
//! Fixed quantities such as the unbiased model's frequency rows are rebuilt
//! from the architecture identifier.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::arch::ArchSpec;
use super::network::{InitSpec, Network};
use crate::error::{Error, Result};

const MAGIC: &str = "BIASPROBE-NET 1";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    arch: String,
    init: InitSpec,
    tensors: Vec<TensorEntry>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct TensorEntry {
    name: String,
    len: usize,
}

fn format_err(reason: impl Into<String>) -> Error {
    Error::Format { kind: "checkpoint", reason: reason.into() }
}

pub fn write_checkpoint<W: Write>(net: &Network, init: &InitSpec, mut out: W) -> Result<()> {
    let header = Header {
        arch: net.spec().describe(),
        init: *init,
        tensors: net.param_info().into_iter().map(|p| TensorEntry { name: p.name, len: p.len }).collect(),
    };
    let json = serde_json::to_string(&header).map_err(|e| format_err(e.to_string()))?;
    let io = |e| Error::io("<checkpoint>", e);
    writeln!(out, "{MAGIC}").map_err(io)?;
    writeln!(out, "{json}").map_err(io)?;
    for tensor in net.params() {
        for v in tensor {
            out.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    Ok(())
}

/// Reads a checkpoint, returning the network and the init record it was saved with.
pub fn read_checkpoint<R: BufRead>(mut input: R) -> Result<(Network, InitSpec)> {
    let io = |e| Error::io("<checkpoint>", e);
    let mut line = String::new();
    input.read_line(&mut line).map_err(io)?;
    if line.trim_end() != MAGIC {
        return Err(format_err(format!("bad magic line {:?}", line.trim_end())));
    }
    line.clear();
    input.read_line(&mut line).map_err(io)?;
    let header: Header = serde_json::from_str(line.trim_end()).map_err(|e| format_err(e.to_string()))?;
    let spec = ArchSpec::parse(&header.arch)?;
    let mut net = Network::init(&spec, &header.init)?;
    let expected: Vec<TensorEntry> =
        net.param_info().into_iter().map(|p| TensorEntry { name: p.name, len: p.len }).collect();
    if expected != header.tensors {
        return Err(format_err("tensor table does not match the architecture"));
    }
    let mut buf = [0u8; 8];
    for tensor in net.params_mut() {
        for v in tensor.iter_mut() {
            input.read_exact(&mut buf).map_err(|_| format_err("truncated tensor data"))?;
            *v = f64::from_le_bytes(buf);
        }
    }
    if input.read(&mut buf).map_err(io)? != 0 {
        return Err(format_err("trailing bytes after tensor data"));
    }
    Ok((net, header.init))
}

pub fn save(net: &Network, init: &InitSpec, path: &std::path::Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_checkpoint(net, init, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load(path: &std::path::Path) -> Result<(Network, InitSpec)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(std::io::BufReader::new(file))
}
