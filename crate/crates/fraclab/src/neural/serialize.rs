//! Versioned binary model files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "FRHN" | version u32 | input_dim u32 | lstm_layers u32 |
//! hidden u32 | head_dims 3 x u32 | loss u8 | epochs u32 |
//! sequence_length u32 | seed u64 | tensor_count u32 | tensors...
//!
//! tensor: name_len u16 | name bytes | ndim u8 | dims ndim x u32 |
//!         values product(dims) x f32
//! ```
//!
//! Tensors are stored row-major in the model's canonical parameter
//! order, so writing is deterministic and save -> load -> save
//! reproduces the file byte for byte. The reader rejects anything that
//! deviates: wrong magic or version, unknown names, shapes that do not
//! match the descriptor, non-finite values, truncation, trailing bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::model::{Architecture, Head, LstmLayer, LstmModel, ModelMeta};
use super::train::LossKind;
use crate::error::{Error, Result};

pub const MODEL_MAGIC: [u8; 4] = *b"FRHN";
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Canonical tensor names and shapes for an architecture, in the same
/// order as `LstmModel::param_slices`. This order is also the storage
/// order of the serialized format.
pub fn tensor_specs(arch: &Architecture) -> Vec<(String, Vec<usize>)> {
    let h = arch.hidden;
    let mut specs = Vec::with_capacity(3 * arch.lstm_layers + 7);
    for l in 0..arch.lstm_layers {
        let input = if l == 0 { arch.input_dim } else { h };
        specs.push((format!("lstm{l}.w_input"), vec![4 * h, input]));
        specs.push((format!("lstm{l}.w_recurrent"), vec![4 * h, h]));
        specs.push((format!("lstm{l}.bias"), vec![4 * h]));
    }
    specs.push(("head.fc1.weight".into(), vec![arch.head_dims[0], h]));
    specs.push(("head.fc1.bias".into(), vec![arch.head_dims[0]]));
    specs.push(("head.prelu.slope".into(), vec![1]));
    specs.push(("head.fc2.weight".into(), vec![arch.head_dims[1], arch.head_dims[0]]));
    specs.push(("head.fc2.bias".into(), vec![arch.head_dims[1]]));
    specs.push(("head.fc3.weight".into(), vec![arch.head_dims[2], arch.head_dims[1]]));
    specs.push(("head.fc3.bias".into(), vec![arch.head_dims[2]]));
    specs
}

/// Serializes a model. The byte stream is a pure function of the model.
pub fn write_model<W: Write>(w: &mut W, model: &LstmModel<f32>) -> Result<()> {
    model.arch.validate()?;
    w.write_all(&MODEL_MAGIC)?;
    w.write_all(&MODEL_FORMAT_VERSION.to_le_bytes())?;
    for dim in [
        model.arch.input_dim,
        model.arch.lstm_layers,
        model.arch.hidden,
        model.arch.head_dims[0],
        model.arch.head_dims[1],
        model.arch.head_dims[2],
    ] {
        w.write_all(&(dim as u32).to_le_bytes())?;
    }
    let loss_byte: u8 = match model.meta.loss {
        LossKind::Mse => 0,
        LossKind::Mae => 1,
    };
    w.write_all(&[loss_byte])?;
    w.write_all(&model.meta.epochs.to_le_bytes())?;
    w.write_all(&model.meta.sequence_length.to_le_bytes())?;
    w.write_all(&model.meta.seed.to_le_bytes())?;

    let specs = tensor_specs(&model.arch);
    let slices = model.param_slices();
    debug_assert_eq!(specs.len(), slices.len());
    w.write_all(&(specs.len() as u32).to_le_bytes())?;
    for ((name, dims), values) in specs.iter().zip(slices) {
        w.write_all(&(name.len() as u16).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&[dims.len() as u8])?;
        for &d in dims {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        let mut bytes = Vec::with_capacity(values.len() * 4);
        for &v in values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&bytes)?;
    }
    Ok(())
}

/// Deserializes a model, rejecting malformed input. The stream must end
/// exactly at the last tensor.
pub fn read_model<R: Read>(r: &mut R) -> Result<LstmModel<f32>> {
    let mut magic = [0u8; 4];
    read_or_corrupt(r, &mut magic)?;
    if magic != MODEL_MAGIC {
        return Err(Error::Corrupt("bad magic, not a model file".into()));
    }
    let version = read_u32(r)?;
    if version != MODEL_FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: MODEL_FORMAT_VERSION,
        });
    }

    let arch = Architecture {
        input_dim: read_u32(r)? as usize,
        lstm_layers: read_u32(r)? as usize,
        hidden: read_u32(r)? as usize,
        head_dims: [
            read_u32(r)? as usize,
            read_u32(r)? as usize,
            read_u32(r)? as usize,
        ],
    };
    if arch.validate().is_err() {
        return Err(Error::Corrupt("descriptor violates shape invariants".into()));
    }

    let mut loss_byte = [0u8; 1];
    read_or_corrupt(r, &mut loss_byte)?;
    let loss = match loss_byte[0] {
        0 => LossKind::Mse,
        1 => LossKind::Mae,
        other => return Err(Error::Corrupt(format!("unknown loss tag {other}"))),
    };
    let meta = ModelMeta {
        loss,
        epochs: read_u32(r)?,
        sequence_length: read_u32(r)?,
        seed: read_u64(r)?,
    };

    let specs = tensor_specs(&arch);
    let count = read_u32(r)? as usize;
    if count != specs.len() {
        return Err(Error::Corrupt(format!(
            "descriptor promises {} tensors, file stores {count}",
            specs.len()
        )));
    }

    let mut tensors: Vec<Vec<f32>> = Vec::with_capacity(count);
    for (name, dims) in &specs {
        let name_len = read_u16(r)? as usize;
        let mut name_bytes = vec![0u8; name_len];
        read_or_corrupt(r, &mut name_bytes)?;
        if name_bytes != name.as_bytes() {
            return Err(Error::Corrupt(format!(
                "expected tensor {name:?}, found {:?}",
                String::from_utf8_lossy(&name_bytes)
            )));
        }
        let mut ndim = [0u8; 1];
        read_or_corrupt(r, &mut ndim)?;
        if ndim[0] as usize != dims.len() {
            return Err(Error::Corrupt(format!(
                "tensor {name} has rank {}, expected {}",
                ndim[0],
                dims.len()
            )));
        }
        for &expect in dims {
            let d = read_u32(r)? as usize;
            if d != expect {
                return Err(Error::Corrupt(format!(
                    "tensor {name} dimension {d} does not match descriptor {expect}"
                )));
            }
        }
        let len: usize = dims.iter().product();
        let mut bytes = vec![0u8; len * 4];
        read_or_corrupt(r, &mut bytes)?;
        let values: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Corrupt(format!(
                "tensor {name} contains a non-finite value"
            )));
        }
        tensors.push(values);
    }

    let mut probe = [0u8; 1];
    match r.read(&mut probe) {
        Ok(0) => {}
        Ok(_) => return Err(Error::Corrupt("trailing bytes after last tensor".into())),
        Err(e) => return Err(Error::Io(e)),
    }

    let h = arch.hidden;
    let mut it = tensors.into_iter();
    let shaped2 = |dims: (usize, usize), data: Vec<f32>| {
        Array2::from_shape_vec(dims, data).expect("shape checked against spec")
    };
    let mut layers = Vec::with_capacity(arch.lstm_layers);
    for l in 0..arch.lstm_layers {
        let input = if l == 0 { arch.input_dim } else { h };
        layers.push(LstmLayer {
            w_input: shaped2((4 * h, input), it.next().expect("count checked")),
            w_recurrent: shaped2((4 * h, h), it.next().expect("count checked")),
            bias: Array1::from_vec(it.next().expect("count checked")),
        });
    }
    let head = Head {
        fc1_w: shaped2((arch.head_dims[0], h), it.next().expect("count checked")),
        fc1_b: Array1::from_vec(it.next().expect("count checked")),
        prelu_slope: Array1::from_vec(it.next().expect("count checked")),
        fc2_w: shaped2(
            (arch.head_dims[1], arch.head_dims[0]),
            it.next().expect("count checked"),
        ),
        fc2_b: Array1::from_vec(it.next().expect("count checked")),
        fc3_w: shaped2(
            (arch.head_dims[2], arch.head_dims[1]),
            it.next().expect("count checked"),
        ),
        fc3_b: Array1::from_vec(it.next().expect("count checked")),
    };

    Ok(LstmModel {
        arch,
        layers,
        head,
        meta,
    })
}

pub fn save_model(path: &Path, model: &LstmModel<f32>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(crate::io::with_path(path))?);
    write_model(&mut w, model)?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<LstmModel<f32>> {
    let mut r = BufReader::new(File::open(path).map_err(crate::io::with_path(path))?);
    read_model(&mut r)
}

fn read_or_corrupt<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == ErrorKind::UnexpectedEof {
            Error::Corrupt("unexpected end of file".into())
        } else {
            Error::Io(e)
        }
    })
}

fn read_u16<R: Read>(r: &mut R) -> Result<u16> {
    let mut b = [0u8; 2];
    read_or_corrupt(r, &mut b)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read_or_corrupt(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    read_or_corrupt(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}
