//! Binary checkpoints for [`TrainedModel`].
//!
//! Layout, all integers `u64` and all reals `f64`, little-endian:
//!
//! ```text
//! magic        8 bytes  "COSTANN\0"
//! version      u64      1
//! n_dims       u64      number of layer widths (layers + 1)
//! dims         u64 × n_dims
//! config       f64 learning_rate, u64 batch_size, u64 patience,
//!              u64 max_epochs, u64 seed
//! per layer    weights (fan_in × fan_out, row-major), then bias (fan_out)
//! input norm   mean (dims[0]), std (dims[0])
//! target norm  mean (dims[last]), std (dims[last])
//! ```
//!
//! Reals are stored as raw bit patterns, so a round trip is bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::mlp::{DenseLayer, MlpNetwork};
use super::normalizer::Normalizer;
use super::train::{TrainConfig, TrainedModel};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"COSTANN\0";
const VERSION: u64 = 1;
// Guards against allocating absurd buffers from a corrupt header.
const MAX_WIDTH: u64 = 1 << 24;

fn put_u64(w: &mut impl Write, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_f64s<'a>(w: &mut impl Write, vals: impl IntoIterator<Item = &'a f64>) -> std::io::Result<()> {
    for v in vals {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_model(w: &mut impl Write, model: &TrainedModel) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    put_u64(w, VERSION)?;
    let dims = model.net.dims();
    put_u64(w, dims.len() as u64)?;
    for &d in &dims {
        put_u64(w, d as u64)?;
    }
    let c = &model.config;
    put_f64s(w, [&c.learning_rate])?;
    for v in [c.batch_size as u64, c.patience as u64, c.max_epochs as u64, c.seed] {
        put_u64(w, v)?;
    }
    for layer in model.net.layers() {
        put_f64s(w, layer.weights.iter())?;
        put_f64s(w, layer.bias.iter())?;
    }
    for n in [&model.input_norm, &model.target_norm] {
        put_f64s(w, n.mean())?;
        put_f64s(w, n.std())?;
    }
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes8(&mut self) -> std::result::Result<[u8; 8], String> {
        let mut b = [0u8; 8];
        self.inner.read_exact(&mut b).map_err(|e| format!("truncated checkpoint: {e}"))?;
        Ok(b)
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.bytes8()?))
    }

    fn usize(&mut self) -> std::result::Result<usize, String> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| format!("value {v} does not fit in usize"))
    }

    fn f64s(&mut self, n: usize) -> std::result::Result<Vec<f64>, String> {
        (0..n).map(|_| Ok(f64::from_le_bytes(self.bytes8()?))).collect()
    }
}

fn parse(r: impl Read) -> std::result::Result<TrainedModel, String> {
    let mut r = Reader { inner: r };
    if &r.bytes8()? != MAGIC {
        return Err("not a network checkpoint (bad magic)".into());
    }
    let version = r.u64()?;
    if version != VERSION {
        return Err(format!("unsupported checkpoint version {version}"));
    }
    let n_dims = r.u64()?;
    if !(2..=64).contains(&n_dims) {
        return Err(format!("implausible layer count {n_dims}"));
    }
    let mut dims = Vec::with_capacity(n_dims as usize);
    for _ in 0..n_dims {
        let d = r.u64()?;
        if d == 0 || d > MAX_WIDTH {
            return Err(format!("implausible layer width {d}"));
        }
        dims.push(d as usize);
    }
    let learning_rate = r.f64s(1)?[0];
    let config = TrainConfig {
        learning_rate,
        batch_size: r.usize()?,
        patience: r.usize()?,
        max_epochs: r.usize()?,
        seed: r.u64()?,
    };
    let mut layers = Vec::with_capacity(dims.len() - 1);
    for w in dims.windows(2) {
        let weights = Array2::from_shape_vec((w[0], w[1]), r.f64s(w[0] * w[1])?).map_err(|e| e.to_string())?;
        let bias = Array1::from_vec(r.f64s(w[1])?);
        layers.push(DenseLayer { weights, bias });
    }
    let net = MlpNetwork::from_layers(layers).map_err(|e| e.to_string())?;
    let mut norm = |d: usize| -> std::result::Result<Normalizer, String> {
        let mean = r.f64s(d)?;
        let std = r.f64s(d)?;
        Normalizer::from_parts(mean, std).map_err(|e| e.to_string())
    };
    let input_norm = norm(dims[0])?;
    let target_norm = norm(dims[dims.len() - 1])?;
    let mut rest = Vec::new();
    r.inner.read_to_end(&mut rest).map_err(|e| e.to_string())?;
    if !rest.is_empty() {
        return Err(format!("{} trailing bytes", rest.len()));
    }
    Ok(TrainedModel {
        net,
        input_norm,
        target_norm,
        config,
    })
}

pub fn read_model(r: impl Read) -> Result<TrainedModel> {
    parse(r).map_err(|m| Error::format("<stream>", m))
}

pub fn save_model(path: &Path, model: &TrainedModel) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_model(&mut w, model).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse(BufReader::new(file)).map_err(|m| Error::format(path, m))
}
