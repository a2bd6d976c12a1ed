//! Binary model checkpoints.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! magic      8 bytes  "DGNERCK\0"
//! version    u32      1
//! config     str      "key=value\n" lines for every model key
//! vocab      4 x list words, chars, relations, labels
//! seed       u64      parameter-store seed
//! count      u32      number of tensors, in registration order
//! tensor     str name, u8 trainable, u32 ndim, ndim x u64 dims, f64 values
//! ```
//!
//! `str` is a u32 byte length followed by UTF-8; `list` is a u32 count of
//! `str`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Model, ModelConfig};
use crate::data::{Interner, Vocabulary};
use crate::error::{Error, Result};
use crate::nn::{ParamId, ParamStore, Tensor};

pub const MAGIC: &[u8; 8] = b"DGNERCK\0";
pub const VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

fn put_list(out: &mut Vec<u8>, items: &[String]) {
    put_u32(out, items.len() as u32);
    items.iter().for_each(|s| put_str(out, s));
}

pub fn config_text(config: &ModelConfig) -> String {
    config
        .to_pairs()
        .into_iter()
        .map(|(k, v)| format!("{k}={v}\n"))
        .collect()
}

pub fn to_bytes(model: &Model) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    put_str(&mut out, &config_text(&model.config));
    let v = &model.vocab;
    for list in [&v.words, &v.chars, &v.relations, &v.labels] {
        put_list(&mut out, list.items());
    }
    out.extend_from_slice(&model.store.seed().to_le_bytes());
    put_u32(&mut out, model.store.len() as u32);
    for i in 0..model.store.len() {
        let p = model.store.param(ParamId(i));
        put_str(&mut out, &p.name);
        out.push(p.trainable as u8);
        let shape = p.value.shape();
        put_u32(&mut out, shape.len() as u32);
        for &d in shape {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &x in p.value.data() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Checkpoint(format!(
                "truncated file (wanted {n} bytes at offset {})",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| Error::Checkpoint("string is not valid UTF-8".into()))
    }

    fn list(&mut self) -> Result<Interner> {
        let n = self.u32()? as usize;
        let items = (0..n).map(|_| self.str()).collect::<Result<Vec<_>>>()?;
        Interner::from_items(items).map_err(|e| Error::Checkpoint(e.to_string()))
    }
}

pub fn from_bytes(buf: &[u8]) -> Result<Model> {
    let mut c = Cursor { buf, pos: 0 };
    if c.take(MAGIC.len()).ok() != Some(MAGIC.as_slice()) {
        return Err(Error::Checkpoint("not a checkpoint (bad magic)".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let mut config = ModelConfig::default();
    for line in c.str()?.lines() {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Checkpoint(format!("bad config line `{line}`")))?;
        config.set(k, v)?;
    }
    let vocab = Vocabulary {
        words: c.list()?,
        chars: c.list()?,
        relations: c.list()?,
        labels: c.list()?,
    };
    let mut store = ParamStore::new(c.u64()?);
    let count = c.u32()?;
    for _ in 0..count {
        let name = c.str()?;
        let trainable = c.u8()? != 0;
        let ndim = c.u32()? as usize;
        let shape = (0..ndim)
            .map(|_| c.u64().map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let len: usize = shape.iter().product();
        let data = (0..len).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
        let id = store.add(&name, Tensor::new(shape, data)?)?;
        store.set_trainable(id, trainable);
    }
    if c.pos != buf.len() {
        return Err(Error::Checkpoint(
            "trailing bytes after the last tensor".into(),
        ));
    }
    Model::from_parts(config, vocab, store)
}

pub fn save_checkpoint(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&to_bytes(model))?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Model> {
    let mut buf = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut buf)?;
    from_bytes(&buf)
}
