//! On-disk formats: descriptor CSV and binary streams, and the versioned
//! model container with its JSON hyperparameter sidecar.

use std::fs;
use std::io::{self, BufRead, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::recognize::bow::{BowDictionaries, Dictionary, DictionaryKind};
use crate::recognize::svm::{PairClassifier, SvmModel};
use crate::rrv::{RrvDescriptor, RrvSequence};
use crate::skeleton::{MultiRrvSequence, PartId, SkeletonDescriptor};

/// Magic bytes of the model container.
pub const MODEL_MAGIC: &[u8; 4] = b"RRV1";
/// Current container version.
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad magic bytes; not a model container")]
    BadMagic,
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt container: {0}")]
    Corrupt(String),
    #[error("malformed descriptor file: line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

const RRV_HEADER: &str = "qw,qx,qy,qz,tx,ty,tz";

fn write_descriptor_fields<W: Write>(w: &mut W, d: &RrvDescriptor<f64>) -> io::Result<()> {
    let a = d.to_array();
    write!(w, "{}", a[0])?;
    for v in &a[1..] {
        write!(w, ",{v}")?;
    }
    Ok(())
}

/// One descriptor per row, seven columns.
pub fn write_rrv_csv<W: Write>(w: &mut W, seq: &RrvSequence<f64>) -> io::Result<()> {
    writeln!(w, "{RRV_HEADER}")?;
    for d in &seq.descriptors {
        write_descriptor_fields(w, d)?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_rrv_csv<R: BufRead>(r: R) -> Result<RrvSequence<f64>, IoError> {
    let mut descriptors = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if i == 0 {
            if line.trim() != RRV_HEADER {
                return Err(IoError::Csv {
                    line: 1,
                    message: format!("expected header {RRV_HEADER:?}"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(IoError::Csv {
                line: line_no,
                message: format!("expected 7 fields, got {}", fields.len()),
            });
        }
        let mut values = [0.0f64; 7];
        for (v, f) in values.iter_mut().zip(&fields) {
            *v = f.trim().parse().map_err(|_| IoError::Csv {
                line: line_no,
                message: format!("bad number {f:?}"),
            })?;
        }
        descriptors.push(RrvDescriptor::from_array(values));
    }
    Ok(RrvSequence {
        descriptors,
        degenerate_spectrum: false,
    })
}

/// Wide CSV of stacked streams, one row per time step, columns prefixed
/// per stream (`lh_qw,...` etc.).
pub fn write_multi_csv<W: Write>(
    w: &mut W,
    seq: &MultiRrvSequence<f64>,
    prefixes: &[&str],
) -> io::Result<()> {
    assert_eq!(prefixes.len(), seq.stream_count());
    let mut header = Vec::new();
    for p in prefixes {
        for col in RRV_HEADER.split(',') {
            header.push(format!("{p}_{col}"));
        }
    }
    writeln!(w, "{}", header.join(","))?;
    for frame in seq.frames() {
        let mut first = true;
        for d in frame {
            if !first {
                write!(w, ",")?;
            }
            write_descriptor_fields(w, d)?;
            first = false;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Wide CSV of all five parts, one row per time step, 7 columns per
/// stream with `part`/stream column prefixes (63 columns under the
/// default configuration).
pub fn write_skeleton_csv<W: Write>(
    w: &mut W,
    desc: &SkeletonDescriptor<f64>,
) -> io::Result<()> {
    let mut header = Vec::new();
    for part in PartId::ALL {
        for s in 0..desc.part(part).stream_count() {
            for col in RRV_HEADER.split(',') {
                header.push(format!("{}{}_{}", part.tag(), s + 1, col));
            }
        }
    }
    writeln!(w, "{}", header.join(","))?;
    for t in 0..desc.len() {
        let mut first = true;
        for part in PartId::ALL {
            for d in desc.part(part).frame(t) {
                if !first {
                    write!(w, ",")?;
                }
                write_descriptor_fields(w, d)?;
                first = false;
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Length-prefixed little-endian stream: a `u64` descriptor count, then
/// seven `f64` per descriptor.
pub fn write_rrv_binary<W: Write>(w: &mut W, seq: &RrvSequence<f64>) -> io::Result<()> {
    w.write_all(&(seq.len() as u64).to_le_bytes())?;
    for d in &seq.descriptors {
        for v in d.to_array() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_rrv_binary<R: Read>(r: &mut R) -> Result<RrvSequence<f64>, IoError> {
    let n = read_u64(r)? as usize;
    let mut descriptors = Vec::with_capacity(n);
    for _ in 0..n {
        let mut values = [0.0f64; 7];
        for v in &mut values {
            *v = read_f64(r)?;
        }
        descriptors.push(RrvDescriptor::from_array(values));
    }
    Ok(RrvSequence {
        descriptors,
        degenerate_spectrum: false,
    })
}

fn read_exact<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N], IoError> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, IoError> {
    Ok(u32::from_le_bytes(read_exact(r)?))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, IoError> {
    Ok(u64::from_le_bytes(read_exact(r)?))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64, IoError> {
    Ok(f64::from_le_bytes(read_exact(r)?))
}

/// Trained bag-of-words recognizer: the dictionary pair, the SVM ensemble
/// and the per-sample histogram layout (number of descriptor groups).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BowModel {
    pub dicts: BowDictionaries<f64>,
    pub svm: SvmModel<f64>,
    /// Descriptor groups per sample: 1 rigid, 2 two-hand, 5 skeleton.
    pub parts: u32,
}

fn write_dictionary<W: Write>(w: &mut W, dict: &Dictionary<f64>) -> io::Result<()> {
    w.write_all(&(dict.words.len() as u64).to_le_bytes())?;
    w.write_all(&(dict.dim() as u64).to_le_bytes())?;
    for word in &dict.words {
        for v in word {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_dictionary<R: Read>(r: &mut R, kind: DictionaryKind) -> Result<Dictionary<f64>, IoError> {
    let k = read_u64(r)? as usize;
    let dim = read_u64(r)? as usize;
    if dim != kind.dim() {
        return Err(IoError::Corrupt(format!(
            "dictionary dimension {dim} does not match {kind:?}"
        )));
    }
    let mut words = Vec::with_capacity(k);
    for _ in 0..k {
        let mut word = Vec::with_capacity(dim);
        for _ in 0..dim {
            word.push(read_f64(r)?);
        }
        words.push(word);
    }
    Ok(Dictionary { kind, words })
}

/// Persist a model: magic, version, layout, dictionaries, kernel/ensemble.
/// All numbers little-endian, floats 64-bit.
pub fn save_model(path: &Path, model: &BowModel) -> Result<(), IoError> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(MODEL_MAGIC)?;
    w.write_all(&MODEL_VERSION.to_le_bytes())?;
    w.write_all(&model.parts.to_le_bytes())?;
    write_dictionary(&mut w, &model.dicts.rotational)?;
    write_dictionary(&mut w, &model.dicts.translational)?;

    w.write_all(&model.svm.gamma.to_le_bytes())?;
    w.write_all(&model.svm.c.to_le_bytes())?;
    w.write_all(&(model.svm.classes.len() as u32).to_le_bytes())?;
    for class in &model.svm.classes {
        let bytes = class.as_bytes();
        w.write_all(&(bytes.len() as u64).to_le_bytes())?;
        w.write_all(bytes)?;
    }
    w.write_all(&(model.svm.pairs.len() as u32).to_le_bytes())?;
    for pair in &model.svm.pairs {
        w.write_all(&(pair.class_a as u32).to_le_bytes())?;
        w.write_all(&(pair.class_b as u32).to_le_bytes())?;
        w.write_all(&pair.bias.to_le_bytes())?;
        let dim = pair.support_vectors.first().map_or(0, Vec::len);
        w.write_all(&(pair.support_vectors.len() as u64).to_le_bytes())?;
        w.write_all(&(dim as u64).to_le_bytes())?;
        for (sv, coeff) in pair.support_vectors.iter().zip(&pair.coefficients) {
            w.write_all(&coeff.to_le_bytes())?;
            for v in sv {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<BowModel, IoError> {
    let mut r = io::BufReader::new(fs::File::open(path)?);
    let magic: [u8; 4] = read_exact(&mut r)?;
    if &magic != MODEL_MAGIC {
        return Err(IoError::BadMagic);
    }
    let version = read_u32(&mut r)?;
    if version != MODEL_VERSION {
        return Err(IoError::UnsupportedVersion(version));
    }
    let parts = read_u32(&mut r)?;
    let rotational = read_dictionary(&mut r, DictionaryKind::Rotational)?;
    let translational = read_dictionary(&mut r, DictionaryKind::Translational)?;

    let gamma = read_f64(&mut r)?;
    let c = read_f64(&mut r)?;
    let n_classes = read_u32(&mut r)? as usize;
    let mut classes = Vec::with_capacity(n_classes);
    for _ in 0..n_classes {
        let len = read_u64(&mut r)? as usize;
        let mut bytes = vec![0u8; len];
        r.read_exact(&mut bytes)?;
        classes.push(
            String::from_utf8(bytes).map_err(|_| IoError::Corrupt("class name".into()))?,
        );
    }
    let n_pairs = read_u32(&mut r)? as usize;
    let mut pairs = Vec::with_capacity(n_pairs);
    for _ in 0..n_pairs {
        let class_a = read_u32(&mut r)? as usize;
        let class_b = read_u32(&mut r)? as usize;
        let bias = read_f64(&mut r)?;
        let n_sv = read_u64(&mut r)? as usize;
        let dim = read_u64(&mut r)? as usize;
        let mut support_vectors = Vec::with_capacity(n_sv);
        let mut coefficients = Vec::with_capacity(n_sv);
        for _ in 0..n_sv {
            coefficients.push(read_f64(&mut r)?);
            let mut sv = Vec::with_capacity(dim);
            for _ in 0..dim {
                sv.push(read_f64(&mut r)?);
            }
            support_vectors.push(sv);
        }
        if class_a >= classes.len() || class_b >= classes.len() {
            return Err(IoError::Corrupt("pair class index".into()));
        }
        pairs.push(PairClassifier {
            class_a,
            class_b,
            support_vectors,
            coefficients,
            bias,
        });
    }

    Ok(BowModel {
        dicts: BowDictionaries {
            rotational,
            translational,
        },
        svm: SvmModel {
            classes,
            gamma,
            c,
            pairs,
        },
        parts,
    })
}

/// Write a value as pretty JSON, with a trailing newline.
pub fn save_json<S: Serialize>(path: &Path, value: &S) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
