//! Checkpoint files.
//!
//! Text layout, one item per line:
//!
//! ```text
//! slicernn-ckpt-v1
//! arch <modified_rnn|perstep_rnn|gru>
//! scalar <f32|f64>
//! dims <vocab> <embed> <hidden> <classes> <steps>
//! tensor <name> <rows> <cols>
//! <row of values as 16-digit hex IEEE-754 binary64 bit patterns, space separated>
//! ...
//! sha256 <hex digest of every byte before this line>
//! ```
//!
//! Tensors appear in [`Params::tensors`] order: `L`, the cell matrices, `W_s`,
//! `b2`. Values are widened to binary64, so `f32` and `f64` parameters both
//! round-trip bit-exactly.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::models::{Arch, Dims, Params};
use crate::numkernel::Matrix;
use crate::scalar::Real;

pub const CHECKPOINT_HEADER: &str = "slicernn-ckpt-v1";
const HEADER_PREFIX: &str = "slicernn-ckpt-";

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn encode_checkpoint<S: Real>(params: &Params<S>) -> String {
    let d = &params.dims;
    let mut out = format!(
        "{CHECKPOINT_HEADER}\narch {}\nscalar {}\ndims {} {} {} {} {}\n",
        params.arch,
        S::NAME,
        d.vocab_size,
        d.embed_dim,
        d.hidden_dim,
        d.num_classes,
        d.steps
    );
    for t in params.tensors() {
        out.push_str(&format!(
            "tensor {} {} {}\n",
            t.name,
            t.value.rows(),
            t.value.cols()
        ));
        for r in 0..t.value.rows() {
            let row: Vec<String> = t
                .value
                .row(r)
                .iter()
                .map(|v| format!("{:016x}", v.as_f64().to_bits()))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    let digest = hex_digest(out.as_bytes());
    out.push_str(&format!("sha256 {digest}\n"));
    out
}

fn field<'a>(lines: &mut impl Iterator<Item = &'a str>, key: &str) -> Result<Vec<String>> {
    let line = lines
        .next()
        .ok_or_else(|| Error::Format(format!("missing {key} line")))?;
    let mut parts = line.split(' ');
    if parts.next() != Some(key) {
        return Err(Error::Format(format!(
            "expected {key} line, found {line:?}"
        )));
    }
    Ok(parts.map(str::to_owned).collect())
}

pub fn decode_checkpoint<S: Real>(text: &str) -> Result<Params<S>> {
    match text.split_once('\n') {
        Some((first, _)) if first == CHECKPOINT_HEADER => {}
        Some((first, _)) if first.starts_with(HEADER_PREFIX) => {
            return Err(Error::Version {
                found: first.to_owned(),
                expected: CHECKPOINT_HEADER.to_owned(),
            })
        }
        Some(_) => return Err(Error::Format("not a checkpoint file".into())),
        None => return Err(Error::Corruption("file ends inside the header".into())),
    }

    let body_end = text
        .trim_end_matches('\n')
        .rfind('\n')
        .map(|i| i + 1)
        .ok_or_else(|| Error::Corruption("missing checksum".into()))?;
    let (body, trailer) = text.split_at(body_end);
    let stored = trailer
        .trim_end()
        .strip_prefix("sha256 ")
        .ok_or_else(|| Error::Corruption("missing checksum line".into()))?;
    if stored != hex_digest(body.as_bytes()) {
        return Err(Error::Corruption("checksum mismatch".into()));
    }

    let mut lines = body.lines().skip(1).peekable();
    let arch: Arch = field(&mut lines, "arch")?
        .first()
        .ok_or_else(|| Error::Format("empty arch".into()))?
        .parse()?;
    let _scalar = field(&mut lines, "scalar")?;
    let nums = |v: Vec<String>| -> Result<Vec<usize>> {
        v.iter()
            .map(|s| {
                s.parse()
                    .map_err(|_| Error::Format(format!("bad number {s:?}")))
            })
            .collect()
    };
    let d = nums(field(&mut lines, "dims")?)?;
    if d.len() != 5 {
        return Err(Error::Format("dims needs five values".into()));
    }
    let dims = Dims {
        vocab_size: d[0],
        embed_dim: d[1],
        hidden_dim: d[2],
        num_classes: d[3],
        steps: d[4],
    };

    let mut tensors = Vec::new();
    while lines.peek().is_some() {
        let spec = field(&mut lines, "tensor")?;
        if spec.len() != 3 {
            return Err(Error::Format("tensor line needs name, rows, cols".into()));
        }
        let shape = nums(spec[1..].to_vec())?;
        let (rows, cols) = (shape[0], shape[1]);
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| Error::Format(format!("tensor {} truncated", spec[0])))?;
            for tok in line.split(' ').filter(|t| !t.is_empty()) {
                let bits = u64::from_str_radix(tok, 16)
                    .map_err(|_| Error::Format(format!("bad value {tok:?}")))?;
                data.push(S::lit(f64::from_bits(bits)));
            }
        }
        tensors.push(Matrix::from_vec(rows, cols, data)?);
    }
    Params::from_tensors(arch, dims, tensors)
}

pub fn save_checkpoint<S: Real>(params: &Params<S>, path: &Path) -> Result<()> {
    fs::write(path, encode_checkpoint(params)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint<S: Real>(path: &Path) -> Result<Params<S>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::init_params;
    use crate::numkernel::Rng;

    fn dims() -> Dims {
        Dims {
            vocab_size: 11,
            embed_dim: 3,
            hidden_dim: 4,
            num_classes: 5,
            steps: 2,
        }
    }

    #[test]
    fn round_trip_every_arch() {
        for arch in Arch::ALL {
            let p: Params<f64> = init_params(arch, dims(), &mut Rng::new(2)).unwrap();
            let back: Params<f64> = decode_checkpoint(&encode_checkpoint(&p)).unwrap();
            assert_eq!(back, p);
            let q: Params<f32> = init_params(arch, dims(), &mut Rng::new(2)).unwrap();
            let back: Params<f32> = decode_checkpoint(&encode_checkpoint(&q)).unwrap();
            assert_eq!(back, q);
        }
    }

    #[test]
    fn truncation_is_corruption() {
        let p: Params<f64> = init_params(Arch::Gru, dims(), &mut Rng::new(2)).unwrap();
        let text = encode_checkpoint(&p);
        for cut in [0, 5, text.len() / 2, text.len() - 10] {
            let err = decode_checkpoint::<f64>(&text[..cut]).unwrap_err();
            assert!(matches!(err, Error::Corruption(_)), "cut {cut}: {err:?}");
        }
    }

    #[test]
    fn flipped_value_is_corruption() {
        let p: Params<f64> = init_params(Arch::ModifiedRnn, dims(), &mut Rng::new(2)).unwrap();
        let text = encode_checkpoint(&p).replacen("tensor b2 1 5\n0", "tensor b2 1 5\n1", 1);
        assert!(matches!(
            decode_checkpoint::<f64>(&text),
            Err(Error::Corruption(_))
        ));
    }

    #[test]
    fn other_version_is_rejected() {
        let p: Params<f64> = init_params(Arch::ModifiedRnn, dims(), &mut Rng::new(2)).unwrap();
        let text = encode_checkpoint(&p).replacen("ckpt-v1", "ckpt-v2", 1);
        assert!(matches!(
            decode_checkpoint::<f64>(&text),
            Err(Error::Version { .. })
        ));
    }
}
