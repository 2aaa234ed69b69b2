//! Binary model checkpoints. Byte layout is documented in `docs/formats.md`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io_util::{write_atomic, Reader};
use crate::matrix::Matrix;
use crate::model::activation::{Concave, PillarOutput};
use crate::model::dspn::DspnModel;
use crate::model::pillar::{DenseLayer, PillarParams};
use crate::model::roof::RoofParams;
use crate::setfn::Matroid;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"DSPNCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: DspnModel,
    pub seed: u64,
    pub config_hash: String,
}

fn put_u32(buf: &mut Vec<u8>, v: usize) {
    buf.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_f64s(buf: &mut Vec<u8>, vs: &[f64]) {
    for v in vs {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

pub(crate) fn encode(ck: &Checkpoint) -> Vec<u8> {
    let m = &ck.model;
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&ck.seed.to_le_bytes());
    put_u32(&mut buf, ck.config_hash.len());
    buf.extend_from_slice(ck.config_hash.as_bytes());

    put_u32(&mut buf, m.d_in());
    buf.push(match m.pillar.output {
        PillarOutput::Softplus => 0,
        PillarOutput::Clamp => 1,
    });
    put_u32(&mut buf, m.pillar.layers.len());
    for l in &m.pillar.layers {
        put_u32(&mut buf, l.input_dim());
        put_u32(&mut buf, l.output_dim());
    }

    match &m.matroid {
        Matroid::Free => buf.push(0),
        Matroid::Uniform { k } => {
            buf.push(1);
            put_u32(&mut buf, *k);
        }
        Matroid::Partition { block_of, limits } => {
            buf.push(2);
            put_u32(&mut buf, block_of.len());
            put_u32(&mut buf, limits.len());
            for &b in block_of {
                put_u32(&mut buf, b);
            }
            for &l in limits {
                put_u32(&mut buf, l);
            }
        }
    }

    put_u32(&mut buf, m.roof.weights.len());
    for (w, acts) in m.roof.weights.iter().zip(&m.roof.activations) {
        put_u32(&mut buf, w.cols());
        put_u32(&mut buf, w.rows());
        buf.extend(acts.iter().map(|a| a.code()));
    }

    put_f64s(&mut buf, &m.pillar.input_shift);
    put_f64s(&mut buf, &m.pillar.input_scale);
    put_f64s(&mut buf, &m.flat_params());
    buf
}

pub(crate) fn decode(bytes: &[u8], path: &Path) -> Result<Checkpoint> {
    let mut r = Reader::new(bytes, path);
    let magic = r.bytes(8)?;
    if magic != CHECKPOINT_MAGIC {
        return Err(Error::format(path, "bad checkpoint magic"));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::format(
            path,
            format!("unsupported checkpoint version {version}"),
        ));
    }
    let seed = r.u64()?;
    let hash_len = r.u32()? as usize;
    let config_hash = String::from_utf8(r.bytes(hash_len)?.to_vec())
        .map_err(|_| Error::format(path, "config hash is not UTF-8"))?;

    let d_in = r.u32()? as usize;
    let output = match r.u8()? {
        0 => PillarOutput::Softplus,
        1 => PillarOutput::Clamp,
        c => {
            return Err(Error::format(
                path,
                format!("unknown pillar output code {c}"),
            ))
        }
    };
    let n_layers = r.u32()? as usize;
    let mut shapes = Vec::with_capacity(n_layers.min(1024));
    for _ in 0..n_layers {
        shapes.push((r.u32()? as usize, r.u32()? as usize));
    }

    let matroid = match r.u8()? {
        0 => Matroid::Free,
        1 => Matroid::Uniform {
            k: r.u32()? as usize,
        },
        2 => {
            let n = r.u32()? as usize;
            let nb = r.u32()? as usize;
            let block_of = (0..n)
                .map(|_| r.u32().map(|v| v as usize))
                .collect::<Result<_>>()?;
            let limits = (0..nb)
                .map(|_| r.u32().map(|v| v as usize))
                .collect::<Result<_>>()?;
            Matroid::Partition { block_of, limits }
        }
        t => return Err(Error::format(path, format!("unknown matroid tag {t}"))),
    };

    let n_roof = r.u32()? as usize;
    let mut roof_shapes = Vec::with_capacity(n_roof.min(1024));
    let mut activations = Vec::with_capacity(n_roof.min(1024));
    for _ in 0..n_roof {
        let (cols, rows) = (r.u32()? as usize, r.u32()? as usize);
        let acts = r
            .bytes(cols)?
            .iter()
            .map(|&c| {
                Concave::from_code(c)
                    .ok_or_else(|| Error::format(path, format!("unknown activation code {c}")))
            })
            .collect::<Result<Vec<_>>>()?;
        roof_shapes.push((rows, cols));
        activations.push(acts);
    }

    let input_shift = r.f64s(d_in)?;
    let input_scale = r.f64s(d_in)?;
    let layers = shapes
        .iter()
        .map(|&(i, o)| DenseLayer::zeros(i, o))
        .collect();
    let weights = roof_shapes
        .iter()
        .map(|&(rows, cols)| Matrix::zeros(rows, cols))
        .collect();
    let mut pillar = PillarParams::new(layers, output)?;
    pillar.input_shift = input_shift;
    pillar.input_scale = input_scale;
    let roof = RoofParams::new(weights, activations)?;
    let mut model = DspnModel::new(pillar, matroid, roof)?;
    if model.d_in() != d_in {
        return Err(Error::format(
            path,
            "pillar input width disagrees with header",
        ));
    }
    let flat = r.f64s(model.param_count())?;
    model.set_flat_params(&flat)?;
    r.finish()?;
    Ok(Checkpoint {
        model,
        seed,
        config_hash,
    })
}

/// Write atomically (temp file + rename), so a reader never sees a partial file.
pub fn save_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    write_atomic(path, &encode(ck))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::dspn::ModelConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample(matroid: Matroid) -> Checkpoint {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut cfg = ModelConfig::new(3);
        cfg.pillar_hidden = vec![4];
        cfg.d = 6;
        cfg.roof_hidden = vec![3];
        cfg.matroid = matroid;
        let mut model = DspnModel::random(&cfg, &mut rng).unwrap();
        model.pillar.input_shift = vec![0.5, -1.0, 2.0];
        Checkpoint {
            model,
            seed: 99,
            config_hash: "abc123".into(),
        }
    }

    #[test]
    fn round_trips_all_matroids() {
        let p = Matroid::partition(&[vec![0, 2], vec![1, 3]], &[1, 2]).unwrap();
        for m in [Matroid::Free, Matroid::Uniform { k: 3 }, p] {
            let ck = sample(m);
            let bytes = encode(&ck);
            assert_eq!(decode(&bytes, Path::new("mem")).unwrap(), ck);
        }
    }

    #[test]
    fn detects_truncation_and_bad_magic() {
        let bytes = encode(&sample(Matroid::Free));
        let cut = &bytes[..bytes.len() - 3];
        assert!(matches!(
            decode(cut, Path::new("mem")),
            Err(Error::Truncated { .. })
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            decode(&bad, Path::new("mem")),
            Err(Error::Format { .. })
        ));
        let mut long = bytes;
        long.push(0);
        assert!(decode(&long, Path::new("mem")).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let ck = sample(Matroid::Free);
        save_checkpoint(&path, &ck).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), ck);
    }
}
