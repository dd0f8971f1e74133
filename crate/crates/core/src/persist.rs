//! Binary model file and code dump formats. All integers and floats are
//! little-endian.
//!
//! Model file:
//!
//! ```text
//! "SLSH1" u16:version
//! repeated { [u8; 4]:tag  u64:payload_len  payload }
//!   SCHM  u8 scheme (0 slsh, 1 lsh, 2 pcah)
//!   PREP  u64 n_dims, f64 means[n_dims], f64 stds[n_dims], u64 k,
//!         f64 basis[k * n_dims], f64 eigenvalues[k], f64 contribution_ratio
//!   POOL  u64 seed, u64 pool_size, u64 n_dims, f64 normals[pool_size * n_dims]
//!   TRAN  u64 iterations, u64 train_seed, u64 n, f64 omega[n], u64 b, u64 selected[b]
//! ```
//!
//! `PREP` is optional; unknown tags are skipped.
//!
//! Code dump:
//!
//! ```text
//! "SLCD" u16:version u64:n_codes u64:bits
//! u64 words[n_codes * ceil(bits / 64)]   (bit i of a code: word i/64, bit i%64)
//! i64 labels[n_codes]
//! ```

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use crate::bits::{words_for, BitCode};
use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::hashing::HyperplanePool;
use crate::model::{HashModel, Scheme};
use crate::preprocess::{PcaProjection, Preprocessor, Standardizer};
use crate::trainer::ImportanceWeights;

pub const MODEL_MAGIC: &[u8; 5] = b"SLSH1";
pub const MODEL_VERSION: u16 = 1;
pub const CODES_MAGIC: &[u8; 4] = b"SLCD";
pub const CODES_VERSION: u16 = 1;

fn put_f64s(buf: &mut Vec<u8>, vals: &[f64]) {
    for &v in vals {
        buf.write_f64::<LE>(v).expect("vec write");
    }
}

fn put_u64(buf: &mut Vec<u8>, v: u64) {
    buf.write_u64::<LE>(v).expect("vec write");
}

fn section(out: &mut Vec<u8>, tag: &[u8; 4], payload: Vec<u8>) {
    out.extend_from_slice(tag);
    put_u64(out, payload.len() as u64);
    out.extend(payload);
}

pub fn model_to_bytes(model: &HashModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.write_u16::<LE>(MODEL_VERSION).expect("vec write");

    section(&mut out, b"SCHM", vec![model.scheme.code()]);

    if let Some(p) = &model.preprocess {
        let mut s = Vec::new();
        put_u64(&mut s, p.standardizer.n_dims() as u64);
        put_f64s(&mut s, &p.standardizer.means);
        put_f64s(&mut s, &p.standardizer.stds);
        put_u64(&mut s, p.pca.k() as u64);
        for row in &p.pca.basis {
            put_f64s(&mut s, row);
        }
        put_f64s(&mut s, &p.pca.eigenvalues);
        put_f64s(&mut s, &[p.pca.contribution_ratio]);
        section(&mut out, b"PREP", s);
    }

    let mut s = Vec::new();
    put_u64(&mut s, model.pool.seed);
    put_u64(&mut s, model.pool.pool_size() as u64);
    put_u64(&mut s, model.pool.n_dims() as u64);
    put_f64s(&mut s, model.pool.normals());
    section(&mut out, b"POOL", s);

    let mut s = Vec::new();
    put_u64(&mut s, model.iterations as u64);
    put_u64(&mut s, model.train_seed);
    put_u64(&mut s, model.omega.len() as u64);
    put_f64s(&mut s, model.omega.as_slice());
    put_u64(&mut s, model.selected.len() as u64);
    for &i in &model.selected {
        put_u64(&mut s, i as u64);
    }
    section(&mut out, b"TRAN", s);
    out
}

struct Reader<'a>(Cursor<&'a [u8]>);

impl Reader<'_> {
    fn remaining(&self) -> usize {
        self.0.get_ref().len() - self.0.position() as usize
    }

    fn u64(&mut self) -> Result<u64> {
        self.0.read_u64::<LE>().map_err(truncated)
    }

    fn count(&mut self, elem_bytes: usize) -> Result<usize> {
        let n = self.u64()?;
        let n = usize::try_from(n).map_err(|_| Error::Format(format!("count {n} too large")))?;
        if n.checked_mul(elem_bytes).is_none_or(|b| b > self.remaining()) {
            return Err(Error::Format(format!("count {n} exceeds section size")));
        }
        Ok(n)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        if n.checked_mul(8).is_none_or(|b| b > self.remaining()) {
            return Err(Error::Format("array exceeds section size".into()));
        }
        let mut v = vec![0.0; n];
        self.0.read_f64_into::<LE>(&mut v).map_err(truncated)?;
        Ok(v)
    }

    fn done(&self, tag: &str) -> Result<()> {
        if self.remaining() != 0 {
            return Err(Error::Format(format!("{} trailing bytes in {tag}", self.remaining())));
        }
        Ok(())
    }
}

fn truncated(_: std::io::Error) -> Error {
    Error::Format("truncated data".into())
}

fn read_prep(r: &mut Reader) -> Result<Preprocessor> {
    let n = r.count(16)?;
    let means = r.f64s(n)?;
    let stds = r.f64s(n)?;
    let k = r.count(8 * n.max(1))?;
    let basis = r.f64s(k * n)?.chunks(n.max(1)).map(<[f64]>::to_vec).collect();
    let eigenvalues = r.f64s(k)?;
    let contribution_ratio = r.f64s(1)?[0];
    r.done("PREP")?;
    Ok(Preprocessor {
        standardizer: Standardizer { means, stds },
        pca: PcaProjection {
            basis,
            eigenvalues,
            contribution_ratio,
            n_dims: n,
        },
    })
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<HashModel> {
    if bytes.len() < 7 || &bytes[..5] != MODEL_MAGIC {
        return Err(Error::Format("not a model file (bad magic)".into()));
    }
    let version = u16::from_le_bytes([bytes[5], bytes[6]]);
    if version != MODEL_VERSION {
        return Err(Error::Format(format!(
            "unsupported model version {version}, expected {MODEL_VERSION}"
        )));
    }
    let mut cur = Cursor::new(&bytes[7..]);
    let mut scheme = None;
    let mut preprocess = None;
    let mut pool = None;
    let mut training = None;
    while (cur.position() as usize) < cur.get_ref().len() {
        let mut tag = [0u8; 4];
        cur.read_exact(&mut tag).map_err(truncated)?;
        let len = cur.read_u64::<LE>().map_err(truncated)?;
        let start = cur.position() as usize;
        let end = usize::try_from(len)
            .ok()
            .and_then(|l| start.checked_add(l))
            .filter(|&e| e <= cur.get_ref().len())
            .ok_or_else(|| Error::Format("section exceeds file".into()))?;
        let mut r = Reader(Cursor::new(&cur.get_ref()[start..end]));
        cur.set_position(end as u64);
        match &tag {
            b"SCHM" => {
                let c = r.0.read_u8().map_err(truncated)?;
                r.done("SCHM")?;
                scheme = Some(Scheme::from_code(c)?);
            }
            b"PREP" => preprocess = Some(read_prep(&mut r)?),
            b"POOL" => {
                let seed = r.u64()?;
                let size = r.count(8)?;
                let dims = r.count(0)?;
                let normals = r.f64s(size.checked_mul(dims).ok_or_else(|| Error::Format("pool too large".into()))?)?;
                r.done("POOL")?;
                pool = Some(HyperplanePool::from_normals(normals, dims, seed)?);
            }
            b"TRAN" => {
                let iterations = r.u64()? as usize;
                let seed = r.u64()?;
                let n = r.count(8)?;
                let omega = r.f64s(n)?;
                let b = r.count(8)?;
                let selected = (0..b).map(|_| Ok(r.u64()? as usize)).collect::<Result<Vec<_>>>()?;
                r.done("TRAN")?;
                training = Some((iterations, seed, omega, selected));
            }
            _ => {}
        }
    }
    let missing = |s: &str| Error::Format(format!("missing {s} section"));
    let pool = pool.ok_or_else(|| missing("POOL"))?;
    let (iterations, train_seed, omega, selected) = training.ok_or_else(|| missing("TRAN"))?;
    if omega.len() != pool.pool_size() {
        return Err(Error::Format(format!(
            "{} importance weights for a pool of {}",
            omega.len(),
            pool.pool_size()
        )));
    }
    // validates range and uniqueness
    pool.restrict(&selected)
        .map_err(|e| Error::Format(format!("selection: {e}")))?;
    if let Some(p) = &preprocess {
        if p.output_dims() != pool.n_dims() {
            return Err(Error::Format(format!(
                "preprocessing yields {} dims, pool expects {}",
                p.output_dims(),
                pool.n_dims()
            )));
        }
    }
    Ok(HashModel {
        scheme: scheme.ok_or_else(|| missing("SCHM"))?,
        preprocess,
        pool,
        omega: ImportanceWeights::from_vec(omega),
        selected,
        iterations,
        train_seed,
    })
}

pub fn save_model(model: &HashModel, path: &Path) -> Result<()> {
    fs::write(path, model_to_bytes(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<HashModel> {
    model_from_bytes(&fs::read(path)?)
}

pub fn codes_to_bytes(codes: &[BitCode], labels: &[Label]) -> Result<Vec<u8>> {
    if codes.len() != labels.len() {
        return Err(Error::shape(codes.len(), labels.len()));
    }
    let bits = codes.first().map_or(0, BitCode::len);
    if let Some(c) = codes.iter().find(|c| c.len() != bits) {
        return Err(Error::shape(bits, c.len()));
    }
    let mut out = Vec::with_capacity(22 + codes.len() * (8 * words_for(bits) + 8));
    out.extend_from_slice(CODES_MAGIC);
    out.write_u16::<LE>(CODES_VERSION)?;
    put_u64(&mut out, codes.len() as u64);
    put_u64(&mut out, bits as u64);
    for c in codes {
        for &w in c.words() {
            put_u64(&mut out, w);
        }
    }
    for &l in labels {
        out.write_i64::<LE>(l)?;
    }
    Ok(out)
}

pub fn codes_from_bytes(bytes: &[u8]) -> Result<(Vec<BitCode>, Vec<Label>)> {
    if bytes.len() < 22 || &bytes[..4] != CODES_MAGIC {
        return Err(Error::Format("not a code dump (bad magic)".into()));
    }
    let mut r = Cursor::new(&bytes[4..]);
    let version = r.read_u16::<LE>().map_err(truncated)?;
    if version != CODES_VERSION {
        return Err(Error::Format(format!(
            "unsupported code dump version {version}, expected {CODES_VERSION}"
        )));
    }
    let n = r.read_u64::<LE>().map_err(truncated)? as usize;
    let bits = r.read_u64::<LE>().map_err(truncated)? as usize;
    let per = words_for(bits);
    let expected = n
        .checked_mul(8 * per + 8)
        .and_then(|b| b.checked_add(22))
        .ok_or_else(|| Error::Format("code dump header overflows".into()))?;
    if expected != bytes.len() {
        return Err(Error::Format(format!(
            "code dump is {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let mut codes = Vec::with_capacity(n);
    for _ in 0..n {
        let mut words = vec![0u64; per];
        r.read_u64_into::<LE>(&mut words).map_err(truncated)?;
        codes.push(BitCode::from_words(words, bits)?);
    }
    let mut labels = vec![0i64; n];
    r.read_i64_into::<LE>(&mut labels).map_err(truncated)?;
    Ok((codes, labels))
}

pub fn write_codes(path: &Path, codes: &[BitCode], labels: &[Label]) -> Result<()> {
    fs::write(path, codes_to_bytes(codes, labels)?)?;
    Ok(())
}

pub fn read_codes(path: &Path) -> Result<(Vec<BitCode>, Vec<Label>)> {
    codes_from_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::gen_synthetic;
    use crate::model::{fit, PipelineConfig};
    use proptest::prelude::*;

    fn small_model(scheme: Scheme) -> HashModel {
        let d = gen_synthetic(3, 15, 8, 0.2, 4).unwrap();
        let cfg = PipelineConfig {
            scheme,
            pool_size: 96,
            bits: 3,
            iterations: 20,
            seed: 11,
            ..Default::default()
        };
        fit(&d, &cfg).unwrap().0
    }

    fn bit_pattern(m: &HashModel) -> Vec<u64> {
        let mut v: Vec<u64> = m.pool.normals().iter().map(|x| x.to_bits()).collect();
        v.extend(m.omega.as_slice().iter().map(|x| x.to_bits()));
        let p = m.preprocess.as_ref().unwrap();
        v.extend(p.standardizer.means.iter().chain(&p.standardizer.stds).map(|x| x.to_bits()));
        v.extend(p.pca.basis.iter().flatten().chain(&p.pca.eigenvalues).map(|x| x.to_bits()));
        v.push(p.pca.contribution_ratio.to_bits());
        v
    }

    #[test]
    fn model_round_trip_is_bit_exact() {
        for scheme in [Scheme::Slsh, Scheme::Lsh, Scheme::Pcah] {
            let m = small_model(scheme);
            let back = model_from_bytes(&model_to_bytes(&m)).unwrap();
            assert_eq!(back, m);
            assert_eq!(bit_pattern(&back), bit_pattern(&m));
            assert_eq!(model_to_bytes(&back), model_to_bytes(&m));
        }
    }

    #[test]
    fn version_and_magic_checked() {
        let mut bytes = model_to_bytes(&small_model(Scheme::Lsh));
        bytes[5] = 9;
        match model_from_bytes(&bytes) {
            Err(Error::Format(msg)) => assert!(msg.contains("version 9")),
            other => panic!("{other:?}"),
        }
        assert!(model_from_bytes(b"NOPE!xx").is_err());
        let good = model_to_bytes(&small_model(Scheme::Lsh));
        assert!(model_from_bytes(&good[..good.len() - 3]).is_err());
    }

    #[test]
    fn unknown_sections_skipped() {
        let m = small_model(Scheme::Slsh);
        let mut bytes = model_to_bytes(&m);
        section(&mut bytes, b"XTRA", vec![1, 2, 3]);
        assert_eq!(model_from_bytes(&bytes).unwrap(), m);
    }

    #[test]
    fn code_dump_rejects_bad_size() {
        let codes = vec![BitCode::from_bit_str("101").unwrap(); 2];
        let bytes = codes_to_bytes(&codes, &[1, 2]).unwrap();
        assert_eq!(bytes.len(), 22 + 2 * 16);
        assert!(codes_from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(codes_to_bytes(&codes, &[1]).is_err());
    }

    proptest! {
        #[test]
        fn code_dump_round_trips(bits in 0usize..200, n in 0usize..6, seed in any::<u64>()) {
            let codes: Vec<BitCode> = (0..n)
                .map(|i| BitCode::from_bools((0..bits).map(|b| (seed.rotate_left((b + i) as u32) & 1) == 1)))
                .collect();
            let labels: Vec<Label> = (0..n as i64).map(|i| i - 3).collect();
            let (c, l) = codes_from_bytes(&codes_to_bytes(&codes, &labels).unwrap()).unwrap();
            prop_assert_eq!(c, codes);
            prop_assert_eq!(l, labels);
        }
    }
}
