//! C ABI over `slsh-core`.
//!
//! Every fallible call returns an [`SlshStatus`]; on failure the message is
//! available from [`slsh_last_error`] on the same thread until the next
//! failing call. Datasets and models are opaque handles released with their
//! `_free` function. Codes are exchanged as packed `uint64_t` words, bit `i`
//! of a code in bit `i % 64` of word `i / 64`, unused tail bits zero.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use slsh_core::dataset::LabeledDataset;
use slsh_core::eval::search;
use slsh_core::model::{fit, HashModel, PipelineConfig, Scheme};
use slsh_core::persist::{load_model, save_model};
use slsh_core::{BitCode, Error};

/// Result code of every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlshStatus {
    Ok = 0,
    NullPointer = 1,
    Parse = 2,
    Validation = 3,
    Shape = 4,
    InsufficientData = 5,
    Capability = 6,
    Degenerate = 7,
    Format = 8,
    Io = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlshScheme {
    Slsh = 0,
    Lsh = 1,
    Pcah = 2,
}

/// Training parameters. Obtain defaults from [`slsh_fit_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SlshFitConfig {
    pub scheme: SlshScheme,
    /// Cumulative contribution ratio kept by PCA, in (0, 1].
    pub pca_ratio: f64,
    /// Candidate hyperplanes generated before selection.
    pub pool_size: usize,
    /// Hyperplanes kept in the model.
    pub bits: usize,
    pub iterations: usize,
    pub seed: u64,
}

/// Labeled row-major matrix of `f64`.
pub struct SlshDataset(LabeledDataset);

/// Trained or baseline hash model with its stored preprocessing.
pub struct SlshModel(HashModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SlshStatus {
    match e {
        Error::Parse { .. } => SlshStatus::Parse,
        Error::Validation(_) => SlshStatus::Validation,
        Error::Shape { .. } => SlshStatus::Shape,
        Error::InsufficientData { .. } => SlshStatus::InsufficientData,
        Error::Capability(_) => SlshStatus::Capability,
        Error::Degenerate(_) => SlshStatus::Degenerate,
        Error::Format(_) => SlshStatus::Format,
        Error::Io(_) => SlshStatus::Io,
    }
}

struct Fail(SlshStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SlshStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SlshStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SlshStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SlshStatus::Panic
        }
    }
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| Fail(SlshStatus::Validation, "path is not valid UTF-8".into()))
}

unsafe fn out_arg<'a, T>(p: *mut *mut T) -> Result<&'a mut *mut T, Fail> {
    p.as_mut().ok_or_else(|| null("output handle"))
}

/// Message of the last failed call on this thread, or NULL if none.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn slsh_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Number of `uint64_t` words holding a code of `bits` bits.
#[no_mangle]
pub extern "C" fn slsh_words_per_code(bits: usize) -> usize {
    bits.div_ceil(64)
}

/// # Safety
/// `values` must point to `n_rows * n_dims` doubles and `labels` to `n_rows`
/// integers. `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn slsh_dataset_new(
    values: *const f64,
    labels: *const i64,
    n_rows: usize,
    n_dims: usize,
    out: *mut *mut SlshDataset,
) -> SlshStatus {
    guard(|| {
        let out = out_arg(out)?;
        if values.is_null() || labels.is_null() {
            return Err(null("values or labels"));
        }
        let len = n_rows
            .checked_mul(n_dims)
            .ok_or_else(|| Fail(SlshStatus::Validation, "n_rows * n_dims overflows".into()))?;
        let values = std::slice::from_raw_parts(values, len).to_vec();
        let labels = std::slice::from_raw_parts(labels, n_rows).to_vec();
        let data = LabeledDataset::new(values, n_dims, labels)?;
        *out = Box::into_raw(Box::new(SlshDataset(data)));
        Ok(())
    })
}

/// # Safety
/// `data` must be NULL or a handle from [`slsh_dataset_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn slsh_dataset_free(data: *mut SlshDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// # Safety
/// `data` must be a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn slsh_dataset_n_rows(data: *const SlshDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.n_rows())
}

/// # Safety
/// `data` must be a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn slsh_dataset_n_dims(data: *const SlshDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.n_dims())
}

#[no_mangle]
pub extern "C" fn slsh_fit_config_default() -> SlshFitConfig {
    let d = PipelineConfig::default();
    SlshFitConfig {
        scheme: SlshScheme::Slsh,
        pca_ratio: d.pca_ratio,
        pool_size: d.pool_size,
        bits: d.bits,
        iterations: d.iterations,
        seed: d.seed,
    }
}

/// Standardizes, projects and builds the configured scheme on `learning`.
///
/// # Safety
/// `learning` and `config` must be valid; `out` must be a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn slsh_model_fit(
    learning: *const SlshDataset,
    config: *const SlshFitConfig,
    out: *mut *mut SlshModel,
) -> SlshStatus {
    guard(|| {
        let out = out_arg(out)?;
        let data = learning.as_ref().ok_or_else(|| null("learning"))?;
        let c = config.as_ref().ok_or_else(|| null("config"))?;
        let cfg = PipelineConfig {
            scheme: match c.scheme {
                SlshScheme::Slsh => Scheme::Slsh,
                SlshScheme::Lsh => Scheme::Lsh,
                SlshScheme::Pcah => Scheme::Pcah,
            },
            pca_ratio: c.pca_ratio,
            pool_size: c.pool_size,
            bits: c.bits,
            iterations: c.iterations,
            seed: c.seed,
        };
        let (model, _) = fit(&data.0, &cfg)?;
        *out = Box::into_raw(Box::new(SlshModel(model)));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated UTF-8 string; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn slsh_model_load(path: *const c_char, out: *mut *mut SlshModel) -> SlshStatus {
    guard(|| {
        let out = out_arg(out)?;
        let model = load_model(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(SlshModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must be a live model handle; `path` a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn slsh_model_save(model: *const SlshModel, path: *const c_char) -> SlshStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        save_model(&model.0, path_arg(path)?)?;
        Ok(())
    })
}

/// # Safety
/// `model` must be NULL or a model handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn slsh_model_free(model: *mut SlshModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Largest code width the model can produce.
///
/// # Safety
/// `model` must be a live model handle.
#[no_mangle]
pub unsafe extern "C" fn slsh_model_capacity(model: *const SlshModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.capacity())
}

/// Raw feature dimension the model expects.
///
/// # Safety
/// `model` must be a live model handle.
#[no_mangle]
pub unsafe extern "C" fn slsh_model_input_dims(model: *const SlshModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.input_dims())
}

/// Encodes every row of `data` with the first `bits` selected hyperplanes
/// (`bits = 0` means the full capacity). Row `r` is written to
/// `out_words[r * w .. (r + 1) * w]` with `w = slsh_words_per_code(bits)`.
///
/// # Safety
/// Handles must be live; `out_words` must hold `out_len` words.
#[no_mangle]
pub unsafe extern "C" fn slsh_model_encode(
    model: *const SlshModel,
    data: *const SlshDataset,
    bits: usize,
    out_words: *mut u64,
    out_len: usize,
) -> SlshStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let data = data.as_ref().ok_or_else(|| null("data"))?;
        if out_words.is_null() {
            return Err(null("out_words"));
        }
        let bits = if bits == 0 { model.0.capacity() } else { bits };
        let w = slsh_words_per_code(bits);
        let need = data.0.n_rows() * w;
        if out_len < need {
            return Err(Fail(
                SlshStatus::BufferTooSmall,
                format!("output buffer holds {out_len} words, {need} needed"),
            ));
        }
        let codes = model.0.encode(&data.0, Some(bits))?;
        let out = std::slice::from_raw_parts_mut(out_words, need);
        for (chunk, code) in out.chunks_exact_mut(w).zip(&codes) {
            chunk.copy_from_slice(code.words());
        }
        Ok(())
    })
}

/// Hamming distance between two packed codes of `bits` bits.
///
/// # Safety
/// `a` and `b` must each hold `slsh_words_per_code(bits)` words.
#[no_mangle]
pub unsafe extern "C" fn slsh_hamming(a: *const u64, b: *const u64, bits: usize) -> u32 {
    if a.is_null() || b.is_null() {
        return 0;
    }
    let w = slsh_words_per_code(bits);
    slsh_core::bits::hamming_words(std::slice::from_raw_parts(a, w), std::slice::from_raw_parts(b, w))
}

unsafe fn codes_arg(words: *const u64, n: usize, bits: usize) -> Result<Vec<BitCode>, Fail> {
    if words.is_null() && n > 0 {
        return Err(null("codes"));
    }
    let w = slsh_words_per_code(bits);
    if n == 0 {
        return Ok(Vec::new());
    }
    std::slice::from_raw_parts(words, n * w)
        .chunks_exact(w)
        .map(|c| BitCode::from_words(c.to_vec(), bits).map_err(Fail::from))
        .collect()
}

/// Ranks `db` by Hamming distance to `query`, ascending with ties broken by
/// index, and writes the first `k` indices and distances.
///
/// # Safety
/// `query` holds one code and `db` holds `n_db` codes of `bits` bits;
/// `out_indices` and `out_distances` hold `k` entries each.
#[no_mangle]
pub unsafe extern "C" fn slsh_search(
    query: *const u64,
    db: *const u64,
    n_db: usize,
    bits: usize,
    k: usize,
    out_indices: *mut usize,
    out_distances: *mut u32,
) -> SlshStatus {
    guard(|| {
        if out_indices.is_null() || out_distances.is_null() {
            return Err(null("output buffers"));
        }
        let q = codes_arg(query, 1, bits)?;
        let db = codes_arg(db, n_db, bits)?;
        let r = search(&q[0], &db, k)?;
        std::slice::from_raw_parts_mut(out_indices, k).copy_from_slice(&r.ranked_indices);
        std::slice::from_raw_parts_mut(out_distances, k).copy_from_slice(&r.distances);
        Ok(())
    })
}
