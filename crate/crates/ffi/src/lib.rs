//! C ABI for textshift.
//!
//! Models and embedding stores are opaque handles created by `*_load`
//! functions and released by the matching `*_free`. Every fallible call
//! returns a [`TsStatus`]; on failure a description is available from
//! [`ts_last_error`] on the same thread. Strings returned through `out`
//! parameters are NUL-terminated UTF-8 JSON owned by the caller and must be
//! released with [`ts_string_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use textshift::attack::{greedy_attack, AttackConfig};
use textshift::embeddings::EmbeddingStore;
use textshift::explain::{explain_document, LimeConfig};
use textshift::model::{LinearTextModel, TextModel};

/// Result codes shared by every entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TsStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidInput = 5,
    Internal = 6,
}

/// Opaque trained classifier.
pub struct TsModel {
    inner: LinearTextModel,
}

/// Opaque word-embedding store.
pub struct TsEmbeddings {
    inner: EmbeddingStore,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

struct Failure(TsStatus, String);

impl From<textshift::Error> for Failure {
    fn from(e: textshift::Error) -> Self {
        use textshift::Error as E;
        let status = match &e {
            E::Io { .. } => TsStatus::Io,
            E::Row { .. } | E::DimensionMismatch { .. } | E::Json(_) | E::Csv(_) => TsStatus::Parse,
            _ => TsStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure(TsStatus::Parse, e.to_string())
    }
}

/// Runs `body`, converting errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> TsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => TsStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            TsStatus::Internal
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(TsStatus::NullArgument, format!("{what} is null"))
}

/// # Safety
/// `s` must be null or point to a NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure(TsStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

/// # Safety
/// `r` must be null or point to a live value of type `T`.
unsafe fn read_ref<'a, T>(r: *const T, what: &str) -> Result<&'a T, Failure> {
    r.as_ref().ok_or_else(|| null(what))
}

fn json_out(out: *mut *mut c_char, json: String) -> Result<(), Failure> {
    let s = CString::new(json).map_err(|_| Failure(TsStatus::Internal, "NUL in output".into()))?;
    // SAFETY: callers check `out` for null before producing output.
    unsafe { *out = s.into_raw() };
    Ok(())
}

/// # Safety
/// `config_json` must be null or a NUL-terminated string.
unsafe fn read_config<T: serde::de::DeserializeOwned + Default>(
    config_json: *const c_char,
) -> Result<T, Failure> {
    if config_json.is_null() {
        return Ok(T::default());
    }
    Ok(serde_json::from_str(read_str(config_json, "config_json")?)?)
}

/// Message describing the last failure on this thread, or null.
///
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn ts_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ts_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a pointer returned through an `out` parameter of this
/// library that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn ts_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a model JSON file written by `textshift train`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_model_load(path: *const c_char, out: *mut *mut TsModel) -> TsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = LinearTextModel::load(Path::new(read_str(path, "path")?))?;
        *out = Box::into_raw(Box::new(TsModel { inner }));
        Ok(())
    })
}

/// Builds a model from the JSON text of a model file.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_model_from_json(json: *const c_char, out: *mut *mut TsModel) -> TsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = LinearTextModel::from_json(read_str(json, "json")?)?;
        *out = Box::into_raw(Box::new(TsModel { inner }));
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle from `ts_model_load`/`ts_model_from_json`
/// that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn ts_model_free(model: *mut TsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Class probabilities of `text` and the predicted class (0 or 1).
///
/// # Safety
/// `model` must be a live handle, `text` a NUL-terminated string and the
/// three output pointers valid.
#[no_mangle]
pub unsafe extern "C" fn ts_model_predict(
    model: *const TsModel,
    text: *const c_char,
    out_p0: *mut f64,
    out_p1: *mut f64,
    out_class: *mut u8,
) -> TsStatus {
    guard(|| {
        let model = read_ref(model, "model")?;
        let text = read_str(text, "text")?;
        if out_p0.is_null() || out_p1.is_null() || out_class.is_null() {
            return Err(null("output pointer"));
        }
        let p = model.inner.predict(text);
        *out_p0 = p.probs.0;
        *out_p1 = p.probs.1;
        *out_class = p.predicted_class;
        Ok(())
    })
}

/// Number of predictions this model has served, across all callers.
///
/// # Safety
/// `model` must be null or a live handle; null yields 0.
#[no_mangle]
pub unsafe extern "C" fn ts_model_query_count(model: *const TsModel) -> u64 {
    model.as_ref().map_or(0, |m| m.inner.query_count())
}

/// Loads a GloVe-format text store (`.gz` accepted).
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_embeddings_load(
    path: *const c_char,
    out: *mut *mut TsEmbeddings,
) -> TsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = EmbeddingStore::load(Path::new(read_str(path, "path")?))?;
        *out = Box::into_raw(Box::new(TsEmbeddings { inner }));
        Ok(())
    })
}

/// Releases an embedding store. Null is ignored.
///
/// # Safety
/// `store` must be null or a handle from `ts_embeddings_load` that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn ts_embeddings_free(store: *mut TsEmbeddings) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

/// Number of words in the store; 0 for null.
///
/// # Safety
/// `store` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ts_embeddings_len(store: *const TsEmbeddings) -> usize {
    store.as_ref().map_or(0, |s| s.inner.len())
}

/// Up to `k` neighbors of `word` with cosine at least `min_sim`, as a JSON
/// array of `[word, similarity]` pairs.
///
/// # Safety
/// `store` must be a live handle, `word` a NUL-terminated string and
/// `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_embeddings_neighbors(
    store: *const TsEmbeddings,
    word: *const c_char,
    k: usize,
    min_sim: f64,
    out_json: *mut *mut c_char,
) -> TsStatus {
    guard(|| {
        let store = read_ref(store, "store")?;
        let word = read_str(word, "word")?;
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        let neighbors = store.inner.nearest_neighbors(word, k, min_sim);
        json_out(out_json, serde_json::to_string(&neighbors)?)
    })
}

/// Explains `text` with a local surrogate; returns the explanation as JSON.
///
/// `config_json` holds explanation settings (`num_samples`, `num_features`,
/// `kernel_width`, `ridge_lambda`, `seed`, `target_class`); null uses the
/// defaults.
///
/// # Safety
/// `model` must be a live handle, `text` a NUL-terminated string,
/// `config_json` null or NUL-terminated, and `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_explain(
    model: *const TsModel,
    text: *const c_char,
    config_json: *const c_char,
    out_json: *mut *mut c_char,
) -> TsStatus {
    guard(|| {
        let model = read_ref(model, "model")?;
        let text = read_str(text, "text")?;
        let config: LimeConfig = read_config(config_json)?;
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        let doc = model.inner.preprocessor().process(text);
        let explanation = explain_document(&model.inner, &doc, &config)?;
        json_out(out_json, serde_json::to_string(&explanation)?)
    })
}

/// Runs the greedy substitution attack on `text` with true label
/// `truth_label`; returns the attack result as JSON.
///
/// `config_json` holds attack settings; null uses the defaults.
///
/// # Safety
/// `model` and `store` must be live handles, `text` a NUL-terminated
/// string, `config_json` null or NUL-terminated, and `out_json` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_attack(
    model: *const TsModel,
    store: *const TsEmbeddings,
    text: *const c_char,
    truth_label: u8,
    config_json: *const c_char,
    out_json: *mut *mut c_char,
) -> TsStatus {
    guard(|| {
        let model = read_ref(model, "model")?;
        let store = read_ref(store, "store")?;
        let text = read_str(text, "text")?;
        let config: AttackConfig = read_config(config_json)?;
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        if truth_label > 1 {
            return Err(Failure(TsStatus::InvalidInput, "truth_label must be 0 or 1".into()));
        }
        config.validate()?;
        let doc = model.inner.preprocessor().process(text);
        let result = greedy_attack(&model.inner, &doc, truth_label, &config, &store.inner);
        json_out(out_json, serde_json::to_string(&result)?)
    })
}
