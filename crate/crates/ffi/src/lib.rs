//! C ABI over the `ruber` library.
//!
//! Handles are opaque and owned by the caller once returned; release them with
//! the matching `*_free` function. Every fallible call returns a
//! [`RuberStatus`] and writes its result through an out-pointer. After a
//! failure, [`ruber_last_error_message`] describes the error on the calling
//! thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ruber::baselines;
use ruber::blending::{self, BlendStrategy, ScoreSeries};
use ruber::corpus::{tokenize, Utterance};
use ruber::embeddings::{load_text_embeddings, Embeddings};
use ruber::referenced;
use ruber::unreferenced::{self, load_checkpoint, ScorerParams};
use ruber::RuberError;

/// Status codes. Nonzero values mirror the CLI exit codes where one applies.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuberStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Numerical = 4,
    Compatibility = 5,
    InvalidUtf8 = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuberBlend {
    Min = 0,
    Max = 1,
    Geometric = 2,
    Arithmetic = 3,
}

fn blend_strategy(code: i32) -> Result<BlendStrategy, Failure> {
    Ok(match code {
        c if c == RuberBlend::Min as i32 => BlendStrategy::Min,
        c if c == RuberBlend::Max as i32 => BlendStrategy::Max,
        c if c == RuberBlend::Geometric as i32 => BlendStrategy::GeometricMean,
        c if c == RuberBlend::Arithmetic as i32 => BlendStrategy::ArithmeticMean,
        c => {
            return Err(Failure(
                RuberStatus::InvalidArgument,
                format!("unknown blend strategy {c}"),
            ))
        }
    })
}

/// Word embeddings loaded from a text file.
pub struct RuberEmbeddings {
    inner: Embeddings,
}

/// A trained unreferenced scorer bound to the embeddings it reads.
pub struct RuberScorer {
    params: ScorerParams,
    embeddings: Embeddings,
    max_len: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &RuberError) -> RuberStatus {
    match e {
        RuberError::Io { .. } | RuberError::Parse { .. } | RuberError::Validation { .. } | RuberError::Format(_) => {
            RuberStatus::Io
        }
        RuberError::Contract(_) | RuberError::Config(_) => RuberStatus::InvalidArgument,
        RuberError::Numerical(_) => RuberStatus::Numerical,
        RuberError::Compatibility(_) => RuberStatus::Compatibility,
    }
}

struct Failure(RuberStatus, String);

impl From<RuberError> for Failure {
    fn from(e: RuberError) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

/// Runs `f`, converting errors and panics into a status and the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RuberStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RuberStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic".to_owned());
            RuberStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(RuberStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(RuberStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

unsafe fn utterance_arg(p: *const c_char, what: &str) -> Result<Utterance, Failure> {
    Ok(tokenize(str_arg(p, what)?))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ruber_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failure on this thread, or NULL if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ruber_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads a text embedding file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ruber_embeddings_load(path: *const c_char, out: *mut *mut RuberEmbeddings) -> RuberStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let inner = load_text_embeddings(Path::new(path))?;
        *out = Box::into_raw(Box::new(RuberEmbeddings { inner }));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from `ruber_embeddings_load` and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn ruber_embeddings_free(handle: *mut RuberEmbeddings) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `handle` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ruber_embeddings_dim(handle: *const RuberEmbeddings, out: *mut usize) -> RuberStatus {
    guard(|| {
        *out_arg(out, "out")? = handle_arg(handle, "handle")?.inner.dim();
        Ok(())
    })
}

/// Vocabulary size, including the unknown-word entry.
///
/// # Safety
/// `handle` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ruber_embeddings_vocab_size(handle: *const RuberEmbeddings, out: *mut usize) -> RuberStatus {
    guard(|| {
        *out_arg(out, "out")? = handle_arg(handle, "handle")?.inner.vocab.len();
        Ok(())
    })
}

/// Loads a scorer checkpoint against `embeddings`. The scorer keeps its own
/// copy, so `embeddings` may be freed afterwards.
///
/// # Safety
/// `path` must be a NUL-terminated string; `embeddings` and `out` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ruber_scorer_load(
    path: *const c_char,
    embeddings: *const RuberEmbeddings,
    allow_vocab_mismatch: bool,
    out: *mut *mut RuberScorer,
) -> RuberStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let emb = &handle_arg(embeddings, "embeddings")?.inner;
        let checkpoint = load_checkpoint(Path::new(path), &emb.vocab, allow_vocab_mismatch)?;
        if checkpoint.params.input_dim() != emb.dim() {
            return Err(RuberError::Compatibility(format!(
                "checkpoint expects {}-dim embeddings, got {}",
                checkpoint.params.input_dim(),
                emb.dim()
            ))
            .into());
        }
        let embeddings = match checkpoint.tuned_embeddings {
            Some(m) => Embeddings::new(emb.vocab.clone(), m)?,
            None => emb.clone(),
        };
        *out = Box::into_raw(Box::new(RuberScorer {
            params: checkpoint.params,
            embeddings,
            max_len: checkpoint.config.max_len,
        }));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from `ruber_scorer_load` and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn ruber_scorer_free(handle: *mut RuberScorer) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Pooled-embedding cosine between whitespace-tokenized `groundtruth` and `candidate`.
///
/// # Safety
/// Strings must be NUL-terminated; `embeddings` and `out` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ruber_referenced_score(
    embeddings: *const RuberEmbeddings,
    groundtruth: *const c_char,
    candidate: *const c_char,
    out: *mut f64,
) -> RuberStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let emb = &handle_arg(embeddings, "embeddings")?.inner;
        let gt = utterance_arg(groundtruth, "groundtruth")?;
        let cand = utterance_arg(candidate, "candidate")?;
        *out = referenced::referenced_score(&gt, &cand, emb);
        Ok(())
    })
}

/// Learned relatedness of `reply` to `query`, in (0, 1).
///
/// # Safety
/// Strings must be NUL-terminated; `scorer` and `out` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ruber_unreferenced_score(
    scorer: *const RuberScorer,
    query: *const c_char,
    reply: *const c_char,
    out: *mut f64,
) -> RuberStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let s = handle_arg(scorer, "scorer")?;
        let q = utterance_arg(query, "query")?;
        let r = utterance_arg(reply, "reply")?;
        *out = unreferenced::unreferenced_score(&q, &r, &s.params, &s.embeddings, s.max_len)?;
        Ok(())
    })
}

/// Sentence BLEU-`n`. Writes NaN when the candidate is shorter than `n`.
///
/// # Safety
/// Strings must be NUL-terminated; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ruber_bleu(
    candidate: *const c_char,
    reference: *const c_char,
    n: usize,
    out: *mut f64,
) -> RuberStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let c = utterance_arg(candidate, "candidate")?;
        let r = utterance_arg(reference, "reference")?;
        *out = baselines::bleu(&c, &r, n)?;
        Ok(())
    })
}

/// # Safety
/// Strings must be NUL-terminated; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ruber_rouge_l(candidate: *const c_char, reference: *const c_char, out: *mut f64) -> RuberStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let c = utterance_arg(candidate, "candidate")?;
        let r = utterance_arg(reference, "reference")?;
        *out = baselines::rouge_l(&c, &r);
        Ok(())
    })
}

/// Min-max normalizes `len` values into `out`. `out_min` and `out_max` may be NULL.
///
/// # Safety
/// `values` and `out` must each point to `len` doubles; they may alias.
#[no_mangle]
pub unsafe extern "C" fn ruber_normalize(
    values: *const f64,
    len: usize,
    out: *mut f64,
    out_min: *mut f64,
    out_max: *mut f64,
) -> RuberStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let input = std::slice::from_raw_parts(values, len).to_vec();
        let n = blending::normalize(&ScoreSeries::new("values", input))?;
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(&n.series.values);
        if let Some(m) = out_min.as_mut() {
            *m = n.min;
        }
        if let Some(m) = out_max.as_mut() {
            *m = n.max;
        }
        Ok(())
    })
}

/// Blends two normalized scores in [0, 1]. `strategy` is a `RuberBlend` value.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ruber_blend(referenced: f64, unreferenced: f64, strategy: i32, out: *mut f64) -> RuberStatus {
    guard(|| {
        *out_arg(out, "out")? = blending::blend(referenced, unreferenced, blend_strategy(strategy)?)?;
        Ok(())
    })
}
