//! C interface to the syscause engine.
//!
//! Every function returns an [`ScStatus`]; on failure the message is
//! available from [`sc_last_error_message`] on the same thread. Strings
//! handed out by the library are freed with [`sc_string_free`], documents
//! with [`sc_document_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use syscause::dsl::{parse, parse_formula, parse_query, Document};
use syscause::logic::evaluate;
use syscause::query::{run_query, QueryError, RunOptions};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScStatus {
    Ok = 0,
    /// A required pointer argument was null.
    Null = 1,
    /// A string argument was not UTF-8.
    Utf8 = 2,
    /// The model, stanza or formula text did not parse.
    Parse = 3,
    /// The query could not be answered.
    Query = 4,
    /// A state or variant cap was exceeded.
    Cap = 5,
    /// The engine panicked; the document should be considered unusable.
    Panic = 6,
}

/// A parsed model document.
pub struct ScDocument {
    doc: Document,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(ScStatus, String);

impl From<QueryError> for Fail {
    fn from(e: QueryError) -> Self {
        let status = if e.is_cap() { ScStatus::Cap } else { ScStatus::Query };
        Fail(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ScStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            ScStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ScStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(ScStatus::Null, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(ScStatus::Utf8, format!("{what} is not valid UTF-8")))
}

unsafe fn document<'a>(doc: *const ScDocument) -> Result<&'a Document, Fail> {
    doc.as_ref()
        .map(|d| &d.doc)
        .ok_or_else(|| Fail(ScStatus::Null, "document is null".into()))
}

fn check_out<T>(out: *mut T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(ScStatus::Null, "output pointer is null".into()));
    }
    Ok(())
}

fn json_out(out: *mut *mut c_char, json: String) {
    let c = CString::new(json).expect("JSON has no nul bytes");
    unsafe { *out = c.into_raw() };
}

/// Parse a model document. On success `*out` owns the document.
///
/// # Safety
/// `src` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sc_document_parse(src: *const c_char, out: *mut *mut ScDocument) -> ScStatus {
    guard(|| {
        check_out(out)?;
        *out = ptr::null_mut();
        let src = text(src, "source")?;
        let doc = parse(src).map_err(|d| Fail(ScStatus::Parse, d.to_string()))?;
        *out = Box::into_raw(Box::new(ScDocument { doc }));
        Ok(())
    })
}

/// # Safety
/// `doc` must come from [`sc_document_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sc_document_free(doc: *mut ScDocument) {
    if !doc.is_null() {
        drop(Box::from_raw(doc));
    }
}

/// Number of query stanzas in the document, 0 for a null document.
///
/// # Safety
/// `doc` must be null or a live document.
#[no_mangle]
pub unsafe extern "C" fn sc_query_count(doc: *const ScDocument) -> usize {
    doc.as_ref().map_or(0, |d| d.doc.queries.len())
}

/// Run the `index`-th stanza of the document; `*out_json` receives the
/// JSON report.
///
/// # Safety
/// `doc` must be a live document and `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sc_run_query(doc: *const ScDocument, index: usize, out_json: *mut *mut c_char) -> ScStatus {
    guard(|| {
        check_out(out_json)?;
        *out_json = ptr::null_mut();
        let d = document(doc)?;
        let q = d.queries.get(index).ok_or_else(|| {
            Fail(
                ScStatus::Query,
                format!("no query {index}; the document has {}", d.queries.len()),
            )
        })?;
        let r = run_query(d, q, &RunOptions::default())?;
        json_out(out_json, serde_json::to_string(&r).expect("reports serialize"));
        Ok(())
    })
}

/// Parse one stanza against the document's names, run it, and return the
/// JSON report in `*out_json`.
///
/// # Safety
/// `doc` must be a live document, `stanza` a nul-terminated string and
/// `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sc_run_stanza(
    doc: *const ScDocument,
    stanza: *const c_char,
    out_json: *mut *mut c_char,
) -> ScStatus {
    guard(|| {
        check_out(out_json)?;
        *out_json = ptr::null_mut();
        let d = document(doc)?;
        let src = text(stanza, "stanza")?;
        let q = parse_query(src, d).map_err(|e| Fail(ScStatus::Parse, e.to_string()))?;
        let r = run_query(d, &q, &RunOptions::default())?;
        json_out(out_json, serde_json::to_string(&r).expect("reports serialize"));
        Ok(())
    })
}

/// Evaluate `formula` at the named configuration.
///
/// # Safety
/// `doc` must be a live document, `config` and `formula` nul-terminated
/// strings and `out_holds` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sc_check(
    doc: *const ScDocument,
    config: *const c_char,
    formula: *const c_char,
    out_holds: *mut bool,
) -> ScStatus {
    guard(|| {
        check_out(out_holds)?;
        let d = document(doc)?;
        let name = text(config, "config")?;
        let f = d
            .config(name)
            .ok_or_else(|| Fail(ScStatus::Query, format!("unknown configuration `{name}`")))?;
        let phi = parse_formula(text(formula, "formula")?, d).map_err(|e| Fail(ScStatus::Parse, e.to_string()))?;
        *out_holds = evaluate(&d.model, f, &phi).map_err(QueryError::from)?;
        Ok(())
    })
}

/// Message of the last failed call on this thread, empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn sc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn sc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Engine version, a static string.
#[no_mangle]
pub extern "C" fn sc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
