//! C ABI over `nodembed`.
//!
//! Maps and architectures cross the boundary as opaque handles. Every
//! fallible call returns a [`NodembedStatus`]; on failure the message is
//! available from [`nodembed_last_error_message`] on the same thread.
//! Strings returned through out-parameters are owned by the caller and must
//! be released with [`nodembed_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use serde::Deserialize;

use nodembed::architectures::{verify_embedding, NodeArchitecture};
use nodembed::cli::{parse_grid, CliError, EXIT_FAIL, EXIT_NUMERICAL};
use nodembed::constructions::construct;
use nodembed::funcspec::FuncSpec;
use nodembed::io::to_json;
use nodembed::morse::diagnose;

/// Result of every fallible call. Values 2 to 4 match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodembedStatus {
    Ok = 0,
    VerificationFailed = 2,
    InvalidInput = 3,
    Numerical = 4,
    NullPointer = 5,
    InvalidUtf8 = 6,
    LengthMismatch = 7,
    Panic = 8,
}

/// Opaque map `ℝⁿ → ℝᵖ`.
pub struct NodembedFuncSpec(FuncSpec);

/// Opaque neural-ODE architecture.
pub struct NodembedArchitecture(NodeArchitecture);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: NodembedStatus,
    message: String,
}

impl Failure {
    fn new(status: NodembedStatus, message: impl Into<String>) -> Self {
        Failure { status, message: message.into() }
    }

    fn input(message: impl ToString) -> Self {
        Failure::new(NodembedStatus::InvalidInput, message.to_string())
    }
}

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        let status = match e.code {
            EXIT_FAIL => NodembedStatus::VerificationFailed,
            EXIT_NUMERICAL => NodembedStatus::Numerical,
            _ => NodembedStatus::InvalidInput,
        };
        Failure::new(status, e.message)
    }
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NodembedStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            NodembedStatus::Ok
        }
        Ok(Err(fail)) => {
            set_error(&fail.message);
            fail.status
        }
        Err(_) => {
            set_error("internal panic");
            NodembedStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(NodembedStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Failure::new(NodembedStatus::InvalidUtf8, format!("{name}: {e}")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, name).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::new(NodembedStatus::NullPointer, format!("{name} is null")))
}

fn check_out<T>(out: *mut T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        Err(Failure::new(NodembedStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

unsafe fn put_string(out: *mut *mut c_char, s: String) {
    if !out.is_null() {
        *out = CString::new(s).unwrap_or_default().into_raw();
    }
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, expected: usize, name: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(Failure::new(NodembedStatus::NullPointer, format!("{name} is null")));
    }
    if len != expected {
        return Err(Failure::new(NodembedStatus::LengthMismatch, format!("{name} has length {len}, expected {expected}")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_values(out: *mut f64, len: usize, values: &[f64]) -> Result<(), Failure> {
    check_out(out, "out")?;
    if len != values.len() {
        return Err(Failure::new(
            NodembedStatus::LengthMismatch,
            format!("out has length {len}, expected {}", values.len()),
        ));
    }
    std::slice::from_raw_parts_mut(out, len).copy_from_slice(values);
    Ok(())
}

/// Message of the last failed call on this thread, or null.
///
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn nodembed_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn nodembed_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Map from its JSON description.
#[no_mangle]
pub unsafe extern "C" fn nodembed_funcspec_from_json(
    json: *const c_char,
    out: *mut *mut NodembedFuncSpec,
) -> NodembedStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        check_out(out, "out")?;
        let spec: FuncSpec = serde_json::from_str(text).map_err(Failure::input)?;
        *out = Box::into_raw(Box::new(NodembedFuncSpec(spec)));
        Ok(())
    })
}

/// Map with `n_in` inputs from expression strings in `x0`, `x1`, ...
#[no_mangle]
pub unsafe extern "C" fn nodembed_funcspec_parse(
    n_in: usize,
    components: *const *const c_char,
    n_components: usize,
    out: *mut *mut NodembedFuncSpec,
) -> NodembedStatus {
    guard(|| {
        check_out(out, "out")?;
        if components.is_null() {
            return Err(Failure::new(NodembedStatus::NullPointer, "components is null"));
        }
        let comps = std::slice::from_raw_parts(components, n_components)
            .iter()
            .enumerate()
            .map(|(i, p)| str_arg(*p, &format!("components[{i}]")))
            .collect::<Result<Vec<&str>, _>>()?;
        let spec = FuncSpec::parse("map", n_in, &comps).map_err(Failure::input)?;
        *out = Box::into_raw(Box::new(NodembedFuncSpec(spec)));
        Ok(())
    })
}

/// Number of inputs, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn nodembed_funcspec_n_in(spec: *const NodembedFuncSpec) -> usize {
    spec.as_ref().map_or(0, |s| s.0.n_in())
}

/// Number of outputs, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn nodembed_funcspec_n_out(spec: *const NodembedFuncSpec) -> usize {
    spec.as_ref().map_or(0, |s| s.0.n_out())
}

/// Evaluate the map at `x` (length `n_in`) into `out` (length `n_out`).
#[no_mangle]
pub unsafe extern "C" fn nodembed_funcspec_eval(
    spec: *const NodembedFuncSpec,
    x: *const f64,
    x_len: usize,
    out: *mut f64,
    out_len: usize,
) -> NodembedStatus {
    guard(|| {
        let s = &handle(spec, "spec")?.0;
        let x = slice_arg(x, x_len, s.n_in(), "x")?;
        let y = s.eval(x).map_err(Failure::input)?;
        write_values(out, out_len, &y)
    })
}

/// JSON description of the map.
#[no_mangle]
pub unsafe extern "C" fn nodembed_funcspec_to_json(
    spec: *const NodembedFuncSpec,
    out: *mut *mut c_char,
) -> NodembedStatus {
    guard(|| {
        let s = &handle(spec, "spec")?.0;
        check_out(out, "out")?;
        put_string(out, to_json(s));
        Ok(())
    })
}

/// Release a map handle. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn nodembed_funcspec_free(spec: *mut NodembedFuncSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct EmbedParams {
    c: Option<f64>,
    alpha: Option<f64>,
    coeffs: Option<Vec<f64>>,
    phi: Option<FuncSpec>,
    #[serde(rename = "T", default = "unit_horizon")]
    horizon: f64,
}

fn unit_horizon() -> f64 {
    1.0
}

/// Build an explicit embedding.
///
/// `id` is one of linear, monomial, moebius, negation, polynomial or
/// universal. `params_json` holds `c`, `alpha`, `coeffs`, `phi` and `T`
/// as needed (null means `{}`). The target map is written to `out_target`
/// unless it is null.
#[no_mangle]
pub unsafe extern "C" fn nodembed_embed(
    id: *const c_char,
    params_json: *const c_char,
    out_arch: *mut *mut NodembedArchitecture,
    out_target: *mut *mut NodembedFuncSpec,
) -> NodembedStatus {
    guard(|| {
        let id = str_arg(id, "id")?;
        check_out(out_arch, "out_arch")?;
        let p: EmbedParams = match opt_str_arg(params_json, "params_json")? {
            Some(text) => serde_json::from_str(text).map_err(Failure::input)?,
            None => EmbedParams { horizon: 1.0, ..Default::default() },
        };
        let con = construct(id, p.c, p.alpha, p.coeffs.as_deref(), p.phi.as_ref(), p.horizon)
            .map_err(|e| Failure::from(CliError::from(e)))?;
        *out_arch = Box::into_raw(Box::new(NodembedArchitecture(con.arch)));
        if !out_target.is_null() {
            *out_target = Box::into_raw(Box::new(NodembedFuncSpec(con.target)));
        }
        Ok(())
    })
}

/// Architecture from its JSON description.
#[no_mangle]
pub unsafe extern "C" fn nodembed_architecture_from_json(
    json: *const c_char,
    out: *mut *mut NodembedArchitecture,
) -> NodembedStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        check_out(out, "out")?;
        let arch: NodeArchitecture = serde_json::from_str(text).map_err(Failure::input)?;
        *out = Box::into_raw(Box::new(NodembedArchitecture(arch)));
        Ok(())
    })
}

/// JSON description of the architecture.
#[no_mangle]
pub unsafe extern "C" fn nodembed_architecture_to_json(
    arch: *const NodembedArchitecture,
    out: *mut *mut c_char,
) -> NodembedStatus {
    guard(|| {
        let a = &handle(arch, "arch")?.0;
        check_out(out, "out")?;
        put_string(out, to_json(a));
        Ok(())
    })
}

/// Input dimension, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn nodembed_architecture_n_in(arch: *const NodembedArchitecture) -> usize {
    arch.as_ref().map_or(0, |a| a.0.n_in())
}

/// Output dimension, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn nodembed_architecture_n_out(arch: *const NodembedArchitecture) -> usize {
    arch.as_ref().map_or(0, |a| a.0.n_out())
}

/// Evaluate the architecture's time-T map at `x` into `out`.
#[no_mangle]
pub unsafe extern "C" fn nodembed_architecture_evaluate(
    arch: *const NodembedArchitecture,
    x: *const f64,
    x_len: usize,
    out: *mut f64,
    out_len: usize,
) -> NodembedStatus {
    guard(|| {
        let a = &handle(arch, "arch")?.0;
        let x = slice_arg(x, x_len, a.n_in(), "x")?;
        let e = a.evaluate(x).map_err(|e| Failure::from(CliError::from(e)))?;
        write_values(out, out_len, &e.value)
    })
}

/// Release an architecture handle. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn nodembed_architecture_free(arch: *mut NodembedArchitecture) {
    if !arch.is_null() {
        drop(Box::from_raw(arch));
    }
}

/// Compare `arch` with `target` on a grid over the architecture's input
/// domain.
///
/// `grid` uses the CLI syntax (`lo:hi:n,...` or a count; null for the
/// default). Returns `VerificationFailed` when the maximal error exceeds
/// `tol`; the report JSON is written to `out_report` (if non-null) either way.
#[no_mangle]
pub unsafe extern "C" fn nodembed_verify(
    arch: *const NodembedArchitecture,
    target: *const NodembedFuncSpec,
    grid: *const c_char,
    tol: f64,
    out_report: *mut *mut c_char,
) -> NodembedStatus {
    guard(|| {
        let a = &handle(arch, "arch")?.0;
        let t = &handle(target, "target")?.0;
        let g = parse_grid(opt_str_arg(grid, "grid")?, a.input_domain())?;
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Failure::input(format!("tolerance {tol} must be positive")));
        }
        let report = verify_embedding(a, t, &g, tol).map_err(|e| Failure::from(CliError::from(e)))?;
        put_string(out_report, to_json(&report));
        if report.pass {
            Ok(())
        } else {
            Err(Failure::new(
                NodembedStatus::VerificationFailed,
                format!("max error {} exceeds {tol}", report.max_err),
            ))
        }
    })
}

/// Obstruction report for `phi` as JSON.
#[no_mangle]
pub unsafe extern "C" fn nodembed_diagnose(
    phi: *const NodembedFuncSpec,
    grid: *const c_char,
    out_report: *mut *mut c_char,
) -> NodembedStatus {
    guard(|| {
        let p = &handle(phi, "phi")?.0;
        check_out(out_report, "out_report")?;
        let g = parse_grid(opt_str_arg(grid, "grid")?, p.domain())?;
        let report = diagnose(p, &g).map_err(Failure::input)?;
        put_string(out_report, to_json(&report));
        Ok(())
    })
}
