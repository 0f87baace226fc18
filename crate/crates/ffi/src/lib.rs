//! C ABI over the yaglom core.
//!
//! Fields and field sets are opaque heap handles released with their `_free`
//! function. Every fallible call returns a [`YgStatus`]; on failure the
//! message is available from [`yg_last_error_message`] on the same thread
//! until the next failing call. Panics are caught at the boundary and
//! reported as [`YgStatus::ErrPanic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use yaglom::cli_io::{read_field, write_field};
use yaglom::functionals::{
    catalog, dissipation_direct, dissipation_sweep_exact, law_check, structure_curve_exact,
    BoxAverager, CatalogEntry, CatalogId, FieldSet, Slot, Verdict,
};
use yaglom::increments::ShiftMethod;
use yaglom::mollifier::{
    ball_rule, radial_third_moment, sphere_rule, MollifierProfile, ProfileKind,
};
use yaglom::{Error, Field, PeriodicGrid, ScalarField};

/// Result codes. The first four match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YgStatus {
    Ok = 0,
    ErrInvalid = 1,
    ErrIo = 2,
    ErrNumerical = 3,
    ErrNullPointer = 4,
    ErrPanic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YgVerdict {
    Consistent43 = 0,
    Conservative = 1,
    Inconclusive = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YgProfile {
    Bump = 0,
    Quartic = 1,
}

/// A scalar, vector or symmetric-tensor field on a periodic cube.
pub struct YgField(Field);

/// Named fields sharing one grid, as consumed by the catalog entries.
pub struct YgFieldSet(FieldSet);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(YgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Invalid(_) => YgStatus::ErrInvalid,
            Error::Io(_) => YgStatus::ErrIo,
            Error::Numerical(_) => YgStatus::ErrNumerical,
        };
        Failure(code, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(YgStatus::ErrNullPointer, format!("null pointer: {what}"))
}

fn set_last_error(msg: String) {
    // Interior NULs cannot cross the boundary.
    let msg = CString::new(msg.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> YgStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => YgStatus::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_last_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            YgStatus::ErrPanic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(YgStatus::ErrInvalid, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn entry(name: &str, alpha: f64) -> Result<CatalogEntry, Failure> {
    Ok(catalog(CatalogId::parse(name)?, alpha)?)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn yg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failing call on this thread, or NULL. The pointer
/// stays valid until the next failing call or [`yg_clear_last_error`].
#[no_mangle]
pub extern "C" fn yg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn yg_clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Builds a field from `ncomp` (1, 3 or 6) components of n³ samples each,
/// component-major and x-fastest. The samples are copied.
///
/// # Safety
/// `samples` must point to `len` readable doubles and `out` to a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn yg_field_new(
    n: usize,
    length: f64,
    ncomp: usize,
    samples: *const f64,
    len: usize,
    out: *mut *mut YgField,
) -> YgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if samples.is_null() {
            return Err(null("samples"));
        }
        let grid = PeriodicGrid::new(n, length)?;
        if ncomp == 0 || len != ncomp * grid.len() {
            return Err(Failure(
                YgStatus::ErrInvalid,
                format!("{len} samples do not make {ncomp} components of {n}^3"),
            ));
        }
        let data = std::slice::from_raw_parts(samples, len);
        let comps = data
            .chunks_exact(grid.len())
            .map(|c| ScalarField::new(grid, c.to_vec()))
            .collect::<yaglom::Result<Vec<_>>>()?;
        *out = Box::into_raw(Box::new(YgField(Field::from_components(comps)?)));
        Ok(())
    })
}

/// Reads a YGF1 field file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn yg_field_read(path: *const c_char, out: *mut *mut YgField) -> YgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let field = read_field(Path::new(str_arg(path, "path")?))?;
        *out = Box::into_raw(Box::new(YgField(field)));
        Ok(())
    })
}

/// Writes a YGF1 field file.
///
/// # Safety
/// `field` must come from this library and `path` be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn yg_field_write(field: *const YgField, path: *const c_char) -> YgStatus {
    guard(|| {
        let field = ref_arg(field, "field")?;
        write_field(Path::new(str_arg(path, "path")?), &field.0)?;
        Ok(())
    })
}

/// Points per axis, or 0 for a null handle.
///
/// # Safety
/// `field` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn yg_field_n(field: *const YgField) -> usize {
    field.as_ref().map_or(0, |f| f.0.grid().n())
}

/// Component count, or 0 for a null handle.
///
/// # Safety
/// `field` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn yg_field_ncomp(field: *const YgField) -> usize {
    field.as_ref().map_or(0, |f| f.0.ncomp())
}

/// Copies the samples out in the layout accepted by [`yg_field_new`];
/// `len` must be exactly ncomp·n³.
///
/// # Safety
/// `field` must come from this library and `out` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn yg_field_samples(
    field: *const YgField,
    out: *mut f64,
    len: usize,
) -> YgStatus {
    guard(|| {
        let field = ref_arg(field, "field")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let comps = field.0.components();
        let total: usize = comps.iter().map(|c| c.data().len()).sum();
        if len != total {
            return Err(Failure(
                YgStatus::ErrInvalid,
                format!("buffer holds {len} samples, field has {total}"),
            ));
        }
        let out = std::slice::from_raw_parts_mut(out, len);
        for (dst, c) in out.chunks_exact_mut(total / comps.len()).zip(comps) {
            dst.copy_from_slice(c.data());
        }
        Ok(())
    })
}

/// # Safety
/// `field` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn yg_field_free(field: *mut YgField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// An empty field set on an n³ cube of side `length`.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn yg_field_set_new(
    n: usize,
    length: f64,
    out: *mut *mut YgFieldSet,
) -> YgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(YgFieldSet(FieldSet::new(PeriodicGrid::new(
            n, length,
        )?))));
        Ok(())
    })
}

/// Copies `field` into slot `slot` ("v", "b", "theta", "omega", "tau", "u",
/// "h" or "H"), replacing any previous occupant.
///
/// # Safety
/// `set` and `field` must come from this library and `slot` be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn yg_field_set_insert(
    set: *mut YgFieldSet,
    slot: *const c_char,
    field: *const YgField,
) -> YgStatus {
    guard(|| {
        let set = out_arg(set, "set")?;
        let slot = Slot::parse(str_arg(slot, "slot")?)?;
        let field = ref_arg(field, "field")?;
        set.0.insert(slot, field.0.clone())?;
        Ok(())
    })
}

/// # Safety
/// `set` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn yg_field_set_free(set: *mut YgFieldSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Exact box average of D_ε for catalog entry `name` (e.g. "TEMP").
///
/// # Safety
/// `set` must come from this library, `name` be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn yg_mean_dissipation(
    set: *const YgFieldSet,
    name: *const c_char,
    alpha: f64,
    eps: f64,
    out: *mut f64,
) -> YgStatus {
    guard(|| {
        let set = ref_arg(set, "set")?;
        let e = entry(str_arg(name, "name")?, alpha)?;
        let out = out_arg(out, "out")?;
        *out = BoxAverager::new(&set.0, &e)?.mean_dissipation(eps)?.0;
        Ok(())
    })
}

/// Exact box average of the structure combination at separation λ.
///
/// # Safety
/// As for [`yg_mean_dissipation`].
#[no_mangle]
pub unsafe extern "C" fn yg_mean_structure(
    set: *const YgFieldSet,
    name: *const c_char,
    alpha: f64,
    lambda: f64,
    out: *mut f64,
) -> YgStatus {
    guard(|| {
        let set = ref_arg(set, "set")?;
        let e = entry(str_arg(name, "name")?, alpha)?;
        let out = out_arg(out, "out")?;
        *out = BoxAverager::new(&set.0, &e)?.mean_structure(lambda)?.0;
        Ok(())
    })
}

/// Pointwise D_ε on the ball rule with `radial_nodes` × `sphere_count` nodes,
/// written to `out` (n³ doubles, x-fastest).
///
/// # Safety
/// `set` must come from this library, `name` be a NUL-terminated string and
/// `out` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn yg_dissipation_field(
    set: *const YgFieldSet,
    name: *const c_char,
    alpha: f64,
    eps: f64,
    radial_nodes: usize,
    sphere_count: usize,
    out: *mut f64,
    len: usize,
) -> YgStatus {
    guard(|| {
        let set = ref_arg(set, "set")?;
        let e = entry(str_arg(name, "name")?, alpha)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let n3 = set.0.grid().len();
        if len != n3 {
            return Err(Failure(
                YgStatus::ErrInvalid,
                format!("buffer holds {len} samples, grid has {n3}"),
            ));
        }
        let ball = ball_rule(radial_nodes, sphere_rule(sphere_count)?, eps)?;
        let d = dissipation_direct(&set.0, &e, eps, &ball, ShiftMethod::FourierPhase)?;
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(d.values.data());
        Ok(())
    })
}

/// Runs the law check with ε = λ over `scales` using exact box averages.
/// `ratio` receives the plateau ratio, or NaN when no plateau was found.
///
/// # Safety
/// `set` must come from this library, `name` be a NUL-terminated string,
/// `scales` point to `count` doubles, and `verdict` and `ratio` be writable.
#[no_mangle]
pub unsafe extern "C" fn yg_law_check(
    set: *const YgFieldSet,
    name: *const c_char,
    alpha: f64,
    scales: *const f64,
    count: usize,
    verdict: *mut YgVerdict,
    ratio: *mut f64,
) -> YgStatus {
    guard(|| {
        let set = ref_arg(set, "set")?;
        let e = entry(str_arg(name, "name")?, alpha)?;
        if scales.is_null() {
            return Err(null("scales"));
        }
        let verdict = out_arg(verdict, "verdict")?;
        let ratio = out_arg(ratio, "ratio")?;
        let scales = std::slice::from_raw_parts(scales, count);
        let avg = BoxAverager::new(&set.0, &e)?;
        let d = dissipation_sweep_exact(&avg, &e, scales)?;
        let s = structure_curve_exact(&avg, &e, scales)?;
        let report = law_check(&s, &d.pairs())?;
        *verdict = match report.verdict {
            Verdict::Consistent43 => YgVerdict::Consistent43,
            Verdict::Conservative => YgVerdict::Conservative,
            Verdict::Inconclusive => YgVerdict::Inconclusive,
        };
        *ratio = report.ratio.unwrap_or(f64::NAN);
        Ok(())
    })
}

/// ∫₀^∞ r³φ′(r) dr for a normalized profile, which equals −3/(4π).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn yg_radial_third_moment(profile: YgProfile, out: *mut f64) -> YgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let kind = match profile {
            YgProfile::Bump => ProfileKind::Bump,
            YgProfile::Quartic => ProfileKind::Quartic,
        };
        *out = radial_third_moment(&MollifierProfile::of_kind(kind));
        Ok(())
    })
}
