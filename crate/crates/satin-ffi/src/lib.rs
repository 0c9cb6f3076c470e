//! C ABI for the collective-spin echo metrology simulator.
//!
//! Conventions:
//! - Opaque handles (`SatinState`) are created and destroyed by this library;
//!   never free them with anything but the matching `*_free`.
//! - Every fallible call returns a [`SatinStatus`]; on failure the
//!   thread-local message from [`satin_last_error`] describes what happened.
//! - Buffers are caller-allocated; size contracts are documented per call.
//!
//! The generated header lives at `include/satin.h`.

use std::cell::RefCell;
use std::os::raw::{c_char, c_int};

use satin_sim::cavity as cav;
use satin_sim::dicke::{DickeState, RotationAxis, RotationSpec};
use satin_sim::noise::NoiseBudget;
use satin_sim::satin as proto;
use satin_sim::wigner;
use satin_sim::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatinStatus {
    Ok = 0,
    /// A pointer argument was null.
    NullPointer = 1,
    /// An argument violated a precondition.
    InvalidArgument = 2,
    /// The requested operating point is infeasible.
    NoSolution = 3,
    /// A numeric failure (non-finite result).
    Numeric = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.to_string());
}

fn status_of(err: &Error) -> SatinStatus {
    match err {
        Error::InvalidArgument(_) | Error::Config(_) => SatinStatus::InvalidArgument,
        Error::NoSolution(_) => SatinStatus::NoSolution,
        Error::Numeric(_) | Error::Io(_) => SatinStatus::Numeric,
    }
}

fn fail(err: Error) -> SatinStatus {
    set_error(&err.to_string());
    status_of(&err)
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `cap`). Returns the untruncated length.
///
/// # Safety
/// `buf` must point to `cap` writable bytes (or be null to query the length).
#[no_mangle]
pub unsafe extern "C" fn satin_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Opaque pure state of the symmetric N-spin manifold.
pub struct SatinState {
    inner: DickeState,
}

/// Measurement / rotation axis.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatinAxis {
    X = 0,
    Y = 1,
    Z = 2,
}

impl From<SatinAxis> for RotationAxis {
    fn from(a: SatinAxis) -> Self {
        match a {
            SatinAxis::X => RotationAxis::X,
            SatinAxis::Y => RotationAxis::Y,
            SatinAxis::Z => RotationAxis::Z,
        }
    }
}

/// First and second spin moments plus the contrast `|<S>|/S0`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SatinMoments {
    pub mean_sx: f64,
    pub mean_sy: f64,
    pub mean_sz: f64,
    pub var_sx: f64,
    pub var_sy: f64,
    pub var_sz: f64,
    pub contrast: f64,
    /// Normalized variance 2 var(S_y)/S0.
    pub sigma_y_sq: f64,
}

/// Cavity and operating-point parameters (mirror of the library config).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SatinCavity {
    pub eta: f64,
    /// rad/s
    pub kappa: f64,
    /// rad/s
    pub gamma: f64,
    pub finesse: f64,
    pub n_atoms: usize,
    /// 2*Delta/Gamma
    pub x_a: f64,
    /// 2*delta/kappa
    pub x_c: f64,
    pub n_tr_tot: f64,
}

impl SatinCavity {
    fn to_config(self) -> cav::CavityConfig {
        cav::CavityConfig {
            eta: self.eta,
            kappa: self.kappa,
            gamma: self.gamma,
            finesse: self.finesse,
            n_atoms: self.n_atoms,
            x_a: self.x_a,
            x_c: self.x_c,
            n_tr_tot: self.n_tr_tot,
        }
    }

    fn from_config(c: &cav::CavityConfig) -> Self {
        Self {
            eta: c.eta,
            kappa: c.kappa,
            gamma: c.gamma,
            finesse: c.finesse,
            n_atoms: c.n_atoms,
            x_a: c.x_a,
            x_c: c.x_c,
            n_tr_tot: c.n_tr_tot,
        }
    }
}

/// Gain decomposition of one model operating point (all dB terms sum to
/// `hl_distance_db`).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SatinGainBudget {
    pub q_opt: f64,
    pub gain_db: f64,
    pub hl_distance_db: f64,
    pub ideal_db: f64,
    pub qshift_db: f64,
    pub contrast_db: f64,
    pub nonunitary_db: f64,
    pub contrast_sc: f64,
    pub i_tot: f64,
    pub n_tr_per_pulse: f64,
    pub x_a: f64,
    pub x_c: f64,
}

/// Nominal apparatus parameters with `n_atoms` atoms.
#[no_mangle]
pub extern "C" fn satin_cavity_default(n_atoms: usize) -> SatinCavity {
    SatinCavity::from_config(&cav::CavityConfig {
        n_atoms,
        ..cav::CavityConfig::default()
    })
}

/// Create a spin-coherent state |polar, azimuth>; (pi/2, 0) points along +x.
/// On success `*out` owns the new state.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn satin_state_css(
    n_atoms: usize,
    polar: f64,
    azimuth: f64,
    out: *mut *mut SatinState,
) -> SatinStatus {
    if out.is_null() {
        return SatinStatus::NullPointer;
    }
    match DickeState::make_css(n_atoms, polar, azimuth) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(SatinState { inner }));
            SatinStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Deep-copy a state.
///
/// # Safety
/// `state` must be a live handle from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn satin_state_clone(
    state: *const SatinState,
    out: *mut *mut SatinState,
) -> SatinStatus {
    if state.is_null() || out.is_null() {
        return SatinStatus::NullPointer;
    }
    *out = Box::into_raw(Box::new(SatinState { inner: (*state).inner.clone() }));
    SatinStatus::Ok
}

/// Destroy a state handle (null is a no-op).
///
/// # Safety
/// `state` must be a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn satin_state_free(state: *mut SatinState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Number of atoms N (state dimension is N + 1).
///
/// # Safety
/// `state` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn satin_state_n_atoms(state: *const SatinState) -> usize {
    if state.is_null() {
        return 0;
    }
    (*state).inner.n_atoms()
}

/// Apply the active rotation exp(-i angle S_axis) in place.
///
/// # Safety
/// `state` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn satin_state_rotate(
    state: *mut SatinState,
    axis: SatinAxis,
    angle: f64,
) -> SatinStatus {
    if state.is_null() {
        return SatinStatus::NullPointer;
    }
    match (*state).inner.rotate(RotationSpec { axis: axis.into(), angle }) {
        Ok(next) => {
            (*state).inner = next;
            SatinStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Apply one-axis twisting exp(-i (q/sqrt N) S_z^2) in place; negative
/// `q_tilde` is the time-reversed evolution.
///
/// # Safety
/// `state` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn satin_state_oat(
    state: *mut SatinState,
    q_tilde: f64,
) -> SatinStatus {
    if state.is_null() {
        return SatinStatus::NullPointer;
    }
    match (*state).inner.oat_evolve(q_tilde) {
        Ok(next) => {
            (*state).inner = next;
            SatinStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Spin moments of the state.
///
/// # Safety
/// `state` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn satin_state_moments(
    state: *const SatinState,
    out: *mut SatinMoments,
) -> SatinStatus {
    if state.is_null() || out.is_null() {
        return SatinStatus::NullPointer;
    }
    let st = &(*state).inner;
    let m = st.moments();
    *out = SatinMoments {
        mean_sx: m.mean_sx,
        mean_sy: m.mean_sy,
        mean_sz: m.mean_sz,
        var_sx: m.var_sx,
        var_sy: m.var_sy,
        var_sz: m.var_sz,
        contrast: m.contrast,
        sigma_y_sq: m.sigma_y_sq(st.n_atoms()),
    };
    SatinStatus::Ok
}

/// Probability distribution of outcomes m along `axis`, written into
/// `out[0..n_atoms+1]` in ascending-m order.
///
/// # Safety
/// `state` must be a live handle; `out` must hold `out_len >= N + 1` doubles.
#[no_mangle]
pub unsafe extern "C" fn satin_state_distribution(
    state: *const SatinState,
    axis: SatinAxis,
    out: *mut f64,
    out_len: usize,
) -> SatinStatus {
    if state.is_null() || out.is_null() {
        return SatinStatus::NullPointer;
    }
    let st = &(*state).inner;
    if out_len < st.n_atoms() + 1 {
        set_error("distribution buffer too small");
        return SatinStatus::InvalidArgument;
    }
    let dist = st.measure_distribution(axis.into());
    std::ptr::copy_nonoverlapping(dist.as_ptr(), out, dist.len());
    SatinStatus::Ok
}

/// Draw `n_shots` outcomes m from a distribution over the Dicke ladder;
/// deterministic per seed.
///
/// # Safety
/// `dist` must hold `dist_len` doubles; `out` must hold `n_shots` doubles.
#[no_mangle]
pub unsafe extern "C" fn satin_sample_shots(
    dist: *const f64,
    dist_len: usize,
    n_shots: usize,
    seed: u64,
    out: *mut f64,
) -> SatinStatus {
    if dist.is_null() || out.is_null() {
        return SatinStatus::NullPointer;
    }
    let d = std::slice::from_raw_parts(dist, dist_len);
    match satin_sim::dicke::sample_shots(d, n_shots, seed) {
        Ok(shots) => {
            std::ptr::copy_nonoverlapping(shots.as_ptr(), out, shots.len());
            SatinStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Signed shearing strength of the pulse described by `cfg`.
#[no_mangle]
pub extern "C" fn satin_shearing_strength(cfg: SatinCavity) -> f64 {
    cav::shearing_strength(&cfg.to_config())
}

/// Light-induced broadening of the pulse (CSS variance units).
#[no_mangle]
pub extern "C" fn satin_excess_broadening(cfg: SatinCavity) -> f64 {
    cav::excess_broadening(&cfg.to_config())
}

/// Photons scattered into free space by the pulse.
#[no_mangle]
pub extern "C" fn satin_scattered_photons(cfg: SatinCavity) -> f64 {
    cav::scattered_photons(&cfg.to_config())
}

/// Power transmission of the dressed symmetric cavity.
#[no_mangle]
pub extern "C" fn satin_transmission(cfg: SatinCavity) -> f64 {
    cav::symmetric_transmission(&cfg.to_config())
}

/// Optimize the tied laser detuning for shearing target `q_target`; on
/// success `*cfg` holds the signed detunings and the pulse photon number.
///
/// # Safety
/// `cfg` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn satin_optimize_detuning(
    cfg: *mut SatinCavity,
    q_target: f64,
) -> SatinStatus {
    if cfg.is_null() {
        return SatinStatus::NullPointer;
    }
    match cav::optimize_detuning(&(*cfg).to_config(), q_target) {
        Ok(opt) => {
            *cfg = SatinCavity::from_config(&opt);
            SatinStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Analytic small-signal amplification C N sin(q/sqrt N) cos^N(q/sqrt N).
#[no_mangle]
pub extern "C" fn satin_amplification_analytic(
    q_tilde: f64,
    n_atoms: usize,
    contrast: f64,
) -> f64 {
    proto::amplification_analytic(q_tilde, n_atoms, contrast)
}

/// Exact-simulation amplification (slope of the echo response).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn satin_amplification_exact(
    n_atoms: usize,
    q_tilde: f64,
    out: *mut f64,
) -> SatinStatus {
    if out.is_null() {
        return SatinStatus::NullPointer;
    }
    match proto::amplification_exact(n_atoms, q_tilde) {
        Ok(m) => {
            *out = m;
            SatinStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Metrological gain 10 log10(m^2 / sigma_y^2) in dB.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn satin_gain_db(
    m: f64,
    sigma_y_sq: f64,
    out: *mut f64,
) -> SatinStatus {
    if out.is_null() {
        return SatinStatus::NullPointer;
    }
    match proto::gain(m, sigma_y_sq) {
        Ok(g) => {
            *out = g;
            SatinStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Full forward model at one (N, q): optimized detuning, pair budget, gain
/// decomposition.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn satin_model_gain(
    base: SatinCavity,
    n_atoms: usize,
    q_tilde: f64,
    out: *mut SatinGainBudget,
) -> SatinStatus {
    if out.is_null() {
        return SatinStatus::NullPointer;
    }
    match proto::model_gain_at(&base.to_config(), n_atoms, q_tilde) {
        Ok(b) => {
            *out = SatinGainBudget {
                q_opt: b.q_opt,
                gain_db: b.gain_db,
                hl_distance_db: b.hl_distance_db,
                ideal_db: b.ideal_db,
                qshift_db: b.qshift_db,
                contrast_db: b.contrast_db,
                nonunitary_db: b.nonunitary_db,
                contrast_sc: b.contrast_sc,
                i_tot: b.i_tot,
                n_tr_per_pulse: b.n_tr_per_pulse,
                x_a: b.x_a,
                x_c: b.x_c,
            };
            SatinStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Run the spin-echo Ramsey interferometer at the model operating point and
/// report (amplification, variance, gain).
///
/// # Safety
/// Output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn satin_ramsey_gain(
    base: SatinCavity,
    n_atoms: usize,
    q_tilde: f64,
    seed: u64,
    out_m: *mut f64,
    out_sigma_y_sq: *mut f64,
    out_gain_db: *mut f64,
) -> SatinStatus {
    if out_m.is_null() || out_sigma_y_sq.is_null() || out_gain_db.is_null() {
        return SatinStatus::NullPointer;
    }
    let run = (|| -> satin_sim::Result<proto::RunResult> {
        let opt = cav::optimize_detuning(&base.to_config(), q_tilde)?;
        let nb = NoiseBudget::from_cavity(&opt, q_tilde, -q_tilde)?;
        proto::ramsey_echo_run(q_tilde, 0.0, n_atoms, &nb, seed)
    })();
    match run {
        Ok(r) => {
            *out_m = r.amplification_m.unwrap_or(f64::NAN);
            *out_sigma_y_sq = r.sigma_y_sq;
            *out_gain_db = r.gain_db.unwrap_or(f64::NAN);
            SatinStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Evaluate the Wigner quasiprobability on an (n_polar x n_azimuth) grid,
/// row-major into `out` (cell-centered polar rows, azimuth from 0).
///
/// # Safety
/// `state` must be a live handle; `out` must hold n_polar*n_azimuth doubles.
#[no_mangle]
pub unsafe extern "C" fn satin_wigner_grid(
    state: *const SatinState,
    n_polar: usize,
    n_azimuth: usize,
    out: *mut f64,
) -> SatinStatus {
    if state.is_null() || out.is_null() {
        return SatinStatus::NullPointer;
    }
    match wigner::wigner_grid(&(*state).inner, n_polar, n_azimuth) {
        Ok(g) => {
            std::ptr::copy_nonoverlapping(g.values.as_ptr(), out, g.values.len());
            SatinStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn satin_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// ABI sanity probe: returns `x + 1`; lets bindings verify linkage.
#[no_mangle]
pub extern "C" fn satin_abi_probe(x: c_int) -> c_int {
    x + 1
}
