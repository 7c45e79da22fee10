//! C ABI over the rivalnet core.
//!
//! Handles are opaque and owned by the caller: every `*_new` or generator
//! call that returns `RN_STATUS_OK` hands out a pointer that must be
//! released with the matching `*_free`. Functions return an [`RnStatus`];
//! on failure, [`rn_last_error`] describes the problem. Panics never cross
//! the boundary; they surface as `RN_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use rivalnet::config::parse_config;
use rivalnet::dynamics::{
    threshold_after_acquisition, CrossThresholds, DynamicsParams, Mechanism, NodeStreams, SimulationState,
};
use rivalnet::meanfield::{crit_prob, fixed_point, MeanFieldSystem, SolverOptions};
use rivalnet::protocols::replicate_network;
use rivalnet::topology::{DuplexNetwork, GeneratorConfig};
use rivalnet::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RnStatus {
    Ok = 0,
    NullPointer = 1,
    Config = 2,
    Runtime = 3,
    InvalidArgument = 4,
    Panic = 5,
}

pub const RN_MECHANISM_NONE: u32 = 0;
pub const RN_MECHANISM_TAKEOVER: u32 = 1;
pub const RN_MECHANISM_SUBSTITUTION: u32 = 2;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> RnStatus {
    match err {
        Error::Config(_) => RnStatus::Config,
        Error::Topology(_) | Error::Dynamics(_) | Error::MeanField(_) => RnStatus::InvalidArgument,
        Error::Io { .. } | Error::Runtime(_) => RnStatus::Runtime,
    }
}

/// Run `f`, turning errors and panics into a status with the message kept
/// for [`rn_last_error`].
fn guard(f: impl FnOnce() -> Result<(), (RnStatus, String)>) -> RnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RnStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            RnStatus::Panic
        }
    }
}

fn core_err(e: impl Into<Error>) -> (RnStatus, String) {
    let e = e.into();
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (RnStatus, String) {
    (RnStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (RnStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn in_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (RnStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

pub struct RnNetwork {
    inner: Arc<DuplexNetwork>,
}

fn emit_network(net: Arc<DuplexNetwork>, out: &mut *mut RnNetwork) {
    *out = Box::into_raw(Box::new(RnNetwork { inner: net }));
}

/// Generate the network of `replicate` from the `[network]` table and
/// `seed` of a full experiment config document.
///
/// # Safety
/// `config_toml` must be a valid NUL-terminated string and `out` a valid
/// pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn rn_network_from_config(
    config_toml: *const c_char,
    replicate: u64,
    out: *mut *mut RnNetwork,
) -> RnStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        if config_toml.is_null() {
            return Err(null("config_toml"));
        }
        let text = CStr::from_ptr(config_toml)
            .to_str()
            .map_err(|_| (RnStatus::InvalidArgument, "config is not UTF-8".to_string()))?;
        let cfg = parse_config(text).map_err(core_err)?;
        let net = replicate_network(&cfg.generator(), cfg.seed, replicate).map_err(core_err)?;
        emit_network(net, out);
        Ok(())
    })
}

/// Duplex BA network with the given sizes and attachment counts.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn rn_network_ba(
    nodes_s: usize,
    nodes_w: usize,
    n0: usize,
    m_s: usize,
    m_w: usize,
    m_sw: usize,
    seed: u64,
    replicate: u64,
    out: *mut *mut RnNetwork,
) -> RnStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let config = GeneratorConfig {
            nodes_s,
            nodes_w,
            n0,
            m_s,
            m_w,
            m_sw,
            ..GeneratorConfig::default()
        };
        emit_network(replicate_network(&config, seed, replicate).map_err(core_err)?, out);
        Ok(())
    })
}

/// # Safety
/// `net` must be NULL or a handle from this library that was not freed.
#[no_mangle]
pub unsafe extern "C" fn rn_network_free(net: *mut RnNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Node counts of S and W.
///
/// # Safety
/// `net` must be a live handle; `n_s` and `n_w` valid writable pointers.
#[no_mangle]
pub unsafe extern "C" fn rn_network_nodes(net: *const RnNetwork, n_s: *mut usize, n_w: *mut usize) -> RnStatus {
    guard(|| {
        let net = in_ref(net, "net")?;
        let (s, w) = net.inner.initial_counts();
        *out_ref(n_s, "n_s")? = s;
        *out_ref(n_w, "n_w")? = w;
        Ok(())
    })
}

/// # Safety
/// `net` must be a live handle; `count` a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn rn_network_edge_count(net: *const RnNetwork, count: *mut usize) -> RnStatus {
    guard(|| {
        *out_ref(count, "count")? = in_ref(net, "net")?.inner.edge_count();
        Ok(())
    })
}

/// Dynamics parameters. `dual` switches on the cross thresholds `t_ws` and
/// `t_sw`; `mechanism` is one of the `RN_MECHANISM_*` values.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RnParams {
    pub p1_s: f64,
    pub p1_w: f64,
    pub p2: f64,
    pub tau: u32,
    pub t_s: f64,
    pub t_w: f64,
    pub dual: bool,
    pub t_ws: f64,
    pub t_sw: f64,
    pub n: f64,
    pub mechanism: u32,
    pub cost: bool,
}

impl From<&DynamicsParams> for RnParams {
    fn from(d: &DynamicsParams) -> Self {
        RnParams {
            p1_s: d.p1_s,
            p1_w: d.p1_w,
            p2: d.p2,
            tau: d.tau,
            t_s: d.t_s,
            t_w: d.t_w,
            dual: d.cross.is_some(),
            t_ws: d.cross.map_or(0.0, |c| c.t_ws),
            t_sw: d.cross.map_or(0.0, |c| c.t_sw),
            n: d.n,
            mechanism: match d.mechanism {
                Mechanism::None => RN_MECHANISM_NONE,
                Mechanism::Takeover => RN_MECHANISM_TAKEOVER,
                Mechanism::Substitution => RN_MECHANISM_SUBSTITUTION,
            },
            cost: d.cost_enabled,
        }
    }
}

impl RnParams {
    fn to_core(self) -> Result<DynamicsParams, (RnStatus, String)> {
        let mechanism = match self.mechanism {
            RN_MECHANISM_NONE => Mechanism::None,
            RN_MECHANISM_TAKEOVER => Mechanism::Takeover,
            RN_MECHANISM_SUBSTITUTION => Mechanism::Substitution,
            other => return Err((RnStatus::InvalidArgument, format!("unknown mechanism {other}"))),
        };
        let p = DynamicsParams {
            p1_s: self.p1_s,
            p1_w: self.p1_w,
            p2: self.p2,
            tau: self.tau,
            t_s: self.t_s,
            t_w: self.t_w,
            cross: self.dual.then_some(CrossThresholds {
                t_ws: self.t_ws,
                t_sw: self.t_sw,
            }),
            n: self.n,
            mechanism,
            cost_enabled: self.cost,
        };
        p.validate().map_err(core_err)?;
        Ok(p)
    }
}

/// Fill `out` with the library defaults.
///
/// # Safety
/// `out` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn rn_params_default(out: *mut RnParams) -> RnStatus {
    guard(|| {
        *out_ref(out, "out")? = RnParams::from(&DynamicsParams::default());
        Ok(())
    })
}

pub struct RnSimulation {
    state: SimulationState,
    streams: NodeStreams,
    params: DynamicsParams,
}

/// Start a run from the all-active state. The simulation keeps its own
/// reference to the network, so `net` may be freed afterwards.
///
/// # Safety
/// `net` must be a live handle, `params` a valid pointer and `out` a valid
/// writable pointer.
#[no_mangle]
pub unsafe extern "C" fn rn_simulation_new(
    net: *const RnNetwork,
    params: *const RnParams,
    seed: u64,
    replicate: u64,
    out: *mut *mut RnSimulation,
) -> RnStatus {
    guard(|| {
        let net = in_ref(net, "net")?.inner.clone();
        let params = in_ref(params, "params")?.to_core()?;
        let out = out_ref(out, "out")?;
        let streams = NodeStreams::new(seed, replicate, net.len());
        let state = SimulationState::new(net, &params);
        *out = Box::into_raw(Box::new(RnSimulation { state, streams, params }));
        Ok(())
    })
}

/// # Safety
/// `sim` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rn_simulation_free(sim: *mut RnSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advance `steps` synchronous steps.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rn_simulation_step(sim: *mut RnSimulation, steps: u64) -> RnStatus {
    guard(|| {
        let sim = out_ref(sim, "sim")?;
        for _ in 0..steps {
            sim.state.step(&sim.params, &mut sim.streams);
        }
        Ok(())
    })
}

/// Replace the internal failure probabilities, e.g. to follow an attack
/// schedule.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rn_simulation_set_p1(sim: *mut RnSimulation, p1_s: f64, p1_w: f64) -> RnStatus {
    guard(|| {
        let sim = out_ref(sim, "sim")?;
        let mut p = sim.params.clone();
        (p.p1_s, p.p1_w) = (p1_s, p1_w);
        p.validate().map_err(core_err)?;
        sim.params = p;
        Ok(())
    })
}

/// Active fractions of S and W relative to their initial sizes.
///
/// # Safety
/// `sim` must be a live handle, `f_s` and `f_w` valid writable pointers.
#[no_mangle]
pub unsafe extern "C" fn rn_simulation_fractions(sim: *const RnSimulation, f_s: *mut f64, f_w: *mut f64) -> RnStatus {
    guard(|| {
        let (s, w) = in_ref(sim, "sim")?.state.measure_fractions();
        *out_ref(f_s, "f_s")? = s;
        *out_ref(f_w, "f_w")? = w;
        Ok(())
    })
}

/// Clock, live threshold `T'_S` and cumulative acquisitions.
///
/// # Safety
/// `sim` must be a live handle; the out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn rn_simulation_status(
    sim: *const RnSimulation,
    clock: *mut u64,
    threshold_s: *mut f64,
    acquisitions: *mut usize,
) -> RnStatus {
    guard(|| {
        let sim = in_ref(sim, "sim")?;
        *out_ref(clock, "clock")? = sim.state.clock();
        *out_ref(threshold_s, "threshold_s")? = sim.state.threshold_s();
        *out_ref(acquisitions, "acquisitions")? = sim.state.acquisitions();
        Ok(())
    })
}

/// Mean-field system; thresholds are active-neighbour counts.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RnMeanField {
    pub k_s: u32,
    pub k_w: u32,
    pub k_ws: u32,
    pub k_sw: u32,
    pub t_s: u32,
    pub t_w: u32,
    pub p2_s: f64,
    pub p2_w: f64,
    pub pstar_s: f64,
    pub pstar_w: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RnSolver {
    pub damping: f64,
    pub tolerance: f64,
    pub max_iter: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RnFixedPoint {
    pub a_s: f64,
    pub a_w: f64,
    pub residual: f64,
    pub iterations: u64,
    pub converged: bool,
}

/// Damped fixed point from `(init_s, init_w)`. A NULL `solver` uses the
/// library defaults. Running out of iterations is not an error; check
/// `converged`.
///
/// # Safety
/// `system` and `out` must be valid pointers; `solver` valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn rn_meanfield_solve(
    system: *const RnMeanField,
    solver: *const RnSolver,
    init_s: f64,
    init_w: f64,
    out: *mut RnFixedPoint,
) -> RnStatus {
    guard(|| {
        let m = in_ref(system, "system")?;
        let out = out_ref(out, "out")?;
        let opts = solver.as_ref().map_or_else(SolverOptions::default, |s| SolverOptions {
            damping: s.damping,
            tolerance: s.tolerance,
            max_iter: s.max_iter,
        });
        if !(opts.damping > 0.0 && opts.damping <= 1.0) || !(opts.tolerance > 0.0) {
            return Err((RnStatus::InvalidArgument, "damping must be in (0, 1] and tolerance > 0".into()));
        }
        let sys = MeanFieldSystem {
            k_s: m.k_s,
            k_w: m.k_w,
            k_ws: m.k_ws,
            k_sw: m.k_sw,
            t_s: m.t_s,
            t_w: m.t_w,
            p2_s: m.p2_s,
            p2_w: m.p2_w,
            pstar_s: m.pstar_s,
            pstar_w: m.pstar_w,
        };
        let fp = fixed_point(&sys, (init_s, init_w), &opts).map_err(core_err)?;
        *out = RnFixedPoint {
            a_s: fp.a_s,
            a_w: fp.a_w,
            residual: fp.residual,
            iterations: fp.iterations,
            converged: fp.converged,
        };
        Ok(())
    })
}

/// Probability that at most `t_abs` of `k_self + k_other` neighbours are
/// active. NaN when a failure fraction lies outside [0, 1].
#[no_mangle]
pub extern "C" fn rn_crit_prob(a_self: f64, a_other: f64, k_self: u32, k_other: u32, t_abs: u32) -> f64 {
    if !(0.0..=1.0).contains(&a_self) || !(0.0..=1.0).contains(&a_other) {
        return f64::NAN;
    }
    crit_prob(a_self, a_other, k_self, k_other, t_abs)
}

/// Threshold after one acquisition of degree `k` under the linear cost law.
///
/// # Safety
/// `out` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn rn_cost_update(mass: f64, threshold: f64, k: f64, t_w: f64, out: *mut f64) -> RnStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = threshold_after_acquisition(mass, threshold, k, t_w).map_err(core_err)?;
        Ok(())
    })
}
