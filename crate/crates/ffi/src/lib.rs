//! C bindings for `locus-core`.
//!
//! Every function returns a [`LocusStatus`]; on anything other than
//! `LOCUS_STATUS_OK` a message is available from
//! [`locus_last_error_message`] on the same thread. Handles are opaque and
//! must be released with their matching `_free` function.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use locus_core::plume::{PlumeField, PlumeParams, PlumePose};
use locus_core::sim::{
    run_trial, Algorithm, ConfigError, FailureModel, Termination, TrialConfig, TrialResult, World,
};
use locus_core::tree::{SlotId, SwarmTree, TreeError, TreeParams};
use locus_core::Vec2;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocusStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    TreeFull = 3,
    NotOccupied = 4,
    AllFailed = 5,
    Internal = 6,
}

/// Values for [`LocusTrialConfig::algorithm`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocusAlgorithm {
    Locus = 0,
    LocusNoHeal = 1,
    Mobs = 2,
}

/// Why a trial stopped. `Running` means it has not.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocusTermination {
    Running = 0,
    Success = 1,
    AllFailed = 2,
    Budget = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LocusTrialConfig {
    /// One of the `LocusAlgorithm` values.
    pub algorithm: u32,
    pub n: u32,
    pub perturbed: bool,
    pub p_generic: f64,
    pub p_inplume: f64,
    pub tick_budget: u64,
    pub r_min: f64,
    pub r_max: f64,
}

/// Tick fields are -1 when the event never happened.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LocusTrialResult {
    pub success: bool,
    pub contact_tick: i64,
    pub maxflux_tick: i64,
    pub survivors: u32,
    pub distance_m: f64,
    pub heal_events: u64,
    pub ticks: u64,
    pub termination: i32,
}

/// Slot ids start at 1; 0 stands for "none".
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LocusSlot {
    pub id: u32,
    pub level: u32,
    pub x: f64,
    pub y: f64,
    pub occupied: bool,
    pub parent: u32,
    pub heir: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LocusDrone {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub alive: bool,
}

/// Opaque swarm tree.
pub struct LocusTree(SwarmTree);

/// Opaque plume field.
pub struct LocusPlume(PlumeField);

/// Opaque running trial.
pub struct LocusWorld(World);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Fail(LocusStatus, String);

impl From<ConfigError> for Fail {
    fn from(e: ConfigError) -> Self {
        Fail(LocusStatus::InvalidArgument, e.to_string())
    }
}

impl From<TreeError> for Fail {
    fn from(e: TreeError) -> Self {
        let code = match e {
            TreeError::Full(_) => LocusStatus::TreeFull,
            TreeError::NotOccupied(_) => LocusStatus::NotOccupied,
            TreeError::AllFailed => LocusStatus::AllFailed,
            TreeError::InvalidParams(_) | TreeError::UnknownSlot(_) => LocusStatus::InvalidArgument,
            TreeError::Invariant(_) => LocusStatus::Internal,
        };
        Fail(code, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(LocusStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> LocusStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LocusStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            LocusStatus::Internal
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn get_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(v);
    Ok(())
}

fn tree_params(r_min: f64, r_max: f64) -> Result<TreeParams, Fail> {
    Ok(TreeParams::new(r_min, r_max)?)
}

fn algorithm(code: u32) -> Result<Algorithm, Fail> {
    const LOCUS: u32 = LocusAlgorithm::Locus as u32;
    const NO_HEAL: u32 = LocusAlgorithm::LocusNoHeal as u32;
    const MOBS: u32 = LocusAlgorithm::Mobs as u32;
    match code {
        LOCUS => Ok(Algorithm::Locus),
        NO_HEAL => Ok(Algorithm::LocusNoHeal),
        MOBS => Ok(Algorithm::Mobs),
        _ => Err(Fail(
            LocusStatus::InvalidArgument,
            format!("unknown algorithm code {code}"),
        )),
    }
}

fn termination_code(t: Option<Termination>) -> LocusTermination {
    match t {
        None => LocusTermination::Running,
        Some(Termination::Success) => LocusTermination::Success,
        Some(Termination::AllFailed) => LocusTermination::AllFailed,
        Some(Termination::Budget) => LocusTermination::Budget,
    }
}

fn trial_config(c: &LocusTrialConfig) -> Result<TrialConfig, Fail> {
    let mut cfg = TrialConfig {
        algorithm: algorithm(c.algorithm)?,
        n: c.n as usize,
        failure: FailureModel {
            p_generic: c.p_generic,
            p_inplume: c.p_inplume,
        },
        tick_budget: c.tick_budget,
        tree: tree_params(c.r_min, c.r_max)?,
        ..TrialConfig::default()
    };
    cfg.plume.perturbed = c.perturbed;
    cfg.validate()?;
    Ok(cfg)
}

fn trial_result(r: &TrialResult) -> LocusTrialResult {
    let tick = |t: Option<u64>| t.map_or(-1, |t| t as i64);
    LocusTrialResult {
        success: r.success,
        contact_tick: tick(r.contact_tick),
        maxflux_tick: tick(r.maxflux_tick),
        survivors: r.survivors as u32,
        distance_m: r.distance_m,
        heal_events: r.heal_events,
        ticks: r.ticks,
        termination: termination_code(Some(r.reason)) as i32,
    }
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn locus_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn locus_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default settings for a LoCUS trial with `n` drones.
#[no_mangle]
pub extern "C" fn locus_trial_config_default(n: u32) -> LocusTrialConfig {
    let d = TrialConfig::default();
    LocusTrialConfig {
        algorithm: LocusAlgorithm::Locus as u32,
        n,
        perturbed: false,
        p_generic: 0.0,
        p_inplume: 0.0,
        tick_budget: d.tick_budget,
        r_min: d.tree.r_min,
        r_max: d.tree.r_max,
    }
}

/// Builds a fully populated tree of `n` drones.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn locus_tree_new(
    n: u32,
    r_min: f64,
    r_max: f64,
    out: *mut *mut LocusTree,
) -> LocusStatus {
    guard(|| {
        if n == 0 {
            return Err(Fail(LocusStatus::InvalidArgument, "n must be at least 1".into()));
        }
        let t = SwarmTree::populated(n as usize, tree_params(r_min, r_max)?);
        put(out, Box::into_raw(Box::new(LocusTree(t))))
    })
}

/// # Safety
/// `tree` must come from [`locus_tree_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn locus_tree_free(tree: *mut LocusTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Number of slots (occupied or not).
///
/// # Safety
/// `tree` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn locus_tree_slot_count(tree: *const LocusTree, out: *mut u32) -> LocusStatus {
    guard(|| put(out, get(tree, "tree")?.0.capacity() as u32))
}

/// # Safety
/// `tree` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn locus_tree_occupied_count(
    tree: *const LocusTree,
    out: *mut u32,
) -> LocusStatus {
    guard(|| put(out, get(tree, "tree")?.0.occupied_count() as u32))
}

/// Height difference between the tallest and shortest root branch.
///
/// # Safety
/// `tree` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn locus_tree_height_spread(
    tree: *const LocusTree,
    out: *mut i64,
) -> LocusStatus {
    guard(|| put(out, get(tree, "tree")?.0.height_spread()))
}

/// # Safety
/// `tree` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn locus_tree_slot(
    tree: *const LocusTree,
    id: u32,
    out: *mut LocusSlot,
) -> LocusStatus {
    guard(|| {
        let t = &get(tree, "tree")?.0;
        if id == 0 || id as usize > t.capacity() {
            return Err(TreeError::UnknownSlot(SlotId(id)).into());
        }
        let s = t.slot(SlotId(id));
        let raw = |o: Option<SlotId>| o.map_or(0, |s| s.0);
        put(
            out,
            LocusSlot {
                id,
                level: s.level,
                x: s.offset.x,
                y: s.offset.y,
                occupied: t.is_occupied(s.id),
                parent: raw(t.parent(s.id)),
                heir: raw(t.heir(s.id)),
            },
        )
    })
}

/// Fails the given slots at once and applies the full recovery plan,
/// including rebalancing. Optional outputs receive the number of heir
/// flights and rebalance moves.
///
/// # Safety
/// `slots` must point to `len` readable ids; `flights` and `moves` may be
/// null.
#[no_mangle]
pub unsafe extern "C" fn locus_tree_fail(
    tree: *mut LocusTree,
    slots: *const u32,
    len: usize,
    flights: *mut u32,
    moves: *mut u32,
) -> LocusStatus {
    guard(|| {
        let t = &mut get_mut(tree, "tree")?.0;
        if slots.is_null() && len > 0 {
            return Err(null("slots"));
        }
        let ids: &[u32] = if len == 0 {
            &[]
        } else {
            std::slice::from_raw_parts(slots, len)
        };
        let failed: BTreeSet<SlotId> = ids.iter().map(|&i| SlotId(i)).collect();
        let plan = t.plan_recovery(&failed)?;
        for s in &plan.steps {
            t.apply_recovery_step(s)?;
        }
        for m in &plan.rebalance {
            t.apply_rebalance_move(m)?;
        }
        let heirs = plan.steps.iter().filter(|s| s.heir.is_some()).count() as u32;
        if !flights.is_null() {
            flights.write(heirs);
        }
        if !moves.is_null() {
            moves.write(plan.rebalance.len() as u32);
        }
        Ok(())
    })
}

/// A plume with default parameters whose peak sits at `(peak_x, peak_y)` and
/// whose wind blows along `orientation` radians.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn locus_plume_new(
    perturbed: bool,
    peak_x: f64,
    peak_y: f64,
    orientation: f64,
    out: *mut *mut LocusPlume,
) -> LocusStatus {
    guard(|| {
        let params = PlumeParams {
            perturbed,
            ..PlumeParams::default()
        };
        let pose = PlumePose::with_peak_at(Vec2::new(peak_x, peak_y), orientation, &params);
        let f = PlumeField::new(params, pose)
            .map_err(|e| Fail(LocusStatus::InvalidArgument, e.to_string()))?;
        put(out, Box::into_raw(Box::new(LocusPlume(f))))
    })
}

/// # Safety
/// `plume` must come from [`locus_plume_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn locus_plume_free(plume: *mut LocusPlume) {
    if !plume.is_null() {
        drop(Box::from_raw(plume));
    }
}

/// Normalized reading in `[0, 1]` at a world position.
///
/// # Safety
/// `plume` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn locus_plume_reading(
    plume: *const LocusPlume,
    x: f64,
    y: f64,
    out: *mut f64,
) -> LocusStatus {
    guard(|| put(out, get(plume, "plume")?.0.reading(Vec2::new(x, y))))
}

/// Runs a whole trial.
///
/// # Safety
/// `config` must be readable and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn locus_run_trial(
    config: *const LocusTrialConfig,
    seed: u64,
    out: *mut LocusTrialResult,
) -> LocusStatus {
    guard(|| {
        let cfg = trial_config(get(config, "config")?)?;
        let r = run_trial(&cfg, seed)?;
        put(out, trial_result(&r))
    })
}

/// Sets up a trial for stepping tick by tick.
///
/// # Safety
/// `config` must be readable and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn locus_world_new(
    config: *const LocusTrialConfig,
    seed: u64,
    out: *mut *mut LocusWorld,
) -> LocusStatus {
    guard(|| {
        let cfg = trial_config(get(config, "config")?)?;
        let w = World::new(cfg, seed)?;
        put(out, Box::into_raw(Box::new(LocusWorld(w))))
    })
}

/// # Safety
/// `world` must come from [`locus_world_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn locus_world_free(world: *mut LocusWorld) {
    if !world.is_null() {
        drop(Box::from_raw(world));
    }
}

/// Advances one tick and reports the termination state afterwards.
///
/// # Safety
/// `world` must be a live handle; `out` may be null.
#[no_mangle]
pub unsafe extern "C" fn locus_world_step(
    world: *mut LocusWorld,
    out: *mut LocusTermination,
) -> LocusStatus {
    guard(|| {
        let t = get_mut(world, "world")?.0.step();
        if !out.is_null() {
            out.write(termination_code(t));
        }
        Ok(())
    })
}

/// # Safety
/// `world` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn locus_world_tick(world: *const LocusWorld, out: *mut u64) -> LocusStatus {
    guard(|| put(out, get(world, "world")?.0.tick()))
}

/// # Safety
/// `world` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn locus_world_drone(
    world: *const LocusWorld,
    index: u32,
    out: *mut LocusDrone,
) -> LocusStatus {
    guard(|| {
        let w = &get(world, "world")?.0;
        let d = w.drones().get(index as usize).ok_or_else(|| {
            Fail(
                LocusStatus::InvalidArgument,
                format!("drone {index} out of range"),
            )
        })?;
        put(
            out,
            LocusDrone {
                x: d.pos.x,
                y: d.pos.y,
                z: d.pos.z,
                alive: d.alive,
            },
        )
    })
}

/// Plume peak of the trial in world coordinates.
///
/// # Safety
/// `world` must be a live handle; `x` and `y` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn locus_world_peak(
    world: *const LocusWorld,
    x: *mut f64,
    y: *mut f64,
) -> LocusStatus {
    guard(|| {
        let p = get(world, "world")?.0.plume().peak();
        put(x, p.x)?;
        put(y, p.y)
    })
}

/// Result so far; final once a step reported termination.
///
/// # Safety
/// `world` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn locus_world_result(
    world: *const LocusWorld,
    out: *mut LocusTrialResult,
) -> LocusStatus {
    guard(|| {
        let w = &get(world, "world")?.0;
        let mut r = trial_result(&w.result());
        if w.termination().is_none() {
            r.termination = LocusTermination::Running as i32;
        }
        put(out, r)
    })
}
