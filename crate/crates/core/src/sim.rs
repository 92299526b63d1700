//! Fixed-step point-mass world with seeded fault injection.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Vec2, Vec3};
use crate::locus::{Ctx, LocusController, LocusParams};
use crate::mobs::{MobsDrone, MobsMode, MobsParams};
use crate::plume::{make_pose, PlumeField, PlumeParams};
use crate::tree::{DroneId, TreeParams};

/// Seconds per tick: 10^6 ticks span 17.3 hours.
pub const TICK_SECONDS: f64 = 17.3 * 3600.0 / 1e6;

pub const DEFAULT_TICK_BUDGET: u64 = 1_000_000;

const STREAM_ENV: u64 = 0;
const STREAM_CONTROLLER: u64 = 1;
const STREAM_FAILURE: u64 = 0x1_0000;
const STREAM_DECISION: u64 = 0x2_0000;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("unknown {kind} '{value}'")]
    Unknown { kind: &'static str, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Locus,
    LocusNoHeal,
    Mobs,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Locus, Algorithm::LocusNoHeal, Algorithm::Mobs];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Locus => "locus",
            Algorithm::LocusNoHeal => "locus-no-heal",
            Algorithm::Mobs => "mobs",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| ConfigError::Unknown {
                kind: "algorithm",
                value: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlumeVariant {
    Smooth,
    Perturbed,
}

impl PlumeVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            PlumeVariant::Smooth => "smooth",
            PlumeVariant::Perturbed => "perturbed",
        }
    }

    pub fn is_perturbed(self) -> bool {
        self == PlumeVariant::Perturbed
    }
}

impl fmt::Display for PlumeVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlumeVariant {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "smooth" => Ok(PlumeVariant::Smooth),
            "perturbed" => Ok(PlumeVariant::Perturbed),
            _ => Err(ConfigError::Unknown {
                kind: "plume variant",
                value: s.to_string(),
            }),
        }
    }
}

/// Per-tick failure probability `p_generic + p_inplume * reading`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FailureModel {
    pub p_generic: f64,
    pub p_inplume: f64,
}

impl FailureModel {
    pub const NONE: FailureModel = FailureModel {
        p_generic: 0.0,
        p_inplume: 0.0,
    };

    pub fn probability(&self, reading: f64) -> f64 {
        (self.p_generic + self.p_inplume * reading).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub algorithm: Algorithm,
    pub n: usize,
    pub plume: PlumeParams,
    pub failure: FailureModel,
    pub tree: TreeParams,
    /// Horizontal flight speed, m/s.
    pub speed: f64,
    pub dt: f64,
    pub altitude: f64,
    pub tick_budget: u64,
    pub success_radius: f64,
    /// Radius of the disk around take-off that holds the plume peak.
    pub placement_radius: f64,
    pub contact_threshold: f64,
    pub locus: LocusParams,
    pub mobs: MobsParams,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Locus,
            n: 5,
            plume: PlumeParams::default(),
            failure: FailureModel::NONE,
            tree: TreeParams::default(),
            speed: 3.0,
            dt: TICK_SECONDS,
            altitude: 10.0,
            tick_budget: DEFAULT_TICK_BUDGET,
            success_radius: 1.0,
            placement_radius: 100.0,
            contact_threshold: 0.005,
            locus: LocusParams::default(),
            mobs: MobsParams::default(),
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.n == 0 {
            return bad("swarm size must be at least 1".into());
        }
        self.tree
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.plume
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        for (name, p) in [
            ("p_generic", self.failure.p_generic),
            ("p_inplume", self.failure.p_inplume),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        for (name, v) in [
            ("speed", self.speed),
            ("dt", self.dt),
            ("altitude", self.altitude),
            ("success_radius", self.success_radius),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.placement_radius.is_finite() && self.placement_radius >= 0.0) {
            return bad(format!(
                "placement_radius must be non-negative, got {}",
                self.placement_radius
            ));
        }
        if self.locus.arrival_tolerance >= self.success_radius {
            return bad("arrival tolerance must be below the success radius".into());
        }
        Ok(())
    }

    /// Distance a drone covers per tick.
    pub fn step_length(&self) -> f64 {
        self.speed * self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Success,
    AllFailed,
    Budget,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Success => "success",
            Termination::AllFailed => "all-failed",
            Termination::Budget => "budget",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub success: bool,
    pub contact_tick: Option<u64>,
    pub maxflux_tick: Option<u64>,
    pub survivors: usize,
    pub distance_m: f64,
    pub heal_events: u64,
    pub reason: Termination,
    pub ticks: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DroneState {
    pub pos: Vec3,
    pub target: Vec3,
    pub alive: bool,
    pub distance: f64,
}

impl DroneState {
    pub fn new(pos: Vec3, target: Vec3) -> Self {
        Self {
            pos,
            target,
            alive: true,
            distance: 0.0,
        }
    }
}

/// A reading taken by a drone as part of a control decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleEvent {
    pub drone: DroneId,
    pub pos: Vec2,
    pub reading: f64,
}

#[derive(Debug, Clone)]
pub struct MobsAgent {
    state: MobsDrone,
    rng: ChaCha8Rng,
    airborne: bool,
}

#[derive(Debug, Clone)]
pub enum Controller {
    Locus(Box<LocusController>),
    Mobs(Vec<MobsAgent>),
}

/// The complete state of one trial.
#[derive(Debug, Clone)]
pub struct World {
    cfg: TrialConfig,
    tick: u64,
    drones: Vec<DroneState>,
    plume: PlumeField,
    controller: Controller,
    controller_rng: ChaCha8Rng,
    failure_rngs: Vec<ChaCha8Rng>,
    samples: Vec<SampleEvent>,
    contact_tick: Option<u64>,
    success_tick: Option<u64>,
    done: Option<Termination>,
}

impl World {
    pub fn new(cfg: TrialConfig, seed: u64) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let takeoff = Vec2::ZERO;
        let pose = make_pose(
            &mut stream(seed, STREAM_ENV),
            takeoff,
            cfg.placement_radius,
            &cfg.plume,
        );
        let plume =
            PlumeField::new(cfg.plume, pose).map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let (controller, drones) = match cfg.algorithm {
            Algorithm::Locus | Algorithm::LocusNoHeal => {
                let params = LocusParams {
                    healing: cfg.algorithm == Algorithm::Locus,
                    threshold: cfg.contact_threshold,
                    ..cfg.locus
                };
                let (ctl, drones) =
                    LocusController::new(cfg.n, cfg.tree, params, takeoff, cfg.altitude);
                (Controller::Locus(Box::new(ctl)), drones)
            }
            Algorithm::Mobs => {
                // Same ground pads as the formation; spokes radiate from take-off.
                let pads = crate::tree::slot_layout(cfg.n, &cfg.tree);
                let mut agents = Vec::with_capacity(cfg.n);
                let mut drones = Vec::with_capacity(cfg.n);
                for (i, pad) in pads.iter().enumerate() {
                    let mut rng = stream(seed, STREAM_DECISION + i as u64);
                    let state = MobsDrone::new(takeoff, &mut rng);
                    agents.push(MobsAgent {
                        state,
                        rng,
                        airborne: false,
                    });
                    let p = takeoff + pad.offset;
                    drones.push(DroneState::new(p.with_z(0.0), p.with_z(cfg.altitude)));
                }
                (Controller::Mobs(agents), drones)
            }
        };
        let failure_rngs = (0..cfg.n)
            .map(|i| stream(seed, STREAM_FAILURE + i as u64))
            .collect();
        Ok(Self {
            tick: 0,
            drones,
            plume,
            controller,
            controller_rng: stream(seed, STREAM_CONTROLLER),
            failure_rngs,
            samples: Vec::new(),
            contact_tick: None,
            success_tick: None,
            done: None,
            cfg,
        })
    }

    pub fn config(&self) -> &TrialConfig {
        &self.cfg
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn drones(&self) -> &[DroneState] {
        &self.drones
    }

    pub fn plume(&self) -> &PlumeField {
        &self.plume
    }

    pub fn controller(&self) -> &Controller {
        &self.controller
    }

    pub fn locus(&self) -> Option<&LocusController> {
        match &self.controller {
            Controller::Locus(c) => Some(c),
            Controller::Mobs(_) => None,
        }
    }

    pub fn enable_waypoint_trace(&mut self) {
        if let Controller::Locus(c) = &mut self.controller {
            c.enable_trace();
        }
    }

    pub fn termination(&self) -> Option<Termination> {
        self.done
    }

    /// Samples taken during the most recent tick.
    pub fn last_samples(&self) -> &[SampleEvent] {
        &self.samples
    }

    /// Control mode label for drone `i`.
    pub fn drone_mode(&self, i: usize) -> &'static str {
        match &self.controller {
            Controller::Locus(c) => c.mode().as_str(),
            Controller::Mobs(a) => {
                if !a[i].airborne {
                    "assemble"
                } else {
                    match a[i].state.mode {
                        MobsMode::Spoke => "spoke",
                        MobsMode::Chemotaxis => "chemotaxis",
                    }
                }
            }
        }
    }

    pub fn live_count(&self) -> usize {
        self.drones.iter().filter(|d| d.alive).count()
    }

    fn move_drones(&mut self) {
        let step = self.cfg.step_length();
        for d in self.drones.iter_mut().filter(|d| d.alive) {
            let next = d.pos.step_toward(d.target, step);
            d.distance += next.dist(d.pos);
            d.pos = next;
        }
    }

    /// Fails drones for this tick and returns their indices.
    pub fn inject_failures(&mut self) -> Vec<usize> {
        let model = self.cfg.failure;
        let mut failed = Vec::new();
        if model.p_generic <= 0.0 && model.p_inplume <= 0.0 {
            return failed;
        }
        for (i, d) in self.drones.iter_mut().enumerate() {
            if !d.alive {
                continue;
            }
            let reading = if model.p_inplume > 0.0 {
                self.plume.reading(d.pos.horizontal())
            } else {
                0.0
            };
            let p = model.probability(reading);
            if p > 0.0 && self.failure_rngs[i].gen::<f64>() < p {
                d.alive = false;
                failed.push(i);
            }
        }
        failed
    }

    /// Kills drone `i` outside the failure model. Returns false if it was
    /// already down or out of range.
    pub fn fail_drone(&mut self, i: usize) -> bool {
        match self.drones.get_mut(i) {
            Some(d) if d.alive => {
                d.alive = false;
                true
            }
            _ => false,
        }
    }

    fn run_controller(&mut self) {
        match &mut self.controller {
            Controller::Locus(c) => {
                let mut ctx = Ctx {
                    tick: self.tick,
                    plume: &self.plume,
                    rng: &mut self.controller_rng,
                    samples: &mut self.samples,
                };
                c.update(&mut self.drones, &mut ctx);
            }
            Controller::Mobs(agents) => {
                let params = &self.cfg.mobs;
                for (i, (a, d)) in agents.iter_mut().zip(self.drones.iter_mut()).enumerate() {
                    if !d.alive || d.pos != d.target {
                        continue;
                    }
                    let target = if !a.airborne {
                        a.airborne = true;
                        a.state.current_waypoint(params)
                    } else {
                        let pos = d.pos.horizontal();
                        let reading = self.plume.reading(pos);
                        self.samples.push(SampleEvent {
                            drone: DroneId(i as u32),
                            pos,
                            reading,
                        });
                        a.state.step(pos, reading, params, &mut a.rng)
                    };
                    d.target = target.with_z(self.cfg.altitude);
                }
            }
        }
    }

    /// Advances one tick; returns the termination reason once the trial ends.
    pub fn step(&mut self) -> Option<Termination> {
        if self.done.is_some() {
            return self.done;
        }
        self.samples.clear();
        self.move_drones();
        self.inject_failures();
        let any_alive = self.drones.iter().any(|d| d.alive);
        if any_alive {
            self.run_controller();
        }
        self.tick += 1;

        let peak = self.plume.peak();
        for s in &self.samples {
            if self.contact_tick.is_none() && s.reading >= self.cfg.contact_threshold {
                self.contact_tick = Some(self.tick);
            }
            if self.success_tick.is_none() && s.pos.dist(peak) <= self.cfg.success_radius {
                self.success_tick = Some(self.tick);
            }
        }

        self.done = if self.success_tick.is_some() {
            if let Controller::Locus(c) = &mut self.controller {
                c.finish();
            }
            Some(Termination::Success)
        } else if !any_alive {
            Some(Termination::AllFailed)
        } else if self.tick >= self.cfg.tick_budget {
            Some(Termination::Budget)
        } else {
            None
        };
        self.done
    }

    pub fn result(&self) -> TrialResult {
        let heal_events = match &self.controller {
            Controller::Locus(c) => c.heal_events(),
            Controller::Mobs(_) => 0,
        };
        TrialResult {
            success: self.success_tick.is_some(),
            contact_tick: self.contact_tick,
            maxflux_tick: self.success_tick,
            survivors: self.live_count(),
            distance_m: self.drones.iter().map(|d| d.distance).sum(),
            heal_events,
            reason: self.done.unwrap_or(Termination::Budget),
            ticks: self.tick,
        }
    }
}

/// Runs one trial to completion.
pub fn run_trial(cfg: &TrialConfig, seed: u64) -> Result<TrialResult, ConfigError> {
    let mut world = World::new(cfg.clone(), seed)?;
    while world.step().is_none() {}
    Ok(world.result())
}
