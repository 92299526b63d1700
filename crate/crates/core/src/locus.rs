//! The cohesive swarm controller: formation flight along an Archimedes
//! spiral until the plume is found, then plane-fit gradient ascent, with
//! failure polling and heir-based healing at every waypoint.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_4, TAU};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geom::{Vec2, Vec3};
use crate::numerics::{ascent_direction, fit_plane, pairwise_direction, Sample};
use crate::plume::PlumeField;
use crate::sim::{DroneState, SampleEvent};
use crate::tree::{DroneId, RebalanceMove, RecoveryStep, SlotId, SwarmTree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocusParams {
    /// Replace failed drones with their heirs and rebalance. When false,
    /// failed drones are just unlinked.
    pub healing: bool,
    /// Distance moved per gradient step, meters.
    pub step_length: f64,
    /// Reading that counts as plume contact.
    pub threshold: f64,
    /// A waypoint is reached once every live drone is this close to it.
    pub arrival_tolerance: f64,
    /// Upper bound of the per-waypoint formation rotation increment.
    pub max_rotation: f64,
    /// Radius of the common per-waypoint position jitter.
    pub jitter_radius: f64,
}

impl Default for LocusParams {
    fn default() -> Self {
        Self {
            healing: true,
            step_length: 3.0,
            threshold: 0.005,
            arrival_tolerance: 0.2,
            max_rotation: FRAC_PI_4,
            jitter_radius: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocusMode {
    Assemble,
    Spiral,
    Descend,
    Healing,
    /// The root failed with healing disabled: nobody is left to hand out
    /// waypoints, so the survivors hover in place.
    Leaderless,
    Done,
}

impl LocusMode {
    pub fn as_str(self) -> &'static str {
        match self {
            LocusMode::Assemble => "assemble",
            LocusMode::Spiral => "spiral",
            LocusMode::Descend => "descend",
            LocusMode::Healing => "healing",
            LocusMode::Leaderless => "leaderless",
            LocusMode::Done => "done",
        }
    }
}

/// Archimedes spiral `r = a * phi` around `center`, tracked in polar form so
/// the arm spacing can change when the swarm shrinks without the path
/// jumping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spiral {
    pub center: Vec2,
    pub r: f64,
    pub phi: f64,
}

impl Spiral {
    pub fn new(center: Vec2) -> Self {
        Self {
            center,
            r: 0.0,
            phi: 0.0,
        }
    }

    pub fn position(&self) -> Vec2 {
        self.center + Vec2::from_angle(self.phi) * self.r
    }

    /// Walks `arc` meters along a spiral whose arms are `spacing` apart.
    pub fn advance(&mut self, spacing: f64, arc: f64) -> Vec2 {
        const SUBSTEPS: usize = 32;
        let a = spacing / TAU;
        let h = arc / SUBSTEPS as f64;
        for _ in 0..SUBSTEPS {
            // Midpoint rule on ds = sqrt(r^2 + a^2) dphi.
            let d0 = h / self.r.hypot(a);
            let rm = self.r + 0.5 * a * d0;
            let dphi = h / rm.hypot(a);
            self.phi += dphi;
            self.r += a * dphi;
        }
        self.position()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointRecord {
    pub tick: u64,
    pub mode: LocusMode,
    pub root: Vec2,
    pub live: usize,
    pub heal_events: u64,
    pub max_reading: f64,
}

#[derive(Debug, Clone)]
enum HealAction {
    Replace(RecoveryStep),
    Move(RebalanceMove),
}

#[derive(Debug, Clone)]
struct Flight {
    drone: DroneId,
    path: Vec<Vec3>,
    next: usize,
    action: HealAction,
}

/// Per-call inputs from the simulation kernel.
pub struct Ctx<'a> {
    pub tick: u64,
    pub plume: &'a PlumeField,
    pub rng: &'a mut ChaCha8Rng,
    pub samples: &'a mut Vec<SampleEvent>,
}

#[derive(Debug, Clone)]
pub struct LocusController {
    params: LocusParams,
    altitude: f64,
    mode: LocusMode,
    resume: LocusMode,
    tree: SwarmTree,
    root_wp: Vec2,
    spiral: Spiral,
    heading: f64,
    jitter: Vec2,
    flight: Option<Flight>,
    heal_events: u64,
    hops: Vec<Option<usize>>,
    trace: Option<Vec<WaypointRecord>>,
}

impl LocusController {
    /// Builds the formation around `takeoff`; drone `i` starts on the ground
    /// under slot `i + 1` and climbs to `altitude`.
    pub fn new(
        n: usize,
        tree: TreeParams,
        params: LocusParams,
        takeoff: Vec2,
        altitude: f64,
    ) -> (Self, Vec<DroneState>) {
        let tree = SwarmTree::populated(n, tree);
        let drones = tree
            .slots()
            .iter()
            .map(|s| {
                let p = takeoff + s.offset;
                DroneState::new(p.with_z(0.0), p.with_z(altitude))
            })
            .collect();
        let ctl = Self {
            params,
            altitude,
            mode: LocusMode::Assemble,
            resume: LocusMode::Assemble,
            hops: vec![None; n],
            tree,
            root_wp: takeoff,
            spiral: Spiral::new(takeoff),
            heading: 0.0,
            jitter: Vec2::ZERO,
            flight: None,
            heal_events: 0,
            trace: None,
        };
        (ctl, drones)
    }

    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> &[WaypointRecord] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn mode(&self) -> LocusMode {
        self.mode
    }

    pub fn tree(&self) -> &SwarmTree {
        &self.tree
    }

    pub fn root_waypoint(&self) -> Vec2 {
        self.root_wp
    }

    pub fn heal_events(&self) -> u64 {
        self.heal_events
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }

    /// Hop count from the root recorded for each drone at the last
    /// distribution.
    pub fn hops(&self) -> &[Option<usize>] {
        &self.hops
    }

    pub fn finish(&mut self) {
        self.mode = LocusMode::Done;
    }

    /// Arm spacing of the search spiral for the current tree.
    pub fn spiral_spacing(&self) -> f64 {
        self.tree.deepest_full_ring().max(1) as f64 * self.tree.params().r_max
    }

    fn slot_target(&self, slot: SlotId, root: Vec2) -> Vec2 {
        root + self.tree.slot(slot).offset.rotate(self.heading) + self.jitter
    }

    /// Targets for every live drone: root waypoint plus the rotated slot
    /// offset plus the common jitter.
    pub fn distribute_waypoint(&mut self, root: Vec2, drones: &mut [DroneState]) {
        self.root_wp = root;
        let occupied: Vec<SlotId> = self.tree.occupied().collect();
        for s in occupied {
            let d = self.tree.occupant(s).expect("occupied");
            let i = d.0 as usize;
            if !drones[i].alive {
                continue;
            }
            drones[i].target = self.slot_target(s, root).with_z(self.altitude);
            self.hops[i] = self.tree.depth(s);
        }
    }

    /// Advances the rotation and draws a fresh jitter.
    pub fn randomize_pose(&mut self, rng: &mut ChaCha8Rng) {
        self.heading = (self.heading + rng.gen::<f64>() * self.params.max_rotation) % TAU;
        let r = self.params.jitter_radius * rng.gen::<f64>().sqrt();
        self.jitter = Vec2::from_angle(rng.gen::<f64>() * TAU) * r;
    }

    fn all_arrived(&self, drones: &[DroneState]) -> bool {
        let tol = self.params.arrival_tolerance;
        drones
            .iter()
            .filter(|d| d.alive)
            .all(|d| d.pos.dist(d.target) <= tol)
    }

    fn dead_slots(&self, drones: &[DroneState]) -> BTreeSet<SlotId> {
        self.tree
            .occupied()
            .filter(|&s| !drones[self.tree.occupant(s).unwrap().0 as usize].alive)
            .collect()
    }

    /// One control tick.
    pub fn update(&mut self, drones: &mut [DroneState], ctx: &mut Ctx<'_>) {
        match self.mode {
            LocusMode::Done | LocusMode::Leaderless => {}
            LocusMode::Healing => self.heal_tick(drones, ctx),
            LocusMode::Assemble | LocusMode::Spiral | LocusMode::Descend => {
                if self.all_arrived(drones) {
                    self.on_arrival(drones, ctx);
                }
            }
        }
    }

    fn on_arrival(&mut self, drones: &mut [DroneState], ctx: &mut Ctx<'_>) {
        let dead = self.dead_slots(drones);
        if !dead.is_empty() {
            if self.params.healing {
                self.resume = self.mode;
                self.mode = LocusMode::Healing;
                self.heal_tick(drones, ctx);
                return;
            }
            for s in dead {
                self.tree
                    .remove_without_repair(s)
                    .expect("dead slot is occupied");
            }
            if !self.tree.is_occupied(SlotId::ROOT) {
                self.mode = LocusMode::Leaderless;
                for d in drones.iter_mut() {
                    d.target = d.pos;
                }
                return;
            }
        }
        self.sample_and_decide(drones, ctx);
    }

    fn start_flight(
        &mut self,
        drone: DroneId,
        path: &[Vec3],
        action: HealAction,
        drones: &mut [DroneState],
    ) {
        let world: Vec<Vec3> = path
            .iter()
            .map(|p| {
                let h = self.root_wp + p.horizontal().rotate(self.heading) + self.jitter;
                h.with_z(self.altitude + p.z)
            })
            .collect();
        drones[drone.0 as usize].target = world[0];
        self.flight = Some(Flight {
            drone,
            path: world,
            next: 1,
            action,
        });
    }

    fn heal_tick(&mut self, drones: &mut [DroneState], ctx: &mut Ctx<'_>) {
        let tol = self.params.arrival_tolerance;
        loop {
            if let Some(f) = self.flight.as_mut() {
                let d = &mut drones[f.drone.0 as usize];
                if !d.alive {
                    // The flier died en route; its old leaf is now a failure
                    // in its own right and the plan is rebuilt.
                    self.flight = None;
                    continue;
                }
                if d.pos.dist(d.target) > tol {
                    return;
                }
                if f.next < f.path.len() {
                    d.target = f.path[f.next];
                    f.next += 1;
                    return;
                }
                let f = self.flight.take().unwrap();
                match &f.action {
                    HealAction::Replace(step) => self.tree.apply_recovery_step(step),
                    HealAction::Move(mv) => self.tree.apply_rebalance_move(mv),
                }
                .expect("planned action applies to the tree it was planned on");
                self.heal_events += 1;
            }

            if !drones.iter().any(|d| d.alive) {
                return;
            }
            let dead = self.dead_slots(drones);
            if !dead.is_empty() {
                let Ok(plan) = self.tree.plan_recovery(&dead) else {
                    return;
                };
                let step = plan.steps.into_iter().next().expect("non-empty plan");
                match step.heir {
                    None => {
                        self.tree
                            .apply_recovery_step(&step)
                            .expect("leaf removal applies");
                    }
                    Some(h) => {
                        let drone = self.tree.occupant(h).expect("heir occupied");
                        let path = step.path.clone();
                        self.start_flight(drone, &path, HealAction::Replace(step), drones);
                        return;
                    }
                }
                continue;
            }
            if let Some(mv) = self.tree.rebalance().into_iter().next() {
                let drone = self.tree.occupant(mv.from).expect("source occupied");
                let path = mv.path.clone();
                self.start_flight(drone, &path, HealAction::Move(mv), drones);
                return;
            }
            self.mode = self.resume;
            self.sample_and_decide(drones, ctx);
            return;
        }
    }

    fn sample_and_decide(&mut self, drones: &mut [DroneState], ctx: &mut Ctx<'_>) {
        let mut samples = Vec::with_capacity(drones.len());
        for s in self.tree.occupied() {
            let id = self.tree.occupant(s).unwrap();
            let d = &drones[id.0 as usize];
            if !d.alive {
                continue;
            }
            let pos = d.pos.horizontal();
            let val = ctx.plume.reading(pos);
            samples.push(Sample::new(pos, val));
            ctx.samples.push(SampleEvent {
                drone: id,
                pos,
                reading: val,
            });
        }
        let max_reading = samples.iter().map(|s| s.val).fold(0.0, f64::max);
        let direction = match samples.len() {
            0 | 1 => None,
            2 => pairwise_direction(&samples[0], &samples[1]),
            _ => fit_plane(&samples).ok().and_then(|f| ascent_direction(&f)),
        };
        let contact = max_reading >= self.params.threshold;

        let next = match direction {
            Some(dir) if contact => {
                self.mode = LocusMode::Descend;
                self.root_wp + dir * self.params.step_length
            }
            _ => {
                if self.mode == LocusMode::Descend {
                    self.spiral = Spiral::new(self.root_wp);
                }
                self.mode = LocusMode::Spiral;
                let spacing = self.spiral_spacing();
                self.spiral.advance(spacing, spacing)
            }
        };
        self.randomize_pose(ctx.rng);
        self.distribute_waypoint(next, drones);

        if let Some(t) = self.trace.as_mut() {
            t.push(WaypointRecord {
                tick: ctx.tick,
                mode: self.mode,
                root: next,
                live: samples.len(),
                heal_events: self.heal_events,
                max_reading,
            });
        }
    }
}
