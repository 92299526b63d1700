//! Balanced range-limited trees.
//!
//! Slots are laid out on concentric rings of radius `k * r_max` around the
//! root, with as many slots per ring as fit at a chord spacing of at least
//! `r_min`. Drones occupy slots; parent links always point to the nearest
//! occupied slot on the previous ring. Each internal slot keeps a pointer to
//! its *heir*, the leaf that flies in to replace it when it fails.

use std::cmp::Reverse;
use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{wrap_pi, wrap_tau, Vec2, Vec3};

/// Distances closer than this are treated as ties.
const DIST_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("invalid tree parameters: {0}")]
    InvalidParams(String),
    #[error("tree is full ({0} slots)")]
    Full(usize),
    #[error("slot {0} is not part of the layout")]
    UnknownSlot(SlotId),
    #[error("slot {0} is not occupied")]
    NotOccupied(SlotId),
    #[error("every drone in the swarm has failed")]
    AllFailed,
    #[error("tree invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Safety radius: minimum separation between any two drones.
    pub r_min: f64,
    /// Communication radius, also the spacing between rings.
    pub r_max: f64,
}

impl TreeParams {
    pub fn new(r_min: f64, r_max: f64) -> Result<Self, TreeError> {
        let p = Self { r_min, r_max };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), TreeError> {
        if !(self.r_min.is_finite() && self.r_min > 0.0) {
            return Err(TreeError::InvalidParams(format!(
                "r_min must be positive, got {}",
                self.r_min
            )));
        }
        if !(self.r_max.is_finite() && self.r_max >= self.r_min) {
            return Err(TreeError::InvalidParams(format!(
                "r_max must be at least r_min ({}), got {}",
                self.r_min, self.r_max
            )));
        }
        Ok(())
    }

    /// The ratio `r_max / r_min`, always at least one.
    pub fn spread(&self) -> f64 {
        self.r_max / self.r_min
    }
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { r_min: 3.0, r_max: 3.0 }
    }
}

/// 1-based slot identifier. Slot 1 is the root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SlotId(pub u32);

impl SlotId {
    pub const ROOT: SlotId = SlotId(1);

    fn idx(self) -> usize {
        self.0 as usize - 1
    }

    fn from_idx(i: usize) -> Self {
        SlotId(i as u32 + 1)
    }
}

impl fmt::Display for SlotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Index of a drone in the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DroneId(pub u32);

impl fmt::Display for DroneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A position in the formation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub id: SlotId,
    pub level: u32,
    pub index_in_ring: u32,
    /// Offset from the root in meters.
    pub offset: Vec2,
}

/// Number of slots on ring `level`: the count of points on a circle of radius
/// `level * r_max` whose neighbouring chords are at least `r_min` long.
pub fn ring_capacity(level: u32, params: &TreeParams) -> usize {
    if level == 0 {
        return 1;
    }
    let half_chord = 1.0 / (2.0 * level as f64 * params.spread());
    // Exact packings (chord == r_min) land a hair under an integer.
    (PI / half_chord.asin() + 1e-9).floor() as usize
}

/// Number of levels (counting the root level) needed to hold `n` drones.
pub fn level_count(n: usize, params: &TreeParams) -> usize {
    let mut total = 1usize;
    let mut level = 0u32;
    while total < n {
        level += 1;
        total += ring_capacity(level, params);
    }
    level as usize + 1
}

/// Geometry of slot `id`, a pure function of the id and the tree parameters.
pub fn slot_geometry(id: SlotId, params: &TreeParams) -> Slot {
    assert!(id.0 >= 1, "slot ids start at 1");
    let mut remaining = id.0 as usize - 1;
    let mut level = 0u32;
    loop {
        let cap = ring_capacity(level, params);
        if remaining < cap {
            let offset = if level == 0 {
                Vec2::ZERO
            } else {
                let angle = TAU * remaining as f64 / cap as f64;
                Vec2::from_angle(angle) * (level as f64 * params.r_max)
            };
            return Slot {
                id,
                level,
                index_in_ring: remaining as u32,
                offset,
            };
        }
        remaining -= cap;
        level += 1;
    }
}

/// The first `n` slots of the layout, filled level by level.
pub fn slot_layout(n: usize, params: &TreeParams) -> Vec<Slot> {
    let mut slots = Vec::with_capacity(n);
    let mut level = 0u32;
    while slots.len() < n {
        let cap = ring_capacity(level, params);
        for j in 0..cap {
            if slots.len() == n {
                break;
            }
            let id = SlotId(slots.len() as u32 + 1);
            let offset = if level == 0 {
                Vec2::ZERO
            } else {
                Vec2::from_angle(TAU * j as f64 / cap as f64) * (level as f64 * params.r_max)
            };
            slots.push(Slot {
                id,
                level,
                index_in_ring: j as u32,
                offset,
            });
        }
        level += 1;
    }
    slots
}

/// One entry of a recovery plan. `heir` is `None` for a failed leaf, which is
/// simply dropped from the formation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryStep {
    pub failed: SlotId,
    pub heir: Option<SlotId>,
    /// Heir flight in formation coordinates: `z` is relative to flight altitude.
    pub path: Vec<Vec3>,
}

/// A leaf relocation performed while rebalancing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RebalanceMove {
    pub from: SlotId,
    pub to: SlotId,
    pub path: Vec<Vec3>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RecoveryPlan {
    pub steps: Vec<RecoveryStep>,
    pub rebalance: Vec<RebalanceMove>,
}

impl RecoveryPlan {
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty() && self.rebalance.is_empty()
    }
}

/// The live swarm topology.
#[derive(Debug, Clone)]
pub struct SwarmTree {
    params: TreeParams,
    slots: Vec<Slot>,
    occupant: Vec<Option<DroneId>>,
    parent: Vec<Option<SlotId>>,
    children: Vec<Vec<SlotId>>,
    heir: Vec<Option<SlotId>>,
    /// False once a failure has been removed without repair; parent links are
    /// then explicit rather than geometric.
    geometric: bool,
}

impl SwarmTree {
    /// A vacant tree with `n` laid-out slots.
    pub fn new(n: usize, params: TreeParams) -> Self {
        let slots = slot_layout(n, &params);
        let n = slots.len();
        Self {
            params,
            slots,
            occupant: vec![None; n],
            parent: vec![None; n],
            children: vec![Vec::new(); n],
            heir: vec![None; n],
            geometric: true,
        }
    }

    /// A tree of `n` slots where slot `i` holds drone `i - 1`, with links and
    /// heirs computed.
    pub fn populated(n: usize, params: TreeParams) -> Self {
        let mut t = Self::new(n, params);
        for i in 0..n {
            t.occupant[i] = Some(DroneId(i as u32));
        }
        t.assign_parents();
        t
    }

    pub fn params(&self) -> &TreeParams {
        &self.params
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn slot(&self, id: SlotId) -> &Slot {
        &self.slots[id.idx()]
    }

    fn contains(&self, id: SlotId) -> bool {
        id.0 >= 1 && id.idx() < self.slots.len()
    }

    pub fn occupant(&self, id: SlotId) -> Option<DroneId> {
        self.occupant.get(id.idx()).copied().flatten()
    }

    pub fn is_occupied(&self, id: SlotId) -> bool {
        self.occupant(id).is_some()
    }

    pub fn parent(&self, id: SlotId) -> Option<SlotId> {
        self.parent[id.idx()]
    }

    pub fn children(&self, id: SlotId) -> &[SlotId] {
        &self.children[id.idx()]
    }

    /// Stored heir pointer (kept up to date by every mutating operation).
    pub fn heir(&self, id: SlotId) -> Option<SlotId> {
        self.heir[id.idx()]
    }

    pub fn is_geometric(&self) -> bool {
        self.geometric
    }

    pub fn occupied(&self) -> impl Iterator<Item = SlotId> + '_ {
        self.occupant
            .iter()
            .enumerate()
            .filter(|(_, o)| o.is_some())
            .map(|(i, _)| SlotId::from_idx(i))
    }

    pub fn occupied_count(&self) -> usize {
        self.occupant.iter().filter(|o| o.is_some()).count()
    }

    pub fn slot_of(&self, drone: DroneId) -> Option<SlotId> {
        self.occupant
            .iter()
            .position(|o| *o == Some(drone))
            .map(SlotId::from_idx)
    }

    /// Occupied slot with no children.
    pub fn is_leaf(&self, id: SlotId) -> bool {
        self.is_occupied(id) && self.children[id.idx()].is_empty()
    }

    /// Hop count from the root following parent links; `None` when detached.
    pub fn depth(&self, id: SlotId) -> Option<usize> {
        if !self.is_occupied(id) {
            return None;
        }
        let mut hops = 0;
        let mut cur = id;
        while cur != SlotId::ROOT {
            cur = self.parent[cur.idx()]?;
            hops += 1;
            if hops > self.slots.len() {
                return None;
            }
        }
        self.is_occupied(SlotId::ROOT).then_some(hops)
    }

    /// Height of the subtree rooted at `id` (a leaf has height zero).
    pub fn height(&self, id: SlotId) -> usize {
        self.children[id.idx()]
            .iter()
            .map(|&c| 1 + self.height(c))
            .max()
            .unwrap_or(0)
    }

    /// Places `drone` in the lowest-id vacant slot. When every slot is taken
    /// the outermost ring is extended if it still has room.
    pub fn insert(&mut self, drone: DroneId) -> Result<SlotId, TreeError> {
        let id = match self.occupant.iter().position(|o| o.is_none()) {
            Some(i) => SlotId::from_idx(i),
            None => {
                let next = SlotId(self.slots.len() as u32 + 1);
                let geo = slot_geometry(next, &self.params);
                let last_level = self.slots.last().map(|s| s.level).unwrap_or(0);
                if self.slots.is_empty() || geo.level != last_level {
                    return Err(TreeError::Full(self.slots.len()));
                }
                self.slots.push(geo);
                self.occupant.push(None);
                self.parent.push(None);
                self.children.push(Vec::new());
                self.heir.push(None);
                next
            }
        };
        self.occupant[id.idx()] = Some(drone);
        if self.geometric {
            self.assign_parents();
        } else {
            self.attach_nearest(id);
            self.refresh_heirs();
        }
        Ok(id)
    }

    fn nearest_occupied_on_level(
        &self,
        of: SlotId,
        level: u32,
        exclude: Option<SlotId>,
    ) -> Option<SlotId> {
        let pos = self.slot(of).offset;
        let mut best: Option<(f64, SlotId)> = None;
        for s in &self.slots {
            if s.level != level || !self.is_occupied(s.id) || Some(s.id) == exclude {
                continue;
            }
            let d = s.offset.dist(pos);
            // Slots are scanned in id order, so a tie keeps the lower id.
            if best.is_none_or(|(bd, _)| d < bd - DIST_EPS) {
                best = Some((d, s.id));
            }
        }
        best.map(|(_, id)| id)
    }

    /// Nearest occupied slot on the closest inner level that has any.
    fn geometric_parent(&self, id: SlotId) -> Option<SlotId> {
        let level = self.slot(id).level;
        (0..level)
            .rev()
            .find_map(|l| self.nearest_occupied_on_level(id, l, None))
    }

    fn child_sort_key(&self, parent: SlotId, child: SlotId) -> f64 {
        let c = self.slot(child).offset.angle();
        if parent == SlotId::ROOT {
            wrap_tau(c)
        } else {
            wrap_pi(c - self.slot(parent).offset.angle())
        }
    }

    fn sort_children(&mut self, p: SlotId) {
        let mut ch = std::mem::take(&mut self.children[p.idx()]);
        ch.sort_by(|&a, &b| {
            self.child_sort_key(p, a)
                .total_cmp(&self.child_sort_key(p, b))
                .then(a.cmp(&b))
        });
        self.children[p.idx()] = ch;
    }

    fn attach_nearest(&mut self, id: SlotId) {
        if let Some(p) = self.geometric_parent(id) {
            self.parent[id.idx()] = Some(p);
            self.children[p.idx()].push(id);
            self.sort_children(p);
        }
    }

    /// Recomputes every parent link from the occupied slot geometry, orders
    /// child lists by angular position and refreshes all heirs.
    pub fn assign_parents(&mut self) {
        for p in self.parent.iter_mut() {
            *p = None;
        }
        for c in self.children.iter_mut() {
            c.clear();
        }
        let occupied: Vec<SlotId> = self.occupied().collect();
        for &id in &occupied {
            if id == SlotId::ROOT {
                continue;
            }
            if let Some(p) = self.geometric_parent(id) {
                self.parent[id.idx()] = Some(p);
                self.children[p.idx()].push(id);
            }
        }
        for &id in &occupied {
            self.sort_children(id);
        }
        self.geometric = true;
        self.refresh_heirs();
    }

    fn inorder_into(&self, id: SlotId, out: &mut Vec<SlotId>) {
        let ch = &self.children[id.idx()];
        let half = ch.len() / 2;
        for &c in &ch[..half] {
            self.inorder_into(c, out);
        }
        out.push(id);
        for &c in &ch[half..] {
            self.inorder_into(c, out);
        }
    }

    /// Generalised m-ary inorder traversal from the root: the first
    /// `floor(m/2)` child subtrees, the node itself, then the rest.
    pub fn inorder(&self) -> Vec<SlotId> {
        let mut out = Vec::with_capacity(self.slots.len());
        if self.is_occupied(SlotId::ROOT) {
            self.inorder_into(SlotId::ROOT, &mut out);
        }
        out
    }

    /// Inorder traversal restricted to the subtree rooted at `id`.
    pub fn inorder_from(&self, id: SlotId) -> Vec<SlotId> {
        let mut out = Vec::new();
        if self.is_occupied(id) {
            self.inorder_into(id, &mut out);
        }
        out
    }

    /// The leaf that replaces `id` if it fails: the first leaf after `id` in
    /// the inorder traversal of its own subtree, falling back to the last
    /// leaf before it. Leaves have no heir.
    pub fn heir_of(&self, id: SlotId) -> Option<SlotId> {
        if !self.is_occupied(id) {
            return None;
        }
        let ch = &self.children[id.idx()];
        if ch.is_empty() {
            return None;
        }
        let half = ch.len() / 2;
        let mut seq = Vec::new();
        for &c in &ch[half..] {
            self.inorder_into(c, &mut seq);
            if let Some(&leaf) = seq.iter().find(|&&s| self.is_leaf(s)) {
                return Some(leaf);
            }
        }
        seq.clear();
        for &c in &ch[..half] {
            self.inorder_into(c, &mut seq);
        }
        seq.iter().rev().copied().find(|&s| self.is_leaf(s))
    }

    /// Recomputes every stored heir pointer.
    pub fn refresh_heirs(&mut self) {
        for i in 0..self.slots.len() {
            self.heir[i] = self.heir_of(SlotId::from_idx(i));
        }
    }

    /// Recomputes heirs of `from` and all of its ancestors.
    pub fn refresh_heirs_upward(&mut self, from: SlotId) {
        let mut cur = Some(from);
        let mut guard = 0;
        while let Some(id) = cur {
            self.heir[id.idx()] = self.heir_of(id);
            cur = self.parent[id.idx()];
            guard += 1;
            if guard > self.slots.len() {
                break;
            }
        }
    }

    fn detach_leaf(&mut self, id: SlotId) -> Option<SlotId> {
        debug_assert!(self.children[id.idx()].is_empty());
        let parent = self.parent[id.idx()].take();
        if let Some(p) = parent {
            self.children[p.idx()].retain(|&c| c != id);
        }
        self.occupant[id.idx()] = None;
        self.heir[id.idx()] = None;
        parent
    }

    fn leaf_path(&self, from: SlotId, to: SlotId) -> Vec<Vec3> {
        let a = self.slot(from).offset;
        let b = self.slot(to).offset;
        let dive = -self.params.r_min;
        vec![a.with_z(dive), b.with_z(dive), b.with_z(0.0)]
    }

    /// Applies one recovery step: drops a failed leaf, or moves the heir's
    /// drone into the failed slot and vacates the heir's old leaf slot.
    pub fn apply_recovery_step(&mut self, step: &RecoveryStep) -> Result<(), TreeError> {
        let f = step.failed;
        if !self.contains(f) {
            return Err(TreeError::UnknownSlot(f));
        }
        if !self.is_occupied(f) {
            return Err(TreeError::NotOccupied(f));
        }
        match step.heir {
            None => {
                if !self.children[f.idx()].is_empty() {
                    return Err(TreeError::Invariant(format!(
                        "slot {f} has children and cannot be dropped"
                    )));
                }
                if let Some(p) = self.detach_leaf(f) {
                    self.refresh_heirs_upward(p);
                }
            }
            Some(h) => {
                if !self.is_leaf(h) {
                    return Err(TreeError::Invariant(format!("heir {h} is not a leaf")));
                }
                let drone = self.occupant[h.idx()];
                let p = self.detach_leaf(h);
                self.occupant[f.idx()] = drone;
                if let Some(p) = p {
                    self.refresh_heirs_upward(p);
                }
                self.refresh_heirs_upward(f);
            }
        }
        Ok(())
    }

    /// Outer-level-first recovery plan for a batch of failed slots.
    ///
    /// Failures are handled from the outermost level inwards (ties by lower
    /// slot id). Every heir is evaluated on the tree as it stands after the
    /// earlier entries, so a node whose heir also failed picks up a fresh,
    /// live heir. Rebalance moves computed on the repaired tree follow.
    pub fn plan_recovery(&self, failed: &BTreeSet<SlotId>) -> Result<RecoveryPlan, TreeError> {
        for &f in failed {
            if !self.contains(f) {
                return Err(TreeError::UnknownSlot(f));
            }
            if !self.is_occupied(f) {
                return Err(TreeError::NotOccupied(f));
            }
        }
        if failed.len() >= self.occupied_count() {
            return Err(TreeError::AllFailed);
        }
        let mut order: Vec<SlotId> = failed.iter().copied().collect();
        order.sort_by_key(|&s| (Reverse(self.slot(s).level), s));

        let mut work = self.clone();
        let mut steps = Vec::with_capacity(order.len());
        for f in order {
            let heir = work.heir_of(f);
            let path = heir.map(|h| work.leaf_path(h, f)).unwrap_or_default();
            let step = RecoveryStep {
                failed: f,
                heir,
                path,
            };
            work.apply_recovery_step(&step)?;
            steps.push(step);
        }
        let rebalance = work.rebalance();
        Ok(RecoveryPlan { steps, rebalance })
    }

    /// Root-child branches with their heights. Vacant first-ring slots count
    /// as empty branches of height -1.
    pub fn branch_heights(&self) -> Vec<(SlotId, i64)> {
        let mut out: Vec<(SlotId, i64)> = Vec::new();
        if !self.is_occupied(SlotId::ROOT) {
            return out;
        }
        for &c in &self.children[SlotId::ROOT.idx()] {
            out.push((c, self.height(c) as i64));
        }
        for s in &self.slots {
            if s.level == 1 && !self.is_occupied(s.id) {
                out.push((s.id, -1));
            }
        }
        out.sort_by_key(|&(id, _)| id);
        out
    }

    /// `height_max - height_min` over the root's branches.
    pub fn height_spread(&self) -> i64 {
        let hs = self.branch_heights();
        let max = hs.iter().map(|&(_, h)| h).max().unwrap_or(0);
        let min = hs.iter().map(|&(_, h)| h).min().unwrap_or(0);
        max - min
    }

    fn branch_of(&self, id: SlotId) -> Option<SlotId> {
        let mut cur = id;
        let mut guard = 0;
        loop {
            let p = self.parent[cur.idx()]?;
            if p == SlotId::ROOT {
                return Some(cur);
            }
            cur = p;
            guard += 1;
            if guard > self.slots.len() {
                return None;
            }
        }
    }

    fn apply_move(&mut self, from: SlotId, to: SlotId) {
        let drone = self.occupant[from.idx()];
        self.detach_leaf(from);
        self.occupant[to.idx()] = drone;
        self.assign_parents();
    }

    /// Greedy rebalance: while the branch heights differ by more than one,
    /// move the highest-id deepest leaf of the deepest branch to the
    /// lowest-id vacant slot that hangs off the shallowest branch. Every
    /// move lowers the moved drone's level, so the loop terminates.
    pub fn rebalance(&self) -> Vec<RebalanceMove> {
        let mut work = self.clone();
        let mut moves = Vec::new();
        if !work.geometric || !work.is_occupied(SlotId::ROOT) {
            return moves;
        }
        loop {
            let heights = work.branch_heights();
            let Some(&(deep, h_max)) = heights
                .iter()
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
            else {
                break;
            };
            let h_min = heights.iter().map(|&(_, h)| h).min().unwrap_or(h_max);
            if h_max - h_min <= 1 {
                break;
            }
            let subtree = work.inorder_from(deep);
            let deepest_level = subtree
                .iter()
                .map(|&s| work.slot(s).level)
                .max()
                .expect("non-empty branch");
            let source = subtree
                .iter()
                .copied()
                .filter(|&s| work.is_leaf(s) && work.slot(s).level == deepest_level)
                .max()
                .expect("deepest node is a leaf");
            let src_level = work.slot(source).level;

            // Candidate vacant slots strictly inside the source's ring.
            let mut best: Option<(i64, SlotId, SlotId)> = None;
            for s in &work.slots {
                if work.is_occupied(s.id) || s.level == 0 || s.level >= src_level {
                    continue;
                }
                let (branch, bh) = if s.level == 1 {
                    (s.id, -1)
                } else {
                    let Some(p) = work.nearest_occupied_on_level(s.id, s.level - 1, Some(source))
                    else {
                        continue;
                    };
                    let Some(b) = work.branch_of(p) else { continue };
                    let bh = heights
                        .iter()
                        .find(|&&(id, _)| id == b)
                        .map(|&(_, h)| h)
                        .unwrap_or(0);
                    (b, bh)
                };
                if bh > h_max - 2 {
                    continue;
                }
                let key = (bh, branch, s.id);
                if best.is_none_or(|b| key < b) {
                    best = Some(key);
                }
            }
            let Some((_, _, target)) = best else { break };
            let path = work.leaf_path(source, target);
            work.apply_move(source, target);
            moves.push(RebalanceMove {
                from: source,
                to: target,
                path,
            });
        }
        moves
    }

    /// Applies a previously planned rebalance move.
    pub fn apply_rebalance_move(&mut self, mv: &RebalanceMove) -> Result<(), TreeError> {
        if !self.is_leaf(mv.from) {
            return Err(TreeError::Invariant(format!(
                "rebalance source {} is not a leaf",
                mv.from
            )));
        }
        if self.is_occupied(mv.to) {
            return Err(TreeError::Invariant(format!(
                "rebalance target {} is occupied",
                mv.to
            )));
        }
        self.apply_move(mv.from, mv.to);
        Ok(())
    }

    /// Drops a failed slot without replacement: its children are re-linked
    /// to its parent. Removing the root leaves its children detached.
    pub fn remove_without_repair(&mut self, id: SlotId) -> Result<(), TreeError> {
        if !self.contains(id) {
            return Err(TreeError::UnknownSlot(id));
        }
        if !self.is_occupied(id) {
            return Err(TreeError::NotOccupied(id));
        }
        self.geometric = false;
        let kids = std::mem::take(&mut self.children[id.idx()]);
        let parent = self.parent[id.idx()].take();
        if let Some(p) = parent {
            self.children[p.idx()].retain(|&c| c != id);
        }
        for &k in &kids {
            self.parent[k.idx()] = parent;
            if let Some(p) = parent {
                self.children[p.idx()].push(k);
            }
        }
        if let Some(p) = parent {
            self.sort_children(p);
        }
        self.occupant[id.idx()] = None;
        self.refresh_heirs();
        Ok(())
    }

    /// Largest horizontal distance of any parent link.
    pub fn max_link_length(&self) -> f64 {
        self.occupied()
            .filter_map(|s| {
                self.parent(s)
                    .map(|p| self.slot(s).offset.dist(self.slot(p).offset))
            })
            .fold(0.0, f64::max)
    }

    /// Deepest ring `k` such that rings `1..=k` are completely occupied.
    pub fn deepest_full_ring(&self) -> u32 {
        let mut k = 0u32;
        loop {
            let level = k + 1;
            let cap = ring_capacity(level, &self.params);
            let occupied = self
                .slots
                .iter()
                .filter(|s| s.level == level && self.is_occupied(s.id))
                .count();
            if occupied < cap {
                return k;
            }
            k = level;
        }
    }

    /// Checks the structural invariants of a repaired (geometric) tree.
    pub fn check_invariants(&self) -> Result<(), TreeError> {
        let fail = |m: String| Err(TreeError::Invariant(m));
        let occupied: Vec<SlotId> = self.occupied().collect();
        if occupied.is_empty() {
            return Ok(());
        }
        if !self.is_occupied(SlotId::ROOT) {
            return fail("root slot is vacant".into());
        }
        for &s in &occupied {
            if s == SlotId::ROOT {
                if self.parent(s).is_some() {
                    return fail("root has a parent".into());
                }
                continue;
            }
            let Some(p) = self.parent(s) else {
                return fail(format!("slot {s} has no parent"));
            };
            if !self.is_occupied(p) {
                return fail(format!("slot {s} hangs off vacant slot {p}"));
            }
            if !self.children(p).contains(&s) {
                return fail(format!("slot {s} missing from child list of {p}"));
            }
            if self.geometric {
                let level = self.slot(s).level;
                if self.slot(p).level + 1 != level {
                    return fail(format!("parent {p} of {s} is not on the previous ring"));
                }
                if self.nearest_occupied_on_level(s, level - 1, None) != Some(p) {
                    return fail(format!("parent {p} of {s} is not the nearest"));
                }
            }
            if self.depth(s).is_none() {
                return fail(format!("slot {s} is not connected to the root"));
            }
        }
        for &s in &occupied {
            let expected = self.heir_of(s);
            if self.heir(s) != expected {
                return fail(format!("stale heir at slot {s}"));
            }
            match expected {
                None if !self.is_leaf(s) => {
                    return fail(format!("internal slot {s} has no heir"));
                }
                Some(h) => {
                    if !self.is_leaf(h) {
                        return fail(format!("heir {h} of {s} is not a leaf"));
                    }
                    if h == s || !self.inorder_from(s).contains(&h) {
                        return fail(format!("heir {h} is outside the subtree of {s}"));
                    }
                }
                None => {}
            }
        }
        let seq = self.inorder();
        if seq.len() != occupied.len() {
            return fail("inorder traversal does not cover every occupied slot".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> TreeParams {
        TreeParams::new(3.0, 3.0).unwrap()
    }

    /// Greedy chord packing: the largest count of equally spaced points on a
    /// circle of radius `radius` whose neighbouring chords are at least `r`.
    fn packing_oracle(radius: f64, r: f64) -> usize {
        let mut best = 1;
        for n in 2..10_000usize {
            let chord = 2.0 * radius * (PI / n as f64).sin();
            if chord + 1e-9 >= r {
                best = n;
            } else {
                break;
            }
        }
        best
    }

    #[test]
    fn ring_capacity_matches_chord_packing() {
        let p = unit();
        assert_eq!(ring_capacity(0, &p), 1);
        assert_eq!(ring_capacity(1, &p), 6);
        assert_eq!(ring_capacity(2, &p), 12);
        for rho in [1.0, 2.0, 4.0, 8.0] {
            let p = TreeParams::new(1.0, rho).unwrap();
            for k in 1..20 {
                assert_eq!(
                    ring_capacity(k, &p),
                    packing_oracle(k as f64 * rho, 1.0),
                    "k={k} rho={rho}"
                );
            }
        }
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(TreeParams::new(0.0, 1.0).is_err());
        assert!(TreeParams::new(2.0, 1.0).is_err());
        assert!(TreeParams::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn layout_examples() {
        let p = unit();
        let one = slot_layout(1, &p);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].offset, Vec2::ZERO);

        let seven = slot_layout(7, &p);
        for (j, s) in seven[1..].iter().enumerate() {
            assert_eq!(s.level, 1);
            let expect = Vec2::from_angle(j as f64 * PI / 3.0) * 3.0;
            assert!(s.offset.dist(expect) < 1e-12);
        }

        let nineteen = slot_layout(19, &p);
        let sizes: Vec<usize> = (0..3)
            .map(|l| nineteen.iter().filter(|s| s.level == l).count())
            .collect();
        assert_eq!(sizes, vec![1, 6, 12]);
        assert_eq!(level_count(19, &p), 3);
    }

    #[test]
    fn slot_geometry_agrees_with_layout() {
        let p = TreeParams::new(1.0, 2.0).unwrap();
        for s in slot_layout(80, &p) {
            assert_eq!(slot_geometry(s.id, &p), s);
        }
    }

    #[test]
    fn level_count_examples() {
        let p = unit();
        assert_eq!(level_count(1, &p), 1);
        assert_eq!(level_count(7, &p), 2);
        assert_eq!(level_count(8, &p), 3);
        assert_eq!(level_count(19, &p), 3);
        assert_eq!(level_count(20, &p), 4);
    }

    #[test]
    fn parents_examples() {
        let p = unit();
        let t = SwarmTree::populated(7, p);
        for i in 2..=7 {
            assert_eq!(t.parent(SlotId(i)), Some(SlotId::ROOT));
        }
        let t = SwarmTree::populated(2, p);
        assert_eq!(t.parent(SlotId(2)), Some(SlotId::ROOT));

        let t = SwarmTree::populated(19, p);
        // Every odd level-2 slot sits exactly between two level-1 slots; the
        // lower id wins the tie, so slot 2 also takes the one at 330 degrees.
        let counts: Vec<usize> = (2..=7).map(|i| t.children(SlotId(i)).len()).collect();
        assert_eq!(counts, vec![3, 2, 2, 2, 2, 1]);
        for i in 8..=19 {
            assert_eq!(t.slot(t.parent(SlotId(i)).unwrap()).level, 1);
        }
        t.check_invariants().unwrap();
    }

    #[test]
    fn inorder_examples() {
        let p = unit();
        let t = SwarmTree::populated(7, p);
        let ids: Vec<u32> = t.inorder().iter().map(|s| s.0).collect();
        assert_eq!(ids, vec![2, 3, 4, 1, 5, 6, 7]);
        assert_eq!(SwarmTree::populated(1, p).inorder(), vec![SlotId(1)]);
        let two: Vec<u32> = SwarmTree::populated(2, p).inorder().iter().map(|s| s.0).collect();
        assert_eq!(two, vec![1, 2]);
    }

    #[test]
    fn heir_examples() {
        let p = unit();
        let t = SwarmTree::populated(7, p);
        assert_eq!(t.heir_of(SlotId(1)), Some(SlotId(5)));
        for i in 2..=7 {
            assert_eq!(t.heir_of(SlotId(i)), None);
        }
        let chain = SwarmTree::populated(2, p);
        assert_eq!(chain.heir_of(SlotId(1)), Some(SlotId(2)));
    }

    #[test]
    fn insert_examples() {
        let p = unit();
        let mut t = SwarmTree::new(19, p);
        assert_eq!(t.insert(DroneId(0)).unwrap(), SlotId(1));
        for d in 1..6 {
            t.insert(DroneId(d)).unwrap();
        }
        assert_eq!(t.insert(DroneId(6)).unwrap(), SlotId(7));
        let s = t.insert(DroneId(7)).unwrap();
        assert_eq!(s, SlotId(8));
        assert_eq!(t.slot(s).level, 2);
        t.check_invariants().unwrap();
    }

    #[test]
    fn insert_extends_last_ring_then_errors() {
        let p = unit();
        let mut t = SwarmTree::populated(5, p);
        assert_eq!(t.insert(DroneId(5)).unwrap(), SlotId(6));
        assert_eq!(t.insert(DroneId(6)).unwrap(), SlotId(7));
        assert_eq!(t.insert(DroneId(7)), Err(TreeError::Full(7)));
    }

    #[test]
    fn leaf_failure_is_removal_only() {
        let t = SwarmTree::populated(7, unit());
        let plan = t.plan_recovery(&BTreeSet::from([SlotId(3)])).unwrap();
        assert_eq!(plan.steps.len(), 1);
        assert_eq!(plan.steps[0].heir, None);
        assert!(plan.steps[0].path.is_empty());
        assert!(plan.rebalance.is_empty());
    }

    #[test]
    fn root_failure_promotes_heir() {
        let t = SwarmTree::populated(7, unit());
        let plan = t.plan_recovery(&BTreeSet::from([SlotId(1)])).unwrap();
        assert_eq!(plan.steps[0].heir, Some(SlotId(5)));
        let path = &plan.steps[0].path;
        assert_eq!(path.len(), 3);
        assert!((path[0].z + 3.0).abs() < 1e-12 && (path[1].z + 3.0).abs() < 1e-12);
        assert_eq!(path[2].z, 0.0);

        let mut healed = t.clone();
        healed.apply_recovery_step(&plan.steps[0]).unwrap();
        assert_eq!(healed.occupant(SlotId(1)), Some(DroneId(4)));
        assert!(!healed.is_occupied(SlotId(5)));
        assert_eq!(healed.heir(SlotId(1)), healed.heir_of(SlotId(1)));
        healed.check_invariants().unwrap();
    }

    #[test]
    fn node_and_heir_failing_together() {
        let t = SwarmTree::populated(19, unit());
        let root_heir = t.heir_of(SlotId::ROOT).unwrap();
        let plan = t
            .plan_recovery(&BTreeSet::from([SlotId::ROOT, root_heir]))
            .unwrap();
        assert_eq!(plan.steps[0].failed, root_heir);
        assert_eq!(plan.steps[0].heir, None);
        let second = &plan.steps[1];
        assert_eq!(second.failed, SlotId::ROOT);
        let new_heir = second.heir.unwrap();
        assert_ne!(new_heir, root_heir);

        let mut healed = t.clone();
        for s in &plan.steps {
            healed.apply_recovery_step(s).unwrap();
        }
        for m in &plan.rebalance {
            healed.apply_rebalance_move(m).unwrap();
        }
        healed.check_invariants().unwrap();
        assert!(healed.height_spread() <= 1);
        assert_eq!(healed.occupied_count(), 17);
    }

    #[test]
    fn all_failed_is_an_error() {
        let t = SwarmTree::populated(3, unit());
        let all: BTreeSet<SlotId> = t.occupied().collect();
        assert_eq!(t.plan_recovery(&all), Err(TreeError::AllFailed));
    }

    #[test]
    fn rebalance_examples() {
        let p = unit();
        assert!(SwarmTree::populated(19, p).rebalance().is_empty());
        assert!(SwarmTree::populated(1, p).rebalance().is_empty());

        // Strip both children of slot 2, then slot 2 itself, leaving an empty
        // branch next to height-1 branches; then strip all level-2 leaves
        // except one branch to get heights {1, 0, ...}.
        let mut t = SwarmTree::populated(19, p);
        let plan_all = |t: &mut SwarmTree, fail: Vec<SlotId>| {
            for s in fail {
                let step = RecoveryStep {
                    failed: s,
                    heir: None,
                    path: vec![],
                };
                t.apply_recovery_step(&step).unwrap();
            }
        };
        let kids: Vec<SlotId> = t.children(SlotId(2)).to_vec();
        plan_all(&mut t, kids);
        plan_all(&mut t, vec![SlotId(2)]);
        assert_eq!(t.height_spread(), 2);
        let moves = t.rebalance();
        assert!(!moves.is_empty());
        let mut fixed = t.clone();
        for m in &moves {
            fixed.apply_rebalance_move(m).unwrap();
            assert!(fixed.slot(m.to).level < t.slot(m.from).level);
        }
        assert!(fixed.height_spread() <= 1);
        fixed.check_invariants().unwrap();
    }

    #[test]
    fn no_repair_removal_rewires_to_grandparent() {
        let mut t = SwarmTree::populated(19, unit());
        let kids: Vec<SlotId> = t.children(SlotId(2)).to_vec();
        t.remove_without_repair(SlotId(2)).unwrap();
        for k in kids {
            assert_eq!(t.parent(k), Some(SlotId::ROOT));
            assert_eq!(t.depth(k), Some(1));
        }
        assert!(!t.is_geometric());
        t.remove_without_repair(SlotId::ROOT).unwrap();
        assert_eq!(t.depth(SlotId(3)), None);
    }

    #[test]
    fn deepest_full_ring_examples() {
        let p = unit();
        assert_eq!(SwarmTree::populated(5, p).deepest_full_ring(), 0);
        assert_eq!(SwarmTree::populated(7, p).deepest_full_ring(), 1);
        assert_eq!(SwarmTree::populated(19, p).deepest_full_ring(), 2);
        assert_eq!(SwarmTree::populated(20, p).deepest_full_ring(), 2);
    }

    #[test]
    fn link_length_report() {
        let t = SwarmTree::populated(19, unit());
        // Level-2 slots between two level-1 slots sit 2*3*cos(15deg)... away.
        let expect = (Vec2::from_angle(PI / 6.0) * 6.0).dist(Vec2::new(3.0, 0.0));
        assert!((t.max_link_length() - expect).abs() < 1e-9);
        assert!(t.max_link_length() < 1.25 * 3.0);
    }
}
