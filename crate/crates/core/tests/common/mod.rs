#![allow(dead_code)]

use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use locus_core::numerics::Sample;
use locus_core::tree::{SlotId, SwarmTree, TreeParams};

pub fn params(rho: f64) -> TreeParams {
    TreeParams::new(3.0, 3.0 * rho).unwrap()
}

/// Inorder straight from the recurrence, using only parent links and slot
/// positions.
pub fn oracle_inorder(t: &SwarmTree) -> Vec<SlotId> {
    fn key(t: &SwarmTree, parent: SlotId, child: SlotId) -> f64 {
        let c = t.slot(child).offset;
        let a = c.y.atan2(c.x);
        if parent == SlotId::ROOT {
            if a < 0.0 {
                a + TAU
            } else {
                a
            }
        } else {
            let p = t.slot(parent).offset;
            let mut d = a - p.y.atan2(p.x);
            while d >= PI {
                d -= TAU;
            }
            while d < -PI {
                d += TAU;
            }
            d
        }
    }
    fn walk(t: &SwarmTree, v: SlotId, out: &mut Vec<SlotId>) {
        let mut kids: Vec<SlotId> = t.occupied().filter(|&s| t.parent(s) == Some(v)).collect();
        kids.sort_by(|&a, &b| key(t, v, a).total_cmp(&key(t, v, b)).then(a.cmp(&b)));
        let m = kids.len();
        for &k in &kids[..m / 2] {
            walk(t, k, out);
        }
        out.push(v);
        for &k in &kids[m / 2..] {
            walk(t, k, out);
        }
    }
    let mut out = Vec::new();
    if t.is_occupied(SlotId::ROOT) {
        walk(t, SlotId::ROOT, &mut out);
    }
    out
}

pub fn oracle_heir(t: &SwarmTree, v: SlotId) -> Option<SlotId> {
    let seq = t.inorder_from(v);
    let at = seq.iter().position(|&s| s == v).unwrap();
    let is_leaf = |s: SlotId| t.children(s).is_empty();
    if seq.len() == 1 {
        return None;
    }
    seq[at + 1..]
        .iter()
        .copied()
        .find(|&s| is_leaf(s))
        .or_else(|| seq[..at].iter().rev().copied().find(|&s| is_leaf(s)))
}

pub fn in_subtree(t: &SwarmTree, v: SlotId, mut s: SlotId) -> bool {
    while let Some(p) = t.parent(s) {
        if p == v {
            return true;
        }
        s = p;
    }
    false
}

pub fn check_tree(t: &SwarmTree) {
    t.check_invariants().unwrap();
    let seq = t.inorder();
    assert_eq!(seq, oracle_inorder(t));
    let mut sorted = seq.clone();
    sorted.sort();
    let occupied: Vec<SlotId> = t.occupied().collect();
    assert_eq!(sorted, occupied, "inorder is a permutation of occupied slots");
    for &s in &occupied {
        let h = t.heir(s);
        assert_eq!(h, oracle_heir(t, s));
        if t.children(s).is_empty() {
            assert_eq!(h, None);
        } else {
            let h = h.expect("internal slot has an heir");
            assert!(t.is_leaf(h));
            assert!(in_subtree(t, s, h));
        }
    }
    assert!(t.height_spread() <= 1, "spread {}", t.height_spread());
}

/// Kills random batches until one drone is left, healing after each batch.
pub fn kill_and_heal(n: usize, rho: f64, rng: &mut ChaCha8Rng) -> usize {
    let mut t = SwarmTree::populated(n, params(rho));
    check_tree(&t);
    let mut rounds = 0;
    while t.occupied_count() > 1 {
        let live: Vec<SlotId> = t.occupied().collect();
        let k = rng.gen_range(1..live.len());
        let failed: BTreeSet<SlotId> = live.choose_multiple(rng, k).copied().collect();
        let plan = t.plan_recovery(&failed).unwrap();

        let levels: Vec<u32> = plan.steps.iter().map(|s| t.slot(s.failed).level).collect();
        assert!(levels.windows(2).all(|w| w[0] >= w[1]), "outer levels first");
        assert_eq!(plan.steps.len(), failed.len());

        for step in &plan.steps {
            if let Some(h) = step.heir {
                assert!(t.is_occupied(h));
                assert!(t.is_leaf(h));
            }
            t.apply_recovery_step(step).unwrap();
        }
        for mv in &plan.rebalance {
            t.apply_rebalance_move(mv).unwrap();
        }
        assert_eq!(t.occupied_count(), live.len() - k);
        check_tree(&t);
        rounds += 1;
    }
    rounds
}

/// Least squares by plain gradient descent on the centred problem with an
/// exact line search. Shares nothing with the closed-form solver.
pub fn descent_fit(s: &[Sample]) -> [f64; 3] {
    let n = s.len() as f64;
    let mx = s.iter().map(|p| p.x).sum::<f64>() / n;
    let my = s.iter().map(|p| p.y).sum::<f64>() / n;
    let mv = s.iter().map(|p| p.val).sum::<f64>() / n;
    let pts: Vec<(f64, f64, f64)> = s.iter().map(|p| (p.x - mx, p.y - my, p.val - mv)).collect();
    let (mut a, mut b) = (0.0, 0.0);
    for _ in 0..20_000 {
        let (mut ga, mut gb) = (0.0, 0.0);
        for &(x, y, v) in &pts {
            let e = a * x + b * y - v;
            ga += e * x;
            gb += e * y;
        }
        if ga.hypot(gb) < 1e-15 {
            break;
        }
        let num = ga * ga + gb * gb;
        let den: f64 = pts.iter().map(|&(x, y, _)| (ga * x + gb * y).powi(2)).sum();
        if den <= 0.0 {
            break;
        }
        let t = num / den;
        a -= t * ga;
        b -= t * gb;
    }
    [mv - a * mx - b * my, a, b]
}


/// Fails `v` and its heir together, heals, and checks the result.
pub fn node_and_heir(seed: u64, instances: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..instances {
        let n = rng.gen_range(3..=64);
        let t = SwarmTree::populated(n, params([1.0, 2.0, 4.0][rng.gen_range(0..3)]));
        let internal: Vec<SlotId> = t.occupied().filter(|&s| !t.is_leaf(s)).collect();
        let v = *internal.choose(&mut rng).unwrap();
        let h = t.heir(v).unwrap();
        let plan = t.plan_recovery(&BTreeSet::from([v, h])).unwrap();
        let mut healed = t.clone();
        for s in &plan.steps {
            healed.apply_recovery_step(s).unwrap();
        }
        for m in &plan.rebalance {
            healed.apply_rebalance_move(m).unwrap();
        }
        check_tree(&healed);
        assert_eq!(healed.occupied_count(), n - 2);
    }
}
