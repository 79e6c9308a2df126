//! Construction, destroy and repair operators and their adaptive weights.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AlnsError;
use crate::model::Instance;
use crate::routing::Plan;

/// Time units charged per unit of profit in insertion and removal costs.
pub const PROFIT_WEIGHT: f64 = 1.0;

/// Weights never fall below this, so every operator stays selectable.
pub const MIN_WEIGHT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DestroyOp {
    Shaw,
    Random,
    Worst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RepairOp {
    Regret3,
    Regret2,
    Greedy,
}

impl DestroyOp {
    pub const ALL: [DestroyOp; 3] = [DestroyOp::Shaw, DestroyOp::Random, DestroyOp::Worst];
}

impl RepairOp {
    pub const ALL: [RepairOp; 3] = [RepairOp::Regret3, RepairOp::Regret2, RepairOp::Greedy];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorStats {
    pub weight: f64,
    pub score: f64,
    pub uses: u32,
}

impl Default for OperatorStats {
    fn default() -> Self {
        Self { weight: 1.0, score: 0.0, uses: 0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OperatorBank {
    pub destroy: [OperatorStats; 3],
    pub repair: [OperatorStats; 3],
}

impl OperatorBank {
    pub fn select_destroy<R: Rng + ?Sized>(&self, rng: &mut R) -> DestroyOp {
        DestroyOp::ALL[select_operator(&self.destroy.map(|s| s.weight), rng)]
    }

    pub fn select_repair<R: Rng + ?Sized>(&self, rng: &mut R) -> RepairOp {
        RepairOp::ALL[select_operator(&self.repair.map(|s| s.weight), rng)]
    }

    pub fn reward(&mut self, destroy: DestroyOp, repair: RepairOp, score: f64) {
        let d = &mut self.destroy[DestroyOp::ALL.iter().position(|&o| o == destroy).unwrap()];
        d.score += score;
        d.uses += 1;
        let r = &mut self.repair[RepairOp::ALL.iter().position(|&o| o == repair).unwrap()];
        r.score += score;
        r.uses += 1;
    }

    /// Selection probabilities of one family.
    pub fn probabilities(stats: &[OperatorStats; 3]) -> [f64; 3] {
        let total: f64 = stats.iter().map(|s| s.weight).sum();
        stats.map(|s| s.weight / total)
    }
}

/// Roulette-wheel draw proportional to `weights`.
pub fn select_operator<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    debug_assert!(total > 0.0);
    let r = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if r < acc {
            return i;
        }
    }
    last
}

/// End-of-segment update: `w <- (1 - rho) w + rho * score / uses` for
/// operators used at least once, then scores and counts reset.
pub fn update_weights(bank: &mut OperatorBank, reaction_factor: f64) {
    for s in bank.destroy.iter_mut().chain(bank.repair.iter_mut()) {
        if s.uses > 0 {
            s.weight = ((1.0 - reaction_factor) * s.weight + reaction_factor * s.score / s.uses as f64).max(MIN_WEIGHT);
        }
        s.score = 0.0;
        s.uses = 0;
    }
}

/// Best-ratio insertion from scratch: repeatedly insert the task with the
/// smallest detour per unit of profit until nothing fits.
pub fn greedy_construct(inst: &Instance) -> Plan {
    construct_from(inst, Plan::empty(inst))
}

/// Ratio insertion applied to the unrouted pool of an existing plan.
pub fn construct_from(inst: &Instance, mut plan: Plan) -> Plan {
    loop {
        let mut best: Option<(f64, usize, usize, usize)> = None;
        for &k in &plan.unrouted {
            let profit = inst.tasks[k].profit;
            for (r, route) in plan.routes.iter().enumerate() {
                for p in 1..=route.len() + 1 {
                    let ins = route.evaluate_insertion(inst, k, p);
                    if !ins.feasible {
                        continue;
                    }
                    let key = if profit > 0.0 { ins.detour_cost / profit } else { f64::INFINITY };
                    if best.is_none_or(|(b, ..)| key.total_cmp(&b).is_lt()) {
                        best = Some((key, k, r, p));
                    }
                }
            }
        }
        match best {
            Some((_, k, r, p)) => plan.insert(inst, r, k, p),
            None => return plan,
        }
    }
}

/// Removal criterion of worst destroy: travel saved minus weighted profit.
fn removal_score(inst: &Instance, plan: &Plan, r: usize, g: usize) -> f64 {
    let route = &plan.routes[r];
    route.removal_saving(inst, g) - PROFIT_WEIGHT * inst.tasks[route.tasks[g - 1]].profit
}

/// Relatedness of two tasks: normalized travel plus normalized difference
/// of their service starts.
pub fn relatedness(inst: &Instance, i: usize, j: usize, start_i: f64, start_j: f64) -> f64 {
    let max_t = inst.travel().max_time();
    let travel = if max_t > 0.0 { inst.travel().time(i, j) / max_t } else { 0.0 };
    travel + (start_i - start_j).abs() / inst.horizon
}

/// Removes `count` routed tasks with the chosen operator; returns them in
/// removal order.
pub fn destroy<R: Rng + ?Sized>(
    inst: &Instance,
    plan: &mut Plan,
    op: DestroyOp,
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>, AlnsError> {
    let routed = plan.routed_count();
    if count > routed {
        return Err(AlnsError::DestroyCount { requested: count, routed });
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let removed = match op {
        DestroyOp::Random => {
            let pool: Vec<usize> = plan.routed_tasks().collect();
            let picked: Vec<usize> = pool.choose_multiple(rng, count).copied().collect();
            for &k in &picked {
                plan.remove(inst, k);
            }
            picked
        }
        DestroyOp::Worst => {
            let mut removed = Vec::with_capacity(count);
            for _ in 0..count {
                let mut best: Option<(f64, usize, usize)> = None;
                for (r, route) in plan.routes.iter().enumerate() {
                    for g in 1..=route.len() {
                        let s = removal_score(inst, plan, r, g);
                        if best.is_none_or(|(b, ..)| s > b) {
                            best = Some((s, r, g));
                        }
                    }
                }
                let (_, r, g) = best.expect("count bounded by routed tasks");
                let k = plan.routes[r].tasks[g - 1];
                plan.remove(inst, k);
                removed.push(k);
            }
            removed
        }
        DestroyOp::Shaw => {
            let starts: HashMap<usize, f64> = plan
                .routes
                .iter()
                .flat_map(|r| r.tasks.iter().enumerate().map(move |(g, &k)| (k, r.start_times[g + 1])))
                .collect();
            let pool: Vec<usize> = plan.routed_tasks().collect();
            let seed = *pool.choose(rng).expect("nonempty");
            plan.remove(inst, seed);
            let mut removed = vec![seed];
            while removed.len() < count {
                let anchor = *removed.choose(rng).expect("nonempty");
                let a_start = starts[&anchor];
                let next = plan
                    .routed_tasks()
                    .map(|j| (relatedness(inst, anchor, j, a_start, starts[&j]), j))
                    .min_by(|a, b| a.0.total_cmp(&b.0))
                    .map(|(_, j)| j)
                    .expect("count bounded by routed tasks");
                plan.remove(inst, next);
                removed.push(next);
            }
            removed
        }
    };
    Ok(removed)
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    cost: f64,
    route: usize,
    position: usize,
}

/// Cheapest feasible position of `task` in every route, ascending by cost.
/// `noise` is added to every evaluated cost.
fn route_options(inst: &Instance, plan: &Plan, task: usize, noise: &mut dyn FnMut() -> f64) -> Vec<Slot> {
    let profit = inst.tasks[task].profit;
    let mut out = Vec::new();
    for (r, route) in plan.routes.iter().enumerate() {
        let mut best: Option<Slot> = None;
        for p in 1..=route.len() + 1 {
            let ins = route.evaluate_insertion(inst, task, p);
            if !ins.feasible {
                continue;
            }
            let cost = ins.detour_cost - PROFIT_WEIGHT * profit + noise();
            if best.is_none_or(|b| cost < b.cost) {
                best = Some(Slot { cost, route: r, position: p });
            }
        }
        out.extend(best);
    }
    out.sort_by(|a, b| a.cost.total_cmp(&b.cost).then(a.route.cmp(&b.route)));
    out
}

/// Regret value of a task: sum over ranks 2..k of the cost gap to the
/// best option, missing ranks charged `penalty`.
pub fn regret_value(options: &[f64], k: usize, penalty: f64) -> f64 {
    let best = options[0];
    (1..k).map(|r| options.get(r).copied().unwrap_or(penalty) - best).sum()
}

/// The insertion a repair operator performs next: (task, route, position).
pub fn next_insertion(inst: &Instance, plan: &Plan, op: RepairOp, penalty: f64) -> Option<(usize, usize, usize)> {
    next_noisy_insertion(inst, plan, op, penalty, &mut || 0.0)
}

fn next_noisy_insertion(
    inst: &Instance,
    plan: &Plan,
    op: RepairOp,
    penalty: f64,
    noise: &mut dyn FnMut() -> f64,
) -> Option<(usize, usize, usize)> {
    let mut choice: Option<(f64, f64, Slot, usize)> = None;
    for &k in &plan.unrouted {
        let options = route_options(inst, plan, k, noise);
        let Some(&first) = options.first() else { continue };
        // Larger key wins; the best cost breaks ties.
        let key = match op {
            RepairOp::Greedy => -first.cost,
            RepairOp::Regret2 | RepairOp::Regret3 => {
                let depth = if op == RepairOp::Regret3 { 3 } else { 2 };
                let costs: Vec<f64> = options.iter().map(|s| s.cost).collect();
                regret_value(&costs, depth, penalty)
            }
        };
        let better = match choice {
            None => true,
            Some((bk, bc, ..)) => key > bk || (key == bk && first.cost < bc),
        };
        if better {
            choice = Some((key, first.cost, first, k));
        }
    }
    choice.map(|(_, _, slot, k)| (k, slot.route, slot.position))
}

/// Reinserts unrouted tasks until none has a feasible insertion.
pub fn repair(inst: &Instance, plan: &mut Plan, op: RepairOp, penalty: f64) {
    while let Some((k, r, p)) = next_insertion(inst, plan, op, penalty) {
        plan.insert(inst, r, k, p);
    }
}

/// As [`repair`], with every insertion cost perturbed by a uniform draw
/// from `[-amplitude, amplitude]`.
pub fn noisy_repair<R: Rng + ?Sized>(
    inst: &Instance,
    plan: &mut Plan,
    op: RepairOp,
    penalty: f64,
    amplitude: f64,
    rng: &mut R,
) {
    if amplitude <= 0.0 {
        return repair(inst, plan, op, penalty);
    }
    let mut noise = || rng.gen_range(-amplitude..=amplitude);
    while let Some((k, r, p)) = next_noisy_insertion(inst, plan, op, penalty, &mut noise) {
        plan.insert(inst, r, k, p);
    }
}
