//! Adaptive large neighbourhood search for the static problem.

mod config;
pub mod local_search;
pub mod operators;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use config::AlnsConfig;
pub use local_search::local_search;
pub use operators::{
    destroy, greedy_construct, noisy_repair, repair, select_operator, update_weights, DestroyOp, OperatorBank,
    OperatorStats, RepairOp,
};

use crate::model::{big_m, Instance};
use crate::routing::Plan;

#[derive(Debug, thiserror::Error)]
pub enum AlnsError {
    #[error("invalid ALNS configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot remove {requested} tasks from a plan routing {routed}")]
    DestroyCount { requested: usize, routed: usize },
}

const PROFIT_EPS: f64 = 1e-9;

/// Annealing acceptance on profit.
pub fn accept<R: Rng + ?Sized>(candidate: f64, current: f64, temperature: f64, rng: &mut R) -> bool {
    if candidate >= current {
        return true;
    }
    if temperature <= 0.0 {
        return false;
    }
    rng.gen::<f64>() < ((candidate - current) / temperature).exp()
}

/// Temperature at which a plan 5% below `reference` profit is accepted
/// with probability `acceptance`.
pub fn initial_temperature(reference: f64, acceptance: f64) -> f64 {
    0.05 * reference / (1.0 / acceptance).ln()
}

/// Strictly better: more profit, or equal profit and less travel.
fn improves(inst: &Instance, candidate: &Plan, incumbent: &Plan) -> bool {
    let (pc, pi) = (candidate.profit(), incumbent.profit());
    pc > pi + PROFIT_EPS
        || (pc >= pi - PROFIT_EPS && candidate.total_travel(inst) < incumbent.total_travel(inst) - 1e-9)
}

/// Search state, advanced one destroy-repair cycle at a time.
#[derive(Debug, Clone)]
pub struct AlnsSearch<'a> {
    inst: &'a Instance,
    config: AlnsConfig,
    rng: ChaCha8Rng,
    current: Plan,
    best: Plan,
    bank: OperatorBank,
    temperature: f64,
    penalty: f64,
    iteration: usize,
}

impl<'a> AlnsSearch<'a> {
    pub fn new(inst: &'a Instance, config: AlnsConfig) -> Result<Self, AlnsError> {
        config.validate()?;
        let start = greedy_construct(inst);
        let mut reference = start.profit();
        if reference <= 0.0 {
            // Nothing constructed: scale by the average task profit instead.
            let n = inst.task_count().max(1) as f64;
            reference = inst.tasks.iter().map(|t| t.profit).sum::<f64>() / n;
        }
        let temperature =
            if reference > 0.0 { initial_temperature(reference, config.sa_initial_acceptance) } else { 1.0 };
        Ok(Self {
            inst,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            best: start.clone(),
            current: start,
            bank: OperatorBank::default(),
            temperature,
            penalty: 10.0 * big_m(inst),
            iteration: 0,
        })
    }

    pub fn current(&self) -> &Plan {
        &self.current
    }

    pub fn best(&self) -> &Plan {
        &self.best
    }

    pub fn bank(&self) -> &OperatorBank {
        &self.bank
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// One destroy, repair, local search and acceptance cycle.
    pub fn step(&mut self) {
        self.iteration += 1;
        let inst = self.inst;
        let d_op = self.bank.select_destroy(&mut self.rng);
        let r_op = self.bank.select_repair(&mut self.rng);

        let mut candidate = self.current.clone();
        let routed = candidate.routed_count();
        if routed > 0 {
            let [lo, hi] = self.config.destroy_fraction;
            let frac = if hi > lo { self.rng.gen_range(lo..=hi) } else { lo };
            let count = ((frac * routed as f64).ceil() as usize).clamp(1, routed);
            destroy(inst, &mut candidate, d_op, count, &mut self.rng).expect("count bounded by routed tasks");
        }
        // Half of the repairs see perturbed costs.
        if self.rng.gen_bool(0.5) {
            let amplitude = self.config.repair_noise * inst.max_travel();
            noisy_repair(inst, &mut candidate, r_op, self.penalty, amplitude, &mut self.rng);
        } else {
            repair(inst, &mut candidate, r_op, self.penalty);
        }
        local_search(inst, &mut candidate, self.iteration, self.config.local_search_cadence);
        candidate.refresh_profit(inst);
        debug_assert!(candidate.is_feasible(inst));

        let [s_best, s_improve, s_accept] = self.config.operator_scores;
        let score = if improves(inst, &candidate, &self.best) {
            self.best = candidate.clone();
            self.current = candidate;
            s_best
        } else if improves(inst, &candidate, &self.current) {
            self.current = candidate;
            s_improve
        } else if accept(candidate.profit(), self.current.profit(), self.temperature, &mut self.rng) {
            self.current = candidate;
            s_accept
        } else {
            0.0
        };
        self.bank.reward(d_op, r_op, score);
        if self.iteration.is_multiple_of(self.config.segment_length) {
            update_weights(&mut self.bank, self.config.reaction_factor);
        }
        self.temperature *= self.config.sa_cooling;
    }

    /// Runs the configured number of iterations and returns the best plan.
    pub fn run(mut self) -> Plan {
        while self.iteration < self.config.iterations {
            self.step();
        }
        self.best
    }
}

/// Best feasible plan found by ALNS from a greedy start.
pub fn alns_solve(inst: &Instance, config: &AlnsConfig) -> Result<Plan, AlnsError> {
    Ok(AlnsSearch::new(inst, config.clone())?.run())
}
