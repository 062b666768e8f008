//! Rollout wrapper: evaluates each candidate slot by simulating sampled
//! futures under a base policy and a fast router, then picks the action
//! with the lowest mean remaining-horizon cost.
//!
//! Futures are sampled once per rollout index and reused across all
//! candidate actions (common random numbers), and the base policy's
//! continuation stream is re-seeded identically per rollout index, so the
//! action comparison differs only in the action itself.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::domain::{assignment_penalty, Customer, CustomerId, SlotCalendar, SlotId, SystemParams};
use crate::engine::{apply_tsa, continue_horizon, Policy, PolicyError, Router, State};
use crate::instance::{sample_count, sample_preferences, GenParams};
use crate::scalar::Scalar;

/// Id namespace for simulated customers, far above any real instance id.
const SIMULATED_ID_BASE: u64 = 1 << 62;

/// Which candidate slots the rollout evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ActionSet {
    /// Every currently assignable slot.
    #[default]
    All,
    /// The base policy's positively scored candidates; falls back to the
    /// full slot set when the base policy does not rank actions.
    BasePruned,
}

/// Rollout parameters: how many sampled futures, which actions to score,
/// the arrival distribution, and the router used inside simulations.
pub struct RolloutConfig<S: Scalar> {
    pub rollouts: usize,
    pub action_set: ActionSet,
    /// Distribution of future arrivals; matches instance generation.
    pub future: GenParams<S>,
    /// Budget-capped router for the many simulated routing days.
    pub fast_router: Box<dyn Router<S>>,
}

/// Arrivals drawn for one simulated future.
#[derive(Debug, Clone, PartialEq)]
pub struct FutureSample<S> {
    /// Arrivals still to come today, in draw order.
    pub rest_of_day: Vec<Customer<S>>,
    /// Full arrival days after today, up to the sampling horizon.
    pub later_days: Vec<Vec<Customer<S>>>,
}

impl<S: Scalar> FutureSample<S> {
    pub fn total(&self) -> usize {
        self.rest_of_day.len() + self.later_days.iter().map(Vec::len).sum::<usize>()
    }
}

fn sample_customer<S: Scalar>(
    id: u64,
    day: u32,
    dist: &GenParams<S>,
    calendar: &SlotCalendar<S>,
    rng: &mut (impl Rng + ?Sized),
) -> Customer<S> {
    use rand::RngExt;
    let coords = match &dist.location_pool {
        Some(pool) => pool[rng.random_range(0..pool.len())],
        None => crate::domain::Point::new(
            rng.random_range(S::zero()..dist.area),
            rng.random_range(S::zero()..dist.area),
        ),
    };
    let arrival_time = rng.random_range(S::zero()..calendar.day_length());
    Customer {
        id: CustomerId(SIMULATED_ID_BASE + id),
        coords,
        arrival_day: day,
        arrival_time,
        preferences: sample_preferences(day, dist.prefs_per_customer, calendar, rng),
    }
}

/// Samples arrivals from the current epoch to `until_day` inclusive. For
/// the current day only the residual count is drawn: the daily total draw
/// minus the `arrivals_seen` so far, clamped at zero. Later days get full
/// draws. Same distributions as instance generation.
pub fn sample_future_customers<S: Scalar>(
    day: u32,
    arrivals_seen: usize,
    until_day: u32,
    dist: &GenParams<S>,
    calendar: &SlotCalendar<S>,
    rng: &mut (impl Rng + ?Sized),
) -> FutureSample<S> {
    let mut next_id = 0u64;
    let mut rest_of_day = Vec::new();
    let mut later_days = Vec::new();
    if until_day < day {
        return FutureSample {
            rest_of_day,
            later_days,
        };
    }

    let today_total = sample_count(dist.n_daily_mean, dist.count_sd, rng);
    let residual = today_total.saturating_sub(arrivals_seen);
    for _ in 0..residual {
        rest_of_day.push(sample_customer(next_id, day, dist, calendar, rng));
        next_id += 1;
    }

    for d in day + 1..=until_day {
        let count = sample_count(dist.n_daily_mean, dist.count_sd, rng);
        let mut arrivals = Vec::with_capacity(count);
        for _ in 0..count {
            arrivals.push(sample_customer(next_id, d, dist, calendar, rng));
            next_id += 1;
        }
        later_days.push(arrivals);
    }
    FutureSample {
        rest_of_day,
        later_days,
    }
}

/// Assignment penalty of `action` plus the simulated cost of finishing the
/// horizon under the base policy and fast router, with the given future.
fn score_action<S: Scalar>(
    state: &State<S>,
    action: SlotId,
    future: &FutureSample<S>,
    base: &dyn Policy<S>,
    cfg: &RolloutConfig<S>,
    system: &SystemParams<S>,
    continuation_seed: u64,
) -> Result<S, PolicyError> {
    let customer = state
        .new_customer
        .as_ref()
        .ok_or_else(|| PolicyError::Other("rollout needs a new customer".into()))?;
    let penalty = assignment_penalty(&customer.preferences, action, system.alpha);
    let post = apply_tsa(state.clone(), action, &system.calendar)
        .map_err(|e| PolicyError::Other(e.to_string()))?;
    let mut rng = ChaCha12Rng::seed_from_u64(continuation_seed);
    let continuation = continue_horizon(
        post,
        &future.rest_of_day,
        &future.later_days,
        cfg.future.depot,
        system,
        cfg.future.horizon_days,
        base,
        cfg.fast_router.as_ref(),
        &mut rng,
    )
    .map_err(|e| PolicyError::Other(e.to_string()))?;
    Ok(penalty + continuation)
}

/// The rollout decision rule. Draws two sub-seeds per rollout index from
/// `rng` — futures first, then the continuation stream — so an external
/// replay can reproduce every score. Returns the action with the smallest
/// mean cost; exact ties go to the smallest (day, half).
pub fn rollout_decide<S: Scalar>(
    state: &State<S>,
    base: &dyn Policy<S>,
    cfg: &RolloutConfig<S>,
    system: &SystemParams<S>,
    rng: &mut dyn Rng,
) -> Result<SlotId, PolicyError> {
    let allowed = system.calendar.assignable_slots(state.day);
    let mut actions: Vec<SlotId> = match cfg.action_set {
        ActionSet::All => allowed,
        ActionSet::BasePruned => match base.candidate_actions(state, &allowed) {
            Some(scored) => scored
                .into_iter()
                .filter(|(_, score)| *score > S::zero())
                .map(|(slot, _)| slot)
                .collect(),
            None => allowed,
        },
    };
    actions.sort();
    actions.dedup();
    if actions.is_empty() {
        return Err(PolicyError::EmptyActionSet);
    }

    let mut sums: Vec<S> = vec![S::zero(); actions.len()];
    let rollouts = cfg.rollouts.max(1);
    for _ in 0..rollouts {
        let future_seed = rng.next_u64();
        let continuation_seed = rng.next_u64();
        let mut future_rng = ChaCha12Rng::seed_from_u64(future_seed);
        let future = sample_future_customers(
            state.day,
            state.epoch as usize,
            cfg.future.horizon_days.saturating_sub(1),
            &cfg.future,
            &system.calendar,
            &mut future_rng,
        );
        for (slot_idx, action) in actions.iter().enumerate() {
            sums[slot_idx] += score_action(
                state,
                *action,
                &future,
                base,
                cfg,
                system,
                continuation_seed,
            )?;
        }
    }

    let mut best = 0usize;
    for i in 1..actions.len() {
        if sums[i] < sums[best] {
            best = i;
        }
    }
    Ok(actions[best])
}

/// A base policy upgraded with rollout lookahead.
pub struct RolloutPolicy<S: Scalar> {
    name: String,
    base: Box<dyn Policy<S>>,
    cfg: RolloutConfig<S>,
    system: SystemParams<S>,
}

impl<S: Scalar> RolloutPolicy<S> {
    pub fn new(base: Box<dyn Policy<S>>, cfg: RolloutConfig<S>, system: SystemParams<S>) -> Self {
        let name = format!("{}-re", base.name());
        Self {
            name,
            base,
            cfg,
            system,
        }
    }
}

impl<S: Scalar> Policy<S> for RolloutPolicy<S> {
    fn name(&self) -> &str {
        &self.name
    }

    fn decide(
        &self,
        state: &State<S>,
        _allowed: &[SlotId],
        rng: &mut dyn Rng,
    ) -> Result<SlotId, PolicyError> {
        rollout_decide(state, self.base.as_ref(), &self.cfg, &self.system, rng)
    }
}
