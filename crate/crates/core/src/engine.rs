//! The day-by-day decision process: assignment epochs while requests
//! arrive, one routing epoch at the end of each day, and tail routing
//! epochs after arrivals stop so every committed customer is served.
//!
//! Epochs within an episode are strictly sequential; distinct episodes are
//! independent given separate RNG streams and may run concurrently.

use std::time::Instant;

use rand::Rng;
use thiserror::Error;

use crate::domain::{
    assignment_penalty, Customer, CustomerId, Point, SlotCalendar, SlotId, SystemParams,
};
use crate::instance::Instance;
use crate::routing::{
    solve_vrpstw, solve_vrpstw_exact, Job, RouteEvaluation, RoutePlan, RoutingError, RoutingTask,
    SolveBudget,
};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("no candidate actions to evaluate")]
    EmptyActionSet,
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error(
        "policy returned slot ({day}, {half}) for customer {customer} at day {at_day} epoch {epoch}, \
         outside the assignable window (days {lo}..={hi})"
    )]
    IllegalSlot {
        customer: CustomerId,
        day: u32,
        half: u8,
        at_day: u32,
        epoch: u32,
        lo: u32,
        hi: u32,
    },
    #[error("assignment epoch needs a new customer in the state")]
    MissingNewCustomer,
    #[error("routing epoch must not have a pending new customer")]
    PendingNewCustomer,
    #[error("policy failed: {0}")]
    Policy(#[from] PolicyError),
    #[error("router failed: {0}")]
    Routing(#[from] RoutingError),
}

/// Assignment policy: picks one of the allowed slots for the state's new
/// customer. Implementations must return a slot from `allowed`.
pub trait Policy<S: Scalar> {
    fn name(&self) -> &str;

    fn decide(
        &self,
        state: &State<S>,
        allowed: &[SlotId],
        rng: &mut dyn Rng,
    ) -> Result<SlotId, PolicyError>;

    /// Scored candidate slots for rollout pruning. `None` means the policy
    /// does not rank actions and callers should consider all allowed slots.
    fn candidate_actions(
        &self,
        _state: &State<S>,
        _allowed: &[SlotId],
    ) -> Option<Vec<(SlotId, S)>> {
        None
    }
}

/// Handle to a single-day routing solver.
pub trait Router<S: Scalar> {
    fn solve(
        &self,
        task: &RoutingTask<S>,
        rng: &mut dyn Rng,
    ) -> Result<(RoutePlan, RouteEvaluation<S>), RoutingError>;
}

/// The construction + local-search heuristic behind the router interface.
#[derive(Debug, Clone, Default)]
pub struct HeuristicRouter {
    pub budget: SolveBudget,
}

impl HeuristicRouter {
    pub fn new(budget: SolveBudget) -> Self {
        Self { budget }
    }
}

impl<S: Scalar> Router<S> for HeuristicRouter {
    fn solve(
        &self,
        task: &RoutingTask<S>,
        rng: &mut dyn Rng,
    ) -> Result<(RoutePlan, RouteEvaluation<S>), RoutingError> {
        solve_vrpstw(task, &self.budget, rng)
    }
}

/// Enumeration oracle behind the router interface; only for tiny days.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactRouter;

impl<S: Scalar> Router<S> for ExactRouter {
    fn solve(
        &self,
        task: &RoutingTask<S>,
        _rng: &mut dyn Rng,
    ) -> Result<(RoutePlan, RouteEvaluation<S>), RoutingError> {
        solve_vrpstw_exact(task)
    }
}

/// Decision-epoch state: the day, the epoch counter within the day, the
/// newly arrived customer awaiting assignment (if any), and the committed
/// customers with their slot decisions aligned by index.
#[derive(Debug, Clone, PartialEq)]
pub struct State<S> {
    pub day: u32,
    pub epoch: u32,
    pub new_customer: Option<Customer<S>>,
    pub assigned: Vec<Customer<S>>,
    pub decisions: Vec<SlotId>,
}

impl<S: Scalar> State<S> {
    /// Day-0 state seeded with the pre-existing commitments.
    pub fn initial(inst: &Instance<S>) -> Self {
        let mut assigned = Vec::with_capacity(inst.preexisting.len());
        let mut decisions = Vec::with_capacity(inst.preexisting.len());
        for pre in &inst.preexisting {
            assigned.push(pre.customer.clone());
            decisions.push(pre.slot);
        }
        Self {
            day: 0,
            epoch: 1,
            new_customer: None,
            assigned,
            decisions,
        }
    }

    pub fn with_arrival(mut self, customer: Customer<S>) -> Self {
        self.new_customer = Some(customer);
        self
    }
}

/// What one epoch did and what it cost.
#[derive(Debug, Clone, PartialEq)]
pub enum EpochKind<S> {
    /// Assignment decision for one arrival.
    Tsa {
        customer: CustomerId,
        chosen: SlotId,
        satisfied: bool,
    },
    /// End-of-day routing of everyone committed to `service_day`.
    Rp {
        service_day: u32,
        served: Vec<CustomerId>,
        travel: S,
        wait: S,
        delay_penalty: S,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord<S> {
    pub day: u32,
    pub epoch: u32,
    pub cost: S,
    pub kind: EpochKind<S>,
}

/// The scalar cost a record contributes to the episode objective.
pub fn epoch_cost<S: Scalar>(record: &EpochRecord<S>) -> S {
    record.cost
}

/// Per-customer commitment made during the episode.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentRecord {
    pub customer: CustomerId,
    /// False for pre-existing commitments, true for arrivals decided here.
    pub dynamic: bool,
    pub preferences: Vec<SlotId>,
    pub decision: SlotId,
    pub satisfied: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostTotals<S> {
    pub total: S,
    pub travel: S,
    pub wait: S,
    pub delay_penalty: S,
    pub assignment_penalty: S,
}

impl<S: Scalar> CostTotals<S> {
    fn zero() -> Self {
        Self {
            total: S::zero(),
            travel: S::zero(),
            wait: S::zero(),
            delay_penalty: S::zero(),
            assignment_penalty: S::zero(),
        }
    }
}

/// Everything one simulated horizon produced. The epoch ledger fully
/// determines the cost totals (the test suite re-derives them by an
/// independent fold). Wall-clock decision times live apart from the ledger
/// because they are the one non-deterministic output.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult<S> {
    pub ledger: Vec<EpochRecord<S>>,
    /// Customers served per service day, for days 1..=T+lookahead-1.
    pub served_per_day: Vec<(u32, usize)>,
    pub totals: CostTotals<S>,
    pub assignments: Vec<AssignmentRecord>,
    /// Wall-clock seconds of each assignment decision, in epoch order.
    pub tsa_decision_secs: Vec<f64>,
}

impl<S: Scalar> EpisodeResult<S> {
    pub fn dynamic_customers(&self) -> usize {
        self.assignments.iter().filter(|a| a.dynamic).count()
    }

    pub fn satisfied_dynamic(&self) -> usize {
        self.assignments
            .iter()
            .filter(|a| a.dynamic && a.satisfied)
            .count()
    }

    /// Percentage of dynamically arriving customers whose decision was in
    /// their preference set. Vacuously 100 with no dynamic customers.
    pub fn sar(&self) -> f64 {
        let dynamic = self.dynamic_customers();
        if dynamic == 0 {
            100.0
        } else {
            100.0 * self.satisfied_dynamic() as f64 / dynamic as f64
        }
    }

    /// Sample standard deviation of the per-day served counts.
    pub fn served_sd(&self) -> f64 {
        let n = self.served_per_day.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self
            .served_per_day
            .iter()
            .map(|&(_, c)| c as f64)
            .sum::<f64>()
            / n as f64;
        let var = self
            .served_per_day
            .iter()
            .map(|&(_, c)| (c as f64 - mean).powi(2))
            .sum::<f64>()
            / (n - 1) as f64;
        var.sqrt()
    }

    /// Line-per-epoch structured log. Excludes wall-clock times, so two runs
    /// of the same seeded episode produce identical traces.
    pub fn write_trace(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        for rec in &self.ledger {
            match &rec.kind {
                EpochKind::Tsa {
                    customer,
                    chosen,
                    satisfied,
                } => writeln!(
                    out,
                    "day={} epoch={} kind=tsa customer={} slot={} satisfied={} cost={}",
                    rec.day, rec.epoch, customer, chosen, satisfied, rec.cost
                )?,
                EpochKind::Rp {
                    service_day,
                    served,
                    travel,
                    wait,
                    delay_penalty,
                } => {
                    let ids: Vec<String> = served.iter().map(|c| c.to_string()).collect();
                    writeln!(
                        out,
                        "day={} epoch={} kind=rp service_day={} jobs={} travel={} wait={} \
                         delay_penalty={} cost={} served={}",
                        rec.day,
                        rec.epoch,
                        service_day,
                        served.len(),
                        travel,
                        wait,
                        delay_penalty,
                        rec.cost,
                        ids.join(",")
                    )?;
                }
            }
        }
        Ok(())
    }

    pub fn trace_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_trace(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("trace is ascii")
    }
}

/// Records (customer, slot) for the state's new customer and advances the
/// epoch. The slot must be assignable from the state's day.
pub fn apply_tsa<S: Scalar>(
    mut state: State<S>,
    slot: SlotId,
    calendar: &SlotCalendar<S>,
) -> Result<State<S>, EpisodeError> {
    let customer = state
        .new_customer
        .take()
        .ok_or(EpisodeError::MissingNewCustomer)?;
    if !calendar.is_assignable(state.day, slot) {
        return Err(EpisodeError::IllegalSlot {
            customer: customer.id,
            day: slot.day,
            half: slot.half,
            at_day: state.day,
            epoch: state.epoch,
            lo: state.day + 1,
            hi: state.day + calendar.lookahead_days(),
        });
    }
    state.assigned.push(customer);
    state.decisions.push(slot);
    state.epoch += 1;
    Ok(state)
}

/// Builds the next day's routing task from the customers committed to it.
fn due_task<S: Scalar>(
    state: &State<S>,
    depot: Point<S>,
    params: &SystemParams<S>,
) -> (RoutingTask<S>, Vec<CustomerId>) {
    let service_day = state.day + 1;
    let mut jobs = Vec::new();
    let mut served = Vec::new();
    for (customer, slot) in state.assigned.iter().zip(&state.decisions) {
        if slot.day == service_day {
            jobs.push(Job {
                id: customer.id,
                coords: customer.coords,
                window: params.calendar.slot_window(*slot),
            });
            served.push(customer.id);
        }
    }
    (
        RoutingTask {
            depot,
            jobs,
            params: params.clone(),
        },
        served,
    )
}

/// End-of-day routing epoch: routes everyone committed to day `t+1`,
/// removes them from the state, and advances to the next day.
pub fn apply_rp<S: Scalar>(
    mut state: State<S>,
    depot: Point<S>,
    params: &SystemParams<S>,
    router: &dyn Router<S>,
    rng: &mut dyn Rng,
) -> Result<(State<S>, EpochRecord<S>), EpisodeError> {
    if state.new_customer.is_some() {
        return Err(EpisodeError::PendingNewCustomer);
    }
    let (task, served) = due_task(&state, depot, params);
    let (_plan, eval) = router.solve(&task, rng)?;

    let service_day = state.day + 1;
    let record = EpochRecord {
        day: state.day,
        epoch: state.epoch,
        cost: eval.objective,
        kind: EpochKind::Rp {
            service_day,
            served,
            travel: eval.travel,
            wait: eval.wait,
            delay_penalty: eval.delay_penalty,
        },
    };

    let mut kept_customers = Vec::with_capacity(state.assigned.len());
    let mut kept_decisions = Vec::with_capacity(state.decisions.len());
    for (customer, slot) in state.assigned.into_iter().zip(state.decisions) {
        if slot.day != service_day {
            kept_customers.push(customer);
            kept_decisions.push(slot);
        }
    }
    state.assigned = kept_customers;
    state.decisions = kept_decisions;
    state.day += 1;
    state.epoch = 1;
    Ok((state, record))
}

/// Simulates one full horizon: every arrival day runs its assignment
/// epochs and a routing epoch; tail routing epochs then clear the days
/// beyond the arrival horizon. Decision wall-clock is measured around
/// `policy.decide` only.
pub fn run_episode<S: Scalar>(
    inst: &Instance<S>,
    policy: &dyn Policy<S>,
    router: &dyn Router<S>,
    rng: &mut dyn Rng,
) -> Result<EpisodeResult<S>, EpisodeError> {
    let params = &inst.system;
    let calendar = &params.calendar;
    let depot = inst.depot();
    let arrival_days = inst.gen.horizon_days;
    let last_routing_day = arrival_days + calendar.lookahead_days() - 1;

    let mut state = State::initial(inst);
    let mut ledger = Vec::new();
    let mut assignments: Vec<AssignmentRecord> = inst
        .preexisting
        .iter()
        .map(|pre| AssignmentRecord {
            customer: pre.customer.id,
            dynamic: false,
            preferences: pre.customer.preferences.clone(),
            decision: pre.slot,
            satisfied: true,
        })
        .collect();
    let mut decision_secs = Vec::new();
    let mut served_per_day = Vec::new();
    let mut totals = CostTotals::zero();

    // End-of-day routing happens for t = 0 .. last_routing_day-1, serving
    // days 1 ..= last_routing_day.
    for t in 0..last_routing_day {
        if let Some(day_arrivals) = inst.arrivals.get(t as usize) {
            for customer in day_arrivals {
                state = state.with_arrival(customer.clone());
                let allowed = calendar.assignable_slots(t);
                let started = Instant::now();
                let slot = policy.decide(&state, &allowed, rng)?;
                decision_secs.push(started.elapsed().as_secs_f64());

                let penalty = assignment_penalty(&customer.preferences, slot, params.alpha);
                let satisfied = penalty == S::zero();
                // apply_tsa re-validates the slot and produces the error
                // diagnostics if the policy misbehaved.
                state = apply_tsa(state, slot, calendar)?;
                totals.assignment_penalty += penalty;
                totals.total += penalty;
                assignments.push(AssignmentRecord {
                    customer: customer.id,
                    dynamic: true,
                    preferences: customer.preferences.clone(),
                    decision: slot,
                    satisfied,
                });
                ledger.push(EpochRecord {
                    day: t,
                    epoch: state.epoch - 1,
                    cost: penalty,
                    kind: EpochKind::Tsa {
                        customer: customer.id,
                        chosen: slot,
                        satisfied,
                    },
                });
            }
        }

        let (next, record) = apply_rp(state, depot, params, router, rng)?;
        state = next;
        if let EpochKind::Rp {
            service_day,
            served,
            travel,
            wait,
            delay_penalty,
            ..
        } = &record.kind
        {
            served_per_day.push((*service_day, served.len()));
            totals.travel += *travel;
            totals.wait += *wait;
            totals.delay_penalty += *delay_penalty;
        }
        totals.total += record.cost;
        ledger.push(record);
    }

    assert!(
        state.assigned.is_empty(),
        "tail routing must clear every commitment"
    );

    Ok(EpisodeResult {
        ledger,
        served_per_day,
        totals,
        assignments,
        tsa_decision_secs: decision_secs,
    })
}

/// Cost of finishing the current horizon from `state`: the remaining
/// arrivals of the current day, the given future days, the routing epochs
/// between them, and the tail routing days. Assignment penalties of the
/// simulated decisions are included. This is the lookahead engine used by
/// simulation-based policies.
#[allow(clippy::too_many_arguments)]
pub fn continue_horizon<S: Scalar>(
    mut state: State<S>,
    rest_of_day: &[Customer<S>],
    future_days: &[Vec<Customer<S>>],
    depot: Point<S>,
    params: &SystemParams<S>,
    arrival_days: u32,
    policy: &dyn Policy<S>,
    router: &dyn Router<S>,
    rng: &mut dyn Rng,
) -> Result<S, EpisodeError> {
    let calendar = &params.calendar;
    let last_routing_day = arrival_days + calendar.lookahead_days() - 1;
    let start_day = state.day;
    let mut cost = S::zero();

    let mut day = start_day;
    while day < last_routing_day {
        let arrivals: &[Customer<S>] = if day == start_day {
            rest_of_day
        } else {
            future_days
                .get((day - start_day - 1) as usize)
                .map(Vec::as_slice)
                .unwrap_or(&[])
        };
        for customer in arrivals {
            state = state.with_arrival(customer.clone());
            let allowed = calendar.assignable_slots(day);
            let slot = policy.decide(&state, &allowed, rng)?;
            cost += assignment_penalty(&customer.preferences, slot, params.alpha);
            state = apply_tsa(state, slot, calendar)?;
        }
        let (next, record) = apply_rp(state, depot, params, router, rng)?;
        state = next;
        cost += record.cost;
        day = state.day;
    }
    Ok(cost)
}
