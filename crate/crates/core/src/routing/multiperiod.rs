//! Multi-period insertion planner: places jobs that may be served on one of
//! several candidate days, then improves each day's routes with the local
//! search of the single-day solver.
//!
//! Jobs with a single candidate day are committed requirements and are
//! placed first, in input order. Flexible jobs follow, each inserted at the
//! (day, route, position) of minimal cost increase over all of its
//! candidates. Soft windows keep every placement feasible.

use std::collections::BTreeMap;

use crate::domain::{CustomerId, Point, SystemParams};
use crate::routing::solver::{improve, SolveBudget};
use crate::routing::{Job, RouteEvaluation, RoutePlan, RoutingError, RoutingTask, TaskView};
use crate::scalar::Scalar;

/// One allowed service day with its window in hours of that day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DayWindow<S> {
    pub day: u32,
    pub window: (S, S),
}

/// A job that may be served on any one of its candidate days.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPeriodJob<S> {
    pub id: CustomerId,
    pub coords: Point<S>,
    pub candidates: Vec<DayWindow<S>>,
}

/// Where one job ended up: day, route, visit position, and planned times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannedVisit<S> {
    pub id: CustomerId,
    pub day: u32,
    pub route: usize,
    pub position: usize,
    pub arrival: S,
    pub service_start: S,
}

/// A day's final plan and its evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct DayPlanOutcome<S> {
    pub day: u32,
    pub plan: RoutePlan,
    pub eval: RouteEvaluation<S>,
}

/// Result of the multi-period planner.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioPlan<S> {
    pub visits: Vec<PlannedVisit<S>>,
    pub days: Vec<DayPlanOutcome<S>>,
}

impl<S: Scalar> ScenarioPlan<S> {
    pub fn visit(&self, id: CustomerId) -> Option<&PlannedVisit<S>> {
        self.visits.iter().find(|v| v.id == id)
    }

    /// Sum of all day objectives.
    pub fn objective(&self) -> S {
        self.days.iter().map(|d| d.eval.objective).sum()
    }
}

struct DayState<S> {
    jobs: Vec<Job<S>>,
    routes: Vec<Vec<usize>>,
    route_costs: Vec<S>,
}

impl<S: Scalar> DayState<S> {
    fn new(n_vehicles: usize) -> Self {
        Self {
            jobs: Vec::new(),
            routes: vec![Vec::new(); n_vehicles],
            route_costs: vec![S::zero(); n_vehicles],
        }
    }

    fn task(&self, depot: Point<S>, params: &SystemParams<S>) -> RoutingTask<S> {
        RoutingTask {
            depot,
            jobs: self.jobs.clone(),
            params: params.clone(),
        }
    }

    /// Cheapest (route, position, delta) for inserting `job` into this day.
    fn cheapest_slot(
        &self,
        job: &Job<S>,
        depot: Point<S>,
        params: &SystemParams<S>,
    ) -> (usize, usize, S) {
        let mut probe = self.task(depot, params);
        probe.jobs.push(job.clone());
        let view = TaskView::new(&probe);
        let new_idx = probe.jobs.len() - 1;
        let mut best: Option<(usize, usize, S)> = None;
        let mut scratch = Vec::new();
        for (r, route) in self.routes.iter().enumerate() {
            for pos in 0..=route.len() {
                scratch.clear();
                scratch.extend_from_slice(&route[..pos]);
                scratch.push(new_idx);
                scratch.extend_from_slice(&route[pos..]);
                let delta = view.seq_cost(&scratch) - self.route_costs[r];
                if best.is_none_or(|(_, _, b)| delta < b) {
                    best = Some((r, pos, delta));
                }
            }
        }
        best.expect("fleet has at least one vehicle")
    }

    fn insert(
        &mut self,
        job: Job<S>,
        route: usize,
        pos: usize,
        depot: Point<S>,
        params: &SystemParams<S>,
    ) {
        self.jobs.push(job);
        let idx = self.jobs.len() - 1;
        self.routes[route].insert(pos, idx);
        let task = self.task(depot, params);
        let view = TaskView::new(&task);
        self.route_costs[route] = view.seq_cost(&self.routes[route]);
    }
}

/// Plans every job onto one of its candidate days. Days missing from
/// `horizon` but named by a candidate are planned as well.
pub fn solve_multiperiod<S: Scalar>(
    jobs: &[MultiPeriodJob<S>],
    horizon: &[u32],
    depot: Point<S>,
    params: &SystemParams<S>,
    budget: &SolveBudget,
) -> Result<ScenarioPlan<S>, RoutingError> {
    let mut days: BTreeMap<u32, DayState<S>> = BTreeMap::new();
    for &d in horizon {
        days.entry(d)
            .or_insert_with(|| DayState::new(params.n_vehicles));
    }
    for job in jobs {
        assert!(
            !job.candidates.is_empty(),
            "job {} has no candidate days",
            job.id
        );
        for cand in &job.candidates {
            days.entry(cand.day)
                .or_insert_with(|| DayState::new(params.n_vehicles));
        }
    }

    // Committed jobs first, in input order.
    for job in jobs.iter().filter(|j| j.candidates.len() == 1) {
        let cand = job.candidates[0];
        let day_job = Job {
            id: job.id,
            coords: job.coords,
            window: cand.window,
        };
        let state = days.get_mut(&cand.day).expect("day registered above");
        let (r, pos, _) = state.cheapest_slot(&day_job, depot, params);
        state.insert(day_job, r, pos, depot, params);
    }

    // Flexible jobs: cheapest insertion over every candidate day.
    for job in jobs.iter().filter(|j| j.candidates.len() > 1) {
        let mut best: Option<(S, u32, usize, usize, Job<S>)> = None;
        for cand in &job.candidates {
            let day_job = Job {
                id: job.id,
                coords: job.coords,
                window: cand.window,
            };
            let state = &days[&cand.day];
            let (r, pos, delta) = state.cheapest_slot(&day_job, depot, params);
            if best.as_ref().is_none_or(|(b, ..)| delta < *b) {
                best = Some((delta, cand.day, r, pos, day_job));
            }
        }
        let (_, day, r, pos, day_job) = best.expect("jobs have at least one candidate");
        days.get_mut(&day)
            .expect("day registered above")
            .insert(day_job, r, pos, depot, params);
    }

    // Improve each day, then read off the schedule.
    let mut visits = Vec::with_capacity(jobs.len());
    let mut outcomes = Vec::with_capacity(days.len());
    for (&day, state) in days.iter_mut() {
        let task = state.task(depot, params);
        let view = TaskView::new(&task);
        improve(&view, &mut state.routes, budget, None);
        let eval = view.evaluation(&state.routes);
        let plan = view.plan(&state.routes);
        let mut cursor = 0usize;
        for (r, route) in state.routes.iter().enumerate() {
            for (pos, _) in route.iter().enumerate() {
                let sched = &eval.schedules[cursor];
                visits.push(PlannedVisit {
                    id: sched.id,
                    day,
                    route: r,
                    position: pos,
                    arrival: sched.arrival,
                    service_start: sched.service_start,
                });
                cursor += 1;
            }
        }
        outcomes.push(DayPlanOutcome { day, plan, eval });
    }

    Ok(ScenarioPlan {
        visits,
        days: outcomes,
    })
}
