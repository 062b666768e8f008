//! Construction + local-search heuristic for the single-day soft-window
//! routing task.
//!
//! Construction is cheapest insertion with jobs ordered by window earliest
//! start. Improvement is first-improvement local search over three
//! neighborhoods tried in order: relocate, intra-route 2-opt, inter-route
//! swap. Soft windows make every plan feasible, so the solver always
//! returns one.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::routing::{RouteEvaluation, RoutePlan, RoutingError, RoutingTask, TaskView};
use crate::scalar::Scalar;

/// Effort cap for one solver invocation.
///
/// A sweep is one pass that applies at most one improving move; the solver
/// stops at a local optimum or after `max_sweeps` applied moves. Restarts
/// beyond the first shuffle the insertion order and keep the best plan.
/// The optional wall-clock limit is off by default: enabling it trades the
/// byte-for-byte reproducibility of results for bounded latency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveBudget {
    pub max_sweeps: usize,
    pub restarts: usize,
    pub time_limit: Option<Duration>,
}

impl Default for SolveBudget {
    fn default() -> Self {
        Self {
            max_sweeps: 500,
            restarts: 8,
            time_limit: None,
        }
    }
}

impl SolveBudget {
    pub fn sweeps(max_sweeps: usize) -> Self {
        Self {
            max_sweeps,
            ..Self::default()
        }
    }

    /// Single-start budget for the hot paths inside rollouts and scenario
    /// planning, where the solver runs thousands of times per decision.
    pub fn fast(max_sweeps: usize) -> Self {
        Self {
            max_sweeps,
            restarts: 1,
            time_limit: None,
        }
    }
}

/// Jobs sorted by (window start, window end, id): urgent windows first.
fn window_order<S: Scalar>(view: &TaskView<S>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..view.task.jobs.len()).collect();
    order.sort_by(|&a, &b| {
        let ja = &view.task.jobs[a];
        let jb = &view.task.jobs[b];
        ja.window
            .0
            .partial_cmp(&jb.window.0)
            .expect("windows are ordered")
            .then(
                ja.window
                    .1
                    .partial_cmp(&jb.window.1)
                    .expect("windows are ordered"),
            )
            .then(ja.id.cmp(&jb.id))
    });
    order
}

/// Cheapest insertion over the given job order. Returns index routes, one
/// per vehicle (possibly empty).
fn cheapest_insertion<S: Scalar>(view: &TaskView<S>, order: &[usize]) -> Vec<Vec<usize>> {
    let n_v = view.task.params.n_vehicles;
    let mut routes: Vec<Vec<usize>> = vec![Vec::new(); n_v];
    let mut route_cost: Vec<S> = vec![S::zero(); n_v];
    let mut scratch: Vec<usize> = Vec::new();
    for &job in order {
        let mut best: Option<(S, usize, usize)> = None;
        for (r, route) in routes.iter().enumerate() {
            for pos in 0..=route.len() {
                scratch.clear();
                scratch.extend_from_slice(&route[..pos]);
                scratch.push(job);
                scratch.extend_from_slice(&route[pos..]);
                let delta = view.seq_cost(&scratch) - route_cost[r];
                if best.is_none_or(|(b, _, _)| delta < b) {
                    best = Some((delta, r, pos));
                }
            }
        }
        let (_, r, pos) = best.expect("fleet has at least one vehicle");
        routes[r].insert(pos, job);
        route_cost[r] = view.seq_cost(&routes[r]);
    }
    routes
}

struct Improver<'a, S> {
    view: &'a TaskView<'a, S>,
    deadline: Option<Instant>,
    tol: S,
}

impl<'a, S: Scalar> Improver<'a, S> {
    fn out_of_time(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    /// Moves one job to the cheapest other position; first improvement wins.
    fn relocate(&self, routes: &mut [Vec<usize>], cost: &mut [S]) -> bool {
        for r1 in 0..routes.len() {
            for i in 0..routes[r1].len() {
                let job = routes[r1][i];
                let mut donor = routes[r1].clone();
                donor.remove(i);
                let donor_cost = self.view.seq_cost(&donor);
                for r2 in 0..routes.len() {
                    if r1 == r2 {
                        for pos in 0..donor.len() + 1 {
                            if pos == i {
                                continue;
                            }
                            let mut cand = donor.clone();
                            cand.insert(pos, job);
                            let delta = self.view.seq_cost(&cand) - cost[r1];
                            if delta < -self.tol {
                                routes[r1] = cand;
                                cost[r1] = self.view.seq_cost(&routes[r1]);
                                return true;
                            }
                        }
                    } else {
                        for pos in 0..=routes[r2].len() {
                            let mut cand = routes[r2].clone();
                            cand.insert(pos, job);
                            let delta =
                                donor_cost + self.view.seq_cost(&cand) - cost[r1] - cost[r2];
                            if delta < -self.tol {
                                routes[r1] = donor;
                                routes[r2] = cand;
                                cost[r1] = self.view.seq_cost(&routes[r1]);
                                cost[r2] = self.view.seq_cost(&routes[r2]);
                                return true;
                            }
                        }
                    }
                }
            }
        }
        false
    }

    /// Reverses one intra-route segment; first improvement wins.
    fn two_opt(&self, routes: &mut [Vec<usize>], cost: &mut [S]) -> bool {
        for (r, route) in routes.iter_mut().enumerate() {
            let len = route.len();
            for i in 0..len {
                for j in i + 1..len {
                    route[i..=j].reverse();
                    let new_cost = self.view.seq_cost(route);
                    if new_cost < cost[r] - self.tol {
                        cost[r] = new_cost;
                        return true;
                    }
                    route[i..=j].reverse();
                }
            }
        }
        false
    }

    /// Exchanges two jobs between different routes; first improvement wins.
    fn swap(&self, routes: &mut [Vec<usize>], cost: &mut [S]) -> bool {
        for r1 in 0..routes.len() {
            for r2 in r1 + 1..routes.len() {
                for i in 0..routes[r1].len() {
                    for j in 0..routes[r2].len() {
                        let (a, b) = (routes[r1][i], routes[r2][j]);
                        routes[r1][i] = b;
                        routes[r2][j] = a;
                        let c1 = self.view.seq_cost(&routes[r1]);
                        let c2 = self.view.seq_cost(&routes[r2]);
                        if c1 + c2 < cost[r1] + cost[r2] - self.tol {
                            cost[r1] = c1;
                            cost[r2] = c2;
                            return true;
                        }
                        routes[r1][i] = a;
                        routes[r2][j] = b;
                    }
                }
            }
        }
        false
    }
}

/// First-improvement local search until a local optimum or the budget runs
/// out. Returns the number of applied moves.
pub(crate) fn improve<S: Scalar>(
    view: &TaskView<S>,
    routes: &mut [Vec<usize>],
    budget: &SolveBudget,
    deadline: Option<Instant>,
) -> usize {
    let improver = Improver {
        view,
        deadline,
        tol: S::tolerance(),
    };
    let mut cost: Vec<S> = routes.iter().map(|r| view.seq_cost(r)).collect();
    let mut sweeps = 0;
    while sweeps < budget.max_sweeps && !improver.out_of_time() {
        let moved = improver.relocate(routes, &mut cost)
            || improver.two_opt(routes, &mut cost)
            || improver.swap(routes, &mut cost);
        if !moved {
            break;
        }
        sweeps += 1;
    }
    sweeps
}

fn total_cost<S: Scalar>(view: &TaskView<S>, routes: &[Vec<usize>]) -> S {
    routes.iter().map(|r| view.seq_cost(r)).sum()
}

/// Pure cheapest-insertion construction, no improvement. Exposed so tests
/// can check that the full solver never does worse.
pub fn construct_plan<S: Scalar>(
    task: &RoutingTask<S>,
) -> Result<(RoutePlan, RouteEvaluation<S>), RoutingError> {
    task.validate()?;
    let view = TaskView::new(task);
    let routes = cheapest_insertion(&view, &window_order(&view));
    Ok((view.plan(&routes), view.evaluation(&routes)))
}

/// Heuristic soft-time-window solver: cheapest insertion plus local search,
/// with optional shuffled restarts. The returned evaluation is exactly
/// [`super::evaluate_plan`] of the returned plan.
pub fn solve_vrpstw<S: Scalar>(
    task: &RoutingTask<S>,
    budget: &SolveBudget,
    rng: &mut (impl Rng + ?Sized),
) -> Result<(RoutePlan, RouteEvaluation<S>), RoutingError> {
    task.validate()?;
    let view = TaskView::new(task);
    let start = Instant::now();
    let deadline = budget.time_limit.map(|limit| start + limit);
    let base_order = window_order(&view);

    let mut best: Option<(S, Vec<Vec<usize>>)> = None;
    let restarts = budget.restarts.max(1);
    for attempt in 0..restarts {
        let mut order = base_order.clone();
        if attempt > 0 {
            order.shuffle(rng);
        }
        let mut routes = cheapest_insertion(&view, &order);
        improve(&view, &mut routes, budget, deadline);
        let cost = total_cost(&view, &routes);
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, routes));
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }
    }

    let (_, routes) = best.expect("at least one attempt runs");
    Ok((view.plan(&routes), view.evaluation(&routes)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{CustomerId, Point, SlotCalendar, SystemParams};
    use crate::routing::{evaluate_plan, Job};
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn params(n_v: usize) -> SystemParams<f64> {
        SystemParams::new(n_v, 2.0, 3.0, 1.0, 0.6667, SlotCalendar::default_two_slot()).unwrap()
    }

    fn random_task(rng: &mut ChaCha12Rng, n_jobs: usize, n_v: usize) -> RoutingTask<f64> {
        let windows = [(0.0, 5.0), (4.0, 9.0)];
        RoutingTask {
            depot: Point::new(1.0, 1.0),
            jobs: (0..n_jobs)
                .map(|i| Job {
                    id: CustomerId(i as u64),
                    coords: Point::new(rng.random_range(0.0..2.0), rng.random_range(0.0..2.0)),
                    window: windows[rng.random_range(0..2)],
                })
                .collect(),
            params: params(n_v),
        }
    }

    #[test]
    fn zero_jobs_yield_an_empty_plan() {
        let task = RoutingTask {
            depot: Point::new(1.0, 1.0),
            jobs: vec![],
            params: params(2),
        };
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let (plan, eval) = solve_vrpstw(&task, &SolveBudget::default(), &mut rng).unwrap();
        assert_eq!(plan.job_count(), 0);
        assert_eq!(eval.objective, 0.0);
    }

    #[test]
    fn single_job_is_a_round_trip() {
        let mut task = random_task(&mut ChaCha12Rng::seed_from_u64(1), 1, 2);
        task.jobs[0].coords = Point::new(1.0, 2.0);
        task.jobs[0].window = (0.0, 5.0);
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let (plan, eval) = solve_vrpstw(&task, &SolveBudget::default(), &mut rng).unwrap();
        assert_eq!(plan.job_count(), 1);
        assert_eq!(eval.objective, 2.0); // out and back, no wait
    }

    #[test]
    fn waiting_appears_when_the_window_opens_late() {
        let mut task = random_task(&mut ChaCha12Rng::seed_from_u64(1), 1, 1);
        task.jobs[0].coords = Point::new(1.0, 2.0);
        task.jobs[0].window = (4.0, 9.0);
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let (_, eval) = solve_vrpstw(&task, &SolveBudget::default(), &mut rng).unwrap();
        assert_eq!(eval.objective, 2.0 + 3.0); // travel 2, wait 4 - 1 = 3
    }

    #[test]
    fn solver_never_loses_to_pure_construction() {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        for case in 0..60 {
            let task = random_task(&mut rng, 3 + case % 10, 1 + case % 3);
            let (_, constructed) = construct_plan(&task).unwrap();
            let mut srng = ChaCha12Rng::seed_from_u64(case as u64);
            let (plan, improved) = solve_vrpstw(&task, &SolveBudget::default(), &mut srng).unwrap();
            assert!(improved.objective <= constructed.objective + 1e-9);
            // Returned evaluation matches an independent re-evaluation.
            let re = evaluate_plan(&plan, &task).unwrap();
            assert_eq!(re.objective, improved.objective);
        }
    }

    #[test]
    fn solver_is_deterministic_given_the_seed() {
        let task = random_task(&mut ChaCha12Rng::seed_from_u64(5), 12, 2);
        let budget = SolveBudget {
            restarts: 3,
            ..SolveBudget::default()
        };
        let run = |seed| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            solve_vrpstw(&task, &budget, &mut rng).unwrap()
        };
        let (p1, e1) = run(7);
        let (p2, e2) = run(7);
        assert_eq!(p1, p2);
        assert_eq!(e1.objective, e2.objective);
    }

    #[test]
    fn plan_objective_is_invariant_under_rigid_motions() {
        let mut rng = ChaCha12Rng::seed_from_u64(33);
        for _ in 0..20 {
            let task = random_task(&mut rng, 8, 2);
            let mut srng = ChaCha12Rng::seed_from_u64(1);
            let (plan, eval) = solve_vrpstw(&task, &SolveBudget::default(), &mut srng).unwrap();

            let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let (tx, ty) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let rot = |p: Point<f64>| {
                Point::new(
                    p.x * angle.cos() - p.y * angle.sin() + tx,
                    p.x * angle.sin() + p.y * angle.cos() + ty,
                )
            };
            let mut moved = task.clone();
            moved.depot = rot(moved.depot);
            for job in &mut moved.jobs {
                job.coords = rot(job.coords);
            }
            let moved_eval = evaluate_plan(&plan, &moved).unwrap();
            assert!(
                (moved_eval.objective - eval.objective).abs() < 1e-8,
                "rigid motion changed objective: {} vs {}",
                moved_eval.objective,
                eval.objective
            );
        }
    }
}
