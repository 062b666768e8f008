//! Exact solver for small tasks by exhaustive enumeration.
//!
//! Every plan is a permutation of the jobs split into at most `n_vehicles`
//! consecutive segments, so enumerating (permutation, split) pairs covers
//! the whole plan space. Partial-cost pruning keeps the search fast at the
//! supported sizes. Ties are broken toward the lexicographically smallest
//! list of non-empty routes, which makes the result reproducible.

use crate::domain::CustomerId;
use crate::routing::{RouteEvaluation, RoutePlan, RoutingError, RoutingTask, TaskView};
use crate::scalar::Scalar;

/// Enumeration bound; factorial growth makes larger tasks impractical.
pub const EXACT_JOB_LIMIT: usize = 9;

struct Search<'a, S> {
    view: &'a TaskView<'a, S>,
    n_vehicles: usize,
    best_cost: S,
    best_routes: Vec<Vec<usize>>,
    seg_ends: Vec<usize>,
}

impl<'a, S: Scalar> Search<'a, S> {
    fn routes_from(&self, perm: &[usize], seg_ends: &[usize]) -> Vec<Vec<usize>> {
        let mut routes = Vec::with_capacity(seg_ends.len());
        let mut start = 0;
        for &end in seg_ends {
            routes.push(perm[start..end].to_vec());
            start = end;
        }
        routes
    }

    fn id_routes(&self, routes: &[Vec<usize>]) -> Vec<Vec<CustomerId>> {
        routes
            .iter()
            .filter(|r| !r.is_empty())
            .map(|r| r.iter().map(|&j| self.view.task.jobs[j].id).collect())
            .collect()
    }

    fn consider(&mut self, perm: &[usize], cost: S) {
        let seg_ends = self.seg_ends.clone();
        let routes = self.routes_from(perm, &seg_ends);
        if cost < self.best_cost {
            self.best_cost = cost;
            self.best_routes = routes;
        } else if cost == self.best_cost
            && self.id_routes(&routes) < self.id_routes(&self.best_routes)
        {
            self.best_routes = routes;
        }
    }

    /// Splits `perm[start..]` into the remaining vehicles, pruning prefixes
    /// that already cost more than the incumbent.
    fn split(&mut self, perm: &[usize], start: usize, vehicles_left: usize, cost_so_far: S) {
        if vehicles_left == 1 {
            let cost = cost_so_far + self.view.seq_cost(&perm[start..]);
            if cost <= self.best_cost {
                self.seg_ends.push(perm.len());
                self.consider(perm, cost);
                self.seg_ends.pop();
            }
            return;
        }
        for end in start..=perm.len() {
            let cost = cost_so_far + self.view.seq_cost(&perm[start..end]);
            if cost > self.best_cost {
                continue;
            }
            self.seg_ends.push(end);
            self.split(perm, end, vehicles_left - 1, cost);
            self.seg_ends.pop();
        }
    }

    fn permute(&mut self, perm: &mut Vec<usize>, k: usize) {
        if k == perm.len() {
            let n_v = self.n_vehicles;
            self.split(&perm.clone(), 0, n_v, S::zero());
            return;
        }
        for i in k..perm.len() {
            perm.swap(k, i);
            self.permute(perm, k + 1);
            perm.swap(k, i);
        }
    }
}

/// Visits every (permutation, split) plan of `n` jobs over `n_vehicles`
/// routes. Test hook for checking enumeration coverage.
#[cfg(test)]
pub(crate) fn for_each_plan(n: usize, n_vehicles: usize, mut f: impl FnMut(&[Vec<usize>])) {
    fn split(
        perm: &[usize],
        start: usize,
        left: usize,
        acc: &mut Vec<Vec<usize>>,
        f: &mut impl FnMut(&[Vec<usize>]),
    ) {
        if left == 1 {
            acc.push(perm[start..].to_vec());
            f(acc);
            acc.pop();
            return;
        }
        for end in start..=perm.len() {
            acc.push(perm[start..end].to_vec());
            split(perm, end, left - 1, acc, f);
            acc.pop();
        }
    }
    fn permute(perm: &mut Vec<usize>, k: usize, n_v: usize, f: &mut impl FnMut(&[Vec<usize>])) {
        if k == perm.len() {
            split(&perm.clone(), 0, n_v, &mut Vec::new(), f);
            return;
        }
        for i in k..perm.len() {
            perm.swap(k, i);
            permute(perm, k + 1, n_v, f);
            perm.swap(k, i);
        }
    }
    permute(&mut (0..n).collect(), 0, n_vehicles, &mut f);
}

/// Globally optimal plan for a small task, found by exhaustive enumeration
/// of ordered job partitions evaluated with the forward recursion.
pub fn solve_vrpstw_exact<S: Scalar>(
    task: &RoutingTask<S>,
) -> Result<(RoutePlan, RouteEvaluation<S>), RoutingError> {
    task.validate()?;
    let n = task.jobs.len();
    if n > EXACT_JOB_LIMIT {
        return Err(RoutingError::TooLarge {
            jobs: n,
            limit: EXACT_JOB_LIMIT,
        });
    }
    let view = TaskView::new(task);
    if n == 0 {
        let routes = vec![Vec::new(); task.params.n_vehicles];
        return Ok((view.plan(&routes), view.evaluation(&routes)));
    }

    let mut search = Search {
        view: &view,
        n_vehicles: task.params.n_vehicles,
        best_cost: S::infinity(),
        best_routes: Vec::new(),
        seg_ends: Vec::new(),
    };
    search.permute(&mut (0..n).collect(), 0);

    let routes: Vec<Vec<usize>> = search
        .best_routes
        .iter()
        .filter(|r| !r.is_empty())
        .cloned()
        .collect();
    Ok((view.plan(&routes), view.evaluation(&routes)))
}
