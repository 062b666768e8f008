//! Scenario-based planning: sample future request scenarios, solve each as
//! a deterministic multi-period routing problem, read off the slot each
//! scenario implies for the current customer, and commit the modal slot.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::domain::{SlotCalendar, SlotId, SystemParams};
use crate::engine::{Policy, PolicyError, State};
use crate::instance::GenParams;
use crate::policies::consensus;
use crate::policies::rollout::sample_future_customers;
use crate::routing::{solve_multiperiod, DayWindow, MultiPeriodJob, SolveBudget};
use crate::scalar::Scalar;

/// Window shape given to sampled future customers inside scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FutureWindows {
    /// Preferred days with an unbounded deadline; keeps scenarios from
    /// over-constraining routes.
    #[default]
    Infinite,
    /// The actual windows of the preferred slots.
    Finite,
}

/// Scenario-sampling parameters.
pub struct SbpConfig<S: Scalar> {
    /// Number of sampled scenarios per decision.
    pub scenarios: usize,
    /// How many arrival days each scenario looks ahead, starting with the
    /// remainder of the current day.
    pub sampling_horizon: u32,
    pub future_windows: FutureWindows,
    /// Distribution of future arrivals; matches instance generation.
    pub dist: GenParams<S>,
    /// Local-search budget for each scenario day.
    pub improve_budget: SolveBudget,
}

impl<S: Scalar> SbpConfig<S> {
    pub fn new(dist: GenParams<S>) -> Self {
        Self {
            scenarios: 30,
            sampling_horizon: 1,
            future_windows: FutureWindows::Infinite,
            dist,
            improve_budget: SolveBudget::fast(20),
        }
    }
}

/// Distinct preferred days of a preference set, ascending.
fn preferred_days(prefs: &[SlotId]) -> Vec<u32> {
    let mut days: Vec<u32> = prefs.iter().map(|p| p.day).collect();
    days.sort_unstable();
    days.dedup();
    days
}

/// The slot on `day` whose window contains `start`; overlaps resolve to the
/// smaller ordinal. A start beyond every window snaps to the nearest one.
pub fn slot_for_start<S: Scalar>(calendar: &SlotCalendar<S>, day: u32, start: S) -> SlotId {
    let mut nearest: Option<(S, SlotId)> = None;
    for half in 1..=calendar.slots_per_day() {
        let slot = SlotId::new(day, half);
        let (a, b) = calendar.slot_window(slot);
        if a <= start && start <= b {
            return slot;
        }
        let gap = if start < a { a - start } else { start - b };
        if nearest.is_none_or(|(g, _)| gap < g) {
            nearest = Some((gap, slot));
        }
    }
    nearest.expect("calendars have at least one slot").1
}

/// Scenario-based planning as a policy.
pub struct SbpPolicy<S: Scalar> {
    pub cfg: SbpConfig<S>,
    pub system: SystemParams<S>,
}

impl<S: Scalar> SbpPolicy<S> {
    pub fn new(cfg: SbpConfig<S>, system: SystemParams<S>) -> Self {
        Self { cfg, system }
    }

    /// One scenario: committed customers as fixed jobs, the current
    /// customer flexible over its preferred days with day-length windows,
    /// futures flexible per the configured window mode.
    fn scenario_slot(&self, state: &State<S>, scenario_seed: u64) -> Result<SlotId, PolicyError> {
        let calendar = &self.system.calendar;
        let current = state
            .new_customer
            .as_ref()
            .ok_or_else(|| PolicyError::Other("scenario planning needs a new customer".into()))?;
        let t = state.day;
        let t_end = calendar.day_length();

        let mut rng = ChaCha12Rng::seed_from_u64(scenario_seed);
        let until = (t + self.cfg.sampling_horizon.max(1) - 1)
            .min(self.cfg.dist.horizon_days.saturating_sub(1));
        let future = sample_future_customers(
            t,
            state.epoch as usize,
            until,
            &self.cfg.dist,
            calendar,
            &mut rng,
        );

        let mut jobs = Vec::with_capacity(state.assigned.len() + 1 + future.total());
        for (customer, slot) in state.assigned.iter().zip(&state.decisions) {
            jobs.push(MultiPeriodJob {
                id: customer.id,
                coords: customer.coords,
                candidates: vec![DayWindow {
                    day: slot.day,
                    window: calendar.slot_window(*slot),
                }],
            });
        }
        jobs.push(MultiPeriodJob {
            id: current.id,
            coords: current.coords,
            candidates: preferred_days(&current.preferences)
                .into_iter()
                .map(|day| DayWindow {
                    day,
                    window: (S::zero(), t_end),
                })
                .collect(),
        });
        for sampled in future
            .rest_of_day
            .iter()
            .chain(future.later_days.iter().flatten())
        {
            let candidates = match self.cfg.future_windows {
                FutureWindows::Infinite => preferred_days(&sampled.preferences)
                    .into_iter()
                    .map(|day| DayWindow {
                        day,
                        window: (S::zero(), S::infinity()),
                    })
                    .collect(),
                FutureWindows::Finite => sampled
                    .preferences
                    .iter()
                    .map(|slot| DayWindow {
                        day: slot.day,
                        window: calendar.slot_window(*slot),
                    })
                    .collect(),
            };
            jobs.push(MultiPeriodJob {
                id: sampled.id,
                coords: sampled.coords,
                candidates,
            });
        }

        let horizon: Vec<u32> = (t + 1..=t + calendar.lookahead_days()).collect();
        let plan = solve_multiperiod(
            &jobs,
            &horizon,
            self.cfg.dist.depot,
            &self.system,
            &self.cfg.improve_budget,
        )
        .map_err(|e| PolicyError::Other(e.to_string()))?;
        let visit = plan
            .visit(current.id)
            .ok_or_else(|| PolicyError::Other("scenario plan lost the current customer".into()))?;
        Ok(slot_for_start(calendar, visit.day, visit.service_start))
    }
}

impl<S: Scalar> Policy<S> for SbpPolicy<S> {
    fn name(&self) -> &str {
        "sbp"
    }

    fn decide(
        &self,
        state: &State<S>,
        _allowed: &[SlotId],
        rng: &mut dyn Rng,
    ) -> Result<SlotId, PolicyError> {
        let mut votes = Vec::with_capacity(self.cfg.scenarios.max(1));
        for _ in 0..self.cfg.scenarios.max(1) {
            let seed = rng.next_u64();
            votes.push(self.scenario_slot(state, seed)?);
        }
        consensus(&votes).ok_or(PolicyError::EmptyActionSet)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Customer, CustomerId, Point};
    use crate::instance::SystemPreset;

    fn system() -> SystemParams<f64> {
        SystemPreset::S1.system_params()
    }

    fn no_future_dist() -> GenParams<f64> {
        let mut gen = SystemPreset::S1.gen_params();
        gen.n_daily_mean = 0.0;
        gen.count_sd = 0.0;
        gen
    }

    fn state_with_arrival(prefs: Vec<SlotId>) -> State<f64> {
        let busy = |id: u64, x: f64, y: f64| Customer {
            id: CustomerId(id),
            coords: Point::new(x, y),
            arrival_day: 0,
            arrival_time: 0.0,
            preferences: vec![SlotId::new(1, 1)],
        };
        // Six hour-long morning visits oversubscribe day 1, so any extra
        // insertion there cascades into delay penalties; day 2 is free.
        // The cluster sits far from the new customer at (0.2, 0.2).
        let assigned: Vec<Customer<f64>> = [
            (1, 1.9, 1.9),
            (2, 2.0, 1.8),
            (3, 1.8, 2.0),
            (4, 2.0, 1.6),
            (5, 1.7, 1.8),
            (6, 1.9, 1.7),
        ]
        .into_iter()
        .map(|(id, x, y)| busy(id, x, y))
        .collect();
        let decisions = vec![SlotId::new(1, 1); assigned.len()];
        State {
            day: 0,
            epoch: 1,
            new_customer: Some(Customer {
                id: CustomerId(100),
                coords: Point::new(0.2, 0.2),
                arrival_day: 0,
                arrival_time: 0.1,
                preferences: prefs,
            }),
            assigned,
            decisions,
        }
    }

    #[test]
    fn defaults_match_the_tuned_configuration() {
        let cfg = SbpConfig::new(no_future_dist());
        assert_eq!(cfg.scenarios, 30);
        assert_eq!(cfg.sampling_horizon, 1);
        assert_eq!(cfg.future_windows, FutureWindows::Infinite);
    }

    #[test]
    fn slot_extraction_prefers_the_smaller_ordinal_in_overlaps() {
        let cal = SlotCalendar::<f64>::default_two_slot();
        assert_eq!(slot_for_start(&cal, 3, 2.0), SlotId::new(3, 1));
        assert_eq!(slot_for_start(&cal, 3, 4.5), SlotId::new(3, 1));
        assert_eq!(slot_for_start(&cal, 3, 6.0), SlotId::new(3, 2));
        // Past every deadline: snap to the closest window.
        assert_eq!(slot_for_start(&cal, 3, 9.5), SlotId::new(3, 2));
    }

    #[test]
    fn single_scenario_without_futures_is_the_myopic_insertion_choice() {
        // q = 1 and no sampled future customers: the decision must be the
        // slot implied by the cheapest insertion day of the current
        // customer. With one vehicle, the crowded day 1 costs strictly more
        // to extend than the empty day 2.
        let system = crate::domain::SystemParams::new(
            1,
            2.0,
            3.0,
            1.0,
            1.0,
            SlotCalendar::default_two_slot(),
        )
        .unwrap();
        let mut cfg = SbpConfig::new(no_future_dist());
        cfg.scenarios = 1;
        let policy = SbpPolicy::new(cfg, system.clone());
        let prefs = vec![SlotId::new(1, 1), SlotId::new(2, 1)];
        let state = state_with_arrival(prefs);
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let slot = Policy::<f64>::decide(&policy, &state, &[], &mut rng).unwrap();

        // Independent reduction: restrict the current customer to each
        // preferred day in turn and compare total plan objectives.
        let cost_on = |day: u32| {
            use crate::routing::{solve_multiperiod, DayWindow, MultiPeriodJob};
            let mut jobs: Vec<MultiPeriodJob<f64>> = state
                .assigned
                .iter()
                .zip(&state.decisions)
                .map(|(c, s)| MultiPeriodJob {
                    id: c.id,
                    coords: c.coords,
                    candidates: vec![DayWindow {
                        day: s.day,
                        window: system.calendar.slot_window(*s),
                    }],
                })
                .collect();
            let current = state.new_customer.as_ref().unwrap();
            jobs.push(MultiPeriodJob {
                id: current.id,
                coords: current.coords,
                candidates: vec![DayWindow {
                    day,
                    window: (0.0, system.calendar.day_length()),
                }],
            });
            solve_multiperiod(
                &jobs,
                &[1, 2, 3, 4, 5],
                Point::new(1.0, 1.0),
                &system,
                &SolveBudget::sweeps(0),
            )
            .unwrap()
            .days
            .iter()
            .map(|d| d.eval.objective)
            .sum::<f64>()
        };
        assert!(cost_on(2) < cost_on(1));
        assert_eq!(slot.day, 2);

        // And the decision agrees with a directly constructed scenario.
        let direct = policy.scenario_slot(&state, 12345).unwrap();
        assert_eq!(direct, slot);
    }

    #[test]
    fn decisions_stay_inside_the_assignable_window() {
        let system = system();
        let mut dist = no_future_dist();
        dist.n_daily_mean = 3.0;
        dist.count_sd = 1.0;
        let mut cfg = SbpConfig::new(dist);
        cfg.scenarios = 5;
        let policy = SbpPolicy::new(cfg, system.clone());
        for seed in 0..10 {
            let prefs = vec![SlotId::new(2, 2), SlotId::new(4, 1), SlotId::new(5, 2)];
            let state = state_with_arrival(prefs);
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let slot = Policy::<f64>::decide(&policy, &state, &[], &mut rng).unwrap();
            assert!(system.calendar.is_assignable(0, slot), "slot {slot}");
            // The scenario restricts the current customer to preferred days.
            assert!([2, 4, 5].contains(&slot.day));
        }
    }

    #[test]
    fn q1_consensus_is_the_single_scenario_vote() {
        let system = system();
        let mut dist = no_future_dist();
        dist.n_daily_mean = 2.0;
        let mut cfg = SbpConfig::new(dist);
        cfg.scenarios = 1;
        let policy = SbpPolicy::new(cfg, system);
        let state = state_with_arrival(vec![SlotId::new(3, 1), SlotId::new(4, 2)]);
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let seed_preview = {
            let mut clone = ChaCha12Rng::seed_from_u64(5);
            clone.next_u64()
        };
        let slot = Policy::<f64>::decide(&policy, &state, &[], &mut rng).unwrap();
        assert_eq!(slot, policy.scenario_slot(&state, seed_preview).unwrap());
    }
}
