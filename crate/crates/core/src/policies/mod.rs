//! Assignment policies: the uniform-random and segmentation baselines, the
//! rollout wrapper that upgrades any base policy with sampled-future
//! lookahead, and scenario-based planning.

mod rollout;
mod sbp;

pub use rollout::{
    rollout_decide, sample_future_customers, ActionSet, FutureSample, RolloutConfig, RolloutPolicy,
};
pub use sbp::{slot_for_start, FutureWindows, SbpConfig, SbpPolicy};

use std::collections::BTreeMap;

use rand::{Rng, RngExt};

use crate::domain::{Point, SlotCalendar, SlotId};
use crate::engine::{Policy, PolicyError, State};
use crate::scalar::Scalar;

/// Uniform-random assignment over the allowed slots.
#[derive(Debug, Clone, Copy, Default)]
pub struct RanPolicy;

impl<S: Scalar> Policy<S> for RanPolicy {
    fn name(&self) -> &str {
        "ran"
    }

    fn decide(
        &self,
        _state: &State<S>,
        allowed: &[SlotId],
        rng: &mut dyn Rng,
    ) -> Result<SlotId, PolicyError> {
        if allowed.is_empty() {
            return Err(PolicyError::EmptyActionSet);
        }
        Ok(allowed[rng.random_range(0..allowed.len())])
    }
}

/// Angular sector of `coords` around `depot`: sectors of equal width,
/// numbered 1..=`sectors` counterclockwise from the positive x-axis,
/// lower edge inclusive. A customer exactly at the depot falls in sector 1.
pub fn seg_region<S: Scalar>(coords: Point<S>, depot: Point<S>, sectors: u32) -> u32 {
    let dy = (coords.y - depot.y).as_f64();
    let dx = (coords.x - depot.x).as_f64();
    if dx == 0.0 && dy == 0.0 {
        return 1;
    }
    let mut angle = dy.atan2(dx);
    if angle < 0.0 {
        angle += std::f64::consts::TAU;
    }
    let idx = (angle / (std::f64::consts::TAU / sectors as f64)).floor() as u32;
    idx.min(sectors - 1) + 1
}

/// Region-based assignment: the service area is cut into one sector per
/// slot of the lookahead window; a sector fixes the within-day slot by its
/// parity position and the service day by a rotation that advances with the
/// current day, spreading each day's arrivals over all lookahead days.
#[derive(Debug, Clone)]
pub struct SegPolicy<S> {
    pub depot: Point<S>,
    pub calendar: SlotCalendar<S>,
}

impl<S: Scalar> SegPolicy<S> {
    pub fn new(depot: Point<S>, calendar: SlotCalendar<S>) -> Self {
        Self { depot, calendar }
    }

    /// The slot for a customer in `region` deciding on day `t`.
    pub fn slot_for_region(&self, t: u32, region: u32) -> SlotId {
        let n_s = self.calendar.slots_per_day() as u32;
        let n_d = self.calendar.lookahead_days();
        let pair = (region - 1) / n_s + 1;
        let residue = (pair + 1) % n_d;
        let lo = t + 1;
        let offset = (residue + n_d - lo % n_d) % n_d;
        let day = lo + offset;
        let half = ((region - 1) % n_s + 1) as u8;
        SlotId::new(day, half)
    }
}

impl<S: Scalar> Policy<S> for SegPolicy<S> {
    fn name(&self) -> &str {
        "seg"
    }

    fn decide(
        &self,
        state: &State<S>,
        _allowed: &[SlotId],
        _rng: &mut dyn Rng,
    ) -> Result<SlotId, PolicyError> {
        let customer = state
            .new_customer
            .as_ref()
            .ok_or_else(|| PolicyError::Other("segmentation needs a new customer".into()))?;
        let sectors = self.calendar.slots_per_horizon() as u32;
        let region = seg_region(customer.coords, self.depot, sectors);
        Ok(self.slot_for_region(state.day, region))
    }
}

/// Most frequent slot; ties go to the smallest (day, half).
pub fn consensus(votes: &[SlotId]) -> Option<SlotId> {
    let mut counts: BTreeMap<SlotId, usize> = BTreeMap::new();
    for &v in votes {
        *counts.entry(v).or_insert(0) += 1;
    }
    let mut best: Option<(SlotId, usize)> = None;
    for (slot, count) in counts {
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((slot, count));
        }
    }
    best.map(|(slot, _)| slot)
}
