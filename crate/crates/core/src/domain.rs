//! Foundational types shared by every other module: the slot calendar,
//! slot identifiers, system parameters, customers, and the small calculus
//! on top of them (assignable slots, windows, penalties, travel times).
//!
//! Everything here is an immutable value and every operation is a pure
//! function, so the types can be shared freely across threads.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("slot window ({a}, {b}) violates 0 <= a <= b <= {day_length}")]
    InvalidWindow { a: f64, b: f64, day_length: f64 },
    #[error("calendar needs at least one slot per day")]
    NoSlots,
    #[error("calendar needs at least one lookahead day")]
    NoLookahead,
    #[error("fleet must have at least one vehicle")]
    NoVehicles,
    #[error("{name} must be {requirement}, got {value}")]
    BadParameter {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("customer {customer} has duplicate preferred slot ({day}, {half})")]
    DuplicatePreference {
        customer: CustomerId,
        day: u32,
        half: u8,
    },
    #[error(
        "customer {customer} prefers slot ({day}, {half}) outside the lookahead window \
         of arrival day {arrival_day} (allowed days {lo}..={hi})"
    )]
    PreferenceOutsideLookahead {
        customer: CustomerId,
        day: u32,
        half: u8,
        arrival_day: u32,
        lo: u32,
        hi: u32,
    },
    #[error("customer {customer} prefers slot ({day}, {half}) but the calendar has {slots_per_day} slots per day")]
    PreferenceBadHalf {
        customer: CustomerId,
        day: u32,
        half: u8,
        slots_per_day: u8,
    },
}

/// Planar location in distance units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point<S> {
    pub x: S,
    pub y: S,
}

impl<S: Scalar> Point<S> {
    pub fn new(x: S, y: S) -> Self {
        Self { x, y }
    }

    /// Euclidean distance.
    pub fn dist(&self, other: &Self) -> S {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Opaque customer identifier, unique within an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CustomerId(pub u64);

impl std::fmt::Display for CustomerId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One service slot: a half-open position in the day grid.
///
/// `day` counts service days from 1; `half` is the within-day slot index
/// from 1 (so the default calendar has halves 1 = morning, 2 = afternoon).
/// The derived ordinal `(day - 1) * slots_per_day + half` is strictly
/// increasing in `(day, half)` order, which is also the derived `Ord`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(u32, u8)", into = "(u32, u8)")]
pub struct SlotId {
    pub day: u32,
    pub half: u8,
}

impl SlotId {
    pub fn new(day: u32, half: u8) -> Self {
        assert!(day >= 1, "service days are 1-based");
        assert!(half >= 1, "within-day slots are 1-based");
        Self { day, half }
    }

    /// Global 1-based index of the slot for a calendar with `slots_per_day`
    /// slots. Ordinal 1 is the first slot of day 1.
    pub fn ordinal(&self, slots_per_day: u8) -> u32 {
        (self.day - 1) * slots_per_day as u32 + self.half as u32
    }

    pub fn from_ordinal(ordinal: u32, slots_per_day: u8) -> Self {
        assert!(ordinal >= 1, "ordinals are 1-based");
        let n = slots_per_day as u32;
        Self {
            day: (ordinal - 1) / n + 1,
            half: ((ordinal - 1) % n + 1) as u8,
        }
    }
}

impl From<(u32, u8)> for SlotId {
    fn from((day, half): (u32, u8)) -> Self {
        Self { day, half }
    }
}

impl From<SlotId> for (u32, u8) {
    fn from(s: SlotId) -> Self {
        (s.day, s.half)
    }
}

impl std::fmt::Display for SlotId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.day, self.half)
    }
}

/// The slot grid: how many slots per day, how far ahead assignments may
/// reach, and the within-day service window of each slot in hours from the
/// start of the working day.
///
/// Windows may overlap; the default is two slots over a 9-hour day, morning
/// (0, 5) and afternoon (4, 9), i.e. 8:00-13:00 and 12:00-17:00.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotCalendar<S> {
    slots_per_day: u8,
    lookahead_days: u32,
    day_length: S,
    windows: Vec<(S, S)>,
}

impl<S: Scalar> SlotCalendar<S> {
    pub fn new(
        lookahead_days: u32,
        day_length: S,
        windows: Vec<(S, S)>,
    ) -> Result<Self, DomainError> {
        if windows.is_empty() {
            return Err(DomainError::NoSlots);
        }
        if lookahead_days == 0 {
            return Err(DomainError::NoLookahead);
        }
        for &(a, b) in &windows {
            if !(S::zero() <= a && a <= b && b <= day_length) {
                return Err(DomainError::InvalidWindow {
                    a: a.as_f64(),
                    b: b.as_f64(),
                    day_length: day_length.as_f64(),
                });
            }
        }
        Ok(Self {
            slots_per_day: windows.len() as u8,
            lookahead_days,
            day_length,
            windows,
        })
    }

    /// The two-slot, five-day, nine-hour calendar used throughout the
    /// benchmark systems.
    pub fn default_two_slot() -> Self {
        Self::new(
            5,
            S::from_f64(9.0),
            vec![
                (S::zero(), S::from_f64(5.0)),
                (S::from_f64(4.0), S::from_f64(9.0)),
            ],
        )
        .expect("default calendar is valid")
    }

    /// Re-checks the constructor invariants; used on deserialized values,
    /// which bypass [`SlotCalendar::new`].
    pub fn validate(&self) -> Result<(), DomainError> {
        let rebuilt = Self::new(self.lookahead_days, self.day_length, self.windows.clone())?;
        if rebuilt.slots_per_day != self.slots_per_day {
            return Err(DomainError::BadParameter {
                name: "slots_per_day",
                requirement: "equal to the number of windows",
                value: self.slots_per_day as f64,
            });
        }
        Ok(())
    }

    pub fn slots_per_day(&self) -> u8 {
        self.slots_per_day
    }

    pub fn lookahead_days(&self) -> u32 {
        self.lookahead_days
    }

    pub fn day_length(&self) -> S {
        self.day_length
    }

    /// Slots per lookahead horizon, i.e. the size of any assignable set.
    pub fn slots_per_horizon(&self) -> usize {
        self.slots_per_day as usize * self.lookahead_days as usize
    }

    /// Within-day window of a slot in hours from day start. The absolute day
    /// is carried by `slot.day`.
    pub fn slot_window(&self, slot: SlotId) -> (S, S) {
        self.windows[(slot.half - 1) as usize]
    }

    /// Slots a customer arriving on day `t` may be assigned to: all slots of
    /// days `t+1 ..= t+lookahead`, in ordinal order.
    pub fn assignable_slots(&self, t: u32) -> Vec<SlotId> {
        let mut out = Vec::with_capacity(self.slots_per_horizon());
        for day in t + 1..=t + self.lookahead_days {
            for half in 1..=self.slots_per_day {
                out.push(SlotId::new(day, half));
            }
        }
        out
    }

    pub fn is_assignable(&self, t: u32, slot: SlotId) -> bool {
        slot.day > t
            && slot.day <= t + self.lookahead_days
            && slot.half >= 1
            && slot.half <= self.slots_per_day
    }
}

impl<S: Scalar> Default for SlotCalendar<S> {
    fn default() -> Self {
        Self::default_two_slot()
    }
}

/// Fleet size, cost coefficients, and the slot calendar of one system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams<S> {
    /// Number of vehicles available each day.
    pub n_vehicles: usize,
    /// Penalty for assigning a slot outside the customer's preferences.
    pub alpha: S,
    /// Delay penalty per hour of late arrival.
    pub beta: S,
    /// Travel hours per distance unit.
    pub travel_coeff: S,
    /// On-site service duration in hours.
    pub service_duration: S,
    pub calendar: SlotCalendar<S>,
}

impl<S: Scalar> SystemParams<S> {
    pub fn new(
        n_vehicles: usize,
        alpha: S,
        beta: S,
        travel_coeff: S,
        service_duration: S,
        calendar: SlotCalendar<S>,
    ) -> Result<Self, DomainError> {
        if n_vehicles == 0 {
            return Err(DomainError::NoVehicles);
        }
        if alpha < S::zero() {
            return Err(DomainError::BadParameter {
                name: "alpha",
                requirement: ">= 0",
                value: alpha.as_f64(),
            });
        }
        if beta < S::zero() {
            return Err(DomainError::BadParameter {
                name: "beta",
                requirement: ">= 0",
                value: beta.as_f64(),
            });
        }
        if travel_coeff <= S::zero() {
            return Err(DomainError::BadParameter {
                name: "travel_coeff",
                requirement: "> 0",
                value: travel_coeff.as_f64(),
            });
        }
        if service_duration < S::zero() {
            return Err(DomainError::BadParameter {
                name: "service_duration",
                requirement: ">= 0",
                value: service_duration.as_f64(),
            });
        }
        Ok(Self {
            n_vehicles,
            alpha,
            beta,
            travel_coeff,
            service_duration,
            calendar,
        })
    }

    /// Re-checks the constructor invariants; used on deserialized values.
    pub fn validate(&self) -> Result<(), DomainError> {
        self.calendar.validate()?;
        Self::new(
            self.n_vehicles,
            self.alpha,
            self.beta,
            self.travel_coeff,
            self.service_duration,
            self.calendar.clone(),
        )
        .map(|_| ())
    }
}

/// One service request: where it is, when it arrived, and which slots the
/// customer proposed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Customer<S> {
    pub id: CustomerId,
    pub coords: Point<S>,
    /// Day the request arrived (0-based; pre-existing customers use day 0).
    pub arrival_day: u32,
    /// Hours from day start at which the request arrived.
    pub arrival_time: S,
    /// Distinct preferred slots, all within the lookahead window of
    /// `arrival_day`.
    pub preferences: Vec<SlotId>,
}

impl<S: Scalar> Customer<S> {
    pub fn prefers(&self, slot: SlotId) -> bool {
        self.preferences.contains(&slot)
    }

    pub fn validate(&self, calendar: &SlotCalendar<S>) -> Result<(), DomainError> {
        for (i, &p) in self.preferences.iter().enumerate() {
            if self.preferences[..i].contains(&p) {
                return Err(DomainError::DuplicatePreference {
                    customer: self.id,
                    day: p.day,
                    half: p.half,
                });
            }
            if p.half < 1 || p.half > calendar.slots_per_day() {
                return Err(DomainError::PreferenceBadHalf {
                    customer: self.id,
                    day: p.day,
                    half: p.half,
                    slots_per_day: calendar.slots_per_day(),
                });
            }
            if !calendar.is_assignable(self.arrival_day, p) {
                return Err(DomainError::PreferenceOutsideLookahead {
                    customer: self.id,
                    day: p.day,
                    half: p.half,
                    arrival_day: self.arrival_day,
                    lo: self.arrival_day + 1,
                    hi: self.arrival_day + calendar.lookahead_days(),
                });
            }
        }
        Ok(())
    }
}

/// Zero if the chosen slot is preferred, `alpha` otherwise.
pub fn assignment_penalty<S: Scalar>(prefs: &[SlotId], chosen: SlotId, alpha: S) -> S {
    if prefs.contains(&chosen) {
        S::zero()
    } else {
        alpha
    }
}

/// Travel hours between two points: the travel coefficient times the
/// Euclidean distance. Symmetric, zero only between identical points.
pub fn travel_time<S: Scalar>(params: &SystemParams<S>, p: Point<S>, q: Point<S>) -> S {
    params.travel_coeff * p.dist(&q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cal() -> SlotCalendar<f64> {
        SlotCalendar::default_two_slot()
    }

    fn params() -> SystemParams<f64> {
        SystemParams::new(2, 2.0, 3.0, 1.0, 0.6667, cal()).unwrap()
    }

    #[test]
    fn assignable_slots_cover_the_next_lookahead_days() {
        let c = cal();
        // Day 1 arrivals may take the 10 slots of days 2..=6.
        let slots = c.assignable_slots(1);
        assert_eq!(slots.len(), 10);
        assert_eq!(slots.first().unwrap(), &SlotId::new(2, 1));
        assert_eq!(slots.last().unwrap(), &SlotId::new(6, 2));

        // At the horizon start the assignable ordinals are exactly 1..=10.
        let slots0 = c.assignable_slots(0);
        let ords: Vec<u32> = slots0.iter().map(|s| s.ordinal(2)).collect();
        assert_eq!(ords, (1..=10).collect::<Vec<_>>());

        // Next-day morning comes first.
        assert_eq!(c.assignable_slots(2)[0], SlotId::new(3, 1));
    }

    #[test]
    fn consecutive_assignable_sets_overlap_by_all_but_one_day() {
        let c = cal();
        for t in 0..50 {
            let a = c.assignable_slots(t);
            let b = c.assignable_slots(t + 1);
            let shared = a.iter().filter(|s| b.contains(s)).count();
            assert_eq!(
                shared,
                (c.lookahead_days() as usize - 1) * c.slots_per_day() as usize
            );
        }
    }

    #[test]
    fn slot_windows_match_the_day_halves() {
        let c = cal();
        assert_eq!(c.slot_window(SlotId::new(3, 1)), (0.0, 5.0));
        assert_eq!(c.slot_window(SlotId::new(3, 2)), (4.0, 9.0));

        let single = SlotCalendar::<f64>::new(5, 9.0, vec![(0.0, 9.0)]).unwrap();
        assert_eq!(single.slot_window(SlotId::new(1, 1)), (0.0, 9.0));
    }

    #[test]
    fn windows_never_leave_the_day() {
        assert!(SlotCalendar::<f64>::new(5, 9.0, vec![(0.0, 9.5)]).is_err());
        assert!(SlotCalendar::<f64>::new(5, 9.0, vec![(-0.1, 5.0)]).is_err());
        assert!(SlotCalendar::<f64>::new(5, 9.0, vec![(5.0, 4.0)]).is_err());
    }

    #[test]
    fn ordinal_round_trips() {
        for n_s in [1u8, 2, 3, 5] {
            for ordinal in 1..=10_000u32 {
                let slot = SlotId::from_ordinal(ordinal, n_s);
                assert_eq!(slot.ordinal(n_s), ordinal);
            }
        }
        // Ordinals increase with (day, half).
        let mut prev = 0;
        for day in 1..=20 {
            for half in 1..=2 {
                let o = SlotId::new(day, half).ordinal(2);
                assert!(o > prev);
                prev = o;
            }
        }
    }

    #[test]
    fn penalty_only_outside_preferences() {
        let prefs = [SlotId::new(2, 1), SlotId::new(3, 2)];
        assert_eq!(assignment_penalty(&prefs, SlotId::new(2, 1), 2.0), 0.0);
        assert_eq!(assignment_penalty(&prefs, SlotId::new(2, 2), 2.0), 2.0);
        assert_eq!(assignment_penalty(&prefs, SlotId::new(2, 2), 0.0), 0.0);
    }

    #[test]
    fn travel_time_examples() {
        let p = params();
        let a = Point::new(1.0, 1.0);
        assert_eq!(travel_time(&p, a, a), 0.0);

        let mut p15 = params();
        p15.travel_coeff = 1.5;
        assert!(
            (travel_time(&p15, Point::new(1.0, 1.0), Point::new(1.0, 2.0)) - 1.5).abs() < 1e-12
        );

        let mut p2 = params();
        p2.travel_coeff = 2.0;
        let t = travel_time(&p2, Point::new(0.0, 0.0), Point::new(2.0, 2.0));
        assert!((t - 4.0 * 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn travel_time_symmetry_and_triangle_inequality() {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        let p = params();
        for _ in 0..2_000 {
            let mut pt = || Point::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let (a, b, c) = (pt(), pt(), pt());
            let ab = travel_time(&p, a, b);
            assert_eq!(ab, travel_time(&p, b, a));
            assert!(ab <= travel_time(&p, a, c) + travel_time(&p, c, b) + 1e-12);
        }
    }

    #[test]
    fn customer_validation_names_the_violation() {
        let c = Customer {
            id: CustomerId(7),
            coords: Point::new(0.5, 0.5),
            arrival_day: 2,
            arrival_time: 1.0,
            preferences: vec![SlotId::new(9, 1)],
        };
        let err = c.validate(&cal()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("customer 7"), "{msg}");
        assert!(msg.contains("outside the lookahead window"), "{msg}");
    }

    #[test]
    fn works_for_f32_too() {
        let c: SlotCalendar<f32> = SlotCalendar::default_two_slot();
        assert_eq!(c.slot_window(SlotId::new(1, 2)), (4.0f32, 9.0f32));
        let p: SystemParams<f32> =
            SystemParams::new(1, 2.0, 3.0, 1.0, 0.5, SlotCalendar::default_two_slot()).unwrap();
        let d = travel_time(&p, Point::new(0.0f32, 0.0), Point::new(3.0, 4.0));
        assert!((d - 5.0).abs() < 1e-5);
    }
}
