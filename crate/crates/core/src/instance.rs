//! Stochastic instance generation, the S1-S6 benchmark presets, instance
//! file serialization, and location-pool ingestion for case studies.
//!
//! An instance is the full realization of the exogenous information of one
//! simulated horizon: the pre-existing customers with their committed slots
//! plus the per-day arrival streams. Generation is a deterministic function
//! of `(SystemParams, GenParams, seed)`.

use std::path::Path;

use rand::seq::index;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Customer, CustomerId, Point, SlotCalendar, SlotId, SystemParams};
use crate::scalar::Scalar;

/// Version of the instance wire format. Bump on breaking schema changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("schema version mismatch: file has {found}, this build reads {expected}")]
    SchemaMismatch { found: u32, expected: u32 },
    #[error("instance document is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invariant violated: {0}")]
    Domain(#[from] crate::domain::DomainError),
    #[error("invariant violated: pre-existing customer {customer} is assigned slot ({day}, {half}) outside its preference set")]
    IncompatiblePreexistingAssignment {
        customer: CustomerId,
        day: u32,
        half: u8,
    },
    #[error("invariant violated: pre-existing customer {customer} is assigned slot ({day}, {half}) outside the day-0 assignable window")]
    PreexistingAssignmentOutOfWindow {
        customer: CustomerId,
        day: u32,
        half: u8,
    },
    #[error("invariant violated: customer {customer} listed under day {listed} has arrival_day {actual}")]
    ArrivalDayMismatch {
        customer: CustomerId,
        listed: u32,
        actual: u32,
    },
    #[error("invariant violated: day {day} arrivals are not sorted by arrival time")]
    ArrivalsUnsorted { day: u32 },
    #[error("invariant violated: arrival time {time} of customer {customer} is outside [0, {day_length})")]
    ArrivalTimeOutOfDay {
        customer: CustomerId,
        time: f64,
        day_length: f64,
    },
    #[error("invariant violated: duplicate customer id {0}")]
    DuplicateId(CustomerId),
    #[error("invariant violated: customer {customer} has {got} preferences, expected {expected}")]
    WrongPreferenceCount {
        customer: CustomerId,
        got: usize,
        expected: usize,
    },
    #[error(
        "generation parameters invalid: {requested} preferences per customer cannot be distinct \
         within a {available}-slot lookahead window"
    )]
    TooManyPreferences { requested: usize, available: usize },
    #[error("invariant violated: coordinates ({x}, {y}) of customer {customer} lie outside the service area [0, {area}]^2")]
    OutOfArea {
        customer: CustomerId,
        x: f64,
        y: f64,
        area: f64,
    },
    #[error("invariant violated: coordinates ({x}, {y}) of customer {customer} are not in the location pool")]
    NotInPool {
        customer: CustomerId,
        x: f64,
        y: f64,
    },
    #[error("generation parameters invalid: {0}")]
    BadGenParams(String),
}

#[derive(Debug, Error)]
pub enum PoolError {
    #[error("cannot read location pool: {0}")]
    Io(#[from] std::io::Error),
    #[error("location pool line {line}: expected \"x y\", got {content:?}")]
    Malformed { line: usize, content: String },
    #[error("empty pool")]
    Empty,
}

/// Parameters of the arrival process and geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams<S> {
    /// Number of arrival days T. Routing continues through the tail days.
    pub horizon_days: u32,
    /// Mean of the rounded-normal draw for pre-existing customers.
    pub n_pre_mean: S,
    /// Mean of the rounded-normal draw for each day's arrival count.
    pub n_daily_mean: S,
    /// Standard deviation of both count draws.
    pub count_sd: S,
    /// Side length of the square service area (customers uniform in it).
    pub area: S,
    pub depot: Point<S>,
    /// Preferred slots per customer.
    pub prefs_per_customer: usize,
    /// Case-study mode: sample coordinates uniformly with replacement from
    /// this pool instead of the square.
    #[serde(default = "Option::default")]
    pub location_pool: Option<Vec<Point<S>>>,
}

impl<S: Scalar> GenParams<S> {
    /// Square-area defaults: 10-day horizon, sd 3, 2-unit square with a
    /// central depot, three preferences per customer.
    pub fn square(n_pre_mean: S, n_daily_mean: S) -> Self {
        Self {
            horizon_days: 10,
            n_pre_mean,
            n_daily_mean,
            count_sd: S::from_f64(3.0),
            area: S::from_f64(2.0),
            depot: Point::new(S::one(), S::one()),
            prefs_per_customer: 3,
            location_pool: None,
        }
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        if self.horizon_days == 0 {
            return Err(InstanceError::BadGenParams(
                "horizon_days must be >= 1".into(),
            ));
        }
        if self.n_pre_mean < S::zero() || self.n_daily_mean < S::zero() {
            return Err(InstanceError::BadGenParams(
                "count means must be >= 0".into(),
            ));
        }
        if self.count_sd < S::zero() {
            return Err(InstanceError::BadGenParams("count_sd must be >= 0".into()));
        }
        if self.area <= S::zero() {
            return Err(InstanceError::BadGenParams("area must be > 0".into()));
        }
        if self.prefs_per_customer == 0 {
            return Err(InstanceError::BadGenParams(
                "prefs_per_customer must be >= 1".into(),
            ));
        }
        if let Some(pool) = &self.location_pool {
            if pool.is_empty() {
                return Err(InstanceError::BadGenParams(
                    "location pool must be non-empty".into(),
                ));
            }
        }
        Ok(())
    }
}

/// A customer that was committed before the horizon started, plus its slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preexisting<S> {
    pub customer: Customer<S>,
    pub slot: SlotId,
}

/// One full realization of a simulated horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance<S> {
    pub system: SystemParams<S>,
    pub gen: GenParams<S>,
    pub preexisting: Vec<Preexisting<S>>,
    /// `arrivals[t]` are day `t`'s customers ordered by arrival time.
    pub arrivals: Vec<Vec<Customer<S>>>,
}

impl<S: Scalar> Instance<S> {
    pub fn depot(&self) -> Point<S> {
        self.gen.depot
    }

    pub fn total_customers(&self) -> usize {
        self.preexisting.len() + self.arrivals.iter().map(Vec::len).sum::<usize>()
    }

    /// Checks every structural invariant, naming the first violation.
    pub fn validate(&self) -> Result<(), InstanceError> {
        self.system.validate()?;
        self.gen.validate()?;
        let cal = &self.system.calendar;
        if self.gen.prefs_per_customer > cal.slots_per_horizon() {
            return Err(InstanceError::TooManyPreferences {
                requested: self.gen.prefs_per_customer,
                available: cal.slots_per_horizon(),
            });
        }
        let check_prefs = |c: &Customer<S>| -> Result<(), InstanceError> {
            if c.preferences.len() != self.gen.prefs_per_customer {
                return Err(InstanceError::WrongPreferenceCount {
                    customer: c.id,
                    got: c.preferences.len(),
                    expected: self.gen.prefs_per_customer,
                });
            }
            Ok(())
        };
        let mut seen = std::collections::HashSet::new();

        let check_coords = |c: &Customer<S>| -> Result<(), InstanceError> {
            match &self.gen.location_pool {
                Some(pool) => {
                    if !pool.contains(&c.coords) {
                        return Err(InstanceError::NotInPool {
                            customer: c.id,
                            x: c.coords.x.as_f64(),
                            y: c.coords.y.as_f64(),
                        });
                    }
                }
                None => {
                    let inside = c.coords.x >= S::zero()
                        && c.coords.x <= self.gen.area
                        && c.coords.y >= S::zero()
                        && c.coords.y <= self.gen.area;
                    if !inside {
                        return Err(InstanceError::OutOfArea {
                            customer: c.id,
                            x: c.coords.x.as_f64(),
                            y: c.coords.y.as_f64(),
                            area: self.gen.area.as_f64(),
                        });
                    }
                }
            }
            Ok(())
        };

        for pre in &self.preexisting {
            let c = &pre.customer;
            c.validate(cal)?;
            check_prefs(c)?;
            check_coords(c)?;
            if !seen.insert(c.id) {
                return Err(InstanceError::DuplicateId(c.id));
            }
            if !cal.is_assignable(0, pre.slot) {
                return Err(InstanceError::PreexistingAssignmentOutOfWindow {
                    customer: c.id,
                    day: pre.slot.day,
                    half: pre.slot.half,
                });
            }
            if !c.prefers(pre.slot) {
                return Err(InstanceError::IncompatiblePreexistingAssignment {
                    customer: c.id,
                    day: pre.slot.day,
                    half: pre.slot.half,
                });
            }
        }

        for (t, day) in self.arrivals.iter().enumerate() {
            let t = t as u32;
            for pair in day.windows(2) {
                if pair[1].arrival_time < pair[0].arrival_time {
                    return Err(InstanceError::ArrivalsUnsorted { day: t });
                }
            }
            for c in day {
                c.validate(cal)?;
                check_prefs(c)?;
                check_coords(c)?;
                if !seen.insert(c.id) {
                    return Err(InstanceError::DuplicateId(c.id));
                }
                if c.arrival_day != t {
                    return Err(InstanceError::ArrivalDayMismatch {
                        customer: c.id,
                        listed: t,
                        actual: c.arrival_day,
                    });
                }
                if c.arrival_time < S::zero() || c.arrival_time >= cal.day_length() {
                    return Err(InstanceError::ArrivalTimeOutOfDay {
                        customer: c.id,
                        time: c.arrival_time.as_f64(),
                        day_length: cal.day_length().as_f64(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Rounds a count draw to the nearest integer and clamps below at zero.
pub fn round_count<S: Scalar>(draw: S) -> usize {
    let rounded = draw.round().as_f64();
    if rounded <= 0.0 {
        0
    } else {
        rounded as usize
    }
}

/// One rounded-normal count draw, clamped at zero.
pub fn sample_count<S: Scalar>(mean: S, sd: S, rng: &mut (impl Rng + ?Sized)) -> usize {
    let draw = if sd == S::zero() {
        mean
    } else {
        mean + sd * S::standard_normal(rng)
    };
    round_count(draw)
}

/// `n_p` distinct slots drawn uniformly without replacement from the slots
/// assignable on arrival day `t`, returned in ordinal order.
pub fn sample_preferences<S: Scalar>(
    t: u32,
    n_p: usize,
    calendar: &SlotCalendar<S>,
    rng: &mut (impl Rng + ?Sized),
) -> Vec<SlotId> {
    let slots = calendar.assignable_slots(t);
    assert!(
        n_p <= slots.len(),
        "cannot draw {n_p} distinct preferences from {} slots",
        slots.len()
    );
    let mut prefs: Vec<SlotId> = index::sample(rng, slots.len(), n_p)
        .iter()
        .map(|i| slots[i])
        .collect();
    prefs.sort();
    prefs
}

fn sample_point<S: Scalar>(gen: &GenParams<S>, rng: &mut (impl Rng + ?Sized)) -> Point<S> {
    match &gen.location_pool {
        Some(pool) => pool[rng.random_range(0..pool.len())],
        None => Point::new(
            rng.random_range(S::zero()..gen.area),
            rng.random_range(S::zero()..gen.area),
        ),
    }
}

/// Generates one instance deterministically from `(system, gen, seed)`.
///
/// Pre-existing customers get an assignment drawn uniformly from their own
/// preference set; arrival times are uniform in `[0, U)` and each day is
/// sorted by arrival time (ties broken by id).
pub fn generate_instance<S: Scalar>(
    system: &SystemParams<S>,
    gen: &GenParams<S>,
    seed: u64,
) -> Instance<S> {
    gen.validate().expect("generation parameters must be valid");
    let cal = &system.calendar;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut next_id = 0u64;

    let n_pre = sample_count(gen.n_pre_mean, gen.count_sd, &mut rng);
    let mut preexisting = Vec::with_capacity(n_pre);
    for _ in 0..n_pre {
        let coords = sample_point(gen, &mut rng);
        let preferences = sample_preferences(0, gen.prefs_per_customer, cal, &mut rng);
        let slot = preferences[rng.random_range(0..preferences.len())];
        preexisting.push(Preexisting {
            customer: Customer {
                id: CustomerId(next_id),
                coords,
                arrival_day: 0,
                arrival_time: S::zero(),
                preferences,
            },
            slot,
        });
        next_id += 1;
    }

    let mut arrivals = Vec::with_capacity(gen.horizon_days as usize);
    for t in 0..gen.horizon_days {
        let k = sample_count(gen.n_daily_mean, gen.count_sd, &mut rng);
        let mut day = Vec::with_capacity(k);
        for _ in 0..k {
            let coords = sample_point(gen, &mut rng);
            let arrival_time = rng.random_range(S::zero()..cal.day_length());
            let preferences = sample_preferences(t, gen.prefs_per_customer, cal, &mut rng);
            day.push(Customer {
                id: CustomerId(next_id),
                coords,
                arrival_day: t,
                arrival_time,
                preferences,
            });
            next_id += 1;
        }
        day.sort_by(|a, b| {
            a.arrival_time
                .partial_cmp(&b.arrival_time)
                .expect("arrival times are finite")
                .then(a.id.cmp(&b.id))
        });
        arrivals.push(day);
    }

    let inst = Instance {
        system: system.clone(),
        gen: gen.clone(),
        preexisting,
        arrivals,
    };
    debug_assert!(inst.validate().is_ok());
    inst
}

#[derive(Serialize, Deserialize)]
struct InstanceDocument<S> {
    schema_version: u32,
    #[serde(flatten)]
    instance: Instance<S>,
}

/// Serializes an instance to its versioned JSON document.
pub fn encode_instance<S: Scalar>(inst: &Instance<S>) -> String {
    let doc = InstanceDocument {
        schema_version: SCHEMA_VERSION,
        instance: inst.clone(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("instances always serialize");
    text.push('\n');
    text
}

/// Parses and validates an instance document; inverse of [`encode_instance`].
pub fn decode_instance<S: Scalar>(text: &str) -> Result<Instance<S>, InstanceError> {
    let doc: InstanceDocument<S> = serde_json::from_str(text)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(InstanceError::SchemaMismatch {
            found: doc.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    doc.instance.validate()?;
    Ok(doc.instance)
}

/// Parses a location pool: one `x y` pair per line, `#` starts a comment,
/// blank lines ignored. Duplicates are retained (the pool is a multiset).
pub fn parse_location_pool<S: Scalar>(text: &str) -> Result<Vec<Point<S>>, PoolError> {
    let mut pool = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let parse = |tok: Option<&str>| -> Option<f64> { tok.and_then(|t| t.parse().ok()) };
        match (parse(parts.next()), parse(parts.next()), parts.next()) {
            (Some(x), Some(y), None) => pool.push(Point::new(S::from_f64(x), S::from_f64(y))),
            _ => {
                return Err(PoolError::Malformed {
                    line: idx + 1,
                    content: raw.to_string(),
                })
            }
        }
    }
    if pool.is_empty() {
        return Err(PoolError::Empty);
    }
    Ok(pool)
}

/// Reads a location pool file. See [`parse_location_pool`] for the format.
pub fn load_location_pool<S: Scalar>(path: &Path) -> Result<Vec<Point<S>>, PoolError> {
    let text = std::fs::read_to_string(path)?;
    parse_location_pool(&text)
}

/// The six benchmark systems. All share alpha = 2, beta = 3, the two-slot
/// calendar, a 10-day horizon, and the 2-unit square with a central depot;
/// they differ in customer volume, fleet size, and cost coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SystemPreset {
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
}

impl SystemPreset {
    pub const ALL: [SystemPreset; 6] = [
        SystemPreset::S1,
        SystemPreset::S2,
        SystemPreset::S3,
        SystemPreset::S4,
        SystemPreset::S5,
        SystemPreset::S6,
    ];

    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "S1" => Some(Self::S1),
            "S2" => Some(Self::S2),
            "S3" => Some(Self::S3),
            "S4" => Some(Self::S4),
            "S5" => Some(Self::S5),
            "S6" => Some(Self::S6),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::S1 => "S1",
            Self::S2 => "S2",
            Self::S3 => "S3",
            Self::S4 => "S4",
            Self::S5 => "S5",
            Self::S6 => "S6",
        }
    }

    /// (n_pre, n_daily, n_vehicles, travel_coeff, service_duration)
    fn row(&self) -> (f64, f64, usize, f64, f64) {
        match self {
            Self::S1 => (30.0, 15.0, 2, 1.0, 0.6667),
            Self::S2 => (30.0, 15.0, 3, 1.5, 1.0),
            Self::S3 => (30.0, 15.0, 4, 2.0, 1.3333),
            Self::S4 => (40.0, 20.0, 2, 0.75, 0.5),
            Self::S5 => (40.0, 20.0, 3, 1.125, 0.75),
            Self::S6 => (40.0, 20.0, 4, 1.5, 1.0),
        }
    }

    pub fn system_params<S: Scalar>(&self) -> SystemParams<S> {
        let (_, _, n_v, p_tra, p_ser) = self.row();
        SystemParams::new(
            n_v,
            S::from_f64(2.0),
            S::from_f64(3.0),
            S::from_f64(p_tra),
            S::from_f64(p_ser),
            SlotCalendar::default_two_slot(),
        )
        .expect("presets are valid")
    }

    pub fn gen_params<S: Scalar>(&self) -> GenParams<S> {
        let (n_pre, n_daily, _, _, _) = self.row();
        GenParams::square(S::from_f64(n_pre), S::from_f64(n_daily))
    }
}

impl std::fmt::Display for SystemPreset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
