//! Simulation and optimization toolkit for committing service time slots to
//! stochastically arriving customers and routing a vehicle fleet day by day.
//!
//! The pipeline: [`instance`] generates seeded scenarios of arriving
//! service requests; [`engine`] simulates the day-by-day decision process
//! of assigning each arrival a future slot and routing every evening;
//! [`policies`] provides the assignment rules (uniform random,
//! segmentation, rollout-enhanced variants, scenario-based planning);
//! [`routing`] evaluates and solves the soft-time-window routing problems
//! behind each day; [`bench`] runs seeded policy comparisons and writes
//! reports.
//!
//! Everything numeric is generic over [`scalar::Scalar`] (`f32` or `f64`);
//! the crate root re-exports `f64` aliases for the common types.

pub mod bench;
pub mod domain;
pub mod engine;
pub mod instance;
pub mod policies;
pub mod routing;
pub mod scalar;

pub use domain::{CustomerId, SlotId};
pub use instance::SystemPreset;
pub use scalar::Scalar;

/// `f64` aliases for the generic core types.
pub type Point = domain::Point<f64>;
pub type SlotCalendar = domain::SlotCalendar<f64>;
pub type SystemParams = domain::SystemParams<f64>;
pub type Customer = domain::Customer<f64>;
pub type GenParams = instance::GenParams<f64>;
pub type Instance = instance::Instance<f64>;
pub type RoutingTask = routing::RoutingTask<f64>;
pub type Job = routing::Job<f64>;
pub type RouteEvaluation = routing::RouteEvaluation<f64>;
pub type State = engine::State<f64>;
pub type EpisodeResult = engine::EpisodeResult<f64>;
pub type Metrics = bench::Metrics<f64>;
pub type BenchConfig = bench::BenchConfig<f64>;
