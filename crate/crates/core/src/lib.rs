//! Numerical experiments around pointwise shadowing for continuous flows.
//!
//! The crate builds up from metric spaces and flows to pseudo-orbits, a
//! reparametrization-aware shadowing decision with replayable certificates,
//! box-cover chain-recurrence estimates, suspension flows over base
//! homeomorphisms, and a gallery of models with known behaviour.
//!
//! Every claim an operation makes is resolution-qualified: searches report
//! the grids they swept, falsifications carry the witness that failed, and
//! positive verdicts carry certificates that replay independently.

pub mod flow;
pub mod integrate;
pub mod io;
pub mod models;
pub mod noise;
pub mod pseudo_orbit;
pub mod recurrence;
pub mod reparam;
pub mod shadowing;
pub mod space;
pub mod suspension;
