//! Depinning forces, discommensurations and invariant ordered circles for
//! tilted Frenkel-Kontorova chains, with the associated area-preserving
//! twist map as an independent cross-check.
//!
//! The chain has energy `W = Σ h(x_n, x_{n+1}) - F x_n` and evolves by the
//! gradient flow `ẋ_n = -h2(x_{n-1}, x_n) - h1(x_n, x_{n+1}) + F`.
//!
//! * [`model`]: generating functions, tilt, builtin chains, band extension.
//! * [`config`]: periodic and windowed configurations, order, translations.
//! * [`flow`]: integration, pinned/sliding classification, depinning forces.
//! * [`rotation`]: Farey neighbours, mediant sequences, one-sided limits.
//! * [`disc`]: discommensurations, sliding fronts, gluing, Morse indices.
//! * [`twistmap`]: map iteration, periodic orbits, manifolds, lobe areas.
//! * [`ioc`]: equilibrium catalogs, invariant ordered circles, minimax.
//! * [`cli`]: run configurations and artifact writers behind `depinn`.

pub mod error;
pub mod linalg;
pub mod config;
pub mod model;
pub mod flow;
pub mod rotation;
pub mod disc;
pub mod twistmap;
pub mod ioc;
pub mod cli;

pub use error::{Error, Result};
