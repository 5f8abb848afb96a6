//! Exact and Monte Carlo engines.

pub mod exact;
pub mod explore;
pub mod mc;
pub mod transfer;
pub mod validity;
