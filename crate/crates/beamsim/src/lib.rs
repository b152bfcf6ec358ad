//! Desk-scale, seeded system-level simulator for a downlink millimeter-wave
//! beamspace MU-MIMO cell.
//!
//! One multi-beam base station serves several multi-beam users over sparse
//! directional paths. The pipeline mirrors a real beam-management cycle:
//!
//! 1. [`training`] — multi-beam sweeps discover usable transmit/receive
//!    sectors, then beam combining selects each user's operating beam-pair
//!    set plus ranked fallback sets.
//! 2. [`grouping`] — users whose beam-pair sets collide on a transmit sector
//!    are arbitrated; losers switch to fallback sets or are deferred with
//!    carry-over priority for the next cycle.
//! 3. [`power`] — the admitted group's links are powered under a total-power
//!    budget and a per-beam cap (equal-split or priority policies), and the
//!    resulting sum rate is evaluated with or without side-lobe interference.
//!
//! [`channel`] holds the radio primitives (sectored-antenna gain,
//! log-distance path loss, thermal noise, SINR, Shannon rate), [`scenario`]
//! the cell description, [`config`] the text-format loader, and
//! [`experiment`] the canned sweep runners behind the CLI.
//!
//! Everything is deterministic: all randomness flows through one seeded
//! generator, and identical inputs reproduce output files byte for byte.

pub mod channel;
pub mod config;
pub mod error;
pub mod experiment;
pub mod grouping;
pub mod power;
pub mod scenario;
pub mod training;

pub use error::Error;
