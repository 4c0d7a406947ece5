//! Numerical checks of the standing assumptions, the constants ledger and
//! the decay conclusions.

pub mod decay;
pub mod ledger;
pub mod scans;

pub use decay::{
    exponential_decay_check, laplace_tail_bound_check, minimal_regularity, rapid_decay_check,
    regularity_threshold, DecayKind, DecayReport, TailBoundCheck,
};
pub use ledger::{compute_ledger, ConstantsLedger};
pub use scans::{
    c13_bound_check, dolgopyat_scan, estimate_c1, estimate_c2, oscillatory_bound_check,
    rapid_scan, C13Check, C1Estimate, C2Estimate, DolgopyatScan, GridMax, OscillatoryCheck,
    RapidScan,
};
