//! Receiver-side digital chain: heterodyne detection, frequency and phase
//! recovery, filtering and quadrature extraction.

pub mod filters;
pub mod heterodyne;
pub mod phase;
pub mod quadrature;

pub use filters::{design_filter, FilterDesign, FilterKind, FilterPurpose};
pub use heterodyne::{
    calibrate_snu, dark_record, downconvert, estimate_frequency_offset, heterodyne_detect, ComplexBaseband, DetectorSpec, LoSpec,
    RealWaveform, SnuCalibration,
};
pub use phase::{estimate_phase, PhaseTrace, TraceOrigin};
pub use quadrature::{recover_quadratures, simulate_symbol_tier, QuadratureSamples};
