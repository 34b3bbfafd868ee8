//! Rate kernels, coherence diagnostics and phase-boundary scans.

pub mod coherence;
pub mod kernel;
pub mod sweep;

pub use coherence::{delta_m_spectrum, detect_ci, CiConfig, CiVerdict, DeltaM, DeltaMConfig};
pub use kernel::{
    convolve, derivative4, extract_rate_kernel, integrated_rate, IntegratedRate, KernelConfig,
    RateKernel,
};
pub use sweep::{
    analyze_point, sweep_phase_boundary, Boundary, BoundaryEstimate, PhaseRecord, PointRunner,
    RelaxOutcome, SweepConfig, SweepFile, SweepOutcome, CSV_HEADER,
};
