//! Dimension estimation: box counting under several metrics, critical
//! exponents from orbit counting, Patterson-Sullivan samples and local
//! dimension estimators, and inequality gates.

mod boxcount;
mod exponent;
mod gates;
mod measure;

pub use boxcount::{
    box_count, box_count_real, fit_counts, geometric_scales, gromov_net_count, heis_rows, linear_fit, DimEstimate,
    FitPolicy, MetricTag, WindowFit,
};
pub use exponent::{critical_exponent, ExponentEstimate};
pub use gates::{balogh_check, ly_gate, theorem_a_gate, theorem_c_gate, BaloghReport, Gate, BALOGH_SLACK};
pub use measure::{
    fiber_transverse_dims, pointwise_dim, ps_sample, FiberParams, FiberTransverse, LocalDims, LocalFit, WeightedCloud,
};
