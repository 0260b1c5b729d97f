//! Numerical engine for the combinatorial Fredholm-module cocycle on the
//! Cantor dust.
//!
//! The building blocks are
//!
//! * [`fredholm`]: the fixed operators `F`, `epsilon`, `M` of the square
//!   module and the per-square trace kernel;
//! * [`geometry`]: square IFS presets with exact triadic coordinates;
//! * [`cantor`]: exact Cantor function values and the dust-to-torus map;
//! * [`cocycle`]: `phi_n`, the subdivision sum, pairings and residuals;
//! * [`oracle`]: torus quadrature, preset catalogue and projection fields.

pub mod cantor;
pub mod cocycle;
pub mod fredholm;
pub mod geometry;
pub mod observable;
pub mod oracle;
pub mod presets;
pub mod summation;

pub use cocycle::{CocycleError, CocycleReport, EngineConfig};
pub use fredholm::{CMatrix, VertexValues};
pub use geometry::IfsPreset;
pub use observable::{Mode, Observable, ObservableClass};
