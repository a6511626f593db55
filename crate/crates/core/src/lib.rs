//! Finite-truncation models of étale action groupoids `X ⋊ Γ`: the convolution
//! algebra `C_c(G)`, word-length geometry, positive definite functions,
//! reduced-norm estimates and the `L^p_μ` state-extension dichotomy.

pub mod algebra;
pub mod error;
pub mod exotic;
pub mod group;
pub mod kernels;
pub mod metric;
pub mod model;
pub mod report;
pub mod spectral;

pub use algebra::{CcFunction, TermRecord};
pub use error::{Error, Result};
pub use group::{GroupBackend, GroupElem, Word};
pub use kernels::{Kernel, KernelSpec};
pub use model::{GroupoidElement, GroupoidModel, MeasureContext, UnitId};
