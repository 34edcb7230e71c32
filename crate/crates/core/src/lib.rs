//! Intrinsic interaction dynamics on Riemannian manifolds.
//!
//! Particles `x₁..x_N` with masses `m₁..m_N` move under the velocity field
//!
//! ```text
//! vᵢ = Σ_{j≠i} mⱼ · 2 g'(d(xᵢ, xⱼ)²) · log_{xᵢ} xⱼ
//! ```
//!
//! where `g` is an attractive interaction profile. For attractive profiles
//! and initial data inside a small enough geodesic ball the ensemble
//! contracts to a single point; the crate simulates this, evaluates energy,
//! diameter and rate functionals along trajectories, and fits decay rates.
//!
//! ```
//! use geoconsensus::prelude::*;
//!
//! let m = So3;
//! let scheme = SamplingScheme::AxisAngle { radius: std::f64::consts::FRAC_PI_4 };
//! let points = sample_ball(&m, &m.origin(), scheme, 1, 10).unwrap();
//! let ensemble = ParticleEnsemble::uniform(m, points).unwrap();
//! let p = PotentialSpec::power_law(2.0).unwrap();
//! let cfg = SimulationConfig::new(0.01, 1.0, 10, m.origin(), std::f64::consts::FRAC_PI_4);
//! let traj = simulate(&ensemble, &p, &cfg).unwrap();
//! assert!(diameter(traj.states.last().unwrap()) < diameter(&ensemble));
//! ```

pub mod analysis;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod io;
pub mod manifold;
pub mod potential;
pub mod verify;

pub use error::{Error, Result};

/// The common imports.
pub mod prelude {
    pub use crate::analysis::{fit_exponential, fit_power, predicted_rate, RateFit, RateModel, RatePrediction};
    pub use crate::diagnostics::{
        consensus_integral, diameter, interaction_energy, w2_to_delta, weak_functional, TimeSeriesRecord,
    };
    pub use crate::dynamics::{rk4_step, simulate, velocity_field, ParticleEnsemble, SimulationConfig, Trajectory};
    pub use crate::error::{Error, Result};
    pub use crate::manifold::{
        frechet_mean, sample_ball, Euclidean, Hyperbolic, Manifold, ManifoldDescriptor, ManifoldKind,
        SamplingScheme, So3, Sphere,
    };
    pub use crate::potential::{c_mu, radii, AttractivenessClass, PotentialKind, PotentialSpec};
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/manifolds.md")]
    pub mod manifolds {}
    #[doc = include_str!("../../../book/src/potentials.md")]
    pub mod potentials {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    pub mod dynamics {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    pub mod diagnostics {}
    #[doc = include_str!("../../../book/src/rates.md")]
    pub mod rates {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
