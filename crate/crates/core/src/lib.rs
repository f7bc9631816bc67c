//! Spectral densities of free multiplicative convolutions.
//!
//! A measure is described by its factored S-transform ([`measures`]). The
//! relation `z w S(w) = 1 + w` is cleared into a polynomial `P(w, z)`, whose
//! physical root branch gives the Green's function `G = (1+w)/z` and, by
//! Stieltjes inversion, the density ([`resolvent`]). Closed-form densities
//! ([`closedform`]), exact moment series ([`moments`]), the radial law of
//! isotropic matrices ([`isotropic`]) and Monte Carlo ensembles
//! ([`ensembles`]) provide independent checks.

pub mod cli;
pub mod closedform;
pub mod ensembles;
pub mod error;
pub mod isotropic;
pub mod measures;
pub mod moments;
pub mod poly;
pub mod quadrature;
pub mod resolvent;
pub mod roots;
pub mod series;

pub use error::{Error, Result};
pub use measures::{build_resolvent, MeasureSpec, ResolventPolynomial};
