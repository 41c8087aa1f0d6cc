//! Desk-scale simulator of multiphoton interference in a polarization-split
//! Mach-Zehnder interferometer.
//!
//! The library is organized the way the light travels:
//!
//! * [`fock`] — sparse Fock states over labeled modes (path × polarization ×
//!   temporal bin) and the creation-operator algebra that applies arbitrary
//!   mode unitaries with full bosonic √n! bookkeeping.
//! * [`elements`] — beam splitters, a polarizing beam splitter, wave plates,
//!   path delays and polarizers, composed into [`elements::Circuit`]s.
//! * [`spectral`] — the Gaussian joint spectral model of the photon-pair
//!   source: coherence lengths, wave-packet overlap at the input beam
//!   splitter, Hong-Ou-Mandel dips and interference envelopes.
//! * [`experiment`] — the concrete table: pair source (with optional Werner
//!   admixture), input beam splitter with adjustable path delay ΔL₁, the
//!   modified Mach-Zehnder (PBS → HWP → delay ΔL₂ → output BS), detector
//!   splitting, scans and seeded Poisson count sampling.
//! * [`analysis`] — visibilities, damped Gauss-Newton fits of fringes and
//!   Gaussian envelopes, and fringe-amplitude extraction for envelope scans.
//!
//! Conventions (printed in every report, asserted in tests): beam splitters
//! are symmetric with transmitted amplitude 1/√2 and reflected amplitude
//! i/√2; the PBS relabels without a reflection phase (H transmits, V
//! reflects); photons on a delayed path acquire e^{+i·2πΔL/λ}; the fringe
//! phase is φ = 2π·ΔL₂/λ.

pub mod analysis;
pub mod elements;
pub mod experiment;
pub mod fock;
pub mod spectral;
