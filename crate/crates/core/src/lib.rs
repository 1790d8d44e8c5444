//! Phase-precoded compute-and-forward over Gaussian-integer lattices.
//!
//! Transmitters send codewords of a Voronoi codebook `L / aL`; a relay
//! decodes an integer combination of them. Each transmitter may first rotate
//! its codeword by a phase chosen at the relay from a small codebook.

pub mod coeff_search;
pub mod cof;
pub mod enumeration;
pub mod error;
pub mod gaussian;
pub mod lattice;
pub mod precoding;
pub mod sim;
pub mod verify;

pub use coeff_search::{best_coefficients, enumerate_candidates, SearchProblem};
pub use cof::{computation_rate, ChannelState, GramMatrix, NetworkEquation};
pub use error::{Error, Result};
pub use gaussian::GaussInt;
pub use lattice::{ComplexLattice, LatticeDescription, VoronoiCodebook};
pub use precoding::{select_precoder, PhaseCodebook, PhasePrecoder, PrecoderSelection};
pub use sim::{run_sweep, EERPoint, SimConfig};
