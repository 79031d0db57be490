//! Shared test support for the workspace.
//!
//! [`oracle`] holds brute-force reference implementations that are
//! deliberately written with different algorithms than the library
//! (point-set morphology, flood fill, sorting-based ranks, numeric
//! differentiation) so agreement between the two is meaningful.
//! [`gen`] holds seeded random-input builders for property and
//! differential tests.
//!
//! Oracle functions favor clarity over speed and panic on misuse;
//! they are not part of any shipped artifact.

pub mod gen;
pub mod oracle;
