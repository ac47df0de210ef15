pub mod chart;
pub mod check;
pub mod dynamics;
pub mod error;
pub mod lie2;
pub mod surface;
pub mod symexpr;
pub mod tensor;
pub mod walker4;

pub use chart::{Chart, Chart2, Chart4, Sampling};
pub use check::Verdict;
pub use error::{Error, Result};
pub use surface::{Connection2, OneForm2, TwoForm2};
pub use symexpr::ScalarField;
