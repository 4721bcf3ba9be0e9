pub mod error;
pub mod field;
pub mod geometry;
pub mod lab;
pub mod modelspectra;
pub mod operator;
pub mod oscillator;
pub mod quadrature;
pub mod scalar;
pub mod table;

pub use error::{Error, Result};
pub use scalar::{Cplx, Real};

/// Double-precision instances of the generic types.
pub type Metric = geometry::BandMetric<f64>;
pub type Field = field::FieldProfile<f64>;
pub type Grid = operator::GridSpec<f64>;
pub type Operator = operator::DiscreteOperator<f64>;
pub type Eigen = operator::EigenResult<f64>;
pub type Quasimode = oscillator::Order2Quasimode<f64>;
pub type Bundle = oscillator::QuasimodeBundle<f64>;
pub type Complex = scalar::Cplx<f64>;
