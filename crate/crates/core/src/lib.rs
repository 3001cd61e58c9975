//! Forward models and parameter estimation for cavity electromechanical devices.

pub mod circuit;
pub mod consts;
pub mod device;
pub mod device_file;
pub mod dynamics;
pub mod electrostatics;
pub mod error;
pub mod fitting;
pub mod linalg;
pub mod pipelines;
pub mod scalar;
pub mod thermometry;
pub mod tls;
pub mod units;

pub use error::{Error, Result};
pub use scalar::Real;

pub type TwoModeSystemF64 = dynamics::TwoModeSystem<f64>;
pub type TwoModeSystemF32 = dynamics::TwoModeSystem<f32>;
pub type MechanicalModeF64 = device::MechanicalMode<f64>;
pub type MicrowaveModeF64 = device::MicrowaveMode<f64>;
pub type DeviceRecordF64 = device::DeviceRecord<f64>;
pub type EquivalentCircuitF64 = circuit::EquivalentCircuit<f64>;
pub type BathSpecF64 = dynamics::BathSpec<f64>;
pub type AmplifierChainF64 = thermometry::AmplifierChain<f64>;
pub type FitResultF64 = fitting::FitResult<f64>;
pub type TlsParamsF64 = tls::TlsParams<f64>;
