pub mod error;
pub mod forward;
pub mod kernel;
pub mod optimizer;
pub mod sensitivity;
pub mod special;
pub mod validation;

pub use error::{Error, Result};
pub use forward::{BleachShape, ExperimentGeometry};
pub use kernel::KernelTable;
pub use sensitivity::SensitivityValue;
