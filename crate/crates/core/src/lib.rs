pub mod channel;
pub mod diagnostics;
pub mod ergodic;
pub mod error;
pub mod mc;
pub mod oracle;
pub mod outage;
pub mod presets;
pub mod quad;
pub mod scenario;
pub mod specfun;

pub use error::{Error, Result};
