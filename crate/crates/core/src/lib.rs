pub mod analysis;
pub mod error;
pub mod hyperangular;
pub mod hyperradial;
pub mod io;
pub mod model;
pub mod numerics;
pub mod twobody;

pub use error::{Error, Result};
