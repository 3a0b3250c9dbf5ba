mod checks;
mod record;

pub use checks::*;
pub use record::*;
