mod ablate;
mod evaluate;
mod fit_em;
mod fit_moe;
mod simulate;

pub use ablate::cmd_ablate_alpha;
pub use evaluate::cmd_evaluate;
pub use fit_em::{cmd_fit_em, EmCheckpoint};
pub use fit_moe::cmd_fit_moe;
pub use simulate::cmd_simulate;
