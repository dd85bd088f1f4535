mod bench;
mod bruteforce;
mod compile;
mod eval;
mod train;

pub use bench::cmd_bench;
pub use bruteforce::cmd_bruteforce;
pub use compile::cmd_compile;
pub use eval::cmd_eval;
pub use train::cmd_train;
