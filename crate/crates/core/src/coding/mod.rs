//! Desk-scale random binning: codebooks, typicality coding, error
//! simulation, exact equivocation and the covering experiment.

pub mod codebook;
pub mod covering;
pub mod equivocation;
pub mod rates;
pub mod sim;
pub mod typical;

pub use codebook::{Codebook, CodebookShape};
pub use covering::{covering_experiment, CoveringConfig, CoveringReport};
pub use equivocation::{exact_equivocation, EquivocationReport};
pub use rates::{derive_rates, BinningRates, UserRates};
pub use sim::{decode, encode, encode_failure_rate, simulate, EncodeOutcome, SimConfig, SimReport};
pub use typical::{is_jointly_typical, TypicalSet, TypicalityParams};
