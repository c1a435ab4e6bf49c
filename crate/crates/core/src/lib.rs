//! Mallows-family ranking models over finite and infinite permutations.
//!
//! Permutations are 1-based. A permutation's *word list* gives the rank of
//! each item; its *ranked list* gives the items from best to worst.
//!
//! ```
//! use mallows::io::parse_rankings;
//! use mallows::{fit, FitOptions, ModelKind};
//!
//! let data = parse_rankings("universe=open\n3;2|1|3\n1;1|2\n2;2|3\n", None).unwrap();
//! let model = fit(&data, &FitOptions { t: Some(1), ..FitOptions::new(ModelKind::Igm) }).unwrap();
//! assert_eq!(model.center[0], 2);
//! assert_eq!(model.thetas.len(), 1);
//! ```

pub mod data;
pub mod error;
pub mod experiments;
mod fenwick;
pub mod fit;
pub mod io;
pub mod perm;
pub mod regen;
pub mod sample;
pub mod select;

pub use data::{Observation, RankingDataset, Universe};
pub use error::{Error, Result};
pub use fit::{fit, fit_center, CenterOptions, CenterStrategy, FitOptions, FittedModel, ModelKind};
pub use perm::{CentralOrder, InversionTable, Permutation, TopTRanking};
pub use regen::{expected_component_length, RenewalSummary};
pub use sample::{DispersionVector, RowDistribution, RowSchedule};
pub use select::{select_t, SelectOptions, SelectionTrace};
