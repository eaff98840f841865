//! Natarajan, graph and VC dimensions of finite behavior tables, with
//! enumerators for decision trees, forests and small neural networks, and
//! solvers for the matching sample-size upper bounds.
//!
//! ```
//! use natdim::{natarajan_dimension, LabelSpace, SearchBudget, TableBuilder};
//!
//! let mut b = TableBuilder::new(3, LabelSpace::new(3)?);
//! for row in [[1, 1, 1], [1, 2, 3], [2, 1, 3], [2, 2, 1]] {
//!     b.insert(&row);
//! }
//! let table = b.finish();
//! let r = natarajan_dimension(&table, &SearchBudget::default())?;
//! println!("d_N = {} ({:?})", r.dim, r.status);
//! # Ok::<(), natdim::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod growth;
pub mod harness;
pub mod model;
pub mod nn;
pub mod shatter;
pub mod signs;
pub mod trees;

pub use error::{Error, Result};
pub use model::{dedup_behaviors, BehaviorTable, LabelSpace, Sample, TableBuilder};
pub use shatter::{
    dimension, graph_dimension, is_g_shattered, is_n_shattered, is_shattered, is_vc_shattered, natarajan_dimension,
    vc_dimension, DimensionResult, SearchBudget, SearchStatus, ShatterMode, ShatterWitness,
};
