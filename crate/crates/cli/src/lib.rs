//! File formats, reports and batch running for the `epd` tool.

pub mod batch;
pub mod newick;
pub mod report;
pub mod table;

pub use batch::run_batch_parallel;
pub use newick::{parse_newick, species_name, write_newick, NewickError};
pub use report::{read_instances, summary_text, write_instances, ReportError, Settings};
pub use table::{SpeciesTable, TableError, TableValues};
