//! Ground sampling-unit records, per-instrument training sets, and the
//! repeated random-split protocol.

mod protocol;
mod record;
mod split;

pub use protocol::{
    build_training_set, predictions_csv, run_protocol, runs_csv, write_archive, ProtocolOutcome,
    RunResult,
};
pub use record::{
    load_esu_csv, write_esu_csv, EsuLoad, EsuRecord, Instrument, LandCover, RowRejection,
    ESU_HEADER, NON_VEGETATED_MAX_LAI, N_BANDS,
};
pub use split::{split, SplitSpec};
