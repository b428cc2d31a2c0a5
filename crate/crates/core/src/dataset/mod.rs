//! Trace ingestion, flow extraction, retrospective labeling and error-sample generation.

mod errors;
mod flow;
mod reconstruct;
mod sft;
mod trace;

pub use errors::{
    generate_error_dataset, oracle_agrees, ErrorDatasetError, MutationKind, DEFAULT_ERROR_COUNT, DEFAULT_ORDER_RATIO,
    SEQ_JUMP_RANGE,
};
pub use flow::{extract_flows, Completeness, Flow, FlowSummary};
pub use reconstruct::{
    reconstruct_flows, reconstruct_labels, LabeledSample, Provenance, ReceiveContext, ReconstructError,
    ReconstructedFlow, SkipRecord, MAX_SKIP_RATIO,
};
pub use sft::{emit_sft, load_sft, read_sft, write_sft, SftError, SftFormat};
pub use trace::{
    ingest_reader, ingest_trace, transcript_to_trace, write_trace, FiveTuple, Ingested, Reject, TraceError,
    TraceRecord, MAX_REJECT_RATIO, PROTO_TCP,
};
