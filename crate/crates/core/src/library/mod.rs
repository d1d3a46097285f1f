//! Recorded vocal dataset: ingestion, the vocal matrix and singer playlists.

mod ingest;
pub mod manifest;
mod matrix;
mod playlist;
mod sample;
mod store;

pub use ingest::{ingest_audio, ingest_sample, IngestConfig};
pub use manifest::{
    validate_manifest, Finding, FindingKind, Manifest, ManifestEntry, ValidationReport,
    MANIFEST_SCHEMA_VERSION,
};
pub use matrix::{build_matrix, query_matrix, BucketConfig, CellKey, VocalMatrix};
pub use playlist::{assign_playlists, GroupingConfig, Playlist, PlaylistAssignment, SINGER_COUNT};
pub use sample::{SampleId, Technique, VocabularyCategory, VocalSample, VoicePart};
pub use store::{build_manifest, DatasetStats, SampleLibrary};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LibraryError {
    #[error("cannot decode audio `{path}`: {reason}")]
    Undecodable { path: String, reason: String },
    #[error("sample `{0}` has no audio")]
    Empty(String),
    #[error("performance sample `{0}` has no voiced hops")]
    Unpitched(String),
    #[error("no performance samples")]
    EmptyPerformanceSet,
    #[error("voice part {0} empty")]
    EmptyVoicePart(VoicePart),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = LibraryError> = std::result::Result<T, E>;
