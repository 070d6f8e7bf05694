//! File formats, image export and the batch segmentation pipeline.

pub mod image;
pub mod pipeline;
pub mod record;
pub mod tfr1;

pub use self::image::{export_image, render_gray, ImageOptions, ImageScale, Normalize};
pub use pipeline::{
    effective_workers, preprocess_batch, read_image, read_manifest, segment, segment_image, BatchConfig, BatchInput, BatchSummary, ManifestEntry, SegmentPlan,
    SegmentSpan, Transform, TransformParams,
};
pub use record::{
    read_record, read_signal, sidecar_path, write_record, write_signal, MultichannelRecord, ReadOptions,
    RecordFormat,
};
pub use tfr1::{Payload, Tfr1};
