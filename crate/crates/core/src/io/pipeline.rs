//! Batch segmentation of multichannel recordings into TFR magnitude images.
//!
//! A batch writes two files into the output directory:
//!
//! * `tensor.f32`: every image back to back, each stored row-major as
//!   little-endian `f32` with row 0 the lowest frequency.
//! * `manifest.tsv`: one header line, then one line per image in
//!   (record, channel, segment) order with columns
//!   `record_id channel segment label byte_offset rows cols status`.
//!   Failed records or channels get a row with `status` = `error: …` and `-`
//!   in the fields that do not apply.
//!
//! Output bytes do not depend on the worker count.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::record::{read_record, MultichannelRecord, ReadOptions, RecordFormat};
use crate::signal::SampledSignal;
use crate::sst::{sst_cwt, sst_stft, SstParams};
use crate::tfr::{cwt, default_scale_grid, stft, StftParams};
use crate::wavelet::MorseWavelet;

pub const TENSOR_FILE: &str = "tensor.f32";
pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const MANIFEST_HEADER: &str = "record_id\tchannel\tsegment\tlabel\tbyte_offset\trows\tcols\tstatus";
/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SSQLAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentPlan {
    pub window_samples: usize,
    pub hop_samples: usize,
    pub drop_incomplete_tail: bool,
}

impl Default for SegmentPlan {
    fn default() -> Self {
        Self {
            window_samples: 5000,
            hop_samples: 224,
            drop_incomplete_tail: true,
        }
    }
}

impl SegmentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.window_samples == 0 || self.hop_samples == 0 {
            return Err(Error::invalid("segment window and hop must be positive"));
        }
        if self.hop_samples > self.window_samples {
            return Err(Error::invalid(format!(
                "segment hop {} exceeds window {}",
                self.hop_samples, self.window_samples
            )));
        }
        if !self.drop_incomplete_tail {
            return Err(Error::invalid("incomplete tail segments are not supported"));
        }
        Ok(())
    }
}

/// Samples `[start, start + len)` of every channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentSpan {
    pub index: usize,
    pub start: usize,
    pub len: usize,
}

/// Segment `i` starts at `i·hop`; there are `⌊(n − window)/hop⌋ + 1` of them.
pub fn segment(n_samples: usize, plan: &SegmentPlan) -> Result<Vec<SegmentSpan>> {
    plan.validate()?;
    if n_samples < plan.window_samples {
        return Err(Error::invalid(format!(
            "record of {n_samples} samples is shorter than the {}-sample window",
            plan.window_samples
        )));
    }
    let count = (n_samples - plan.window_samples) / plan.hop_samples + 1;
    Ok((0..count)
        .map(|index| SegmentSpan {
            index,
            start: index * plan.hop_samples,
            len: plan.window_samples,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Stft,
    Cwt,
    SstStft,
    SstCwt,
}

impl Transform {
    pub fn name(&self) -> &'static str {
        match self {
            Transform::Stft => "stft",
            Transform::Cwt => "cwt",
            Transform::SstStft => "sst-stft",
            Transform::SstCwt => "sst-cwt",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "stft" => Some(Transform::Stft),
            "cwt" => Some(Transform::Cwt),
            "sst-stft" => Some(Transform::SstStft),
            "sst-cwt" => Some(Transform::SstCwt),
            _ => None,
        }
    }
}

/// Per-segment transform settings. `stft.hop_samples` is the frame hop inside
/// a segment; CWT images keep every `stft.hop_samples`-th column so both
/// branches produce comparable widths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformParams {
    pub stft: StftParams,
    pub wavelet: MorseWavelet,
    pub voices_per_octave: usize,
    pub sst: SstParams,
}

impl Default for TransformParams {
    fn default() -> Self {
        Self {
            stft: StftParams::new(Default::default(), 224),
            wavelet: MorseWavelet::default(),
            voices_per_octave: 32,
            sst: SstParams::default(),
        }
    }
}

/// Magnitude image of one segment, `[bin][frame]`.
pub fn segment_image(x: &SampledSignal, transform: Transform, p: &TransformParams) -> Result<Array2<f32>> {
    let hop = p.stft.hop_samples.max(1);
    let decimate = |a: Array2<num_complex::Complex64>| {
        let cols: Vec<usize> = (0..a.ncols()).step_by(hop).collect();
        Array2::from_shape_fn((a.nrows(), cols.len()), |(r, c)| a[[r, cols[c]]].norm() as f32)
    };
    let cwt_params = || default_scale_grid(x.sample_rate_hz(), x.len(), p.wavelet, p.voices_per_octave);
    Ok(match transform {
        Transform::Stft => stft(x, &p.stft)?.values.mapv(|c| c.norm() as f32),
        Transform::SstStft => sst_stft(x, &p.stft, &p.sst)?.values.mapv(|c| c.norm() as f32),
        Transform::Cwt => decimate(cwt(x, &cwt_params()?)?.values),
        Transform::SstCwt => decimate(sst_cwt(x, &cwt_params()?, &p.sst)?.values),
    })
}

#[derive(Debug, Clone)]
pub enum BatchInput {
    Record {
        id: String,
        record: MultichannelRecord,
    },
    File {
        id: String,
        path: PathBuf,
        format: RecordFormat,
        options: ReadOptions,
    },
}

impl BatchInput {
    pub fn id(&self) -> &str {
        match self {
            BatchInput::Record { id, .. } | BatchInput::File { id, .. } => id,
        }
    }

    fn load(&self) -> Result<std::borrow::Cow<'_, MultichannelRecord>> {
        match self {
            BatchInput::Record { record, .. } => {
                record.validate()?;
                Ok(std::borrow::Cow::Borrowed(record))
            }
            BatchInput::File {
                path, format, options, ..
            } => Ok(std::borrow::Cow::Owned(read_record(path, *format, options)?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchConfig {
    pub plan: SegmentPlan,
    pub transform: Transform,
    pub params: TransformParams,
    /// Requested workers; 0 means one per available core. Further capped by
    /// `SSQLAB_THREADS`.
    pub workers: usize,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self {
            plan: SegmentPlan::default(),
            transform: Transform::SstStft,
            params: TransformParams::default(),
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub record_id: String,
    pub channel: Option<usize>,
    pub segment: Option<usize>,
    pub label: String,
    pub byte_offset: Option<u64>,
    pub rows: usize,
    pub cols: usize,
    /// `"ok"` or `"error: …"`.
    pub status: String,
}

impl ManifestEntry {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn byte_len(&self) -> u64 {
        (self.rows * self.cols * 4) as u64
    }

    fn to_line(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.record_id,
            opt(self.channel.map(|c| c.to_string())),
            opt(self.segment.map(|s| s.to_string())),
            if self.label.is_empty() { "-" } else { &self.label },
            opt(self.byte_offset.map(|o| o.to_string())),
            self.rows,
            self.cols,
            self.status
        )
    }

    fn failure(record_id: &str, channel: Option<usize>, label: &str, err: &Error) -> Self {
        Self {
            record_id: record_id.to_string(),
            channel,
            segment: None,
            label: label.to_string(),
            byte_offset: None,
            rows: 0,
            cols: 0,
            status: format!("error: {}", sanitize(&err.to_string())),
        }
    }
}

fn sanitize(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchSummary {
    pub tensor_path: PathBuf,
    pub manifest_path: PathBuf,
    pub images: usize,
    pub failures: usize,
    pub workers: usize,
    pub tensor_bytes: u64,
    /// SHA-256 of the tensor bytes followed by the manifest bytes, hex.
    pub content_hash: String,
    pub entries: Vec<ManifestEntry>,
}

impl BatchSummary {
    /// Successful images per (record, channel), in manifest order.
    pub fn segments_per_channel(&self) -> Vec<(String, usize, usize)> {
        let mut out: Vec<(String, usize, usize)> = Vec::new();
        for e in self.entries.iter().filter(|e| e.is_ok()) {
            let ch = e.channel.expect("ok entries carry a channel");
            match out.last_mut() {
                Some((id, c, n)) if *id == e.record_id && *c == ch => *n += 1,
                _ => out.push((e.record_id.clone(), ch, 1)),
            }
        }
        out
    }
}

/// Worker count after applying `SSQLAB_THREADS`.
pub fn effective_workers(requested: usize) -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let base = if requested == 0 { available } else { requested };
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&c| c > 0);
    cap.map_or(base, |c| base.min(c)).max(1)
}

/// Segments every channel of every input, transforms each segment and writes
/// the tensor and manifest into `out_dir`. A record that cannot be read,
/// has a different sample rate from the first readable record, or is too
/// short is reported in the manifest and the batch continues.
pub fn preprocess_batch(inputs: &[BatchInput], config: &BatchConfig, out_dir: &Path) -> Result<BatchSummary> {
    config.plan.validate()?;
    config.params.stft.validate()?;
    if inputs.is_empty() {
        return Err(Error::Empty("no input records".into()));
    }
    fs::create_dir_all(out_dir)?;
    let workers = effective_workers(config.workers);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;

    let tensor_path = out_dir.join(TENSOR_FILE);
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let mut tensor = BufWriter::new(File::create(&tensor_path)?);
    let mut hasher = Sha256::new();
    let mut entries = Vec::new();
    let mut offset = 0u64;
    let mut batch_fs: Option<f64> = None;

    for input in inputs {
        let id = sanitize(input.id());
        let record = match input.load() {
            Ok(r) => r,
            Err(e) => {
                entries.push(ManifestEntry::failure(&id, None, "", &e));
                continue;
            }
        };
        let label = sanitize(record.label.as_deref().unwrap_or(""));
        let fs = *batch_fs.get_or_insert(record.sample_rate_hz);
        if record.sample_rate_hz != fs {
            let e = Error::invalid(format!(
                "sample rate {} Hz differs from the batch rate {fs} Hz",
                record.sample_rate_hz
            ));
            entries.push(ManifestEntry::failure(&id, None, &label, &e));
            continue;
        }
        let spans = match segment(record.n_samples(), &config.plan) {
            Ok(s) => s,
            Err(e) => {
                entries.push(ManifestEntry::failure(&id, None, &label, &e));
                continue;
            }
        };
        let channels: Vec<usize> = (0..record.channel_count()).collect();
        for chunk in channels.chunks(workers) {
            let results: Vec<Result<Vec<Array2<f32>>>> = pool.install(|| {
                chunk
                    .par_iter()
                    .map(|&ch| channel_images(&record, ch, &spans, config))
                    .collect()
            });
            for (&ch, result) in chunk.iter().zip(results) {
                let images = match result {
                    Ok(images) => images,
                    Err(e) => {
                        entries.push(ManifestEntry::failure(&id, Some(ch), &label, &e));
                        continue;
                    }
                };
                for (span, img) in spans.iter().zip(images) {
                    let mut bytes = Vec::with_capacity(img.len() * 4);
                    for v in img.iter() {
                        bytes.extend_from_slice(&v.to_le_bytes());
                    }
                    tensor.write_all(&bytes)?;
                    hasher.update(&bytes);
                    entries.push(ManifestEntry {
                        record_id: id.clone(),
                        channel: Some(ch),
                        segment: Some(span.index),
                        label: label.clone(),
                        byte_offset: Some(offset),
                        rows: img.nrows(),
                        cols: img.ncols(),
                        status: "ok".into(),
                    });
                    offset += bytes.len() as u64;
                }
            }
        }
    }
    tensor.flush()?;

    let mut manifest = String::new();
    writeln!(manifest, "{MANIFEST_HEADER}").expect("string write");
    for e in &entries {
        writeln!(manifest, "{}", e.to_line()).expect("string write");
    }
    fs::write(&manifest_path, &manifest)?;
    hasher.update(manifest.as_bytes());
    let content_hash = hasher.finalize().iter().fold(String::new(), |mut s, b| {
        write!(s, "{b:02x}").expect("string write");
        s
    });

    let images = entries.iter().filter(|e| e.is_ok()).count();
    Ok(BatchSummary {
        tensor_path,
        manifest_path,
        images,
        failures: entries.len() - images,
        workers,
        tensor_bytes: offset,
        content_hash,
        entries,
    })
}

fn channel_images(
    record: &MultichannelRecord,
    channel: usize,
    spans: &[SegmentSpan],
    config: &BatchConfig,
) -> Result<Vec<Array2<f32>>> {
    let data: Vec<f64> = record.channels[channel].iter().map(|&v| v as f64).collect();
    spans
        .iter()
        .map(|span| {
            let x = SampledSignal::from_real(&data[span.start..span.start + span.len], record.sample_rate_hz)?
                .with_start_time(span.start as f64 / record.sample_rate_hz);
            segment_image(&x, config.transform, &config.params)
        })
        .collect()
}

/// Parses a manifest and checks that successful entries have strictly
/// increasing, contiguous byte offsets. When `tensor_len` is given the last
/// image must end exactly at the end of the tensor.
pub fn read_manifest(path: &Path, tensor_len: Option<u64>) -> Result<Vec<ManifestEntry>> {
    let reader = BufReader::new(File::open(path)?);
    let perr = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut entries = Vec::new();
    let mut expected = 0u64;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if i == 0 {
            if line != MANIFEST_HEADER {
                return Err(perr(lineno, "unexpected manifest header".into()));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 8 {
            return Err(perr(lineno, format!("expected 8 fields, found {}", f.len())));
        }
        let opt = |s: &str| -> std::result::Result<Option<u64>, String> {
            if s == "-" {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| format!("bad integer `{s}`"))
            }
        };
        let num = |s: &str| s.parse::<usize>().map_err(|_| format!("bad integer `{s}`"));
        let e = ManifestEntry {
            record_id: f[0].to_string(),
            channel: opt(f[1]).map_err(|m| perr(lineno, m))?.map(|v| v as usize),
            segment: opt(f[2]).map_err(|m| perr(lineno, m))?.map(|v| v as usize),
            label: if f[3] == "-" { String::new() } else { f[3].to_string() },
            byte_offset: opt(f[4]).map_err(|m| perr(lineno, m))?,
            rows: num(f[5]).map_err(|m| perr(lineno, m))?,
            cols: num(f[6]).map_err(|m| perr(lineno, m))?,
            status: f[7].to_string(),
        };
        if e.is_ok() {
            let off = e
                .byte_offset
                .ok_or_else(|| perr(lineno, "successful entry without offset".into()))?;
            if e.channel.is_none() || e.segment.is_none() {
                return Err(perr(lineno, "successful entry without channel/segment".into()));
            }
            if off != expected || (e.byte_len() == 0) {
                return Err(perr(
                    lineno,
                    format!("offset {off} breaks the strictly increasing layout (expected {expected})"),
                ));
            }
            expected += e.byte_len();
        }
        entries.push(e);
    }
    if let Some(len) = tensor_len {
        if len != expected {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: format!("manifest covers {expected} bytes but the tensor holds {len}"),
            });
        }
    }
    Ok(entries)
}

/// Reads one image back from a tensor file.
pub fn read_image(tensor: &Path, entry: &ManifestEntry) -> Result<Array2<f32>> {
    use std::io::{Read, Seek, SeekFrom};
    let off = entry
        .byte_offset
        .ok_or_else(|| Error::invalid("manifest entry has no image"))?;
    let mut f = File::open(tensor)?;
    f.seek(SeekFrom::Start(off))?;
    let mut buf = vec![0u8; entry.byte_len() as usize];
    f.read_exact(&mut buf)?;
    let data: Vec<f32> = buf
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    Array2::from_shape_vec((entry.rows, entry.cols), data).map_err(|e| Error::ShapeMismatch(e.to_string()))
}
