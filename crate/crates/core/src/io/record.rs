//! Multichannel recordings: CSV and little-endian float32 with a text sidecar.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::SampledSignal;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    Csv,
    RawF32,
}

impl RecordFormat {
    /// `.csv` → CSV, anything else → rawf32.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => RecordFormat::Csv,
            _ => RecordFormat::RawF32,
        }
    }
}

/// Equal-length real channels sharing one sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct MultichannelRecord {
    pub channels: Vec<Vec<f32>>,
    pub sample_rate_hz: f64,
    pub label: Option<String>,
}

impl MultichannelRecord {
    pub fn new(channels: Vec<Vec<f32>>, sample_rate_hz: f64, label: Option<String>) -> Result<Self> {
        let rec = Self {
            channels,
            sample_rate_hz,
            label,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() {
            return Err(Error::Empty("record has no channels".into()));
        }
        let n = self.channels[0].len();
        if n == 0 {
            return Err(Error::Empty("record has no samples".into()));
        }
        if let Some((i, c)) = self.channels.iter().enumerate().find(|(_, c)| c.len() != n) {
            return Err(Error::ShapeMismatch(format!(
                "channel {i} has {} samples, channel 0 has {n}",
                c.len()
            )));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::invalid(format!("sample rate must be positive, got {}", self.sample_rate_hz)));
        }
        for (ci, c) in self.channels.iter().enumerate() {
            if let Some(si) = c.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("non-finite sample at channel {ci}, sample {si}")));
            }
        }
        Ok(())
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn n_samples(&self) -> usize {
        self.channels[0].len()
    }

    pub fn channel_signal(&self, channel: usize) -> Result<SampledSignal> {
        let data: Vec<f64> = self.channels[channel].iter().map(|&v| v as f64).collect();
        SampledSignal::from_real(&data, self.sample_rate_hz)
    }
}

/// Extra information the CSV format does not carry.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReadOptions {
    pub sample_rate_hz: Option<f64>,
    pub label: Option<String>,
}

/// Sidecar header path: `<path>.hdr`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".hdr");
    PathBuf::from(s)
}

pub fn read_record(path: &Path, format: RecordFormat, opts: &ReadOptions) -> Result<MultichannelRecord> {
    match format {
        RecordFormat::Csv => read_csv(path, opts),
        RecordFormat::RawF32 => Ok(read_rawf32(path)?.0),
    }
}

pub fn write_record(rec: &MultichannelRecord, path: &Path, format: RecordFormat) -> Result<()> {
    rec.validate()?;
    match format {
        RecordFormat::Csv => write_csv(rec, path),
        RecordFormat::RawF32 => write_rawf32(rec, path, &[]),
    }
}

fn read_csv(path: &Path, opts: &ReadOptions) -> Result<MultichannelRecord> {
    let fs = opts.sample_rate_hz.ok_or_else(|| {
        Error::invalid(format!("{}: CSV records need an explicit sample rate", path.display()))
    })?;
    let reader = BufReader::new(fs::File::open(path)?);
    let mut channels: Vec<Vec<f32>> = Vec::new();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f32>, _> = fields.iter().map(|f| f.parse::<f32>()).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if i == 0 => continue,
            Err(e) => return Err(parse_err(lineno, format!("not a number: {e}"))),
        };
        if channels.is_empty() {
            channels = vec![Vec::new(); row.len()];
        } else if row.len() != channels.len() {
            return Err(parse_err(
                lineno,
                format!("row has {} columns, expected {}", row.len(), channels.len()),
            ));
        }
        for (c, v) in row.into_iter().enumerate() {
            if v.is_nan() {
                return Err(parse_err(lineno, format!("NaN sample in column {}", c + 1)));
            }
            channels[c].push(v);
        }
    }
    MultichannelRecord::new(channels, fs, opts.label.clone())
}

fn write_csv(rec: &MultichannelRecord, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    let header: Vec<String> = (0..rec.channel_count()).map(|c| format!("ch{c}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for n in 0..rec.n_samples() {
        let row: Vec<String> = rec.channels.iter().map(|c| c[n].to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

fn write_rawf32(rec: &MultichannelRecord, path: &Path, extra: &[(&str, &str)]) -> Result<()> {
    let mut blob = Vec::with_capacity(4 * rec.channel_count() * rec.n_samples());
    for c in &rec.channels {
        for v in c {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, blob)?;
    let mut hdr = format!(
        "version=1\nchannels={}\nsamples={}\nsample_rate_hz={}\nlabel={}\n",
        rec.channel_count(),
        rec.n_samples(),
        rec.sample_rate_hz,
        rec.label.as_deref().unwrap_or("")
    );
    for (k, v) in extra {
        hdr.push_str(&format!("{k}={v}\n"));
    }
    fs::write(sidecar_path(path), hdr)?;
    Ok(())
}

fn read_rawf32(path: &Path) -> Result<(MultichannelRecord, BTreeMap<String, String>)> {
    let hdr_path = sidecar_path(path);
    let text = fs::read_to_string(&hdr_path)?;
    let bad = |message: String| Error::Format {
        path: hdr_path.clone(),
        message,
    };
    let mut fields = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("line {}: expected key=value", i + 1)))?;
        fields.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |k: &str| fields.get(k).ok_or_else(|| bad(format!("missing field `{k}`")));
    if get("version")? != "1" {
        return Err(bad(format!("unsupported version {}", get("version")?)));
    }
    let channels: usize = get("channels")?.parse().map_err(|e| bad(format!("channels: {e}")))?;
    let samples: usize = get("samples")?.parse().map_err(|e| bad(format!("samples: {e}")))?;
    let fs: f64 = get("sample_rate_hz")?
        .parse()
        .map_err(|e| bad(format!("sample_rate_hz: {e}")))?;
    let label = get("label")?.clone();

    let blob = fs::read(path)?;
    if blob.len() != 4 * channels * samples {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!("expected {} bytes for {channels}×{samples}, found {}", 4 * channels * samples, blob.len()),
        });
    }
    let mut data = Vec::with_capacity(channels);
    for c in 0..channels {
        let start = 4 * c * samples;
        let ch: Vec<f32> = blob[start..start + 4 * samples]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        if let Some(s) = ch.iter().position(|v| v.is_nan()) {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: format!("NaN sample at channel {c}, sample {s}"),
            });
        }
        data.push(ch);
    }
    let rec = MultichannelRecord::new(data, fs, (!label.is_empty()).then_some(label))?;
    Ok((rec, fields))
}

/// Writes a signal as rawf32. Complex signals become two channels (real,
/// imaginary) tagged `layout=complex` in the sidecar.
pub fn write_signal(x: &SampledSignal, path: &Path, label: Option<&str>) -> Result<()> {
    let re: Vec<f32> = x.samples().iter().map(|c| c.re as f32).collect();
    let label = label.map(str::to_string);
    if x.is_real() {
        let rec = MultichannelRecord::new(vec![re], x.sample_rate_hz(), label)?;
        write_rawf32(&rec, path, &[])
    } else {
        let im: Vec<f32> = x.samples().iter().map(|c| c.im as f32).collect();
        let rec = MultichannelRecord::new(vec![re, im], x.sample_rate_hz(), label)?;
        write_rawf32(&rec, path, &[("layout", "complex")])
    }
}

/// Reads a signal written by [`write_signal`]; for ordinary multichannel
/// files `channel` selects a real channel.
pub fn read_signal(path: &Path, channel: usize) -> Result<SampledSignal> {
    let (rec, fields) = read_rawf32(path)?;
    if fields.get("layout").map(String::as_str) == Some("complex") {
        if rec.channel_count() != 2 {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: "complex layout needs exactly 2 channels".into(),
            });
        }
        let samples = rec.channels[0]
            .iter()
            .zip(&rec.channels[1])
            .map(|(&r, &i)| Complex64::new(r as f64, i as f64))
            .collect();
        return SampledSignal::from_complex(samples, rec.sample_rate_hz);
    }
    if channel >= rec.channel_count() {
        return Err(Error::invalid(format!(
            "channel {channel} out of range ({} channels)",
            rec.channel_count()
        )));
    }
    rec.channel_signal(channel)
}
