//! `TFR1` binary container for time-frequency planes.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "TFR1"                      magic
//! u16 + bytes                 kind tag (stft | cwt | sst-stft | sst-cwt | …)
//! u64 rows, u64 cols
//! u8                          1 = complex64 payload, 0 = float32 payload
//! u8                          1 = scale axis present
//! f64 × rows                  frequency axis, Hz
//! f64 × cols                  time axis, s
//! f64 × rows                  scale axis (only when present)
//! u32 + bytes                 metadata, UTF-8 `key=value` lines
//! payload                     row-major; complex as (f32 re, f32 im)
//! ```
//!
//! Values are stored in single precision, so `write(read(bytes)) == bytes`
//! while a double-precision plane loses precision on the first write.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use num_complex::{Complex32, Complex64};

use crate::error::{Error, Result};
use crate::sst::{BinSpacing, Kernel, SqueezeStats, SstKind, SstParams, SstPlane, SstProvenance, Threshold};
use crate::tfr::{TfrKind, TfrPlane};

const MAGIC: &[u8; 4] = b"TFR1";

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Complex(Array2<Complex32>),
    Magnitude(Array2<f32>),
}

impl Payload {
    pub fn dim(&self) -> (usize, usize) {
        match self {
            Payload::Complex(a) => a.dim(),
            Payload::Magnitude(a) => a.dim(),
        }
    }

    pub fn to_complex64(&self) -> Array2<Complex64> {
        match self {
            Payload::Complex(a) => a.mapv(|c| Complex64::new(c.re as f64, c.im as f64)),
            Payload::Magnitude(a) => a.mapv(|v| Complex64::new(v as f64, 0.0)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tfr1 {
    pub kind: String,
    pub freq_axis_hz: Vec<f64>,
    pub time_axis_s: Vec<f64>,
    pub scale_axis: Option<Vec<f64>>,
    pub meta: BTreeMap<String, String>,
    pub payload: Payload,
}

impl Tfr1 {
    pub fn to_bytes(&self) -> Vec<u8> {
        let (rows, cols) = self.payload.dim();
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.kind.len() as u16).to_le_bytes());
        out.extend_from_slice(self.kind.as_bytes());
        out.extend_from_slice(&(rows as u64).to_le_bytes());
        out.extend_from_slice(&(cols as u64).to_le_bytes());
        out.push(matches!(self.payload, Payload::Complex(_)) as u8);
        out.push(self.scale_axis.is_some() as u8);
        for v in self.freq_axis_hz.iter().chain(&self.time_axis_s) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        if let Some(s) = &self.scale_axis {
            for v in s {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let meta: String = self.meta.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(meta.as_bytes());
        match &self.payload {
            Payload::Complex(a) => {
                for c in a.iter() {
                    out.extend_from_slice(&c.re.to_le_bytes());
                    out.extend_from_slice(&c.im.to_le_bytes());
                }
            }
            Payload::Magnitude(a) => {
                for v in a.iter() {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err("bad magic (expected TFR1)".into());
        }
        let kind_len = u16::from_le_bytes(r.array()?) as usize;
        let kind = String::from_utf8(r.take(kind_len)?.to_vec()).map_err(|e| e.to_string())?;
        let rows = u64::from_le_bytes(r.array()?) as usize;
        let cols = u64::from_le_bytes(r.array()?) as usize;
        let is_complex = r.take(1)?[0];
        let has_scale = r.take(1)?[0];
        if is_complex > 1 || has_scale > 1 {
            return Err("corrupt flag byte".into());
        }
        let freq_axis_hz = r.f64s(rows)?;
        let time_axis_s = r.f64s(cols)?;
        let scale_axis = if has_scale == 1 { Some(r.f64s(rows)?) } else { None };
        let meta_len = u32::from_le_bytes(r.array()?) as usize;
        let meta_text = std::str::from_utf8(r.take(meta_len)?).map_err(|e| e.to_string())?;
        let mut meta = BTreeMap::new();
        for line in meta_text.lines() {
            let (k, v) = line.split_once('=').ok_or("metadata line without `=`")?;
            meta.insert(k.to_string(), v.to_string());
        }
        let count = rows.checked_mul(cols).ok_or("dimension overflow")?;
        let payload = if is_complex == 1 {
            let raw = r.take(count.checked_mul(8).ok_or("dimension overflow")?)?;
            let data: Vec<Complex32> = raw
                .chunks_exact(8)
                .map(|b| {
                    Complex32::new(
                        f32::from_le_bytes([b[0], b[1], b[2], b[3]]),
                        f32::from_le_bytes([b[4], b[5], b[6], b[7]]),
                    )
                })
                .collect();
            Payload::Complex(Array2::from_shape_vec((rows, cols), data).map_err(|e| e.to_string())?)
        } else {
            let raw = r.take(count.checked_mul(4).ok_or("dimension overflow")?)?;
            let data: Vec<f32> = raw
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            Payload::Magnitude(Array2::from_shape_vec((rows, cols), data).map_err(|e| e.to_string())?)
        };
        if r.pos != bytes.len() {
            return Err(format!("{} trailing bytes", bytes.len() - r.pos));
        }
        Ok(Self {
            kind,
            freq_axis_hz,
            time_axis_s,
            scale_axis,
            meta,
            payload,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        Self::from_bytes(&bytes).map_err(|message| Error::Format {
            path: path.to_path_buf(),
            message,
        })
    }

    fn meta_f64(&self, key: &str) -> Result<f64> {
        self.meta
            .get(key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::invalid(format!("TFR1 metadata lacks numeric `{key}`")))
    }

    fn meta_bool(&self, key: &str) -> bool {
        self.meta.get(key).map(|v| v == "true").unwrap_or(false)
    }

    pub fn from_tfr(plane: &TfrPlane, extra: &[(String, String)]) -> Self {
        let mut meta: BTreeMap<String, String> = extra.iter().cloned().collect();
        meta.insert("sample_rate_hz".into(), plane.sample_rate_hz.to_string());
        meta.insert("real_input".into(), plane.real_input.to_string());
        Self {
            kind: plane.kind.tag().into(),
            freq_axis_hz: plane.freq_axis_hz.clone(),
            time_axis_s: plane.time_axis_s.clone(),
            scale_axis: plane.scale_axis.clone(),
            meta,
            payload: Payload::Complex(plane.values.mapv(|c| Complex32::new(c.re as f32, c.im as f32))),
        }
    }

    pub fn to_tfr(&self) -> Result<TfrPlane> {
        let kind = match self.kind.as_str() {
            "stft" => TfrKind::Stft,
            "cwt" => TfrKind::Cwt,
            other => return Err(Error::invalid(format!("TFR1 kind `{other}` is not a linear plane"))),
        };
        let values = self.payload.to_complex64();
        Ok(TfrPlane {
            boundary_frames: vec![0; values.nrows()],
            values,
            time_axis_s: self.time_axis_s.clone(),
            freq_axis_hz: self.freq_axis_hz.clone(),
            scale_axis: self.scale_axis.clone(),
            kind,
            sample_rate_hz: self.meta_f64("sample_rate_hz")?,
            real_input: self.meta_bool("real_input"),
            warnings: Vec::new(),
        })
    }

    pub fn from_sst(plane: &SstPlane, extra: &[(String, String)]) -> Self {
        let prov = &plane.provenance;
        let mut meta: BTreeMap<String, String> = extra.iter().cloned().collect();
        let mut put = |k: &str, v: String| {
            meta.insert(k.to_string(), v);
        };
        put("sample_rate_hz", prov.sample_rate_hz.to_string());
        put("real_input", prov.real_input.to_string());
        put("measure", prov.measure.to_string());
        put("threshold_abs", prov.threshold_abs.to_string());
        put("spacing", plane.spacing.name().into());
        put("kernel", prov.params.kernel.name().into());
        put("epsilon_hz", prov.params.kernel.epsilon_hz().to_string());
        put("deposited", plane.stats.deposited.to_string());
        put("dropped_out_of_range", plane.stats.dropped_out_of_range.to_string());
        put("deposited_magnitude", plane.stats.deposited_magnitude.to_string());
        Self {
            kind: plane.kind.tag().into(),
            freq_axis_hz: plane.eta_axis_hz.clone(),
            time_axis_s: plane.time_axis_s.clone(),
            scale_axis: None,
            meta,
            payload: Payload::Complex(plane.values.mapv(|c| Complex32::new(c.re as f32, c.im as f32))),
        }
    }

    pub fn to_sst(&self) -> Result<SstPlane> {
        let (kind, source) = match self.kind.as_str() {
            "sst-stft" => (SstKind::Stft, TfrKind::Stft),
            "sst-cwt" => (SstKind::Cwt, TfrKind::Cwt),
            other => return Err(Error::invalid(format!("TFR1 kind `{other}` is not a synchrosqueezed plane"))),
        };
        let spacing = match self.meta.get("spacing").map(String::as_str) {
            Some("log") => BinSpacing::Logarithmic,
            _ => BinSpacing::Linear,
        };
        let kernel = match self.meta.get("kernel").map(String::as_str) {
            Some("gaussian") => Kernel::Gaussian {
                epsilon_hz: self.meta_f64("epsilon_hz")?,
            },
            _ => Kernel::Hard,
        };
        let threshold_abs = self.meta_f64("threshold_abs").unwrap_or(0.0);
        let count = |k: &str| self.meta.get(k).and_then(|v| v.parse().ok()).unwrap_or(0);
        let (rows, cols) = self.payload.dim();
        let eta = &self.freq_axis_hz;
        Ok(SstPlane {
            values: self.payload.to_complex64(),
            eta_axis_hz: eta.clone(),
            time_axis_s: self.time_axis_s.clone(),
            spacing,
            kind,
            provenance: SstProvenance {
                params: SstParams {
                    threshold: Threshold::Absolute(threshold_abs),
                    freq_range: Some((eta[0], eta[eta.len() - 1])),
                    kernel,
                    n_out_bins: Some(rows),
                    spacing: Some(spacing),
                },
                source,
                sample_rate_hz: self.meta_f64("sample_rate_hz")?,
                real_input: self.meta_bool("real_input"),
                measure: self.meta_f64("measure")?,
                threshold_abs,
            },
            stats: SqueezeStats {
                coefficients: rows * cols,
                masked_in: 0,
                deposited: count("deposited"),
                dropped_out_of_range: count("dropped_out_of_range"),
                deposited_magnitude: self.meta_f64("deposited_magnitude").unwrap_or(0.0),
            },
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).ok_or("length overflow")?;
        if end > self.bytes.len() {
            return Err(format!("truncated at byte {} (needed {n} more)", self.pos));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> std::result::Result<[u8; N], String> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn f64s(&mut self, n: usize) -> std::result::Result<Vec<f64>, String> {
        let raw = self.take(n.checked_mul(8).ok_or("dimension overflow")?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("chunk of 8")))
            .collect())
    }
}
