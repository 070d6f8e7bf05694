//! Command-line front end. Exit status: 0 success, 2 invalid input, 1 runtime failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ssqlab::io::{
    export_image, preprocess_batch, read_signal, write_signal, BatchConfig, BatchInput, ImageOptions, ImageScale,
    Normalize, ReadOptions, RecordFormat, SegmentPlan, Tfr1, Transform, TransformParams,
};
use ssqlab::metrics::{mode_relative_l2_error, ConcentrationReport};
use ssqlab::{
    add_awgn, cwt, cwt_reconstruction_constant, default_scale_grid, dpss_window, extract_ridges,
    reconstruct_mode_cwt, reconstruct_mode_stft, sst_cwt, sst_stft, stft, synthesize_component, synthesize_mcs,
    Error, Kernel, McsSpec, MorseWavelet, Result, RidgeParams, SampledSignal, SstParams, StftParams, Threshold,
    WindowSpec,
};

#[derive(Parser)]
#[command(name = "ssqlab", version, about = "STFT/CWT synchrosqueezing toolkit")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    /// Sample rate (Hz) for inputs that do not carry one, or to override a preset.
    #[arg(long, global = true)]
    fs: Option<f64>,
    #[arg(long, global = true, default_value_t = 32)]
    window_len: usize,
    #[arg(long, global = true, default_value_t = 4.0)]
    nw: f64,
    #[arg(long, global = true, default_value_t = 3.0)]
    gmw_gamma: f64,
    #[arg(long, global = true, default_value_t = 60.0)]
    gmw_beta: f64,
    /// Frame hop for transforms; segment hop for `preprocess`.
    #[arg(long, global = true, default_value_t = 224)]
    hop: usize,
    /// Magnitude threshold relative to the plane maximum.
    #[arg(long, global = true, default_value_t = 1e-8)]
    gamma_rel: f64,
    #[arg(long, global = true, value_enum, default_value_t = KernelArg::Hard)]
    kernel: KernelArg,
    /// Gaussian kernel width (Hz); defaults to one output bin.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true, default_value_t = 32)]
    voices: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Hard,
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Branch {
    Stft,
    Cwt,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformArg {
    Stft,
    Cwt,
    SstStft,
    SstCwt,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Linear,
    Log,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizeArg {
    P99,
    Max,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a multicomponent test signal.
    Synth {
        #[arg(long, default_value = "paper-3comp")]
        preset: String,
        /// Additive white Gaussian noise level (dB); omitted means clean.
        #[arg(long)]
        snr: Option<f64>,
        /// Keep only the real part.
        #[arg(long)]
        real: bool,
        /// Also write each clean component as `<dir>/component<k>.rawf32`.
        #[arg(long)]
        components_dir: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Linear time-frequency transform into a TFR1 file.
    Transform {
        #[arg(long, value_enum, default_value_t = Branch::Stft)]
        branch: Branch,
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        channel: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Synchrosqueezed transform into a TFR1 file.
    Ssq {
        #[arg(long, value_enum, default_value_t = Branch::Stft)]
        branch: Branch,
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        channel: usize,
        #[arg(long)]
        f_min: Option<f64>,
        #[arg(long)]
        f_max: Option<f64>,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Extract ridges from a synchrosqueezed TFR1 file as TSV.
    Ridges {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short = 'k', long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 2.0)]
        penalty: f64,
        #[arg(long, default_value_t = 16)]
        max_jump: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Reconstruct modes along ridges; writes `<dir>/mode<k>.rawf32`.
    Reconstruct {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short = 'k', long, default_value_t = 1)]
        count: usize,
        /// Band half-width in bins (default 8 for STFT, 4 for CWT planes).
        #[arg(short = 'd', long)]
        band: Option<usize>,
        #[arg(long, default_value_t = 2.0)]
        penalty: f64,
        #[arg(long, default_value_t = 16)]
        max_jump: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Concentration of a TFR1 plane, or reconstruction error of a mode.
    Metrics {
        #[arg(short, long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 3.0)]
        order: f64,
        /// Preset whose instantaneous frequencies define ridge bands.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, default_value_t = 1)]
        halfwidth: usize,
        #[arg(long)]
        estimate: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, default_value_t = 0.8)]
        interior: f64,
        #[arg(long)]
        csv: bool,
    },
    /// Segment recordings and write TFR image tensors plus a manifest.
    Preprocess {
        #[arg(short, long, num_args = 1.., required = true)]
        input: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = TransformArg::SstStft)]
        transform: TransformArg,
        /// Segment length in samples.
        #[arg(long, default_value_t = 5000)]
        window: usize,
        /// Frame hop inside each segment; defaults to `--hop`.
        #[arg(long)]
        tfr_hop: Option<usize>,
        /// Label for CSV inputs.
        #[arg(long)]
        label: Option<String>,
        /// 0 uses every core; `SSQLAB_THREADS` caps the count.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Render a TFR1 plane as PGM or PNG.
    Render {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = ScaleArg::Log)]
        scale: ScaleArg,
        #[arg(long, value_enum, default_value_t = NormalizeArg::P99)]
        normalize: NormalizeArg,
        #[arg(long, default_value_t = 80.0)]
        range_db: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

impl Global {
    fn window(&self) -> WindowSpec {
        WindowSpec::slepian(self.window_len, self.nw)
    }

    fn stft_params(&self, hop: usize) -> StftParams {
        StftParams::new(self.window(), hop)
    }

    fn wavelet(&self) -> Result<MorseWavelet> {
        MorseWavelet::new(self.gmw_gamma, self.gmw_beta)
    }

    fn sst_params(&self) -> Result<SstParams> {
        let kernel = match self.kernel {
            KernelArg::Hard => {
                if self.epsilon.is_some() {
                    return Err(Error::InvalidArgument("--epsilon requires --kernel gaussian".into()));
                }
                Kernel::Hard
            }
            KernelArg::Gaussian => Kernel::Gaussian {
                epsilon_hz: self.epsilon.unwrap_or(0.0),
            },
        };
        Ok(SstParams {
            threshold: Threshold::Relative(self.gamma_rel),
            kernel,
            ..Default::default()
        })
    }

    fn meta(&self, branch: Branch) -> Vec<(String, String)> {
        let mut m = Vec::new();
        match branch {
            Branch::Stft => {
                m.push(("window_len".into(), self.window_len.to_string()));
                m.push(("nw".into(), self.nw.to_string()));
                m.push(("hop".into(), self.hop.to_string()));
            }
            Branch::Cwt => {
                m.push(("gmw_gamma".into(), self.gmw_gamma.to_string()));
                m.push(("gmw_beta".into(), self.gmw_beta.to_string()));
                m.push(("voices".into(), self.voices.to_string()));
            }
        }
        m
    }
}

fn load_signal(path: &Path, channel: usize, fs: Option<f64>) -> Result<SampledSignal> {
    match RecordFormat::from_path(path) {
        RecordFormat::RawF32 => read_signal(path, channel),
        RecordFormat::Csv => {
            let rec = ssqlab::io::read_record(
                path,
                RecordFormat::Csv,
                &ReadOptions {
                    sample_rate_hz: fs,
                    label: None,
                },
            )?;
            if channel >= rec.channel_count() {
                return Err(Error::InvalidArgument(format!(
                    "channel {channel} out of range ({} channels)",
                    rec.channel_count()
                )));
            }
            rec.channel_signal(channel)
        }
    }
}

fn meta_num<T: std::str::FromStr>(t: &Tfr1, key: &str, fallback: T) -> T {
    t.meta.get(key).and_then(|v| v.parse().ok()).unwrap_or(fallback)
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Synth {
            preset,
            snr,
            real,
            components_dir,
            output,
        } => {
            let mut spec = McsSpec::preset(&preset)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown preset `{preset}`")))?;
            if let Some(fs) = g.fs {
                spec.sample_rate_hz = fs;
            }
            spec.validate()?;
            let mut x = synthesize_mcs(&spec)?;
            if let Some(snr) = snr {
                x = add_awgn(&x, snr, g.seed);
            }
            if real {
                x = x.real_part();
            }
            write_signal(&x, &output, Some(&preset))?;
            if let Some(dir) = components_dir {
                fs::create_dir_all(&dir)?;
                for k in 0..spec.components.len() {
                    let mut c = synthesize_component(&spec, k)?;
                    if real {
                        c = c.real_part();
                    }
                    write_signal(&c, &dir.join(format!("component{k}.rawf32")), Some(&preset))?;
                }
            }
        }
        Command::Transform {
            branch,
            input,
            channel,
            output,
        } => {
            let x = load_signal(&input, channel, g.fs)?;
            let plane = match branch {
                Branch::Stft => stft(&x, &g.stft_params(g.hop))?,
                Branch::Cwt => cwt(&x, &default_scale_grid(x.sample_rate_hz(), x.len(), g.wavelet()?, g.voices)?)?,
            };
            for w in &plane.warnings {
                eprintln!("warning: {w}");
            }
            Tfr1::from_tfr(&plane, &g.meta(branch)).write(&output)?;
        }
        Command::Ssq {
            branch,
            input,
            channel,
            f_min,
            f_max,
            bins,
            output,
        } => {
            let x = load_signal(&input, channel, g.fs)?;
            let mut p = g.sst_params()?;
            p.n_out_bins = bins;
            p.freq_range = match (f_min, f_max) {
                (None, None) => None,
                (lo, hi) => Some((lo.unwrap_or(0.0), hi.unwrap_or(0.5 * x.sample_rate_hz()))),
            };
            let s = match branch {
                Branch::Stft => sst_stft(&x, &g.stft_params(g.hop), &p)?,
                Branch::Cwt => {
                    let cp = default_scale_grid(x.sample_rate_hz(), x.len(), g.wavelet()?, g.voices)?;
                    sst_cwt(&x, &cp, &p)?
                }
            };
            Tfr1::from_sst(&s, &g.meta(branch)).write(&output)?;
        }
        Command::Ridges {
            input,
            count,
            penalty,
            max_jump,
            output,
        } => {
            let s = Tfr1::read(&input)?.to_sst()?;
            let rp = RidgeParams {
                penalty,
                max_jump,
                ..Default::default()
            };
            let set = extract_ridges(&s, count, &rp)?;
            if let Some(d) = &set.diagnostic {
                eprintln!("warning: {d}");
            }
            let mut out = String::from("ridge\tframe\ttime_s\tbin\tfreq_hz\n");
            for r in &set.ridges {
                for (m, (&b, &f)) in r.bin_track.iter().zip(&r.freq_track_hz).enumerate() {
                    let _ = writeln!(out, "{}\t{m}\t{}\t{b}\t{f}", r.index, s.time_axis_s[m]);
                }
            }
            match output {
                Some(p) => fs::write(p, out)?,
                None => print!("{out}"),
            }
        }
        Command::Reconstruct {
            input,
            count,
            band,
            penalty,
            max_jump,
            output,
        } => {
            let t = Tfr1::read(&input)?;
            let s = t.to_sst()?;
            let rp = RidgeParams {
                penalty,
                max_jump,
                ..Default::default()
            };
            let set = extract_ridges(&s, count, &rp)?;
            if let Some(d) = &set.diagnostic {
                eprintln!("warning: {d}");
            }
            fs::create_dir_all(&output)?;
            let fs_hz = s.provenance.sample_rate_hz;
            for r in &set.ridges {
                let mode = match s.kind {
                    ssqlab::sst::SstKind::Stft => {
                        let spec = WindowSpec::slepian(
                            meta_num(&t, "window_len", g.window_len),
                            meta_num(&t, "nw", g.nw),
                        );
                        reconstruct_mode_stft(&s, r, band.unwrap_or(8), &dpss_window(&spec)?)?
                    }
                    ssqlab::sst::SstKind::Cwt => {
                        let wav = MorseWavelet::new(
                            meta_num(&t, "gmw_gamma", g.gmw_gamma),
                            meta_num(&t, "gmw_beta", g.gmw_beta),
                        )?;
                        reconstruct_mode_cwt(&s, r, band.unwrap_or(4), cwt_reconstruction_constant(&wav)?)?
                    }
                };
                let step = match s.time_axis_s.as_slice() {
                    [a, b, ..] => b - a,
                    _ => 1.0 / fs_hz,
                };
                let x = SampledSignal::from_complex(mode.samples, 1.0 / step)?
                    .with_start_time(s.time_axis_s.first().copied().unwrap_or(0.0));
                write_signal(&x, &output.join(format!("mode{}.rawf32", r.index)), None)?;
            }
            println!("reconstructed {} mode(s) into {}", set.ridges.len(), output.display());
        }
        Command::Metrics {
            input,
            order,
            preset,
            halfwidth,
            estimate,
            truth,
            interior,
            csv,
        } => {
            if let Some(input) = input {
                let t = Tfr1::read(&input)?;
                let tracks = match &preset {
                    Some(name) => {
                        let spec = McsSpec::preset(name)
                            .ok_or_else(|| Error::InvalidArgument(format!("unknown preset `{name}`")))?;
                        Some(spec.if_at(&t.time_axis_s))
                    }
                    None => None,
                };
                let report = if t.kind.starts_with("sst") {
                    ConcentrationReport::compute(&t.to_sst()?, &t.kind, order, tracks.as_deref(), halfwidth)?
                } else {
                    ConcentrationReport::compute(&t.to_tfr()?, &t.kind, order, tracks.as_deref(), halfwidth)?
                };
                if csv {
                    println!("{}\n{}", ConcentrationReport::CSV_HEADER, report.to_csv_row());
                } else {
                    print!("{}", report.to_key_value());
                }
            }
            match (estimate, truth) {
                (Some(e), Some(t)) => {
                    let e = read_signal(&e, 0)?;
                    let t = read_signal(&t, 0)?;
                    let mode = ssqlab::ModeEstimate {
                        time_axis_s: e.times(),
                        samples: e.into_samples(),
                        component_index: 0,
                        band_halfwidth_bins: 0,
                    };
                    println!("relative_l2_error={:.6}", mode_relative_l2_error(&mode, &t, interior)?);
                }
                (None, None) => {}
                _ => return Err(Error::InvalidArgument("--estimate and --truth go together".into())),
            }
        }
        Command::Preprocess {
            input,
            transform,
            window,
            tfr_hop,
            label,
            workers,
            output,
        } => {
            let transform = match transform {
                TransformArg::Stft => Transform::Stft,
                TransformArg::Cwt => Transform::Cwt,
                TransformArg::SstStft => Transform::SstStft,
                TransformArg::SstCwt => Transform::SstCwt,
            };
            let inputs: Vec<BatchInput> = input
                .iter()
                .map(|p| BatchInput::File {
                    id: p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into()),
                    path: p.clone(),
                    format: RecordFormat::from_path(p),
                    options: ReadOptions {
                        sample_rate_hz: g.fs,
                        label: label.clone(),
                    },
                })
                .collect();
            let config = BatchConfig {
                plan: SegmentPlan {
                    window_samples: window,
                    hop_samples: g.hop,
                    drop_incomplete_tail: true,
                },
                transform,
                params: TransformParams {
                    stft: g.stft_params(tfr_hop.unwrap_or(g.hop)),
                    wavelet: g.wavelet()?,
                    voices_per_octave: g.voices,
                    sst: g.sst_params()?,
                },
                workers,
            };
            let s = preprocess_batch(&inputs, &config, &output)?;
            for (id, ch, n) in s.segments_per_channel() {
                println!("{id}\tchannel {ch}\t{n} segments");
            }
            println!(
                "images={} failures={} workers={} bytes={} sha256={}",
                s.images, s.failures, s.workers, s.tensor_bytes, s.content_hash
            );
            for e in s.entries.iter().filter(|e| !e.is_ok()) {
                eprintln!("{}: {}", e.record_id, e.status);
            }
        }
        Command::Render {
            input,
            scale,
            normalize,
            range_db,
            output,
        } => {
            let t = Tfr1::read(&input)?;
            let opts = ImageOptions {
                scale: match scale {
                    ScaleArg::Linear => ImageScale::Linear,
                    ScaleArg::Log => ImageScale::Log,
                },
                normalize: match normalize {
                    NormalizeArg::P99 => Normalize::Percentile99,
                    NormalizeArg::Max => Normalize::Max,
                },
                dynamic_range_db: range_db,
            };
            if t.kind.starts_with("sst") {
                export_image(&t.to_sst()?, &output, &opts)?;
            } else {
                export_image(&t.to_tfr()?, &output, &opts)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
