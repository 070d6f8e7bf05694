//! Synchrosqueezed time-frequency analysis.
//!
//! The crate covers the whole chain from a sampled signal to individual
//! modes:
//!
//! * [`signal`]: sampled signals, polynomial-phase multicomponent models, noise.
//! * [`window`] and [`wavelet`]: DPSS windows and generalized Morse wavelets.
//! * [`tfr`]: STFT and CWT planes together with their exact time derivatives.
//! * [`sst`]: phase-transform frequency estimates and synchrosqueezing.
//! * [`ridge`]: ridge tracking and band-integrated mode reconstruction.
//! * [`metrics`]: Rényi entropy, ridge concentration and reconstruction error.
//! * [`io`]: CSV / rawf32 records, the `TFR1` plane container, PGM/PNG
//!   rendering and batch segmentation into image tensors.
//!
//! Runnable walkthroughs live in `examples/`: `synthesize`, `stft_sst`,
//! `cwt_sst`, `modes`, `concentration`, `preprocess` and `render`.
//!
//! ```
//! use ssqlab::{sst_stft, McsSpec, SstParams, StftParams, synthesize_mcs};
//!
//! let spec = McsSpec::paper_3comp();
//! let x = synthesize_mcs(&spec).unwrap();
//! let s = sst_stft(&x, &StftParams::default(), &SstParams::default()).unwrap();
//! assert_eq!(s.n_frames(), x.len());
//! ```

pub mod error;
pub mod io;
pub mod metrics;
pub mod ridge;
pub mod signal;
pub mod sst;
pub mod tfr;
pub mod wavelet;
pub mod window;

pub use error::{Error, Result};
pub use metrics::{
    mode_relative_l2_error, relative_l2_error, renyi_entropy, ridge_energy_fraction, ConcentrationReport, TfView,
};
pub use ridge::{
    extract_ridges, reconstruct_mode_cwt, reconstruct_mode_stft, stft_reconstruction_constant, ModeEstimate, Ridge,
    RidgeParams, RidgeSet,
};
pub use signal::{add_awgn, synthesize_component, synthesize_mcs, true_if_tracks, ComponentSpec, McsSpec, SampledSignal};
pub use sst::{
    phase_transform, sst_cwt, sst_cwt_with_source, sst_stft, sst_stft_with_source, synchrosqueeze, BinSpacing, Kernel,
    PhaseMap, SstParams, SstPlane, Threshold,
};
pub use tfr::{
    cwt, cwt_with_derivative, default_scale_grid, stft, stft_with_derivative, CwtParams, StftParams, TfrKind, TfrPlane,
};
pub use wavelet::{cwt_reconstruction_constant, MorseWavelet};
pub use window::{dpss_window, DiscreteWindow, WindowSpec};
