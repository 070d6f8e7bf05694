//! STFT and its synchrosqueezed version for a noisy signal, with the
//! per-frame peak of each plane.

use ssqlab::metrics::nearest_bin;
use ssqlab::{add_awgn, sst_stft_with_source, synthesize_mcs, McsSpec, SstParams, StftParams, WindowSpec};

fn main() -> ssqlab::error::Result<()> {
    let spec = McsSpec::paper_3comp();
    let x = add_awgn(&synthesize_mcs(&spec)?, 10.0, 1);
    let params = StftParams::new(WindowSpec::slepian(32, 4.0), 1);
    let (stft, sst) = sst_stft_with_source(&x, &params, &SstParams::default())?;
    println!("STFT {}×{}, SST {}×{}", stft.n_rows(), stft.n_frames(), sst.n_bins(), sst.n_frames());
    println!(
        "deposited {} of {} coefficients ({} dropped outside the grid)",
        sst.stats.deposited, sst.stats.coefficients, sst.stats.dropped_out_of_range
    );

    let m = x.len() / 2;
    let col = |v: &ndarray::Array2<num_complex::Complex64>, k: usize| v[[k, m]].norm();
    for f in spec.if_at(&[x.time_at(m)]).into_iter().map(|t| t[0]) {
        let k = nearest_bin(&sst.eta_axis_hz, f);
        println!(
            "{f:5.2} Hz at t = {:.1} s: |STFT| {:.3}, |SST| {:.3}",
            x.time_at(m),
            col(&stft.values, k),
            col(&sst.values, k)
        );
    }
    Ok(())
}
