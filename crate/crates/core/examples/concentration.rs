//! Rényi entropy and ridge-energy fraction before and after
//! synchrosqueezing, at several noise levels.

use ssqlab::{
    add_awgn, sst_stft_with_source, synthesize_mcs, ConcentrationReport, McsSpec, SstParams, StftParams, WindowSpec,
};

fn main() -> ssqlab::error::Result<()> {
    let spec = McsSpec::paper_3comp();
    let clean = synthesize_mcs(&spec)?;
    let params = StftParams::new(WindowSpec::slepian(32, 4.0), 1);
    println!("snr_db,{}", ConcentrationReport::CSV_HEADER);
    for snr in [f64::INFINITY, 20.0, 10.0, 5.0, 0.0] {
        let x = add_awgn(&clean, snr, 7);
        let (stft, sst) = sst_stft_with_source(&x, &params, &SstParams::default())?;
        let tracks = spec.if_at(&stft.time_axis_s);
        for report in [
            ConcentrationReport::compute(&stft, "stft", 3.0, Some(&tracks), 1)?,
            ConcentrationReport::compute(&sst, "sst-stft", 3.0, Some(&tracks), 1)?,
        ] {
            println!("{snr},{}", report.to_csv_row());
        }
    }
    Ok(())
}
