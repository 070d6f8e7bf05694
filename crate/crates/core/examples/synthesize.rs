//! Builds the three-component test signal, adds noise and prints the true
//! instantaneous frequencies at a few instants.

use ssqlab::{add_awgn, synthesize_mcs, true_if_tracks, McsSpec};

fn main() -> ssqlab::error::Result<()> {
    let spec = McsSpec::paper_3comp();
    let clean = synthesize_mcs(&spec)?;
    let noisy = add_awgn(&clean, 5.0, 42);
    println!("{} samples at {} Hz, power {:.3}", clean.len(), clean.sample_rate_hz(), clean.power());
    println!("noise power at 5 dB: {:.3}", noisy.power() - clean.power());

    let tracks = true_if_tracks(&spec);
    for n in (0..clean.len()).step_by(clean.len() / 5) {
        let f: Vec<String> = tracks.iter().map(|t| format!("{:6.2}", t[n])).collect();
        println!("t = {:5.2} s  IF (Hz): {}", clean.time_at(n), f.join(" "));
    }
    Ok(())
}
