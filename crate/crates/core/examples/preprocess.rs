//! Batch preprocessing of a synthetic multichannel recording into an image
//! tensor plus manifest.

use ssqlab::io::{preprocess_batch, read_image, BatchConfig, BatchInput, MultichannelRecord, Transform};

fn main() -> ssqlab::error::Result<()> {
    let fs = 400.0;
    let channels = (0..4)
        .map(|c| {
            (0..60_000)
                .map(|n| {
                    let t = n as f64 / fs;
                    ((2.0 * std::f64::consts::PI * (4.0 + 6.0 * c as f64) * t).sin()
                        + 0.5 * (2.0 * std::f64::consts::PI * 30.0 * t).cos()) as f32
                })
                .collect()
        })
        .collect();
    let record = MultichannelRecord::new(channels, fs, Some("demo".into()))?;
    let config = BatchConfig {
        transform: Transform::SstStft,
        ..BatchConfig::default()
    };
    let out = std::env::temp_dir().join("ssqlab-preprocess-example");
    let summary = preprocess_batch(&[BatchInput::Record { id: "rec0".into(), record }], &config, &out)?;
    for (id, ch, n) in summary.segments_per_channel() {
        println!("{id} channel {ch}: {n} segments");
    }
    println!(
        "{} images, {} bytes, {} workers, sha256 {}",
        summary.images, summary.tensor_bytes, summary.workers, summary.content_hash
    );
    let first = read_image(&summary.tensor_path, &summary.entries[0])?;
    println!("image shape {:?}, written to {}", first.dim(), out.display());
    Ok(())
}
