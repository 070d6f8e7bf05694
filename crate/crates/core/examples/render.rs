//! Writes log-scaled PNG images of an STFT and its synchrosqueezed version.

use ssqlab::io::{export_image, ImageOptions, ImageScale, Normalize};
use ssqlab::{sst_stft_with_source, synthesize_mcs, McsSpec, SstParams, StftParams, WindowSpec};

fn main() -> ssqlab::error::Result<()> {
    let x = synthesize_mcs(&McsSpec::paper_3comp())?;
    let (stft, sst) = sst_stft_with_source(&x, &StftParams::new(WindowSpec::slepian(32, 4.0), 1), &SstParams::default())?;
    let opts = ImageOptions {
        scale: ImageScale::Log,
        normalize: Normalize::Max,
        dynamic_range_db: 60.0,
    };
    let dir = std::env::temp_dir();
    let (a, b) = (dir.join("ssqlab-stft.png"), dir.join("ssqlab-sst.png"));
    export_image(&stft, &a, &opts)?;
    export_image(&sst, &b, &opts)?;
    println!("wrote {} and {}", a.display(), b.display());
    Ok(())
}
