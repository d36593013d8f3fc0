//! Downsamples an image by 4 with the antialiased bicubic operator and brings
//! it back up, printing the round-trip error.
//!
//! ```bash
//! cargo run --release -p buddykit --example resize -- [in.png] [out_dir]
//! ```
//!
//! Without an input a seeded 96x96 texture is used.

use std::path::PathBuf;

use buddykit::imagekit::{downsample, load_png, mae, save_png, upsample};
use buddykit::synth;

fn main() -> buddykit::Result<()> {
    let mut args = std::env::args().skip(1);
    let hr = match args.next() {
        Some(path) => load_png(path)?.crop_to_multiple(4)?,
        None => synth::textured_image(96, 96, 3, 7)?,
    };
    let lr = downsample(&hr, 4)?;
    let back = upsample(&lr, 4)?;
    println!("hr {} -> lr {} -> {}", hr.shape_str(), lr.shape_str(), back.shape_str());
    println!("round-trip MAE {:.5}", mae(&hr, &back)?);

    if let Some(dir) = args.next().map(PathBuf::from) {
        std::fs::create_dir_all(&dir).expect("create output dir");
        save_png(&lr, dir.join("lr.png"))?;
        save_png(&back, dir.join("up.png"))?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}
