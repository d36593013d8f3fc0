//! Texture mask of an image: flat regions are zeroed, textured ones kept.
//!
//! ```bash
//! cargo run --release -p buddykit --example region_mask -- [in.png] [out_dir]
//! ```
//!
//! The default input is a seeded texture with a flat square pasted in the
//! middle.

use std::path::PathBuf;

use buddykit::imagekit::{load_png, save_png, ImageTensor};
use buddykit::regionmask::{apply_mask, compute_mask, MaskConfig};
use buddykit::synth;

fn demo_image() -> buddykit::Result<ImageTensor> {
    let tex = synth::textured_image(96, 96, 3, 5)?;
    ImageTensor::from_fn(96, 96, 3, |r, c, ch| {
        if (32..64).contains(&r) && (32..64).contains(&c) {
            0.5
        } else {
            tex.get(r, c, ch)
        }
    })
}

fn main() -> buddykit::Result<()> {
    let mut args = std::env::args().skip(1);
    let img = match args.next() {
        Some(path) => load_png(path)?,
        None => demo_image()?,
    };
    let cfg = MaskConfig::default();
    let mask = compute_mask(&img, &cfg)?;
    let total = mask.height() * mask.width();
    println!(
        "k = {}, delta = {}: {} of {} pixels textured ({:.1}%)",
        cfg.k,
        cfg.delta,
        mask.count_ones(),
        total,
        100.0 * mask.count_ones() as f64 / total as f64
    );

    if let Some(dir) = args.next().map(PathBuf::from) {
        std::fs::create_dir_all(&dir).expect("create output dir");
        mask.save_png(dir.join("mask.png"))?;
        save_png(&apply_mask(&img, &mask)?, dir.join("masked.png"))?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}
