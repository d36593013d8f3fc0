//! Trains MAE, MSE and best-buddy regressors on the Swiss roll and reports how
//! close each model's estimates land to the roll.
//!
//! ```bash
//! cargo run --release -p buddykit --example toy_swiss_roll -- [seed] [out_dir]
//! ```

use buddykit::toylab::{export_toy_plot, run_toy, LossKind, ToyTrainConfig};

fn main() -> buddykit::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|s| s.parse().expect("seed")).unwrap_or(0);
    let out_dir = args.next();

    let base = ToyTrainConfig {
        seed,
        ..ToyTrainConfig::default()
    };
    let (data, results) = run_toy(&LossKind::ALL, &base)?;
    for r in &results {
        println!(
            "{:>4}: mean curve distance {:.4}, max {:.4}, mean LR residual {:.4}",
            r.kind.name(),
            r.fit.mean_dist,
            r.fit.max_dist,
            r.fit.mean_lr_residual
        );
        for p in &r.fit.points {
            println!(
                "      x = {:>3}: y = ({:>7.3}, {:>7.3})  dist {:.3}",
                p.x, p.y[0], p.y[1], p.curve_distance
            );
        }
    }
    if let Some(dir) = out_dir {
        let files = export_toy_plot(&data, &results, seed, &dir)?;
        println!("wrote {}, {}, {}", files.csv.display(), files.svg.display(), files.json.display());
    }
    Ok(())
}
