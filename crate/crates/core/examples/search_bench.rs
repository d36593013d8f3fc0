//! Times exhaustive and accelerated best-buddy search on one image and checks
//! that both pick the same buddies.
//!
//! ```bash
//! cargo run --release -p buddykit --example search_bench -- [size] [iters]
//! ```

use buddykit::cli::{bench_report, BenchModeArg};

fn main() -> buddykit::Result<()> {
    let mut args = std::env::args().skip(1);
    let size: usize = args.next().map(|s| s.parse().expect("size")).unwrap_or(96);
    let iters: usize = args.next().map(|s| s.parse().expect("iters")).unwrap_or(3);

    let r = bench_report(size, iters, BenchModeArg::Both)?;
    println!("{size}x{size}: {} queries against {} candidates", r.queries, r.candidates);
    println!(
        "brute {:.1} ms, accelerated {:.1} ms, speedup {:.1}x",
        r.brute_ms.unwrap_or(f64::NAN),
        r.fast_ms.unwrap_or(f64::NAN),
        r.speedup.unwrap_or(f64::NAN)
    );
    Ok(())
}
