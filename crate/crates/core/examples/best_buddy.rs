//! Best-buddy search on a textured HR image and a noisy estimate of it.
//!
//! Shows where the buddies come from (pyramid level, same location or not)
//! and how the loss compares with plain MAE and with the `beta = 0` case.
//!
//! ```bash
//! cargo run --release -p buddykit --example best_buddy -- [size] [noise]
//! ```

use buddykit::imagekit::mae;
use buddykit::lossfns::best_buddy_loss;
use buddykit::patchcore::{BuddyProblem, BuddySearchConfig, SearchMode, PYRAMID_SCALES};
use buddykit::synth;

fn main() -> buddykit::Result<()> {
    let mut args = std::env::args().skip(1);
    let size: usize = args.next().map(|s| s.parse().expect("size")).unwrap_or(48);
    let noise: f64 = args.next().map(|s| s.parse().expect("noise")).unwrap_or(0.05);

    let hr = synth::textured_image(size, size, 3, 11)?;
    let sr = synth::perturbed(&hr, noise, 12)?;
    let problem = BuddyProblem::new(&sr, &hr)?;
    println!(
        "{} query patches, {} candidates over 3 levels",
        problem.queries.len(),
        problem.db.len()
    );

    for (alpha, beta) in [(1.0, 1.0), (1.0, 0.0)] {
        let cfg = BuddySearchConfig::new(alpha, beta, SearchMode::Accelerated);
        let assignment = problem.search(&cfg)?;
        let loss = best_buddy_loss(&problem.queries, &assignment, &problem.db)?;
        let mut per_level = [0usize; 3];
        let mut colocated = 0;
        for m in &assignment.matches {
            let level = problem.db.provenance(m.buddy_index).level;
            per_level[PYRAMID_SCALES.iter().position(|&s| s == level).expect("known scale")] += 1;
            if m.buddy_index == problem.db.colocated_index(m.query_index) {
                colocated += 1;
            }
        }
        println!(
            "alpha {alpha}, beta {beta}: loss {loss:.5}, colocated {colocated}/{}, from scales 1/2/4 {per_level:?}",
            assignment.len()
        );
    }
    println!("plain MAE {:.5}", mae(&sr, &hr)?);
    Ok(())
}
