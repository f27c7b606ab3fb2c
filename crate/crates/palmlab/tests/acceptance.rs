//! Full-tier validation: every check must pass, and the whole tier must
//! finish inside its ten-minute budget.  One line is printed per check so a
//! failing run shows the complete table (run with `--nocapture` to see it
//! on success too).

use std::time::{Duration, Instant};

use palmlab::acceptance::{run_tier, Tier};

#[test]
fn full_validation_suite_passes() {
    let start = Instant::now();
    let results = run_tier(Tier::Full);
    let total = start.elapsed();
    assert_eq!(results.len(), 13);
    for r in &results {
        println!("{r}");
    }
    println!("total: {total:.2?}");
    let failed: Vec<&str> = results.iter().filter(|r| !r.pass).map(|r| r.name).collect();
    assert!(failed.is_empty(), "failed checks: {failed:?}");
    assert!(
        total < Duration::from_secs(600),
        "full tier took {total:?}, over the ten-minute budget"
    );
}
