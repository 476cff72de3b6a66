//! Whenever the four sufficient conditions hold, the signed support must be
//! recovered. Pass a qualifying-instance count (default 500).

use sdenet::conditions::{audit_prop3, Prop3AuditOptions};

fn main() -> sdenet::Result<()> {
    let target = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    let opts = Prop3AuditOptions { qualifying: target, max_attempts: 4 * target, ..Default::default() };
    let a = audit_prop3(&opts)?;
    println!(
        "{} drawn, {} qualifying, {} recovered, {} counterexamples, smallest slack {:.2e}",
        a.attempted,
        a.qualifying,
        a.recovered,
        a.counterexamples.len(),
        a.min_slack
    );
    Ok(())
}
