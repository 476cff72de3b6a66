//! One canned reproduction: `fig1-left`, `fig1-right` or `fig2` (default).

use sdenet::harness::reproduce::{reproduce, Figure};

fn main() -> sdenet::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "fig2".into());
    let fig = Figure::parse(&name).ok_or_else(|| sdenet::Error::Config(format!("unknown figure {name}")))?;
    let out = std::env::temp_dir().join("sdenet-reproduce").join(fig.name());
    let rep = reproduce(fig, fig.default_seed(), &out, None)?;
    for line in rep.summary.lines() {
        println!("{line}");
    }
    println!("{}: {}", fig, if rep.passed() { "PASS" } else { "FAIL" });
    Ok(())
}
