//! The full appendix audit suite, as run by `sdenet verify-appendix`.

use sdenet::harness::appendix::{verify_appendix, AppendixOptions};

fn main() -> sdenet::Result<()> {
    let report = verify_appendix(&AppendixOptions::default())?;
    for a in &report.audits {
        println!("{}", a.line());
    }
    std::process::exit(if report.all_passed { 0 } else { 2 });
}
