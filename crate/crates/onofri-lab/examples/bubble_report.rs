//! Bubble asymptotics: exponential mass, Dirichlet energy, first-moment
//! defect and |Lambda|^2 of the cut-off peak fields at the pair, triangle,
//! tetrahedron and octahedron configurations over an epsilon ladder.
//!
//! ```bash
//! cargo run --release --example bubble_report
//! ```

use onofri_lab::cli::{cmd_bubble_report, BubbleReportParams};

fn main() -> onofri_lab::Result<()> {
    onofri_lab::init_thread_pool_from_env();
    let outcome = cmd_bubble_report(&BubbleReportParams::default())?;
    print!("{}", outcome.output);
    Ok(())
}
