//! Projected descent for the Lambda-constrained Onofri functional at
//! a = 0.49 with bound c0 = 0.5: every seeded run collapses to the trivial
//! minimizer with vanishing Euler-Lagrange multipliers.

use onofri_lab::cli::{cmd_minimize, MinimizeParams};

fn main() -> onofri_lab::Result<()> {
    onofri_lab::init_thread_pool_from_env();
    let outcome = cmd_minimize(&MinimizeParams {
        a: Some(0.49),
        c0: Some(0.5),
        seeds: Some((0..10).collect()),
        penalty_weight: None,
        l_max: Some(48),
        init_sup: Some(0.3),
    })?;
    print!("{}", outcome.output);
    Ok(())
}
