//! Pseudo-arclength continuation of the nontrivial axisymmetric branch of
//! -a Delta u + 1 = e^{2u} from just above the bifurcation at a = 1/3 up to
//! a = 0.48, printing per-point diagnostics as CSV. The trivial branch over
//! [0.34, 0.6] is appended for comparison.

use onofri_lab::cli::{cmd_branch, BranchParams};

fn main() -> onofri_lab::Result<()> {
    onofri_lab::init_thread_pool_from_env();
    let nontrivial = cmd_branch(&BranchParams {
        a_start: Some(1.0 / 3.0 + 1e-3),
        a_end: Some(0.48),
        step: Some(5e-3),
        switch_at_third: Some(true),
        l_max: None,
    })?;
    print!("{}", nontrivial.output);

    let trivial = cmd_branch(&BranchParams {
        a_start: Some(0.34),
        a_end: Some(0.6),
        step: Some(2e-2),
        switch_at_third: Some(false),
        l_max: None,
    })?;
    // skip the repeated header
    for line in trivial.output.lines().skip(1) {
        println!("{line}");
    }
    Ok(())
}
