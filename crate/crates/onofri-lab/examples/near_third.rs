//! Near-bifurcation expansion quality: approaching a = 1/3 from above, the
//! nontrivial solution aligns with (3/2)(x3^2 - 1/3), the ratio
//! Lambda_33 / |u|_inf tends to 4/15 = 0.2667, and |u-hat|_{L^2} / |u|_inf^2
//! stays bounded.

use onofri_lab::meanfield::{continue_branch, near_third_row, ONE_THIRD};

fn main() -> onofri_lab::Result<()> {
    onofri_lab::init_thread_pool_from_env();
    let branch = continue_branch(ONE_THIRD + 1e-2, ONE_THIRD + 1e-3, 2e-3, true)?;
    println!("a,profile_corr,beta_ratio,uhat_l2_over_sup_sq");
    for a in [ONE_THIRD + 1e-2, ONE_THIRD + 3e-3, ONE_THIRD + 1e-3] {
        let point = branch.refine_at(a, 1e-11, 40)?;
        let row = near_third_row(&point);
        println!(
            "{:.10},{:.10},{:.10},{:.10}",
            row.a, row.profile_corr, row.beta_ratio, row.uhat_ratio
        );
    }
    Ok(())
}
