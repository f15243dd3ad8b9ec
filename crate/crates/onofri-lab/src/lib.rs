//! A numerical laboratory for second-moment-constrained Onofri inequalities
//! and the mean field equation -a Delta u + 1 = e^{2u} on the unit sphere.
//!
//! The crate computes the second-moment deviation matrix Lambda(u), verifies
//! sharp concentration thresholds (2/3, 1/6, 0) over discrete measures,
//! constructs cut-off bubble test functions and checks their asymptotic laws,
//! solves and continues the axisymmetric mean field equation through the
//! bifurcation at a = 1/3, and minimizes the Lambda-constrained Onofri
//! functional by projected descent.
//!
//! Start with the runnable examples (one per capability) or the `onofri-lab`
//! binary, which exposes the same drivers as subcommands.

pub mod bubble;
pub mod cli;
pub mod concentration;
pub mod error;
pub mod field;
pub mod meanfield;
pub mod minimizer;
pub mod moments;
pub mod spectral;
pub mod sphere;

pub use error::{Error, Result};

/// Caps rayon parallelism from the ONOFRI_LAB_THREADS environment variable.
///
/// Call once at process start; does nothing when the variable is unset or
/// the global pool was already built.
pub fn init_thread_pool_from_env() {
    if let Ok(v) = std::env::var("ONOFRI_LAB_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}
