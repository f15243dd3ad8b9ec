//! Quadrature exactness on low-degree sphere monomials.
//!
//! ```bash
//! cargo run --release --example quad_check [L]
//! ```

use onofri_lab::cli::{cmd_quad_check, QuadCheckParams};

fn main() -> onofri_lab::Result<()> {
    onofri_lab::init_thread_pool_from_env();
    let grid_l = std::env::args().nth(1).and_then(|s| s.parse().ok());
    let outcome = cmd_quad_check(&QuadCheckParams { grid_l })?;
    print!("{}", outcome.output);
    println!("# all monomials exact: {}", outcome.ok);
    Ok(())
}
