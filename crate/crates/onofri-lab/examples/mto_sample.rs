//! Onofri gap avg|grad u|^2 + 2 avg(u) - log avg(e^{2u}) >= 0 and the Jensen
//! slack log avg(e^{2u}) - 2 avg(u) >= 0 on random band-limited fields.
//!
//! ```bash
//! cargo run --release --example mto_sample [count]
//! ```

use onofri_lab::cli::{cmd_mto_sample, MtoSampleParams};

fn main() -> onofri_lab::Result<()> {
    onofri_lab::init_thread_pool_from_env();
    let count = std::env::args().nth(1).and_then(|s| s.parse().ok());
    let outcome = cmd_mto_sample(&MtoSampleParams {
        count,
        band_l: None,
        amplitude: None,
        seed: Some(0),
        grid_l: None,
    })?;
    print!("{}", outcome.output);
    println!("# all fields satisfy both inequalities: {}", outcome.ok);
    Ok(())
}
