//! Sharp |Lambda|^2 thresholds over centered point measures: 2/3 for two
//! atoms, 1/6 for three, 0 for four, and 1/6 again for four atoms under even
//! symmetry. Emits the search results as JSON.

use onofri_lab::cli::{cmd_config_search, ConfigSearchParams};

fn main() -> onofri_lab::Result<()> {
    onofri_lab::init_thread_pool_from_env();
    let free = cmd_config_search(&ConfigSearchParams {
        n: Some(vec![2, 3, 4]),
        even: Some(false),
        starts: Some(200),
        seed: Some(0),
    })?;
    print!("{}", free.output);
    let even = cmd_config_search(&ConfigSearchParams {
        n: Some(vec![4]),
        even: Some(true),
        starts: Some(200),
        seed: Some(0),
    })?;
    print!("{}", even.output);
    Ok(())
}
