//! Free-parameter counts for trained models.
//!
//! A row-stochastic table with `n` columns contributes `n - 1` free entries
//! per row; Gaussian components contribute their means and diagonal
//! variances.

use crate::error::{Error, Result};

/// Free parameters of a continuous HMM with diagonal covariances:
/// `M` states, `N` mixture components per state, dimension `D`.
pub fn count_params_chmm(num_states: usize, num_components: usize, dim: usize) -> Result<u64> {
    if num_states == 0 || num_components == 0 || dim == 0 {
        return Err(Error::invalid(
            "state, component, and dimension counts must all be at least 1",
        ));
    }
    let m = num_states as u64;
    let n = num_components as u64;
    let d = dim as u64;
    Ok(m * (m - 1) + m * (n - 1) + n * m * d + m * n * d + (m - 1))
}

/// Free parameters of a discrete HMM with `M` states and `N` symbols.
pub fn count_params_dhmm(num_states: usize, num_symbols: usize) -> Result<u64> {
    if num_states == 0 || num_symbols == 0 {
        return Err(Error::invalid("state and symbol counts must be at least 1"));
    }
    let m = num_states as u64;
    let n = num_symbols as u64;
    Ok(m * (m - 1) + m * (n - 1) + (m - 1))
}
