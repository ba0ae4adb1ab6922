//! `evgraph gradcheck`: finite-difference gradient checks.
//!
//! Prints the max relative error per family and exits 0 only when every
//! family stays below the tolerance.

use evgraph_core::gradcheck::{check_families, default_families};

use crate::CliError;

pub fn run(seed: u64, tolerance: f64) -> Result<(), CliError> {
    if !(tolerance > 0.0) && tolerance != 0.0 {
        return Err(CliError::Config("tolerance must be non-negative".into()));
    }
    let reports =
        check_families(&default_families(), seed, 20).map_err(CliError::runtime)?;
    let mut all_ok = true;
    for report in &reports {
        let ok = report.max_rel_error < tolerance;
        all_ok &= ok;
        println!(
            "{:<12} max relative error {:.3e} over {} parameters [{}]",
            report.family,
            report.max_rel_error,
            report.params_checked,
            if ok { "ok" } else { "FAIL" }
        );
    }
    if all_ok {
        Ok(())
    } else {
        Err(CliError::Runtime(format!(
            "gradient checks exceeded the tolerance {tolerance:e}"
        )))
    }
}
