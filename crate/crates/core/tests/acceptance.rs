//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero on failure.
//! Runs without the libtest harness so the lines show up in plain `cargo test` output.
//!
//! The reference kernel table (r step 0.05 up to 5, beta step 0.1 up to 20) takes a minute or
//! two to build; it is cached under the cargo target directory and shared by all tests.

use std::path::PathBuf;
use std::sync::OnceLock;

use bleach_core::kernel::{kernel_ode_march, load_table, save_table, MarchConfig};
use bleach_core::optimizer::{sweep_beta, BetaSweep};
use bleach_core::validation::*;
use bleach_core::KernelTable;

const SEED: u64 = 20_240_601;

fn cache_path() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-reference.ktab")
}

fn reference_table() -> &'static KernelTable {
    static TABLE: OnceLock<KernelTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let r = KernelTable::uniform_grid(5.0, 0.05).unwrap();
        let b = KernelTable::uniform_grid(20.0, 0.1).unwrap();
        let config = MarchConfig::default();
        if let Ok(t) = load_table(cache_path()) {
            if t.r_grid() == r.as_slice() && t.beta_grid() == b.as_slice() && t.meta.rtol == config.rtol {
                return t;
            }
        }
        let t = kernel_ode_march(&r, &b, &config).expect("reference table");
        save_table(&t, cache_path()).expect("cache reference table");
        t
    })
}

fn reference_sweep() -> &'static BetaSweep {
    static SWEEP: OnceLock<BetaSweep> = OnceLock::new();
    SWEEP.get_or_init(|| sweep_beta(reference_table(), 4).expect("beta sweep"))
}

fn report(criterion: u8, outcomes: &[CheckOutcome]) -> bool {
    for o in outcomes {
        println!("    {}", o.line());
    }
    let passed = outcomes.iter().all(|o| o.passed);
    println!("criterion {criterion}: {}", if passed { "PASS" } else { "FAIL" });
    passed
}

fn main() {
    let _ = env_logger::builder().is_test(true).try_init();
    let table = reference_table();
    let sweep = reference_sweep();
    let results = [
        report(1, &[check_kernel_routes(SEED)]),
        report(2, &[check_oracle_equivalence(table)]),
        report(3, &[check_transitions(table, sweep)]),
        report(4, &[check_sensitivity_gain(sweep)]),
        report(5, &[check_problem2_majority(table)]),
        report(6, &[check_error_scaling(SEED, 200)]),
        report(7, &check_invariant_suite(table, SEED)),
        report(8, &[check_power_iteration()]),
    ];
    let failed: Vec<usize> = (1..=results.len()).filter(|&c| !results[c - 1]).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", results.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
