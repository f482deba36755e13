//! A small sample-size sweep for both solvers, emitted as CSV, with the
//! log-log rate fit at the end. The full-size sweep lives behind
//! `lporl sweep`; this example uses a reduced grid so it finishes in seconds.
//!
//! ```bash
//! cargo run --example rate_sweep
//! ```

use lporl::harness::{
    fit_rate, median_subopt_by_n, rows_to_csv, run_sweep, CaseSelect, ExperimentConfig, GarnetSpec,
    RateFit,
};

fn main() {
    let config = ExperimentConfig {
        mdp_spec: GarnetSpec {
            seed: 3,
            ..GarnetSpec::default()
        },
        n_grid: vec![250, 1000, 4000],
        num_seeds: 8,
        case: CaseSelect::Both,
        ..ExperimentConfig::default()
    };
    let rows = run_sweep(&config).unwrap();
    print!("{}", rows_to_csv(&rows));

    for case in ["one", "two"] {
        let selected: Vec<_> = rows.iter().filter(|r| r.case == case).cloned().collect();
        eprintln!("case {case}:");
        for (n, m) in median_subopt_by_n(&selected) {
            eprintln!("  n = {n:>5}  median subopt = {m:.3e}");
        }
        match fit_rate(&selected) {
            RateFit::Fitted { slope, intercept } => {
                eprintln!("  fitted: slope {slope:.3}, intercept {intercept:.3}");
            }
            RateFit::Saturated => {
                eprintln!("  saturated: the solver is exact on most seeds at this scale");
            }
        }
    }
}
