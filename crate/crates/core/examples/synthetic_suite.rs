//! Mean metrics per flawed theory at 100 training exemplars.
//!
//! cargo run --release -p ptr-core --example synthetic_suite [-- --bias 2]

use std::time::Instant;

use ptr_core::harness::{mean, run_experiment, ExperimentSpec, MetricsRow};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let bias = args.iter().position(|a| a == "--bias").map(|i| args[i + 1].parse::<f64>().expect("numeric bias"));
    println!("theory  error%  ratio  exemplars  revisions  seconds");
    for errors in [3, 6, 9, 12, 15] {
        let t = Instant::now();
        let spec = ExperimentSpec { errors, train: vec![100], bias, ..Default::default() };
        let rows = run_experiment(&spec).expect("bundled fixtures are valid");
        let all = |_: &MetricsRow| true;
        println!(
            "G{errors:<5} {:>7.2} {:>6.3} {:>10.1} {:>10.2} {:>8.2}",
            mean(&rows, all, |r| r.test_error),
            mean(&rows, all, |r| r.radicality_ratio),
            mean(&rows, all, |r| r.exemplars as f64),
            mean(&rows, all, |r| r.revisions as f64),
            t.elapsed().as_secs_f64()
        );
    }
}
