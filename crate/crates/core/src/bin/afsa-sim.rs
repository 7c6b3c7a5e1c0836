use std::process::ExitCode;

use afsa::cli::{parse_cli, RunPlan};
use afsa::engine::{sweep, ExperimentError, ExperimentResult};
use afsa::report::{emit_report, report_rows};
use clap::error::ErrorKind;

const EXIT_INVALID: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_INCOMPLETE: u8 = 3;

fn summary_line(labels: &[(String, String)], res: &ExperimentResult) -> String {
    let c = &res.config;
    let a = &res.aggregate;
    let mut line = format!(
        "{} K={} N={} n={} trials={}",
        c.protocol, c.k_initial, c.frame_slots, c.seq_bits, c.trials
    );
    for (k, v) in labels {
        line.push_str(&format!(" [{k}={v}]"));
    }
    match (a.mean_per_tag_us, a.stddev_per_tag_us) {
        (Some(mean), Some(sd)) => line.push_str(&format!(": per-tag {mean:.2} us (sd {sd:.2})")),
        _ => line.push_str(": no tags identified"),
    }
    line.push_str(&format!(", identification rate {:.4}", a.identification_rate));
    if a.incomplete_trials > 0 {
        line.push_str(&format!(", {} trials hit max-rounds", a.incomplete_trials));
    }
    line
}

fn run(plan: &RunPlan) -> ExitCode {
    let mut rows = Vec::new();
    let mut invalid = false;
    let mut incomplete = false;
    let mut runtime = false;
    for cell in sweep(plan.cells()) {
        match cell.outcome {
            Ok(res) => {
                eprintln!("{}", summary_line(&cell.labels, &res));
                incomplete |= res.aggregate.incomplete_trials > 0;
                rows.extend(report_rows(&res, plan.per_round));
            }
            Err(ExperimentError::Invalid(e)) => {
                eprintln!("invalid configuration {:?}: {e}", cell.labels);
                invalid = true;
            }
            Err(e) => {
                eprintln!("error {:?}: {e}", cell.labels);
                runtime = true;
            }
        }
    }
    if let Err(e) = emit_report(&rows, plan.format, plan.out.as_deref()) {
        eprintln!("{e}");
        return ExitCode::from(EXIT_RUNTIME);
    }
    if invalid {
        ExitCode::from(EXIT_INVALID)
    } else if runtime {
        ExitCode::from(EXIT_RUNTIME)
    } else if incomplete {
        ExitCode::from(EXIT_INCOMPLETE)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    match parse_cli(std::env::args_os()) {
        Ok(plan) => run(&plan),
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            ExitCode::SUCCESS
        }
        Err(e) => {
            let _ = e.print();
            ExitCode::from(EXIT_INVALID)
        }
    }
}
