//! Run acceptance criteria and print the report.
//!
//! `cargo run --release --example acceptance_report -- [--quick] [ids...]`

use opo::validation::{default_work_dir, report, validate, Scale, ValidationOptions};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let quick = args.iter().any(|a| a == "--quick");
    let ids: Vec<u8> = args.iter().filter_map(|a| a.parse().ok()).collect();
    let opts = ValidationOptions {
        scale: if quick { Scale::Quick } else { Scale::Full },
        work_dir: default_work_dir(),
        workers: None,
        progress: false,
    };
    print!("{}", report(&validate(&ids, opts), true));
}
