//! Driving the batch front end from code with one of the bundled configs.
//!
//! cargo run --release --example batch_run -- solve examples/configs/solve.json

fn main() {
    let mut args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() < 2 {
        args = vec!["certify".into(), concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/certify.json").into()];
    }
    let out = std::env::temp_dir().join("dphase_batch");
    let code = dphase::cli::run(["dphase", &args[0], "--config", &args[1], "--out", out.to_str().unwrap()]);
    println!("exit status {code}, artifacts in {}", out.display());
}
