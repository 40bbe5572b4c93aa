// Driving the command-line front end from a TOML config.

use std::fs;

use secrecy_alloc::cli;
use secrecy_alloc::config::RunConfig;
use secrecy_alloc::{Error, Result};

const CONFIG: &str = r#"
spec_version = 1
horizon = 4
power = 1.0
policies = ["blind", "intermediate", "waterfill-acausal"]
n_frames = 5000
seed = 42
out = "compare.csv"

[distribution]
kind = "discrete"
alpha_marginal = [[0.5, 0.5], [2.0, 0.5]]
beta_marginal = [[1.0, 1.0]]
"#;

pub fn run_example() -> Result<()> {
    let cfg = RunConfig::parse(CONFIG)?;
    println!(
        "parsed {} policies over M = {:?}",
        cfg.policies.len(),
        cfg.horizon
    );

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("run.toml");
    fs::write(&path, CONFIG)?;
    let mut stdout = std::io::stdout();
    let code = cli::run(
        [
            "secrecy-alloc",
            "compare",
            "--config",
            path.to_str().unwrap(),
        ],
        &mut stdout,
        &mut std::io::stderr(),
    );
    if code != 0 {
        return Err(Error::Config(format!("compare exited with {code}")));
    }
    print!("{}", fs::read_to_string(dir.path().join("compare.csv"))?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
