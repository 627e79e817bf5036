//! Drive an experiment from a TOML config, as the command-line tool does.

use coarse_lab::experiment::{self, ExperimentConfig};
use std::path::Path;

const CONFIG: &str = r#"
schema_version = 1
experiment = "chern-sweep"
k_grid = 24
masses = [-3.0, -1.0, 1.0, 3.0]

[model]
family = "toy-dirac"
mass = 1.0
axes = [{ extent = 16, boundary = "periodic" }, { extent = 16, boundary = "periodic" }]
"#;

fn main() -> coarse_lab::Result<()> {
    let config = ExperimentConfig::from_toml_str(CONFIG, Path::new("inline.toml"))?;
    print!("{}", experiment::validate(&config, None)?.render());
    let report = experiment::run(&config, None)?;
    for (name, body) in experiment::plot_tables(&report) {
        println!("--- {name}\n{body}");
    }
    let dir = std::env::temp_dir().join("coarse-lab-example");
    for path in experiment::write_outputs(&report, &dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
