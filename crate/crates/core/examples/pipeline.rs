//! Run every stage over the demo configuration into a temporary directory.

use std::path::Path;

use teamscope::pipeline::{Pipeline, RunConfig};

fn main() -> teamscope::Result<()> {
    let demo = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../demo");
    let mut cfg = RunConfig::load(&demo.join("run.toml"))?;
    cfg.paths.out = std::env::temp_dir().join("teamscope-pipeline-example");
    let manifest = Pipeline::new(cfg.clone())?.run(None)?;
    for s in &manifest.stages {
        println!(
            "{:<11} {:<9} rows={:<6} {:.2}s",
            s.stage.name(),
            s.status,
            s.rows,
            s.seconds
        );
    }
    println!("outputs in {}", cfg.paths.out.display());
    Ok(())
}
