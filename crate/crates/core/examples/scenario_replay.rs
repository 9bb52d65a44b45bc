//! Runs a bundled scenario script, prints its transcript digest, snapshots
//! the final pool and restores it.
//!
//!     cargo run --example scenario_replay [-- path/to/script.json]

use std::path::PathBuf;

use demm::engine::{parse_scenario, restore, run_scenario, snapshot, RunOptions};

fn main() -> anyhow::Result<()> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/example8_delay.json")
    });
    let script = parse_scenario(&std::fs::read_to_string(&path)?)?;
    let opts = RunOptions { base_dir: path.parent().unwrap().to_path_buf(), ..RunOptions::default() };
    let out = run_scenario(&script, &opts)?;
    let t = &out.transcript;
    println!("{}: {} events, {} failed checks", t.name, t.events.len(), t.failures.len());
    for e in &t.events {
        let at = e.index.map_or("start".to_string(), |i| i.to_string());
        println!("  block {} {at:>5}  {}", e.block, e.kind);
    }
    println!("flows {:?}", t.flows);
    println!("digest {}", t.digest());

    if let Some(pool) = &t.final_pool {
        let text = snapshot(pool);
        assert_eq!(&restore(&text)?, pool);
        println!("snapshot round-trips ({} bytes)", text.len());
    }
    Ok(())
}
