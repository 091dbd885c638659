//! Write the data of a figure into a directory and check the manifest hashes.
//!
//!     cargo run --release --example figure_manifest -- fig8 /tmp/fig8

use std::path::PathBuf;

use replica_es::io::{execute, Command, FigureId, Format, Manifest, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let id: FigureId = args.next().unwrap_or_else(|| "fig8".into()).parse()?;
    let dir = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join(id.to_string()));
    let cfg = RunConfig { command: Command::Figure { id }, output: Some(dir.clone()), format: Format::Csv };
    let outcome = execute(&cfg, &mut std::io::sink())?;
    let m = Manifest::read(&dir.join("manifest.json"))?;
    for f in &m.files {
        println!("{:<28} {:>5} rows  {}", f.path, f.rows, &f.sha256[..16]);
    }
    println!("stale: {:?}, truncated: {:?}, exit {}", m.stale_files(&dir), m.truncated, outcome.exit_code());
    Ok(())
}
