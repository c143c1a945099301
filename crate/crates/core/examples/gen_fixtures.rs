//! Regenerates the bundled band datasets: `cargo run --example gen_fixtures -- <dir>`.

use std::path::PathBuf;

use mansfield_core::domain::Band;
use mansfield_core::ingest::fixture;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    std::fs::create_dir_all(&dir)?;
    for band in Band::ALL {
        let path = dir.join(fixture::file_name(band));
        std::fs::write(&path, fixture::render(band)?)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
