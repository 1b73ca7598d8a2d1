//! Writes the security table shipped in `data/` (or to the path given).

use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/security_table.txt"));
    std::fs::write(&path, hdqkd::security::generate_table_text()?)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}
