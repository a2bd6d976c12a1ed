//! Writes the small seeded corpus bundled with the CLI.
//!
//! Usage: `cargo run -p dgner-core --example make_toy_corpus -- <dir>`

use std::fs;
use std::path::PathBuf;

use dgner::data::serialize;
use dgner::synthetic::memorization_corpus;

fn main() -> dgner::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "toy".into()));
    fs::create_dir_all(&dir)?;
    for (name, count, seed) in [("train", 40, 11), ("dev", 15, 12), ("test", 15, 13)] {
        fs::write(
            dir.join(format!("{name}.txt")),
            serialize(&memorization_corpus(count, seed)),
        )?;
    }
    Ok(())
}
