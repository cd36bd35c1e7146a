//! Writes the reference manifolds to `fixtures/`.

fn main() -> std::io::Result<()> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    std::fs::create_dir_all(&dir)?;
    for f in hypercells::fixtures::all() {
        std::fs::write(dir.join(format!("{}.json", f.name)), f.to_json())?;
    }
    Ok(())
}
