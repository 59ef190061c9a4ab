//! Golden-file checks for the bundled fixtures. Run with
//! `TENTSPACE_WRITE_FIXTURES=1` to regenerate them in place.

use std::fs;
use std::path::PathBuf;

use tentspace::generators::Field;
use tentspace::grid::{write_grid, GridSpec};

fn repo_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
}

/// The bundled slab is the indicator of the height band (0.05, 0.1) sampled
/// on a grid deep enough that (a) its quasi-norm in the conical 2:2:2:0
/// scale sits within a few percent of the closed form sqrt(2 ln 2) and
/// (b) the slab keeps enough height margin for every factorization's
/// support spread, so the factor files it produces re-norm cleanly.
#[test]
fn bundled_slab_fixture_matches_its_generator() {
    let spec = GridSpec::new(1, 256, 96, 0.012, 0.4).unwrap();
    let f = Field::slab(0.05, 0.1).sample(spec);
    let mut bytes = Vec::new();
    write_grid(&f, &mut bytes).unwrap();
    let path = repo_path("fixtures/slab.grid");
    if std::env::var("TENTSPACE_WRITE_FIXTURES").is_ok() {
        fs::write(&path, &bytes).unwrap();
    }
    let committed = fs::read(&path).unwrap_or_default();
    assert_eq!(
        committed, bytes,
        "fixtures/slab.grid is stale; regenerate with TENTSPACE_WRITE_FIXTURES=1"
    );
}
