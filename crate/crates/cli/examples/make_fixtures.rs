//! Regenerates the CSV fixtures under `tests/data`:
//!
//! ```text
//! cargo run -p hetro-cli --example make_fixtures
//! ```

use std::fmt::Write as _;
use std::path::Path;

use hetro_core::sim::{generate_instance, Model, SimScenario};
use hetro_core::Dataset;

/// Base seed of both fixtures; the Model 1 file uses `SEED + 1`.
const SEED: u64 = 20_240;

fn to_csv(data: &Dataset) -> String {
    let (n, p) = (data.n(), data.p());
    let mut out = String::from("y");
    for j in 1..=p {
        let _ = write!(out, ",x{j}");
    }
    out.push('\n');
    for i in 0..n {
        let _ = write!(out, "{}", data.y()[i]);
        for j in 0..p {
            let _ = write!(out, ",{}", data.x()[(i, j)]);
        }
        out.push('\n');
    }
    out
}

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    std::fs::create_dir_all(&dir).unwrap();
    let null = SimScenario::null(400, 0.1).with_seed(SEED);
    let hetero = SimScenario::null(400, 0.1)
        .with_model(Model::Model1Exp)
        .with_c0(0.5)
        .with_seed(SEED + 1);
    for (name, s) in [("homoscedastic.csv", null), ("model1.csv", hetero)] {
        let data = generate_instance(&s, 0).unwrap();
        assert_eq!((data.n(), data.p()), (400, 40));
        std::fs::write(dir.join(name), to_csv(&data)).unwrap();
    }
}
