//! Writes the built-in test shapes as model files into a directory
//! (default `data`).

use std::path::PathBuf;

use trimwind::io::save_model;
use trimwind::{shapes, Model, Vec3};

fn main() -> trimwind::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    std::fs::create_dir_all(&dir)?;
    let models = [
        ("sphere.twm", shapes::cobb_sphere(Vec3::ZERO, 1.0)),
        ("torus.twm", shapes::torus(Vec3::ZERO, 2.0, 0.5)),
        (
            "box.twm",
            shapes::box_model(Vec3::new(-1.0, -0.5, -0.25), Vec3::new(1.0, 0.5, 0.25)),
        ),
        (
            "square.twm",
            Model::new(vec![shapes::unit_square().with_id("square")]),
        ),
        (
            "disk_and_dome.twm",
            Model::new(vec![shapes::flat_disk(1.0), shapes::dome(1.0, 0.5)]),
        ),
    ];
    for (name, mut m) in models {
        m.units = "mm".into();
        save_model(&m, &dir.join(name))?;
        println!("wrote {}", dir.join(name).display());
    }
    Ok(())
}
