//! Write the reference schemes as JSON and read them back.
//!
//! `cargo run --example scheme_io -- <dir>` (default `fixtures/`).

use std::path::PathBuf;

use hypstab::{fixtures, io};

fn main() -> hypstab::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    std::fs::create_dir_all(&dir)?;
    let schemes = [
        ("upwind", fixtures::upwind(1.0, 0.5)),
        ("lax_friedrichs", fixtures::lax_friedrichs(1.0, 0.5)),
        ("lax_wendroff", fixtures::lax_wendroff(1.0, 0.5).with_extrapolation()),
        ("leapfrog", fixtures::leapfrog(1.0, 0.5)),
    ];
    for (name, s) in schemes {
        let path = dir.join(format!("{name}.json"));
        std::fs::write(&path, io::scheme_to_json(&s) + "\n")?;
        let back = io::load_scheme(&path)?;
        assert_eq!(back, s);
        println!("{:<16} N={} r={} p={} q={} s={} lambda={}  -> {}", name, s.dim(), s.left_width(), s.right_width(), s.boundary_width(), s.extra_levels(), s.mesh_ratio(), path.display());
    }
    Ok(())
}
