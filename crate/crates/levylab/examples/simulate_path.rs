//! Simulates one trajectory of the Galerkin Navier-Stokes system under
//! the reference Wiener + jump noise and prints the head of the export
//! table, the jump markers with their left/right states, and the
//! first-hitting time of the localization radius when one occurs.
//!
//!   cargo run --example simulate_path

use levylab::{assemble_triple, build_basis, simulate_path, BoxDomain, NoiseModel, SimConfig, SystemSpec};

fn main() -> levylab::Result<()> {
    let domain = BoxDomain::standard(2)?;
    let spec = SystemSpec::nse().validated(domain.d())?;
    let basis = build_basis(&domain, &spec, 8, 3.0)?;
    let triple = assemble_triple(&basis, &spec)?;
    let model = NoiseModel::reference();
    let sim = SimConfig {
        n: 8,
        dt: 1e-3,
        t_end: 1.0,
        u0: vec![0.4, -0.3, 0.2, 0.1],
        forcing: Default::default(),
        r_stop: 2.0,
        cutoff_level: 8.0,
        disable_cutoff: false,
        semi_implicit: false,
        seed: 42,
        fault: None,
    };
    let rec = simulate_path(&basis, &triple, &model, &sim, 0)?;

    let mut out = Vec::new();
    rec.write_text(&basis, false, &mut out)?;
    let text = String::from_utf8_lossy(&out);
    for line in text.lines().take(8) {
        println!("{line}");
    }
    println!("... {} grid points total", rec.times.len());
    println!();

    println!("{} jumps on the path:", rec.jumps.len());
    for m in &rec.jumps {
        let h = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        println!(
            "  t = {:.4}  mark = {:+.4}  region = {}  |u-| = {:.4} -> |u+| = {:.4}",
            m.t,
            m.mark,
            if m.small { "small" } else { "large" },
            h(&m.left),
            h(&m.right)
        );
    }
    match rec.tau {
        Some(tau) => println!("first hit of R_stop = {} at t = {tau:.4}", sim.r_stop),
        None => println!("|u|_H stayed below R_stop = {} on [0, {}]", sim.r_stop, sim.t_end),
    }
    Ok(())
}
