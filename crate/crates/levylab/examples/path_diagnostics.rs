//! Path-space regularity diagnostics on a simulated ensemble: the
//! cadlag modulus w(u, δ) computed exactly by dynamic programming over
//! grid partitions, the Aldous-type exceedance table with its (C, β)
//! fit, and localized space-time seminorms on nested windows.
//!
//!   cargo run --example path_diagnostics

use levylab::{
    aldous_statistic, assemble_triple, build_basis, modulus_curve, seminorms_on_windows,
    simulate_path, BoxDomain, LocalWindow, NoiseModel, PathNorm, SimConfig, StoppingRule,
    SystemSpec, TrajectoryRecord,
};

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
    let ensemble: Vec<TrajectoryRecord> = (0..40)
        .map(|path| simulate_path(&basis, &triple, &model, &sim, path))
        .collect::<levylab::Result<_>>()?;

    // Modulus in the weak U' metric: small-jump accumulation must not
    // destroy it, and it is nondecreasing in delta by construction.
    let deltas = [0.02, 0.05, 0.1, 0.2, 0.4];
    let curve = modulus_curve(&basis, &ensemble[0], &deltas, PathNorm::UDual)?;
    println!("# modulus of path 0 ({} jumps):", ensemble[0].jumps.len());
    let mut out = Vec::new();
    curve.write_text(&mut out)?;
    print!("{}", String::from_utf8_lossy(&out));
    assert!(curve.nondecreasing());
    println!();

    // Worst case over stopping rules approximates the sup over
    // stopping times in the tightness criterion.
    let rules = [
        StoppingRule::FirstHitting { level: 0.6 },
        StoppingRule::FixedTime { t: 0.0 },
        StoppingRule::FixedTime { t: 0.5 },
    ];
    let thetas = [1.0 / 64.0, 1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0];
    let etas = [1e-3, 1e-2, 1e-1];
    let report = aldous_statistic(&basis, &ensemble, &rules, &thetas, &etas, 1.0)?;
    let mut out = Vec::new();
    report.write_text(&mut out)?;
    print!("{}", String::from_utf8_lossy(&out));
    match &report.fit {
        Some(fit) => println!("fitted E|u(tau+theta) - u(tau)| ~ C theta^beta with C = {:.4}, beta = {:.4}", fit.c, fit.beta),
        None => println!("degenerate moments, no fit"),
    }
    println!();

    // Seminorms on nested space windows: monotone by construction.
    let windows = LocalWindow::nested_family(&domain, 3);
    println!("# window, halfwidth, p_{{T,R}}(u)");
    for row in seminorms_on_windows(&basis, &ensemble[0], &windows, 33)? {
        println!("{}, {:.4}, {:.6}", row.window, row.halfwidth, row.value);
    }
    Ok(())
}
