//! Verifies the structural operator assumptions on random probes for
//! all three shipped systems: the trilinear identities (antisymmetry
//! in the last pair, interpolation and Lipschitz bounds with measured
//! constants), the Stokes pairing, and the one-sided bound on the
//! zeroth-order coupling.
//!
//!   cargo run --example assumption_check

use levylab::{assemble_triple, build_basis, check_assumptions, BoxDomain, CheckTolerances, SystemSpec};

fn main() -> levylab::Result<()> {
    let domain = BoxDomain::standard(2)?;
    for spec in [SystemSpec::nse(), SystemSpec::mhd(), SystemSpec::boussinesq()] {
        let spec = spec.validated(domain.d())?;
        let basis = build_basis(&domain, &spec, 16, 3.0)?;
        let triple = assemble_triple(&basis, &spec)?;
        let report = check_assumptions(&triple, &basis, 1000, 42, &CheckTolerances::default())?;
        println!("== {} ==", spec.kind.name());
        let mut out = Vec::new();
        report.write_text(&mut out)?;
        print!("{}", String::from_utf8_lossy(&out));
        println!(
            "all_pass = {}  (c1 = {:.6}, c2 = {:.6}, c3 = {:.6})",
            report.all_pass(),
            report.c1,
            report.c2,
            report.c3
        );
        println!();
    }
    Ok(())
}
