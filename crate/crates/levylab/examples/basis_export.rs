//! Builds the spectral basis for each shipped system and prints the
//! mode table in the export format `index, block, wavevector,
//! eigenvalue`, followed by the sparse convection tensor for a small
//! truncation.
//!
//!   cargo run --example basis_export

use levylab::{build_basis, BoxDomain, SystemSpec};

fn main() -> levylab::Result<()> {
    let domain = BoxDomain::standard(2)?;
    for spec in [SystemSpec::nse(), SystemSpec::mhd(), SystemSpec::boussinesq()] {
        let spec = spec.validated(domain.d())?;
        let basis = build_basis(&domain, &spec, 12, 3.0)?;
        println!("# system = {}, {} modes", spec.kind.name(), basis.len());
        let mut out = Vec::new();
        basis.export_metadata(&mut out)?;
        print!("{}", String::from_utf8_lossy(&out));
        println!();
    }

    // The trilinear tensor only stores nonzero triples; antisymmetry
    // in the last two slots means every entry appears with its twin.
    let spec = SystemSpec::nse().validated(domain.d())?;
    let basis = build_basis(&domain, &spec, 6, 3.0)?;
    let triple = levylab::assemble_triple(&basis, &spec)?;
    println!("# convection tensor at n = 6");
    let mut out = Vec::new();
    triple.tensor().export(&mut out)?;
    print!("{}", String::from_utf8_lossy(&out));
    Ok(())
}
