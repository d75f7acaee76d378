use levylab::*;
fn main() -> Result<()> {
    let domain = BoxDomain::standard(2)?;
    let spec = SystemSpec::nse().validated(domain.d())?;
    let basis = build_basis(&domain, &spec, 16, 3.0)?;
    let triple = assemble_triple(&basis, &spec)?;
    for (i, m) in basis.modes().iter().enumerate().take(16) {
        println!("mode {i}: k = {:?} phase = {:?} pol_index = {} lambda = {:.3}", &m.k[..2], m.phase, m.pol_index, m.lambda);
    }
    let mut u = vec![0.0; 16];
    u[0] = 0.4; u[1] = -0.3; u[2] = 0.2; u[3] = 0.1;
    let us = basis.state(u, 0.0);
    let b = triple.apply_b(&basis, &us, &us, 16)?;
    println!("B(u,u) coeffs = {:?}", b.coeffs());
    Ok(())
}
