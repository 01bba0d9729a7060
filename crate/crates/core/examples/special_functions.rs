//! Gamma-family functions and the series identity suite.
use jumprec::specfun::{digamma, gamma, gauss_sum, gauss_sum_closed, identity_suite, IDENTITY_ALPHAS, IDENTITY_DIMS};

fn main() -> jumprec::Result<()> {
    println!("Γ(0.5)² = {:.15} (π = {:.15})", gamma(0.5)?.powi(2), std::f64::consts::PI);
    println!("ψ(1)    = {:.15}", digamma(1.0)?);

    let s = gauss_sum(3, 1.5)?;
    println!("Gauss sum d=3, α=1.5: series {:.12} closed {:.12}", s.value, gauss_sum_closed(3, 1.5)?);

    let rows = identity_suite(&IDENTITY_DIMS, &IDENTITY_ALPHAS, 1e-8)?;
    let worst = rows.iter().map(|r| r.abs_diff / r.tolerance).fold(0.0, f64::max);
    let passed = rows.iter().filter(|r| r.pass).count();
    println!("identity suite: {passed}/{} pass, worst |diff|/tol = {worst:.3e}", rows.len());
    Ok(())
}
