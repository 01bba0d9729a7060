//! Adaptive Gauss–Kronrod on singular, improper and spherical integrals.
use jumprec::quad::{integrate_radial, integrate_sphere, Cosine, QuadOptions};

fn main() -> jumprec::Result<()> {
    let opts = QuadOptions::new(1e-13, 1e-12);

    // ∫_0^1 r^{-0.9} dr = 10: algebraic endpoint singularity
    let v = integrate_radial(|_| 1.0, 0.0, 1.0, -0.9, opts).require("singular")?;
    println!("∫_0^1 r^-0.9 dr      = {v:.12}");

    // ∫_1^∞ r^{-1.2} log r dr = 1/0.04 = 25: slow algebraic tail
    let v = integrate_radial(|r| r.ln(), 1.0, f64::INFINITY, -1.2, opts).require("tail")?;
    println!("∫_1^∞ r^-1.2 log r dr = {v:.12}");

    // area of S² and ∫_{S²} s² dσ = 4π/3
    let area = integrate_sphere(|_: Cosine| 1.0, 3, &[], opts).require("area")?;
    let second = integrate_sphere(|c: Cosine| c.s * c.s, 3, &[], opts).require("moment")?;
    println!("|S²| = {area:.12}, ∫ s² dσ = {second:.12}");

    // an indicator on the sphere, with its jump passed as a breakpoint
    let cap = integrate_sphere(|c: Cosine| if c.s > 0.5 { 1.0 } else { 0.0 }, 3, &[0.5], opts).require("cap")?;
    println!("cap s > 1/2 = {cap:.12} (π = {:.12})", std::f64::consts::PI);
    Ok(())
}
