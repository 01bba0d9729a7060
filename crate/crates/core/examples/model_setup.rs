//! Build a model, round-trip it through the flat config format and inspect
//! its coefficients and Lévy kernel.
use jumprec::model::{coeff_eval, make_model, KernelVariant, ModelParams};

fn main() -> jumprec::Result<()> {
    let m = make_model(2, 1.2, 1.5, 0.25, -0.1, KernelVariant::StablePair)?;
    let kv = m.to_kv();
    println!("{kv}");
    let back = ModelParams::from_kv(kv.lines().filter_map(|l| l.split_once('=')))?;
    assert_eq!(back, m);

    let k = m.kernel();
    let (c_star, _) = k.small_jump_moments()?;
    println!("∫_(|z|<1) |z|² ν(dz) / d = {c_star:.6}");
    println!("ν(|z| ≥ 1)            = {:.6}", k.big_jump_mass()?);

    let (x, y) = ([3.0, 0.0], [3.5, 0.5]);
    let c = coeff_eval(&m, &x, &y);
    println!("a1 = {:.6}, a2 = {:.6}, c(x, y) = {:.6}", c.a1, c.a2, c.c);
    Ok(())
}
