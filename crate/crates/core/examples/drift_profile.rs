//! Radial drift of the small-jump generator on ψ_δ(x) = (1+|x|²)^{−δ} and the
//! fitted constants of the Lyapunov bound.
use jumprec::generator::{default_radii, drift_profile_l1};
use jumprec::model::{make_model, KernelVariant};

fn main() -> jumprec::Result<()> {
    // p > (2−d)/2 puts the small-jump part in the transient regime
    let m = make_model(2, 1.0, 1.0, 0.5, 0.0, KernelVariant::StablePair)?;
    let r = drift_profile_l1(&m, 0.25, &default_radii(), 1e-6)?;
    println!("{:>12} {:>14} {:>12}", "|x|", "L1 psi", "normalized");
    for i in (0..r.radii.len()).step_by(4) {
        println!("{:>12.1} {:>14.6e} {:>12.8}", r.radii[i], r.values[i], r.normalized[i]);
    }
    println!("fitted M = {}, fitted C = {:.6}, leading order = {:.6}", r.fitted_m, r.fitted_c, r.leading_order);
    println!("negative beyond M: {}", r.all_negative_beyond_m);
    if let Some(s) = r.stabilization(1e3, 1e4) {
        println!("relative change 1e3 → 1e4: {s:.2e}");
    }
    Ok(())
}
