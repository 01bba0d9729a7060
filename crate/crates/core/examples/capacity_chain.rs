//! Chain cut functions u_N = Σ p_n φ_n and their energies, which bound the
//! capacity C(r, R) from above; the M-functionals of the capacity criterion.
use jumprec::model::{make_model, KernelVariant};
use jumprec::recurrence::{analyze, m_functionals, LFamily, RecurrenceInput, RecurrenceSettings, CAPACITY_K};

fn main() -> jumprec::Result<()> {
    let settings = RecurrenceSettings::default();
    for (label, q, family) in [
        ("recurrent p = q = 0", 0.0, LFamily::Power { kappa: 0.0 }),
        ("transient p = q = 0.3", 0.3, LFamily::Power { kappa: 0.4 }),
    ] {
        let m = make_model(1, 1.2, 1.2, q, q, KernelVariant::StablePair)?;
        let input = RecurrenceInput::from_model(m, family);
        let r = analyze(&input, &settings)?;
        println!("{label}: integral test {}", r.integral.verdict);
        for c in &r.capacity {
            println!(
                "  R = {:>7}: {} links, energy {:.5} (bound K/∫ = {:.5})",
                c.big_r, c.links, c.energy, c.bound
            );
        }
        let m = m_functionals(&input, 10.0, 40.0, 1e-7)?;
        println!("  M0 {:.4}  M1(10) {:.4}  M2(10, 40) {:.6}", m.m0, m.m1, m.m2);
    }
    println!("K = {CAPACITY_K} (calibration constant)");
    Ok(())
}
