//! N(s) for coefficients at the boundary growth, the fitted L and the
//! integral test ∫ds/(sL(s)).
use jumprec::recurrence::{analyze, boundary_growth, critical_growth, log_kernel_growth, with_diffusion, RecurrenceSettings};

fn main() -> jumprec::Result<()> {
    let settings = RecurrenceSettings {
        chain_links: 0,
        ..RecurrenceSettings::default()
    };
    let cases = [
        ("boundary growth, β = 1.5", boundary_growth(2, 1.0, 1.5)?),
        ("β = 2 with loglog", critical_growth(2, 1.0)?),
        ("log-perturbed kernel", log_kernel_growth(2, 1.0, 1.5)?),
        ("with a local part", with_diffusion(2, 1.0, 1.5)?),
    ];
    for (name, input) in cases {
        let r = analyze(&input, &settings)?;
        let last = r.n_values.last().expect("grid is not empty");
        println!(
            "{name:<26} L = {:.3}·{}  spread {:.3}  N(2^15) = {:.3} [local {:.3}, small {:.3}, inner {:.3}, outer {:.3}]  {}",
            r.l.c, r.l.family, r.spread, last.total, last.local, last.small, last.big_inner, last.big_outer, r.integral.verdict
        );
    }
    Ok(())
}
