//! Hitting frequency of the unit ball for the big-jump process against the
//! ψ_δ bound, on both sides of the threshold q = (β − d)/2.
use jumprec::model::{make_model, KernelVariant};
use jumprec::simulate::{run_big_jump_paths, SimConfig};

fn main() -> jumprec::Result<()> {
    for q in [0.0, 0.3] {
        let m = make_model(1, 1.2, 1.2, 0.0, q, KernelVariant::StablePair)?;
        let cfg = SimConfig::new(m, 100.0, 1.0, 20_000, 400, 2024);
        let e = run_big_jump_paths(&cfg)?;
        println!(
            "q = {q}: freq {:.3} [{:.3}, {:.3}], bound {:.3}, censored {}, {} jumps",
            e.freq, e.ci_low, e.ci_high, e.theory_bound, e.censored, e.total_jumps
        );
    }
    Ok(())
}
