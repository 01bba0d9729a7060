//! Optional-stopping identity E u(X_τ) = u(x0) + E∫_0^τ 𝓛⁽²⁾u(X_s) ds for
//! u = ψ_δ and τ = t* ∧ σ ∧ (last jump of the budget).
use jumprec::model::{make_model, KernelVariant};
use jumprec::simulate::{dynkin_check, SimConfig};

fn main() -> jumprec::Result<()> {
    let m = make_model(1, 1.2, 1.2, 0.0, -0.2, KernelVariant::StablePair)?;
    let cfg = SimConfig::new(m, 5.0, 1.0, 100_000, 5_000, 11);
    let r = dynkin_check(&cfg, 0.3, 10.0)?;
    println!("lhs {:.6} rhs {:.6} residual {:+.2e} se {:.2e}", r.lhs, r.rhs, r.residual, r.se);
    println!("within 3 se: {} (hits {}, censored {})", r.within(3.0), r.hits, r.censored);
    Ok(())
}
