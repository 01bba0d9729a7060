//! Λ_q, its derivative at δ = 0 and the I₁/I₂ cancellation at q = (α−d)/2.
use jumprec::lambda::lambda_report;
use jumprec::quad::QuadOptions;

fn main() -> jumprec::Result<()> {
    for (d, alpha) in [(2usize, 1.0), (3, 1.0), (3, 1.5), (4, 1.0), (2, 0.5)] {
        let q = (alpha - d as f64) / 2.0;
        let r = lambda_report(0.0, q, d, alpha, QuadOptions::default())?;
        println!(
            "d={d} α={alpha}: Λ'(0) = {:+.2e}  I1 = {:.10} (closed {:.10}, series {:.10})  I1+I2 = {:+.2e}",
            r.lambda_prime_zero,
            r.i1_quad,
            r.i1_closed,
            r.i1_series,
            r.i1_quad + r.i2_quad
        );
    }
    // away from the critical q the derivative does not vanish
    let r = lambda_report(0.0, -0.2, 2, 1.0, QuadOptions::default())?;
    println!("d=2 α=1 q=−0.2: Λ'(0) = {:+.6}", r.lambda_prime_zero);
    Ok(())
}
