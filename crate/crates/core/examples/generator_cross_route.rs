//! The big-jump generator on ψ_δ two ways: direct quadrature and the
//! factorization through F_q. Also the decay exponent of 𝓛⁽²⁾ψ_δ.
use jumprec::generator::{apply_l2, decay_check, GeneratorPart, TestFunction};
use jumprec::lambda::l2_psi_factorized;
use jumprec::model::{make_model, KernelVariant};
use jumprec::quad::QuadOptions;

fn main() -> jumprec::Result<()> {
    let opts = QuadOptions::new(1e-12, 1e-10);
    for (d, q, delta, x) in [(1, -0.2, 0.3, 5.0), (2, 0.1, 0.2, 40.0), (3, -0.5, 0.4, 2.0)] {
        let m = make_model(d, 1.2, 1.2, 0.0, q, KernelVariant::StablePair)?;
        let psi = TestFunction::new(delta)?;
        let mut point = vec![0.0; d];
        point[0] = x;
        let direct = apply_l2(&psi, &point, &m, opts)?;
        let factored = l2_psi_factorized(delta, x, &m.big_jump_setting(), opts)?;
        println!(
            "d={d} q={q:+} δ={delta} |x|={x}: direct {direct:.12e} factored {factored:.12e} rel {:.1e}",
            ((direct - factored) / factored).abs()
        );
    }

    let m = make_model(2, 1.2, 1.2, 0.0, 0.1, KernelVariant::StablePair)?;
    let fit = decay_check(&TestFunction::new(0.2)?, &m, GeneratorPart::L2, &[1e2, 1e3, 1e4], opts)?;
    println!("L2 decay slope {:.4} vs bound {:.4}: {}", fit.slope, fit.theoretical, fit.pass);
    Ok(())
}
