//! The analytic verdict and a full CLI run writing artifacts and a manifest.
use jumprec::cli::{classify, run, Config};

fn main() -> jumprec::Result<()> {
    for text in [
        "d = 1\nbeta = 1.5\np_prime = -1\nq_prime = 0.4",
        "d = 1\nbeta = 1.5\np_prime = -1\nq_prime = 0.6",
        "d = 1\nbeta = 1.5\np_prime = -1\nq_prime = 0.4\ndiffusion_exponent = 1.5",
    ] {
        let c = classify(&Config::parse(text)?)?;
        println!("{} ← {}", c.verdict, text.replace('\n', ", "));
    }

    let dir = std::env::temp_dir().join("jumprec-example");
    std::fs::create_dir_all(&dir)?;
    let cfg = dir.join("lambda.cfg");
    std::fs::write(&cfg, "d = 2\nalpha = 1\nq = -0.5\n")?;
    let code = run([
        "jumprec",
        "lambda",
        "--config",
        cfg.to_str().unwrap_or_default(),
        "--out",
        dir.to_str().unwrap_or_default(),
    ]);
    println!("jumprec lambda exited with {code}; artifacts in {}", dir.display());
    Ok(())
}
