//! The critical big-jump functionals.
//!
//! With `A±(r, s) = 1 + r² ± 2csr` (c = |x|/⟨x⟩, or c = 1 in the limit)
//!
//! ```text
//! J_q(δ,x,r,s) = Σ± (A±^{−δ} − 1)(1 + A±^q)
//! F_q(δ,x)     = ∫_{1/⟨x⟩}^∞ ∫_0^1 J_q (1−s²)^{(d−3)/2} ds r^{−1−α} dr
//! Λ_q(δ)       = ∫_0^∞ ∫_0^1 J̃_q (1−s²)^{(d−3)/2} ds r^{−1−α} dr
//! Λ'_q(δ)      = −∫_0^∞ ∫_{−1}^1 K_q (1−s²)^{(d−3)/2} ds r^{−1−α} dr,
//! K_q          = log A · A^{−δ}(1 + A^q)
//! ```
//!
//! and `𝓛⁽²⁾ψ_δ(x) = ω ψ_δ(x)(1+|x|²)^{q−α/2} F_q(δ,x)` where ω = ω_{d−2}
//! (ω₀ = 2) for d ≥ 2. In d = 1 the s-integral is the two-point rule and
//! ω = 1. Here α is the index of the big-jump tail.
//!
//! Close to r = 0 the two mirrored terms cancel to first order; there the
//! kernels are summed from their Taylor coefficients in `e± = r² ± 2csr`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{omega_d2, BigJumpSetting};
use crate::quad::{integrate_rs, Cosine, QuadOptions, QuadResult, RPoint};
use crate::specfun::{binom, digamma_weighted_sum, gamma, sin_pi, sphere_area, extrapolated_sum, SeriesOptions, SeriesValue};

const TAYLOR_ORDER: usize = 24;
const TAYLOR_BELOW: f64 = 0.05;

/// One of the s-mirrored kernels, as a function of ln A.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    /// (A^{−δ} − 1)(1 + A^q)
    J { delta: f64, q: f64 },
    /// ln A · A^{−δ}(1 + A^q)
    K { delta: f64, q: f64 },
    /// ln A
    Log,
    /// A^q ln A
    PowLog { q: f64 },
}

/// A kernel with its Taylor coefficients in e = A − 1.
#[derive(Debug, Clone, Copy)]
pub struct MirrorKernel {
    kind: KernelKind,
    coeffs: [f64; TAYLOR_ORDER + 1],
}

fn power_coeffs(mu: f64) -> [f64; TAYLOR_ORDER + 1] {
    let mut c = [0.0; TAYLOR_ORDER + 1];
    for (k, v) in c.iter_mut().enumerate() {
        *v = binom(mu, k);
    }
    c
}

fn log_coeffs() -> [f64; TAYLOR_ORDER + 1] {
    let mut c = [0.0; TAYLOR_ORDER + 1];
    for (k, v) in c.iter_mut().enumerate().skip(1) {
        *v = if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
    }
    c
}

fn convolve(a: &[f64; TAYLOR_ORDER + 1], b: &[f64; TAYLOR_ORDER + 1]) -> [f64; TAYLOR_ORDER + 1] {
    let mut c = [0.0; TAYLOR_ORDER + 1];
    for i in 0..=TAYLOR_ORDER {
        for j in 0..=TAYLOR_ORDER - i {
            c[i + j] += a[i] * b[j];
        }
    }
    c
}

impl MirrorKernel {
    pub fn new(kind: KernelKind) -> Self {
        let coeffs = match kind {
            KernelKind::J { delta, q } => {
                let (a, b, c) = (power_coeffs(-delta), power_coeffs(q - delta), power_coeffs(q));
                let mut out = [0.0; TAYLOR_ORDER + 1];
                for k in 1..=TAYLOR_ORDER {
                    out[k] = a[k] + b[k] - c[k];
                }
                out
            }
            KernelKind::K { delta, q } => {
                let (a, b) = (power_coeffs(-delta), power_coeffs(q - delta));
                let mut s = [0.0; TAYLOR_ORDER + 1];
                for k in 0..=TAYLOR_ORDER {
                    s[k] = a[k] + b[k];
                }
                convolve(&log_coeffs(), &s)
            }
            KernelKind::Log => log_coeffs(),
            KernelKind::PowLog { q } => convolve(&log_coeffs(), &power_coeffs(q)),
        };
        MirrorKernel { kind, coeffs }
    }

    /// Kernel value at A = exp(ln_a).
    #[inline]
    pub fn direct(&self, ln_a: f64) -> f64 {
        match self.kind {
            KernelKind::J { delta, q } => (-delta * ln_a).exp_m1() * (1.0 + (q * ln_a).exp()),
            KernelKind::K { delta, q } => ln_a * (-delta * ln_a).exp() * (1.0 + (q * ln_a).exp()),
            KernelKind::Log => ln_a,
            KernelKind::PowLog { q } => (q * ln_a).exp() * ln_a,
        }
    }

    /// f(A₊) + f(A₋) with A± = 1 + r² ± 2 c s r, where `omc` = 1 − c exactly.
    #[inline]
    pub fn mirrored(&self, p: RPoint, cs: Cosine, c: f64, omc: f64) -> f64 {
        // even in s; keep the exact 1 − s on the near side
        let cs = if cs.s < 0.0 {
            Cosine {
                s: -cs.s,
                one_minus: cs.one_plus,
                one_plus: cs.one_minus,
            }
        } else {
            cs
        };
        let r = p.r;
        if r < TAYLOR_BELOW {
            // Σ f_k (e₊^k + e₋^k), e± = a ± b, via u_k = 2a u_{k−1} − (a²−b²) u_{k−2}
            let a = r * r;
            let b = 2.0 * c * cs.s * r;
            let prod = a * a - b * b;
            let (mut u0, mut u1) = (2.0, 2.0 * a);
            let mut acc = self.coeffs[1] * u1;
            for k in 2..=TAYLOR_ORDER {
                let u2 = 2.0 * a * u1 - prod * u0;
                acc += self.coeffs[k] * u2;
                u0 = u1;
                u1 = u2;
            }
            return acc;
        }
        self.direct(ln_a_plus(r, cs.s * c)) + self.direct(ln_a_minus(p, cs, c, omc))
    }
}

#[inline]
fn ln_a_plus(r: f64, cs: f64) -> f64 {
    (r * (r + 2.0 * cs)).ln_1p()
}

/// ln(1 + r² − 2csr), exact near (r, s, c) = (1, 1, 1).
#[inline]
fn ln_a_minus(p: RPoint, s: Cosine, c: f64, omc: f64) -> f64 {
    let r = p.r;
    let e = r * (r - 2.0 * c * s.s);
    if e.abs() < 0.5 {
        e.ln_1p()
    } else {
        (p.dr * p.dr + 2.0 * r * (omc + c * s.one_minus)).ln()
    }
}

/// Pointwise J_q(δ, x, r, s) for |x| = `x_norm`.
#[allow(non_snake_case)]
pub fn Jq(delta: f64, x_norm: f64, r: f64, s: f64, q: f64) -> Result<f64> {
    check_point(delta, r, s)?;
    let (c, omc) = direction_ratio(x_norm);
    if omc == 0.0 && r == 1.0 && s == 1.0 && delta > 0.0 {
        return Err(singular(delta, q));
    }
    let k = MirrorKernel::new(KernelKind::J { delta, q });
    Ok(k.mirrored(RPoint { r, dr: r - 1.0 }, Cosine::new(s), c, omc))
}

/// J̃_q(δ, r, s) = lim_{|x|→∞} J_q(δ, x, r, s).
#[allow(non_snake_case)]
pub fn Jq_tilde(delta: f64, r: f64, s: f64, q: f64) -> Result<f64> {
    check_point(delta, r, s)?;
    if r == 1.0 && s == 1.0 && delta > 0.0 {
        return Err(singular(delta, q));
    }
    let k = MirrorKernel::new(KernelKind::J { delta, q });
    Ok(k.mirrored(RPoint { r, dr: r - 1.0 }, Cosine::new(s), 1.0, 0.0))
}

/// K_q(δ, r, s) = log(A)A^{−δ}(1 + A^q), A = r² + 2rs + 1, for s ∈ [−1, 1].
#[allow(non_snake_case)]
pub fn Kq(delta: f64, r: f64, s: f64, q: f64) -> Result<f64> {
    if !(r >= 0.0) || !(-1.0..=1.0).contains(&s) {
        return Err(Error::domain("Kq", format!("(r, s) = ({r}, {s}) outside [0,∞)×[−1,1]")));
    }
    if r == 1.0 && s == -1.0 {
        return Err(Error::domain("Kq", "A = 0 at (r, s) = (1, −1)"));
    }
    let k = MirrorKernel::new(KernelKind::K { delta, q });
    let la = if s >= 0.0 {
        ln_a_plus(r, s)
    } else {
        ln_a_minus(RPoint { r, dr: r - 1.0 }, Cosine::new(-s), 1.0, 0.0)
    };
    Ok(k.direct(la))
}

fn check_point(delta: f64, r: f64, s: f64) -> Result<()> {
    if !(delta >= 0.0) {
        return Err(Error::out_of_range("delta", format!("{delta} < 0")));
    }
    if !(r >= 0.0) || !(0.0..=1.0).contains(&s) {
        return Err(Error::domain("Jq", format!("(r, s) = ({r}, {s}) outside [0,∞)×[0,1]")));
    }
    Ok(())
}

fn singular(delta: f64, q: f64) -> Error {
    Error::domain(
        "Jq",
        format!("(r, s) = (1, 1) is the singular point of the limit kernel (δ = {delta}, q = {q})"),
    )
}

/// (c, 1 − c) for c = |x|/⟨x⟩, with 1 − c = 1/(⟨x⟩(⟨x⟩ + |x|)).
fn direction_ratio(x_norm: f64) -> (f64, f64) {
    if x_norm.is_infinite() {
        return (1.0, 0.0);
    }
    let br = (1.0 + x_norm * x_norm).sqrt();
    (x_norm / br, 1.0 / (br * (br + x_norm)))
}

/// Upper end δ₀ of the δ-range where Λ and Λ' are evaluated:
/// δ₀ = η + 1/2 with η the midpoint of (−1/2, min(0, q + (d−1)/2)).
pub fn delta0(q: f64, d: usize) -> f64 {
    let upper = (q + (d as f64 - 1.0) / 2.0).min(0.0);
    0.5 * (upper - 0.5) + 0.5
}

/// Whether (q, d, α) lies in [(α−d)/2, 0) where the closed forms apply.
pub fn in_validated_regime(q: f64, d: usize, alpha: f64) -> bool {
    let crit = (alpha - d as f64) / 2.0;
    q >= crit - 1e-15 && q < 0.0
}

fn check_setting(q: f64, d: usize, alpha: f64) -> Result<()> {
    if d < 1 {
        return Err(Error::out_of_range("d", "dimension must be at least 1"));
    }
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::out_of_range("alpha", format!("{alpha} not in (0, 2)")));
    }
    if q >= alpha / 2.0 {
        return Err(Error::out_of_range("q", format!("q = {q} must be below alpha/2 = {}", alpha / 2.0)));
    }
    Ok(())
}

fn check_delta(delta: f64, q: f64, d: usize) -> Result<()> {
    let d0 = delta0(q, d);
    if !(delta >= 0.0 && delta < d0) {
        return Err(Error::out_of_range(
            "delta",
            format!("{delta} not in [0, δ₀) = [0, {d0})"),
        ));
    }
    Ok(())
}

fn warn_regime(q: f64, d: usize, alpha: f64) {
    if !in_validated_regime(q, d, alpha) {
        log::warn!("q = {q} outside [(α−d)/2, 0) for d = {d}, α = {alpha}: quadrature only");
    }
}

/// F_q(δ, x) by (r, s) quadrature. Any δ ≥ 0 is accepted since |x| < ∞
/// keeps the kernel bounded.
#[allow(non_snake_case)]
pub fn Fq(delta: f64, x_norm: f64, setting: &BigJumpSetting, opts: QuadOptions) -> Result<QuadResult> {
    check_setting(setting.q, setting.d, setting.index)?;
    if !(delta >= 0.0) {
        return Err(Error::out_of_range("delta", format!("{delta} < 0")));
    }
    if delta == 0.0 {
        return Ok(zero_result());
    }
    let (c, omc) = direction_ratio(x_norm);
    let k = MirrorKernel::new(KernelKind::J { delta, q: setting.q });
    let r_lo = 1.0 / (1.0 + x_norm * x_norm).sqrt();
    Ok(integrate_rs(|p, s| k.mirrored(p, s, c, omc), setting.d, setting.index, r_lo, opts))
}

/// The right-hand side ω ψ_δ(x)(1+|x|²)^{q−α/2} F_q(δ, x) of the
/// factorization of 𝓛⁽²⁾ψ_δ.
pub fn l2_psi_factorized(delta: f64, x_norm: f64, setting: &BigJumpSetting, opts: QuadOptions) -> Result<f64> {
    let t0 = 1.0 + x_norm * x_norm;
    let scale = omega_d2(setting.d) * t0.powf(-delta) * t0.powf(setting.q - setting.index / 2.0);
    let f = Fq(delta, x_norm, setting, opts)?.require("F_q")?;
    Ok(scale * f)
}

fn zero_result() -> QuadResult {
    QuadResult {
        value: 0.0,
        abs_error_estimate: 0.0,
        evaluations: 0,
        converged: true,
    }
}

/// Λ_q(δ) by (r, s) quadrature; requires 0 ≤ δ < δ₀.
#[allow(non_snake_case)]
pub fn Lambda(delta: f64, q: f64, d: usize, alpha: f64, opts: QuadOptions) -> Result<QuadResult> {
    check_setting(q, d, alpha)?;
    check_delta(delta, q, d)?;
    warn_regime(q, d, alpha);
    if delta == 0.0 {
        return Ok(zero_result());
    }
    let k = MirrorKernel::new(KernelKind::J { delta, q });
    Ok(integrate_rs(|p, s| k.mirrored(p, s, 1.0, 0.0), d, alpha, 0.0, opts))
}

/// Λ'_q(δ) by (r, s) quadrature of −K_q; requires 0 ≤ δ < δ₀.
#[allow(non_snake_case)]
pub fn Lambda_prime(delta: f64, q: f64, d: usize, alpha: f64, opts: QuadOptions) -> Result<QuadResult> {
    check_setting(q, d, alpha)?;
    check_delta(delta, q, d)?;
    warn_regime(q, d, alpha);
    let k = MirrorKernel::new(KernelKind::K { delta, q });
    let mut r = integrate_rs(|p, s| k.mirrored(p, s, 1.0, 0.0), d, alpha, 0.0, opts);
    r.value = -r.value;
    Ok(r)
}

/// ω_{d−1}/ω with the ω of the module docs; B(1/2, (d−1)/2) for d ≥ 2.
fn angular_ratio(d: usize) -> f64 {
    sphere_area(d - 1) / omega_d2(d)
}

/// 1/Γ(x), zero at the poles.
fn recip_gamma(x: f64) -> Result<f64> {
    if x <= 0.0 && x == x.floor() {
        return Ok(0.0);
    }
    Ok(1.0 / gamma(x)?)
}

/// I₁ in closed form,
/// −(ω_{d−1}/ω) Γ(d/2)² Γ(1+α/2) Γ(−α/2) / (α Γ((d+α)/2) Γ((d−α)/2)).
pub fn i1_closed(d: usize, alpha: f64) -> Result<f64> {
    check_setting(-1.0, d, alpha)?;
    let a = alpha / 2.0;
    let h = d as f64 / 2.0;
    let g = gamma(h)?;
    Ok(-angular_ratio(d) * g * g * gamma(1.0 + a)? * gamma(-a)? * recip_gamma(h - a)?
        / (alpha * gamma(h + a)?))
}

/// I₁ from its Beta series
/// (ω_{d−1}/ω)[B(α/2, 1−α/2)/α − Σ_{n≥1} 2^{2n}/(4n) (1/2)_n/(d/2)_n B(n+α/2, n−α/2)].
pub fn i1_series(d: usize, alpha: f64) -> Result<SeriesValue> {
    check_setting(-1.0, d, alpha)?;
    let a = alpha / 2.0;
    let h = d as f64 / 2.0;
    // B(a, 1−a) = π / sin(πa)
    let b0 = std::f64::consts::PI / sin_pi(a);
    // 2^{2n} B(n+a, n−a) starting at n = 1 with 4 B(1+a, 1−a) = 4πa/sin(πa)
    let mut t = 4.0 * std::f64::consts::PI * a / sin_pi(a);
    let mut ratio = 0.5 / h;
    let s = extrapolated_sum("i1_series", h, SeriesOptions::default(), move |n| {
        if n == 0 {
            return b0 / alpha;
        }
        let nf = n as f64;
        let term = -t / (4.0 * nf) * ratio;
        t *= 4.0 * (nf + a) * (nf - a) / ((2.0 * nf) * (2.0 * nf + 1.0));
        ratio *= (nf + 0.5) / (nf + h);
        term
    })?;
    let w = angular_ratio(d);
    Ok(SeriesValue {
        value: w * s.value,
        terms_used: s.terms_used,
        tail_bound: w * s.tail_bound,
    })
}

/// I₁ = ∫∫ log A (1−s²)^{(d−3)/2} ds r^{−1−α} dr over s ∈ [−1, 1].
pub fn i1_quad(d: usize, alpha: f64, opts: QuadOptions) -> Result<QuadResult> {
    check_setting(-1.0, d, alpha)?;
    let k = MirrorKernel::new(KernelKind::Log);
    Ok(integrate_rs(|p, s| k.mirrored(p, s, 1.0, 0.0), d, alpha, 0.0, opts))
}

/// I₂ = ∫∫ A^q log A (1−s²)^{(d−3)/2} ds r^{−1−α} dr over s ∈ [−1, 1].
pub fn i2_quad(q: f64, d: usize, alpha: f64, opts: QuadOptions) -> Result<QuadResult> {
    check_setting(q, d, alpha)?;
    let k = MirrorKernel::new(KernelKind::PowLog { q });
    Ok(integrate_rs(|p, s| k.mirrored(p, s, 1.0, 0.0), d, alpha, 0.0, opts))
}

/// I₂ at q = (α−d)/2 from the digamma series,
/// −(ω_{d−1}/ω) Γ(d/2)/(2Γ((d−α)/2)) Σ Γ(n−α/2) ψ(n+d/2)/n!.
pub fn i2_series_critical(d: usize, alpha: f64) -> Result<SeriesValue> {
    check_setting(-1.0, d, alpha)?;
    let h = d as f64 / 2.0;
    let s = digamma_weighted_sum(d, alpha)?.weighted;
    let f = -angular_ratio(d) * gamma(h)? * recip_gamma(h - alpha / 2.0)? / 2.0;
    Ok(SeriesValue {
        value: f * s.value,
        terms_used: s.terms_used,
        tail_bound: f.abs() * s.tail_bound,
    })
}

/// The four evaluations of I₁ and I₂.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct I1I2 {
    pub i1_quad: f64,
    pub i1_closed: f64,
    pub i1_series: f64,
    pub i2_quad: f64,
    pub i1_quad_error: f64,
    pub i1_series_error: f64,
    pub i2_quad_error: f64,
}

/// I₁ by quadrature, closed form and series, and I₂ by quadrature.
#[allow(non_snake_case)]
pub fn I1_I2(q: f64, d: usize, alpha: f64, opts: QuadOptions) -> Result<I1I2> {
    let i1q = i1_quad(d, alpha, opts)?;
    let i1q_v = i1q.require("I1 quadrature")?;
    let i1s = i1_series(d, alpha)?;
    let i2q = i2_quad(q, d, alpha, opts)?;
    let i2q_v = i2q.require("I2 quadrature")?;
    Ok(I1I2 {
        i1_quad: i1q_v,
        i1_closed: i1_closed(d, alpha)?,
        i1_series: i1s.value,
        i2_quad: i2q_v,
        i1_quad_error: i1q.abs_error_estimate,
        i1_series_error: i1s.tail_bound,
        i2_quad_error: i2q.abs_error_estimate,
    })
}

/// Error estimates attached to a [`LambdaResult`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodErrors {
    pub lambda_quad: f64,
    pub lambda_prime_quad: f64,
    pub i1_quad: f64,
    pub i1_series: f64,
    pub i2_quad: f64,
}

/// Λ, Λ', I₁ and I₂ for one (d, α, q, δ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaResult {
    pub q: f64,
    pub delta: f64,
    pub d: usize,
    pub alpha: f64,
    pub lambda_quad: f64,
    pub lambda_prime_quad: f64,
    /// Λ'_q(0).
    pub lambda_prime_zero: f64,
    pub i1_closed: f64,
    pub i1_series: f64,
    pub i1_quad: f64,
    pub i2_quad: f64,
    /// I₂ from the digamma series, only at q = (α−d)/2.
    pub i2_series: Option<f64>,
    pub delta0: f64,
    pub validated_regime: bool,
    pub method_errors: MethodErrors,
}

/// Evaluates every functional of this module at one parameter point.
pub fn lambda_report(delta: f64, q: f64, d: usize, alpha: f64, opts: QuadOptions) -> Result<LambdaResult> {
    let lam = Lambda(delta, q, d, alpha, opts)?;
    let lam_v = lam.require("Lambda")?;
    let lp = Lambda_prime(delta, q, d, alpha, opts)?;
    let lp_v = lp.require("Lambda'")?;
    let lp0 = if delta == 0.0 {
        lp_v
    } else {
        Lambda_prime(0.0, q, d, alpha, opts)?.require("Lambda'(0)")?
    };
    let ii = I1_I2(q, d, alpha, opts)?;
    let crit = (alpha - d as f64) / 2.0;
    let i2_series = if (q - crit).abs() < 1e-12 {
        Some(i2_series_critical(d, alpha)?.value)
    } else {
        None
    };
    Ok(LambdaResult {
        q,
        delta,
        d,
        alpha,
        lambda_quad: lam_v,
        lambda_prime_quad: lp_v,
        lambda_prime_zero: lp0,
        i1_closed: ii.i1_closed,
        i1_series: ii.i1_series,
        i1_quad: ii.i1_quad,
        i2_quad: ii.i2_quad,
        i2_series,
        delta0: delta0(q, d),
        validated_regime: in_validated_regime(q, d, alpha),
        method_errors: MethodErrors {
            lambda_quad: lam.abs_error_estimate,
            lambda_prime_quad: lp.abs_error_estimate,
            i1_quad: ii.i1_quad_error,
            i1_series: ii.i1_series_error,
            i2_quad: ii.i2_quad_error,
        },
    })
}

/// CSV header and row for a [`LambdaResult`].
pub fn write_lambda_csv<W: std::io::Write>(rows: &[LambdaResult], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "d", "alpha", "q", "delta", "lambda", "lambda_prime", "lambda_prime_zero", "i1_closed",
        "i1_series", "i1_quad", "i2_quad",
    ])?;
    for r in rows {
        wr.write_record([
            r.d.to_string(),
            r.alpha.to_string(),
            r.q.to_string(),
            r.delta.to_string(),
            format!("{:e}", r.lambda_quad),
            format!("{:e}", r.lambda_prime_quad),
            format!("{:e}", r.lambda_prime_zero),
            format!("{:e}", r.i1_closed),
            format!("{:e}", r.i1_series),
            format!("{:e}", r.i1_quad),
            format!("{:e}", r.i2_quad),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
