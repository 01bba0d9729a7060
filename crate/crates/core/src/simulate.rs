//! Monte Carlo for the big-jump process, plus a cut-off scheme for the
//! small-jump one.
//!
//! The big-jump process waits an Exp(λ(x)) time at x and then jumps by z drawn
//! from
//!
//! ```text
//! π_x(dz) ∝ (a₂(x) + a₂(x+z)) |z|^{−d−β} dz  on |z| ≥ 1,
//! λ(x)    = ∫_{|z|≥1} (a₂(x) + a₂(x+z)) ν(dz).
//! ```
//!
//! Trajectories are piecewise constant, so a path enters the closed ball
//! B(r_hit) exactly when a post-jump state lies in it. Without a time horizon
//! the embedded jump chain decides hitting and λ is never evaluated.
//!
//! Jumps are drawn by rejection. For |z| ≥ 1 and either sign of q,
//! `(1+|x+z|²)^q ≤ 2^{|q|}(1+|x|²)^q(1+|z|²)^{|q|} ≤ 4^{|q|} a₂(x)|z|^{2|q|}`,
//! so the radial envelope `ρ^{−1−β}(1 + 4^{|q|}ρ^{2|q|})` is a mixture of two
//! Pareto laws with indices β and β − 2|q|. It does not depend on x once a₂(x)
//! is factored out, which bounds the acceptance rate below uniformly in x. The
//! sampler needs |q| < β/2.
//!
//! For q > 0 that envelope accepts only about half the proposals far out,
//! where a₂(x+z) ≈ a₂(x) for most jumps. There the sampler uses
//! `1+|x+z|² ≤ (⟨x⟩+ρ)²` with ⟨x⟩ = (1+|x|²)^{1/2} instead: with
//! b = max(1, ⟨x⟩/4) and K = (1 + b/⟨x⟩)^{2q},
//! `a₂(x+z)/a₂(x) ≤ (1 + ρ/⟨x⟩)^{2q} ≤ K max(1, (ρ/b)^{2q})`.
//! Once ⟨x⟩ ≥ 4 the envelope `ρ^{−1−β}(1 + K + K (ρ/b)^{2q} 1{ρ ≥ b})` is a
//! Pareto(β) law plus an index β − 2q tail beyond b, and its acceptance
//! tends to 2/(1 + 1.25^{2q}) as |x| grows.
//!
//! The small-jump scheme is diagnostic only. It keeps the jumps with
//! ε < |z| < 1 and adds no drift compensator. Since ν is symmetric,
//! ∫⟨∇u(x), z⟩a₁(x)ν(dz) vanishes on every symmetric shell, so the generator
//! is the principal value
//! `lim_{ε→0} ∫_{ε<|z|<1} (u(x+z) − u(x))(a₁(x) + a₁(x+z)) ν(dz)`. The a₁(x+z)
//! asymmetry stays in the kernel. The bias from the cut-off is read off by
//! running ε and ε/2 side by side.
//!
//! Every path draws from its own ChaCha8 stream, keyed by (seed, path index).
//! Results therefore do not depend on the thread count, and a path's prefix
//! does not depend on the budget.

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{apply_l2_radial, big_jump_integral, RadialFunction, TestFunction};
use crate::model::{norm2, ModelParams};
use crate::quad::{integrate_segments, integrate_sphere_rel, radial_segments, shifted_norm2, Node, QuadOptions, QuadResult};
use crate::specfun::sphere_area;

/// Proposals allowed for a single jump before the sampler gives up.
pub const REJECTION_CAP: usize = 1_000_000;

const Z95: f64 = 1.959_963_984_540_054;

/// One simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: ModelParams,
    pub x0: Vec<f64>,
    /// Radius of the closed target ball.
    pub r_hit: f64,
    /// Jumps per path (accepted jumps for the small-jump scheme).
    pub max_jumps: u64,
    /// Process time horizon, none for an unbounded horizon.
    #[serde(default)]
    pub max_time: Option<f64>,
    pub n_paths: usize,
    pub seed: u64,
    /// Small-jump cut-off ε ∈ (0, 1).
    #[serde(default)]
    pub epsilon_cutoff: Option<f64>,
    /// δ used for the hitting bound ψ_δ(r_hit)/ψ_δ(x0).
    #[serde(default = "default_delta_ref")]
    pub delta_ref: f64,
}

fn default_delta_ref() -> f64 {
    0.05
}

impl SimConfig {
    /// Start at `|x0|·e₁` with an unbounded horizon and δ_ref = 0.05.
    pub fn new(model: ModelParams, x0_norm: f64, r_hit: f64, max_jumps: u64, n_paths: usize, seed: u64) -> Self {
        let mut x0 = vec![0.0; model.d];
        x0[0] = x0_norm;
        SimConfig {
            model,
            x0,
            r_hit,
            max_jumps,
            max_time: None,
            n_paths,
            seed,
            epsilon_cutoff: None,
            delta_ref: default_delta_ref(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.x0.len() != self.model.d {
            return Err(Error::Precondition(format!(
                "x0 has {} coordinates, model dimension is {}",
                self.x0.len(),
                self.model.d
            )));
        }
        if !self.x0.iter().all(|v| v.is_finite()) {
            return Err(Error::Precondition("x0 must be finite".into()));
        }
        if !(self.r_hit >= 0.0) || self.r_hit >= self.x0_norm() {
            return Err(Error::Precondition(format!(
                "need 0 ≤ r_hit < |x0|, got r_hit = {}, |x0| = {}",
                self.r_hit,
                self.x0_norm()
            )));
        }
        if self.n_paths == 0 {
            return Err(Error::Precondition("n_paths must be at least 1".into()));
        }
        if let Some(t) = self.max_time {
            if !(t >= 0.0) {
                return Err(Error::Precondition(format!("max_time = {t} must be non-negative")));
            }
        }
        if let Some(e) = self.epsilon_cutoff {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::out_of_range("epsilon_cutoff", format!("{e} not in (0, 1)")));
            }
        }
        if !(self.delta_ref >= 0.0) {
            return Err(Error::out_of_range("delta_ref", format!("{} < 0", self.delta_ref)));
        }
        Ok(())
    }

    pub fn x0_norm(&self) -> f64 {
        norm2(&self.x0).sqrt()
    }

    /// ψ_δ(r_hit)/ψ_δ(x0) with δ = δ_ref.
    pub fn theory_bound(&self) -> f64 {
        let t = TestFunction { delta: self.delta_ref };
        t.at_sq(self.x0_norm().powi(2)) / t.at_sq(self.r_hit * self.r_hit)
    }
}

/// Hitting frequency with a 95% Wilson interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingEstimate {
    pub hits: u64,
    pub n_paths: u64,
    pub freq: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub theory_bound: f64,
    pub delta_ref: f64,
    /// Paths that used up the budget without hitting (counted as non-hits).
    pub censored: u64,
    pub total_jumps: u64,
}

impl HittingEstimate {
    pub fn ci_half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

/// 95% Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = Z95 * Z95;
    let den = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / den;
    let half = Z95 / den * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0).min(p), (centre + half).min(1.0).max(p))
}

/// The per-path random stream.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

#[inline]
fn open_unit<R: Rng>(rng: &mut R) -> f64 {
    // (0, 1]
    1.0 - rng.gen::<f64>()
}

#[inline]
fn exp1<R: Rng>(rng: &mut R) -> f64 {
    -open_unit(rng).ln()
}

/// Scales the unit vector `z` by `rho` and returns |x + z|².
#[inline]
fn shift_into(x: &[f64], rho: f64, z: &mut [f64]) -> f64 {
    let mut y2 = 0.0;
    for (zi, xi) in z.iter_mut().zip(x) {
        *zi *= rho;
        let yi = xi + *zi;
        y2 += yi * yi;
    }
    y2
}

/// Uniform direction on S^{d−1}, written into `out`.
fn random_direction<R: Rng>(rng: &mut R, out: &mut [f64]) {
    if out.len() == 1 {
        out[0] = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        return;
    }
    loop {
        let mut s = 0.0;
        for v in out.iter_mut() {
            *v = rng.sample(StandardNormal);
            s += *v * *v;
        }
        if s > 1e-300 {
            let inv = 1.0 / s.sqrt();
            out.iter_mut().for_each(|v| *v *= inv);
            return;
        }
    }
}

/// Exact sampler for the normalized big-jump law π_x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BigJumpSampler {
    d: usize,
    q: f64,
    /// 4^{|q|}
    c4: f64,
    two_qa: f64,
    inv_beta: f64,
    inv_beta_b: f64,
    beta: f64,
    /// 1.25^{2q} and 0.75^{2q}: the ratio bounds on ρ ≤ ⟨x⟩/4.
    k_far: f64,
    low_far: f64,
    /// Probability of the index-β component.
    p_a: f64,
}

impl BigJumpSampler {
    pub fn new(model: &ModelParams) -> Result<Self> {
        model.check_big_jump()?;
        let qa = model.q.abs();
        let beta = model.beta;
        if 2.0 * qa >= beta {
            return Err(Error::out_of_range(
                "q",
                format!("the rejection envelope needs |q| < beta/2, got q = {}", model.q),
            ));
        }
        let c4 = 4f64.powf(qa);
        let beta_b = beta - 2.0 * qa;
        let m_a = 1.0 / beta;
        let m_b = c4 / beta_b;
        Ok(BigJumpSampler {
            d: model.d,
            q: model.q,
            c4,
            two_qa: 2.0 * qa,
            inv_beta: 1.0 / beta,
            inv_beta_b: 1.0 / beta_b,
            beta,
            k_far: 1.25f64.powf(2.0 * model.q),
            low_far: 0.75f64.powf(2.0 * model.q),
            p_a: m_a / (m_a + m_b),
        })
    }

    /// Lower bound on the acceptance probability, uniform in x.
    pub fn acceptance_lower_bound(&self) -> f64 {
        // target mass ≥ a₂(x)/β; the x-free envelope has mass
        // a₂(x)(1/β + 4^{|q|}/(β − 2|q|)), the far one at most
        // a₂(x)((1 + K)/β + K/(β − 2q)) with K = 1.25^{2q}
        if self.q > 0.0 {
            let far = (1.0 + self.k_far) * self.inv_beta + self.k_far * self.inv_beta_b;
            self.p_a.min(self.inv_beta / far)
        } else {
            self.p_a
        }
    }

    /// Draws a jump from x (with |x|² = `x2`) into `z` and returns |z|.
    pub fn sample_into<R: Rng>(&self, x: &[f64], x2: f64, rng: &mut R, z: &mut [f64]) -> Result<f64> {
        if self.q > 0.0 {
            return self.sample_growing(x, x2, rng, z);
        }
        let ln_t0 = x2.ln_1p();
        for _ in 0..REJECTION_CAP {
            let u = open_unit(rng);
            let inv = if rng.gen::<f64>() < self.p_a {
                self.inv_beta
            } else {
                self.inv_beta_b
            };
            let rho = u.powf(-inv);
            random_direction(rng, z);
            if self.two_qa == 0.0 {
                z.iter_mut().for_each(|v| *v *= rho);
                return Ok(rho);
            }
            let y2 = shift_into(x, rho, z);
            let v = rng.gen::<f64>() * (1.0 + self.c4 * rho.powf(self.two_qa));
            // a₂(x+z)/a₂(x) > 0, so v ≤ 1 accepts without evaluating it
            if v <= 1.0 || v <= 1.0 + (self.q * (y2.ln_1p() - ln_t0)).exp() {
                return Ok(rho);
            }
        }
        Err(Error::RejectionCap {
            cap: REJECTION_CAP,
            x_norm: x2.sqrt(),
        })
    }

    /// The x-dependent envelope for q > 0.
    fn sample_growing<R: Rng>(&self, x: &[f64], x2: f64, rng: &mut R, z: &mut [f64]) -> Result<f64> {
        let t0 = 1.0 + x2;
        let xb = t0.sqrt();
        // Envelope ρ^{−1−β}(k1 + K (ρ/b)^{2q} 1{ρ ≥ b}). Near the origin b = 1
        // and k1 = 1. Far out b = ⟨x⟩/4, k1 = 1 + K, and `low` bounds the
        // ratio from below on ρ ≤ b since 1+|x+z|² ≥ 1+(|x|−ρ)² ≥ (⟨x⟩−ρ)².
        let far = xb >= 4.0;
        let (b, k, k1, low) = if far {
            (0.25 * xb, self.k_far, 1.0 + self.k_far, self.low_far)
        } else {
            (1.0, (1.0 + 1.0 / xb).powf(self.two_qa), 1.0, 0.0)
        };
        // The tail mass K b^{−β}/(β − 2q) is drawn against an upper bound on
        // b^{−β}; the exact power is only needed when the tail is picked.
        let mut b_tail = if !far { Some(1.0) } else if self.beta < 1.0 { Some(b.powf(-self.beta)) } else { None };
        let b_up = b_tail.unwrap_or(1.0 / b);
        let m1 = k1 * self.inv_beta;
        let total = m1 + k * b_up * self.inv_beta_b;
        for _ in 0..REJECTION_CAP {
            let w = rng.gen::<f64>() * total;
            let u = open_unit(rng);
            let rho = if w < m1 {
                u.powf(-self.inv_beta)
            } else {
                let bt = *b_tail.get_or_insert_with(|| b.powf(-self.beta));
                if w - m1 >= k * bt * self.inv_beta_b {
                    continue;
                }
                b * u.powf(-self.inv_beta_b)
            };
            random_direction(rng, z);
            let y2 = shift_into(x, rho, z);
            let env = if rho > b { k1 + k * (rho / b).powf(self.two_qa) } else { k1 };
            let v = rng.gen::<f64>() * env;
            if v <= 1.0 || (rho <= b && v <= 1.0 + low) || v <= 1.0 + ((1.0 + y2) / t0).powf(self.q) {
                return Ok(rho);
            }
        }
        Err(Error::RejectionCap {
            cap: REJECTION_CAP,
            x_norm: x2.sqrt(),
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }
}

/// One draw from π_x.
pub fn sample_big_jump<R: Rng>(x: &[f64], model: &ModelParams, rng: &mut R) -> Result<Vec<f64>> {
    if x.len() != model.d {
        return Err(Error::Precondition("x has the wrong dimension".into()));
    }
    let s = BigJumpSampler::new(model)?;
    let mut z = vec![0.0; model.d];
    s.sample_into(x, norm2(x), rng, &mut z)?;
    Ok(z)
}

/// Probes the scaled function at 16 geometric radii between the table end
/// and CACHE_TAIL_X; returns the last table value if all probes match it.
fn flat_tail(g: &(dyn Fn(f64) -> Result<f64> + Sync), values: &[f64], v_max: f64, rel_tol: f64, abs_floor: f64) -> Option<f64> {
    let last = *values.last()?;
    let v_far = (CACHE_TAIL_X * CACHE_TAIL_X).ln_1p();
    if v_far <= v_max {
        return None;
    }
    let den = last.abs().max(abs_floor);
    let ok = (1..=16).into_par_iter().all(|i| {
        let v = v_max + (v_far - v_max) * i as f64 / 16.0;
        matches!(g(v), Ok(y) if (y - last).abs() <= rel_tol * den)
    });
    ok.then_some(last)
}

/// A radial function tabulated on v = ln(1+|x|²) and read back by
/// piecewise-cubic (four-point Lagrange) interpolation. The table is refined
/// until interpolation at the held-out midpoints meets the tolerance. Beyond
/// the table the scaled function is held at its last value when probes out to
/// CACHE_TAIL_X confirm it is flat to the same tolerance, and evaluated
/// directly otherwise.
#[derive(Clone)]
pub struct RadialCache {
    h: f64,
    v_max: f64,
    values: Vec<f64>,
    scale_exponent: f64,
    direct: Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>,
    /// Scaled value used on (x_max, CACHE_TAIL_X] when the probes there all
    /// agree with the last table entry.
    tail: Option<f64>,
    /// Largest held-out error, relative to max(|f/scale|, floor·sup|f/scale|).
    pub max_rel_error: f64,
}

impl std::fmt::Debug for RadialCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialCache")
            .field("points", &self.values.len())
            .field("x_max", &self.x_max())
            .field("max_rel_error", &self.max_rel_error)
            .field("flat_tail", &self.tail.is_some())
            .finish()
    }
}

/// Radius up to which a flat scaled tail may be probed and used.
pub const CACHE_TAIL_X: f64 = 1e24;

/// Limit on table refinement; 2^14 + 1 points.
const CACHE_MAX_POINTS: usize = 16_385;

impl RadialCache {
    /// Tabulates `f(|x|)/(1+|x|²)^scale_exponent` on [0, x_max].
    ///
    /// The held-out error is measured relative to
    /// `max(|g(x)|, floor · max|g|)` so that sign changes do not blow it up.
    pub fn build(
        f: Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>,
        scale_exponent: f64,
        x_max: f64,
        rel_tol: f64,
        floor: f64,
    ) -> Result<Self> {
        let v_max = (x_max * x_max).ln_1p();
        let g = |v: f64| -> Result<f64> {
            let x = v.exp_m1().max(0.0).sqrt();
            Ok(f(x)? * (-scale_exponent * v).exp())
        };
        let mut n = 65usize;
        let mut values: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| g(v_max * i as f64 / (n - 1) as f64))
            .collect::<Result<_>>()?;
        loop {
            let h = v_max / (n - 1) as f64;
            let mids: Vec<f64> = (0..n - 1)
                .into_par_iter()
                .map(|i| g((i as f64 + 0.5) * h))
                .collect::<Result<_>>()?;
            let sup = values.iter().chain(&mids).fold(0.0f64, |m, v| m.max(v.abs()));
            let mut worst = 0.0f64;
            for (i, &m) in mids.iter().enumerate() {
                let approx = lagrange4(&values, h, (i as f64 + 0.5) * h);
                let den = m.abs().max(floor * sup);
                if den > 0.0 {
                    worst = worst.max((approx - m).abs() / den);
                }
            }
            let mut merged = Vec::with_capacity(2 * n - 1);
            for i in 0..n - 1 {
                merged.push(values[i]);
                merged.push(mids[i]);
            }
            merged.push(values[n - 1]);
            if worst <= rel_tol || 2 * n - 1 > CACHE_MAX_POINTS {
                if worst > rel_tol {
                    return Err(Error::Contract(format!(
                        "radial cache reached {n} points with held-out error {worst:e} > {rel_tol:e}"
                    )));
                }
                // keep the validated table; the merged one is at least as good
                // but its own error was not measured
                let tail = flat_tail(&g, &values, v_max, rel_tol, floor * sup);
                return Ok(RadialCache {
                    h,
                    v_max,
                    values,
                    scale_exponent,
                    direct: f,
                    tail,
                    max_rel_error: worst,
                });
            }
            values = merged;
            n = 2 * n - 1;
        }
    }

    pub fn x_max(&self) -> f64 {
        self.v_max.exp_m1().sqrt()
    }

    pub fn points(&self) -> usize {
        self.values.len()
    }

    /// Interpolated value at |x|² = `x2` (direct beyond the table).
    pub fn eval_sq(&self, x2: f64) -> Result<f64> {
        let v = x2.ln_1p();
        if v > self.v_max {
            return match self.tail {
                Some(c) if x2 <= CACHE_TAIL_X * CACHE_TAIL_X => Ok(c * (self.scale_exponent * v).exp()),
                _ => (self.direct)(x2.sqrt()),
            };
        }
        Ok(lagrange4(&self.values, self.h, v) * (self.scale_exponent * v).exp())
    }

    pub fn eval(&self, x_norm: f64) -> Result<f64> {
        self.eval_sq(x_norm * x_norm)
    }
}

/// Four-point Lagrange interpolation on the uniform grid `values[i] = g(i h)`.
fn lagrange4(values: &[f64], h: f64, v: f64) -> f64 {
    let n = values.len();
    let t = v / h;
    let i = (t.floor() as isize).clamp(1, n as isize - 3) as usize - 1;
    let s = t - i as f64;
    let (y0, y1, y2, y3) = (values[i], values[i + 1], values[i + 2], values[i + 3]);
    // nodes at 0, 1, 2, 3
    let l0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
    let l1 = s * (s - 2.0) * (s - 3.0) / 2.0;
    let l2 = -s * (s - 1.0) * (s - 3.0) / 2.0;
    let l3 = s * (s - 1.0) * (s - 2.0) / 6.0;
    y0 * l0 + y1 * l1 + y2 * l2 + y3 * l3
}

/// Default table extent and tolerance for the rate cache.
pub const RATE_CACHE_X_MAX: f64 = 1e12;
pub const RATE_CACHE_TOL: f64 = 1e-6;

/// Tolerances for a value whose natural size at |x| is (1+|x|²)^e.
fn scaled_opts(x_norm: f64, e: f64) -> QuadOptions {
    QuadOptions::new(1e-11 * (1.0 + x_norm * x_norm).powf(e), 1e-9)
}

/// Table entries need far less than the quadrature target; far out the
/// target can be out of reach while the estimate is still tiny.
fn table_value(r: QuadResult, context: &str) -> Result<f64> {
    if r.value.is_finite() && (r.converged || r.abs_error_estimate <= 0.5 * RATE_CACHE_TOL * r.value.abs()) {
        Ok(r.value)
    } else {
        r.require(context)
    }
}

/// Total big-jump rate λ(x) by quadrature.
pub fn jump_rate(model: &ModelParams, x_norm: f64) -> Result<f64> {
    let opts = scaled_opts(x_norm, model.q);
    table_value(big_jump_integral(model, x_norm, f64::INFINITY, |_, _| 1.0, opts)?, "jump rate")
}

/// λ(x) tabulated as λ/a₂ on a radial grid.
pub fn rate_cache(model: &ModelParams) -> Result<RadialCache> {
    let m = *model;
    model.check_big_jump()?;
    RadialCache::build(
        Arc::new(move |x| jump_rate(&m, x)),
        m.q,
        RATE_CACHE_X_MAX,
        RATE_CACHE_TOL,
        0.0,
    )
}

/// 𝓛⁽²⁾u tabulated on a radial grid; `scale_exponent` flattens the profile.
pub fn generator_cache<U: RadialFunction + Clone + Send + 'static>(
    u: U,
    model: &ModelParams,
    scale_exponent: f64,
) -> Result<RadialCache> {
    let m = *model;
    model.check_big_jump()?;
    RadialCache::build(
        Arc::new(move |x| table_value(apply_l2_radial(&u, x, &m, scaled_opts(x, scale_exponent))?, "big-jump generator")),
        scale_exponent,
        RATE_CACHE_X_MAX,
        RATE_CACHE_TOL,
        1e-3,
    )
}

/// Outcome of one simulated path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathOutcome {
    pub hit: bool,
    pub censored: bool,
    pub jumps: u64,
    pub time: f64,
}

/// Sampler plus (optionally) the rate table; shared read-only by all paths.
#[derive(Debug, Clone)]
pub struct BigJumpEngine {
    pub model: ModelParams,
    pub sampler: BigJumpSampler,
    pub rate: Option<RadialCache>,
}

impl BigJumpEngine {
    pub fn new(model: &ModelParams) -> Result<Self> {
        Ok(BigJumpEngine {
            model: *model,
            sampler: BigJumpSampler::new(model)?,
            rate: None,
        })
    }

    /// Adds the λ table (needed for a finite horizon or time integrals).
    pub fn with_rate(mut self) -> Result<Self> {
        if self.rate.is_none() {
            self.rate = Some(rate_cache(&self.model)?);
        }
        Ok(self)
    }

    fn rate_at(&self, x2: f64) -> Result<f64> {
        let c = self
            .rate
            .as_ref()
            .ok_or_else(|| Error::Precondition("jump rate table not built".into()))?;
        c.eval_sq(x2)
    }

    /// Simulates path `index` of `cfg`, calling `visit(time, state, |z|)`
    /// after every jump.
    pub fn run_path<F: FnMut(f64, &[f64], f64)>(
        &self,
        cfg: &SimConfig,
        index: u64,
        mut visit: F,
    ) -> Result<PathOutcome> {
        let mut rng = path_rng(cfg.seed, index);
        let d = self.model.d;
        let mut x = cfg.x0.clone();
        let mut z = vec![0.0; d];
        let mut x2 = norm2(&x);
        let r2 = cfg.r_hit * cfg.r_hit;
        let mut t = 0.0;
        let horizon = cfg.max_time;
        for k in 0..cfg.max_jumps {
            if let Some(tmax) = horizon {
                t += exp1(&mut rng) / self.rate_at(x2)?;
                if t > tmax {
                    return Ok(PathOutcome {
                        hit: false,
                        censored: true,
                        jumps: k,
                        time: tmax,
                    });
                }
            }
            let rho = self.sampler.sample_into(&x, x2, &mut rng, &mut z)?;
            x2 = 0.0;
            for (xi, zi) in x.iter_mut().zip(&z) {
                *xi += zi;
                x2 += *xi * *xi;
            }
            visit(t, &x, rho);
            if x2 <= r2 {
                return Ok(PathOutcome {
                    hit: true,
                    censored: false,
                    jumps: k + 1,
                    time: t,
                });
            }
        }
        Ok(PathOutcome {
            hit: false,
            censored: true,
            jumps: cfg.max_jumps,
            time: t,
        })
    }

    pub fn run(&self, cfg: &SimConfig) -> Result<HittingEstimate> {
        cfg.validate()?;
        if cfg.model != self.model {
            return Err(Error::Precondition("engine and config models differ".into()));
        }
        let outcomes: Vec<PathOutcome> = (0..cfg.n_paths as u64)
            .into_par_iter()
            .map(|i| self.run_path(cfg, i, |_, _, _| {}))
            .collect::<Result<_>>()?;
        Ok(aggregate(cfg, &outcomes))
    }
}

fn aggregate(cfg: &SimConfig, outcomes: &[PathOutcome]) -> HittingEstimate {
    let hits = outcomes.iter().filter(|o| o.hit).count() as u64;
    let censored = outcomes.iter().filter(|o| o.censored).count() as u64;
    let total_jumps = outcomes.iter().map(|o| o.jumps).sum();
    let n = outcomes.len() as u64;
    let (lo, hi) = wilson_interval(hits, n);
    HittingEstimate {
        hits,
        n_paths: n,
        freq: hits as f64 / n as f64,
        ci_low: lo,
        ci_high: hi,
        theory_bound: cfg.theory_bound(),
        delta_ref: cfg.delta_ref,
        censored,
        total_jumps,
    }
}

/// Hitting frequency of B(r_hit) for the big-jump process.
pub fn run_big_jump_paths(cfg: &SimConfig) -> Result<HittingEstimate> {
    cfg.validate()?;
    let mut engine = BigJumpEngine::new(&cfg.model)?;
    if cfg.max_time.is_some() {
        engine = engine.with_rate()?;
    }
    engine.run(cfg)
}

/// One row of the per-path event log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub path: u64,
    pub jump: u64,
    pub time: f64,
    pub jump_size: f64,
    pub state_norm: f64,
    pub state: Vec<f64>,
}

/// Events of the first `paths` paths. Times need the rate table, so
/// they are filled in only when `engine` has one.
pub fn event_log(engine: &BigJumpEngine, cfg: &SimConfig, paths: u64) -> Result<Vec<Event>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for p in 0..paths.min(cfg.n_paths as u64) {
        let mut k = 0;
        let mut cfg_p = cfg.clone();
        if engine.rate.is_some() && cfg_p.max_time.is_none() {
            cfg_p.max_time = Some(f64::INFINITY);
        }
        engine.run_path(&cfg_p, p, |t, x, rho| {
            k += 1;
            out.push(Event {
                path: p,
                jump: k,
                time: if engine.rate.is_some() { t } else { f64::NAN },
                jump_size: rho,
                state_norm: norm2(x).sqrt(),
                state: x.to_vec(),
            });
        })?;
    }
    Ok(out)
}

/// CSV with columns path, jump, time, jump_size, state_norm, x1..xd.
pub fn write_event_log<W: Write>(events: &[Event], d: usize, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header: Vec<String> = ["path", "jump", "time", "jump_size", "state_norm"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=d).map(|i| format!("x{i}")));
    wr.write_record(&header)?;
    for e in events {
        let mut row = vec![
            e.path.to_string(),
            e.jump.to_string(),
            format!("{:e}", e.time),
            format!("{:e}", e.jump_size),
            format!("{:e}", e.state_norm),
        ];
        row.extend(e.state.iter().map(|v| format!("{v:e}")));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

/// Optional-stopping check E[u(X_τ)] = u(x0) + E∫₀^τ 𝓛⁽²⁾u(X_s)ds with
/// τ = t ∧ σ ∧ T_N ∧ (exit from the tabulated ball), where T_N is the time of
/// the last jump in the budget.
/// τ is a bounded stopping time, so a finite budget keeps the identity exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynkinResidual {
    pub t_star: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub se: f64,
    pub n_paths: u64,
    pub hits: u64,
    /// Paths stopped by the jump budget before t ∧ σ.
    pub censored: u64,
    /// Paths stopped on leaving the tabulated region |x| ≤ `escape_radius`.
    pub escaped: u64,
    pub escape_radius: f64,
}

impl DynkinResidual {
    pub fn within(&self, k_se: f64) -> bool {
        self.residual.abs() <= k_se * self.se
    }
}

/// Dynkin residual for ψ_δ.
pub fn dynkin_check(cfg: &SimConfig, delta: f64, t_star: f64) -> Result<DynkinResidual> {
    let u = TestFunction::new(delta)?;
    let m = cfg.model;
    let scale = m.q - m.beta / 2.0 - delta;
    let engine = BigJumpEngine::new(&m)?.with_rate()?;
    let gen = generator_cache(u, &m, scale)?;
    dynkin_check_with(&engine, &gen, &u, cfg, t_star)
}

/// Dynkin residual for a radial `u` with a prebuilt 𝓛⁽²⁾u table.
pub fn dynkin_check_with<U: RadialFunction + ?Sized>(
    engine: &BigJumpEngine,
    generator: &RadialCache,
    u: &U,
    cfg: &SimConfig,
    t_star: f64,
) -> Result<DynkinResidual> {
    cfg.validate()?;
    if !(t_star >= 0.0 && t_star.is_finite()) {
        return Err(Error::out_of_range("t_star", format!("{t_star} must be finite and non-negative")));
    }
    let u0 = u.profile(cfg.x0_norm());
    let escape_radius = match &engine.rate {
        Some(r) => r.x_max().min(generator.x_max()),
        None => generator.x_max(),
    };
    let rows: Vec<PathEnd> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| dynkin_path(engine, generator, u, cfg, t_star, escape_radius, i))
        .collect::<Result<_>>()?;
    let n = rows.len() as f64;
    let mut lhs = 0.0;
    let mut int = 0.0;
    let mut diff_mean = 0.0;
    for r in &rows {
        lhs += r.0;
        int += r.1;
        diff_mean += r.0 - u0 - r.1;
    }
    lhs /= n;
    int /= n;
    diff_mean /= n;
    let var = rows
        .iter()
        .map(|r| {
            let e = r.0 - u0 - r.1 - diff_mean;
            e * e
        })
        .sum::<f64>()
        / (n - 1.0).max(1.0);
    Ok(DynkinResidual {
        t_star,
        lhs,
        rhs: u0 + int,
        residual: diff_mean,
        se: (var / n).sqrt(),
        n_paths: rows.len() as u64,
        hits: rows.iter().filter(|r| r.2 == Stop::Hit).count() as u64,
        censored: rows.iter().filter(|r| r.2 == Stop::Budget).count() as u64,
        escaped: rows.iter().filter(|r| r.2 == Stop::Escaped).count() as u64,
        escape_radius,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stop {
    Horizon,
    Hit,
    Budget,
    Escaped,
}

/// (u(X_τ), ∫₀^τ 𝓛u ds, reason) for one path.
type PathEnd = (f64, f64, Stop);

/// One path stopped at τ = t ∧ σ ∧ T_N ∧ (exit from the tabulated ball).
/// Every stop is a stopping time, so the identity holds for τ, and 𝓛u is
/// only read inside the table.
fn dynkin_path<U: RadialFunction + ?Sized>(
    engine: &BigJumpEngine,
    generator: &RadialCache,
    u: &U,
    cfg: &SimConfig,
    t_star: f64,
    escape_radius: f64,
    index: u64,
) -> Result<PathEnd> {
    let mut rng = path_rng(cfg.seed, index);
    let mut x = cfg.x0.clone();
    let mut z = vec![0.0; x.len()];
    let mut x2 = norm2(&x);
    let r2 = cfg.r_hit * cfg.r_hit;
    let mut t = 0.0;
    let mut integral = 0.0;
    let escape2 = escape_radius * escape_radius;
    if t_star == 0.0 {
        return Ok((u.profile(x2.sqrt()), 0.0, Stop::Horizon));
    }
    for _ in 0..cfg.max_jumps {
        let hold = exp1(&mut rng) / engine.rate_at(x2)?;
        let lu = generator.eval_sq(x2)?;
        if t + hold >= t_star {
            integral += lu * (t_star - t);
            return Ok((u.profile(x2.sqrt()), integral, Stop::Horizon));
        }
        integral += lu * hold;
        t += hold;
        engine.sampler.sample_into(&x, x2, &mut rng, &mut z)?;
        x2 = 0.0;
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
            x2 += *xi * *xi;
        }
        if x2 <= r2 {
            return Ok((u.profile(x2.sqrt()), integral, Stop::Hit));
        }
        if x2 > escape2 {
            return Ok((u.profile(x2.sqrt()), integral, Stop::Escaped));
        }
    }
    Ok((u.profile(x2.sqrt()), integral, Stop::Budget))
}

/// Thinning sampler for the ε-truncated small-jump kernel
/// (a₁(x) + a₁(x+z)) 1{ε<|z|<1} ν(dz).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallJumpSampler {
    p: f64,
    alpha: f64,
    eps_pow: f64,
    /// 1 + 4^{|p|}
    bound: f64,
    /// ν(ε < |z| < 1)
    shell_mass: f64,
}

impl SmallJumpSampler {
    pub fn new(model: &ModelParams, eps: f64) -> Result<Self> {
        model.check_small_jump()?;
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::out_of_range("epsilon_cutoff", format!("{eps} not in (0, 1)")));
        }
        let a = model.alpha;
        let eps_pow = eps.powf(-a);
        Ok(SmallJumpSampler {
            p: model.p,
            alpha: a,
            eps_pow,
            bound: 1.0 + 4f64.powf(model.p.abs()),
            shell_mass: sphere_area(model.d - 1) * (eps_pow - 1.0) / a,
        })
    }

    /// Dominating event rate at |x|² = `x2`.
    pub fn rate_bound(&self, x2: f64) -> f64 {
        (1.0 + x2).powf(self.p) * self.bound * self.shell_mass
    }

    /// One proposal: fills `z` and returns whether it is accepted.
    fn propose<R: Rng>(&self, x: &[f64], x2: f64, rng: &mut R, z: &mut [f64]) -> bool {
        let u = open_unit(rng);
        // ρ^{−α} uniform on (1, ε^{−α})
        let rho = (self.eps_pow - u * (self.eps_pow - 1.0)).powf(-1.0 / self.alpha);
        random_direction(rng, z);
        let mut y2 = 0.0;
        for (zi, xi) in z.iter_mut().zip(x) {
            *zi *= rho;
            let yi = xi + *zi;
            y2 += yi * yi;
        }
        let ratio = (self.p * (y2.ln_1p() - x2.ln_1p())).exp();
        rng.gen::<f64>() * self.bound <= 1.0 + ratio
    }
}

/// Estimates at ε and ε/2 with the bias indicator |f_ε − f_{ε/2}|.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallJumpReport {
    pub grade: String,
    pub epsilons: Vec<f64>,
    pub estimates: Vec<HittingEstimate>,
    pub bias_indicator: f64,
}

fn small_jump_path(s: &SmallJumpSampler, cfg: &SimConfig, index: u64) -> Result<PathOutcome> {
    let mut rng = path_rng(cfg.seed, index);
    let mut x = cfg.x0.clone();
    let mut z = vec![0.0; x.len()];
    let mut x2 = norm2(&x);
    let r2 = cfg.r_hit * cfg.r_hit;
    let mut t = 0.0;
    let mut jumps = 0;
    let mut misses = 0usize;
    while jumps < cfg.max_jumps {
        if let Some(tmax) = cfg.max_time {
            t += exp1(&mut rng) / s.rate_bound(x2);
            if t > tmax {
                return Ok(PathOutcome {
                    hit: false,
                    censored: true,
                    jumps,
                    time: tmax,
                });
            }
        }
        if !s.propose(&x, x2, &mut rng, &mut z) {
            misses += 1;
            if misses >= REJECTION_CAP {
                return Err(Error::RejectionCap {
                    cap: REJECTION_CAP,
                    x_norm: x2.sqrt(),
                });
            }
            continue;
        }
        misses = 0;
        jumps += 1;
        x2 = 0.0;
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
            x2 += *xi * *xi;
        }
        if x2 <= r2 {
            return Ok(PathOutcome {
                hit: true,
                censored: false,
                jumps,
                time: t,
            });
        }
    }
    Ok(PathOutcome {
        hit: false,
        censored: true,
        jumps,
        time: t,
    })
}

/// Hitting frequency for the ε-truncated small-jump process. Diagnostic
/// grade: the cut-off bias is only indicated, not controlled.
pub fn run_small_jump_paths_eps(cfg: &SimConfig) -> Result<SmallJumpReport> {
    cfg.validate()?;
    let eps = cfg
        .epsilon_cutoff
        .ok_or_else(|| Error::Precondition("epsilon_cutoff is required for the small-jump scheme".into()))?;
    let epsilons = vec![eps, 0.5 * eps];
    let mut estimates = Vec::new();
    for &e in &epsilons {
        let s = SmallJumpSampler::new(&cfg.model, e)?;
        let outcomes: Vec<PathOutcome> = (0..cfg.n_paths as u64)
            .into_par_iter()
            .map(|i| small_jump_path(&s, cfg, i))
            .collect::<Result<_>>()?;
        estimates.push(aggregate(cfg, &outcomes));
    }
    let bias_indicator = (estimates[0].freq - estimates[1].freq).abs();
    Ok(SmallJumpReport {
        grade: "diagnostic".into(),
        epsilons,
        estimates,
        bias_indicator,
    })
}

/// ∫_{ε<|z|<1} (u(x+z) − u(x))(a₁(x) + a₁(x+z)) ν(dz) by quadrature.
pub fn truncated_small_generator<U: RadialFunction + ?Sized>(
    u: &U,
    x_norm: f64,
    model: &ModelParams,
    eps: f64,
    opts: QuadOptions,
) -> Result<f64> {
    model.check_small_jump()?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::out_of_range("epsilon_cutoff", format!("{eps} not in (0, 1)")));
    }
    let co = model.coefficients();
    let kernel = model.kernel();
    let a1x = co.a1_sq(x_norm * x_norm);
    let d = model.d as f64;
    let rel = (opts.rel_tol * 1e-2).max(1e-12);
    let segs = radial_segments(eps, 1.0, &[x_norm]);
    integrate_segments(
        |n: Node| {
            let rho = n.x;
            let s = integrate_sphere_rel(
                |c| {
                    let inc = u.increment(x_norm, rho, c);
                    if inc == 0.0 {
                        return 0.0;
                    }
                    inc * (a1x + co.a1_sq(shifted_norm2(x_norm, rho, c)))
                },
                model.d,
                &[],
                rel,
            );
            s.value * rho.powf(d - 1.0) * kernel.small_density(rho)
        },
        &segs,
        opts,
    )
    .require("truncated small-jump generator")
}

/// Monte Carlo estimate of (E u(X_h) − u(x))/h for the ε-process started at
/// `x_norm·e₁`, with its standard error.
pub fn small_generator_mc<U: RadialFunction + ?Sized>(
    u: &U,
    x_norm: f64,
    model: &ModelParams,
    eps: f64,
    h: f64,
    n_paths: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let s = SmallJumpSampler::new(model, eps)?;
    if !(h > 0.0) || n_paths < 2 {
        return Err(Error::Precondition("need h > 0 and at least two paths".into()));
    }
    let d = model.d;
    let u0 = u.profile(x_norm);
    let incs: Vec<f64> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let mut x = vec![0.0; d];
            x[0] = x_norm;
            let mut z = vec![0.0; d];
            let mut x2 = x_norm * x_norm;
            let mut t = 0.0;
            loop {
                t += exp1(&mut rng) / s.rate_bound(x2);
                if t > h {
                    break;
                }
                if s.propose(&x, x2, &mut rng, &mut z) {
                    x2 = 0.0;
                    for (xi, zi) in x.iter_mut().zip(&z) {
                        *xi += zi;
                        x2 += *xi * *xi;
                    }
                }
            }
            (u.profile(x2.sqrt()) - u0) / h
        })
        .collect();
    let n = incs.len() as f64;
    let mean = incs.iter().sum::<f64>() / n;
    let var = incs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::Constant;
    use crate::model::{make_model, KernelVariant};

    fn model(d: usize, alpha: f64, q: f64) -> ModelParams {
        make_model(d, alpha, alpha, 0.0, q, KernelVariant::StablePair).unwrap()
    }

    #[test]
    fn wilson_contains_freq() {
        for &(k, n) in &[(0u64, 10u64), (3, 10), (10, 10), (500, 1000)] {
            let (lo, hi) = wilson_interval(k, n);
            let p = k as f64 / n as f64;
            assert!(lo <= p && p <= hi && lo >= 0.0 && hi <= 1.0);
        }
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.4038).abs() < 1e-4 && (hi - 0.5962).abs() < 1e-4);
    }

    #[test]
    fn jumps_leave_the_unit_ball() {
        let m = model(2, 1.2, -0.3);
        let mut rng = path_rng(1, 0);
        for _ in 0..2000 {
            let z = sample_big_jump(&[0.3, -2.0], &m, &mut rng).unwrap();
            assert!(norm2(&z) >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn pareto_tail_when_q_vanishes() {
        // q = 0: |z| is Pareto(α), P(|z| > r) = r^{−α}
        let m = model(1, 1.2, 0.0);
        let s = BigJumpSampler::new(&m).unwrap();
        let mut rng = path_rng(7, 3);
        let n = 200_000;
        let mut z = [0.0];
        let mut rs: Vec<f64> = (0..n)
            .map(|_| s.sample_into(&[5.0], 25.0, &mut rng, &mut z).unwrap())
            .collect();
        rs.sort_by(|a, b| a.total_cmp(b));
        let mut dmax = 0.0f64;
        for (i, r) in rs.iter().enumerate() {
            let f = 1.0 - r.powf(-1.2);
            dmax = dmax.max((f - i as f64 / n as f64).abs()).max((f - (i + 1) as f64 / n as f64).abs());
        }
        assert!(dmax < 1.628 / (n as f64).sqrt(), "KS {dmax}");
    }

    #[test]
    fn growing_coefficient_matches_quadrature() {
        // E[g(z)] under π_x against the normalized quadrature of g, for
        // g = 1/|z| and g = cos∠(x, z)/|z|, across both envelope regimes
        for (d, q, xn) in [(1, 0.3, 0.5), (1, 0.3, 3.0), (1, 0.3, 100.0), (1, 0.3, 1e4), (2, 0.4, 5.0), (3, 0.2, 40.0)] {
            let m = model(d, 1.2, q);
            let s = BigJumpSampler::new(&m).unwrap();
            let mut x = vec![0.0; d];
            x[0] = xn;
            let mut rng = path_rng(11, d as u64);
            let mut z = vec![0.0; d];
            let n = 200_000;
            let (mut s1, mut s2, mut t1, mut t2) = (0.0, 0.0, 0.0, 0.0);
            for _ in 0..n {
                let rho = s.sample_into(&x, xn * xn, &mut rng, &mut z).unwrap();
                let g = 1.0 / rho;
                let h = z[0] / (rho * rho);
                s1 += g;
                s2 += g * g;
                t1 += h;
                t2 += h * h;
            }
            let nf = n as f64;
            let opts = QuadOptions::new(1e-12, 1e-10);
            let rate = big_jump_integral(&m, xn, f64::INFINITY, |_, _| 1.0, opts).unwrap().value;
            let eg = big_jump_integral(&m, xn, f64::INFINITY, |r, _| 1.0 / r, opts).unwrap().value / rate;
            let eh = big_jump_integral(&m, xn, f64::INFINITY, |r, c| c.s / r, opts).unwrap().value / rate;
            let se_g = ((s2 / nf - (s1 / nf).powi(2)) / nf).sqrt();
            let se_h = ((t2 / nf - (t1 / nf).powi(2)) / nf).sqrt();
            assert!((s1 / nf - eg).abs() < 3.5 * se_g, "d={d} q={q} x={xn}: {} vs {eg}", s1 / nf);
            assert!((t1 / nf - eh).abs() < 3.5 * se_h, "d={d} q={q} x={xn}: {} vs {eh}", t1 / nf);
        }
    }

    #[test]
    fn rate_at_origin_is_closed_form() {
        // x = 0: λ = (1 + a₂(z)) over |z| ≥ 1; with q = 0 it is 2ω_{d−1}/α
        let m = model(3, 1.0, 0.0);
        let l = jump_rate(&m, 0.0).unwrap();
        assert!((l - 2.0 * 4.0 * std::f64::consts::PI).abs() < 1e-10);
        let m = model(1, 1.2, 0.3);
        // x = 0: 2/α + 2∫_1^∞ (1+ρ²)^q ρ^{−1−α} dρ
        let l = jump_rate(&m, 0.0).unwrap();
        let tail = crate::quad::integrate_radial(|r| (1.0 + r * r).powf(0.3), 1.0, f64::INFINITY, -2.2, QuadOptions::new(1e-13, 1e-12));
        assert!((l - (2.0 / 1.2 + 2.0 * tail.value)).abs() < 1e-9);
    }

    #[test]
    fn cache_meets_tolerance() {
        let m = model(1, 1.2, 0.3);
        let c = rate_cache(&m).unwrap();
        assert!(c.max_rel_error <= RATE_CACHE_TOL);
        for &x in &[0.37, 3.3, 77.0, 4.2e4] {
            let exact = jump_rate(&m, x).unwrap();
            assert!(((c.eval(x).unwrap() - exact) / exact).abs() < 1e-6, "x = {x}");
        }
        // the scaled rate is flat past the table, so the tail is used there
        assert!(c.tail.is_some());
        for &x in &[3e12, 1e17, 9e23] {
            let exact = jump_rate(&m, x).unwrap();
            assert!(((c.eval(x).unwrap() - exact) / exact).abs() < 1e-6, "x = {x}");
        }
        // and beyond the probed range it is evaluated directly
        let x = 3e24;
        assert_eq!(c.eval(x).unwrap(), jump_rate(&m, x).unwrap());
    }

    #[test]
    fn wavy_tail_is_not_extrapolated() {
        let f: Arc<dyn Fn(f64) -> Result<f64> + Send + Sync> = Arc::new(|x: f64| Ok(2.0 + (0.15 * (x * x).ln_1p()).sin()));
        let c = RadialCache::build(f, 0.0, 1e3, 1e-6, 0.0).unwrap();
        assert!(c.tail.is_none());
        assert_eq!(c.eval(1e9).unwrap(), 2.0 + (0.15 * 1e18f64.ln_1p()).sin());
    }

    #[test]
    fn reproducible_and_monotone_in_budget() {
        let m = model(1, 1.2, 0.0);
        let mut cfg = SimConfig::new(m, 20.0, 1.0, 200, 300, 11);
        let a = run_big_jump_paths(&cfg).unwrap();
        let b = run_big_jump_paths(&cfg).unwrap();
        assert_eq!(a, b);
        cfg.max_jumps = 2000;
        let c = run_big_jump_paths(&cfg).unwrap();
        assert!(c.hits >= a.hits);
        assert!(c.censored <= a.censored);
    }

    #[test]
    fn r_hit_must_be_inside() {
        let m = model(1, 1.2, 0.0);
        let cfg = SimConfig::new(m, 2.0, 2.0, 10, 10, 0);
        assert!(matches!(run_big_jump_paths(&cfg), Err(Error::Precondition(_))));
        let m = model(1, 1.2, 0.6);
        let cfg = SimConfig::new(m, 5.0, 1.0, 10, 10, 0);
        assert!(run_big_jump_paths(&cfg).is_err());
    }

    #[test]
    fn dynkin_trivial_cases() {
        let m = model(1, 1.2, 0.0);
        let cfg = SimConfig {
            max_jumps: 1_000_000,
            ..SimConfig::new(m, 3.0, 0.5, 10, 200, 5)
        };
        let r = dynkin_check(&cfg, 0.3, 0.0).unwrap();
        assert_eq!(r.residual, 0.0);
        let engine = BigJumpEngine::new(&m).unwrap().with_rate().unwrap();
        let gen = generator_cache(Constant(1.0), &m, 0.0).unwrap();
        let r = dynkin_check_with(&engine, &gen, &Constant(1.0), &cfg, 5.0).unwrap();
        assert_eq!(r.residual, 0.0);
        assert_eq!(r.lhs, 1.0);
    }

    #[test]
    fn small_jump_rejects_bad_cutoff() {
        let m = make_model(1, 1.2, 1.2, 1.0, 0.0, KernelVariant::StablePair).unwrap();
        assert!(SmallJumpSampler::new(&m, 1.0).is_err());
        let mut cfg = SimConfig::new(m, 10.0, 1.0, 10, 10, 0);
        cfg.epsilon_cutoff = Some(1.5);
        assert!(run_small_jump_paths_eps(&cfg).is_err());
    }
}
