//! Model parameters, radial coefficients and the Lévy kernel.
//!
//! The jump kernel is `c(x,y) ν(y−x)` with
//! `c(x,y) = (a₁(x)+a₁(y))·1{|x−y|<1} + (a₂(x)+a₂(y))·1{|x−y|≥1}`,
//! `a₁ = (1+|x|²)^p`, `a₂ = (1+|x|²)^q`. The boundary `|x−y| = 1` belongs to
//! the big-jump part.
//!
//! The big-jump tail of ν has index `beta`; every big-jump routine (the
//! generator 𝓛⁽²⁾, the critical functional Λ and the simulator) uses that
//! index.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::sphere_area;

/// Which Lévy measure ν is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelVariant {
    /// `|z|^{−d−α}` on `|z|<1`, `|z|^{−d−β}` on `|z|≥1`.
    StablePair,
    /// `|z|^{−d−2} log(2+|z|)^{−α}` on `|z|<1`,
    /// `|z|^{−d} log(2+|z|)^{−β−2}` on `|z|≥1`.
    LogPerturbed,
}

impl fmt::Display for KernelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelVariant::StablePair => write!(f, "stable_pair"),
            KernelVariant::LogPerturbed => write!(f, "log_perturbed"),
        }
    }
}

impl std::str::FromStr for KernelVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "stable_pair" => Ok(KernelVariant::StablePair),
            "log_perturbed" => Ok(KernelVariant::LogPerturbed),
            other => Err(Error::Config(format!("unknown kernel_variant '{other}'"))),
        }
    }
}

/// Validated model tuple (d, α, β, p, q, ν).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d: usize,
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub q: f64,
    pub kernel_variant: KernelVariant,
}

/// Builds a model after range checks: `d ≥ 1`, `0 < α < 2`, `β > 0`.
pub fn make_model(
    d: usize,
    alpha: f64,
    beta: f64,
    p: f64,
    q: f64,
    kernel_variant: KernelVariant,
) -> Result<ModelParams> {
    let m = ModelParams {
        d,
        alpha,
        beta,
        p,
        q,
        kernel_variant,
    };
    m.validate()?;
    Ok(m)
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if self.d < 1 {
            return Err(Error::out_of_range("d", format!("{} < 1", self.d)));
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::out_of_range(
                "alpha",
                format!("{} not in (0, 2)", self.alpha),
            ));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::out_of_range("beta", format!("{} not positive", self.beta)));
        }
        if !self.p.is_finite() || !self.q.is_finite() {
            return Err(Error::out_of_range("p/q", "exponents must be finite"));
        }
        Ok(())
    }

    /// Check required before using the big-jump generator or simulator:
    /// `q < β/2` so that `a₂` is integrable against the tail.
    pub fn check_big_jump(&self) -> Result<()> {
        if self.kernel_variant != KernelVariant::StablePair {
            return Err(Error::Precondition(
                "big-jump generator needs the stable_pair kernel".into(),
            ));
        }
        if self.q >= self.beta / 2.0 {
            return Err(Error::out_of_range(
                "q",
                format!("q = {} must be below beta/2 = {}", self.q, self.beta / 2.0),
            ));
        }
        Ok(())
    }

    /// Check required before using 𝓛⁽¹⁾: stable small-jump part and `p ≤ 1`.
    pub fn check_small_jump(&self) -> Result<()> {
        if self.kernel_variant != KernelVariant::StablePair {
            return Err(Error::Divergent(
                "log_perturbed small-jump part has infinite second moment".into(),
            ));
        }
        if self.p > 1.0 {
            return Err(Error::out_of_range(
                "p",
                format!("p = {} > 1: generator integrals are not controlled", self.p),
            ));
        }
        Ok(())
    }

    pub fn coefficients(&self) -> Coefficients {
        Coefficients {
            p: self.p,
            q: self.q,
        }
    }

    pub fn kernel(&self) -> LevyKernel {
        LevyKernel {
            d: self.d,
            alpha: self.alpha,
            beta: self.beta,
            variant: self.kernel_variant,
        }
    }

    /// Parameters of the big-jump critical functional for this model.
    pub fn big_jump_setting(&self) -> BigJumpSetting {
        BigJumpSetting {
            d: self.d,
            index: self.beta,
            q: self.q,
        }
    }
}

impl ModelParams {
    /// Flat `key = value` lines (keys d, alpha, beta, p, q, kernel_variant).
    pub fn to_kv(&self) -> String {
        format!(
            "d = {}\nalpha = {}\nbeta = {}\np = {}\nq = {}\nkernel_variant = {}\n",
            self.d, self.alpha, self.beta, self.p, self.q, self.kernel_variant
        )
    }

    /// Reads a model from flat key-value pairs; `beta` defaults to `alpha`,
    /// `p`, `q` to 0 and the kernel to `stable_pair`.
    pub fn from_kv<'a, I>(pairs: I) -> Result<ModelParams>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut d = None;
        let mut alpha = None;
        let mut beta = None;
        let mut p = 0.0;
        let mut q = 0.0;
        let mut kv = KernelVariant::StablePair;
        let num = |k: &str, v: &str| -> Result<f64> {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{k}: cannot parse '{v}' as a number")))
        };
        for (k, v) in pairs {
            match k.trim() {
                "d" => {
                    d = Some(v.trim().parse::<usize>().map_err(|_| {
                        Error::Config(format!("d: cannot parse '{v}' as a dimension"))
                    })?)
                }
                "alpha" => alpha = Some(num(k, v)?),
                "beta" => beta = Some(num(k, v)?),
                "p" => p = num(k, v)?,
                "q" => q = num(k, v)?,
                "kernel_variant" => kv = v.parse()?,
                _ => {}
            }
        }
        let d = d.ok_or_else(|| Error::Config("missing key d".into()))?;
        let alpha = alpha.ok_or_else(|| Error::Config("missing key alpha".into()))?;
        make_model(d, alpha, beta.unwrap_or(alpha), p, q, kv)
    }
}

/// (d, tail index, q) triple that the big-jump functionals depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BigJumpSetting {
    pub d: usize,
    /// Stability index of the big-jump tail `|z|^{−d−index}`.
    pub index: f64,
    pub q: f64,
}

/// The radial coefficients a₁ = (1+|x|²)^p and a₂ = (1+|x|²)^q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub p: f64,
    pub q: f64,
}

/// `(a₁(x), a₂(x), c(x,y))` at one pair of points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoeffValues {
    pub a1: f64,
    pub a2: f64,
    pub c: f64,
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub(crate) fn dist2(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

impl Coefficients {
    /// a₁ as a function of |x|².
    #[inline]
    pub fn a1_sq(&self, r2: f64) -> f64 {
        (1.0 + r2).powf(self.p)
    }

    #[inline]
    pub fn a2_sq(&self, r2: f64) -> f64 {
        (1.0 + r2).powf(self.q)
    }

    pub fn a1(&self, x: &[f64]) -> f64 {
        self.a1_sq(norm2(x))
    }

    pub fn a2(&self, x: &[f64]) -> f64 {
        self.a2_sq(norm2(x))
    }

    pub fn c1(&self, x: &[f64], y: &[f64]) -> f64 {
        if dist2(x, y) < 1.0 {
            self.a1(x) + self.a1(y)
        } else {
            0.0
        }
    }

    pub fn c2(&self, x: &[f64], y: &[f64]) -> f64 {
        if dist2(x, y) >= 1.0 {
            self.a2(x) + self.a2(y)
        } else {
            0.0
        }
    }

    pub fn c(&self, x: &[f64], y: &[f64]) -> f64 {
        if dist2(x, y) < 1.0 {
            self.a1(x) + self.a1(y)
        } else {
            self.a2(x) + self.a2(y)
        }
    }
}

/// Closed-form evaluation of `(a₁(x), a₂(x), c(x,y))`.
pub fn coeff_eval(model: &ModelParams, x: &[f64], y: &[f64]) -> CoeffValues {
    let co = model.coefficients();
    CoeffValues {
        a1: co.a1(x),
        a2: co.a2(x),
        c: co.c(x, y),
    }
}

/// Rotationally invariant Lévy measure ν.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyKernel {
    pub d: usize,
    pub alpha: f64,
    pub beta: f64,
    pub variant: KernelVariant,
}

impl LevyKernel {
    /// Density of ν (per unit volume) at |z| = ρ on `ρ < 1`.
    #[inline]
    pub fn small_density(&self, rho: f64) -> f64 {
        let d = self.d as f64;
        match self.variant {
            KernelVariant::StablePair => rho.powf(-d - self.alpha),
            KernelVariant::LogPerturbed => rho.powf(-d - 2.0) * (2.0 + rho).ln().powf(-self.alpha),
        }
    }

    /// Density of ν at |z| = ρ on `ρ ≥ 1`.
    #[inline]
    pub fn big_density(&self, rho: f64) -> f64 {
        let d = self.d as f64;
        match self.variant {
            KernelVariant::StablePair => rho.powf(-d - self.beta),
            KernelVariant::LogPerturbed => rho.powf(-d) * (2.0 + rho).ln().powf(-self.beta - 2.0),
        }
    }

    #[inline]
    pub fn density(&self, rho: f64) -> f64 {
        if rho < 1.0 {
            self.small_density(rho)
        } else {
            self.big_density(rho)
        }
    }

    pub fn is_small(rho: f64) -> bool {
        rho < 1.0
    }

    pub fn is_big(rho: f64) -> bool {
        rho >= 1.0
    }

    /// ω_{d−1}, the area of S^{d−1}.
    pub fn omega_d1(&self) -> f64 {
        sphere_area(self.d - 1)
    }

    /// ω_{d−2} with ω₀ = 2; for d = 1 the two-point angular rule takes the
    /// place of the polar reduction and the factor is 1.
    pub fn omega_d2(&self) -> f64 {
        omega_d2(self.d)
    }

    /// `(c_*, c_**) = (∫_{|z|<1}|z|² ν, ∫_{|z|<1}|z|⁴ ν)`.
    pub fn small_jump_moments(&self) -> Result<(f64, f64)> {
        match self.variant {
            KernelVariant::StablePair => {
                let w = self.omega_d1();
                Ok((w / (2.0 - self.alpha), w / (4.0 - self.alpha)))
            }
            KernelVariant::LogPerturbed => Err(Error::Divergent(
                "∫_{|z|<1}|z|²ν(dz) diverges for the log_perturbed small-jump part".into(),
            )),
        }
    }

    /// ν({|z| ≥ 1}).
    pub fn big_jump_mass(&self) -> Result<f64> {
        match self.variant {
            KernelVariant::StablePair => Ok(self.omega_d1() / self.beta),
            KernelVariant::LogPerturbed => Err(Error::Divergent(
                "log_perturbed tail mass is not closed form".into(),
            )),
        }
    }
}

/// ω_{d−2} with the d = 1 convention of [`LevyKernel::omega_d2`].
pub fn omega_d2(d: usize) -> f64 {
    if d == 1 {
        1.0
    } else {
        sphere_area(d - 2)
    }
}

/// `(c_*, c_**)` of the model's small-jump part.
pub fn small_jump_moments(model: &ModelParams) -> Result<(f64, f64)> {
    model.kernel().small_jump_moments()
}
