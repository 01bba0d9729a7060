//! Adaptive Gauss–Kronrod quadrature for the singular radial and polar
//! integrals.
//!
//! Everything goes through [`integrate_segments`]: a list of mapped segments
//! refined with one global priority queue (the panel with the largest error
//! estimate is bisected next). Segment maps:
//!
//! * `Finite` – identity on `[a, b]`.
//! * `Geometric` – `x = a (b/a)^t`, for power-law behaviour across decades.
//! * `Anchored` – `x = anchor + len·exp(−(1−t)/t)`; puts an algebraic or
//!   logarithmic endpoint singularity at `t → 0` where it decays
//!   super-exponentially. The integrand also receives the exact offset from
//!   the anchor, so `r − 1` near `r = 1` is never formed by cancellation.
//! * `Tail` – `x = start·exp((1−t)/t)` for `[start, ∞)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::specfun::sphere_area;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_813_526,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Tolerances and limits for one adaptive run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_subdivisions: 4000,
        }
    }
}

impl QuadOptions {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        QuadOptions {
            abs_tol,
            rel_tol,
            ..Default::default()
        }
    }

    /// Absolute tolerance only.
    pub fn abs(tol: f64) -> Self {
        QuadOptions::new(tol, 0.0)
    }

    /// Options for an inner integral whose result feeds an outer rule.
    pub fn inner(&self) -> Self {
        QuadOptions {
            abs_tol: self.abs_tol * 1e-2,
            rel_tol: (self.rel_tol * 1e-2).max(1e-12),
            max_subdivisions: self.max_subdivisions,
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Outcome of an adaptive run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl QuadResult {
    /// Converts a non-converged result into an error carrying `context`.
    pub fn require(self, context: impl Into<String>) -> Result<f64> {
        if self.converged && self.value.is_finite() {
            Ok(self.value)
        } else {
            Err(Error::Quadrature {
                context: context.into(),
                value: self.value,
                error: self.abs_error_estimate,
            })
        }
    }
}

/// Abscissa handed to integrands with its offset from the segment anchor
/// (`x − a` for finite segments, the exact displacement for anchored ones).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub x: f64,
    pub off: f64,
}

/// A mapped integration segment; see the module docs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Finite { a: f64, b: f64 },
    Geometric { a: f64, b: f64 },
    Anchored { anchor: f64, len: f64 },
    Tail { start: f64 },
}

impl Segment {
    fn is_extreme(&self, t: f64) -> bool {
        match *self {
            Segment::Anchored { .. } | Segment::Tail { .. } => (1.0 - t) / t > 200.0,
            _ => false,
        }
    }

    fn t_range(&self) -> (f64, f64) {
        match *self {
            Segment::Finite { a, b } => (a, b),
            _ => (0.0, 1.0),
        }
    }

    /// Returns (node, jacobian); jacobian 0 means "contributes nothing".
    #[inline]
    fn map(&self, t: f64) -> (Node, f64) {
        match *self {
            Segment::Finite { a, .. } => (Node { x: t, off: t - a }, 1.0),
            Segment::Geometric { a, b } => {
                let l = (b / a).ln();
                let x = a * (l * t).exp();
                (Node { x, off: x - a }, x * l)
            }
            Segment::Anchored { anchor, len } => {
                let tau = (1.0 - t) / t;
                if tau > 700.0 {
                    return (Node { x: anchor, off: 0.0 }, 0.0);
                }
                let e = (-tau).exp();
                let off = len * e;
                (
                    Node {
                        x: anchor + off,
                        off,
                    },
                    len.abs() * e / (t * t),
                )
            }
            Segment::Tail { start } => {
                let tau = (1.0 - t) / t;
                if tau > 700.0 {
                    return (Node { x: f64::MAX, off: f64::MAX }, 0.0);
                }
                let x = start * tau.exp();
                (Node { x, off: x - start }, x / (t * t))
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    seg: usize,
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

#[inline]
fn eval<F: Fn(Node) -> f64>(f: &F, seg: &Segment, t: f64) -> f64 {
    let (node, jac) = seg.map(t);
    if jac == 0.0 || !jac.is_finite() {
        return 0.0;
    }
    let v = f(node);
    if v == 0.0 {
        return 0.0;
    }
    let out = v * jac;
    if !out.is_finite() && seg.is_extreme(t) {
        // far end of an exponential map: overflowing arguments, negligible mass
        return 0.0;
    }
    out
}

fn gk21<F: Fn(Node) -> f64>(f: &F, seg: &Segment, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = eval(f, seg, c);
    let mut resk = WGK[10] * fc;
    let mut resg = 0.0;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = h * XGK[j];
        let f1 = eval(f, seg, c - dx);
        let f2 = eval(f, seg, c + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = resk * 0.5;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = resk * h;
    let resabs = resabs * h.abs();
    let resasc = resasc * h.abs();
    let mut err = ((resk - resg) * h).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (1.0f64).min((200.0 * err / resasc).powf(1.5));
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err)
}

/// Integrates `f` over the union of `segments` to the requested tolerance.
pub fn integrate_segments<F: Fn(Node) -> f64>(
    f: F,
    segments: &[Segment],
    opts: QuadOptions,
) -> QuadResult {
    let mut heap = BinaryHeap::new();
    let mut finished: Vec<Panel> = Vec::new();
    let mut evaluations = 0usize;
    for (i, seg) in segments.iter().enumerate() {
        let (a, b) = seg.t_range();
        if a == b {
            continue;
        }
        let (v, e) = gk21(&f, seg, a, b);
        evaluations += 21;
        heap.push(Panel {
            seg: i,
            a,
            b,
            value: v,
            err: e,
        });
    }
    let totals = |heap: &BinaryHeap<Panel>, fin: &[Panel]| -> (f64, f64) {
        let mut v = 0.0;
        let mut e = 0.0;
        for p in heap.iter().chain(fin.iter()) {
            v += p.value;
            e += p.err;
        }
        (v, e)
    };
    let (mut value, mut err) = totals(&heap, &finished);
    let mut splits = 0usize;
    while err > opts.target(value) && splits < opts.max_subdivisions && err.is_finite() {
        let Some(p) = heap.pop() else { break };
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a.min(p.b) && mid < p.a.max(p.b))
            || (p.b - p.a).abs() <= 4.0 * f64::EPSILON * mid.abs().max(f64::MIN_POSITIVE)
        {
            finished.push(Panel { err: p.err, ..p });
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let seg = &segments[p.seg];
        let (v1, e1) = gk21(&f, seg, p.a, mid);
        let (v2, e2) = gk21(&f, seg, mid, p.b);
        evaluations += 42;
        value += v1 + v2 - p.value;
        err += e1 + e2 - p.err;
        heap.push(Panel {
            seg: p.seg,
            a: p.a,
            b: mid,
            value: v1,
            err: e1,
        });
        heap.push(Panel {
            seg: p.seg,
            a: mid,
            b: p.b,
            value: v2,
            err: e2,
        });
        splits += 1;
        if splits % 64 == 0 {
            let (v, e) = totals(&heap, &finished);
            value = v;
            err = e;
        }
    }
    let (value, err) = totals(&heap, &finished);
    QuadResult {
        value,
        abs_error_estimate: err,
        evaluations,
        converged: value.is_finite() && err <= opts.target(value),
    }
}

/// ∫_a^b f(x) dx on a finite interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> QuadResult {
    integrate_segments(|n: Node| f(n.x), &[Segment::Finite { a, b }], opts)
}

/// Segments covering `[lo, hi)` (hi may be `f64::INFINITY`) with extra
/// breakpoints. A zero lower limit is anchored, long finite stretches are
/// mapped geometrically and an infinite upper limit uses the tail map.
pub fn radial_segments(lo: f64, hi: f64, breakpoints: &[f64]) -> Vec<Segment> {
    let mut pts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&p| p > lo && p < hi && p.is_finite())
        .collect();
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup();
    let mut segs = Vec::new();
    let mut edges = vec![lo];
    edges.extend(pts);
    let last_finite = if hi.is_finite() {
        edges.push(hi);
        None
    } else {
        let last = *edges.last().unwrap();
        if last <= 0.0 {
            edges.push(1.0);
        }
        Some(*edges.last().unwrap())
    };
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a == 0.0 {
            segs.push(Segment::Anchored { anchor: 0.0, len: b });
        } else if b / a > 4.0 {
            segs.push(Segment::Geometric { a, b });
        } else {
            segs.push(Segment::Finite { a, b });
        }
    }
    if let Some(start) = last_finite {
        segs.push(Segment::Tail { start });
    }
    segs
}

/// ∫_{r_lo}^{r_hi} f(r) r^{weight_exponent} dr with endpoint handling:
/// r_lo = 0 is anchored, r_hi = ∞ goes through the tail map.
pub fn integrate_radial<F: Fn(f64) -> f64>(
    f: F,
    r_lo: f64,
    r_hi: f64,
    weight_exponent: f64,
    opts: QuadOptions,
) -> QuadResult {
    let segs = radial_segments(r_lo, r_hi, &[1.0]);
    integrate_segments(
        |n: Node| {
            let v = f(n.x);
            if v == 0.0 {
                0.0
            } else {
                v * n.x.powf(weight_exponent)
            }
        },
        &segs,
        opts,
    )
}

/// cos φ together with exact 1 − s and 1 + s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cosine {
    pub s: f64,
    pub one_minus: f64,
    pub one_plus: f64,
}

impl Cosine {
    pub fn new(s: f64) -> Self {
        Cosine {
            s,
            one_minus: 1.0 - s,
            one_plus: 1.0 + s,
        }
    }

    /// cos φ for φ ∈ [0, π/2].
    #[inline]
    pub fn from_angle(phi: f64) -> Self {
        let h = (0.5 * phi).sin();
        let om = 2.0 * h * h;
        let s = phi.cos();
        Cosine {
            s,
            one_minus: om,
            one_plus: 1.0 + s,
        }
    }

    /// −cos φ for φ ∈ [0, π/2].
    #[inline]
    pub fn from_angle_mirrored(phi: f64) -> Self {
        let c = Cosine::from_angle(phi);
        Cosine {
            s: -c.s,
            one_minus: c.one_plus,
            one_plus: c.one_minus,
        }
    }

    pub fn neg(self) -> Self {
        Cosine {
            s: -self.s,
            one_minus: self.one_plus,
            one_plus: self.one_minus,
        }
    }
}

/// Angular segments in φ ∈ [0, π/2] anchored at φ = 0.
fn half_angle_segment() -> Segment {
    Segment::Anchored {
        anchor: 0.0,
        len: std::f64::consts::FRAC_PI_2,
    }
}

/// ∫_0^1 g(s)(1−s²)^{(d−3)/2} ds for d ≥ 2, written as ∫_0^{π/2} g(cos φ) sin^{d−2}φ dφ.
/// For d = 1 returns the two-point rule (g(1) + g(−1))/2.
pub fn integrate_s_half<G: Fn(Cosine) -> f64>(g: G, d: usize, opts: QuadOptions) -> QuadResult {
    if d == 1 {
        let v = 0.5 * (g(Cosine::new(1.0)) + g(Cosine::new(-1.0)));
        return QuadResult {
            value: v,
            abs_error_estimate: 0.0,
            evaluations: 2,
            converged: v.is_finite(),
        };
    }
    let k = (d - 2) as i32;
    integrate_segments(
        |n: Node| {
            let phi = n.x;
            let w = if k == 0 { 1.0 } else { phi.sin().powi(k) };
            g(Cosine::from_angle(phi)) * w
        },
        &[half_angle_segment()],
        opts,
    )
}

/// ∫_{S^{d−1}} g(⟨θ, e⟩) dσ(θ) for a fixed unit vector e.
///
/// `extra_breaks` are additional cut points in s ∈ (−1, 1) (for example where
/// an indicator switches).
pub fn integrate_sphere<G: Fn(Cosine) -> f64>(
    g: G,
    d: usize,
    extra_breaks: &[f64],
    opts: QuadOptions,
) -> QuadResult {
    if d == 1 {
        let v = g(Cosine::new(1.0)) + g(Cosine::new(-1.0));
        return QuadResult {
            value: v,
            abs_error_estimate: 0.0,
            evaluations: 2,
            converged: v.is_finite(),
        };
    }
    let k = (d - 2) as i32;
    let omega = sphere_area(d - 2);
    // Map s-breaks to φ in each half: s = cos φ (upper) and s = −cos φ (lower).
    let mut upper = vec![];
    let mut lower = vec![];
    for &s in extra_breaks {
        if s > 0.0 && s < 1.0 {
            upper.push(s.acos());
        } else if s < 0.0 && s > -1.0 {
            lower.push((-s).acos());
        }
    }
    let build = |breaks: &mut Vec<f64>| -> Vec<Segment> {
        breaks.sort_by(|a, b| a.total_cmp(b));
        let half = std::f64::consts::FRAC_PI_2;
        let mut segs = Vec::new();
        let mut prev = 0.0;
        for &b in breaks.iter() {
            if b <= prev || b >= half {
                continue;
            }
            if prev == 0.0 {
                segs.push(Segment::Anchored { anchor: 0.0, len: b });
            } else {
                segs.push(Segment::Finite { a: prev, b });
            }
            prev = b;
        }
        if prev == 0.0 {
            segs.push(half_angle_segment());
        } else {
            segs.push(Segment::Finite { a: prev, b: half });
        }
        segs
    };
    let halves = [(true, build(&mut upper)), (false, build(&mut lower))];
    let mut total = QuadResult {
        value: 0.0,
        abs_error_estimate: 0.0,
        evaluations: 0,
        converged: true,
    };
    let o = QuadOptions {
        abs_tol: 0.5 * opts.abs_tol / omega,
        ..opts
    };
    for (upper_half, segs) in halves {
        let r = integrate_segments(
            |n: Node| {
                let phi = n.x;
                let w = if k == 0 { 1.0 } else { phi.sin().powi(k) };
                let c = if upper_half {
                    Cosine::from_angle(phi)
                } else {
                    Cosine::from_angle_mirrored(phi)
                };
                g(c) * w
            },
            &segs,
            o,
        );
        total.value += r.value;
        total.abs_error_estimate += r.abs_error_estimate;
        total.evaluations += r.evaluations;
        total.converged &= r.converged;
    }
    total.value *= omega;
    total.abs_error_estimate *= omega;
    total
}

/// |x + z|² for |x| = `x_norm`, |z| = `rho` and cosine `c` between them,
/// without cancellation when x + z is close to the origin.
#[inline]
pub fn shifted_norm2(x_norm: f64, rho: f64, c: Cosine) -> f64 {
    if c.s >= 0.0 {
        x_norm * x_norm + rho * (2.0 * x_norm * c.s + rho)
    } else {
        let g = x_norm - rho;
        g * g + 2.0 * x_norm * rho * c.one_plus
    }
}

/// [`integrate_sphere`] with a purely relative target: the absolute
/// tolerance is set from a three-point magnitude probe of `g`.
pub fn integrate_sphere_rel<G: Fn(Cosine) -> f64>(
    g: G,
    d: usize,
    extra_breaks: &[f64],
    rel_tol: f64,
) -> QuadResult {
    if d == 1 {
        return integrate_sphere(g, d, extra_breaks, QuadOptions::default());
    }
    // GK21 cannot certify much below 50ε relative
    let rel_tol = rel_tol.max(1e-12);
    let scale = g(Cosine::new(1.0)).abs() + g(Cosine::new(0.0)).abs() + g(Cosine::new(-1.0)).abs();
    let scale = if scale.is_finite() { scale } else { 0.0 };
    let opts = QuadOptions {
        abs_tol: (rel_tol * 1e-3 * scale).max(f64::MIN_POSITIVE),
        rel_tol,
        max_subdivisions: 2000,
    };
    integrate_sphere(g, d, extra_breaks, opts)
}

/// Lower cut-off of the numerical part of the small-jump radial integrals;
/// below it the integrand is continued by its leading ρ² behaviour.
const SMALL_RHO: f64 = 1e-30;

/// ∫_0^1 ρ^{d−1} ν(ρ) S(ρ) dρ for a stable small-jump part, where S(ρ) = O(ρ²).
pub(crate) fn small_jump_radial<S: Fn(f64) -> f64>(
    sphere: S,
    model: &ModelParams,
    opts: QuadOptions,
) -> Result<QuadResult> {
    model.check_small_jump()?;
    let d = model.d as f64;
    let alpha = model.alpha;
    let kernel = model.kernel();
    let weight = |rho: f64| rho.powf(d - 1.0) * kernel.small_density(rho);
    let segs = [
        Segment::Geometric { a: SMALL_RHO, b: 0.5 },
        Segment::Finite { a: 0.5, b: 1.0 },
    ];
    let mut r = integrate_segments(
        |n: Node| {
            let v = sphere(n.x);
            if v == 0.0 {
                0.0
            } else {
                v * weight(n.x)
            }
        },
        &segs,
        opts,
    );
    // ∫_0^{ρ_min} ρ^{−1−α} S(ρ_min)(ρ/ρ_min)² dρ
    let head = sphere(SMALL_RHO) * SMALL_RHO.powf(-alpha) / (2.0 - alpha);
    r.value += head;
    Ok(r)
}

/// ∫_{0<|z|<1} R(z)(a₁(x) + a₁(x+z)) ν(dz) for a second-order Taylor
/// remainder R given as a function of (|z|, cosine to x).
///
/// The remainder must vanish like |z|²; two probe radii check this and a
/// first-order leftover is refused as a contract violation.
pub fn integrate_compensated_smalljump<R: Fn(f64, Cosine) -> f64>(
    remainder: R,
    x_norm: f64,
    model: &ModelParams,
    opts: QuadOptions,
) -> Result<QuadResult> {
    model.check_small_jump()?;
    let probe_s: &[f64] = if model.d == 1 {
        &[1.0, -1.0]
    } else {
        &[1.0, 0.6, 0.0, -0.6, -1.0]
    };
    let probe = |rho: f64| {
        probe_s
            .iter()
            .map(|&s| remainder(rho, Cosine::new(s)).abs())
            .fold(0.0, f64::max)
    };
    let (far, near) = (probe(1e-3), probe(1e-4));
    if !(near.is_finite() && far.is_finite()) || near > 0.05 * far {
        return Err(Error::Contract(format!(
            "remainder is not O(|z|²) at |x| = {x_norm:e}: |R(1e-4)| = {near:e}, |R(1e-3)| = {far:e}"
        )));
    }
    let co = model.coefficients();
    let a1x = co.a1_sq(x_norm * x_norm);
    let rel = (opts.rel_tol * 1e-2).max(1e-12);
    small_jump_radial(
        |rho| {
            integrate_sphere_rel(
                |c| {
                    let rem = remainder(rho, c);
                    if rem == 0.0 {
                        return 0.0;
                    }
                    rem * (a1x + co.a1_sq(shifted_norm2(x_norm, rho, c)))
                },
                model.d,
                &[],
                rel,
            )
            .value
        },
        model,
        opts,
    )
}

/// Radial abscissa with exact `r − 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RPoint {
    pub r: f64,
    pub dr: f64,
}

/// Outer segments for the (r, s) integrals: cuts at 1/2, 1, 3/2, with r = 1
/// anchored from both sides.
fn rs_segments(r_lo: f64) -> Vec<(Segment, bool)> {
    // bool: node offset is relative to r = 1
    let mut v = Vec::new();
    if r_lo <= 0.0 {
        v.push((Segment::Anchored { anchor: 0.0, len: 0.5 }, false));
    } else if r_lo < 0.5 {
        v.push((Segment::Geometric { a: r_lo, b: 0.5 }, false));
    }
    if r_lo < 1.0 {
        let a = r_lo.max(0.5);
        v.push((Segment::Anchored { anchor: 1.0, len: -(1.0 - a) }, true));
    }
    if r_lo < 1.0 {
        v.push((Segment::Anchored { anchor: 1.0, len: 0.5 }, true));
    } else if r_lo < 1.5 {
        v.push((Segment::Finite { a: r_lo, b: 1.5 }, false));
    }
    v.push((Segment::Tail { start: r_lo.max(1.5) }, false));
    v
}

/// ∫_{r_lo}^∞ (∫_0^1 g(r, s)(1−s²)^{(d−3)/2} ds) r^{−1−index} dr.
///
/// For d = 1 the inner integral is the two-point rule of [`integrate_s_half`].
/// The integrand receives exact `r − 1` and exact `1 ± s`.
pub fn integrate_rs<G: Fn(RPoint, Cosine) -> f64>(
    g: G,
    d: usize,
    index: f64,
    r_lo: f64,
    opts: QuadOptions,
) -> QuadResult {
    let segs = rs_segments(r_lo);
    let inner_opts = opts.inner();
    let mut total = QuadResult {
        value: 0.0,
        abs_error_estimate: 0.0,
        evaluations: 0,
        converged: true,
    };
    // inner misses show up as noise in the outer estimate
    let inner_evals = std::cell::Cell::new(0usize);
    for (seg, rel_one) in segs {
        let r = integrate_segments(
            |n: Node| {
                let (r, dr) = if rel_one {
                    (n.x, n.off)
                } else {
                    (n.x, n.x - 1.0)
                };
                let p = RPoint { r, dr };
                let inner = integrate_s_half(|c| g(p, c), d, inner_opts);
                inner_evals.set(inner_evals.get() + inner.evaluations);
                if inner.value == 0.0 {
                    0.0
                } else {
                    inner.value * r.powf(-1.0 - index)
                }
            },
            &[seg],
            QuadOptions {
                abs_tol: opts.abs_tol / 4.0,
                ..opts
            },
        );
        total.value += r.value;
        total.abs_error_estimate += r.abs_error_estimate;
        total.converged &= r.converged;
    }
    total.evaluations = inner_evals.get();
    total
}

/// Gauss–Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, QuadOptions::default());
        assert!((r.value - 0.0).abs() < 1e-14);
        assert!(r.converged);
    }

    #[test]
    fn zero_integrand_has_zero_error() {
        let r = integrate(|_| 0.0, 0.0, 1.0, QuadOptions::default());
        assert_eq!(r.value, 0.0);
        assert_eq!(r.abs_error_estimate, 0.0);
        assert!(r.converged);
    }

    #[test]
    fn log_weighted_radial() {
        // ∫ log(1+r²) r^{-2} dr = π
        let r = integrate_radial(|r| (r * r).ln_1p(), 0.0, f64::INFINITY, -2.0, QuadOptions::default());
        assert!((r.value - PI).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn sqrt_singularity_anchored() {
        let segs = [Segment::Anchored { anchor: 0.0, len: 1.0 }];
        let r = integrate_segments(|n| n.x.powf(-0.5), &segs, QuadOptions::default());
        assert!((r.value - 2.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn sphere_area_by_quadrature() {
        for d in 1..=5 {
            let r = integrate_sphere(|_| 1.0, d, &[], QuadOptions::default());
            assert!((r.value - sphere_area(d - 1)).abs() < 1e-10, "d={d} {r:?}");
        }
    }

    #[test]
    fn compensated_quadratic_is_two_c_star() {
        use crate::model::{make_model, KernelVariant};
        for (d, alpha) in [(1, 1.0), (2, 0.5), (3, 1.5)] {
            let m = make_model(d, alpha, alpha, 0.0, 0.0, KernelVariant::StablePair).unwrap();
            let r = integrate_compensated_smalljump(|rho, _| rho * rho, 3.0, &m, QuadOptions::new(1e-13, 1e-12))
                .unwrap();
            let (cs, _) = m.kernel().small_jump_moments().unwrap();
            assert!((r.value - 2.0 * cs).abs() < 1e-9 * cs, "d={d}: {} vs {}", r.value, 2.0 * cs);
        }
    }

    #[test]
    fn first_order_remainder_is_refused() {
        use crate::model::{make_model, KernelVariant};
        let m = make_model(2, 1.0, 1.0, 0.0, 0.0, KernelVariant::StablePair).unwrap();
        let e = integrate_compensated_smalljump(|rho, c| rho * c.s, 1.0, &m, QuadOptions::default()).unwrap_err();
        assert!(matches!(e, Error::Contract(_)));
    }

    #[test]
    fn shifted_norm_matches_vectors() {
        let x = 7.0;
        for &(rho, s) in &[(0.3, 0.2), (7.0, -1.0), (6.999, -0.9999), (2.0, 1.0)] {
            let c = Cosine::new(s);
            let sin = (1.0f64 - s * s).max(0.0).sqrt();
            let v = [x + rho * s, rho * sin];
            let direct = v[0] * v[0] + v[1] * v[1];
            assert!((shifted_norm2(x, rho, c) - direct).abs() <= 1e-12 * (1.0 + direct));
        }
    }

    #[test]
    fn gauss_legendre_integrates_degree_31() {
        let (x, w) = gauss_legendre(16);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(31)).sum();
        assert!((s - 1.0 / 32.0).abs() < 1e-15);
    }
}
