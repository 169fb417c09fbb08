//! Stokes, anti-Stokes and higher-order Stokes geometry of the saddle family,
//! curve tracing, crossing points, and region classification.
//!
//! Curves are traced with saddle labels continued along the trace, so a
//! curve stays a single analytic object when it crosses a branch cut; the
//! stored labels are those at the seed.

use std::f64::consts::PI;

use crate::core::{transport_step, Branch, BranchState, Params, SaddleId, C64, I};
use crate::error::{Error, Result};
use crate::saddle::{height_derivative, saddle_height};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CurvePair {
    pub first: SaddleId,
    pub second: SaddleId,
}

impl CurvePair {
    pub fn new(first: SaddleId, second: SaddleId) -> Self {
        assert!(first != second, "a curve pair needs two distinct saddles");
        Self { first, second }
    }

    /// `(s,+)` with `(s,−)`: the pair that coalesces at `x = 0`.
    pub fn origin(s: i64) -> Self {
        Self::new(SaddleId::plus(s), SaddleId::minus(s))
    }

    /// `(s,−)` with `(s+1,+)`: the pair that coalesces at `x = −4/σ²`.
    pub fn outer(s: i64) -> Self {
        Self::new(SaddleId::minus(s), SaddleId::plus(s + 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CurveTriple {
    pub base: SaddleId,
    pub mid: SaddleId,
    pub far: SaddleId,
}

impl CurveTriple {
    pub fn new(base: SaddleId, mid: SaddleId, far: SaddleId) -> Result<Self> {
        if base == mid || base == far || mid == far {
            return Err(Error::DegenerateTriple { value: 0.0 });
        }
        Ok(Self { base, mid, far })
    }

    /// `(s,−),(s+1,+),(s+1,−)`.
    pub fn minus_plus_minus(s: i64) -> Self {
        Self {
            base: SaddleId::minus(s),
            mid: SaddleId::plus(s + 1),
            far: SaddleId::minus(s + 1),
        }
    }

    /// `(s,+),(s,−),(s+1,+)`.
    pub fn plus_minus_plus(s: i64) -> Self {
        Self {
            base: SaddleId::plus(s),
            mid: SaddleId::minus(s),
            far: SaddleId::plus(s + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CurveKind {
    Stokes,
    AntiStokes,
    Higher,
}

impl CurveKind {
    pub fn name(self) -> &'static str {
        match self {
            CurveKind::Stokes => "stokes",
            CurveKind::AntiStokes => "antistokes",
            CurveKind::Higher => "higher",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Labels {
    Pair(CurvePair),
    Triple(CurveTriple),
    /// Exponent difference `4x^{3/2}/3` of the continuous Airy contributions.
    ContinuousAiry,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSpec {
    pub kind: CurveKind,
    pub labels: Labels,
    pub points: Vec<C64>,
    pub active_mask: Vec<bool>,
    /// Set when tracing stopped early (corrector failure or step budget).
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionLabel {
    D1,
    D2,
    D3,
}

impl RegionLabel {
    pub fn coefficients(self) -> RegionCoefficients {
        match self {
            RegionLabel::D1 => RegionCoefficients { plus: 1, minus: 0 },
            RegionLabel::D2 => RegionCoefficients { plus: 0, minus: 1 },
            RegionLabel::D3 => RegionCoefficients { plus: 1, minus: 1 },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RegionLabel::D1 => "D1",
            RegionLabel::D2 => "D2",
            RegionLabel::D3 => "D3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RegionCoefficients {
    pub plus: u8,
    pub minus: u8,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Window {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        if !(re_min < re_max && im_min < im_max) {
            return Err(Error::InvalidParams(format!(
                "empty window [{re_min},{re_max}]x[{im_min},{im_max}]"
            )));
        }
        Ok(Self {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    pub fn contains(&self, x: C64) -> bool {
        x.re >= self.re_min && x.re <= self.re_max && x.im >= self.im_min && x.im <= self.im_max
    }

    pub fn diagonal(&self) -> f64 {
        (self.re_max - self.re_min).hypot(self.im_max - self.im_min)
    }

    /// Default structure window for a given σ: the σ=1 box `[−8,4]×[−6,6]` scaled by `1/|σ|²`
    /// and centred on the virtual turning point.
    pub fn default_for(p: &Params) -> Self {
        let s = 1.0 / p.sigma().norm_sqr();
        let c = -2.0 / (p.sigma() * p.sigma());
        Self {
            re_min: c.re - 6.0 * s,
            re_max: c.re + 6.0 * s,
            im_min: c.im - 6.0 * s,
            im_max: c.im + 6.0 * s,
        }
    }
}

// ---------------------------------------------------------------- values

pub fn singulant(x: C64, pair: CurvePair, p: &Params, state: BranchState) -> Result<C64> {
    p.check_off_turning_points(x)?;
    Ok(saddle_height(x, pair.first, p, state) - saddle_height(x, pair.second, p, state))
}

fn singulant_with_derivative(x: C64, pair: CurvePair, p: &Params) -> (C64, C64) {
    let st = BranchState::PRINCIPAL;
    let v = saddle_height(x, pair.first, p, st) - saddle_height(x, pair.second, p, st);
    let d = height_derivative(x, pair.first, p, st) - height_derivative(x, pair.second, p, st);
    (v, d)
}

pub fn stokes_value(x: C64, pair: CurvePair, p: &Params) -> Result<f64> {
    Ok(singulant(x, pair, p, BranchState::PRINCIPAL)?.im)
}

pub fn anti_value(x: C64, pair: CurvePair, p: &Params) -> Result<f64> {
    Ok(singulant(x, pair, p, BranchState::PRINCIPAL)?.re)
}

fn ratio_with_derivative(x: C64, t: CurveTriple, p: &Params) -> Result<(C64, C64)> {
    let (n, dn) = singulant_with_derivative(
        x,
        CurvePair {
            first: t.base,
            second: t.mid,
        },
        p,
    );
    let (d, dd) = singulant_with_derivative(
        x,
        CurvePair {
            first: t.base,
            second: t.far,
        },
        p,
    );
    if d.norm() < 1e-12 {
        return Err(Error::DegenerateTriple { value: d.norm() });
    }
    Ok((n / d, (dn * d - n * dd) / (d * d)))
}

pub fn higher_value(x: C64, triple: CurveTriple, p: &Params) -> Result<f64> {
    if triple.mid == triple.far {
        return Err(Error::DegenerateTriple { value: 0.0 });
    }
    Ok(ratio_with_derivative(x, triple, p)?.0.im)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningPoints {
    pub origin: C64,
    pub outer: C64,
    /// Virtual turning point; no saddles coalesce here.
    pub virtual_point: C64,
}

pub fn turning_points(p: &Params) -> TurningPoints {
    let s2 = p.sigma() * p.sigma();
    TurningPoints {
        origin: C64::new(0.0, 0.0),
        outer: -4.0 / s2,
        virtual_point: -2.0 / s2,
    }
}

// ---------------------------------------------------------------- level sets

/// A real harmonic function `Im G` or `Re G` of an analytic `G`, with the
/// saddle labels that define `G` continued along the evaluation path.
#[derive(Debug, Clone, Copy)]
pub struct Condition {
    pub kind: CurveKind,
    pub labels: Labels,
    pub params: Params,
}

#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub value: f64,
    /// Gradient as a complex number `∂f/∂Re x + i ∂f/∂Im x`.
    pub grad: C64,
    pub scale: f64,
}

fn im_part(g: C64, dg: C64) -> (f64, C64) {
    (g.im, C64::new(dg.im, dg.re))
}

fn re_part(g: C64, dg: C64) -> (f64, C64) {
    (g.re, dg.conj())
}

impl Condition {
    pub fn new(kind: CurveKind, labels: Labels, params: Params) -> Self {
        Self {
            kind,
            labels,
            params,
        }
    }

    pub fn eval(&self, labels: &Labels, x: C64) -> Result<Sample> {
        let p = &self.params;
        let (g, dg) = match labels {
            Labels::Pair(pair) => singulant_with_derivative(x, *pair, p),
            Labels::Triple(t) => ratio_with_derivative(x, *t, p)?,
            Labels::ContinuousAiry => {
                let x = if x.im == 0.0 { C64::new(x.re, 0.0) } else { x };
                (4.0 / 3.0 * x.powf(1.5), 2.0 * x.sqrt())
            }
        };
        let (value, grad) = match self.kind {
            CurveKind::AntiStokes => re_part(g, dg),
            CurveKind::Stokes | CurveKind::Higher => im_part(g, dg),
        };
        Ok(Sample {
            value,
            grad,
            scale: g.norm().max(1.0),
        })
    }

    pub fn advance(&self, labels: &Labels, from: C64, to: C64) -> Result<Labels> {
        let p = &self.params;
        Ok(match labels {
            Labels::Pair(c) => Labels::Pair(CurvePair {
                first: transport_step(from, to, c.first, p)?,
                second: transport_step(from, to, c.second, p)?,
            }),
            Labels::Triple(t) => Labels::Triple(CurveTriple {
                base: transport_step(from, to, t.base, p)?,
                mid: transport_step(from, to, t.mid, p)?,
                far: transport_step(from, to, t.far, p)?,
            }),
            Labels::ContinuousAiry => Labels::ContinuousAiry,
        })
    }

    fn eval_from(&self, labels: &Labels, from: C64, x: C64) -> Result<Sample> {
        let l = self.advance(labels, from, x)?;
        self.eval(&l, x)
    }
}

/// Points where tracing stops: a trace ending within `radius` of one of
/// them is closed off with the point itself appended.
#[derive(Debug, Clone, Default)]
pub struct TraceOptions {
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub max_points: usize,
    pub singular_points: Vec<C64>,
    pub singular_radius: f64,
    pub targets: Vec<C64>,
    pub target_radius: f64,
}

impl TraceOptions {
    pub fn for_window(window: &Window, p: &Params) -> Self {
        let tp = turning_points(p);
        let scale = 1.0 / p.sigma().norm_sqr();
        Self {
            initial_step: 1e-2 * scale,
            max_step: (window.diagonal() / 150.0).min(0.05 * scale.max(1.0)),
            min_step: 1e-9 * scale,
            max_points: 40_000,
            singular_points: vec![tp.origin, tp.outer],
            singular_radius: 2e-3 * scale,
            targets: Vec::new(),
            target_radius: 1e-6 * scale,
        }
    }
}

const CORRECT_TOL: f64 = 1e-11;

fn correct(cond: &Condition, labels: &Labels, from: C64, guess: C64) -> Option<(C64, Sample)> {
    let mut x = guess;
    for _ in 0..12 {
        let s = cond.eval_from(labels, from, x).ok()?;
        if !s.value.is_finite() || s.grad.norm() == 0.0 {
            return None;
        }
        if s.value.abs() <= CORRECT_TOL * s.scale {
            return Some((x, s));
        }
        x -= s.grad * (s.value / s.grad.norm_sqr());
    }
    let s = cond.eval_from(labels, from, x).ok()?;
    (s.value.abs() <= 1e-8 * s.scale).then_some((x, s))
}

enum Stop {
    Window,
    Singular(C64),
    Target(C64),
    Closed,
    Budget,
    Failed(String),
}

fn distance_to_segment(a: C64, b: C64, q: C64) -> f64 {
    let d = b - a;
    let l2 = d.norm_sqr();
    if l2 == 0.0 {
        return (q - a).norm();
    }
    let t = (((q - a) * d.conj()).re / l2).clamp(0.0, 1.0);
    (a + d * t - q).norm()
}

/// March along the level set in one direction from a point already on it.
fn march(
    cond: &Condition,
    start: C64,
    labels: Labels,
    direction: f64,
    window: &Window,
    opt: &TraceOptions,
) -> (Vec<C64>, Stop) {
    let mut pts = vec![start];
    let mut labels = labels;
    let mut x = start;
    let Ok(s0) = cond.eval(&labels, x) else {
        return (pts, Stop::Failed("evaluation failed at seed".into()));
    };
    let mut tangent = I * s0.grad / s0.grad.norm() * direction;
    let mut h = opt.initial_step;
    let mut travelled = 0.0;
    loop {
        if pts.len() >= opt.max_points {
            return (pts, Stop::Budget);
        }
        let guess = x + tangent * h;
        let accepted = correct(cond, &labels, x, guess).and_then(|(xn, s)| {
            let mut t = I * s.grad / s.grad.norm();
            if (t * tangent.conj()).re < 0.0 {
                t = -t;
            }
            let turn = (t * tangent.conj()).arg().abs();
            let drift = (xn - guess).norm();
            (turn < 0.35 && drift < 0.5 * h && (xn - x).norm() > 0.1 * h).then_some((xn, t))
        });
        match accepted {
            Some((xn, t)) => {
                let Ok(nl) = cond.advance(&labels, x, xn) else {
                    return (pts, Stop::Singular(xn));
                };
                for &q in &opt.targets {
                    if distance_to_segment(x, xn, q) < opt.target_radius.max(1e-3 * h) {
                        pts.push(q);
                        return (pts, Stop::Target(q));
                    }
                }
                labels = nl;
                travelled += (xn - x).norm();
                x = xn;
                tangent = t;
                pts.push(x);
                if !window.contains(x) {
                    return (pts, Stop::Window);
                }
                for &q in &opt.singular_points {
                    if (x - q).norm() < opt.singular_radius {
                        return (pts, Stop::Singular(q));
                    }
                }
                if travelled > 4.0 * h && (x - start).norm() < 0.75 * h && pts.len() > 8 {
                    pts.push(start);
                    return (pts, Stop::Closed);
                }
                h = (h * 1.4).min(opt.max_step);
            }
            None => {
                h *= 0.5;
                if h < opt.min_step {
                    return (pts, Stop::Failed(format!("corrector failed near {x}")));
                }
            }
        }
    }
}

/// Trace the zero set of a condition through `seed` in both directions.
pub fn trace_curve(
    kind: CurveKind,
    labels: Labels,
    seed: C64,
    window: &Window,
    p: &Params,
) -> Result<CurveSpec> {
    trace_with(
        &Condition::new(kind, labels, *p),
        seed,
        window,
        &TraceOptions::for_window(window, p),
    )
}

pub fn trace_with(
    cond: &Condition,
    seed: C64,
    window: &Window,
    opt: &TraceOptions,
) -> Result<CurveSpec> {
    let s = cond.eval(&cond.labels, seed)?;
    if s.value.abs() > 1e-6 * s.scale {
        return Err(Error::SeedOffCurve {
            seed,
            residual: s.value.abs(),
        });
    }
    let (x0, _) = correct(cond, &cond.labels, seed, seed).ok_or(Error::NoConvergence {
        what: "curve corrector at seed",
        last: seed,
    })?;
    let (fwd, stop_f) = march(cond, x0, cond.labels, 1.0, window, opt);
    let closed = matches!(stop_f, Stop::Closed);
    let mut points: Vec<C64> = Vec::new();
    let mut diagnostic = None;
    if closed {
        points = fwd;
    } else {
        let (bwd, stop_b) = march(cond, x0, cond.labels, -1.0, window, opt);
        points.extend(bwd.iter().rev());
        points.extend(fwd.iter().skip(1));
        for stop in [stop_b, stop_f] {
            match stop {
                Stop::Failed(msg) => diagnostic = Some(msg),
                Stop::Budget => diagnostic = Some("step budget exhausted".into()),
                _ => {}
            }
        }
    }
    let n = points.len();
    Ok(CurveSpec {
        kind: cond.kind,
        labels: cond.labels,
        points,
        active_mask: vec![false; n],
        diagnostic,
    })
}

/// Trace from `seed` in one direction only, oriented away from `away_from`.
fn trace_outward(
    cond: &Condition,
    seed: C64,
    labels: Labels,
    away_from: C64,
    window: &Window,
    opt: &TraceOptions,
) -> Result<(Vec<C64>, Option<C64>)> {
    let s = cond.eval(&labels, seed)?;
    let t = I * s.grad / s.grad.norm();
    let dir = if ((seed - away_from) * t.conj()).re >= 0.0 {
        1.0
    } else {
        -1.0
    };
    let c = Condition { labels, ..*cond };
    let (pts, stop) = march(&c, seed, labels, dir, window, opt);
    let end = match stop {
        Stop::Target(q) | Stop::Singular(q) => Some(q),
        _ => None,
    };
    Ok((pts, end))
}

/// Zeros of a condition on a small circle around `center`, with labels
/// continued around the circle from the principal labels at the first sample.
///
/// Labels depend on `x` only through `σ²x`, so the first sample sits above
/// the centre in the `σ²x` plane, off the branch cuts of every σ.
pub fn seeds_on_circle(
    cond: &Condition,
    center: C64,
    radius: f64,
    samples: usize,
) -> Vec<(C64, Labels)> {
    let a0 = PI / 2.0 + 1e-3 - 2.0 * cond.params.sigma().arg();
    let start = center + C64::from_polar(radius, a0);
    let pts: Vec<C64> = (0..=samples)
        .map(|k| center + C64::from_polar(radius, a0 + 2.0 * PI * k as f64 / samples as f64))
        .collect();
    seeds_along(cond, &pts, start)
}

/// Zeros of a condition along a polyline, labels continued from the first point.
pub fn seeds_along(cond: &Condition, pts: &[C64], _start: C64) -> Vec<(C64, Labels)> {
    let mut out = Vec::new();
    let mut labels = cond.labels;
    let mut prev: Option<(C64, f64, Labels)> = None;
    for &x in pts {
        let l = match prev {
            Some((xp, _, lp)) => match cond.advance(&lp, xp, x) {
                Ok(l) => l,
                Err(_) => {
                    prev = None;
                    continue;
                }
            },
            None => labels,
        };
        let Ok(s) = cond.eval(&l, x) else {
            prev = None;
            continue;
        };
        if let Some((xp, vp, lp)) = prev {
            if vp == 0.0 || vp.signum() != s.value.signum() {
                if let Some(root) = bisect(cond, &lp, xp, x, vp) {
                    out.push(root);
                }
            }
        }
        labels = l;
        prev = Some((x, s.value, l));
    }
    out
}

fn bisect(cond: &Condition, labels: &Labels, a: C64, b: C64, fa: f64) -> Option<(C64, Labels)> {
    let (mut lo, mut hi) = (0.0, 1.0);
    let at = |t: f64| a + (b - a) * t;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let v = cond.eval_from(labels, a, at(mid)).ok()?.value;
        if v.signum() == fa.signum() && v != 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = at(0.5 * (lo + hi));
    let l = cond.advance(labels, a, x).ok()?;
    let s = cond.eval(&l, x).ok()?;
    // Sign changes caused by a jump rather than a zero are rejected here.
    (s.value.abs() <= 1e-7 * s.scale).then_some((x, l))
}

// ---------------------------------------------------------------- crossing points

/// Damped Newton on `Im χ^{+,−}_{0,0} = 0`, `Im χ^{−,+}_{0,1} = 0`.
fn crossing_newton(seed: C64, p: &Params) -> Result<C64> {
    let a = CurvePair::origin(0);
    let b = CurvePair::outer(0);
    let f = |x: C64| {
        let (ga, da) = singulant_with_derivative(x, a, p);
        let (gb, db) = singulant_with_derivative(x, b, p);
        let (fa, ja) = im_part(ga, da);
        let (fb, jb) = im_part(gb, db);
        (fa, fb, ja, jb)
    };
    let mut x = seed;
    let scale = 1.0 / p.sigma().norm_sqr();
    for _ in 0..100 {
        let (fa, fb, ja, jb) = f(x);
        let norm = fa.hypot(fb);
        if norm < 1e-14 * (1.0 + x.norm()) {
            return Ok(x);
        }
        let det = ja.re * jb.im - ja.im * jb.re;
        if det.abs() < 1e-300 {
            break;
        }
        let dre = (fa * jb.im - fb * ja.im) / det;
        let dim = (ja.re * fb - jb.re * fa) / det;
        let mut step = C64::new(-dre, -dim);
        if step.norm() > 0.5 * scale {
            step *= 0.5 * scale / step.norm();
        }
        let mut lambda = 1.0;
        loop {
            let xn = x + step * lambda;
            let (ga, gb, _, _) = f(xn);
            if ga.hypot(gb) < norm || lambda < 1e-4 {
                x = xn;
                break;
            }
            lambda *= 0.5;
        }
        if step.norm() * lambda < 1e-15 * (1.0 + x.norm()) {
            return Ok(x);
        }
    }
    let (fa, fb, _, _) = f(x);
    if fa.hypot(fb) < 1e-10 * (1.0 + x.norm()) {
        Ok(x)
    } else {
        Err(Error::NoConvergence {
            what: "crossing point solver",
            last: x,
        })
    }
}

/// The two Stokes crossing points, upper one first (relative to the rotated frame).
pub fn crossing_points(p: &Params) -> Result<(C64, C64)> {
    let sig = p.sigma();
    let v = turning_points(p).virtual_point;
    // The crossing points sit on x = −2/σ² + iσt; seed at the σ=1 distance.
    let d = I * sig / sig.norm().powi(3) * 3.0;
    let up = crossing_newton(v + d, p)?;
    let down = crossing_newton(v - d, p)?;
    Ok((up, down))
}

// ---------------------------------------------------------------- structure

/// Active Stokes boundaries and higher-order curves for one parameter set.
#[derive(Debug, Clone)]
pub struct StokesStructure {
    pub params: Params,
    pub crossings: (C64, C64),
    /// `S^{+,−}_{s,s}` arcs from `x=0` to each crossing point.
    pub origin_arcs: Vec<Vec<C64>>,
    /// `S^{−,+}_{s,s+1}` arcs from `x=−4/σ²` to each crossing point.
    pub outer_arcs: Vec<Vec<C64>>,
    /// Half-lines `S^{±,±}` from each crossing point to infinity, as (start, direction).
    pub rays: Vec<(C64, C64)>,
    /// Closed polygon bounded by the higher-order Stokes curves.
    pub higher_polygon: Vec<C64>,
    pub higher_arcs: Vec<Vec<C64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Boundary {
    Origin,
    Outer,
    Ray,
}

fn structure_window(p: &Params) -> Window {
    let w = Window::default_for(p);
    let s = 1.0 / p.sigma().norm_sqr();
    Window {
        re_min: w.re_min - 4.0 * s,
        re_max: w.re_max + 4.0 * s,
        im_min: w.im_min - 4.0 * s,
        im_max: w.im_max + 4.0 * s,
    }
}

/// Arcs of `cond` leaving `from` that end at one of the crossing points.
fn arcs_to_crossings(
    cond: &Condition,
    from: C64,
    crossings: (C64, C64),
    p: &Params,
) -> Result<Vec<Vec<C64>>> {
    let window = structure_window(p);
    let scale = 1.0 / p.sigma().norm_sqr();
    let mut opt = TraceOptions::for_window(&window, p);
    opt.targets = vec![crossings.0, crossings.1];
    opt.target_radius = 1e-7 * scale;
    opt.singular_points.retain(|q| (q - from).norm() > 1e-12);
    let radius = 1e-2 * scale;
    let mut arcs = Vec::new();
    for (seed, labels) in seeds_on_circle(cond, from, radius, 720) {
        let (pts, end) = trace_outward(cond, seed, labels, from, &window, &opt)?;
        if let Some(q) = end {
            if (q - crossings.0).norm() < 1e-9 || (q - crossings.1).norm() < 1e-9 {
                let mut arc = vec![from];
                arc.extend(pts);
                arcs.push(arc);
            }
        }
    }
    if arcs.len() != 2 {
        return Err(Error::NoConvergence {
            what: "active Stokes arc tracing",
            last: from,
        });
    }
    Ok(arcs)
}

impl StokesStructure {
    pub fn new(p: &Params) -> Result<Self> {
        let crossings = crossing_points(p)?;
        let tp = turning_points(p);
        let origin_cond = Condition::new(CurveKind::Stokes, Labels::Pair(CurvePair::origin(0)), *p);
        let outer_cond = Condition::new(CurveKind::Stokes, Labels::Pair(CurvePair::outer(0)), *p);
        // Near Arg σ = ±π/6, ±π/2 a crossing point merges with a turning point
        // and the active arcs shrink away; report that instead of a tracing failure.
        let degenerate = |e: Error| {
            let scale = 1.0 / p.sigma().norm_sqr();
            [crossings.0, crossings.1]
                .iter()
                .flat_map(|&c| [tp.origin, tp.outer].map(|t| (c, (c - t).norm())))
                .filter(|&(_, d)| d < 0.25 * scale)
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(crossing, distance)| Error::DegenerateStructure { crossing, distance })
                .unwrap_or(e)
        };
        let origin_arcs =
            arcs_to_crossings(&origin_cond, tp.origin, crossings, p).map_err(degenerate)?;
        let outer_arcs =
            arcs_to_crossings(&outer_cond, tp.outer, crossings, p).map_err(degenerate)?;
        let rays = [crossings.0, crossings.1]
            .iter()
            .map(|&c| {
                let d = c - tp.virtual_point;
                (c, d / d.norm())
            })
            .collect();
        let (higher_arcs, higher_polygon) = higher_lobes(p, crossings)?;
        Ok(Self {
            params: *p,
            crossings,
            origin_arcs,
            outer_arcs,
            rays,
            higher_polygon,
            higher_arcs,
        })
    }

    fn boundary_segments(&self, reach: f64) -> Vec<(Boundary, C64, C64)> {
        let mut segs = Vec::new();
        for arc in &self.origin_arcs {
            segs.extend(arc.windows(2).map(|w| (Boundary::Origin, w[0], w[1])));
        }
        for arc in &self.outer_arcs {
            segs.extend(arc.windows(2).map(|w| (Boundary::Outer, w[0], w[1])));
        }
        for &(c, d) in &self.rays {
            segs.push((Boundary::Ray, c, c + d * reach));
        }
        segs
    }

    /// Distance from x to the nearest active Stokes boundary.
    pub fn boundary_distance(&self, x: C64) -> f64 {
        let reach = 10.0 * (x.norm() + 100.0 / self.params.sigma().norm_sqr());
        self.boundary_segments(reach)
            .iter()
            .map(|&(_, a, b)| distance_to_segment(a, b, x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn reference_point(&self) -> C64 {
        let s = self.params.sigma();
        100.0 / (s * s)
    }

    /// Region of x, found by counting active boundaries crossed on the way
    /// from the reference point.
    ///
    /// The switching table below holds while each crossing point stays on
    /// its side of the turning points, i.e. for |Arg σ| < π/6. Past the
    /// coalescence at Arg σ = ±π/6 the active network reconnects (checked
    /// against the exact solution along the resonant line at Arg σ = π/4,
    /// where D1 and D2 come out exchanged), so those σ are refused.
    pub fn classify(&self, x: C64) -> Result<(RegionLabel, RegionCoefficients)> {
        let arg_sigma = self.params.sigma().arg();
        if arg_sigma.abs() >= PI / 6.0 {
            return Err(Error::RegionsUnavailable { arg_sigma });
        }
        let scale = 1.0 / self.params.sigma().norm_sqr();
        if self.boundary_distance(x) < 1e-6 * scale {
            return Err(Error::OnStokesCurve { x });
        }
        let xr = self.reference_point();
        let reach = 10.0 * (x.norm() + xr.norm());
        let segs = self.boundary_segments(reach);
        let vertices = {
            let tp = turning_points(&self.params);
            [tp.origin, tp.outer, self.crossings.0, self.crossings.1]
        };
        let path = self.classification_path(xr, x, &vertices, scale);
        let mut region = RegionLabel::D1;
        for leg in path.windows(2) {
            let mut hits: Vec<(f64, Boundary)> = segs
                .iter()
                .filter_map(|&(kind, a, b)| {
                    segment_crossing(leg[0], leg[1], a, b).map(|t| (t, kind))
                })
                .collect();
            hits.sort_by(|a, b| a.0.total_cmp(&b.0));
            for (_, kind) in hits {
                region = match (region, kind) {
                    (RegionLabel::D1, Boundary::Origin) => RegionLabel::D3,
                    (RegionLabel::D3, Boundary::Origin) => RegionLabel::D1,
                    (RegionLabel::D3, Boundary::Outer) => RegionLabel::D2,
                    (RegionLabel::D2, Boundary::Outer) => RegionLabel::D3,
                    (RegionLabel::D1, Boundary::Ray) => RegionLabel::D2,
                    (RegionLabel::D2, Boundary::Ray) => RegionLabel::D1,
                    _ => return Err(Error::OnStokesCurve { x }),
                };
            }
        }
        Ok((region, region.coefficients()))
    }

    /// Straight path from the reference point, bent once if it passes too
    /// close to a junction of the boundary network.
    fn classification_path(&self, from: C64, to: C64, vertices: &[C64], scale: f64) -> Vec<C64> {
        let clear = |a: C64, b: C64| {
            vertices
                .iter()
                .all(|&v| distance_to_segment(a, b, v) > 1e-4 * scale)
        };
        if clear(from, to) {
            return vec![from, to];
        }
        let mid = (from + to) * 0.5;
        let normal = I * (to - from) / (to - from).norm();
        for k in 1..40 {
            for sgn in [1.0, -1.0] {
                let m = mid + normal * (sgn * 0.37 * k as f64 * scale);
                if clear(from, m) && clear(m, to) {
                    return vec![from, m, to];
                }
            }
        }
        vec![from, to]
    }

    pub fn is_inside_higher(&self, x: C64) -> Result<bool> {
        let scale = 1.0 / self.params.sigma().norm_sqr();
        let d = self
            .higher_polygon
            .windows(2)
            .map(|w| distance_to_segment(w[0], w[1], x))
            .fold(f64::INFINITY, f64::min);
        if d < 1e-6 * scale {
            return Err(Error::AdjacencyUndefined { x });
        }
        Ok(winding_number(&self.higher_polygon, x) != 0)
    }

    pub fn adjacency(&self, x: C64) -> Result<AdjacencySet> {
        Ok(AdjacencySet {
            inside: self.is_inside_higher(x)?,
        })
    }
}

/// Parameter along `p0→p1` where it properly crosses segment `a→b` (half-open in b).
fn segment_crossing(p0: C64, p1: C64, a: C64, b: C64) -> Option<f64> {
    let r = p1 - p0;
    let s = b - a;
    let cross = |u: C64, v: C64| u.re * v.im - u.im * v.re;
    let denom = cross(r, s);
    if denom == 0.0 {
        return None;
    }
    let q = a - p0;
    let t = cross(q, s) / denom;
    let u = cross(q, r) / denom;
    ((0.0..=1.0).contains(&t) && (0.0..1.0).contains(&u)).then_some(t)
}

fn winding_number(poly: &[C64], x: C64) -> i32 {
    let mut total = 0.0;
    for w in poly.windows(2) {
        total += ((w[1] - x) / (w[0] - x)).arg();
    }
    (total / (2.0 * PI)).round() as i32
}

/// Trace the higher-order Stokes curves through both crossing points until
/// they reach the turning points, and close them into a polygon.
fn higher_lobes(p: &Params, crossings: (C64, C64)) -> Result<(Vec<Vec<C64>>, Vec<C64>)> {
    let tp = turning_points(p);
    let window = structure_window(p);
    let scale = 1.0 / p.sigma().norm_sqr();
    let cond = Condition::new(
        CurveKind::Higher,
        Labels::Triple(CurveTriple::minus_plus_minus(0)),
        *p,
    );
    let mut opt = TraceOptions::for_window(&window, p);
    opt.singular_points = Vec::new();
    opt.targets = vec![tp.origin, tp.outer];
    opt.target_radius = 2e-3 * scale;
    let mut arcs = Vec::new();
    for c in [crossings.0, crossings.1] {
        let labels = Labels::Triple(CurveTriple::minus_plus_minus(0));
        let s = cond.eval(&labels, c)?;
        let t = I * s.grad / s.grad.norm();
        let (a, stop_a) = march(&cond, c, labels, 1.0, &window, &opt);
        let (b, stop_b) = march(&cond, c, labels, -1.0, &window, &opt);
        let ends = [(stop_a, a), (stop_b, b)];
        let mut arc: Vec<C64> = Vec::new();
        let mut targets_hit = Vec::new();
        for (stop, pts) in ends {
            match stop {
                Stop::Target(q) => targets_hit.push((q, pts)),
                _ => {
                    return Err(Error::NoConvergence {
                        what: "higher-order Stokes curve tracing",
                        last: c + t,
                    })
                }
            }
        }
        // Orient every arc from the outer turning point to the origin.
        targets_hit.sort_by(|a, b| (a.0 - tp.outer).norm().total_cmp(&(b.0 - tp.outer).norm()));
        let (first, second) = (&targets_hit[0].1, &targets_hit[1].1);
        arc.extend(first.iter().rev());
        arc.extend(second.iter().skip(1));
        arcs.push(arc);
    }
    let mut polygon = arcs[0].clone();
    polygon.extend(arcs[1].iter().rev().skip(1));
    Ok((arcs, polygon))
}

/// Saddle adjacency as a rule over the whole family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdjacencySet {
    /// Inside the region bounded by the higher-order Stokes curves.
    pub inside: bool,
}

impl AdjacencySet {
    pub fn contains(&self, a: SaddleId, b: SaddleId) -> bool {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let ds = b.s - a.s;
        if self.inside {
            match (a.branch, b.branch) {
                (Branch::Plus, Branch::Minus) => ds == 0,
                (Branch::Minus, Branch::Plus) => ds == 1,
                _ => false,
            }
        } else {
            a.branch == b.branch && ds.abs() == 1
        }
    }

    pub fn pairs(&self, s_range: std::ops::RangeInclusive<i64>) -> Vec<(SaddleId, SaddleId)> {
        let mut out = Vec::new();
        for s in s_range {
            if self.inside {
                out.push((SaddleId::plus(s), SaddleId::minus(s)));
                out.push((SaddleId::minus(s), SaddleId::plus(s + 1)));
            } else {
                out.push((SaddleId::plus(s), SaddleId::plus(s + 1)));
                out.push((SaddleId::minus(s), SaddleId::minus(s + 1)));
            }
        }
        out
    }

    /// Saddles adjacent to `id`.
    pub fn neighbours(&self, id: SaddleId) -> [SaddleId; 2] {
        match (self.inside, id.branch) {
            (true, Branch::Plus) => [SaddleId::minus(id.s), SaddleId::minus(id.s - 1)],
            (true, Branch::Minus) => [SaddleId::plus(id.s), SaddleId::plus(id.s + 1)],
            (false, _) => [id.shift(-1), id.shift(1)],
        }
    }
}

pub fn classify(x: C64, p: &Params) -> Result<(RegionLabel, RegionCoefficients)> {
    StokesStructure::new(p)?.classify(x)
}

pub fn adjacency(x: C64, p: &Params) -> Result<AdjacencySet> {
    StokesStructure::new(p)?.adjacency(x)
}

// ---------------------------------------------------------------- families

/// Which pair families carry active Stokes segments.
fn activity(kind: CurveKind, labels: &Labels) -> Option<Boundary> {
    if kind != CurveKind::Stokes {
        return None;
    }
    let Labels::Pair(c) = labels else { return None };
    let (a, b) = (c.first, c.second);
    match (a.branch, b.branch) {
        (Branch::Plus, Branch::Minus) if a.s == b.s => Some(Boundary::Origin),
        (Branch::Minus, Branch::Plus) if a.s == b.s => Some(Boundary::Origin),
        (Branch::Minus, Branch::Plus) if b.s == a.s + 1 => Some(Boundary::Outer),
        (Branch::Plus, Branch::Minus) if a.s == b.s + 1 => Some(Boundary::Outer),
        (x, y) if x == y => Some(Boundary::Ray),
        _ => None,
    }
}

impl StokesStructure {
    /// Mark points of a traced curve that lie on an active boundary.
    pub fn mark_activity(&self, curve: &mut CurveSpec) {
        let scale = 1.0 / self.params.sigma().norm_sqr();
        let Some(kind) = activity(curve.kind, &curve.labels) else {
            curve.active_mask = vec![false; curve.points.len()];
            return;
        };
        let reach = 1e3 * scale;
        let segs: Vec<(C64, C64)> = self
            .boundary_segments(reach)
            .into_iter()
            .filter(|(k, _, _)| *k == kind)
            .map(|(_, a, b)| (a, b))
            .collect();
        curve.active_mask = curve
            .points
            .iter()
            .map(|&x| {
                segs.iter()
                    .any(|&(a, b)| distance_to_segment(a, b, x) < 1e-5 * scale)
            })
            .collect();
    }

    /// Trace the curve families used for structure plots.
    pub fn trace_families(
        &self,
        s_max: i64,
        window: &Window,
        kinds: &[CurveKind],
    ) -> Vec<CurveSpec> {
        let p = &self.params;
        let tp = turning_points(p);
        let mut out = Vec::new();
        let mut families: Vec<(CurveKind, Labels)> = Vec::new();
        for &kind in kinds {
            match kind {
                CurveKind::Higher => {
                    families.push((kind, Labels::Triple(CurveTriple::minus_plus_minus(0))));
                    families.push((kind, Labels::Triple(CurveTriple::plus_minus_plus(0))));
                }
                _ => {
                    for j in -2 * s_max..=2 * s_max {
                        families.push((
                            kind,
                            Labels::Pair(CurvePair::new(SaddleId::plus(0), SaddleId::minus(j))),
                        ));
                    }
                    for j in 1..=s_max {
                        families.push((
                            kind,
                            Labels::Pair(CurvePair::new(SaddleId::plus(0), SaddleId::plus(j))),
                        ));
                    }
                }
            }
        }
        let mut opt = TraceOptions::for_window(window, p);
        opt.max_points = 20_000;
        let scans = scan_lines(window, 14);
        for (kind, labels) in families {
            let cond = Condition::new(kind, labels, *p);
            let mut traced: Vec<CurveSpec> = Vec::new();
            let mut seeds: Vec<(C64, Labels)> = Vec::new();
            if kind == CurveKind::Higher {
                seeds.push((self.crossings.0, labels));
                seeds.push((self.crossings.1, labels));
            }
            for tpx in [tp.origin, tp.outer] {
                seeds.extend(seeds_on_circle(
                    &cond,
                    tpx,
                    1e-2 / p.sigma().norm_sqr(),
                    360,
                ));
            }
            for line in &scans {
                seeds.extend(seeds_along(&cond, line, line[0]));
            }
            for (seed, l) in seeds {
                if !window.contains(seed) {
                    continue;
                }
                let near_existing = traced.iter().any(|c| {
                    c.points
                        .windows(2)
                        .any(|w| distance_to_segment(w[0], w[1], seed) < 2.0 * opt.max_step)
                });
                if near_existing {
                    continue;
                }
                let c = Condition { labels: l, ..cond };
                if let Ok(mut curve) = trace_with(&c, seed, window, &opt) {
                    curve.labels = labels;
                    if curve.points.len() > 2 {
                        self.mark_activity(&mut curve);
                        traced.push(curve);
                    }
                }
            }
            out.extend(traced);
        }
        out
    }
}

fn scan_lines(window: &Window, n: usize) -> Vec<Vec<C64>> {
    let mut lines = Vec::new();
    let samples = 600;
    for k in 0..n {
        // Irrational offsets keep scan lines off the real axis and other symmetry lines.
        let f = (k as f64 + 0.5 + 0.0137) / n as f64;
        let y = window.im_min + f * (window.im_max - window.im_min);
        let xv = window.re_min + f * (window.re_max - window.re_min);
        lines.push(
            (0..=samples)
                .map(|i| {
                    C64::new(
                        window.re_min + (window.re_max - window.re_min) * i as f64 / samples as f64,
                        y,
                    )
                })
                .collect(),
        );
        lines.push(
            (0..=samples)
                .map(|i| {
                    C64::new(
                        xv,
                        window.im_min + (window.im_max - window.im_min) * i as f64 / samples as f64,
                    )
                })
                .collect(),
        );
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn p1() -> Params {
        Params::real(0.05, 1.0).unwrap()
    }

    #[test]
    fn singulant_row_difference() {
        let p = p1();
        let x = c(0.7, -0.4);
        let pair = CurvePair::new(SaddleId::minus(2), SaddleId::minus(3));
        let v = singulant(x, pair, &p, BranchState::PRINCIPAL).unwrap();
        let expect = -2.0 * PI * I * p.shifted(x) / p.sigma();
        assert!((v - expect).norm() < 1e-12, "{v} {expect}");
    }

    #[test]
    fn singulant_near_origin_is_three_halves_power() {
        let p = p1();
        let x = c(1e-3, 0.0);
        let v = singulant(x, CurvePair::origin(0), &p, BranchState::PRINCIPAL).unwrap();
        let lead = 4.0 / 3.0 * x.powf(1.5);
        assert!((v.norm() - lead.norm()).abs() < 1e-3 * lead.norm());
    }

    #[test]
    fn stokes_value_sign_matches_substitution() {
        let p = p1();
        let x = c(-2.0, 1.0);
        let st = BranchState::PRINCIPAL;
        let direct = (saddle_height(x, SaddleId::plus(0), &p, st)
            - saddle_height(x, SaddleId::minus(0), &p, st))
        .im;
        let v = stokes_value(x, CurvePair::origin(0), &p).unwrap();
        assert_eq!(v.signum(), direct.signum());
    }

    #[test]
    fn turning_point_examples() {
        let tp = turning_points(&Params::real(0.1, 2.0).unwrap());
        assert_eq!(tp.outer, c(-1.0, 0.0));
        assert_eq!(tp.virtual_point, c(-0.5, 0.0));
        let tp = turning_points(&Params::new(0.1, c(1.0, 1.0)).unwrap());
        assert!((tp.outer - c(0.0, 2.0)).norm() < 1e-15);
        assert!((tp.virtual_point - c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn crossing_points_sigma_one() {
        let (u, d) = crossing_points(&p1()).unwrap();
        assert!((u - c(-2.0, 3.018)).norm() < 2e-3, "{u}");
        assert!((d - c(-2.0, -3.018)).norm() < 2e-3, "{d}");
        assert!((u - d.conj()).norm() < 1e-12);
    }

    #[test]
    fn crossing_points_rotate_with_sigma() {
        let sig = C64::from_polar(1.0, PI / 12.0);
        let p = Params::new(0.05, sig).unwrap();
        let (u, d) = crossing_points(&p).unwrap();
        let v = turning_points(&p).virtual_point;
        assert!(((u - v).arg() - (PI / 2.0 + PI / 12.0)).abs() < 1e-9);
        assert!(((d - v).arg() - (-PI / 2.0 + PI / 12.0)).abs() < 1e-9);
    }

    #[test]
    fn higher_value_at_crossing_point() {
        let p = p1();
        let (u, _) = crossing_points(&p).unwrap();
        for t in [
            CurveTriple::minus_plus_minus(0),
            CurveTriple::plus_minus_plus(0),
        ] {
            assert!(higher_value(u, t, &p).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_triples_rejected() {
        let a = SaddleId::plus(0);
        let b = SaddleId::minus(0);
        assert!(CurveTriple::new(a, b, b).is_err());
        let p = p1();
        let bad = CurveTriple {
            base: a,
            mid: b,
            far: b,
        };
        assert!(higher_value(c(1.0, 1.0), bad, &p).is_err());
    }

    #[test]
    fn higher_condition_changes_sign_on_vertical_scan() {
        let p = p1();
        let t = CurveTriple::minus_plus_minus(0);
        let f = |y: f64| higher_value(c(-2.0, y), t, &p).unwrap();
        let (mut lo, mut hi) = (2.5, 3.5);
        assert!(f(lo).signum() != f(hi).signum());
        for _ in 0..60 {
            let m = 0.5 * (lo + hi);
            if f(m).signum() == f(lo).signum() {
                lo = m;
            } else {
                hi = m;
            }
        }
        let (u, _) = crossing_points(&p).unwrap();
        assert!((lo - u.im).abs() < 1e-8);
    }

    #[test]
    fn trace_origin_stokes_curve() {
        let p = p1();
        let w = Window::new(-5.0, 3.0, -0.5, 5.0).unwrap();
        let cond = Condition::new(CurveKind::Stokes, Labels::Pair(CurvePair::origin(0)), p);
        let seeds = seeds_on_circle(&cond, c(0.0, 0.0), 1e-2, 360);
        assert_eq!(seeds.len(), 3);
        let upper = seeds.iter().find(|(x, _)| x.im > 5e-3).unwrap();
        let curve = trace_curve(CurveKind::Stokes, upper.1, upper.0, &w, &p).unwrap();
        let (u, _) = crossing_points(&p).unwrap();
        let closest = curve
            .points
            .iter()
            .map(|x| (x - u).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(closest < 0.05, "{closest}");
    }

    #[test]
    fn seed_off_curve_rejected() {
        let p = p1();
        let w = Window::new(-5.0, 3.0, -5.0, 5.0).unwrap();
        let r = trace_curve(
            CurveKind::Stokes,
            Labels::Pair(CurvePair::origin(0)),
            c(-1.0, 2.0),
            &w,
            &p,
        );
        assert!(matches!(r, Err(Error::SeedOffCurve { .. })));
    }

    #[test]
    fn classify_examples() {
        let p = p1();
        let st = StokesStructure::new(&p).unwrap();
        assert_eq!(st.classify(c(10.0, 0.0)).unwrap().0, RegionLabel::D1);
        assert_eq!(st.classify(c(-2.0, 0.0)).unwrap().0, RegionLabel::D3);
        assert_eq!(st.classify(c(-10.0, 0.0)).unwrap().0, RegionLabel::D2);
        assert_eq!(
            st.classify(c(-2.0, 0.0)).unwrap().1,
            RegionCoefficients { plus: 1, minus: 1 }
        );
        assert_eq!(st.classify(c(-1.5, 6.0)).unwrap().0, RegionLabel::D1);
        assert!(st.classify(c(-2.0, 6.0)).is_err());
        assert_eq!(st.classify(c(-2.5, 6.0)).unwrap().0, RegionLabel::D2);
    }

    #[test]
    fn classify_rejects_boundary_points() {
        let p = p1();
        let st = StokesStructure::new(&p).unwrap();
        let x = st.origin_arcs[0][st.origin_arcs[0].len() / 2];
        assert!(matches!(st.classify(x), Err(Error::OnStokesCurve { .. })));
    }

    #[test]
    fn adjacency_examples() {
        let p = p1();
        let st = StokesStructure::new(&p).unwrap();
        let inside = st.adjacency(c(-2.0, 0.0)).unwrap();
        assert!(inside.contains(SaddleId::plus(0), SaddleId::minus(0)));
        assert!(inside.contains(SaddleId::minus(0), SaddleId::plus(1)));
        assert!(!inside.contains(SaddleId::plus(0), SaddleId::plus(1)));
        let outside = st.adjacency(c(-2.0, 6.0)).unwrap();
        assert!(outside.contains(SaddleId::plus(0), SaddleId::plus(1)));
        assert!(!outside.contains(SaddleId::plus(0), SaddleId::minus(0)));
        assert!(st.adjacency(c(2.0, 0.0)).is_ok_and(|a| !a.inside));
    }

    #[test]
    fn adjacency_flips_at_traced_higher_curve() {
        let p = p1();
        let st = StokesStructure::new(&p).unwrap();
        let mut prev = st.adjacency(c(-2.0, 0.05)).unwrap().inside;
        let mut flips = Vec::new();
        let n = 600;
        for k in 1..=n {
            let y = 0.05 + 5.9 * k as f64 / n as f64;
            let now = st.adjacency(c(-2.0, y)).unwrap().inside;
            if now != prev {
                flips.push(y);
            }
            prev = now;
        }
        assert_eq!(flips.len(), 1);
        // The traced curve crosses Re x = −2 at the crossing point.
        assert!((flips[0] - st.crossings.0.im).abs() < 5.9 / n as f64 + 1e-9);
    }

    #[test]
    fn rotated_structure_builds_but_refuses_regions() {
        let sig = C64::from_polar(1.0, PI / 4.0);
        let p = Params::new(0.05, sig).unwrap();
        let st = StokesStructure::new(&p).unwrap();
        let v = turning_points(&p).virtual_point;
        // Both crossings sit on the line −2/σ² + iσt, symmetric about −2/σ².
        let (u, d) = st.crossings;
        assert!((u + d - 2.0 * v).norm() < 1e-9);
        assert!(((u - v) / (I * sig)).im.abs() < 1e-9);
        assert!(matches!(
            st.classify(st.reference_point()),
            Err(Error::RegionsUnavailable { .. })
        ));
        assert_eq!(st.origin_arcs.len(), 2);
        assert_eq!(st.outer_arcs.len(), 2);
    }

    #[test]
    fn coalescing_crossing_is_reported() {
        let p = Params::new(0.05, C64::from_polar(1.0, PI / 6.0)).unwrap();
        assert!(matches!(
            StokesStructure::new(&p),
            Err(Error::DegenerateStructure { .. })
        ));
    }
}
