//! Steepest-descent contours of `e^{φ(x,z)/ε}` in the z-plane and exact
//! evaluation of the solution
//!
//! `Y(x) = (1/(2πσε)) ∫ e^{φ(x,z)/ε} dz`
//!
//! taken from the upper valley centred at `Re z = −π − 3·arg σ` to the one at
//! `Re z = π − 3·arg σ`. For σ = 1 this is the Schläfli integral of
//! `J_ν(2/ε)/ε` with `ν = (x + 2)/ε`, which decays as `x → +∞`.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::PI;

use gauss_quad::GaussLegendre;

use crate::core::{Branch, BranchState, Params, SaddleId, C64, I};
use crate::error::{Error, Result};
use crate::saddle::{phase, saddle_height, saddle_location};
use crate::transseries::resonance_index;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Half {
    /// Leaves the saddle along `+(−e^{iθ}φ'')^{−1/2}` (principal root).
    Right,
    Left,
}

/// Asymptotic valleys of `Re φ` at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Valley {
    /// `Im z → +∞` near `Re z = π − 3·arg σ + 2πk`.
    Top(i64),
    /// `Im z → −∞` near `Re z = 3·arg σ + 2πk`.
    Bottom(i64),
    /// `|Re z| → ∞` at bounded height; present only when `Im((x + 2/σ²)/σ) ≠ 0`.
    Horizontal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentOptions {
    /// Paths keep `Im(e^{iθ}φ)` constant; θ = 0 is steepest descent.
    pub theta: f64,
    /// Integration stops once `Re φ` is this many multiples of ε below the saddle.
    pub drop: f64,
    pub im_limit: f64,
    /// Passing this close to another saddle is reported as a Stokes-line hit.
    pub near_radius: f64,
    pub max_steps: usize,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            theta: 0.0,
            drop: 40.0,
            im_limit: 30.0,
            near_radius: 1e-6,
            max_steps: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentPath {
    pub saddle: SaddleId,
    pub half: Half,
    pub theta: f64,
    /// From the saddle outward, ending where the integrand is negligible.
    pub points: Vec<C64>,
    pub phase_at_saddle: C64,
    pub valley: Valley,
}

pub fn descent_path(x: C64, id: SaddleId, p: &Params, half: Half) -> Result<DescentPath> {
    descent_path_with(x, id, p, half, &DescentOptions::default())
}

/// Saddles near `z` other than the one at `origin`.
fn nearest_other_saddle(x: C64, z: C64, origin: C64, p: &Params) -> f64 {
    let sc = (z.re / (2.0 * PI)).round() as i64;
    let mut best = f64::INFINITY;
    for s in sc - 1..=sc + 1 {
        for b in [Branch::Plus, Branch::Minus] {
            let zs = saddle_location(x, SaddleId::new(s, b), p, BranchState::PRINCIPAL);
            if (zs - origin).norm() > 1e-9 {
                best = best.min((zs - z).norm());
            }
        }
    }
    best
}

fn classify_end(
    z: C64,
    start: C64,
    x: C64,
    p: &Params,
    v_stop: f64,
    u_stop: f64,
) -> Option<Valley> {
    let a = p.sigma().arg();
    if z.im >= v_stop {
        Some(Valley::Top(
            ((z.re - (PI - 3.0 * a)) / (2.0 * PI)).round() as i64
        ))
    } else if z.im <= -v_stop {
        Some(Valley::Bottom(
            ((z.re - 3.0 * a) / (2.0 * PI)).round() as i64
        ))
    } else if (z.re - start.re).abs() >= u_stop && horizontal_slope(x, p).abs() > 0.0 {
        Some(Valley::Horizontal)
    } else {
        None
    }
}

/// `q = Im((x + 2/σ²)/σ)`; `Re φ ≈ −q·Re z` at bounded height.
pub fn horizontal_slope(x: C64, p: &Params) -> f64 {
    (p.shifted(x) / p.sigma()).im
}

pub fn descent_path_with(
    x: C64,
    id: SaddleId,
    p: &Params,
    half: Half,
    opt: &DescentOptions,
) -> Result<DescentPath> {
    p.check_off_turning_points(x)?;
    let eps = p.epsilon();
    let rot = C64::from_polar(1.0, opt.theta);
    let zs = saddle_location(x, id, p, BranchState::PRINCIPAL);
    let phi_s = saddle_height(x, id, p, BranchState::PRINCIPAL);
    let psi2 = rot * phase(x, zs, p).d2;
    if psi2.norm() < 1e-14 {
        return Err(Error::TurningPoint { x });
    }
    let mut dir = (-psi2).sqrt().inv();
    dir /= dir.norm();
    if half == Half::Left {
        dir = -dir;
    }
    let target = (rot * phi_s).im;
    let correct = |mut z: C64| {
        for _ in 0..3 {
            let f = phase(x, z, p);
            let g = rot * f.d1;
            if g.norm() == 0.0 {
                break;
            }
            z -= I * ((rot * f.value).im - target) / g;
        }
        z
    };

    let sig = p.sigma();
    let big =
        100.0 * sig.norm().powi(3) * (1.0 + p.shifted(x).norm() / sig.norm()) * (40.0 + zs.norm());
    let v_stop = big.ln().max(zs.im.abs() + 3.0);
    let u_stop = 60.0;
    let stop_re = phi_s.re - opt.drop * eps;

    let r0 = (0.02 / psi2.norm().sqrt()).min(0.05);
    let mut z = correct(zs + dir * r0);
    let mut re = phase(x, z, p).value.re;
    let mut points = vec![zs, z];
    let mut integrating = true;
    for _ in 0..opt.max_steps {
        if integrating && (re < stop_re || z.im.abs() > opt.im_limit) {
            integrating = false;
        }
        if !integrating {
            if let Some(valley) = classify_end(z, zs, x, p, v_stop, u_stop) {
                return Ok(DescentPath {
                    saddle: id,
                    half,
                    theta: opt.theta,
                    points,
                    phase_at_saddle: phi_s,
                    valley,
                });
            }
        }
        let f = phase(x, z, p);
        let g = rot * f.d1;
        if g.norm() < 1e-300 {
            return Err(Error::OnStokesCurve { x });
        }
        let mut h = (0.1 * g.norm() / (rot * f.d2).norm().max(1e-300)).clamp(1e-4, 0.5);
        let mut accepted = None;
        for _ in 0..20 {
            let v1 = -g.conj() / g.norm();
            let gm = rot * phase(x, z + 0.5 * h * v1, p).d1;
            let zn = correct(z + h * (-gm.conj() / gm.norm()));
            let rn = phase(x, zn, p).value.re;
            if rn < re && (zn - z).norm() < 2.0 * h {
                accepted = Some((zn, rn));
                break;
            }
            h *= 0.5;
        }
        let Some((zn, rn)) = accepted else {
            return Err(Error::NoConvergence {
                what: "descent step",
                last: z,
            });
        };
        if nearest_other_saddle(x, zn, zs, p) < opt.near_radius {
            return Err(Error::OnStokesCurve { x });
        }
        z = zn;
        re = rn;
        if integrating {
            points.push(z);
        }
    }
    Err(Error::NoConvergence {
        what: "descent path",
        last: z,
    })
}

/// Integral of `e^{(φ(z) − φ_ref)/ε}` along a polyline, with an error estimate.
fn polyline_integral(x: C64, points: &[C64], phi_ref: C64, p: &Params) -> Result<(C64, f64)> {
    let g8 = GaussLegendre::new(8).expect("degree ≥ 2");
    let g16 = GaussLegendre::new(16).expect("degree ≥ 2");
    let eps = p.epsilon();
    let f = |z: C64| ((phase(x, z, p).value - phi_ref) / eps).exp();
    let rule = |g: &GaussLegendre, a: C64, b: C64| -> C64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        g.as_node_weight_pairs()
            .iter()
            .map(|&(t, w)| w * f(mid + half * t))
            .sum::<C64>()
            * half
    };
    let mut total = C64::new(0.0, 0.0);
    let mut err = 0.0;
    for seg in points.windows(2) {
        let mut stack = vec![(seg[0], seg[1], 0u32)];
        while let Some((a, b, depth)) = stack.pop() {
            let lo = rule(&g8, a, b);
            let hi = rule(&g16, a, b);
            let diff = (hi - lo).norm();
            let tol = 1e-13 * (b - a).norm().max(1e-3);
            if diff <= tol {
                total += hi;
                err += diff;
            } else if depth >= 30 {
                return Err(Error::Quadrature { estimate: diff });
            } else {
                let m = 0.5 * (a + b);
                stack.push((a, m, depth + 1));
                stack.push((m, b, depth + 1));
            }
        }
    }
    Ok((total, err))
}

/// `e^{φ_s/ε}·mantissa`, kept apart so large exponents do not overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledValue {
    pub log_scale: C64,
    pub mantissa: C64,
}

impl ScaledValue {
    pub fn value(&self) -> C64 {
        self.mantissa * self.log_scale.exp()
    }
}

pub fn path_integral_scaled(path: &DescentPath, x: C64, p: &Params) -> Result<ScaledValue> {
    let (v, err) = polyline_integral(x, &path.points, path.phase_at_saddle, p)?;
    if err > 1e-10 * v.norm() {
        return Err(Error::Quadrature {
            estimate: err / v.norm(),
        });
    }
    let norm = 1.0 / (2.0 * PI * p.sigma() * p.epsilon());
    Ok(ScaledValue {
        log_scale: path.phase_at_saddle / p.epsilon(),
        mantissa: v * norm,
    })
}

/// `(1/(2πσε)) ∫ e^{φ/ε} dz` from the saddle out along one half.
pub fn path_integral(path: &DescentPath, x: C64, p: &Params) -> Result<C64> {
    Ok(path_integral_scaled(path, x, p)?.value())
}

/// Integral through the saddle from the Left valley to the Right valley.
pub fn saddle_integral(x: C64, id: SaddleId, p: &Params) -> Result<C64> {
    saddle_integral_with(x, id, p, &DescentOptions::default())
}

pub fn saddle_integral_with(x: C64, id: SaddleId, p: &Params, opt: &DescentOptions) -> Result<C64> {
    let right = descent_path_with(x, id, p, Half::Right, opt)?;
    let left = descent_path_with(x, id, p, Half::Left, opt)?;
    Ok(path_integral(&right, x, p)? - path_integral(&left, x, p)?)
}

/// Which route `exact_eval` took.
#[derive(Debug, Clone, PartialEq)]
pub enum Evaluation {
    /// Periodic integrand: one period along `Im z = height`.
    Periodic { height: f64, nodes: usize },
    /// Oriented saddle crossings joining the two upper valleys.
    Saddles {
        theta: f64,
        route: Vec<(SaddleId, Valley, Valley)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactValue {
    pub value: C64,
    pub method: Evaluation,
}

pub fn exact_eval(x: C64, p: &Params) -> Result<C64> {
    Ok(exact_eval_detailed(x, p)?.value)
}

pub fn exact_eval_detailed(x: C64, p: &Params) -> Result<ExactValue> {
    p.check_off_turning_points(x)?;
    if resonance_index(x, p).is_some() {
        return periodic_eval(x, p);
    }
    let q = horizontal_slope(x, p);
    if q.abs() <= 1e-9 * (1.0 + p.shifted(x).norm() / p.sigma().norm()) {
        return Err(Error::FormalSum { x });
    }
    let mut last = Error::NoConvergence {
        what: "valley route",
        last: x,
    };
    for theta in [0.0, 0.1, -0.1, 0.2, -0.2] {
        match saddle_route_eval(x, p, theta) {
            Ok(v) => return Ok(v),
            Err(e) => last = e,
        }
    }
    Err(last)
}

fn saddle_route_eval(x: C64, p: &Params, theta: f64) -> Result<ExactValue> {
    let opt = DescentOptions {
        theta,
        near_radius: 1e-3,
        ..DescentOptions::default()
    };
    let start = Valley::Top(-1);
    let goal = Valley::Top(0);
    let mut edges: Vec<(SaddleId, DescentPath, DescentPath)> = Vec::new();
    for s_max in [3i64, 6] {
        edges.clear();
        for s in -s_max..=s_max {
            for b in [Branch::Plus, Branch::Minus] {
                let id = SaddleId::new(s, b);
                let r = descent_path_with(x, id, p, Half::Right, &opt)?;
                let l = descent_path_with(x, id, p, Half::Left, &opt)?;
                if r.valley != l.valley {
                    edges.push((id, l, r));
                }
            }
        }
        if let Some(route) = route(&edges, start, goal) {
            let mut value = C64::new(0.0, 0.0);
            let mut summary = Vec::new();
            for (k, forward) in route {
                let (id, l, r) = &edges[k];
                let v = path_integral(r, x, p)? - path_integral(l, x, p)?;
                if forward {
                    value += v;
                    summary.push((*id, l.valley, r.valley));
                } else {
                    value -= v;
                    summary.push((*id, r.valley, l.valley));
                }
            }
            return Ok(ExactValue {
                value,
                method: Evaluation::Saddles {
                    theta,
                    route: summary,
                },
            });
        }
    }
    Err(Error::NoConvergence {
        what: "valley route",
        last: x,
    })
}

/// Breadth-first route through the valley graph; `true` means Left → Right.
fn route(
    edges: &[(SaddleId, DescentPath, DescentPath)],
    start: Valley,
    goal: Valley,
) -> Option<Vec<(usize, bool)>> {
    let mut prev: HashMap<Valley, (Valley, usize, bool)> = HashMap::new();
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        if v == goal {
            let mut out = Vec::new();
            let mut cur = goal;
            while cur != start {
                let (from, k, fwd) = prev[&cur];
                out.push((k, fwd));
                cur = from;
            }
            out.reverse();
            return Some(out);
        }
        for (k, (_, l, r)) in edges.iter().enumerate() {
            for (a, b, fwd) in [(l.valley, r.valley, true), (r.valley, l.valley, false)] {
                if a == v && b != start && !prev.contains_key(&b) {
                    prev.insert(b, (v, k, fwd));
                    queue.push_back(b);
                }
            }
        }
    }
    None
}

/// On a resonant lattice `e^{φ/ε}` is 2π-periodic in z, so the two vertical
/// legs cancel and one period along a horizontal line remains. The line
/// height is chosen to keep `max Re φ` on it as low as possible.
fn periodic_eval(x: C64, p: &Params) -> Result<ExactValue> {
    let eps = p.epsilon();
    let u0 = -PI - 3.0 * p.sigma().arg();
    let probe = 256;
    let line_max = |v: f64| {
        (0..probe)
            .map(|k| {
                phase(x, C64::new(u0 + 2.0 * PI * k as f64 / probe as f64, v), p)
                    .value
                    .re
            })
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut height = 0.0;
    let mut best = line_max(0.0);
    for k in -160..=160 {
        let v = k as f64 * 0.05;
        let m = line_max(v);
        if m < best {
            best = m;
            height = v;
        }
    }
    let trapezoid = |n: usize| -> C64 {
        let sum: C64 = (0..n)
            .map(|k| {
                ((phase(x, C64::new(u0 + 2.0 * PI * k as f64 / n as f64, height), p).value - best)
                    / eps)
                    .exp()
            })
            .sum();
        sum * (2.0 * PI / n as f64)
    };
    let mut n = 64;
    let mut prev = trapezoid(n);
    while n < 1 << 18 {
        n *= 2;
        let next = trapezoid(n);
        if (next - prev).norm() <= 1e-13 * next.norm() {
            let value = next * (best / eps).exp() / (2.0 * PI * p.sigma() * eps);
            return Ok(ExactValue {
                value,
                method: Evaluation::Periodic { height, nodes: n },
            });
        }
        prev = next;
    }
    Err(Error::Quadrature {
        estimate: (trapezoid(n) - prev).norm(),
    })
}

/// Rows `(s, branch, z, φ)` for the path CSV.
pub fn path_rows(path: &DescentPath, x: C64, p: &Params) -> Vec<(i64, char, C64, C64)> {
    path.points
        .iter()
        .map(|&z| {
            (
                path.saddle.s,
                path.saddle.branch.symbol(),
                z,
                phase(x, z, p).value,
            )
        })
        .collect()
}
