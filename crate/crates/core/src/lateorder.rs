//! Saddle-point series coefficients, their factorial-over-power growth,
//! optimal truncation and the smoothed Stokes multiplier.

use std::f64::consts::PI;

use statrs::function::erf::erf;
use statrs::function::gamma::ln_gamma;

use crate::core::{BranchState, Params, SaddleId, C64, I};
use crate::descent::exact_eval;
use crate::error::{Error, Result};
use crate::saddle::{exponent_s, prefactor_a0, saddle_height, saddle_location};
use crate::stokes::{CurvePair, CurveSpec, Labels};

/// Largest order produced reliably by the double-precision series kernel.
pub const STABLE_KMAX: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCoefficients {
    pub base_x: C64,
    pub saddle: SaddleId,
    pub epsilon: f64,
    /// `A_0..A_kmax`, scaled so that `A_0 = prefactor_a0(x)`.
    pub coeffs: Vec<C64>,
    /// `coeffs·orientation` is the series of the integral through the saddle
    /// along `+(−φ'')^{−1/2}` (the `Right` half direction of the descent module).
    pub orientation: C64,
    /// False when the request exceeded `STABLE_KMAX` and was cut there.
    pub stable: bool,
}

impl SeriesCoefficients {
    pub fn kmax(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn oriented(&self) -> Vec<C64> {
        self.coeffs.iter().map(|a| a * self.orientation).collect()
    }

    /// `Σ_{k<K} A_k ε^k`.
    pub fn partial_sum(&self, k_terms: usize, oriented: bool) -> C64 {
        let f = if oriented {
            self.orientation
        } else {
            C64::new(1.0, 0.0)
        };
        let mut pow = 1.0;
        let mut sum = C64::new(0.0, 0.0);
        for a in self.coeffs.iter().take(k_terms) {
            sum += a * pow;
            pow *= self.epsilon;
        }
        sum * f
    }
}

// Truncated power series on `n` coefficients.

fn series_mul(a: &[C64], b: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (i, ai) in a.iter().enumerate().take(n) {
        for (j, bj) in b.iter().enumerate().take(n - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

fn series_derivative(a: &[C64]) -> Vec<C64> {
    let mut d: Vec<C64> = a
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, v)| v * i as f64)
        .collect();
    d.push(C64::new(0.0, 0.0));
    d
}

/// `log(1 + q)` for `q(0) = 0`.
fn series_log1p(q: &[C64]) -> Vec<C64> {
    let n = q.len();
    let mut inv = vec![C64::new(0.0, 0.0); n];
    inv[0] = C64::new(1.0, 0.0);
    for m in 1..n {
        inv[m] = -(1..=m).map(|j| q[j] * inv[m - j]).sum::<C64>();
    }
    let dl = series_mul(&series_derivative(q), &inv, n);
    let mut out = vec![C64::new(0.0, 0.0); n];
    for m in 1..n {
        out[m] = dl[m - 1] / m as f64;
    }
    out
}

/// `exp(s)` for `s(0) = 0`.
fn series_exp(s: &[C64]) -> Vec<C64> {
    let n = s.len();
    let ds = series_derivative(s);
    let mut e = vec![C64::new(0.0, 0.0); n];
    e[0] = C64::new(1.0, 0.0);
    for m in 1..n {
        e[m] = (0..m).map(|j| ds[j] * e[m - 1 - j]).sum::<C64>() / m as f64;
    }
    e
}

fn double_factorial_odd(k: usize) -> f64 {
    // (2k−1)!!, with (−1)!! = 1.
    (1..=k).map(|j| (2 * j - 1) as f64).product()
}

/// Gaussian-moment coefficients `c_k = (2k−1)!!·[t^{2k}] h(t)^{−(2k+1)/2}` of
/// `∫ e^{−h(t)t²/(2ε)} dt = √(2πε)·Σ c_k ε^k`, principal root of `h(0)`.
pub fn laplace_coefficients(h: &[C64], kmax: usize) -> Vec<C64> {
    let n = 2 * kmax + 1;
    let mut hs = h.to_vec();
    hs.resize(n, C64::new(0.0, 0.0));
    let h0 = hs[0];
    let mut q: Vec<C64> = hs.iter().map(|v| v / h0).collect();
    q[0] = C64::new(0.0, 0.0);
    let log = series_log1p(&q);
    (0..=kmax)
        .map(|k| {
            let alpha = (2 * k + 1) as f64 / 2.0;
            let s: Vec<C64> = log.iter().take(2 * k + 1).map(|v| -alpha * v).collect();
            let e = series_exp(&s);
            e[2 * k] * h0.powf(-alpha) * double_factorial_odd(k)
        })
        .collect()
}

/// Taylor coefficients of `h(t) = −2(φ(z_s + t) − φ_s)/t²`.
fn phase_h_series(zs: C64, p: &Params, n: usize) -> Vec<C64> {
    let sig = p.sigma();
    let c = 2.0 * I / (sig * sig * sig);
    let (s0, c0) = (zs.sin(), zs.cos());
    // φ − φ_s = C[s0(1 − cos t) + c0(t − sin t)].
    let mut fact = vec![1.0f64; n + 4];
    for i in 1..fact.len() {
        fact[i] = fact[i - 1] * i as f64;
    }
    (0..n)
        .map(|m| {
            if m % 2 == 0 {
                let j = m / 2 + 1;
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                -2.0 * c * s0 * sign / fact[2 * j]
            } else {
                let j = (m + 1) / 2;
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                -2.0 * c * c0 * sign / fact[2 * j + 1]
            }
        })
        .collect()
}

pub fn series_coeffs(x: C64, id: SaddleId, kmax: usize, p: &Params) -> Result<SeriesCoefficients> {
    let a0 = prefactor_a0(x, p)?;
    let stable = kmax <= STABLE_KMAX;
    let kmax = kmax.min(STABLE_KMAX);
    let zs = saddle_location(x, id, p, BranchState::PRINCIPAL);
    let h = phase_h_series(zs, p, 2 * kmax + 1);
    let norm = 1.0 / (p.sigma() * (2.0 * PI * p.epsilon()).sqrt());
    let raw: Vec<C64> = laplace_coefficients(&h, kmax)
        .into_iter()
        .map(|c| c * norm)
        .collect();
    let orientation = raw[0] / a0;
    let coeffs = raw.iter().map(|c| c / orientation).collect();
    Ok(SeriesCoefficients {
        base_x: x,
        saddle: id,
        epsilon: p.epsilon(),
        coeffs,
        orientation,
        stable,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LateOrderFit {
    pub chi_est: C64,
    pub gamma_est: f64,
    pub prefactor_est: C64,
    /// Second singulant of comparable modulus, when two compete.
    pub secondary: Option<C64>,
    /// Relative spread of the last estimates; a convergence indicator.
    pub spread: f64,
}

/// Richardson extrapolation of `s_k ≈ s + c_1/k + … + c_N/k^N` from `s_{k0..k0+N}`.
fn richardson(seq: &[(f64, C64)], order: usize) -> C64 {
    let tail = &seq[seq.len() - order - 1..];
    let mut out = C64::new(0.0, 0.0);
    for (j, &(k, s)) in tail.iter().enumerate() {
        let mut w = k.powi(order as i32);
        for (i, &(ki, _)) in tail.iter().enumerate() {
            if i != j {
                w /= k - ki;
            }
        }
        out += s * w;
    }
    out
}

pub fn fit_lateorder(c: &SeriesCoefficients) -> Result<LateOrderFit> {
    fit_lateorder_slice(&c.coeffs)
}

/// Fit `A_k ≈ B·Γ(k+γ)/χ^{k+γ}` to the tail of a coefficient list.
pub fn fit_lateorder_slice(a: &[C64]) -> Result<LateOrderFit> {
    let n = a.len();
    if n < 16 {
        return Err(Error::InvalidParams(format!(
            "late-order fit needs at least 16 coefficients, got {n}"
        )));
    }
    if a.iter().skip(1).any(|v| v.norm() == 0.0 || !v.is_finite()) {
        return Err(Error::NoFactorialGrowth);
    }
    let r: Vec<C64> = (0..n - 1).map(|k| a[k + 1] / a[k]).collect();
    if factorial_exponent(a) < 0.5 {
        return Err(Error::NoFactorialGrowth);
    }
    // χ_k = 1/(r_{k+1} − r_k) is free of γ at leading order.
    let chi_seq: Vec<(f64, C64)> = (n / 2..n - 2)
        .map(|k| (k as f64, 1.0 / (r[k + 1] - r[k])))
        .collect();
    let order = 3;
    let est: Vec<C64> = (order + 1..=chi_seq.len())
        .map(|m| richardson(&chi_seq[..m], order))
        .collect();
    let chi = *est.last().unwrap();
    let spread = est[est.len() - 4..]
        .iter()
        .map(|e| (e - chi).norm())
        .fold(0.0, f64::max)
        / chi.norm();
    if spread < 1e-3 {
        let gamma_seq: Vec<(f64, C64)> = (n / 2..n - 1)
            .map(|k| (k as f64, chi * r[k] - k as f64))
            .collect();
        let gamma = richardson(&gamma_seq, order).re;
        let k = n - 1;
        let b = prefactor_from(a[k], chi, gamma, k);
        return Ok(LateOrderFit {
            chi_est: chi,
            gamma_est: gamma,
            prefactor_est: b,
            secondary: None,
            spread,
        });
    }
    prony_fit(a)
}

/// Least-squares `α` in `ln|A_k| ≈ α·lnΓ(k) + βk + c` over the upper half;
/// near 1 for factorial-over-power growth, near −1 for entire functions.
fn factorial_exponent(a: &[C64]) -> f64 {
    let n = a.len();
    let rows: Vec<([f64; 3], f64)> = (n / 2..n)
        .map(|k| ([ln_gamma(k as f64), k as f64, 1.0], a[k].norm().ln()))
        .collect();
    let mut m = [[0.0; 4]; 3];
    for (r, y) in &rows {
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += r[i] * r[j];
            }
            m[i][3] += r[i] * y;
        }
    }
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, piv);
        for r in 0..3 {
            if r != col && m[col][col] != 0.0 {
                let f = m[r][col] / m[col][col];
                for k in col..4 {
                    m[r][k] -= f * m[col][k];
                }
            }
        }
    }
    m[0][3] / m[0][0]
}

fn prefactor_from(ak: C64, chi: C64, gamma: f64, k: usize) -> C64 {
    let kg = k as f64 + gamma;
    ak * (chi.ln() * kg - ln_gamma(kg)).exp()
}

/// Two competing singulants: `A_k/Γ(k+γ) ≈ B_1χ_1^{−k} + B_2χ_2^{−k}`, fitted
/// by a two-term linear recurrence, with γ chosen to minimise its residual.
fn prony_fit(a: &[C64]) -> Result<LateOrderFit> {
    let n = a.len();
    let lo = n.saturating_sub(16).max(2);
    let solve = |gamma: f64| -> Option<(C64, C64, f64, Vec<C64>)> {
        let u: Vec<C64> = (lo..n)
            .map(|k| a[k] * (-ln_gamma(k as f64 + gamma)).exp())
            .collect();
        // u_{k+2} = α u_{k+1} + β u_k in least squares (2×2 normal equations).
        let (mut m11, mut m12, mut m22) = (0.0, C64::new(0.0, 0.0), 0.0);
        let (mut r1, mut r2) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        let scale = |k: usize| 1.0 / u[k + 2].norm();
        for k in 0..u.len() - 2 {
            let w = scale(k);
            let (p1, p0, t) = (u[k + 1] * w, u[k] * w, u[k + 2] * w);
            m11 += p1.norm_sqr();
            m12 += p1.conj() * p0;
            m22 += p0.norm_sqr();
            r1 += p1.conj() * t;
            r2 += p0.conj() * t;
        }
        let det = m11 * m22 - m12.norm_sqr();
        if det.abs() < 1e-300 {
            return None;
        }
        let alpha = (r1 * m22 - m12 * r2) / det;
        let beta = (m11 * r2 - m12.conj() * r1) / det;
        let mut res = 0.0;
        for k in 0..u.len() - 2 {
            res += ((u[k + 2] - alpha * u[k + 1] - beta * u[k]) * scale(k)).norm_sqr();
        }
        // λ² − αλ − β = 0 with λ = 1/χ.
        let disc = (alpha * alpha + 4.0 * beta).sqrt();
        let l1 = (alpha + disc) / 2.0;
        let l2 = (alpha - disc) / 2.0;
        Some((l1, l2, res, u))
    };
    let mut best: Option<(f64, f64)> = None;
    for i in -100..=100 {
        let g = i as f64 * 0.01;
        if let Some((_, _, res, _)) = solve(g) {
            if best.map_or(true, |(_, r)| res < r) {
                best = Some((g, res));
            }
        }
    }
    let (gamma, _) = best.ok_or(Error::NoFactorialGrowth)?;
    let (l1, l2, _, u) = solve(gamma).ok_or(Error::NoFactorialGrowth)?;
    let (c1, c2) = (1.0 / l1, 1.0 / l2);
    if !c1.is_finite() || !c2.is_finite() {
        return Err(Error::NoFactorialGrowth);
    }
    let (near, far) = if c1.norm() <= c2.norm() {
        (c1, c2)
    } else {
        (c2, c1)
    };
    // Amplitudes from the last two samples.
    let k1 = n - 2;
    let (ua, ub) = (u[k1 - lo], u[k1 + 1 - lo]);
    let (la, lb) = (1.0 / near, 1.0 / far);
    // u_k = b1·la^k + b2·lb^k solved at k1, k1+1 in scaled form.
    let b1 = (ub - lb * ua) / (la - lb);
    let b1 = b1 * (near.ln() * k1 as f64).exp() * (near.ln() * gamma).exp();
    Ok(LateOrderFit {
        chi_est: near,
        gamma_est: gamma,
        prefactor_est: b1,
        secondary: Some(far),
        spread: f64::NAN,
    })
}

/// `K = |χ|/ε + ω` with `ω ∈ [0, 1)` making K an integer, and `K ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPoint {
    pub k: usize,
    pub omega: f64,
}

pub fn optimal_truncation(chi: C64, p: &Params) -> TruncationPoint {
    let v = chi.norm() / p.epsilon();
    let near = v.round();
    let k = if (v - near).abs() <= 1e-9 * v.max(1.0) {
        near
    } else {
        v.ceil()
    };
    if k < 1.0 {
        return TruncationPoint {
            k: 1,
            omega: 1.0 - v,
        };
    }
    TruncationPoint {
        k: k as usize,
        omega: (k - v).max(0.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplierSample {
    pub offset: f64,
    pub x: C64,
    pub chi: C64,
    pub arg_chi: f64,
    /// `√(|χ|/ε)·Arg χ`.
    pub xi: f64,
    pub truncation: usize,
    pub multiplier: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierProfile {
    pub base: C64,
    pub chi_base: C64,
    pub dominant: SaddleId,
    pub samples: Vec<MultiplierSample>,
    /// Width of the transition in `Arg χ`.
    pub fitted_width: f64,
    /// Width in the scaled variable `ξ`; the standard form has width 1.
    pub fitted_width_scaled: f64,
    pub fitted_center: f64,
    pub fitted_jump: C64,
    pub fitted_offset: C64,
    /// RMS deviation from the fitted erf model.
    pub fit_residual: f64,
}

impl MultiplierProfile {
    pub fn model(&self, xi: f64) -> C64 {
        self.fitted_offset
            + self.fitted_jump
                * 0.5
                * (1.0 + erf((xi - self.fitted_center) / self.fitted_width_scaled))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplierOptions {
    /// The scan crosses the curve where `|χ|` is closest to this value, which
    /// keeps the optimal truncation order inside `STABLE_KMAX` for ε ≥ 0.035.
    pub base_singulant: f64,
    pub kmax: usize,
    /// Truncate every scan point at the base point's optimal order instead
    /// of its own; the measured multiplier is then continuous in the offset.
    pub fixed_order: bool,
}

impl Default for MultiplierOptions {
    fn default() -> Self {
        Self {
            base_singulant: 1.15,
            kmax: STABLE_KMAX,
            fixed_order: false,
        }
    }
}

pub fn multiplier_profile(
    curve: &CurveSpec,
    offsets: &[f64],
    p: &Params,
) -> Result<MultiplierProfile> {
    multiplier_profile_with(curve, offsets, p, &MultiplierOptions::default())
}

pub fn multiplier_profile_with(
    curve: &CurveSpec,
    offsets: &[f64],
    p: &Params,
    opt: &MultiplierOptions,
) -> Result<MultiplierProfile> {
    let Labels::Pair(pair) = curve.labels else {
        return Err(Error::Scan(
            "multiplier scans need a Stokes curve between two saddles".into(),
        ));
    };
    if curve.points.len() < 3 {
        return Err(Error::Scan("curve has too few points".into()));
    }
    let st = BranchState::PRINCIPAL;
    let chi_of =
        |x: C64| saddle_height(x, pair.first, p, st) - saddle_height(x, pair.second, p, st);
    let k = (1..curve.points.len() - 1)
        .filter(|&i| curve.active_mask.get(i).copied().unwrap_or(true))
        .min_by(|&i, &j| {
            let di = (chi_of(curve.points[i]).norm() - opt.base_singulant).abs();
            let dj = (chi_of(curve.points[j]).norm() - opt.base_singulant).abs();
            di.total_cmp(&dj)
        })
        .ok_or_else(|| Error::Scan("no active point on curve".into()))?;
    let base = curve.points[k];
    let tangent = curve.points[k + 1] - curve.points[k - 1];
    let normal = I * tangent / tangent.norm();
    let (dominant, subdominant) = if chi_of(base).re >= 0.0 {
        (pair.first, pair.second)
    } else {
        (pair.second, pair.first)
    };
    let chi_dir = |x: C64| saddle_height(x, dominant, p, st) - saddle_height(x, subdominant, p, st);
    let eps = p.epsilon();
    // The scan segment must stay clear of both turning points, where the series is meaningless.
    let lo = offsets.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = offsets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let clearance = 0.1 / p.sigma().norm_sqr();
    for tp in p.turning_points() {
        let t = ((tp - base) * normal.conj()).re.clamp(lo, hi);
        if (base + normal * t - tp).norm() < clearance {
            return Err(Error::TurningPoint { x: tp });
        }
    }

    let mut samples = Vec::with_capacity(offsets.len());
    for &off in offsets {
        let x = base + normal * off;
        if p.near_turning_point(x, 1e-3) {
            return Err(Error::TurningPoint { x });
        }
        let chi = chi_dir(x);
        let tp = if opt.fixed_order {
            optimal_truncation(chi_dir(base), p)
        } else {
            optimal_truncation(chi, p)
        };
        let series = series_coeffs(x, dominant, opt.kmax, p)?;
        if tp.k > series.kmax() {
            return Err(Error::Scan(format!(
                "optimal truncation order {} exceeds the stable range",
                tp.k
            )));
        }
        let fit = fit_lateorder(&series)?;
        let b = fit.prefactor_est * series.orientation;
        let y = exact_eval(x, p)?;
        let h_dom = saddle_height(x, dominant, p, st);
        let h_sub = saddle_height(x, subdominant, p, st);
        let dom = series.partial_sum(tp.k, true) * (h_dom / eps).exp();
        // The route may cross the dominant saddle either way.
        let sign = if (y / dom).re >= 0.0 { 1.0 } else { -1.0 };
        let m = (y - sign * dom) / (sign * b * (h_sub / eps).exp());
        let arg = chi.arg();
        samples.push(MultiplierSample {
            offset: off,
            x,
            chi,
            arg_chi: arg,
            xi: (chi.norm() / eps).sqrt() * arg,
            truncation: tp.k,
            multiplier: m,
        });
    }
    let (center, width, offset, jump, rms) = fit_erf(&samples)?;
    let chi_base = chi_dir(base);
    Ok(MultiplierProfile {
        base,
        chi_base,
        dominant,
        fitted_width: width * (eps / chi_base.norm()).sqrt(),
        fitted_width_scaled: width,
        fitted_center: center,
        fitted_jump: jump,
        fitted_offset: offset,
        fit_residual: rms,
        samples,
    })
}

/// For fixed centre and width the model `C + J·(1 + erf)/2` is linear in
/// `(C, J)`; the two shape parameters are found by Nelder–Mead.
fn fit_erf(samples: &[MultiplierSample]) -> Result<(f64, f64, C64, C64, f64)> {
    if samples.len() < 5 {
        return Err(Error::Scan("need at least five scan points".into()));
    }
    let linear = |c: f64, w: f64| -> (C64, C64, f64) {
        let n = samples.len() as f64;
        let g: Vec<f64> = samples
            .iter()
            .map(|s| 0.5 * (1.0 + erf((s.xi - c) / w)))
            .collect();
        let (sg, sgg) = (g.iter().sum::<f64>(), g.iter().map(|v| v * v).sum::<f64>());
        let sm: C64 = samples.iter().map(|s| s.multiplier).sum();
        let smg: C64 = samples.iter().zip(&g).map(|(s, v)| s.multiplier * v).sum();
        let det = n * sgg - sg * sg;
        if det.abs() < 1e-14 {
            return (sm / n, C64::new(0.0, 0.0), f64::INFINITY);
        }
        let jump = (n * smg - sg * sm) / det;
        let off = (sm - jump * sg) / n;
        let rss: f64 = samples
            .iter()
            .zip(&g)
            .map(|(s, v)| (s.multiplier - off - jump * v).norm_sqr())
            .sum();
        (off, jump, (rss / n).sqrt())
    };
    let cost = |v: [f64; 2]| {
        if v[1] <= 1e-3 {
            f64::INFINITY
        } else {
            linear(v[0], v[1]).2
        }
    };
    let best = nelder_mead(cost, [0.0, 1.0], 0.3, 400);
    let (off, jump, rms) = linear(best[0], best[1]);
    Ok((best[0], best[1], off, jump, rms))
}

fn nelder_mead(f: impl Fn([f64; 2]) -> f64, start: [f64; 2], step: f64, iters: usize) -> [f64; 2] {
    let mut simplex = [
        start,
        [start[0] + step, start[1]],
        [start[0], start[1] + step],
    ];
    let mut vals = simplex.map(&f);
    for _ in 0..iters {
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let (b, m, w) = (idx[0], idx[1], idx[2]);
        let centroid = [
            (simplex[b][0] + simplex[m][0]) / 2.0,
            (simplex[b][1] + simplex[m][1]) / 2.0,
        ];
        let at = |t: f64| {
            [
                centroid[0] + t * (simplex[w][0] - centroid[0]),
                centroid[1] + t * (simplex[w][1] - centroid[1]),
            ]
        };
        let r = at(-1.0);
        let fr = f(r);
        if fr < vals[b] {
            let e = at(-2.0);
            let fe = f(e);
            if fe < fr {
                simplex[w] = e;
                vals[w] = fe;
            } else {
                simplex[w] = r;
                vals[w] = fr;
            }
        } else if fr < vals[m] {
            simplex[w] = r;
            vals[w] = fr;
        } else {
            let c = at(0.5);
            let fc = f(c);
            if fc < vals[w] {
                simplex[w] = c;
                vals[w] = fc;
            } else {
                for i in [m, w] {
                    simplex[i] = [
                        (simplex[i][0] + simplex[b][0]) / 2.0,
                        (simplex[i][1] + simplex[b][1]) / 2.0,
                    ];
                    vals[i] = f(simplex[i]);
                }
            }
        }
        let spread = vals.iter().fold(0.0f64, |a, v| a.max((v - vals[b]).abs()));
        if spread < 1e-15 {
            break;
        }
    }
    let i = (0..3).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    simplex[i]
}

/// Finite-difference residuals of the exponent, prefactor and singulant
/// equations for `id` and the other member of `pair`.
pub fn ode_residuals(x: C64, id: SaddleId, pair: CurvePair, p: &Params) -> Result<(f64, f64, f64)> {
    let other = if pair.first == id {
        pair.second
    } else if pair.second == id {
        pair.first
    } else {
        return Err(Error::InvalidParams(format!(
            "{id} is not a member of the pair"
        )));
    };
    p.check_off_turning_points(x)?;
    let sig = p.sigma();
    let st = BranchState::PRINCIPAL;
    let h = 1e-4 * (1.0 + x.norm());
    if p.near_turning_point(x, 10.0 * h) {
        return Err(Error::TurningPoint { x });
    }
    let s = |x: C64| exponent_s(x, id, p, st);
    let chi = |x: C64| saddle_height(x, id, p, st) - saddle_height(x, other, p, st);
    let a = |x: C64| prefactor_a0(x, p);
    let d1 = |f: &dyn Fn(C64) -> C64| (f(x + h) - f(x - h)) / (2.0 * h);
    let s1 = d1(&s);
    let s2 = (s(x + h) - 2.0 * s(x) + s(x - h)) / (h * h);
    let a0 = a(x)?;
    let a1 = (a(x + h)? - a(x - h)?) / (2.0 * h);
    let exponent = (2.0 / (sig * sig) * ((sig * s1).cosh() - 1.0) - x).norm();
    let prefactor =
        ((sig * s1).sinh() * a1 + sig / 2.0 * (sig * s1).cosh() * s2 * a0).norm() / a0.norm();
    // S + χ is the exponent of the other saddle.
    let chi1 = d1(&chi);
    let singulant = ((sig * (s1 + chi1)).cosh() - 1.0 - sig * sig * x / 2.0).norm();
    Ok((exponent, prefactor, singulant))
}

/// `dχ/dx = (i/σ)(z_first − z_second)`.
pub fn singulant_derivative(x: C64, pair: CurvePair, p: &Params) -> C64 {
    let st = BranchState::PRINCIPAL;
    I / p.sigma() * (saddle_location(x, pair.first, p, st) - saddle_location(x, pair.second, p, st))
}
