//! The discrete equation on a finite lattice `x_m = x₀ + mσε`, solved as a
//! pinned Dirichlet problem with zero end values.

use crate::core::{Params, C64};
use crate::error::{Error, Result};
use crate::stokes::StokesStructure;
use crate::transseries::{evaluate_resonant_in, resonance_index};

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSolution {
    pub x0: C64,
    pub step: C64,
    pub first_index: i64,
    pub last_index: i64,
    pub values: Vec<C64>,
}

impl LatticeSolution {
    pub fn x(&self, m: i64) -> C64 {
        self.x0 + self.step * m as f64
    }

    pub fn get(&self, m: i64) -> Option<C64> {
        if m < self.first_index || m > self.last_index {
            None
        } else {
            Some(self.values[(m - self.first_index) as usize])
        }
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<i64> {
        self.first_index..=self.last_index
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest residual of the discrete equation over interior points, skipping `skip`.
    pub fn max_residual(&self, p: &Params, skip: Option<i64>) -> f64 {
        let s2 = p.sigma() * p.sigma();
        let mut worst: f64 = 0.0;
        for m in self.first_index + 1..self.last_index {
            if Some(m) == skip {
                continue;
            }
            let (a, b, c) = (
                self.get(m - 1).unwrap(),
                self.get(m).unwrap(),
                self.get(m + 1).unwrap(),
            );
            let r = (c - 2.0 * b + a) / s2 - self.x(m) * b;
            worst = worst.max(r.norm());
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    pub x0: C64,
    pub step: C64,
    pub m_lo: i64,
    pub m_hi: i64,
    pub sub: Vec<C64>,
    pub diag: Vec<C64>,
    pub sup: Vec<C64>,
}

impl TridiagonalSystem {
    pub fn size(&self) -> usize {
        (self.m_hi - self.m_lo + 1) as usize
    }

    fn idx(&self, m: i64) -> usize {
        (m - self.m_lo) as usize
    }
}

pub fn assemble(x0: C64, p: &Params, m_lo: i64, m_hi: i64) -> Result<TridiagonalSystem> {
    if m_hi <= m_lo + 2 {
        return Err(Error::LatticeTooSmall { min: 3 });
    }
    let s2 = p.sigma() * p.sigma();
    let off = 1.0 / s2;
    let n = (m_hi - m_lo + 1) as usize;
    let diag = (m_lo..=m_hi)
        .map(|m| -2.0 / s2 - (x0 + p.step() * m as f64))
        .collect();
    Ok(TridiagonalSystem {
        x0,
        step: p.step(),
        m_lo,
        m_hi,
        sub: vec![off; n],
        diag,
        sup: vec![off; n],
    })
}

/// Thomas algorithm for rows `lo..=hi` of `sys` with known values outside.
fn thomas(sys: &TridiagonalSystem, lo: i64, hi: i64, left: C64, right: C64) -> Result<Vec<C64>> {
    let n = (hi - lo + 1).max(0) as usize;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![C64::new(0.0, 0.0); n];
    let mut d = vec![C64::new(0.0, 0.0); n];
    for k in 0..n {
        let m = lo + k as i64;
        let i = sys.idx(m);
        let mut rhs = C64::new(0.0, 0.0);
        if k == 0 {
            rhs -= sys.sub[i] * left;
        }
        if k == n - 1 {
            rhs -= sys.sup[i] * right;
        }
        let (a, b) = if k == 0 {
            (C64::new(0.0, 0.0), sys.diag[i])
        } else {
            (sys.sub[i], sys.diag[i])
        };
        let denom = b - a * if k == 0 { C64::new(0.0, 0.0) } else { c[k - 1] };
        if denom.norm() < 1e-300 {
            return Err(Error::SingularLattice { index: m });
        }
        c[k] = sys.sup[i] / denom;
        d[k] = (rhs - a * if k == 0 { C64::new(0.0, 0.0) } else { d[k - 1] }) / denom;
    }
    let mut y = vec![C64::new(0.0, 0.0); n];
    y[n - 1] = d[n - 1];
    for k in (0..n - 1).rev() {
        y[k] = d[k] - c[k] * y[k + 1];
    }
    Ok(y)
}

/// Zero end values, `y[pin] = pin_value`; the two sides are independent
/// Dirichlet problems.
pub fn solve_pinned(
    sys: &TridiagonalSystem,
    pin_index: i64,
    pin_value: C64,
) -> Result<LatticeSolution> {
    if pin_index <= sys.m_lo || pin_index >= sys.m_hi {
        return Err(Error::InvalidParams(format!(
            "pin index {pin_index} is not interior"
        )));
    }
    let zero = C64::new(0.0, 0.0);
    let left = thomas(sys, sys.m_lo + 1, pin_index - 1, zero, pin_value)?;
    let right = thomas(sys, pin_index + 1, sys.m_hi - 1, pin_value, zero)?;
    let mut values = Vec::with_capacity(sys.size());
    values.push(zero);
    values.extend(left);
    values.push(pin_value);
    values.extend(right);
    values.push(zero);
    Ok(LatticeSolution {
        x0: sys.x0,
        step: sys.step,
        first_index: sys.m_lo,
        last_index: sys.m_hi,
        values,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayingRun {
    pub solution: LatticeSolution,
    pub doublings: usize,
    pub change: f64,
}

/// Initial half-width in lattice steps: six units of `1/|σ|²` on each side.
pub fn default_half_width(p: &Params) -> i64 {
    ((6.0 / p.sigma().norm_sqr()) / p.step().norm()).ceil() as i64
}

pub fn solve_decaying(x0: C64, p: &Params, tol: f64) -> Result<LatticeSolution> {
    Ok(solve_decaying_from(x0, p, tol, default_half_width(p))?.solution)
}

pub fn solve_decaying_from(x0: C64, p: &Params, tol: f64, half_width: i64) -> Result<DecayingRun> {
    let mut n = half_width.max(4);
    let one = C64::new(1.0, 0.0);
    let mut prev = solve_pinned(&assemble(x0, p, -n, n)?, 0, one)?;
    for doublings in 1..=20 {
        n *= 2;
        let next = solve_pinned(&assemble(x0, p, -n, n)?, 0, one)?;
        let max = next.max_abs();
        let change = prev
            .indices()
            .map(|m| (next.get(m).unwrap() - prev.get(m).unwrap()).norm())
            .fold(0.0, f64::max)
            / max;
        let edge = next
            .get(next.first_index + 1)
            .unwrap()
            .norm()
            .max(next.get(next.last_index - 1).unwrap().norm());
        if change < tol && edge < tol * max {
            return Ok(DecayingRun {
                solution: next,
                doublings,
                change,
            });
        }
        prev = next;
    }
    Err(Error::NoConvergence {
        what: "decaying lattice solution",
        last: x0,
    })
}

pub fn normalize_max(sol: &LatticeSolution) -> Result<LatticeSolution> {
    let big = sol
        .values
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .ok_or(Error::ZeroSolution)?;
    if big.norm() == 0.0 {
        return Err(Error::ZeroSolution);
    }
    let mut out = sol.clone();
    out.values.iter_mut().for_each(|v| *v /= big);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// Least-squares scale applied to the transseries.
    pub scale: C64,
    /// Largest `|y_m − scale·T_m|` over compared points, relative to their largest `|y_m|`.
    pub sup_relative: f64,
    pub rms_relative: f64,
    pub points: usize,
    pub samples: Vec<(i64, C64, C64, C64)>,
}

pub fn compare_transseries(
    sol: &LatticeSolution,
    p: &Params,
    exclusion_radius: f64,
) -> Result<ComparisonReport> {
    compare_transseries_in(&StokesStructure::new(p)?, sol, exclusion_radius)
}

pub fn compare_transseries_in(
    structure: &StokesStructure,
    sol: &LatticeSolution,
    exclusion_radius: f64,
) -> Result<ComparisonReport> {
    let p = &structure.params;
    if resonance_index(sol.x0, p).is_none() {
        return Err(Error::CollapsedFormInvalid { x: sol.x0 });
    }
    let one = C64::new(1.0, 0.0);
    let mut rows = Vec::new();
    for m in sol.indices() {
        let x = sol.x(m);
        if p.near_turning_point(x, exclusion_radius) {
            continue;
        }
        let Ok(t) = evaluate_resonant_in(structure, x, one) else {
            continue;
        };
        rows.push((m, x, sol.get(m).unwrap(), t.value));
    }
    if rows.is_empty() {
        return Err(Error::EmptyComparison);
    }
    let num: C64 = rows.iter().map(|r| r.3.conj() * r.2).sum();
    let den: f64 = rows.iter().map(|r| r.3.norm_sqr()).sum();
    let scale = num / den;
    let ymax = rows.iter().map(|r| r.2.norm()).fold(0.0, f64::max);
    let errs: Vec<f64> = rows
        .iter()
        .map(|r| (r.2 - scale * r.3).norm() / ymax)
        .collect();
    let sup = errs.iter().copied().fold(0.0, f64::max);
    let rms = (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt();
    Ok(ComparisonReport {
        scale,
        sup_relative: sup,
        rms_relative: rms,
        points: rows.len(),
        samples: rows,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Dense Gaussian elimination with partial pivoting on the full pinned system.
    pub(crate) fn dense_pinned(sys: &TridiagonalSystem, pin: i64, v: C64) -> Vec<C64> {
        let n = sys.size();
        let mut a = vec![vec![c(0.0, 0.0); n + 1]; n];
        for (k, row) in a.iter_mut().enumerate() {
            let m = sys.m_lo + k as i64;
            if m == sys.m_lo || m == sys.m_hi {
                row[k] = c(1.0, 0.0);
            } else if m == pin {
                row[k] = c(1.0, 0.0);
                row[n] = v;
            } else {
                row[k - 1] = sys.sub[k];
                row[k] = sys.diag[k];
                row[k + 1] = sys.sup[k];
            }
        }
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
                .unwrap();
            a.swap(col, piv);
            for r in 0..n {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    for k in col..=n {
                        let t = a[col][k];
                        a[r][k] -= f * t;
                    }
                }
            }
        }
        (0..n).map(|i| a[i][n] / a[i][i]).collect()
    }

    /// Bessel J_m(t) by the trapezoid rule on its period integral.
    pub(crate) fn bessel_j(m: i64, t: f64) -> f64 {
        let n = 4096;
        let mut s = 0.0;
        for k in 0..n {
            let tau = -PI + 2.0 * PI * k as f64 / n as f64;
            s += (m as f64 * tau - t * tau.sin()).cos();
        }
        s / n as f64
    }

    #[test]
    fn assembly_entries() {
        let p = Params::real(0.5, 1.0).unwrap();
        let sys = assemble(c(-2.0, 0.0), &p, -4, 4).unwrap();
        // x_m = 0 at m = 4.
        assert_eq!(sys.diag[sys.idx(4)], c(-2.0, 0.0));
        let q = Params::real(0.5, 2.0).unwrap();
        let sys = assemble(c(1.0, 0.0), &q, -3, 3).unwrap();
        assert_eq!(sys.diag[sys.idx(0)], c(-1.5, 0.0));
        assert!(assemble(c(0.0, 0.0), &q, 0, 2).is_err());
    }

    #[test]
    fn five_point_assembly_matches_hand_matrix() {
        let p = Params::real(0.5, 1.0).unwrap();
        let sys = assemble(c(-2.0, 0.0), &p, -2, 2).unwrap();
        // x_m = −2 + 0.5m: diag = −2 − x_m.
        let expect = [1.0, 0.5, 0.0, -0.5, -1.0];
        for (k, e) in expect.iter().enumerate() {
            assert_eq!(sys.diag[k], c(*e, 0.0));
            assert_eq!(sys.sub[k], c(1.0, 0.0));
            assert_eq!(sys.sup[k], c(1.0, 0.0));
        }
    }

    #[test]
    fn pinned_examples() {
        let p = Params::real(0.5, 1.0).unwrap();
        let sys = assemble(c(-2.0, 0.0), &p, -4, 4).unwrap();
        let zero = solve_pinned(&sys, 0, c(0.0, 0.0)).unwrap();
        assert!(zero.values.iter().all(|v| v.norm() == 0.0));
        let one = solve_pinned(&sys, 0, c(1.0, 0.0)).unwrap();
        let two = solve_pinned(&sys, 0, c(2.0, 0.0)).unwrap();
        for (a, b) in one.values.iter().zip(&two.values) {
            assert!((2.0 * a - b).norm() < 1e-14);
        }
        let dense = dense_pinned(&sys, 0, c(1.0, 0.0));
        for (a, b) in one.values.iter().zip(&dense) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!(solve_pinned(&sys, -4, c(1.0, 0.0)).is_err());
    }

    #[test]
    fn decaying_solution_is_bessel() {
        // On x_m = −2 + mε the decaying solution is J_m(2/ε).
        let p = Params::real(0.05, 1.0).unwrap();
        let sol = solve_decaying(c(-2.0, 0.0), &p, 1e-12).unwrap();
        let t = 2.0 / 0.05;
        let scale = bessel_j(0, t);
        for m in (-60..=60).step_by(7) {
            let expect = bessel_j(m, t) / scale;
            assert!((sol.get(m).unwrap() - expect).norm() < 1e-9, "m={m}");
        }
        assert!(sol.max_residual(&p, None) < 1e-10 * sol.max_abs());
    }

    #[test]
    fn nested_tolerances_agree() {
        let p = Params::real(0.04, 1.0).unwrap();
        let a = solve_decaying(c(-2.0, 0.0), &p, 1e-8).unwrap();
        let b = solve_decaying(c(-2.0, 0.0), &p, 1e-10).unwrap();
        let lo = a.first_index.max(b.first_index);
        let hi = a.last_index.min(b.last_index);
        for m in lo..=hi {
            assert!((a.get(m).unwrap() - b.get(m).unwrap()).norm() < 1e-7 * a.max_abs());
        }
    }

    #[test]
    fn different_initial_domains_agree_up_to_scale() {
        let p = Params::real(0.05, 1.0).unwrap();
        let a = solve_decaying_from(c(-2.0, 0.0), &p, 1e-11, 50)
            .unwrap()
            .solution;
        let b = solve_decaying_from(c(-2.0, 0.0), &p, 1e-11, 173)
            .unwrap()
            .solution;
        let ma = normalize_max(&a).unwrap();
        let mb = normalize_max(&b).unwrap();
        for m in -100..=100 {
            assert!((ma.get(m).unwrap() - mb.get(m).unwrap()).norm() < 1e-8);
        }
    }

    fn sign_changes(sol: &LatticeSolution, lo: f64, hi: f64) -> usize {
        let v: Vec<f64> = sol
            .indices()
            .filter(|&m| sol.x(m).re > lo && sol.x(m).re < hi)
            .map(|m| sol.get(m).unwrap().re)
            .collect();
        v.windows(2)
            .filter(|w| w[0].signum() != w[1].signum())
            .count()
    }

    #[test]
    fn oscillation_count_scales_inversely_with_epsilon() {
        let a = solve_decaying(c(-2.0, 0.0), &Params::real(0.04, 1.0).unwrap(), 1e-10).unwrap();
        let b = solve_decaying(c(-2.0, 0.0), &Params::real(0.02, 1.0).unwrap(), 1e-10).unwrap();
        let (na, nb) = (sign_changes(&a, -4.0, 0.0), sign_changes(&b, -4.0, 0.0));
        let ratio = nb as f64 / na as f64;
        assert!((ratio - 2.0).abs() < 0.15, "{na} {nb}");
    }

    #[test]
    fn normalize_examples() {
        let p = Params::real(0.1, 1.0).unwrap();
        let sol = solve_decaying(c(-2.0, 0.0), &p, 1e-10).unwrap();
        let n = normalize_max(&sol).unwrap();
        assert!((n.max_abs() - 1.0).abs() < 1e-15);
        let again = normalize_max(&n).unwrap();
        assert_eq!(again, n);
        let mut z = sol.clone();
        z.values.iter_mut().for_each(|v| *v = c(0.0, 0.0));
        assert_eq!(normalize_max(&z), Err(Error::ZeroSolution));
    }

    #[test]
    fn comparison_refuses_bad_inputs() {
        let p = Params::real(0.05, 1.0).unwrap();
        let st = StokesStructure::new(&p).unwrap();
        let sol = solve_decaying(c(-2.0, 0.0), &p, 1e-10).unwrap();
        assert_eq!(
            compare_transseries_in(&st, &sol, 1e3),
            Err(Error::EmptyComparison)
        );
        let off = solve_decaying(c(-2.0 + 0.025, 0.0), &p, 1e-10).unwrap();
        assert!(matches!(
            compare_transseries_in(&st, &off, 0.5),
            Err(Error::CollapsedFormInvalid { .. })
        ));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(200))]

        #[test]
        fn thomas_matches_dense(
            half in 3i64..24,
            pin_off in -2i64..=2,
            eps in 0.02f64..0.5,
            sig_re in 0.5f64..2.0,
            sig_im in -0.3f64..0.3,
            x_re in -6.0f64..3.0,
            x_im in -2.0f64..2.0,
        ) {
            let p = Params::new(eps, c(sig_re, sig_im)).unwrap();
            let sys = assemble(c(x_re, x_im), &p, -half, half).unwrap();
            let pin = pin_off.clamp(-half + 1, half - 1);
            let fast = solve_pinned(&sys, pin, c(1.0, 0.0));
            proptest::prop_assume!(fast.is_ok());
            let fast = fast.unwrap();
            let dense = dense_pinned(&sys, pin, c(1.0, 0.0));
            let scale = dense.iter().map(|v| v.norm()).fold(1.0, f64::max);
            for (a, b) in fast.values.iter().zip(&dense) {
                proptest::prop_assert!((a - b).norm() < 1e-12 * scale, "{a} vs {b}");
            }
        }

        #[test]
        fn returned_solutions_satisfy_the_recurrence(
            eps in 0.03f64..0.2,
            sig in 0.6f64..1.6,
            x_re in -3.0f64..1.0,
            x_im in -0.5f64..0.5,
        ) {
            let p = Params::real(eps, sig).unwrap();
            let sol = solve_decaying(c(x_re, x_im), &p, 1e-10).unwrap();
            // Off a resonant lattice the pinned row carries the only defect.
            let scale = sol.max_abs() * (1.0 + p.shifted(sol.x(sol.last_index)).norm());
            proptest::prop_assert!(sol.max_residual(&p, Some(0)) < 1e-9 * scale);
        }
    }
}
