//! Phase function `φ(x,z) = (i/σ)(z·(x + 2/σ²) − (2/σ²) sin z)` of the
//! Laplace-type integral, its saddles, heights and leading contributions.

use std::f64::consts::PI;

use crate::core::{acosh_branch, sinh_acosh, BranchState, Params, SaddleId, C64, I};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseValue {
    pub value: C64,
    pub d1: C64,
    pub d2: C64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contribution {
    pub id: SaddleId,
    pub height: C64,
    pub amplitude: C64,
    pub value: C64,
}

pub fn phase(x: C64, z: C64, p: &Params) -> PhaseValue {
    let sig = p.sigma();
    let pre = I / sig;
    let k = 2.0 / (sig * sig);
    PhaseValue {
        value: pre * (z * x + k * (z + I * (I * z).sinh())),
        d1: pre * (x + k * (1.0 - z.cos())),
        d2: pre * k * z.sin(),
    }
}

/// Third and higher z-derivatives are periodic: `∂ⁿφ = (i/σ)(2/σ²)·sin^{(n-1)}(z)`.
pub fn phase_derivative(z: C64, n: usize, p: &Params) -> C64 {
    let sig = p.sigma();
    let k = I / sig * 2.0 / (sig * sig);
    let trig = match (n + 2) % 4 {
        0 => z.sin(),
        1 => z.cos(),
        2 => -z.sin(),
        _ => -z.cos(),
    };
    k * trig
}

pub fn saddle_location(x: C64, id: SaddleId, p: &Params, state: BranchState) -> C64 {
    let a = acosh_branch(p.w(x), state);
    I * a * id.branch.sign() + 2.0 * PI * id.s as f64
}

pub fn saddle_height(x: C64, id: SaddleId, p: &Params, state: BranchState) -> C64 {
    let sig = p.sigma();
    let z = saddle_location(x, id, p, state);
    // sin(z_s^±) = ±i·sinh(acosh w), evaluated algebraically on the sheet.
    let sin_z = I * sinh_acosh(p.w(x), state) * id.branch.sign();
    I / sig * (z * p.shifted(x) - 2.0 / (sig * sig) * sin_z)
}

/// Principal `x^{1/4}(σ²x+4)^{1/4}`.
fn quarter_roots(x: C64, p: &Params) -> C64 {
    let sig2 = p.sigma() * p.sigma();
    let x = if x.im == 0.0 { C64::new(x.re, 0.0) } else { x };
    x.powf(0.25) * (sig2 * x + 4.0).powf(0.25)
}

pub fn prefactor_a0(x: C64, p: &Params) -> Result<C64> {
    p.check_off_turning_points(x)?;
    Ok(1.0 / ((2.0 * PI * p.epsilon()).sqrt() * quarter_roots(x, p)))
}

pub fn contribution(x: C64, id: SaddleId, p: &Params, state: BranchState) -> Result<Contribution> {
    let a0 = prefactor_a0(x, p)?;
    let amplitude = match id.branch {
        crate::core::Branch::Plus => a0,
        crate::core::Branch::Minus => I * a0,
    };
    let height = saddle_height(x, id, p, state);
    Ok(Contribution {
        id,
        height,
        amplitude,
        value: amplitude * (height / p.epsilon()).exp(),
    })
}

/// Exponent of the WKB form `e^{−S/ε}`; the negative of the saddle height.
pub fn exponent_s(x: C64, id: SaddleId, p: &Params, state: BranchState) -> C64 {
    let sig = p.sigma();
    let a = acosh_branch(p.w(x), state) * id.branch.sign();
    let sh = sinh_acosh(p.w(x), state) * id.branch.sign();
    // S = (1/σ)[(x + 2/σ²)(a − 2πi s) − (2/σ²) sinh a] with a = ±acosh.
    (p.shifted(x) * (a - 2.0 * PI * I * id.s as f64) - 2.0 / (sig * sig) * sh) / sig
}

/// `dφ_s^±/dx = (i/σ)·z_s^±` (the z-derivative vanishes at the saddle).
pub fn height_derivative(x: C64, id: SaddleId, p: &Params, state: BranchState) -> C64 {
    I / p.sigma() * saddle_location(x, id, p, state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::Branch;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn p1() -> Params {
        Params::real(0.05, 1.0).unwrap()
    }

    #[test]
    fn phase_shift_by_period() {
        let p = Params::new(0.1, c(0.8, 0.3)).unwrap();
        let x = c(0.4, -1.2);
        let z = c(0.3, 0.7);
        let d = phase(x, z + 2.0 * PI, &p).value - phase(x, z, &p).value;
        let expect = 2.0 * PI * I * p.shifted(x) / p.sigma();
        assert!((d - expect).norm() < 1e-12);
        assert!((phase(x, c(0.0, 0.0), &p).d1 - I * x / p.sigma()).norm() < 1e-15);
    }

    #[test]
    fn phase_matches_high_precision_value() {
        // mpmath, 30 digits: (i)(z(x+2) - 2 sin z) at x=2, z=1+0.5i.
        let v = phase(c(2.0, 0.0), c(1.0, 0.5), &p1()).value;
        let re = -1.4369020097293312;
        let im = 2.1022709371256638;
        assert!((v - c(re, im)).norm() < 1e-14, "{v}");
    }

    #[test]
    fn phase_derivatives_consistent() {
        let p = Params::new(0.1, c(1.1, -0.4)).unwrap();
        let (x, z) = (c(-0.7, 0.9), c(0.2, -0.4));
        let h = 1e-5;
        let pv = phase(x, z, &p);
        let fd1 = (phase(x, z + h, &p).value - phase(x, z - h, &p).value) / (2.0 * h);
        let fd2 = (phase(x, z + h, &p).d1 - phase(x, z - h, &p).d1) / (2.0 * h);
        assert!((fd1 - pv.d1).norm() < 1e-8);
        assert!((fd2 - pv.d2).norm() < 1e-8);
        assert!((phase_derivative(z, 2, &p) - pv.d2).norm() < 1e-14);
        let fd3 = (phase(x, z + h, &p).d2 - phase(x, z - h, &p).d2) / (2.0 * h);
        assert!((phase_derivative(z, 3, &p) - fd3).norm() < 1e-8);
    }

    #[test]
    fn saddle_examples() {
        let p = p1();
        let st = BranchState::PRINCIPAL;
        assert_eq!(
            saddle_location(c(0.0, 0.0), SaddleId::plus(0), &p, st),
            c(0.0, 0.0)
        );
        assert!(
            (saddle_location(c(0.0, 0.0), SaddleId::plus(3), &p, st) - c(6.0 * PI, 0.0)).norm()
                < 1e-14
        );
        assert!(
            (saddle_location(c(-4.0, 0.0), SaddleId::plus(0), &p, st) - c(-PI, 0.0)).norm() < 1e-14
        );
    }

    /// Newton iteration on ∂φ/∂z, independent of the closed form.
    fn newton_saddle(x: C64, seed: C64, p: &Params) -> C64 {
        let mut z = seed;
        for _ in 0..50 {
            let pv = phase(x, z, p);
            let dz = pv.d1 / pv.d2;
            z -= dz;
            if dz.norm() < 1e-15 {
                break;
            }
        }
        z
    }

    #[test]
    fn saddle_matches_newton_root() {
        let p = p1();
        let x = c(1.0, 1.0);
        let seed = -I * c(1.5, 0.5).acosh() + c(0.05, -0.03);
        let z_newton = newton_saddle(x, seed, &p);
        let z = saddle_location(x, SaddleId::minus(0), &p, BranchState::PRINCIPAL);
        assert!((z - z_newton).norm() < 1e-12);
    }

    #[test]
    fn height_matches_substitution() {
        for sig in [c(1.0, 0.0), c(2.0, 0.0), C64::from_polar(1.0, PI / 12.0)] {
            let p = Params::new(0.05, sig).unwrap();
            for x in [c(-1.0, 0.0), c(2.0, 0.5), c(-3.0, -2.0), c(-7.0, 0.1)] {
                for id in [
                    SaddleId::plus(0),
                    SaddleId::minus(0),
                    SaddleId::plus(-2),
                    SaddleId::minus(3),
                ] {
                    let st = BranchState::PRINCIPAL;
                    let h = saddle_height(x, id, &p, st);
                    let z = saddle_location(x, id, &p, st);
                    let direct = phase(x, z, &p).value;
                    assert!(
                        (h - direct).norm() <= 1e-12 * (1.0 + h.norm()),
                        "{sig} {x} {id}"
                    );
                }
            }
        }
    }

    #[test]
    fn heights_coincide_at_origin() {
        let p = p1();
        let st = BranchState::PRINCIPAL;
        let hp = saddle_height(c(0.0, 0.0), SaddleId::plus(0), &p, st);
        let hm = saddle_height(c(0.0, 0.0), SaddleId::minus(0), &p, st);
        assert!(hp.norm() < 1e-15 && hm.norm() < 1e-15);
    }

    #[test]
    fn amplitude_direct_substitution() {
        let p = p1();
        let a = contribution(c(1.0, 0.0), SaddleId::plus(0), &p, BranchState::PRINCIPAL)
            .unwrap()
            .amplitude;
        let expect = 1.0 / ((0.1 * PI).sqrt() * 5f64.powf(0.25));
        assert!((a - expect).norm() < 1e-14);
        let m = contribution(c(1.0, 0.0), SaddleId::minus(0), &p, BranchState::PRINCIPAL)
            .unwrap()
            .amplitude;
        assert!((m - I * expect).norm() < 1e-14);
    }

    #[test]
    fn contribution_ratio_between_rows() {
        let p = Params::real(0.07, 1.0).unwrap();
        let x = c(0.6, 0.25);
        let st = BranchState::PRINCIPAL;
        let c0 = contribution(x, SaddleId::plus(0), &p, st).unwrap().value;
        for s in [-2, 1, 3] {
            let cs = contribution(x, SaddleId::plus(s), &p, st).unwrap().value;
            let expect = (2.0 * PI * I * s as f64 * p.shifted(x) / p.step()).exp();
            assert!((cs / c0 - expect).norm() < 1e-9 * expect.norm());
        }
    }

    #[test]
    fn exponent_is_minus_height() {
        let p = Params::new(0.1, c(0.9, 0.2)).unwrap();
        for x in [c(0.3, 0.1), c(-5.0, 2.0), c(-2.0, -0.3)] {
            for b in [Branch::Plus, Branch::Minus] {
                let id = SaddleId::new(1, b);
                let st = BranchState::PRINCIPAL;
                let s = exponent_s(x, id, &p, st);
                assert!((s + saddle_height(x, id, &p, st)).norm() < 1e-12 * (1.0 + s.norm()));
            }
        }
    }

    #[test]
    fn exponent_solves_eikonal() {
        let p = p1();
        let st = BranchState::PRINCIPAL;
        let sig = p.sigma();
        for x in [c(1.0, 0.3), c(-2.0, 1.5), c(-6.0, -0.8)] {
            let h = 1e-5;
            let id = SaddleId::plus(1);
            let ds = (exponent_s(x + h, id, &p, st) - exponent_s(x - h, id, &p, st)) / (2.0 * h);
            let r = 2.0 / (sig * sig) * ((sig * ds).cosh() - 1.0) - x;
            assert!(r.norm() < 1e-6, "{r}");
        }
    }

    #[test]
    fn exponent_at_minus_two() {
        // σ=1, x=−2, s=0, plus: acosh(0) = iπ/2, sinh = i, S = −2i.
        let p = p1();
        let s = exponent_s(c(-2.0, 0.0), SaddleId::plus(0), &p, BranchState::PRINCIPAL);
        assert!((s - c(0.0, -2.0)).norm() < 1e-14, "{s}");
    }

    #[test]
    fn prefactor_examples() {
        let p = Params::real(0.02, 1.0).unwrap();
        let a = prefactor_a0(c(1.0, 0.0), &p).unwrap();
        assert!((a - 1.0 / ((0.04 * PI).sqrt() * 5f64.powf(0.25))).norm() < 1e-14);
        assert!(prefactor_a0(c(0.0, 0.0), &p).is_err());
        assert!(prefactor_a0(c(-4.0, 0.0), &p).is_err());
    }

    #[test]
    fn prefactor_transport_equation() {
        let p = p1();
        let sig = p.sigma();
        let st = BranchState::PRINCIPAL;
        let id = SaddleId::plus(0);
        let x = c(0.8, 0.6);
        let h = 1e-4;
        let s = |x: C64| exponent_s(x, id, &p, st);
        let a = |x: C64| prefactor_a0(x, &p).unwrap();
        let s1 = (s(x + h) - s(x - h)) / (2.0 * h);
        let s2 = (s(x + h) - 2.0 * s(x) + s(x - h)) / (h * h);
        let a1 = (a(x + h) - a(x - h)) / (2.0 * h);
        let r = (sig * s1).sinh() * a1 + sig / 2.0 * (sig * s1).cosh() * s2 * a(x);
        assert!(r.norm() < 1e-6, "{r}");
    }
}
