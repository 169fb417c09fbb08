//! Problem parameters and the branch structure of `acosh(1 + σ²x/2)`.
//!
//! In the variable `w = 1 + σ²x/2` the principal inverse hyperbolic cosine
//! `log(w + √(w−1)·√(w+1))` has a square-root cut on `w ∈ [−1, 1]` and a
//! logarithmic cut on `w < −1`. Points exactly on a cut are taken as limits
//! from above.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Default exclusion radius around turning points, in units of x.
pub const TURNING_POINT_RADIUS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    epsilon: f64,
    sigma: C64,
    step: C64,
}

impl Params {
    pub fn new(epsilon: f64, sigma: C64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidParams(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if sigma.norm() == 0.0 || !sigma.is_finite() {
            return Err(Error::InvalidParams(format!(
                "sigma must be nonzero, got {sigma}"
            )));
        }
        Ok(Self {
            epsilon,
            sigma,
            step: sigma * epsilon,
        })
    }

    pub fn real(epsilon: f64, sigma: f64) -> Result<Self> {
        Self::new(epsilon, C64::new(sigma, 0.0))
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sigma(&self) -> C64 {
        self.sigma
    }

    /// Lattice spacing h = σε.
    pub fn step(&self) -> C64 {
        self.step
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(epsilon, self.sigma)
    }

    /// `w = 1 + σ²x/2`.
    pub fn w(&self, x: C64) -> C64 {
        1.0 + self.sigma * self.sigma * x / 2.0
    }

    /// `x + 2/σ²`, the shift that makes the phase's linear term symmetric.
    pub fn shifted(&self, x: C64) -> C64 {
        x + 2.0 / (self.sigma * self.sigma)
    }

    /// The two genuine turning points, `0` and `−4/σ²`.
    pub fn turning_points(&self) -> [C64; 2] {
        [C64::new(0.0, 0.0), -4.0 / (self.sigma * self.sigma)]
    }

    pub fn near_turning_point(&self, x: C64, radius: f64) -> bool {
        self.turning_points()
            .iter()
            .any(|t| (x - t).norm() <= radius)
    }

    pub fn check_off_turning_points(&self, x: C64) -> Result<()> {
        if self.near_turning_point(x, TURNING_POINT_RADIUS) {
            Err(Error::TurningPoint { x })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Branch::Plus => Branch::Minus,
            Branch::Minus => Branch::Plus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Branch::Plus => '+',
            Branch::Minus => '-',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SaddleId {
    pub s: i64,
    pub branch: Branch,
}

impl SaddleId {
    pub const fn new(s: i64, branch: Branch) -> Self {
        Self { s, branch }
    }

    pub const fn plus(s: i64) -> Self {
        Self {
            s,
            branch: Branch::Plus,
        }
    }

    pub const fn minus(s: i64) -> Self {
        Self {
            s,
            branch: Branch::Minus,
        }
    }

    pub fn shift(self, ds: i64) -> Self {
        Self {
            s: self.s + ds,
            branch: self.branch,
        }
    }
}

impl std::fmt::Display for SaddleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.s, self.branch.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SqrtSheet {
    #[default]
    Principal,
    Swapped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct BranchState {
    pub sqrt_sheet: SqrtSheet,
    pub log_winding: i64,
}

impl BranchState {
    pub const PRINCIPAL: BranchState = BranchState {
        sqrt_sheet: SqrtSheet::Principal,
        log_winding: 0,
    };

    fn sheet_sign(&self) -> f64 {
        match self.sqrt_sheet {
            SqrtSheet::Principal => 1.0,
            SqrtSheet::Swapped => -1.0,
        }
    }
}

/// Move a point lying exactly on the real axis to the upper side of the cut.
fn from_above(w: C64) -> C64 {
    if w.im == 0.0 {
        C64::new(w.re, 0.0)
    } else {
        w
    }
}

/// `√(w−1)·√(w+1)` with principal roots, i.e. `sinh` of the principal `acosh`.
pub fn sqrt_product(w: C64) -> C64 {
    let w = from_above(w);
    (w - 1.0).sqrt() * (w + 1.0).sqrt()
}

/// `sinh(acosh_branch(w, state))`, computed algebraically.
pub fn sinh_acosh(w: C64, state: BranchState) -> C64 {
    sqrt_product(w) * state.sheet_sign()
}

/// Inverse hyperbolic cosine on the sheet described by `state`.
///
/// At the branch points `w = ±1` the sheets meet and the limiting values
/// are returned; operations whose formulas are singular there reject turning
/// points themselves.
pub fn acosh_branch(w: C64, state: BranchState) -> C64 {
    let w = from_above(w);
    let principal = (w + sqrt_product(w)).ln();
    principal * state.sheet_sign() + C64::new(0.0, 2.0 * PI * state.log_winding as f64)
}

/// Which side of the real w-axis a point lies on; the axis itself counts as upper.
fn upper(w: C64) -> bool {
    w.im >= 0.0
}

/// Analytic continuation of a saddle label along a polyline of x values.
///
/// Labels always refer to principal values at the current point, so the
/// result names the saddle at the final point that the continued saddle
/// coincides with.
pub fn transport_saddle(path: &[C64], id: SaddleId, p: &Params) -> Result<SaddleId> {
    let mut id = id;
    for &x in path {
        if p.near_turning_point(x, TURNING_POINT_RADIUS) {
            return Err(Error::PathThroughBranchPoint { x });
        }
    }
    for seg in path.windows(2) {
        id = transport_step(seg[0], seg[1], id, p)?;
    }
    Ok(id)
}

/// Continue a label across one straight segment.
pub fn transport_step(xa: C64, xb: C64, id: SaddleId, p: &Params) -> Result<SaddleId> {
    let wa = p.w(xa);
    let wb = p.w(xb);
    if upper(wa) == upper(wb) {
        return Ok(id);
    }
    // w is affine in x, so the segment in w is straight as well.
    let t = if wb.im == wa.im {
        0.5
    } else {
        wa.im / (wa.im - wb.im)
    };
    let cross = wa.re + t * (wb.re - wa.re);
    let scale = 1.0 + wa.norm().max(wb.norm());
    if (cross - 1.0).abs() < 1e-14 * scale || (cross + 1.0).abs() < 1e-14 * scale {
        let x = xa + (xb - xa) * t;
        return Err(Error::PathThroughBranchPoint { x });
    }
    let downward = upper(wa) && !upper(wb);
    let out = if cross > -1.0 && cross < 1.0 {
        SaddleId {
            s: id.s,
            branch: id.branch.flip(),
        }
    } else if cross < -1.0 {
        let ds = match (id.branch, downward) {
            (Branch::Plus, true) => -1,
            (Branch::Plus, false) => 1,
            (Branch::Minus, true) => 1,
            (Branch::Minus, false) => -1,
        };
        id.shift(ds)
    } else {
        id
    };
    Ok(out)
}

/// Polyline approximating a circle, closed (last point equals first).
pub fn circle_path(center: C64, radius: f64, start_angle: f64, n: usize) -> Vec<C64> {
    (0..=n)
        .map(|k| center + C64::from_polar(radius, start_angle + 2.0 * PI * k as f64 / n as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn acosh_branch_point_values() {
        assert_eq!(
            acosh_branch(c(1.0, 0.0), BranchState::PRINCIPAL),
            c(0.0, 0.0)
        );
        let v = acosh_branch(c(-1.0, 0.0), BranchState::PRINCIPAL);
        assert!((v - c(0.0, PI)).norm() < 1e-15);
    }

    #[test]
    fn acosh_round_trip_principal() {
        let a = c(0.3, 0.2);
        let v = acosh_branch(a.cosh(), BranchState::PRINCIPAL);
        assert!((v - a).norm() < 1e-14);
    }

    #[test]
    fn acosh_other_sheets_still_invert_cosh() {
        let w = c(0.7, -2.1);
        for sheet in [SqrtSheet::Principal, SqrtSheet::Swapped] {
            for n in -2..=2 {
                let v = acosh_branch(
                    w,
                    BranchState {
                        sqrt_sheet: sheet,
                        log_winding: n,
                    },
                );
                assert!((v.cosh() - w).norm() < 1e-13);
                assert!(
                    (v.sinh()
                        - sinh_acosh(
                            w,
                            BranchState {
                                sqrt_sheet: sheet,
                                log_winding: n
                            }
                        ))
                    .norm()
                        < 1e-13
                );
            }
        }
    }

    #[test]
    fn params_reject_bad_input() {
        assert!(Params::real(0.0, 1.0).is_err());
        assert!(Params::real(0.1, 0.0).is_err());
        let p = Params::new(0.05, c(1.0, 2.0)).unwrap();
        assert_eq!(p.step(), c(1.0, 2.0) * 0.05);
    }

    #[test]
    fn no_crossing_keeps_label() {
        let p = Params::real(0.1, 1.0).unwrap();
        let path = [c(1.0, 1.0), c(-2.0, 2.0), c(-6.0, 0.5)];
        assert_eq!(
            transport_saddle(&path, SaddleId::plus(0), &p).unwrap(),
            SaddleId::plus(0)
        );
    }

    #[test]
    fn crossing_central_segment_swaps_branch() {
        let p = Params::real(0.1, 1.0).unwrap();
        let path = [c(-2.0, 1.0), c(-2.0, -1.0)];
        assert_eq!(
            transport_saddle(&path, SaddleId::plus(2), &p).unwrap(),
            SaddleId::minus(2)
        );
    }

    #[test]
    fn crossing_outer_segment_shifts_row() {
        let p = Params::real(0.1, 1.0).unwrap();
        let down = [c(-6.0, 1.0), c(-6.0, -1.0)];
        assert_eq!(
            transport_saddle(&down, SaddleId::plus(0), &p).unwrap(),
            SaddleId::plus(-1)
        );
        assert_eq!(
            transport_saddle(&down, SaddleId::minus(0), &p).unwrap(),
            SaddleId::minus(1)
        );
        let up = [c(-6.0, -1.0), c(-6.0, 1.0)];
        assert_eq!(
            transport_saddle(&up, SaddleId::plus(0), &p).unwrap(),
            SaddleId::plus(1)
        );
    }

    #[test]
    fn path_through_turning_point_rejected() {
        let p = Params::real(0.1, 1.0).unwrap();
        let path = [c(0.0, 1.0), c(0.0, 0.0), c(0.0, -1.0)];
        assert!(matches!(
            transport_saddle(&path, SaddleId::plus(0), &p),
            Err(Error::PathThroughBranchPoint { .. })
        ));
    }
}
