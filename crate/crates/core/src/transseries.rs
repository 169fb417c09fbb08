//! Region-dependent transseries, its resonant collapse, envelopes, and the
//! continuous Airy reference structure.

use std::f64::consts::PI;

use crate::core::{Branch, BranchState, Params, SaddleId, C64, I};
use crate::error::{Error, Result};
use crate::saddle::{contribution, prefactor_a0, saddle_height};
use crate::stokes::{
    seeds_on_circle, trace_with, Condition, CurveKind, CurveSpec, Labels, RegionLabel,
    StokesStructure, TraceOptions, Window,
};

#[derive(Debug, Clone, PartialEq)]
pub struct TransseriesValue {
    pub value: C64,
    pub terms: Vec<(SaddleId, C64)>,
    pub region: RegionLabel,
    pub resonant: bool,
}

/// `(x + 2/σ²)/(σε)` rounded, when it is within 1e−9 of an integer.
pub fn resonance_index(x: C64, p: &Params) -> Option<i64> {
    let r = p.shifted(x) / p.step();
    let k = r.re.round();
    ((r - k).norm() <= 1e-9).then_some(k as i64)
}

/// Collapsed three-case form on a resonant lattice.
pub fn evaluate_resonant_in(
    structure: &StokesStructure,
    x: C64,
    scale: C64,
) -> Result<TransseriesValue> {
    let p = &structure.params;
    if resonance_index(x, p).is_none() {
        return Err(Error::CollapsedFormInvalid { x });
    }
    let (region, coeffs) = structure.classify(x)?;
    let st = BranchState::PRINCIPAL;
    let mut terms = Vec::new();
    if coeffs.minus == 1 {
        terms.push((
            SaddleId::minus(0),
            scale * contribution(x, SaddleId::minus(0), p, st)?.value,
        ));
    }
    if coeffs.plus == 1 {
        terms.push((
            SaddleId::plus(0),
            scale * contribution(x, SaddleId::plus(0), p, st)?.value,
        ));
    }
    let value = terms.iter().map(|t| t.1).sum();
    Ok(TransseriesValue {
        value,
        terms,
        region,
        resonant: true,
    })
}

pub fn evaluate_resonant(x: C64, p: &Params, scale: C64) -> Result<TransseriesValue> {
    evaluate_resonant_in(&StokesStructure::new(p)?, x, scale)
}

/// Largest of `Re φ/ε + log|A₀|` over the saddles present in the region of x.
pub fn envelope_log_in(structure: &StokesStructure, x: C64) -> Result<f64> {
    let p = &structure.params;
    let (_, coeffs) = structure.classify(x)?;
    let a0 = prefactor_a0(x, p)?.norm().ln();
    let st = BranchState::PRINCIPAL;
    let mut best = f64::NEG_INFINITY;
    for (on, b) in [(coeffs.plus, Branch::Plus), (coeffs.minus, Branch::Minus)] {
        if on == 1 {
            let h = saddle_height(x, SaddleId::new(0, b), p, st);
            best = best.max(h.re / p.epsilon() + a0);
        }
    }
    Ok(best)
}

pub fn envelope_log(x: C64, p: &Params) -> Result<f64> {
    envelope_log_in(&StokesStructure::new(p)?, x)
}

/// `(y₁, y₂)` for the continuous Airy equation `ε²y'' = xy`, with `C = 1`.
pub fn continuous_airy_contributions(x: C64, epsilon: f64) -> Result<(C64, C64)> {
    if x.norm() == 0.0 {
        return Err(Error::TurningPoint { x });
    }
    let x = if x.im == 0.0 { C64::new(x.re, 0.0) } else { x };
    let pre = 1.0 / (2.0 * (PI * epsilon).sqrt() * x.powf(0.25));
    let e = 2.0 * x.powf(1.5) / 3.0;
    Ok((-I * pre * (e / epsilon).exp(), pre * (-e / epsilon).exp()))
}

/// Exponents of `(y₁, y₂)` in the form `e^{E/ε}`.
pub fn continuous_airy_exponents(x: C64) -> (C64, C64) {
    let x = if x.im == 0.0 { C64::new(x.re, 0.0) } else { x };
    let e = 2.0 * x.powf(1.5) / 3.0;
    (e, -e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRay {
    pub kind: CurveKind,
    pub arg: f64,
    pub active: bool,
    pub curve: CurveSpec,
}

/// Stokes and anti-Stokes rays of the continuous Airy pair, traced from the
/// turning point. A Stokes ray is active when the contribution present on
/// the positive axis (`y₂`) is dominant on it, so it can switch on `y₁`.
pub fn continuous_airy_rays(window: &Window) -> Result<Vec<ReferenceRay>> {
    let p = Params::real(1.0, 1.0)?;
    let mut opt = TraceOptions::for_window(window, &p);
    opt.singular_points = vec![C64::new(0.0, 0.0)];
    let mut rays = Vec::new();
    for kind in [CurveKind::Stokes, CurveKind::AntiStokes] {
        let cond = Condition::new(kind, Labels::ContinuousAiry, p);
        let r = 1e-2 * window.diagonal();
        let mut seeds = seeds_on_circle(&cond, C64::new(0.0, 0.0), r, 1440);
        // A ray lying on the cut of x^{3/2} has no sign change across it.
        let on_cut = C64::new(-r, 0.0);
        let s = cond.eval(&Labels::ContinuousAiry, on_cut)?;
        if s.value.abs() < 1e-12 * s.scale
            && seeds.iter().all(|(q, _)| (q - on_cut).norm() > 1e-6 * r)
        {
            seeds.push((on_cut, Labels::ContinuousAiry));
        }
        for (seed, _) in seeds {
            let curve = trace_with(&cond, seed, window, &opt)?;
            let far = *curve
                .points
                .iter()
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                .unwrap_or(&seed);
            let (e1, e2) = continuous_airy_exponents(far);
            let active = kind == CurveKind::Stokes && e2.re > e1.re;
            rays.push(ReferenceRay {
                kind,
                arg: far.arg(),
                active,
                curve,
            });
        }
    }
    Ok(rays)
}
