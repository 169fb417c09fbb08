//! One function per subcommand. Each merges its own options, computes, and
//! writes CSV/JSON/SVG plus a manifest into the output directory.

use std::f64::consts::PI;

use discrete_airy::descent::{descent_path, exact_eval_detailed, path_rows, Evaluation, Half};
use discrete_airy::lateorder::{
    fit_lateorder, multiplier_profile_with, optimal_truncation, series_coeffs, MultiplierOptions,
    MultiplierProfile,
};
use discrete_airy::lattice::{
    compare_transseries_in, default_half_width, normalize_max, solve_decaying, solve_decaying_from,
};
use discrete_airy::stokes::{
    singulant, turning_points, CurveKind, CurvePair, CurveSpec, Labels, StokesStructure, Window,
};
use discrete_airy::transseries::{envelope_log_in, resonance_index};
use discrete_airy::{Branch, BranchState, Params, SaddleId, C64};
use serde_json::{json, Value};

use crate::config::{pick, pick_f64_list, pick_str_list, Command, Common, FileConfig};
use crate::output::{cx, num, usage, CliResult, OutDir, Table};
use crate::svg::{Frame, Svg};

const ST: BranchState = BranchState::PRINCIPAL;

const BLACK: &str = r##"stroke="#000" stroke-width="1.2""##;
const BLACK_DOTTED: &str = r##"stroke="#000" stroke-width="0.8" stroke-dasharray="2,3""##;
const RED: &str = r##"stroke="#c00" stroke-width="1""##;
const BLUE_DASHED: &str = r##"stroke="#24c" stroke-width="1.2" stroke-dasharray="6,4""##;
const GRAY_DOT: &str = r##"fill="#888" stroke="#000""##;
const WHITE_DOT: &str = r##"fill="#fff" stroke="#000""##;

pub fn run(command: &Command, common: &Common, file: &FileConfig) -> CliResult<()> {
    match command {
        Command::Structure { kind } => structure(common, file, kind),
        Command::Solve {
            x0_re,
            x0_im,
            half_width,
        } => solve(common, file, *x0_re, *x0_im, *half_width),
        Command::Compare {
            x0_re,
            x0_im,
            epsilons,
            exclusion,
        } => compare(common, file, *x0_re, *x0_im, epsilons, *exclusion),
        Command::Smoothing {
            arc,
            points,
            span,
            base_chi,
            compare_epsilon,
        } => smoothing(
            common,
            file,
            SmoothingFlags {
                arc: *arc,
                points: *points,
                span: *span,
                base_chi: *base_chi,
                compare_epsilon: *compare_epsilon,
            },
        ),
        Command::Lines { sigma_args } => lines(common, file, sigma_args),
        Command::Lateorder {
            x_re,
            x_im,
            saddle,
            kmax,
        } => lateorder(common, file, *x_re, *x_im, saddle, *kmax),
        Command::Paths { x_re, x_im } => paths(common, file, *x_re, *x_im),
    }
}

fn pt(x: C64) -> (f64, f64) {
    (x.re, x.im)
}

fn to_value(cfg: &FileConfig) -> Value {
    serde_json::to_value(cfg).expect("config always serialises")
}

fn window_frame(w: &Window) -> Frame {
    Frame::new(w.re_min, w.re_max, w.im_min, w.im_max)
}

fn default_x0(p: &Params) -> C64 {
    turning_points(p).virtual_point
}

fn label_cells(labels: &Labels) -> Vec<String> {
    let ids: Vec<SaddleId> = match labels {
        Labels::Pair(c) => vec![c.first, c.second],
        Labels::Triple(t) => vec![t.base, t.mid, t.far],
        Labels::ContinuousAiry => vec![],
    };
    let mut cells = Vec::new();
    for k in 0..3 {
        match ids.get(k) {
            Some(id) => {
                cells.push(id.s.to_string());
                cells.push(id.branch.symbol().to_string());
            }
            None => {
                cells.push(String::new());
                cells.push(String::new());
            }
        }
    }
    cells
}

fn labels_name(labels: &Labels) -> String {
    match labels {
        Labels::Pair(c) => format!("{}{}", c.first, c.second),
        Labels::Triple(t) => format!("{}{}{}", t.base, t.mid, t.far),
        Labels::ContinuousAiry => "airy".into(),
    }
}

/// `"0,+"`, `"-1,-"`.
fn parse_saddle(text: &str) -> CliResult<SaddleId> {
    let bad = || usage(format!("--saddle: expected s,+ or s,- (got '{text}')"));
    let (s, b) = text.split_once(',').ok_or_else(bad)?;
    let s: i64 = s.trim().parse().map_err(|_| bad())?;
    let branch = match b.trim() {
        "+" => Branch::Plus,
        "-" => Branch::Minus,
        _ => return Err(bad()),
    };
    Ok(SaddleId::new(s, branch))
}

// ---------------------------------------------------------------- structure

fn structure(common: &Common, file: &FileConfig, kind: &Option<String>) -> CliResult<()> {
    let p = common.params()?;
    let window = common.window_for(&p);
    let names = pick_str_list(kind, &file.kind, &["stokes", "antistokes", "higher"]);
    let mut kinds = Vec::new();
    for n in &names {
        let k =
            match n.as_str() {
                "stokes" => CurveKind::Stokes,
                "antistokes" => CurveKind::AntiStokes,
                "higher" => CurveKind::Higher,
                other => return Err(usage(format!(
                    "--kind: unknown curve kind '{other}' (expected stokes, antistokes, higher)"
                ))),
            };
        if !kinds.contains(&k) {
            kinds.push(k);
        }
    }
    let st = StokesStructure::new(&p)?;
    let curves = st.trace_families(common.smax, &window, &kinds);
    let tp = turning_points(&p);

    let mut out = OutDir::create(&common.out_dir)?;
    let mut counts = [0usize; 3];
    let mut boundary_points = 0usize;
    let mut warnings: Vec<String> = Vec::new();
    if common.formats.csv {
        let mut t = Table::new(&[
            "curve", "kind", "s1", "branch1", "s2", "branch2", "s3", "branch3", "re_x", "im_x",
            "active",
        ]);
        for (i, c) in curves.iter().enumerate() {
            let labels = label_cells(&c.labels);
            for (k, x) in c.points.iter().enumerate() {
                let mut row = vec![i.to_string(), c.kind.name().to_string()];
                row.extend(labels.iter().cloned());
                row.extend([
                    num(x.re),
                    num(x.im),
                    (c.active_mask.get(k).copied().unwrap_or(false) as u8).to_string(),
                ]);
                t.row(&row);
            }
        }
        out.write("curves.csv", &t.into_string())?;

        if let Err(e @ discrete_airy::Error::RegionsUnavailable { .. }) =
            st.classify(st.reference_point())
        {
            let msg = format!("{e}; regions.csv not written");
            eprintln!("warning: {msg}");
            warnings.push(msg);
        } else {
            regions_csv(
                &st,
                &window,
                common.grid,
                &mut counts,
                &mut boundary_points,
                &mut out,
            )?;
        }
    }
    let diagnostics: Vec<Value> = curves
        .iter()
        .enumerate()
        .filter_map(|(i, c)| {
            c.diagnostic
                .as_ref()
                .map(|d| json!({"curve": i, "labels": labels_name(&c.labels), "message": d}))
        })
        .collect();
    let summary = json!({
        "crossings": [cx(st.crossings.0), cx(st.crossings.1)],
        "turning_points": {"origin": cx(tp.origin), "outer": cx(tp.outer), "virtual": cx(tp.virtual_point)},
        "window": [window.re_min, window.re_max, window.im_min, window.im_max],
        "curves": curves.len(),
        "diagnostics": diagnostics,
        "warnings": warnings,
    });
    if common.formats.json {
        let curve_list: Vec<Value> = curves
            .iter()
            .enumerate()
            .map(|(i, c)| {
                json!({
                    "curve": i,
                    "kind": c.kind.name(),
                    "labels": labels_name(&c.labels),
                    "points": c.points.len(),
                    "active_points": c.active_mask.iter().filter(|a| **a).count(),
                })
            })
            .collect();
        let mut body = summary.clone();
        body["curve_list"] = Value::Array(curve_list);
        if common.formats.csv {
            body["region_counts"] = json!({"D1": counts[0], "D2": counts[1], "D3": counts[2], "boundary": boundary_points});
        }
        out.write_json("structure.json", &body)?;
    }
    if common.formats.svg {
        let mut s = Svg::new(window_frame(&window));
        s.axes(
            &format!("Curves for ε = {}, σ = {}", p.epsilon(), p.sigma()),
            "Re x",
            "Im x",
        );
        for c in &curves {
            match c.kind {
                CurveKind::AntiStokes => {
                    s.polyline(&c.points.iter().map(|x| pt(*x)).collect::<Vec<_>>(), RED)
                }
                CurveKind::Higher => s.polyline(
                    &c.points.iter().map(|x| pt(*x)).collect::<Vec<_>>(),
                    BLUE_DASHED,
                ),
                CurveKind::Stokes => draw_masked(&mut s, c),
            }
        }
        for x in [tp.origin, tp.outer] {
            s.circle(pt(x), 4.0, GRAY_DOT);
        }
        for x in [st.crossings.0, st.crossings.1] {
            s.circle(pt(x), 4.0, WHITE_DOT);
        }
        s.legend(&[
            ("active Stokes", BLACK),
            ("inactive Stokes", BLACK_DOTTED),
            ("anti-Stokes", RED),
            ("higher-order", BLUE_DASHED),
        ]);
        out.write("structure.svg", &s.finish())?;
    }
    let mut cfg = common.to_file();
    cfg.kind = Some(crate::config::ListSpec::List(
        kinds.iter().map(|k| k.name().to_string()).collect(),
    ));
    println!(
        "structure: {} curves, crossings {:.6} and {:.6}",
        curves.len(),
        st.crossings.0,
        st.crossings.1
    );
    out.finish("structure", to_value(&cfg), summary)
}

/// Grid classification, one row per point; "boundary" on refused points.
fn regions_csv(
    st: &StokesStructure,
    window: &Window,
    n: usize,
    counts: &mut [usize; 3],
    boundary_points: &mut usize,
    out: &mut OutDir,
) -> CliResult<()> {
    let mut t = Table::new(&["re_x", "im_x", "region", "c_plus", "c_minus"]);
    for j in 0..n {
        let im = window.im_min + (window.im_max - window.im_min) * j as f64 / (n - 1) as f64;
        for i in 0..n {
            let re = window.re_min + (window.re_max - window.re_min) * i as f64 / (n - 1) as f64;
            let x = C64::new(re, im);
            match st.classify(x) {
                Ok((r, co)) => {
                    counts[r as usize] += 1;
                    t.row(&[
                        num(re),
                        num(im),
                        r.name().into(),
                        co.plus.to_string(),
                        co.minus.to_string(),
                    ]);
                }
                Err(_) => {
                    *boundary_points += 1;
                    t.row(&[
                        num(re),
                        num(im),
                        "boundary".into(),
                        String::new(),
                        String::new(),
                    ]);
                }
            }
        }
    }
    out.write("regions.csv", &t.into_string())
}

/// Stokes curve drawn solid where active and dotted elsewhere.
fn draw_masked(s: &mut Svg, c: &CurveSpec) {
    let mut run: Vec<(f64, f64)> = Vec::new();
    let mut state = None;
    for (k, x) in c.points.iter().enumerate() {
        let a = c.active_mask.get(k).copied().unwrap_or(false);
        if state.is_some() && state != Some(a) {
            // Share the switching point so the two styles join up.
            let last = *run.last().unwrap();
            s.polyline(
                &run,
                if state == Some(true) {
                    BLACK
                } else {
                    BLACK_DOTTED
                },
            );
            run = vec![last];
        }
        state = Some(a);
        run.push(pt(*x));
    }
    if let Some(a) = state {
        s.polyline(&run, if a { BLACK } else { BLACK_DOTTED });
    }
}

// ---------------------------------------------------------------- solve

fn solve(
    common: &Common,
    file: &FileConfig,
    x0_re: Option<f64>,
    x0_im: Option<f64>,
    half_width: Option<i64>,
) -> CliResult<()> {
    let p = common.params()?;
    let d = default_x0(&p);
    let x0 = C64::new(
        pick(x0_re, &file.x0_re, d.re),
        pick(x0_im, &file.x0_im, d.im),
    );
    let half = pick(half_width, &file.half_width, default_half_width(&p));
    if half < 3 {
        return Err(usage("--half-width must be at least 3"));
    }
    let run = solve_decaying_from(x0, &p, common.tol, half)?;
    let sol = normalize_max(&run.solution)?;
    let residual = sol.max_residual(&p, Some(0));

    let mut out = OutDir::create(&common.out_dir)?;
    if common.formats.csv {
        let mut t = Table::new(&["m", "re_x", "im_x", "re_y", "im_y", "abs_y"]);
        for m in sol.indices() {
            let (x, y) = (sol.x(m), sol.get(m).unwrap());
            t.row(&[
                m.to_string(),
                num(x.re),
                num(x.im),
                num(y.re),
                num(y.im),
                num(y.norm()),
            ]);
        }
        out.write("solution.csv", &t.into_string())?;
    }
    let summary = json!({
        "x0": cx(x0),
        "resonant": resonance_index(x0, &p).is_some(),
        "domain": [sol.first_index, sol.last_index],
        "points": sol.values.len(),
        "doublings": run.doublings,
        "last_change": run.change,
        "max_residual_off_pin": residual,
    });
    if common.formats.json {
        out.write_json("solution.json", &summary)?;
    }
    if common.formats.svg {
        let re: Vec<(f64, f64)> = sol
            .indices()
            .map(|m| (m as f64, sol.get(m).unwrap().re))
            .collect();
        let im: Vec<(f64, f64)> = sol
            .indices()
            .map(|m| (m as f64, sol.get(m).unwrap().im))
            .collect();
        let ab: Vec<(f64, f64)> = sol
            .indices()
            .map(|m| (m as f64, sol.get(m).unwrap().norm()))
            .collect();
        let mut s = Svg::new(Frame::around(re.iter().chain(&im).chain(&ab).copied()));
        s.axes(
            &format!("Lattice solution, ε = {}, x₀ = {:.4}", p.epsilon(), x0),
            "m",
            "y_m",
        );
        s.polyline(&re, BLACK);
        s.polyline(&im, RED);
        s.polyline(&ab, BLUE_DASHED);
        s.legend(&[("Re y", BLACK), ("Im y", RED), ("|y|", BLUE_DASHED)]);
        out.write("profile.svg", &s.finish())?;
    }
    let mut cfg = common.to_file();
    cfg.x0_re = Some(x0.re);
    cfg.x0_im = Some(x0.im);
    cfg.half_width = Some(half);
    println!(
        "solve: {} points on [{}, {}] after {} doublings",
        sol.values.len(),
        sol.first_index,
        sol.last_index,
        run.doublings
    );
    out.finish("solve", to_value(&cfg), summary)
}

// ---------------------------------------------------------------- compare

fn compare(
    common: &Common,
    file: &FileConfig,
    x0_re: Option<f64>,
    x0_im: Option<f64>,
    epsilons: &Option<String>,
    exclusion: Option<f64>,
) -> CliResult<()> {
    let base = common.params()?;
    let d = default_x0(&base);
    let x0 = C64::new(
        pick(x0_re, &file.x0_re, d.re),
        pick(x0_im, &file.x0_im, d.im),
    );
    let eps_list = pick_f64_list(
        epsilons,
        &file.epsilons,
        &[0.05, 0.025, 0.0125],
        "--epsilons",
    )?;
    let exclusion = pick(exclusion, &file.exclusion, 0.5);
    if !(exclusion >= 0.0) {
        return Err(usage("--exclusion must be non-negative"));
    }
    if eps_list.is_empty() {
        return Err(usage("--epsilons needs at least one value"));
    }
    let ladder: Vec<Params> = eps_list
        .iter()
        .map(|&e| common.params_with(e, common.sigma))
        .collect::<CliResult<_>>()?;
    for p in &ladder {
        if resonance_index(x0, p).is_none() {
            return Err(usage(format!(
                "x0 = {x0} is not on a resonant lattice for ε = {}; the collapsed transseries needs (x0 + 2/σ²)/(σε) to be an integer",
                p.epsilon()
            )));
        }
    }

    let mut rows = Vec::new();
    let mut last_samples = Vec::new();
    for p in &ladder {
        let st = StokesStructure::new(p)?;
        let sol = solve_decaying(x0, p, common.tol)?;
        let rep = compare_transseries_in(&st, &sol, exclusion)?;
        let ymax = rep.samples.iter().map(|r| r.2.norm()).fold(0.0, f64::max);
        let worst = rep
            .samples
            .iter()
            .max_by(|a, b| {
                (a.2 - rep.scale * a.3)
                    .norm()
                    .total_cmp(&(b.2 - rep.scale * b.3).norm())
            })
            .map(|r| r.1)
            .unwrap_or(x0);
        let tp_dist = p
            .turning_points()
            .iter()
            .map(|t| (t - worst).norm())
            .fold(f64::INFINITY, f64::min);
        rows.push(json!({
            "epsilon": p.epsilon(),
            "scale": cx(rep.scale),
            "sup_relative": rep.sup_relative,
            "rms_relative": rep.rms_relative,
            "points": rep.points,
            "worst_x": cx(worst),
            "worst_turning_point_distance": tp_dist,
            "turning_point_dominated": tp_dist < 0.5 / p.sigma().norm_sqr(),
        }));
        last_samples = rep
            .samples
            .iter()
            .map(|r| (r.1, r.2 / ymax, rep.scale * r.3 / ymax))
            .collect();
    }
    let sups: Vec<f64> = rows
        .iter()
        .map(|r| r["sup_relative"].as_f64().unwrap())
        .collect();
    let monotone = sups.windows(2).all(|w| w[1] < w[0]);

    let mut out = OutDir::create(&common.out_dir)?;
    if common.formats.csv {
        let mut t = Table::new(&[
            "epsilon",
            "sup_relative",
            "rms_relative",
            "points",
            "re_scale",
            "im_scale",
            "re_worst_x",
            "im_worst_x",
            "turning_point_dominated",
        ]);
        for r in &rows {
            let f = |k: &str| r[k].as_f64().unwrap();
            let c = |k: &str, i: usize| r[k][i].as_f64().unwrap();
            t.row(&[
                num(f("epsilon")),
                num(f("sup_relative")),
                num(f("rms_relative")),
                r["points"].to_string(),
                num(c("scale", 0)),
                num(c("scale", 1)),
                num(c("worst_x", 0)),
                num(c("worst_x", 1)),
                (r["turning_point_dominated"].as_bool().unwrap() as u8).to_string(),
            ]);
        }
        out.write("compare.csv", &t.into_string())?;
    }
    let summary =
        json!({"x0": cx(x0), "exclusion": exclusion, "monotone": monotone, "ladder": rows});
    if common.formats.json {
        out.write_json("compare.json", &summary)?;
    }
    if common.formats.svg {
        let num_pts: Vec<(f64, f64)> = last_samples.iter().map(|s| (s.0.re, s.1.re)).collect();
        let ts_pts: Vec<(f64, f64)> = last_samples.iter().map(|s| (s.0.re, s.2.re)).collect();
        let mut s = Svg::new(Frame::around(num_pts.iter().chain(&ts_pts).copied()));
        s.axes(
            &format!(
                "Lattice against transseries, ε = {}",
                eps_list.last().unwrap()
            ),
            "Re x",
            "Re y / max|y|",
        );
        for &q in &num_pts {
            s.circle(q, 1.8, r##"fill="none" stroke="#000""##);
        }
        for &q in &ts_pts {
            s.cross(q, 1.8, RED);
        }
        s.legend(&[("lattice (circles)", BLACK), ("transseries (crosses)", RED)]);
        out.write("compare.svg", &s.finish())?;
    }
    let mut cfg = common.to_file();
    cfg.x0_re = Some(x0.re);
    cfg.x0_im = Some(x0.im);
    cfg.epsilons = Some(crate::config::ListSpec::List(eps_list.clone()));
    cfg.exclusion = Some(exclusion);
    let shown: Vec<String> = sups.iter().map(|v| format!("{v:.3e}")).collect();
    println!(
        "compare: sup relative errors {} (monotone: {monotone})",
        shown.join(", ")
    );
    out.finish("compare", to_value(&cfg), summary)
}

// ---------------------------------------------------------------- smoothing

struct SmoothingFlags {
    arc: Option<usize>,
    points: Option<usize>,
    span: Option<f64>,
    base_chi: Option<f64>,
    compare_epsilon: Option<f64>,
}

/// One active arc of the Stokes curve between `(0,+)` and `(0,−)`.
///
/// Only this curve is offered: the multiplier is measured as
/// `(y − dominant series)/subdominant exponential`, which needs those two
/// to be the only exponentials in the solution near the scan. Near the
/// outer arcs `(0,+)` is present as well and swamps the measurement.
fn active_arc(p: &Params, arc: usize) -> CliResult<CurveSpec> {
    let st = StokesStructure::new(p)?;
    let pair = CurvePair::origin(0);
    let pts = st
        .origin_arcs
        .get(arc)
        .ok_or_else(|| usage(format!("--arc must be 0 or 1 (got {arc})")))?
        .clone();
    Ok(CurveSpec {
        kind: CurveKind::Stokes,
        labels: Labels::Pair(pair),
        active_mask: vec![true; pts.len()],
        points: pts,
        diagnostic: None,
    })
}

fn offsets(span: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| -span + 2.0 * span * k as f64 / (n - 1) as f64)
        .collect()
}

fn smoothing(common: &Common, file: &FileConfig, f: SmoothingFlags) -> CliResult<()> {
    let p = common.params()?;
    let arc = pick(f.arc, &file.arc, 0);
    let n = pick(f.points, &file.points, 25);
    if n < 5 {
        return Err(usage("--points must be at least 5"));
    }
    let span = pick(f.span, &file.span, 0.4 * (p.epsilon() / 0.05).sqrt());
    if !(span > 0.0) {
        return Err(usage("--span must be positive"));
    }
    let defaults = MultiplierOptions::default();
    let base_chi = pick(f.base_chi, &file.base_chi, defaults.base_singulant);
    if !(base_chi > 0.0) {
        return Err(usage("--base-chi must be positive"));
    }
    let compare_eps = f.compare_epsilon.or(file.compare_epsilon);
    let opt = MultiplierOptions {
        base_singulant: base_chi,
        ..defaults
    };

    let run = |q: &Params, sp: f64| -> CliResult<(CurveSpec, MultiplierProfile)> {
        let curve = active_arc(q, arc)?;
        let prof = multiplier_profile_with(&curve, &offsets(sp, n), q, &opt)?;
        Ok((curve, prof))
    };
    let (curve, prof) = run(&p, span)?;
    let second = match compare_eps {
        Some(e) => {
            let q = common.params_with(e, common.sigma)?;
            let (_, pr) = run(&q, span * (e / p.epsilon()).sqrt())?;
            Some((e, pr))
        }
        None => None,
    };
    let jump = prof.fitted_jump.norm();
    let rms_over_jump = prof.fit_residual / jump;

    let mut out = OutDir::create(&common.out_dir)?;
    if common.formats.csv {
        let mut t = Table::new(&[
            "offset",
            "arg_chi",
            "re_M",
            "im_M",
            "erf_fit",
            "xi",
            "truncation",
            "re_fit",
            "im_fit",
        ]);
        for s in &prof.samples {
            let m = prof.model(s.xi);
            let shape = ((m - prof.fitted_offset) / prof.fitted_jump).re;
            t.row(&[
                num(s.offset),
                num(s.arg_chi),
                num(s.multiplier.re),
                num(s.multiplier.im),
                num(shape),
                num(s.xi),
                s.truncation.to_string(),
                num(m.re),
                num(m.im),
            ]);
        }
        out.write("profile.csv", &t.into_string())?;
    }
    let Labels::Pair(pair) = curve.labels else {
        unreachable!()
    };
    let mut summary = json!({
        "arc": arc,
        "pair": [pair.first.to_string(), pair.second.to_string()],
        "dominant": prof.dominant.to_string(),
        "base_x": cx(prof.base),
        "chi_base": cx(prof.chi_base),
        "fitted_jump": cx(prof.fitted_jump),
        "jump_modulus": jump,
        "fitted_offset": cx(prof.fitted_offset),
        "fitted_center": prof.fitted_center,
        "fitted_width_arg_chi": prof.fitted_width,
        "fitted_width_scaled": prof.fitted_width_scaled,
        "rms_over_jump": rms_over_jump,
    });
    if let Some((e, pr)) = &second {
        let ratio = pr.fitted_width / prof.fitted_width;
        summary["width_scaling"] = json!({
            "compare_epsilon": e,
            "width_ratio": ratio,
            "predicted_ratio": (e / p.epsilon()).sqrt(),
        });
    }
    if common.formats.json {
        out.write_json("smoothing.json", &summary)?;
    }
    if common.formats.svg {
        let re: Vec<(f64, f64)> = prof
            .samples
            .iter()
            .map(|s| (s.xi, s.multiplier.re))
            .collect();
        let im: Vec<(f64, f64)> = prof
            .samples
            .iter()
            .map(|s| (s.xi, s.multiplier.im))
            .collect();
        let fine: Vec<f64> = {
            let (a, b) = (re.first().unwrap().0, re.last().unwrap().0);
            let (a, b) = (a.min(b), a.max(b));
            (0..=200).map(|k| a + (b - a) * k as f64 / 200.0).collect()
        };
        let fit_re: Vec<(f64, f64)> = fine.iter().map(|&xi| (xi, prof.model(xi).re)).collect();
        let fit_im: Vec<(f64, f64)> = fine.iter().map(|&xi| (xi, prof.model(xi).im)).collect();
        let mut s = Svg::new(Frame::around(
            re.iter().chain(&im).chain(&fit_re).chain(&fit_im).copied(),
        ));
        s.axes(
            &format!(
                "Stokes multiplier across the origin curve, ε = {}",
                p.epsilon()
            ),
            "ξ = √(|χ|/ε)·Arg χ",
            "M",
        );
        s.polyline(&fit_re, BLACK);
        s.polyline(&fit_im, RED);
        for &q in &re {
            s.circle(q, 2.5, r##"fill="#000""##);
        }
        for &q in &im {
            s.circle(q, 2.5, r##"fill="#c00""##);
        }
        s.legend(&[("Re M and erf fit", BLACK), ("Im M and erf fit", RED)]);
        out.write("smoothing.svg", &s.finish())?;
    }
    let mut cfg = common.to_file();
    cfg.arc = Some(arc);
    cfg.points = Some(n);
    cfg.span = Some(span);
    cfg.base_chi = Some(base_chi);
    cfg.compare_epsilon = compare_eps;
    println!(
        "smoothing: |jump| {jump:.4} (2π = {:.4}), rms/jump {rms_over_jump:.3e}",
        2.0 * PI
    );
    out.finish("smoothing", to_value(&cfg), summary)
}

// ---------------------------------------------------------------- lines

fn lines(common: &Common, file: &FileConfig, sigma_args: &Option<String>) -> CliResult<()> {
    let base = common.params()?;
    let window = common.window_for(&base);
    let args = pick_f64_list(
        sigma_args,
        &file.sigma_args,
        &[0.0, PI / 12.0, PI / 6.0, PI / 4.0],
        "--sigma-args",
    )?;
    if args.is_empty() {
        return Err(usage("--sigma-args needs at least one value"));
    }
    let modulus = common.sigma.norm();
    let mut out = OutDir::create(&common.out_dir)?;
    let mut table = Table::new(&[
        "line",
        "arg_sigma",
        "m",
        "re_x",
        "im_x",
        "re_y",
        "im_y",
        "abs_y",
        "envelope",
        "region",
    ]);
    let mut summaries = Vec::new();
    let mut warnings = Vec::new();
    for (k, &arg) in args.iter().enumerate() {
        let p = common.params_with(common.epsilon, C64::from_polar(modulus, arg))?;
        // A degenerate structure leaves the solve meaningful; only the
        // envelope and region columns are lost.
        let st = match StokesStructure::new(&p)
            .and_then(|st| st.classify(st.reference_point()).map(|_| st))
        {
            Ok(st) => Some(st),
            Err(
                e @ (discrete_airy::Error::DegenerateStructure { .. }
                | discrete_airy::Error::RegionsUnavailable { .. }),
            ) => {
                let msg = format!("line {k} (Arg σ = {arg}): {e}; envelope and regions omitted");
                eprintln!("warning: {msg}");
                warnings.push(msg);
                None
            }
            Err(e) => return Err(e.into()),
        };
        let x0 = default_x0(&p);
        let sol = normalize_max(&solve_decaying(x0, &p, common.tol)?)?;
        let inside: Vec<i64> = sol
            .indices()
            .filter(|&m| window.contains(sol.x(m)))
            .collect();
        if inside.is_empty() {
            let msg = format!("line {k} (Arg σ = {arg}) has no lattice point inside the window");
            eprintln!("warning: {msg}");
            warnings.push(msg);
        }
        // Envelope prediction up to a constant, fixed by least squares on log|y|.
        let mut rows = Vec::new();
        for &m in &inside {
            let x = sol.x(m);
            let y = sol.get(m).unwrap();
            let env = st.as_ref().and_then(|st| envelope_log_in(st, x).ok());
            let region = match &st {
                Some(st) => st
                    .classify(x)
                    .map(|r| r.0.name().to_string())
                    .unwrap_or_else(|_| "boundary".into()),
                None => String::new(),
            };
            rows.push((m, x, y, env, region));
        }
        // Medians, since log|y| dips at every zero of an oscillating solution.
        let fit: Vec<f64> = rows
            .iter()
            .filter(|r| r.2.norm() > 1e-12)
            .filter_map(|r| r.3.map(|e| r.2.norm().ln() - e))
            .collect();
        let offset = median(fit.clone()).unwrap_or(0.0);
        let dev = median(fit.iter().map(|d| (d - offset).abs()).collect()).unwrap_or(0.0);
        for (m, x, y, env, region) in &rows {
            table.row(&[
                k.to_string(),
                num(arg),
                m.to_string(),
                num(x.re),
                num(x.im),
                num(y.re),
                num(y.im),
                num(y.norm()),
                env.map(|e| num((e + offset).exp())).unwrap_or_default(),
                region.clone(),
            ]);
        }
        summaries.push(json!({
            "line": k,
            "arg_sigma": arg,
            "x0": cx(x0),
            "points_in_window": rows.len(),
            "envelope_log_offset": offset,
            "median_log_deviation": dev,
        }));
        if common.formats.svg {
            let ab: Vec<(f64, f64)> = rows.iter().map(|r| (r.0 as f64, r.2.norm())).collect();
            let env: Vec<(f64, f64)> = rows
                .iter()
                .filter_map(|r| r.3.map(|e| (r.0 as f64, (e + offset).exp())))
                .collect();
            let mut s = Svg::new(Frame::around(ab.iter().chain(&env).copied()));
            s.axes(
                &format!("Lattice line Arg σ = {arg}, ε = {}", p.epsilon()),
                "m",
                "|y_m|",
            );
            s.polyline(&ab, BLACK);
            s.polyline(&env, BLUE_DASHED);
            s.legend(&[("|y|", BLACK), ("envelope", BLUE_DASHED)]);
            out.write(&format!("lines_{k}.svg"), &s.finish())?;
        }
    }
    if common.formats.csv {
        out.write("lines.csv", &table.into_string())?;
    }
    let summary = json!({"lines": summaries, "warnings": warnings});
    if common.formats.json {
        out.write_json("lines.json", &summary)?;
    }
    let mut cfg = common.to_file();
    cfg.sigma_args = Some(crate::config::ListSpec::List(args.clone()));
    println!("lines: {} lattice lines", args.len());
    out.finish("lines", to_value(&cfg), summary)
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

// ---------------------------------------------------------------- lateorder

fn lateorder(
    common: &Common,
    file: &FileConfig,
    x_re: Option<f64>,
    x_im: Option<f64>,
    saddle: &Option<String>,
    kmax: Option<usize>,
) -> CliResult<()> {
    let p = common.params()?;
    let x = C64::new(pick(x_re, &file.x_re, 2.0), pick(x_im, &file.x_im, 0.0));
    let id = parse_saddle(&pick(saddle.clone(), &file.saddle, "0,+".to_string()))?;
    let kmax = pick(kmax, &file.kmax, 30);
    if kmax < 16 {
        return Err(usage("--kmax must be at least 16 for the late-order fit"));
    }
    let series = series_coeffs(x, id, kmax, &p)?;
    if !series.stable {
        eprintln!(
            "warning: coefficients cut at k = {} (stable range of the series kernel)",
            series.kmax()
        );
    }
    let fit = fit_lateorder(&series)?;
    let estimates: Vec<C64> = std::iter::once(fit.chi_est).chain(fit.secondary).collect();
    let rel = |a: C64, b: C64| (a - b).norm() / b.norm();

    // Closed-form singulants to every nearby saddle, ranked by agreement with the fit.
    let mut closed = Vec::new();
    for s in id.s - 3..=id.s + 3 {
        for other in [SaddleId::plus(s), SaddleId::minus(s)] {
            if other == id {
                continue;
            }
            let chi = singulant(x, CurvePair::new(id, other), &p, ST)?;
            let err = estimates
                .iter()
                .map(|&e| rel(e, chi))
                .fold(f64::INFINITY, f64::min);
            closed.push((err, other, chi));
        }
    }
    closed.sort_by(|a, b| a.0.total_cmp(&b.0));
    let adjacency = StokesStructure::new(&p).and_then(|st| st.adjacency(x));
    let predicted = match &adjacency {
        Ok(adj) => {
            let best = adj
                .neighbours(id)
                .into_iter()
                .map(|o| (o, singulant(x, CurvePair::new(id, o), &p, ST)))
                .filter_map(|(o, c)| c.ok().map(|c| (o, c)))
                .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()));
            json!({
                "inside_higher_order_region": adj.inside,
                "nearest_adjacent": best.map(|(o, c)| json!({"saddle": o.to_string(), "chi": cx(c), "relative_error": estimates.iter().map(|&e| rel(e, c)).fold(f64::INFINITY, f64::min)})),
            })
        }
        Err(e) => json!({"error": e.to_string()}),
    };
    let trunc = optimal_truncation(fit.chi_est, &p);

    let mut out = OutDir::create(&common.out_dir)?;
    if common.formats.csv {
        let mut t = Table::new(&["k", "re_A", "im_A"]);
        for (k, a) in series.coeffs.iter().enumerate() {
            t.row(&[k.to_string(), num(a.re), num(a.im)]);
        }
        out.write("coefficients.csv", &t.into_string())?;
    }
    let summary = json!({
        "x": cx(x),
        "saddle": id.to_string(),
        "kmax": series.kmax(),
        "stable": series.stable,
        "fit": {
            "chi": cx(fit.chi_est),
            "gamma": fit.gamma_est,
            "prefactor": cx(fit.prefactor_est),
            "secondary_chi": fit.secondary.map(cx),
            "spread": if fit.spread.is_finite() { json!(fit.spread) } else { Value::Null },
        },
        "closest_closed_forms": closed.iter().take(4).map(|(e, o, c)| json!({"saddle": o.to_string(), "chi": cx(*c), "relative_error": e})).collect::<Vec<_>>(),
        "adjacency": predicted,
        "optimal_truncation": {"k": trunc.k, "omega": trunc.omega},
    });
    if common.formats.json {
        out.write_json("lateorder.json", &summary)?;
    }
    if common.formats.svg {
        let pts: Vec<(f64, f64)> = series
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > 0.0)
            .map(|(k, a)| (k as f64, a.norm().log10()))
            .collect();
        let mut s = Svg::new(Frame::around(pts.iter().copied()));
        s.axes(
            &format!("Series coefficients of {id} at x = {x}"),
            "k",
            "log₁₀|A_k|",
        );
        s.polyline(&pts, BLACK);
        for &q in &pts {
            s.circle(q, 2.0, r##"fill="#000""##);
        }
        out.write("lateorder.svg", &s.finish())?;
    }
    let mut cfg = common.to_file();
    cfg.x_re = Some(x.re);
    cfg.x_im = Some(x.im);
    cfg.saddle = Some(format!("{},{}", id.s, id.branch.symbol()));
    cfg.kmax = Some(kmax);
    println!(
        "lateorder: χ ≈ {:.6}, γ ≈ {:.4}; closest closed form {} (rel err {:.2e})",
        fit.chi_est, fit.gamma_est, closed[0].1, closed[0].0
    );
    out.finish("lateorder", to_value(&cfg), summary)
}

// ---------------------------------------------------------------- paths

fn paths(
    common: &Common,
    file: &FileConfig,
    x_re: Option<f64>,
    x_im: Option<f64>,
) -> CliResult<()> {
    let p = common.params()?;
    let x = C64::new(pick(x_re, &file.x_re, 2.0), pick(x_im, &file.x_im, 0.0));
    p.check_off_turning_points(x)?;
    let mut traced = Vec::new();
    let mut failures = Vec::new();
    for s in -common.smax..=common.smax {
        for id in [SaddleId::plus(s), SaddleId::minus(s)] {
            for (half, hname) in [(Half::Right, "right"), (Half::Left, "left")] {
                match descent_path(x, id, &p, half) {
                    Ok(path) => traced.push((hname, path)),
                    Err(e) => failures.push(
                        json!({"saddle": id.to_string(), "half": hname, "error": e.to_string()}),
                    ),
                }
            }
        }
    }
    if traced.is_empty() {
        return Err(usage(format!("no descent path could be traced at x = {x}")));
    }
    let exact = match exact_eval_detailed(x, &p) {
        Ok(v) => {
            let method = match v.method {
                Evaluation::Periodic { height, nodes } => {
                    json!({"periodic": {"height": height, "nodes": nodes}})
                }
                Evaluation::Saddles { theta, route } => json!({"saddles": {
                    "theta": theta,
                    "route": route.iter().map(|(id, a, b)| json!({"saddle": id.to_string(), "from": format!("{a:?}"), "to": format!("{b:?}")})).collect::<Vec<_>>(),
                }}),
            };
            json!({"value": cx(v.value), "method": method})
        }
        Err(e) => json!({"error": e.to_string()}),
    };

    let mut out = OutDir::create(&common.out_dir)?;
    if common.formats.csv {
        let mut t = Table::new(&["s", "branch", "re_z", "im_z", "re_phi", "im_phi", "half"]);
        for (hname, path) in &traced {
            for (s, b, z, phi) in path_rows(path, x, &p) {
                t.row(&[
                    s.to_string(),
                    b.to_string(),
                    num(z.re),
                    num(z.im),
                    num(phi.re),
                    num(phi.im),
                    hname.to_string(),
                ]);
            }
        }
        out.write("paths.csv", &t.into_string())?;
    }
    let summary = json!({
        "x": cx(x),
        "paths": traced.iter().map(|(h, path)| json!({
            "saddle": path.saddle.to_string(),
            "half": h,
            "points": path.points.len(),
            "valley": format!("{:?}", path.valley),
            "phase_at_saddle": cx(path.phase_at_saddle),
        })).collect::<Vec<_>>(),
        "failures": failures,
        "exact": exact,
    });
    if common.formats.json {
        out.write_json("paths.json", &summary)?;
    }
    if common.formats.svg {
        let all: Vec<(f64, f64)> = traced
            .iter()
            .flat_map(|(_, path)| path.points.iter().map(|z| pt(*z)))
            .collect();
        let mut s = Svg::new(Frame::around(all.iter().copied()));
        s.axes(
            &format!("Steepest-descent paths at x = {x}"),
            "Re z",
            "Im z",
        );
        for (_, path) in &traced {
            let style = if path.saddle.branch == Branch::Plus {
                BLACK
            } else {
                RED
            };
            s.polyline(
                &path.points.iter().map(|z| pt(*z)).collect::<Vec<_>>(),
                style,
            );
            s.circle(pt(path.points[0]), 3.0, WHITE_DOT);
        }
        s.legend(&[("(s,+) paths", BLACK), ("(s,−) paths", RED)]);
        out.write("paths.svg", &s.finish())?;
    }
    let mut cfg = common.to_file();
    cfg.x_re = Some(x.re);
    cfg.x_im = Some(x.im);
    println!(
        "paths: {} half-paths traced, {} failed",
        traced.len(),
        failures.len()
    );
    out.finish("paths", to_value(&cfg), summary)
}
