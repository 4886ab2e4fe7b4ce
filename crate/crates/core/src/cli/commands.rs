use std::io::Write;

use rayon::prelude::*;
use serde::Deserialize;
use serde_json::Value;

use super::{Command, CounterexampleArgs, ExtremalArgs, OptimizeArgs, Outcome, RunConfig, SweepArgs, TransportCmd, VerifyArgs, VIOLATION_LABEL};
use crate::bodies::{
    extremal_body_nd, grunbaum_verify, min_cut_direction, EvalConfig, ExtremalBodyParams, MeasureClass, PolytopeSpec,
    WeightedBody,
};
use crate::error::{Error, Result};
use crate::gaussian::ehrhard_grunbaum_bound;
use crate::measure1d::{Density1D, DensitySpec};
use crate::report::{fmt_sig, write_csv, CutReport, EQUALITY_AFFINITY_TOL};
use crate::sconcave::{
    c_np_bound, classic_grunbaum_bound, extremal_density_1d, s_grunbaum_bound, verify_no_bound, verify_s_cut,
    ExtremalParams,
};
use crate::transport::{
    even_transport_gaussian_test, is_gamma_transport_concave, measure_from_convex_map, monge_ampere_residual,
    transport_grunbaum_verify, MapSpec,
};

pub(super) fn dispatch(cmd: &Command, cfg: &RunConfig, out: &mut Vec<u8>, err: &mut dyn Write) -> Result<Outcome> {
    match cmd {
        Command::Bound(a) => {
            let v = match a.class.as_str() {
                "lebesgue" => classic_grunbaum_bound(a.n.ok_or_else(|| Error::invalid("lebesgue needs --n"))?)?,
                "gaussian" => ehrhard_grunbaum_bound(a.t)?.value(),
                "sconcave" => match (a.s, a.p, a.n) {
                    (Some(s), None, _) => s_grunbaum_bound(s)?,
                    (None, Some(p), Some(n)) => c_np_bound(n, p)?,
                    _ => return Err(Error::invalid("sconcave needs --s, or --p together with --n")),
                },
                c => return Err(Error::invalid(format!("unknown class {c}; use lebesgue, gaussian or sconcave"))),
            };
            writeln!(out, "{}", fmt_sig(v))?;
            Ok(Outcome::Pass)
        }
        Command::Verify(a) => verify(a, cfg, out, err),
        Command::Extremal(a) => extremal(a, cfg, out, err),
        Command::Counterexample(a) => counterexample(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::OptimizeDirection(a) => optimize(a, cfg, out, err),
        Command::Transport(t) => transport(t, cfg, out, err),
    }
}

/// Inline JSON when the argument starts with `{` or `[`, else a file path.
fn read_json(arg: &str) -> Result<Value> {
    let t = arg.trim_start();
    let text = if t.starts_with('{') || t.starts_with('[') {
        t.to_string()
    } else {
        std::fs::read_to_string(arg)?
    };
    Ok(serde_json::from_str(&text)?)
}

fn parse_vec(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| Error::invalid(format!("bad number {x:?} in {s:?}"))))
        .collect()
}

fn eval_config(cfg: &RunConfig, monte_carlo: bool) -> EvalConfig {
    EvalConfig {
        mc_samples: cfg.mc_samples,
        seed: cfg.seed,
        force_monte_carlo: monte_carlo,
        ..EvalConfig::default()
    }
}

/// Records the run seed and re-derives the equality verdict at `tol`.
fn finish_row(r: &mut CutReport, cfg: &RunConfig) {
    r.oracle.seed.get_or_insert(cfg.seed);
    if !r.oracle.is_monte_carlo() {
        r.equality = r.gap.abs() <= cfg.tol && r.affinity.is_none_or(|a| a <= EQUALITY_AFFINITY_TOL);
    }
}

fn describe(r: &CutReport) -> String {
    let mut s = format!(
        "{} {} u={:?}: measured={} bound={} gap={} equality={}",
        r.body_id,
        r.class,
        r.direction,
        fmt_sig(r.measured),
        fmt_sig(r.bound),
        fmt_sig(r.gap),
        r.equality
    );
    if let Some(n) = &r.note {
        s.push_str(&format!(" ({n})"));
    }
    s
}

fn violations(rows: &[CutReport], cfg: &RunConfig, err: &mut dyn Write) -> Result<Outcome> {
    let bad: Vec<&CutReport> = rows.iter().filter(|r| r.violates(cfg.tol)).collect();
    for r in &bad {
        writeln!(err, "violation: {}: {VIOLATION_LABEL}", describe(r))?;
    }
    Ok(if bad.is_empty() {
        Outcome::Pass
    } else {
        Outcome::Fail(format!(
            "{} row(s) fall below the bound by more than {}; {VIOLATION_LABEL}",
            bad.len(),
            fmt_sig(cfg.tol)
        ))
    })
}

#[derive(Deserialize)]
struct LineInput {
    measure: DensitySpec,
    #[serde(default)]
    interval: Option<[Option<f64>; 2]>,
}

enum VerifyInput {
    Bodies(Vec<PolytopeSpec>),
    Line(Density1D, f64, f64),
}

fn verify_input(v: Value) -> Result<VerifyInput> {
    match &v {
        Value::Array(_) => Ok(VerifyInput::Bodies(serde_json::from_value(v)?)),
        Value::Object(m) if m.contains_key("measure") => {
            let line: LineInput = serde_json::from_value(v)?;
            let [a, b] = line.interval.unwrap_or([None, None]);
            Ok(VerifyInput::Line(
                line.measure.build()?,
                a.unwrap_or(f64::NEG_INFINITY),
                b.unwrap_or(f64::INFINITY),
            ))
        }
        Value::Object(m) if m.contains_key("kind") => {
            let spec: DensitySpec = serde_json::from_value(v)?;
            Ok(VerifyInput::Line(spec.build()?, f64::NEG_INFINITY, f64::INFINITY))
        }
        Value::Object(_) => Ok(VerifyInput::Bodies(vec![serde_json::from_value(v)?])),
        _ => Err(Error::invalid("input must be a body, an array of bodies or a line measure")),
    }
}

fn axes(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect()
}

fn verify(a: &VerifyArgs, cfg: &RunConfig, out: &mut Vec<u8>, err: &mut dyn Write) -> Result<Outcome> {
    let direction = a.direction.as_deref().map(parse_vec).transpose()?;
    let mut rows = match verify_input(read_json(&a.input)?)? {
        VerifyInput::Bodies(specs) => {
            let class = MeasureClass::parse(&a.class)?;
            let ecfg = eval_config(cfg, a.monte_carlo);
            let bodies: Vec<WeightedBody> = specs
                .into_iter()
                .enumerate()
                .map(|(i, mut s)| {
                    s.id.get_or_insert_with(|| format!("body{i}"));
                    WeightedBody::from_spec(&s)
                })
                .collect::<Result<_>>()?;
            let jobs: Vec<(usize, Vec<f64>)> = bodies
                .iter()
                .enumerate()
                .flat_map(|(i, w)| {
                    let dirs = direction.clone().map(|d| vec![d]).unwrap_or_else(|| axes(w.dim()));
                    dirs.into_iter().map(move |d| (i, d))
                })
                .collect();
            jobs.par_iter()
                .map(|(i, u)| grunbaum_verify(&bodies[*i], u, class, &ecfg))
                .collect::<Result<Vec<_>>>()?
        }
        VerifyInput::Line(mu, lo, hi) => {
            let report = match a.class.split_once(':') {
                None if a.class == "cdf" => mu.verify_cdf_grunbaum(lo, hi)?,
                None if a.class == "transport" => transport_grunbaum_verify(&mu, lo, hi)?,
                Some(("sconcave", s)) => {
                    let s: f64 = s.parse().map_err(|_| Error::invalid(format!("bad s in class {}", a.class)))?;
                    verify_s_cut(&mu, s)?
                }
                _ => {
                    return Err(Error::invalid(format!(
                        "class {} does not apply to a line measure; use cdf, transport or sconcave:s",
                        a.class
                    )))
                }
            };
            vec![report]
        }
    };
    for r in &mut rows {
        finish_row(r, cfg);
        writeln!(err, "{}", describe(r))?;
    }
    write_csv(&mut *out, &rows)?;
    violations(&rows, cfg, err)
}

fn extremal(a: &ExtremalArgs, cfg: &RunConfig, out: &mut Vec<u8>, err: &mut dyn Write) -> Result<Outcome> {
    if !(a.s > -1.0) {
        return Err(Error::domain(format!(
            "s = {} <= -1: no positive bound exists there, so there is no equality case (see `counterexample`)",
            a.s
        )));
    }
    let (body, mut report) = if a.n == 1 {
        let params = ExtremalParams::for_s(a.s, a.a, a.r1, a.big_r)?;
        let mu = extremal_density_1d(a.s, &params)?;
        let spec = DensitySpec::Extremal {
            s: a.s,
            a: a.a,
            r1: a.r1,
            big_r: params.big_r,
        };
        (serde_json::to_value(spec)?, verify_s_cut(&mu, a.s)?)
    } else {
        let params = ExtremalBodyParams {
            a: a.a,
            r1: a.r1,
            big_r: a.big_r,
            half_width: a.half_width,
            skew: a.skew.as_deref().map(parse_vec).transpose()?,
            ..ExtremalBodyParams::new(a.s, a.n)
        };
        let w = extremal_body_nd(&params)?;
        let ecfg = eval_config(cfg, a.monte_carlo);
        let r = grunbaum_verify(&w, &axes(a.n)[0], MeasureClass::SConcave(a.s), &ecfg)?;
        (serde_json::to_value(w.to_spec())?, r)
    };
    finish_row(&mut report, cfg);
    writeln!(err, "{}", describe(&report))?;
    let doc = serde_json::json!({ "body": body, "report": report });
    serde_json::to_writer_pretty(&mut *out, &doc)?;
    writeln!(out)?;
    let reproduced = if report.oracle.is_monte_carlo() {
        report.within_noise(3.0)
    } else {
        report.gap.abs() <= cfg.tol
    };
    if report.violates(cfg.tol) {
        return violations(std::slice::from_ref(&report), cfg, err);
    }
    Ok(if reproduced {
        Outcome::Pass
    } else {
        Outcome::Fail(format!("equality case not reproduced: gap {}", fmt_sig(report.gap)))
    })
}

fn write_table(out: &mut Vec<u8>, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn counterexample(a: &CounterexampleArgs, out: &mut Vec<u8>) -> Result<Outcome> {
    let ks: Vec<u64> = match &a.k {
        Some(s) => s
            .split(',')
            .map(|x| x.trim().parse().map_err(|_| Error::invalid(format!("bad k {x:?}"))))
            .collect::<Result<_>>()?,
        None => (1..=6).map(|e| 10u64.pow(e)).collect(),
    };
    let rep = verify_no_bound(a.p, &ks, a.threshold)?;
    let rows: Vec<Vec<String>> = rep
        .rows
        .iter()
        .map(|r| vec![r.k.to_string(), fmt_sig(r.g), fmt_sig(r.left_mass), fmt_sig(r.closed_form_delta)])
        .collect();
    write_table(out, &strings(&["k", "g", "left_mass", "closed_form_delta"]), &rows)?;
    let worst = rep.rows.iter().map(|r| r.closed_form_delta).fold(0.0, f64::max);
    Ok(if !rep.decreasing {
        Outcome::Fail("left mass is not strictly decreasing in k".into())
    } else if worst > 1e-8 {
        Outcome::Fail(format!("closed forms and quadrature disagree by {}", fmt_sig(worst)))
    } else if rep.below_threshold == Some(false) {
        Outcome::Fail("last left mass is not below the threshold".into())
    } else {
        Outcome::Pass
    })
}

/// `lo:hi:step`, with values snapped to 12 decimals.
fn grid(spec: &str) -> Result<Vec<f64>> {
    let parts = parse_vec(&spec.replace(':', ","))?;
    let [lo, hi, step] = parts[..] else {
        return Err(Error::invalid(format!("grid {spec:?} must be lo:hi:step")));
    };
    if !(step > 0.0 && hi >= lo) {
        return Err(Error::invalid(format!("grid {spec:?} needs hi >= lo and step > 0")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12).collect())
}

fn sweep(a: &SweepArgs, out: &mut Vec<u8>) -> Result<Outcome> {
    match a.class.as_str() {
        "gaussian" => {
            let ts = grid(a.grid.as_deref().unwrap_or("0.01:1:0.01"))?;
            let ss = a.s_list.as_deref().map(parse_vec).transpose()?.unwrap_or_default();
            let s_bounds: Vec<f64> = ss.iter().map(|&s| s_grunbaum_bound(s)).collect::<Result<_>>()?;
            let mut header = strings(&["t", "gaussian_bound", "t_over_e"]);
            header.extend(ss.iter().map(|s| format!("s_bound({s})")));
            let mut rows = Vec::with_capacity(ts.len());
            let mut bad = Vec::new();
            for &t in &ts {
                let g = ehrhard_grunbaum_bound(t)?.value();
                let te = t / std::f64::consts::E;
                if g < te {
                    bad.push(t);
                }
                let mut row = vec![fmt_sig(t), fmt_sig(g), fmt_sig(te)];
                row.extend(s_bounds.iter().map(|&b| fmt_sig(b)));
                rows.push(row);
            }
            write_table(out, &header, &rows)?;
            Ok(if bad.is_empty() {
                Outcome::Pass
            } else {
                Outcome::Fail(format!("gaussian bound below t/e at t = {bad:?}; {VIOLATION_LABEL}"))
            })
        }
        "sconcave" => {
            let ss = grid(a.grid.as_deref().unwrap_or("-0.99:1:0.01"))?;
            let bs: Vec<f64> = ss.iter().map(|&s| s_grunbaum_bound(s)).collect::<Result<_>>()?;
            let rows: Vec<Vec<String>> = ss.iter().zip(&bs).map(|(&s, &b)| vec![fmt_sig(s), fmt_sig(b)]).collect();
            write_table(out, &strings(&["s", "s_bound"]), &rows)?;
            Ok(if bs.windows(2).all(|w| w[1] > w[0]) {
                Outcome::Pass
            } else {
                Outcome::Fail("s-bound is not increasing in s".into())
            })
        }
        c => Err(Error::invalid(format!("sweep class {c} unknown; use gaussian or sconcave"))),
    }
}

fn padded(u: &[f64]) -> Vec<String> {
    (0..4).map(|i| u.get(i).map(|&x| fmt_sig(x)).unwrap_or_default()).collect()
}

fn optimize(a: &OptimizeArgs, cfg: &RunConfig, out: &mut Vec<u8>, err: &mut dyn Write) -> Result<Outcome> {
    let mut spec: PolytopeSpec = serde_json::from_value(read_json(&a.input)?)?;
    spec.id.get_or_insert_with(|| "body0".into());
    let w = WeightedBody::from_spec(&spec)?;
    let class = MeasureClass::parse(&a.class)?;
    let search = min_cut_direction(&w, class, &eval_config(cfg, false))?;
    let best = search
        .starts
        .iter()
        .position(|s| s.direction == search.direction && s.value == search.value);
    let mut header = strings(&["start"]);
    header.extend((1..=4).map(|i| format!("s{i}")));
    header.extend((1..=4).map(|i| format!("u{i}")));
    header.extend(strings(&["value", "gap", "iterations", "converged", "best", "seed"]));
    let rows: Vec<Vec<String>> = search
        .starts
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let mut row = vec![k.to_string()];
            row.extend(padded(&s.start));
            row.extend(padded(&s.direction));
            row.extend([
                fmt_sig(s.value),
                fmt_sig(s.value - search.report.bound),
                s.iterations.to_string(),
                s.converged.to_string(),
                (best == Some(k)).to_string(),
                cfg.seed.to_string(),
            ]);
            row
        })
        .collect();
    write_table(out, &header, &rows)?;
    let mut report = search.report;
    finish_row(&mut report, cfg);
    let u: Vec<String> = search.direction.iter().map(|&x| fmt_sig(x)).collect();
    writeln!(
        err,
        "u* = ({}) value = {} gap = {}",
        u.join(", "),
        fmt_sig(search.value),
        fmt_sig(search.value - report.bound)
    )?;
    writeln!(err, "{}", describe(&report))?;
    violations(&[report], cfg, err)
}

fn density(arg: &str) -> Result<Density1D> {
    serde_json::from_value::<DensitySpec>(read_json(arg)?)?.build()
}

fn transport(t: &TransportCmd, cfg: &RunConfig, out: &mut Vec<u8>, err: &mut dyn Write) -> Result<Outcome> {
    match t {
        TransportCmd::Residual { map, lo, hi, points } => {
            let v = read_json(map)?;
            let kind = v.get("kind").and_then(Value::as_str).unwrap_or("").to_string();
            let m = serde_json::from_value::<MapSpec>(v)?.build()?;
            if !(lo < hi) || *points < 2 {
                return Err(Error::invalid("need lo < hi and at least 2 points"));
            }
            let grid: Vec<f64> = (0..*points).map(|i| lo + (hi - lo) * i as f64 / (*points - 1) as f64).collect();
            let mu = measure_from_convex_map(&m)?;
            let res = monge_ampere_residual(&mu, &m, &grid);
            write_table(
                out,
                &strings(&["map", "lo", "hi", "points", "max_residual"]),
                &[vec![kind, fmt_sig(*lo), fmt_sig(*hi), points.to_string(), fmt_sig(res)]],
            )?;
            Ok(if res <= cfg.tol {
                Outcome::Pass
            } else {
                Outcome::Fail(format!("residual {} exceeds {}", fmt_sig(res), fmt_sig(cfg.tol)))
            })
        }
        TransportCmd::Verify { measure, a, b } => {
            let mut r = transport_grunbaum_verify(&density(measure)?, *a, *b)?;
            finish_row(&mut r, cfg);
            writeln!(err, "{}", describe(&r))?;
            write_csv(&mut *out, std::slice::from_ref(&r))?;
            violations(&[r], cfg, err)
        }
        TransportCmd::Concavity { measure } => {
            let mu = density(measure)?;
            let v = is_gamma_transport_concave(&mu)?;
            write_table(
                out,
                &strings(&["measure", "transport_concave", "worst_violation", "points"]),
                &[vec![mu.label().to_string(), v.holds.to_string(), fmt_sig(v.worst_violation), v.points.to_string()]],
            )?;
            Ok(Outcome::Pass)
        }
        TransportCmd::EvenTest { measure } => {
            let mu = density(measure)?;
            let r = even_transport_gaussian_test(&mu)?;
            write_table(
                out,
                &strings(&["measure", "accepted", "sigma", "fitted_slope", "max_residual"]),
                &[vec![
                    mu.label().to_string(),
                    r.accepted().to_string(),
                    r.sigma.map(fmt_sig).unwrap_or_default(),
                    fmt_sig(r.fitted_slope),
                    fmt_sig(r.max_residual),
                ]],
            )?;
            Ok(Outcome::Pass)
        }
    }
}
