//! Experiment execution, gates and reports.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ergolab::approx::{entropy_dense_approx, markovization_order, nested_horseshoe_sequence};
use ergolab::curve::{write_csv, Curve};
use ergolab::ldp::{
    c_infinity_estimate, level1_rate, level2_ball_rate, level2_mc_test, mc_deviation_prob, weak_gibbs_audit, Ball,
    GENERATOR_ID,
};
use ergolab::lorenz::{
    cylinders, flow_average_sweep, inverse_branch, itinerary, random_state, symbolic_flow_prediction, validate_model,
};
use ergolab::suspension::{
    flow_level_oracle, flow_level_spectrum, flow_topological_entropy, irregular_point, separated_set_entropy,
    BlockSchedule, SuspensionSystem,
};
use ergolab::symbolic::{CylinderMarginals, FunctionRole, LocallyConstantFunction, MarkovMeasure, SftGraph};
use ergolab::thermo::{equilibrium_state, legendre_spectrum, oracle_spectrum, spectrum_peak};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cache::{write_atomic, Cache};
use crate::config::*;
use crate::error::{LabError, LabResult};
use crate::plot::{emit_plot, PlotStyle};

pub const VARIATIONAL_TOL: f64 = 1e-8;
pub const CONCAVITY_TOL: f64 = 1e-9;
pub const PEAK_TOL: f64 = 1e-8;
pub const ORACLE_TOL: f64 = 1e-6;
pub const FIXED_POINT_TOL: f64 = 1e-12;
pub const SANDWICH_TOL: f64 = 0.06;
pub const CONTRACTION_TOL: f64 = 2e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn gate(name: &str, passed: bool, detail: String) -> Gate {
    Gate {
        name: name.into(),
        passed,
        detail,
    }
}

fn tol_gate(name: &str, value: f64, tol: f64) -> Gate {
    gate(name, value <= tol, format!("{value:.3e} <= {tol:.0e}"))
}

/// Everything a rerun must reproduce bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Payload {
    pub results: Value,
    /// File name to contents (CSV, SVG).
    pub artifacts: BTreeMap<String, String>,
}

impl Payload {
    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("payload serializes"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub config_hash: String,
    pub kind: String,
    pub versions: BTreeMap<String, String>,
    pub threads: usize,
    pub wall_clock_ms: f64,
    pub cache_hit: bool,
    pub payload_hash: String,
    pub payload: Payload,
    pub gates: Vec<Gate>,
    /// Where the report and artifacts were written.
    pub output: Option<PathBuf>,
}

impl RunReport {
    pub fn failed_gates(&self) -> Vec<String> {
        self.gates.iter().filter(|g| !g.passed).map(|g| g.name.clone()).collect()
    }

    pub fn check(&self) -> LabResult<()> {
        let failed = self.failed_gates();
        if failed.is_empty() {
            Ok(())
        } else {
            Err(LabError::GateFailed(failed))
        }
    }

    pub fn result(&self, pointer: &str) -> Option<&Value> {
        self.payload.results.pointer(pointer)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub no_cache: bool,
    /// Overrides the config's output directory.
    pub output_dir: Option<PathBuf>,
}

/// Non-finite values are spelled out; JSON has no literal for them.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn observable(spec: &FunctionSpec, sft: &SftGraph) -> LabResult<LocallyConstantFunction> {
    Ok(spec.build(sft, FunctionRole::Observable)?)
}

fn potential(spec: &FunctionSpec, sft: &SftGraph) -> LabResult<LocallyConstantFunction> {
    Ok(spec.build(sft, FunctionRole::Potential)?)
}

struct Outcome {
    results: Value,
    curves: Vec<(String, Vec<Curve>)>,
    gates: Vec<Gate>,
}

fn run_entropy(cfg: &ExperimentConfig, p: &EntropyParams) -> LabResult<Outcome> {
    let sft = cfg.sft()?;
    let h = sft.topological_entropy()?;
    let parry = MarkovMeasure::parry(&sft)?.entropy();
    let growth: Vec<Value> = (1..=p.max_word_len)
        .map(|n| json!({"n": n, "words": sft.word_count(n), "rate": sft.word_count(n).ln() / n as f64}))
        .collect();
    let mut results = json!({
        "topological_entropy": h,
        "parry_entropy": parry,
        "word_growth": growth,
    });
    let mut gates = vec![tol_gate("parry-maximal", (h - parry).abs(), 1e-10)];
    if let Some(irr) = &p.irregular {
        let point = irregular_point(&BlockSchedule::geometric(irr.ratio, irr.blocks)?);
        gates.push(tol_gate("irregular-oscillation", point.error(), 0.02));
        results["irregular"] = json!({
            "ratio": irr.ratio,
            "blocks": irr.blocks,
            "length": point.sequence.len(),
            "predicted": [point.predicted.0, point.predicted.1],
            "measured": [point.measured.0, point.measured.1],
            "error": point.error(),
        });
    }
    Ok(Outcome {
        results,
        curves: Vec::new(),
        gates,
    })
}

fn run_pressure(cfg: &ExperimentConfig, p: &PressureParams) -> LabResult<Outcome> {
    let sft = cfg.sft()?;
    let base = potential(&p.potential, &sft)?;
    let obs = p.observable.as_ref().map(|o| observable(o, &sft)).transpose()?;
    let grid = p.q_grid.values();
    let mut rows = Vec::new();
    let mut curve = Curve::new("q", "transfer", (grid[0], grid[grid.len() - 1]));
    let mut worst: f64 = 0.0;
    for &q in &grid {
        let psi = match &obs {
            Some(g) => base.add_scaled(g, q)?,
            None => base.scale(q),
        };
        let eq = equilibrium_state(&sft, &psi)?;
        let defect = eq.variational_defect(&psi)?;
        worst = worst.max(defect);
        let entropy = eq.measure.entropy();
        rows.push(json!({
            "q": q,
            "pressure": eq.pressure,
            "entropy": entropy,
            "integral": eq.measure.integrate(&psi)?,
            "variational_defect": defect,
        }));
        curve.push(q, eq.pressure, defect);
    }
    Ok(Outcome {
        results: json!({"rows": rows, "max_variational_defect": worst}),
        curves: vec![("pressure".into(), vec![curve])],
        gates: vec![tol_gate("variational-identity", worst, VARIATIONAL_TOL)],
    })
}

fn run_spectrum(cfg: &ExperimentConfig, p: &SpectrumParams) -> LabResult<Outcome> {
    let sft = cfg.sft()?;
    let g = observable(&p.observable, &sft)?;
    let grid = p.grid.values();
    let legendre = legendre_spectrum(&sft, &g, &grid)?;
    let (peak_a, peak_h) = spectrum_peak(&sft, &g)?;
    let h_top = sft.topological_entropy()?;
    let concavity = legendre.concavity_defect();
    let mut gates = vec![
        tol_gate("concavity", concavity, CONCAVITY_TOL),
        tol_gate("peak-entropy", (peak_h - h_top).abs(), PEAK_TOL),
    ];
    let mut results = json!({
        "peak": [peak_a, peak_h],
        "topological_entropy": h_top,
        "concavity_defect": concavity,
        "legendre": legendre.points.iter().map(|q| json!([q.x, q.value])).collect::<Vec<_>>(),
    });
    let mut curves = vec![legendre.clone()];
    if p.oracle {
        let oracle = oracle_spectrum(&sft, &g, &grid)?;
        let d = legendre.sup_distance(&oracle)?;
        gates.push(tol_gate("legendre-oracle", d, ORACLE_TOL));
        results["oracle_sup_distance"] = json!(d);
        results["oracle"] = json!(oracle.points.iter().map(|q| json!([q.x, q.value])).collect::<Vec<_>>());
        curves.push(oracle);
    }
    Ok(Outcome {
        results,
        curves: vec![("spectrum".into(), curves)],
        gates,
    })
}

fn run_flow_spectrum(cfg: &ExperimentConfig, p: &FlowSpectrumParams) -> LabResult<Outcome> {
    let sft = cfg.sft()?;
    let roof = p.roof.build(&sft, FunctionRole::Roof)?;
    let phi = observable(&p.observable, &sft)?;
    let susp = SuspensionSystem::new(sft, roof)?;
    let flow = flow_topological_entropy(&susp)?;
    let grid = p.grid.values();
    let spectrum = flow_level_spectrum(&susp, &phi, &grid)?;
    let concavity = spectrum.concavity_defect();
    let peak = spectrum.max_point().map_or(f64::NAN, |q| q.value);
    let mut gates = vec![
        tol_gate("bowen-abramov", (flow.value - flow.abramov).abs(), VARIATIONAL_TOL),
        tol_gate("concavity", concavity, CONCAVITY_TOL),
        gate(
            "peak-below-flow-entropy",
            peak <= flow.value + PEAK_TOL,
            format!("{peak} <= {}", flow.value),
        ),
    ];
    let mut results = json!({
        "flow_entropy": flow.value,
        "abramov": flow.abramov,
        "grid_peak": peak,
        "concavity_defect": concavity,
        "spectrum": spectrum.points.iter().map(|q| json!([q.x, q.value])).collect::<Vec<_>>(),
    });
    let mut curves = vec![spectrum.clone()];
    if p.oracle {
        let mut oracle = Curve::new("a", "oracle", spectrum.domain);
        for q in &spectrum.points {
            oracle.push(q.x, flow_level_oracle(&susp, &phi, q.x)?, 0.0);
        }
        let d = spectrum.sup_distance(&oracle)?;
        gates.push(tol_gate("legendre-oracle", d, ORACLE_TOL));
        results["oracle_sup_distance"] = json!(d);
        curves.push(oracle);
    }
    Ok(Outcome {
        results,
        curves: vec![("flow-spectrum".into(), curves)],
        gates,
    })
}

fn run_lorenz(p: &LorenzRunParams) -> LabResult<Outcome> {
    let m = validate_model(p.model)?;
    let fp = m.fixed_point();
    let image = m.poincare_step(fp)?;
    let fp_residual = (image.x - fp.x).abs().max((image.y - fp.y).abs());
    let depth = p.cylinder_depth;
    let mut consistent = 0usize;
    let mut truncated = 0usize;
    for i in 0..p.round_trips {
        let x = random_state(p.seed, i as u64).x;
        let it = itinerary(&m, x, depth);
        if it.truncated {
            truncated += 1;
            continue;
        }
        let (lo, hi) = inverse_branch(&m, &it.word)?;
        if lo <= x && x <= hi {
            consistent += 1;
        }
    }
    let cyl = cylinders(&m, depth)?;
    let widest = cyl.iter().map(|&(a, b)| b - a).fold(0.0, f64::max);
    // f^{n−1} maps a length-n cylinder onto a half interval with slope ≥ 2α
    let slope_bound = (2.0 * m.alpha()).powi(1 - depth as i32);
    let positive = |x: f64, _y: f64| if x > 0.0 { 1.0 } else { 0.0 };
    let sweep = flow_average_sweep(&m, p.seed, p.starts, p.returns, positive)?;
    let prediction = symbolic_flow_prediction(&m, |x: f64| if x > 0.0 { 1.0 } else { 0.0 }, p.depth)?;
    let mean = sweep.iter().map(|a| a.value).sum::<f64>() / sweep.len().max(1) as f64;
    let mut results = json!({
        "fixed_point": [fp.x, fp.y],
        "fixed_point_residual": fp_residual,
        "round_trips": {"total": p.round_trips, "consistent": consistent, "truncated": truncated, "depth": depth},
        "cylinders": {"count": cyl.len(), "widest": widest, "slope_bound": slope_bound},
        "flow_average": {
            "starts": p.starts,
            "returns": p.returns,
            "mean": mean,
            "values": sweep.iter().map(|a| a.value).collect::<Vec<_>>(),
            "perturbations": sweep.iter().map(|a| a.perturbations).sum::<usize>(),
            "symbolic_prediction": prediction,
        },
    });
    if let Some(sep) = &p.separated {
        let e = separated_set_entropy(&m, sep.t, sep.eps)?;
        results["separated"] = serde_json::to_value(e)?;
    }
    let gates = vec![
        tol_gate("fixed-point", fp_residual, FIXED_POINT_TOL),
        gate(
            "round-trips",
            consistent + truncated == p.round_trips,
            format!("{consistent} consistent, {truncated} truncated of {}", p.round_trips),
        ),
        gate(
            "cylinder-slope-bound",
            widest <= slope_bound * (1.0 + 1e-12),
            format!("{widest:.6e} <= {slope_bound:.6e}"),
        ),
    ];
    Ok(Outcome {
        results,
        curves: Vec::new(),
        gates,
    })
}

fn run_level1(cfg: &ExperimentConfig, p: &Level1Params) -> LabResult<Outcome> {
    let sft = cfg.sft()?;
    let mu = p.measure.build(&sft)?;
    let g = observable(&p.observable, &sft)?;
    let rate = level1_rate(&mu, &g, &p.grid.values())?;
    let at_mean = level1_rate(&mu, &g, &[rate.mean])?.curve.points[0].value;
    let mut neg = rate.curve.clone();
    neg.points.iter_mut().for_each(|q| q.value = -q.value);
    let convexity = neg.concavity_defect();
    let lowest = rate.curve.points.iter().map(|q| q.value).fold(f64::INFINITY, f64::min);
    let mut gates = vec![
        tol_gate("rate-vanishes-at-mean", at_mean.abs(), 1e-10),
        tol_gate("convexity", convexity, CONCAVITY_TOL),
        gate("rate-nonnegative", lowest >= -1e-12, format!("min {lowest:.3e}")),
    ];
    let mut deviations = Vec::new();
    for d in &p.deviations {
        let rep = mc_deviation_prob(&mu, &g, d.horizon, d.threshold, d.trials, d.seed)?;
        if let Some(exact) = rep.exact {
            let (lo, hi) = rep.monte_carlo.as_ref().map_or((0.0, 1.0), |m| m.wilson99);
            gates.push(gate(
                &format!("wilson-coverage[n={}]", d.horizon),
                lo <= exact && exact <= hi,
                format!("{exact:.6e} in [{lo:.6e}, {hi:.6e}]"),
            ));
        }
        let mut v = serde_json::to_value(&rep)?;
        v["threshold"] = json!(d.threshold);
        deviations.push(v);
    }
    let mut curve = rate.curve.clone();
    curve.method = "inf-form".into();
    let mut sup = rate.curve.clone();
    sup.method = "sup-form".into();
    for (q, &s) in sup.points.iter_mut().zip(&rate.sup_form) {
        q.value = s;
        q.residual = 0.0;
    }
    Ok(Outcome {
        results: json!({
            "mean": rate.mean,
            "range": [rate.range.0, rate.range.1],
            "rate": rate.curve.points.iter().map(|q| json!([q.x, q.value])).collect::<Vec<_>>(),
            "sup_form": rate.sup_form.iter().map(|&s| num(s)).collect::<Vec<_>>(),
            "convexity_defect": convexity,
            "deviations": deviations,
        }),
        curves: vec![("rate".into(), vec![curve, sup])],
        gates,
    })
}

fn run_level2(cfg: &ExperimentConfig, p: &Level2Params) -> LabResult<Outcome> {
    let sft = cfg.sft()?;
    let mu = p.measure.build(&sft)?;
    let rep = level2_mc_test(&mu, &p.ball, p.horizon, p.trials, p.seed)?;
    let mut results = json!({"report": serde_json::to_value(&rep)?});
    let mut gates = Vec::new();
    match rep.lattice_sandwich_gap().or(rep.sandwich_gap()) {
        Some(gap) => gates.push(tol_gate("lattice-sandwich", gap, SANDWICH_TOL)),
        None => gates.push(gate("lattice-sandwich", false, "no measured exponent".into())),
    }
    results["sandwich_gap"] = rep.sandwich_gap().map_or(Value::Null, num);
    results["lattice_sandwich_gap"] = rep.lattice_sandwich_gap().map_or(Value::Null, num);
    if let Some(exact) = rep.exact {
        let (lo, hi) = rep.monte_carlo.wilson99;
        gates.push(gate(
            "wilson-coverage",
            lo <= exact && exact <= hi,
            format!("{exact:.6e} in [{lo:.6e}, {hi:.6e}]"),
        ));
    }
    if let [c] = p.ball.constraints.as_slice() {
        // the level-1 rate is convex, so its minimum over the ball sits at
        // the point nearest the mean
        let f = LocallyConstantFunction::word_indicator(&sft, &c.word)?;
        let mean = mu.word_prob(&c.word);
        let s = mean.clamp(c.center - c.radius, c.center + c.radius);
        let level1 = level1_rate(&mu, &f, &[s])?.curve.points[0].value;
        let ball = level2_ball_rate(&mu, &Ball::single(c.word.clone(), c.center, c.radius), c.word.len())?;
        let gap = (ball.inf - level1).abs();
        gates.push(tol_gate("contraction", gap, CONTRACTION_TOL));
        results["contraction"] = json!({"level": s, "ball_rate": ball.inf, "level1_rate": level1, "gap": gap});
    }
    Ok(Outcome {
        results,
        curves: Vec::new(),
        gates,
    })
}

fn run_gibbs(cfg: &ExperimentConfig, p: &GibbsParams) -> LabResult<Outcome> {
    let sft = cfg.sft()?;
    let mu = p.measure.build(&sft)?;
    let psi = potential(&p.potential, &sft)?;
    let audit = weak_gibbs_audit(&mu, &psi, &sft, p.n_max)?;
    let cinf = c_infinity_estimate(&audit, &p.delta_grid.values())?;
    let rows: Vec<Value> = audit
        .rows
        .iter()
        .map(|r| json!({"n": r.n, "max_log_constant": r.max_log_constant, "max_rate": r.max_rate}))
        .collect();
    let table: Vec<Value> = cinf
        .table
        .iter()
        .map(|r| json!({"delta": r.delta, "rate": num(r.rate), "empty_from": r.empty_from}))
        .collect();
    let max_log = audit.rows.iter().map(|r| r.max_log_constant).fold(0.0, f64::max);
    let mut gates = Vec::new();
    if let Some(b) = audit.strict_bound {
        gates.push(gate(
            "strict-bound",
            max_log <= b.ln() + 1e-9,
            format!("max ln C_n = {max_log:.12} vs ln bound {:.12}", b.ln()),
        ));
        gates.push(gate("strict-sentinel", cinf.is_sentinel(), format!("c_inf = {}", cinf.value)));
    }
    Ok(Outcome {
        results: json!({
            "pressure": audit.pressure,
            "variational_defect": audit.variational_defect,
            "epsilon_scale": audit.epsilon_scale,
            "subexponential": audit.subexponential,
            "strict_bound": audit.strict_bound,
            "max_log_constant": max_log,
            "rows": rows,
            "c_infinity": num(cinf.value),
            "c_infinity_sentinel": cinf.is_sentinel(),
            "c_infinity_table": table,
        }),
        curves: Vec::new(),
        gates,
    })
}

fn run_approx(cfg: &ExperimentConfig, p: &ApproxParams) -> LabResult<Outcome> {
    let sft = cfg.sft()?;
    let a = sft.alphabet_size();
    let mut parts = Vec::new();
    for (i, wc) in p.target.iter().enumerate() {
        let m = match &wc.component {
            Component::Measure(spec) => CylinderMarginals::from_measure(&spec.build(&sft)?, p.depth)?,
            Component::Periodic(word) => {
                if word.is_empty() || word.iter().any(|&s| s >= a) {
                    return Err(LabError::invalid(
                        format!("/params/target/{i}/component/periodic"),
                        "word must be non-empty over the alphabet",
                    ));
                }
                CylinderMarginals::from_sequence(word, a, p.depth)?
            }
        };
        parts.push((wc.weight, m));
    }
    let refs: Vec<(f64, &CylinderMarginals)> = parts.iter().map(|(w, m)| (*w, m)).collect();
    let target = CylinderMarginals::mixture(&refs)?;
    let first_order = markovization_order(&target, 1)?;
    let (nu, cert) = entropy_dense_approx(&target, &sft, p.epsilon, p.reference_entropy)?;
    let mut results = json!({
        "markovization_order1": {
            "states": first_order.states(),
            "transition": first_order.transition(),
            "entropy": first_order.entropy(),
        },
        "certificate": serde_json::to_value(&cert)?,
        "witness_entropy": nu.entropy(),
    });
    let mut gates = vec![gate(
        "certificate",
        cert.satisfied,
        format!("d* bound {:.3e}, entropy gap {:.3e}, ε {}", cert.dstar_bound, cert.entropy_gap, p.epsilon),
    )];
    if let Some(n_max) = p.horseshoe_n_max {
        let stages = nested_horseshoe_sequence(&sft, n_max)?;
        let subs: Vec<_> = stages.iter().filter_map(|s| s.sub.as_ref()).collect();
        let nested = subs.windows(2).all(|w| w[1].contains(w[0]));
        let transitive = subs.iter().all(|s| s.induced().is_transitive());
        let proper = subs.iter().all(|s| s.is_proper());
        gates.push(gate(
            "horseshoe-nesting",
            nested && transitive && proper,
            format!("nested {nested}, transitive {transitive}, proper {proper}"),
        ));
        results["horseshoes"] = json!({
            "nested": nested,
            "transitive": transitive,
            "proper": proper,
            "stages": serde_json::to_value(&stages)?,
        });
    }
    Ok(Outcome {
        results,
        curves: Vec::new(),
        gates,
    })
}

fn compute(cfg: &ExperimentConfig) -> LabResult<Outcome> {
    match &cfg.params {
        Params::Entropy(p) => run_entropy(cfg, p),
        Params::Pressure(p) => run_pressure(cfg, p),
        Params::Spectrum(p) => run_spectrum(cfg, p),
        Params::FlowSpectrum(p) => run_flow_spectrum(cfg, p),
        Params::Lorenz(p) => run_lorenz(p),
        Params::LdpLevel1(p) => run_level1(cfg, p),
        Params::LdpLevel2(p) => run_level2(cfg, p),
        Params::GibbsAudit(p) => run_gibbs(cfg, p),
        Params::Approx(p) => run_approx(cfg, p),
    }
}

fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("ergolab".to_string(), ergolab::VERSION.to_string()),
        ("ergolab-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("generator".to_string(), GENERATOR_ID.to_string()),
    ])
}

fn execute(cfg: &ExperimentConfig) -> LabResult<(Payload, Vec<Gate>)> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| LabError::ThreadPool(e.to_string()))?;
    let out = pool.install(|| compute(cfg))?;
    let mut artifacts = BTreeMap::new();
    for (name, curves) in &out.curves {
        artifacts.insert(format!("{name}.csv"), write_csv(curves)?);
        if cfg.plot {
            let style = PlotStyle {
                title: format!("{} ({})", name, cfg.kind.name()),
                y_label: if name == "rate" { "I".into() } else { "value".into() },
            };
            artifacts.insert(format!("{name}.svg"), emit_plot(curves, &style)?);
        }
    }
    Ok((
        Payload {
            results: out.results,
            artifacts,
        },
        out.gates,
    ))
}

fn write_outputs(report: &mut RunReport, dir: &Path) -> LabResult<()> {
    let dir = dir.join(format!("{}-{}", report.kind, &report.config_hash[..8]));
    for (name, text) in &report.payload.artifacts {
        write_atomic(&dir.join(name), text.as_bytes())?;
    }
    report.output = Some(dir.clone());
    write_atomic(&dir.join("report.json"), &serde_json::to_vec_pretty(report)?)?;
    Ok(())
}

/// Runs a config, replaying from `cache` unless disabled. The report is
/// returned (and written) even when gates fail; see [`RunReport::check`].
pub fn run(cfg: &ExperimentConfig, cache: &Cache, opts: &RunOptions) -> LabResult<RunReport> {
    let start = Instant::now();
    let hash = cfg.hash();
    let cached = if opts.no_cache { None } else { cache.get(&hash) };
    let mut report = match cached {
        Some(mut r) => {
            r.cache_hit = true;
            r.wall_clock_ms = start.elapsed().as_secs_f64() * 1e3;
            r.output = None;
            r
        }
        None => {
            let (payload, gates) = execute(cfg)?;
            let report = RunReport {
                config_hash: hash,
                kind: cfg.kind.name().into(),
                versions: versions(),
                threads: cfg.threads,
                wall_clock_ms: start.elapsed().as_secs_f64() * 1e3,
                cache_hit: false,
                payload_hash: payload.hash(),
                payload,
                gates,
                output: None,
            };
            if !opts.no_cache {
                cache.put(&report)?;
            }
            report
        }
    };
    let dir = opts.output_dir.clone().or_else(|| cfg.output_dir.as_ref().map(PathBuf::from));
    if let Some(dir) = dir {
        write_outputs(&mut report, &dir)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_numbers_are_spelled_out() {
        assert_eq!(num(f64::NEG_INFINITY), json!("-inf"));
        assert_eq!(num(1.5), json!(1.5));
    }

    #[test]
    fn gates_surface_by_name() {
        let report = RunReport {
            config_hash: "0".repeat(64),
            kind: "entropy".into(),
            versions: versions(),
            threads: 1,
            wall_clock_ms: 0.0,
            cache_hit: false,
            payload_hash: String::new(),
            payload: Payload {
                results: Value::Null,
                artifacts: BTreeMap::new(),
            },
            gates: vec![tol_gate("a", 1.0, 0.5), tol_gate("b", 0.1, 0.5)],
            output: None,
        };
        match report.check() {
            Err(LabError::GateFailed(names)) => assert_eq!(names, vec!["a".to_string()]),
            other => panic!("{other:?}"),
        }
    }
}
