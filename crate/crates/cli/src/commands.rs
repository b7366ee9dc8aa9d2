use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use chrono_duhamel::chrono::{certify_window, invariance_scan, point_eval_functional, write_invariance_csv, Interaction};
use chrono_duhamel::duhamel::{cosine_data, evolve as evolve_trajectory, random_data, vector_field_majorant, write_trajectory_csv, Trajectory};
use chrono_duhamel::multilinear::dump::read_functional_text;
use chrono_duhamel::multilinear::{StandardNorm, SymFunctional};
use chrono_duhamel::propagator::{propagate as propagate_data, write_snapshot, CauchyData, CauchyNorm, DispersionKind};
use chrono_duhamel::series::{guaranteed_time, GuaranteedTime, MajorantSeries};
use chrono_duhamel::trees::tree_expand;
use chrono_duhamel::{selftest, Error};

use crate::config::{ConfigError, FunctionalKind, InitialKind, Resolved, RunConfig};

/// Why a command stopped.
#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Numerical { stage: &'static str, message: String },
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

type Outcome = Result<(), Failure>;

fn stage(name: &'static str) -> impl Fn(Error) -> Failure {
    move |e| Failure::Numerical {
        stage: name,
        message: e.to_string(),
    }
}

fn failed(name: &'static str, message: String) -> Failure {
    Failure::Numerical { stage: name, message }
}

/// Writes `name` under the output directory, prefixed by the config header.
fn emit(cfg: &RunConfig, name: &str, body: impl FnOnce(&mut Vec<u8>) -> chrono_duhamel::Result<()>) -> Outcome {
    let path = cfg.output.dir.join(name);
    let mut buf = cfg.header_comment().into_bytes();
    body(&mut buf).map_err(stage("output"))?;
    write_file(&path, &buf)
}

fn write_file(path: &Path, bytes: &[u8]) -> Outcome {
    let io = |e: std::io::Error| failed("output", format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, bytes).map_err(io)
}

fn initial_data(cfg: &RunConfig, r: &Resolved) -> CauchyData {
    let t1 = cfg.times.t1;
    let amp = cfg.initial.amplitude;
    match (cfg.initial.kind, r.disp.kind) {
        (InitialKind::Cosine, DispersionKind::KleinGordon) => cosine_data(&r.grid, amp, t1),
        (InitialKind::Cosine, DispersionKind::Schrodinger) => {
            let real = cosine_data(&r.grid, amp, t1);
            CauchyData::new(real.psi, None, t1).expect("no chi")
        }
        (InitialKind::Random, _) => random_data(&r.grid, &r.disp, amp, cfg.seed, t1),
        (InitialKind::Zero, kind) => CauchyData::zeros(kind, r.grid.points(), t1),
    }
}

fn functional(cfg: &RunConfig, r: &Resolved) -> Result<SymFunctional, Failure> {
    let spec = &cfg.functional;
    let d = 2 * r.grid.points();
    let bad = |msg: String| Failure::Config(ConfigError(format!("functional: {msg}")));
    let f = match spec.kind {
        FunctionalKind::PointEval => {
            point_eval_functional(&r.grid, &r.disp, spec.node, spec.time).map_err(|e| bad(e.to_string()))?
        }
        FunctionalKind::LinearWeights => SymFunctional::linear(&spec.weights),
        FunctionalKind::TensorFile => {
            let path = spec.path.as_ref().expect("checked at load");
            let text = fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
            read_functional_text(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?
        }
    };
    if f.dim() != d || f.codomain_dim() != 1 {
        return Err(bad(format!(
            "expected a scalar functional on {d} coordinates, got dim {} codomain {}",
            f.dim(),
            f.codomain_dim()
        )));
    }
    Ok(f)
}

fn norm(r: &Resolved, cfg: &RunConfig) -> Result<CauchyNorm, Failure> {
    CauchyNorm::new(&r.grid, &r.disp, cfg.norm.s, r.m_ref).map_err(|e| Failure::Config(ConfigError(format!("norm: {e}"))))
}

fn require_klein_gordon(r: &Resolved, command: &str) -> Outcome {
    if r.disp.kind != DispersionKind::KleinGordon {
        return Err(Failure::Config(ConfigError(format!(
            "dispersion.kind: {command} is implemented for klein_gordon only"
        ))));
    }
    Ok(())
}

fn trajectory(cfg: &RunConfig, r: &Resolved) -> Result<Trajectory, Failure> {
    let t = &cfg.times;
    let dt = if t.steps == 0 { 1.0 } else { (t.t2 - t.t1) / t.steps as f64 };
    evolve_trajectory(&r.grid, &r.disp, &r.nonlin, &initial_data(cfg, r), t.t1, t.t2, dt).map_err(stage("evolve"))
}

fn measured_majorant(cfg: &RunConfig, r: &Resolved, norm: &CauchyNorm) -> Result<MajorantSeries, Failure> {
    Ok(vector_field_majorant(&r.grid, &r.disp, &r.nonlin, cfg.certify.horizon, norm)
        .map_err(stage("vector-field majorant"))?
        .series)
}

/// Free evolution of the initial data from `t1` to `t2`.
pub fn propagate(cfg: &RunConfig) -> Outcome {
    let r = cfg.resolve()?;
    let start = initial_data(cfg, &r);
    let end = propagate_data(&r.grid, &r.disp, &start, cfg.times.t2 - cfg.times.t1).map_err(stage("propagate"))?;
    emit(cfg, "snapshot_t1.csv", |w| write_snapshot(w, &r.grid, &r.disp, &start))?;
    emit(cfg, "snapshot_t2.csv", |w| write_snapshot(w, &r.grid, &r.disp, &end))
}

/// Nonlinear trajectory with norms, energy, residual and field snapshots.
pub fn evolve(cfg: &RunConfig) -> Outcome {
    let r = cfg.resolve()?;
    let norm = norm(&r, cfg)?;
    let traj = trajectory(cfg, &r)?;
    emit(cfg, "trajectory.csv", |w| write_trajectory_csv(w, &r.grid, &r.disp, &r.nonlin, &traj, &norm))?;
    let last = traj.len() - 1;
    let every = cfg.output.snapshot_every;
    for i in 0..traj.len() {
        if i == 0 || i == last || (every > 0 && i % every == 0) {
            let data = traj.trace(&r.grid, &r.disp, i).map_err(stage("trace"))?;
            emit(cfg, &format!("fields/field_{i:05}.csv"), |w| write_snapshot(w, &r.grid, &r.disp, &data))?;
        }
    }
    Ok(())
}

/// `(U_{t1}^t f)(Theta_t u)` along the trajectory, plus a summary row.
pub fn invariance(cfg: &RunConfig) -> Outcome {
    let r = cfg.resolve()?;
    require_klein_gordon(&r, "invariance")?;
    let norm = norm(&r, cfg)?;
    let f = functional(cfg, &r)?;
    let traj = trajectory(cfg, &r)?;
    let inter = Interaction::with_norm(&r.grid, &r.disp, &r.nonlin, cfg.caps.degree, norm.clone())
        .map_err(stage("interaction"))?;
    let scan = invariance_scan(&inter, &f, &traj, cfg.caps.substeps.max(1)).map_err(stage("transport"))?;
    let x = measured_majorant(cfg, &r, &norm)?;
    emit(cfg, "invariance.csv", |w| write_invariance_csv(w, &scan, Some((&x, cfg.certify.radius))))?;
    let radius = traj.states.iter().map(|s| norm.norm_of(s.chart())).fold(0.0f64, f64::max);
    let remainder = chrono_duhamel::chrono::truncation_remainder(&scan.truncations, radius);
    let passed = scan.drift <= cfg.tolerances.drift;
    emit(cfg, "invariance_summary.csv", |w| {
        writeln!(w, "drift,threshold,passed,truncation_events,chart_radius,truncation_remainder")?;
        writeln!(
            w,
            "{:.17e},{:.17e},{},{},{:.17e},{:.17e}",
            scan.drift,
            cfg.tolerances.drift,
            passed,
            scan.truncations.len(),
            radius,
            remainder
        )?;
        Ok(())
    })?;
    if !passed {
        return Err(failed(
            "invariance",
            format!("drift {:.3e} exceeds {:.3e}", scan.drift, cfg.tolerances.drift),
        ));
    }
    Ok(())
}

/// Certified radius `e^{-TX}(R)` over a window, with the transported check at its end.
pub fn certify(cfg: &RunConfig) -> Outcome {
    let r = cfg.resolve()?;
    let norm = norm(&r, cfg)?;
    let f = functional(cfg, &r)?;
    let preset = cfg.certify.majorant.clone().map(MajorantSeries::new);
    let x = match &preset {
        Some(x) => x.clone(),
        None => measured_majorant(cfg, &r, &norm)?,
    };
    let radius = cfg.certify.radius;
    let floor = cfg.certify.floor.unwrap_or(0.5 * radius);
    let gt = guaranteed_time(&x, radius, floor).map_err(stage("guaranteed time"))?;
    let span = match (cfg.certify.span, gt) {
        (Some(s), _) => s,
        (None, GuaranteedTime::Finite(t)) => 0.5 * t,
        (None, GuaranteedTime::Unbounded) => (cfg.times.t2 - cfg.times.t1).abs(),
    };
    let f_major = f.majorant(&norm, &StandardNorm::LInf);
    let rows = cfg.times.steps.max(1);
    let mut records = Vec::with_capacity(rows + 1);
    for i in 0..=rows {
        let t = span * i as f64 / rows as f64;
        records.push(certify_window(&f_major, &x, radius, t).map_err(stage("certify"))?);
    }
    let check = preset.is_none() && r.disp.kind == DispersionKind::KleinGordon;
    if check {
        let inter = Interaction::with_norm(&r.grid, &r.disp, &r.nonlin, cfg.caps.degree, norm.clone())
            .map_err(stage("interaction"))?;
        let steps = cfg.times.steps.max(1) * cfg.caps.substeps.max(1);
        let t1 = cfg.times.t1;
        let uf = inter.evolve(&f, t1, t1 + span, steps).map_err(stage("transport"))?;
        let uf_major = uf.functional.majorant(&norm, &StandardNorm::LInf);
        records.last_mut().expect("nonempty").check_transported(&uf_major, 1e-12);
    }
    emit(cfg, "certify.csv", |w| {
        writeln!(
            w,
            "span,certified_radius,passed,flow_status,f_at_radius,transported,guaranteed_time,floor"
        )?;
        for rec in &records {
            let transported = rec.transported.map_or(String::new(), |v| format!("{v:.17e}"));
            writeln!(
                w,
                "{:.17e},{:.17e},{},{:?},{:.17e},{},{:.17e},{:.17e}",
                rec.span,
                rec.certified_radius,
                rec.passed,
                rec.flow_status,
                rec.f_at_radius,
                transported,
                gt.value(),
                floor
            )?;
        }
        Ok(())
    })?;
    let last = records.last().expect("nonempty");
    if !last.passed {
        return Err(failed("certify", format!("window {span} exceeds the majorant flow lifetime")));
    }
    if check && !last.transported_holds(1e-12) {
        return Err(failed("certify", "transported majorant exceeds the bound".into()));
    }
    Ok(())
}

/// Tree expansion of `U f` compared with the dense transport, order by order.
pub fn trees(cfg: &RunConfig) -> Outcome {
    let r = cfg.resolve()?;
    require_klein_gordon(&r, "trees")?;
    let norm = norm(&r, cfg)?;
    let f = functional(cfg, &r)?;
    let (t1, t2) = (cfg.times.t1, cfg.times.t2);
    let k_max = cfg.caps.tree_order;
    let expansion = tree_expand(&r.grid, &r.disp, &r.nonlin, &f, t1, t2, k_max)
        .map_err(|e| Failure::Config(ConfigError(format!("nonlinearity/functional: {e}"))))?;
    let arity = expansion.arity();
    let top = 1 + k_max * (arity - 1);
    if cfg.caps.degree < top {
        return Err(Failure::Config(ConfigError(format!(
            "caps.degree: order {k_max} trees reach degree {top}, cap is {}",
            cfg.caps.degree
        ))));
    }
    let traj = trajectory(cfg, &r)?;
    let phi = traj.last();
    let values = expansion.evaluate(phi).map_err(stage("trees"))?;
    let inter = Interaction::with_norm(&r.grid, &r.disp, &r.nonlin, cfg.caps.degree, norm)
        .map_err(stage("interaction"))?;
    let steps = cfg.times.steps.max(1) * cfg.caps.substeps.max(1);
    let dense = inter.evolve(&f, t1, t2, steps).map_err(stage("transport"))?;
    let c = phi.chart().to_real_vec();
    let mut gaps = Vec::with_capacity(k_max + 1);
    for (n, tree_sum) in values.per_order.iter().enumerate() {
        let degree = 1 + n * (arity - 1);
        let dense_value = match dense.functional.term(degree) {
            Some(t) => t.eval_diagonal(&c).map_err(stage("transport"))?[0],
            None => 0.0,
        };
        gaps.push((n, degree, *tree_sum, dense_value, (tree_sum - dense_value).abs()));
    }
    emit(cfg, "trees.csv", |w| {
        writeln!(w, "tree,order,multiplicity,parents,value")?;
        for (i, (t, v)) in expansion.trees.iter().zip(&values.per_tree).enumerate() {
            let mut parents = String::new();
            for vtx in 1..=t.order() {
                if vtx > 1 {
                    parents.push('-');
                }
                let _ = write!(parents, "{}", t.parent(vtx));
            }
            writeln!(w, "{i},{},{},{parents},{v:.17e}", t.order(), t.multiplicity())?;
        }
        Ok(())
    })?;
    emit(cfg, "trees_summary.csv", |w| {
        writeln!(w, "order,degree,tree_sum,dense_value,gap")?;
        for (n, degree, tree_sum, dense_value, gap) in &gaps {
            writeln!(w, "{n},{degree},{tree_sum:.17e},{dense_value:.17e},{gap:.17e}")?;
        }
        Ok(())
    })?;
    let worst = gaps.iter().map(|g| g.4).fold(0.0f64, f64::max);
    if worst > cfg.tolerances.trees {
        return Err(failed(
            "trees",
            format!("tree and dense transport differ by {worst:.3e}"),
        ));
    }
    Ok(())
}

/// Runs the invariant suite and prints one line per check.
pub fn selftest(cfg: &RunConfig) -> Outcome {
    let entries = selftest::run(cfg.seed).map_err(stage("selftest"))?;
    for e in &entries {
        println!("{} {} ({})", if e.passed { "PASS" } else { "FAIL" }, e.name, e.detail);
    }
    emit(cfg, "selftest.csv", |w| {
        writeln!(w, "check,passed,detail")?;
        for e in &entries {
            writeln!(w, "{},{},\"{}\"", e.name, e.passed, e.detail)?;
        }
        Ok(())
    })?;
    let failures = entries.iter().filter(|e| !e.passed).count();
    if failures > 0 {
        return Err(failed("selftest", format!("{failures} checks failed")));
    }
    Ok(())
}
