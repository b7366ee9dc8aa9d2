//! First-order operators `V_t .` on functionals and their time-ordered exponential.
//!
//! For a scalar functional `f` on real Klein-Gordon charts,
//! `(V_t . f)(phi) = delta f_phi(V_t(phi))`. With
//! `V_t^(k)(phi) = N_k sum_j g_j (w_j . phi)^k` this is, degree by degree,
//!
//! ```text
//! (V_t . f)^(p - 1 + k)(phi) = sum_j N_k p f^(p)(g_j, phi, ..., phi) (w_j . phi)^k
//! ```
//!
//! `U_{t1}^{t2} f` solves `dF/dt = V_t . F`, `F(t1) = f`, so that
//! `(U_{t1}^t f)(Theta_t u)` does not depend on `t`.

use std::io::Write;

use crate::duhamel::{InteractionLift, NonlinearitySpec, Trajectory};
use crate::error::{Error, Result};
use crate::multilinear::{index, monomial_times_linear, upper_bound, SymFunctional, SymTensor};
use crate::propagator::{propagator_matrix, CauchyNorm, DispersionKind, DispersionRelation, Grid};
use crate::series::{flow, guaranteed_time, FlowControl, FlowStatus, GuaranteedTime, MajorantSeries};

/// Default degree cap for transported functionals.
pub const DEFAULT_CAP: usize = 5;

/// A contribution of degree above the cap that was dropped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationEvent {
    pub time: f64,
    pub degree: usize,
    /// Upper tensor-norm bound of the dropped component.
    pub bound: f64,
    /// Time-integration weight the dropped component would have entered with.
    pub weight: f64,
}

/// Output of one `V_t .` application.
#[derive(Clone, Debug)]
pub struct OperatorApplication {
    pub output: SymFunctional,
    pub truncations: Vec<TruncationEvent>,
}

/// `V_t .` and `U_{t1}^{t2}` for a fixed equation on a fixed grid.
#[derive(Clone, Debug)]
pub struct Interaction {
    grid: Grid,
    disp: DispersionRelation,
    nonlin: NonlinearitySpec,
    norm: CauchyNorm,
    cap: usize,
}

impl Interaction {
    pub fn new(grid: &Grid, disp: &DispersionRelation, nonlin: &NonlinearitySpec, cap: usize) -> Result<Self> {
        Self::with_norm(grid, disp, nonlin, cap, CauchyNorm::standard(grid, disp))
    }

    pub fn with_norm(
        grid: &Grid,
        disp: &DispersionRelation,
        nonlin: &NonlinearitySpec,
        cap: usize,
        norm: CauchyNorm,
    ) -> Result<Self> {
        if disp.kind != DispersionKind::KleinGordon {
            return Err(Error::Unsupported(
                "functional transport is implemented on real Klein-Gordon charts".into(),
            ));
        }
        Ok(Self {
            grid: grid.clone(),
            disp: *disp,
            nonlin: nonlin.clone(),
            norm,
            cap,
        })
    }

    /// Chart dimension `2M`.
    pub fn dim(&self) -> usize {
        2 * self.grid.points()
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn norm(&self) -> &CauchyNorm {
        &self.norm
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dispersion(&self) -> &DispersionRelation {
        &self.disp
    }

    pub fn nonlinearity(&self) -> &NonlinearitySpec {
        &self.nonlin
    }

    pub fn lift(&self, t: f64) -> Result<InteractionLift> {
        InteractionLift::new(&self.grid, &self.disp, t)
    }

    fn check(&self, f: &SymFunctional) -> Result<()> {
        if f.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: f.dim(),
            });
        }
        if f.codomain_dim() != 1 {
            return Err(Error::Unsupported("only scalar functionals can be transported".into()));
        }
        Ok(())
    }

    /// `V_t . f`, dropping output degrees above the cap.
    pub fn vdot(&self, t: f64, f: &SymFunctional) -> Result<OperatorApplication> {
        self.check(f)?;
        let lift = self.lift(t)?;
        Ok(self.vdot_with(&lift, f, 1.0))
    }

    fn vdot_with(&self, lift: &InteractionLift, f: &SymFunctional, weight: f64) -> OperatorApplication {
        let d = self.dim();
        let kappa = self.norm.kappa();
        let mut acc: Vec<Option<Vec<f64>>> = vec![None; self.cap + 1];
        let mut truncations = Vec::new();
        for (k, nk) in self.nonlin.degrees() {
            for term in f.terms().filter(|t| t.degree() >= 1 && !t.is_zero()) {
                let p = term.degree();
                let m = p - 1 + k;
                if m > self.cap {
                    let bound = p as f64
                        * nk.abs()
                        * kappa.powi(k as i32 - 1)
                        * lift.coefficient_growth(k)
                        * upper_bound(term, &self.norm, &self.norm);
                    truncations.push(TruncationEvent {
                        time: lift.time,
                        degree: m,
                        bound,
                        weight,
                    });
                    continue;
                }
                let out = acc[m].get_or_insert_with(|| vec![0.0; index::canonical_count(d, m)]);
                let scale = nk * p as f64;
                for (g, w) in lift.g.iter().zip(&lift.w) {
                    let mut mono = term.contract(g).expect("dimensions checked").to_monomial();
                    for q in (p - 1)..(p - 1 + k) {
                        let table = index::table(d, q);
                        let mut next = vec![0.0; index::canonical_count(d, q + 1)];
                        monomial_times_linear(&table, &mono, w, &mut next);
                        mono = next;
                    }
                    out.iter_mut().zip(&mono).for_each(|(o, x)| *o += scale * x);
                }
            }
        }
        let mut output = SymFunctional::zero(d, 1);
        for (m, mono) in acc.into_iter().enumerate() {
            if let Some(mono) = mono {
                output.set_term(SymTensor::from_monomial(m, d, 1, &mono).expect("sizes match"));
            }
        }
        OperatorApplication { output, truncations }
    }

    /// `U_{t1}^{t2} f` by classical RK4 in coefficient space.
    pub fn evolve(&self, f: &SymFunctional, t1: f64, t2: f64, steps: usize) -> Result<ChronoResult> {
        let path = self.evolve_path(f, &[t1, t2], steps)?;
        Ok(ChronoResult {
            functional: path.functionals.into_iter().last().expect("two nodes"),
            truncations: path.truncations,
        })
    }

    /// `U_{t_0}^{t_i} f` at every node of `times`, with `substeps` RK4 steps
    /// between consecutive nodes.
    pub fn evolve_path(&self, f: &SymFunctional, times: &[f64], substeps: usize) -> Result<ChronoPath> {
        self.check(f)?;
        if times.is_empty() {
            return Err(Error::Domain("no time nodes given".into()));
        }
        let mut current = f.clone();
        current.truncate(self.cap);
        let mut functionals = vec![current.clone()];
        let mut truncations = Vec::new();
        let mut step_index = 0;
        for pair in times.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if a == b {
                functionals.push(current.clone());
                continue;
            }
            let n = substeps.max(1);
            let h = (b - a) / n as f64;
            let mut lift_start = self.lift(a)?;
            for s in 0..n {
                step_index += 1;
                let t = a + s as f64 * h;
                let lift_mid = self.lift(t + 0.5 * h)?;
                let lift_end = self.lift(if s + 1 == n { b } else { t + h })?;
                let w = h.abs();
                let k1 = self.vdot_with(&lift_start, &current, w / 6.0);
                let k2 = self.vdot_with(&lift_mid, &combine(&current, 0.5 * h, &k1.output), w / 3.0);
                let k3 = self.vdot_with(&lift_mid, &combine(&current, 0.5 * h, &k2.output), w / 3.0);
                let k4 = self.vdot_with(&lift_end, &combine(&current, h, &k3.output), w / 6.0);
                current.axpy(h / 6.0, &k1.output);
                current.axpy(h / 3.0, &k2.output);
                current.axpy(h / 3.0, &k3.output);
                current.axpy(h / 6.0, &k4.output);
                for k in [k1, k2, k3, k4] {
                    truncations.extend(k.truncations);
                }
                let size = current.max_abs();
                if !size.is_finite() || size > 1e150 {
                    return Err(Error::Divergence {
                        step: step_index,
                        time: t + h,
                        what: "time-ordered exponential: coefficients diverged".into(),
                    });
                }
                lift_start = lift_end;
            }
            functionals.push(current.clone());
        }
        Ok(ChronoPath {
            times: times.to_vec(),
            functionals,
            truncations,
        })
    }
}

fn combine(f: &SymFunctional, h: f64, g: &SymFunctional) -> SymFunctional {
    let mut out = f.clone();
    out.axpy(h, g);
    out
}

/// Transported functional with its truncation log.
#[derive(Clone, Debug)]
pub struct ChronoResult {
    pub functional: SymFunctional,
    pub truncations: Vec<TruncationEvent>,
}

impl ChronoResult {
    /// Modeled size of the dropped contributions at chart radius `r`:
    /// `sum_events weight * bound * r^degree`.
    pub fn truncation_remainder(&self, r: f64) -> f64 {
        truncation_remainder(&self.truncations, r)
    }
}

pub fn truncation_remainder(events: &[TruncationEvent], r: f64) -> f64 {
    events
        .iter()
        .map(|e| e.weight * e.bound * r.powi(e.degree as i32))
        .sum()
}

/// `U_{t_0}^{t_i} f` along a sequence of nodes.
#[derive(Clone, Debug)]
pub struct ChronoPath {
    pub times: Vec<f64>,
    pub functionals: Vec<SymFunctional>,
    pub truncations: Vec<TruncationEvent>,
}

/// `V_t . f`; see [`Interaction::vdot`].
pub fn vdot(
    grid: &Grid,
    disp: &DispersionRelation,
    nonlin: &NonlinearitySpec,
    t: f64,
    f: &SymFunctional,
    cap: usize,
) -> Result<OperatorApplication> {
    Interaction::new(grid, disp, nonlin, cap)?.vdot(t, f)
}

/// `U_{t1}^{t2} f`; see [`Interaction::evolve`].
#[allow(clippy::too_many_arguments)]
pub fn chrono_exp_evolve(
    grid: &Grid,
    disp: &DispersionRelation,
    nonlin: &NonlinearitySpec,
    f: &SymFunctional,
    t1: f64,
    t2: f64,
    steps: usize,
    cap: usize,
) -> Result<ChronoResult> {
    Interaction::new(grid, disp, nonlin, cap)?.evolve(f, t1, t2, steps)
}

/// Linear functional `c -> (A_{t_f} c)_psi[node]`: the value at grid node
/// `node` and time `t_f` of the free solution with chart `c`.
pub fn point_eval_functional(grid: &Grid, disp: &DispersionRelation, node: usize, t_f: f64) -> Result<SymFunctional> {
    if node >= grid.points() {
        return Err(Error::Domain(format!(
            "node {node} is outside a grid of {} points",
            grid.points()
        )));
    }
    let d = 2 * grid.points();
    let a = propagator_matrix(grid, disp, t_f)?;
    Ok(SymFunctional::linear(&a[node * d..(node + 1) * d]))
}

/// One node of an invariance scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariancePoint {
    pub t: f64,
    /// `(U_{t1}^t f)(Theta_t u)`
    pub value: f64,
    pub running_drift: f64,
    /// Truncation events accumulated up to `t`.
    pub truncation_events: usize,
}

#[derive(Clone, Debug)]
pub struct InvarianceScan {
    pub points: Vec<InvariancePoint>,
    pub drift: f64,
    pub truncations: Vec<TruncationEvent>,
}

impl InvarianceScan {
    pub fn final_point(&self) -> &InvariancePoint {
        self.points.last().expect("scans are nonempty")
    }
}

/// Evaluates `(U_{t1}^t f)(Theta_t u)` on every trajectory node.
pub fn invariance_scan(
    inter: &Interaction,
    f: &SymFunctional,
    traj: &Trajectory,
    substeps: usize,
) -> Result<InvarianceScan> {
    let mut points = Vec::with_capacity(traj.len());
    let mut truncations = Vec::new();
    let mut current = f.clone();
    current.truncate(inter.cap());
    let mut drift = 0.0f64;
    let mut first = None;
    for i in 0..traj.len() {
        if i > 0 {
            let path = inter.evolve_path(&current, &traj.times[i - 1..=i], substeps)?;
            truncations.extend(path.truncations);
            current = path.functionals.into_iter().last().expect("two nodes");
        }
        let c = traj.states[i].chart().to_real_vec();
        let value = current.eval_scalar(&c)?;
        let v0 = *first.get_or_insert(value);
        drift = drift.max((value - v0).abs());
        points.push(InvariancePoint {
            t: traj.times[i],
            value,
            running_drift: drift,
            truncation_events: truncations.len(),
        });
    }
    Ok(InvarianceScan {
        points,
        drift,
        truncations,
    })
}

/// Outcome of [`certify_window`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertificationRecord {
    pub radius: f64,
    pub span: f64,
    /// `e^{-T X}(R)`, the certified radius at the far end of the window.
    pub certified_radius: f64,
    pub flow_status: FlowStatus,
    /// `[[f]](R)`
    pub f_at_radius: f64,
    /// The backward flow stayed positive over the whole span.
    pub passed: bool,
    /// `t-bar` at the flow's floor; reported when the window was exceeded.
    pub guaranteed_time: Option<GuaranteedTime>,
    /// `[[U f]](r')` when a transported functional was checked.
    pub transported: Option<f64>,
}

impl CertificationRecord {
    /// Records `[[U f]](r')` for a computed `U f`; returns whether it is `<= [[f]](R)`.
    pub fn check_transported(&mut self, uf: &MajorantSeries, rel_tol: f64) -> bool {
        let v = uf.eval(self.certified_radius);
        self.transported = Some(v);
        self.transported_holds(rel_tol)
    }

    pub fn transported_holds(&self, rel_tol: f64) -> bool {
        self.transported
            .is_some_and(|v| self.passed && v <= self.f_at_radius * (1.0 + rel_tol))
    }
}

/// Checks that the window `T` stays inside the majorant flow's lifetime at `R`.
pub fn certify_window(f_majorant: &MajorantSeries, x: &MajorantSeries, radius: f64, span: f64) -> Result<CertificationRecord> {
    if !(radius > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {radius}")));
    }
    let control = FlowControl::default();
    let span = span.abs();
    let f_at_radius = f_majorant.eval(radius);
    let (certified_radius, flow_status) = if x.is_zero() || span == 0.0 {
        (radius, FlowStatus::Completed)
    } else {
        let r = flow(x, -span, radius, &control);
        (r.value.max(0.0), r.status)
    };
    let passed = flow_status == FlowStatus::Completed && certified_radius > 0.0;
    let guaranteed_time = if passed {
        None
    } else {
        Some(guaranteed_time(x, radius, control.zero_floor)?)
    };
    Ok(CertificationRecord {
        radius,
        span,
        certified_radius: if passed { certified_radius } else { 0.0 },
        flow_status,
        f_at_radius,
        passed,
        guaranteed_time,
        transported: None,
    })
}

/// Writes `(t, functional_value, running_drift, certified_radius, truncation_events)`.
///
/// The certified radius at `t` is `e^{-|t - t1| X}(R)` when a majorant and
/// radius are given, and empty otherwise.
pub fn write_invariance_csv<W: Write>(mut w: W, scan: &InvarianceScan, x: Option<(&MajorantSeries, f64)>) -> Result<()> {
    writeln!(w, "t,functional_value,running_drift,certified_radius,truncation_events")?;
    let t1 = scan.points.first().map_or(0.0, |p| p.t);
    for p in &scan.points {
        let radius = match x {
            Some((x, r)) => {
                let rec = certify_window(&MajorantSeries::zero(), x, r, p.t - t1)?;
                format!("{:.17e}", rec.certified_radius)
            }
            None => String::new(),
        };
        writeln!(
            w,
            "{:.17e},{:.17e},{:.17e},{},{}",
            p.t, p.value, p.running_drift, radius, p.truncation_events
        )?;
    }
    Ok(())
}
