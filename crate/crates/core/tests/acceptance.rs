use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use chrono_duhamel::chrono::{invariance_scan, point_eval_functional, Interaction};
use chrono_duhamel::duhamel::{
    cosine_data, duhamel_residual, evolve, lagrange_duhamel_v, strang_evolve, theta, vector_field_majorant,
    NonlinearitySpec,
};
use chrono_duhamel::multilinear::{AmbientNorm, StandardNorm, SymFunctional, SymTensor};
use chrono_duhamel::propagator::{propagate, CauchyData, CauchyNorm, DispersionRelation, FreeSolution, Grid};
use chrono_duhamel::series::{
    apply_majorant_operator, flow, flow_complex, gamma_constant, guaranteed_time, FlowControl, FlowStatus,
    MajorantSeries,
};
use chrono_duhamel::trees::tree_expand;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn benchmark() -> (Grid, DispersionRelation, NonlinearitySpec) {
    (
        Grid::new(32, 2.0 * PI).unwrap(),
        DispersionRelation::klein_gordon(1.0),
        NonlinearitySpec::monomial(3, 1.0),
    )
}

fn max_gap(a: &CauchyData, b: &CauchyData) -> f64 {
    a.to_vec().iter().zip(b.to_vec()).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()))
}

fn random_tensor(rng: &mut ChaCha8Rng, degree: usize, dim: usize) -> SymTensor {
    let mut t = SymTensor::zeros(degree, dim, 1);
    t.coeffs_mut().iter_mut().for_each(|c| *c = rng.gen_range(-1.0..1.0));
    t
}

fn random_functional(rng: &mut ChaCha8Rng, dim: usize, degrees: &[usize]) -> SymFunctional {
    SymFunctional::from_terms(dim, 1, degrees.iter().map(|&p| random_tensor(rng, p, dim))).unwrap()
}

/// Per-mode cos/sin rotation, group law and time reversal of the linear flow.
fn linear_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let grid = Grid::new(32, 2.0 * PI).unwrap();
    let masses = [1.0, 0.5, 0.0];
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let m = masses[rng.gen_range(0..masses.len())];
        let disp = DispersionRelation::klein_gordon(m);
        let q = rng.gen_range(-16i32..16);
        let xi = q as f64;
        let t = rng.gen_range(-20.0..20.0);
        let a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let b = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let wave: Vec<Complex64> = (0..32).map(|j| Complex64::new(0.0, xi * grid.x(j)).exp()).collect();
        let data = CauchyData::new(
            wave.iter().map(|e| a * e).collect(),
            Some(wave.iter().map(|e| b * e).collect()),
            0.0,
        )
        .unwrap();
        let moved = propagate(&grid, &disp, &data, t).unwrap();
        let w = (xi * xi + m * m).sqrt();
        let (c, s) = ((w * t).cos(), (w * t).sin());
        let sinc = if w == 0.0 { t } else { s / w };
        let pa = c * a + sinc * b;
        let pb = -w * s * a + c * b;
        let scale = a.norm().max(b.norm()) * w.max(1.0) * t.abs().max(1.0);
        for j in 0..32 {
            let e_psi = (moved.psi[j] - pa * wave[j]).norm();
            let e_chi = (moved.chi.as_ref().unwrap()[j] - pb * wave[j]).norm();
            worst = worst.max(e_psi.max(e_chi) / scale);
        }
    }
    let disp = DispersionRelation::klein_gordon(1.0);
    let mut group = 0.0f64;
    let mut reversal = 0.0f64;
    for _ in 0..200 {
        let psi: Vec<f64> = (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let chi: Vec<f64> = (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let data = CauchyData::real(&psi, &chi, 0.0).unwrap();
        let (s, t) = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let scale = data.max_abs() * 10.0;
        let two = propagate(&grid, &disp, &propagate(&grid, &disp, &data, s).unwrap(), s + t).unwrap();
        let one = propagate(&grid, &disp, &data, s + t).unwrap();
        group = group.max(max_gap(&two, &one) / scale);
        let back = propagate(&grid, &disp, &propagate(&grid, &disp, &data, t).unwrap(), 0.0).unwrap();
        reversal = reversal.max(max_gap(&back, &data) / scale);
    }
    outcome(
        worst < 1e-12 && group < 1e-12 && reversal < 1e-12,
        format!("mode {worst:.2e}, group {group:.2e}, reversal {reversal:.2e}"),
    )
}

/// Order-four decay of the integrated Duhamel residual on the benchmark.
fn residual_convergence() -> Outcome {
    let (grid, disp, cubic) = benchmark();
    let norm = CauchyNorm::standard(&grid, &disp);
    let data = cosine_data(&grid, 0.05, 0.0);
    let residuals: Vec<f64> = [0.1, 0.05, 0.025, 0.0125]
        .iter()
        .map(|&dt| {
            let traj = evolve(&grid, &disp, &cubic, &data, 0.0, 1.0, dt).unwrap();
            duhamel_residual(&grid, &disp, &cubic, &traj, &norm).unwrap().residual
        })
        .collect();
    let ratios: Vec<f64> = residuals.windows(2).map(|w| w[0] / w[1]).collect();
    outcome(
        ratios.iter().all(|r| (12.0..=20.0).contains(r)),
        format!("ratios {ratios:.2?}"),
    )
}

/// RK4 in the interaction picture against Strang splitting on the benchmark.
fn oracle_agreement() -> Outcome {
    let (grid, disp, cubic) = benchmark();
    let norm = CauchyNorm::standard(&grid, &disp);
    let data = cosine_data(&grid, 0.05, 0.0);
    let rk = |dt: f64| {
        let traj = evolve(&grid, &disp, &cubic, &data, 0.0, 1.0, dt).unwrap();
        traj.trace(&grid, &disp, traj.len() - 1).unwrap()
    };
    let strang = |dt: f64| strang_evolve(&grid, &disp, &cubic, &data, 0.0, 1.0, dt).unwrap().pop().unwrap();
    let diff = |a: &CauchyData, b: &CauchyData| {
        let v: Vec<Complex64> = a.to_vec().iter().zip(b.to_vec()).map(|(x, y)| x - y).collect();
        norm.norm_complex(&v)
    };
    let h = 0.025;
    let (rk_h, rk_half) = (rk(h), rk(h / 2.0));
    let (st_h, st_half) = (strang(h), strang(h / 2.0));
    let est_rk = 16.0 / 15.0 * diff(&rk_h, &rk_half);
    let est_st = 4.0 / 3.0 * diff(&st_h, &st_half);
    let gap = diff(&rk_h, &st_h);
    outcome(
        gap <= 5.0 * (est_rk + est_st),
        format!("gap {gap:.3e}, estimates rk {est_rk:.3e} strang {est_st:.3e}"),
    )
}

/// Invariance of `(U f)(Theta_t u)` for a point evaluation.
fn main_invariance() -> Outcome {
    let grid = Grid::new(8, 2.0 * PI).unwrap();
    let disp = DispersionRelation::klein_gordon(1.0);
    let cubic = NonlinearitySpec::monomial(3, 1.0);
    let f = point_eval_functional(&grid, &disp, 0, 0.0).unwrap();
    let traj = evolve(&grid, &disp, &cubic, &cosine_data(&grid, 0.05, 0.0), 0.0, 0.5, 0.01).unwrap();
    let drift = |cap: usize| {
        let inter = Interaction::new(&grid, &disp, &cubic, cap).unwrap();
        invariance_scan(&inter, &f, &traj, 1).unwrap().drift
    };
    let (d3, d5) = (drift(3), drift(5));
    let inter = Interaction::new(&grid, &disp, &cubic, 5).unwrap();
    let uf = inter.evolve(&f, 0.0, 0.5, 50).unwrap().functional;
    let end = uf.eval_scalar(&traj.last().chart().to_real_vec()).unwrap();
    let start = f.eval_scalar(&traj.states[0].chart().to_real_vec()).unwrap();
    let gap = (end - start).abs();
    outcome(
        d5 <= 1e-6 && d3 >= 10.0 * d5 && gap <= 1e-6,
        format!("drift P=3 {d3:.3e}, P=5 {d5:.3e}, final gap {gap:.3e}"),
    )
}

/// Tree expansion against the truncated dense transport.
fn tree_equivalence() -> Outcome {
    let disp = DispersionRelation::klein_gordon(1.0);
    let cubic = NonlinearitySpec::monomial(3, -0.7);
    let mut worst = 0.0f64;
    for m in [4, 8] {
        let grid = Grid::new(m, 2.0 * PI).unwrap();
        let phi = theta(&grid, &disp, &cosine_data(&grid, 1.0, 0.0)).unwrap();
        let c = phi.chart().to_real_vec();
        let inter = Interaction::new(&grid, &disp, &cubic, 5).unwrap();
        for (node, t1, t2) in [(0, 0.0, 0.25), (1, 0.25, 0.0), (m / 2, -0.1, 0.2)] {
            let f = point_eval_functional(&grid, &disp, node, 0.3).unwrap();
            let trees = tree_expand(&grid, &disp, &cubic, &f, t1, t2, 2).unwrap().evaluate(&phi).unwrap();
            let dense = inter.evolve(&f, t1, t2, 200).unwrap().functional.eval_scalar(&c).unwrap();
            worst = worst.max((trees.total - dense).abs());
        }
    }
    outcome(worst <= 1e-8, format!("max gap {worst:.3e}"))
}

/// Randomized majorant inequalities.
fn majorant_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let disp = DispersionRelation::klein_gordon(1.0);
    let cubic = NonlinearitySpec::monomial(3, 1.0);
    let horizon = 1.0;
    let setups: Vec<_> = [4usize, 8]
        .iter()
        .map(|&m| {
            let grid = Grid::new(m, 2.0 * PI).unwrap();
            let norm = CauchyNorm::standard(&grid, &disp);
            let x = vector_field_majorant(&grid, &disp, &cubic, horizon, &norm).unwrap().series;
            (grid, norm, x)
        })
        .collect();
    let rel = 1.0 + 1e-12;
    let instances = 1000;
    let mut violations = [0usize; 6];

    // coefficient law and operator-majorant bound
    for i in 0..instances {
        let (grid, norm, x) = &setups[i % 2];
        let inter = Interaction::with_norm(grid, &disp, &cubic, 5, norm.clone()).unwrap();
        let f = random_functional(&mut rng, 2 * grid.points(), &[1, 2, 3]);
        let t = rng.gen_range(-horizon..horizon);
        let out = inter.vdot(t, &f).unwrap();
        let fm = f.majorant(norm, &StandardNorm::LInf);
        let vm = out.output.majorant(norm, &StandardNorm::LInf);
        for m in 0..=5 {
            let rhs: f64 = (1..=m).map(|p| p as f64 * x.coeff(m + 1 - p) * fm.coeff(p)).sum();
            if vm.coeff(m) > rhs * rel {
                violations[0] += 1;
            }
        }
        let rho = rng.gen_range(0.01..1.0);
        if vm.eval(rho) > x.eval(rho) * fm.derivative(1).eval(rho) * rel {
            violations[1] += 1;
        }
    }

    // iterated bound for up to three applications
    let (grid, norm, x) = &setups[0];
    let inter = Interaction::with_norm(grid, &disp, &cubic, 8, norm.clone()).unwrap();
    for i in 0..instances {
        let k = 1 + i % 3;
        let f = random_functional(&mut rng, 2 * grid.points(), &[1, 2]);
        let mut g = f.clone();
        for _ in 0..k {
            g = inter.vdot(rng.gen_range(-horizon..horizon), &g).unwrap().output;
        }
        let bound = apply_majorant_operator(x, &f.majorant(norm, &StandardNorm::LInf), k);
        let gm = g.majorant(norm, &StandardNorm::LInf);
        let rho = rng.gen_range(0.01..1.0);
        let coeffwise = (0..gm.coeffs().len()).all(|m| gm.coeff(m) <= bound.coeff(m) * rel);
        if !coeffwise || gm.eval(rho) > bound.eval(rho) * rel {
            violations[2] += 1;
        }
    }

    // evaluation against the coefficient majorant
    for _ in 0..instances {
        let f = random_functional(&mut rng, 6, &[0, 1, 2, 3, 4]);
        let phi: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let lhs = f.eval_scalar(&phi).unwrap().abs();
        let rhs = f.majorant(&StandardNorm::L2, &StandardNorm::L2).eval(StandardNorm::L2.norm(&phi));
        if lhs > rhs * rel {
            violations[3] += 1;
        }
    }
    // the vector field itself is controlled by X in the Cauchy norm
    let (grid, norm, x) = &setups[1];
    for _ in 0..instances {
        let amp = rng.gen_range(0.01..2.0);
        let psi: Vec<f64> = (0..grid.points()).map(|_| amp * rng.gen_range(-1.0..1.0)).collect();
        let chi: Vec<f64> = (0..grid.points()).map(|_| amp * rng.gen_range(-1.0..1.0)).collect();
        let c = CauchyData::real(&psi, &chi, 0.0).unwrap();
        let phi = FreeSolution::from_chart(c.clone()).unwrap();
        let v = lagrange_duhamel_v(grid, &disp, &cubic, rng.gen_range(-horizon..horizon), &phi).unwrap();
        if norm.norm_of(v.chart()) > x.eval(norm.norm_of(&c)) * rel {
            violations[4] += 1;
        }
    }

    // derivative comparison through Gamma
    for _ in 0..instances {
        let f = MajorantSeries::new((0..31).map(|_| rng.gen_range(0.0..1.0)).collect());
        let big_r = rng.gen_range(0.2..3.0);
        let r = big_r * rng.gen_range(0.01..0.99);
        let k = rng.gen_range(0..5);
        if f.derivative(k).eval(r) > gamma_constant(r, big_r, k).unwrap() * f.eval(big_r) * rel {
            violations[5] += 1;
        }
    }
    outcome(
        violations.iter().all(|v| *v == 0),
        format!("violations {violations:?} over {instances} instances each"),
    )
}

/// Complex flow domination and the Taylor-flow identity.
fn flow_lemma() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let control = FlowControl::default();
    let tol = 10.0 * control.rel_tol;
    let mut violations = 0;
    let mut incomplete = 0;
    let mut samples = 0;
    while samples < 10_000 {
        let x = MajorantSeries::new((0..4).map(|_| rng.gen_range(0.0..1.0)).collect());
        let rho = rng.gen_range(0.1..1.0);
        let big_t = rng.gen_range(0.05..1.0);
        let outer = flow(&x, big_t, rho, &control);
        if !outer.completed() {
            continue;
        }
        for _ in 0..20 {
            let z = Complex64::from_polar(rho * rng.gen_range(0.0..1.0), rng.gen_range(0.0..2.0 * PI));
            let tau = Complex64::from_polar(big_t * rng.gen_range(0.0..1.0), rng.gen_range(0.0..2.0 * PI));
            let inner = flow_complex(&x, tau, z, &control);
            let mid = flow(&x, tau.norm(), z.norm(), &control);
            if inner.status != FlowStatus::Completed || !mid.completed() {
                incomplete += 1;
            } else if inner.value.norm() > mid.value * (1.0 + tol) || mid.value > outer.value * (1.0 + tol) {
                violations += 1;
            }
            samples += 1;
        }
    }

    let presets = [
        (MajorantSeries::new(vec![0.0, 0.0, 1.0]), MajorantSeries::new(vec![0.0, 1.0]), 1.0, 0.5),
        (MajorantSeries::new(vec![0.0, 0.0, 0.0, 2.0]), MajorantSeries::new(vec![0.0, 1.0, 1.0]), 1.0, 0.1),
        (MajorantSeries::new(vec![0.1, 0.3, 0.2]), MajorantSeries::new(vec![1.0, 0.5, 0.0, 0.25]), 0.8, 0.3),
        (MajorantSeries::new(vec![0.0, 0.5, 0.0, 0.0, 0.4]), MajorantSeries::new(vec![0.0, 0.0, 2.0]), 0.6, 0.4),
    ];
    let precise = FlowControl {
        rel_tol: 1e-13,
        abs_tol: 1e-16,
        ..control
    };
    let mut worst_terminal = 0.0f64;
    let mut monotone = true;
    for (x, h, big_r, big_t) in &presets {
        let start = flow(x, -big_t, *big_r, &precise);
        assert!(start.completed() && start.value > 0.0);
        let target = h.eval(*big_r);
        let mut partial = 0.0;
        let mut factor = 1.0;
        let mut last = f64::INFINITY;
        for k in 0..=120 {
            if k > 0 {
                factor *= big_t / k as f64;
            }
            partial += factor * apply_majorant_operator(x, h, k).eval(start.value);
            let residual = (target - partial).abs();
            // residuals shrink until they hit the flow's accuracy
            if residual > last && last > 1e-11 * target {
                monotone = false;
            }
            last = residual;
            if residual < 1e-12 * target {
                break;
            }
        }
        worst_terminal = worst_terminal.max(last);
    }
    outcome(
        violations == 0 && incomplete == 0 && monotone && worst_terminal <= 1e-8,
        format!(
            "{samples} samples, {violations} violations, {incomplete} incomplete; Taylor residual {worst_terminal:.2e}, monotone {monotone}"
        ),
    )
}

/// Certified window for the measured cubic majorant and the guaranteed-time closed form.
fn certified_window() -> Outcome {
    let grid = Grid::new(8, 2.0 * PI).unwrap();
    let disp = DispersionRelation::klein_gordon(1.0);
    let cubic = NonlinearitySpec::monomial(3, 1.0);
    let norm = CauchyNorm::standard(&grid, &disp);
    let x = vector_field_majorant(&grid, &disp, &cubic, 1.0, &norm).unwrap().series;
    let (big_r, floor) = (0.2, 0.1);
    let closed = |c: f64| (1.0 / (floor * floor) - 1.0 / (big_r * big_r)) / (2.0 * c);
    let mut worst_rel = 0.0f64;
    for c in [0.5, 2.0, 28.0, x.coeff(3)] {
        let t = guaranteed_time(&MajorantSeries::new(vec![0.0, 0.0, 0.0, c]), big_r, floor)
            .unwrap()
            .value();
        worst_rel = worst_rel.max((t - closed(c)).abs() / closed(c));
    }
    let t_bar = guaranteed_time(&x, big_r, floor).unwrap().value();
    let span = 0.5 * t_bar;
    let f = point_eval_functional(&grid, &disp, 0, 0.0).unwrap();
    let f_major = f.majorant(&norm, &StandardNorm::LInf);
    let mut rec = chrono_duhamel::chrono::certify_window(&f_major, &x, big_r, span).unwrap();
    let inter = Interaction::with_norm(&grid, &disp, &cubic, 5, norm.clone()).unwrap();
    let uf = inter.evolve(&f, 0.0, span, 100).unwrap().functional;
    let holds = rec.check_transported(&uf.majorant(&norm, &StandardNorm::LInf), 0.0);
    outcome(
        holds && worst_rel <= 1e-6 && span <= 1.0,
        format!(
            "T = {span:.4}, r' = {:.4}, [[U f]](r') = {:.4}, [[f]](R) = {:.4}, guaranteed-time rel error {worst_rel:.2e}",
            rec.certified_radius,
            rec.transported.unwrap_or(f64::NAN),
            rec.f_at_radius
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("linear exactness", linear_exactness),
        ("residual convergence", residual_convergence),
        ("oracle agreement", oracle_agreement),
        ("main invariance", main_invariance),
        ("tree/tensor equivalence", tree_equivalence),
        ("majorant suite", majorant_suite),
        ("flow lemma", flow_lemma),
        ("certified window", certified_window),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        if !o.passed {
            failures += 1;
        }
        println!(
            "criterion {} ({name}): {} [{:.2} s] {}",
            i + 1,
            if o.passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
