//! Quick randomized run of the library's invariants, keyed by name.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chrono::{invariance_scan, point_eval_functional, Interaction};
use crate::duhamel::{cosine_data, evolve, lagrange_duhamel_v, theta, vector_field_majorant, NonlinearitySpec};
use crate::error::Result;
use crate::multilinear::{polarize, upper_bound, AmbientNorm, StandardNorm, SymFunctional, SymTensor};
use crate::propagator::{
    energy, propagate, CauchyData, CauchyNorm, DispersionRelation, FreeSolution, Grid,
};
use crate::series::{flow, gamma_constant, FlowControl, MajorantSeries};
use crate::trees::tree_expand;

#[derive(Clone, Debug, PartialEq)]
pub struct SelfTestEntry {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn entry(name: &'static str, passed: bool, detail: String) -> SelfTestEntry {
    SelfTestEntry { name, passed, detail }
}

fn random_data(rng: &mut ChaCha8Rng, m: usize, amp: f64, t: f64) -> CauchyData {
    let psi: Vec<f64> = (0..m).map(|_| amp * rng.gen_range(-1.0..1.0)).collect();
    let chi: Vec<f64> = (0..m).map(|_| amp * rng.gen_range(-1.0..1.0)).collect();
    CauchyData::real(&psi, &chi, t).expect("lengths match")
}

fn max_diff(a: &CauchyData, b: &CauchyData) -> f64 {
    a.to_vec()
        .iter()
        .zip(b.to_vec())
        .fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

fn random_tensor(rng: &mut ChaCha8Rng, degree: usize, dim: usize) -> SymTensor {
    let mut t = SymTensor::zeros(degree, dim, 1);
    t.coeffs_mut().iter_mut().for_each(|c| *c = rng.gen_range(-1.0..1.0));
    t
}

/// Runs every check; entries are in a fixed order.
pub fn run(seed: u64) -> Result<Vec<SelfTestEntry>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let grid = Grid::new(8, 2.0 * PI)?;
    let kg = DispersionRelation::klein_gordon(1.0);
    let cubic = NonlinearitySpec::monomial(3, 1.0);
    let norm = CauchyNorm::standard(&grid, &kg);

    // linear propagator
    let mut worst = 0.0f64;
    let mut worst_energy = 0.0f64;
    for _ in 0..20 {
        let data = random_data(&mut rng, 8, 1.0, 0.0);
        let (a, b) = (rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        let two = propagate(&grid, &kg, &propagate(&grid, &kg, &data, a)?, b)?;
        let one = propagate(&grid, &kg, &data, b)?;
        worst = worst.max(max_diff(&two, &one));
        let e0 = energy(&grid, &kg, &data)?;
        worst_energy = worst_energy.max((energy(&grid, &kg, &one)? - e0).abs() / e0);
    }
    out.push(entry("propagator.group_law", worst < 1e-12, format!("max deviation {worst:.3e}")));
    out.push(entry(
        "propagator.energy_conservation",
        worst_energy < 1e-12,
        format!("max relative change {worst_energy:.3e}"),
    ));
    let schr = DispersionRelation::schrodinger();
    let psi: Vec<Complex64> = (0..8)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let data = CauchyData::new(psi, None, 0.0)?;
    let l2 = |d: &CauchyData| crate::propagator::sobolev_norm(&grid, d, 0.0, 0, 1.0);
    let moved = propagate(&grid, &schr, &data, 3.7)?;
    let drift = (l2(&moved)? - l2(&data)?).abs();
    out.push(entry("propagator.unitarity", drift < 1e-12, format!("L2 change {drift:.3e}")));

    // multilinear
    let mut worst = 0.0f64;
    for p in 1..=4 {
        let t = random_tensor(&mut rng, p, 4);
        let args: Vec<Vec<f64>> = (0..p).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let refs: Vec<&[f64]> = args.iter().map(|a| a.as_slice()).collect();
        let direct = t.eval_homogeneous(&refs)?[0];
        let pol = polarize(|x| t.eval_diagonal(x).expect("dim"), &refs)[0];
        worst = worst.max((direct - pol).abs() / direct.abs().max(1.0));
    }
    out.push(entry("multilinear.polarization", worst < 1e-10, format!("max relative gap {worst:.3e}")));
    let mut violations = 0;
    for _ in 0..50 {
        let f = SymFunctional::from_terms(4, 1, (0..4).map(|p| random_tensor(&mut rng, p, 4)))?;
        let phi: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lhs = f.eval_scalar(&phi)?.abs();
        let rhs = f.majorant(&StandardNorm::L2, &StandardNorm::L2).eval(StandardNorm::L2.norm(&phi));
        if lhs > rhs * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    out.push(entry("multilinear.majorant_bound", violations == 0, format!("{violations} violations")));

    // series calculus
    let x = MajorantSeries::new(vec![0.2, 0.5, 0.3]);
    let c = FlowControl::default();
    let direct = flow(&x, 0.5, 0.3, &c).value;
    let split = flow(&x, 0.3, flow(&x, 0.2, 0.3, &c).value, &c).value;
    let gap = (direct - split).abs();
    out.push(entry("series.flow_group_law", gap < 1e-8, format!("gap {gap:.3e}")));
    let mut violations = 0;
    for _ in 0..50 {
        let f = MajorantSeries::new((0..31).map(|_| rng.gen_range(0.0..1.0)).collect());
        let big_r = rng.gen_range(0.5..2.0);
        let r = big_r * rng.gen_range(0.05..0.95);
        let k = rng.gen_range(0..4);
        let lhs = f.derivative(k).eval(r);
        let rhs = gamma_constant(r, big_r, k)? * f.eval(big_r);
        if lhs > rhs * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    out.push(entry("series.gamma_comparison", violations == 0, format!("{violations} violations")));

    // nonlinear layer
    let data = random_data(&mut rng, 8, 0.1, 0.4);
    let th = theta(&grid, &kg, &data)?;
    let gap = max_diff(&th.sample_at(&grid, &kg, 0.4)?, &data);
    out.push(entry("duhamel.trace_identity", gap < 1e-12, format!("max deviation {gap:.3e}")));
    let x = vector_field_majorant(&grid, &kg, &cubic, 1.0, &norm)?;
    let mut violations = 0;
    for _ in 0..20 {
        let c = random_data(&mut rng, 8, 0.5, 0.0);
        let t = rng.gen_range(-1.0..1.0);
        let phi = FreeSolution::from_chart(c.clone())?;
        let v = lagrange_duhamel_v(&grid, &kg, &cubic, t, &phi)?;
        if norm.norm_of(v.chart()) > x.series.eval(norm.norm_of(&c)) * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    out.push(entry("duhamel.majorant_soundness", violations == 0, format!("{violations} violations")));

    // functionals
    let inter = Interaction::new(&grid, &kg, &cubic, 5)?;
    let f = point_eval_functional(&grid, &kg, 0, 0.0)?;
    let mut violations = 0;
    let mut g = SymFunctional::zero(16, 1);
    for p in [1, 3] {
        g.set_term(random_tensor(&mut rng, p, 16));
    }
    for _ in 0..10 {
        let t = rng.gen_range(-1.0..1.0);
        let app = inter.vdot(t, &g)?;
        for m in [3, 5] {
            let p = m - 2;
            let lhs = app.output.term(m).map_or(0.0, |t| upper_bound(t, &norm, &norm));
            let rhs = p as f64 * x.series.coeff(3) * upper_bound(g.term(p).expect("set"), &norm, &norm);
            if lhs > rhs * (1.0 + 1e-12) {
                violations += 1;
            }
        }
    }
    out.push(entry("chrono.coefficient_domination", violations == 0, format!("{violations} violations")));
    let traj = evolve(&grid, &kg, &cubic, &cosine_data(&grid, 0.05, 0.0), 0.0, 0.5, 0.05)?;
    let scan = invariance_scan(&inter, &f, &traj, 2)?;
    out.push(entry("chrono.invariance", scan.drift < 1e-6, format!("drift {:.3e}", scan.drift)));
    let small = Grid::new(4, 2.0 * PI)?;
    let f4 = point_eval_functional(&small, &kg, 1, 0.0)?;
    let phi = theta(&small, &kg, &cosine_data(&small, 0.8, 0.0))?;
    let trees = tree_expand(&small, &kg, &cubic, &f4, 0.0, 0.25, 2)?.evaluate(&phi)?;
    let dense = Interaction::new(&small, &kg, &cubic, 5)?.evolve(&f4, 0.0, 0.25, 100)?;
    let gap = (trees.total - dense.functional.eval_scalar(&phi.chart().to_real_vec())?).abs();
    out.push(entry("trees.tensor_equivalence", gap < 1e-8, format!("gap {gap:.3e}")));
    Ok(out)
}
