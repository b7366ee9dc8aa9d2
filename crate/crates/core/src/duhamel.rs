//! The nonlinear layer in the free-solution chart.
//!
//! A solution `u` is represented at each time by `Theta_t u`, the free solution
//! with the same Cauchy data at `t`. Its chart coordinates obey
//! `d(Theta_t u)/dt = -V_t(Theta_t u)` where
//! `V_t = A_{-t} o (0, N) o A_t` for Klein-Gordon and
//! `V_t = A_{-t} o (-i N) o A_t` for Schrodinger (`i u_t + u_xx + N(u) = 0`).

use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::multilinear::SymTensor;
use crate::propagator::{
    green_apply, make_free_solution, propagate, propagator_bound, propagator_matrix, to_complex,
    CauchyData, CauchyNorm, DispersionKind, DispersionRelation, FreeSolution, Grid,
};
use crate::series::MajorantSeries;

/// Autonomous scalar nonlinearity `N(u) = sum_k N_k u^k`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct NonlinearitySpec {
    coeffs: Vec<f64>,
}

impl NonlinearitySpec {
    /// Coefficients indexed by degree.
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut s = Self { coeffs };
        while s.coeffs.last() == Some(&0.0) {
            s.coeffs.pop();
        }
        s
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut coeffs = Vec::new();
        for (k, c) in terms {
            if coeffs.len() <= k {
                coeffs.resize(k + 1, 0.0);
            }
            coeffs[k] += c;
        }
        Self::new(coeffs)
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// `lambda u^k`
    pub fn monomial(k: usize, lambda: f64) -> Self {
        Self::from_terms([(k, lambda)])
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degrees with a nonzero coefficient.
    pub fn degrees(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(k, c)| (k, *c))
    }

    /// The single `(k, N_k)` of a monomial nonlinearity.
    pub fn as_monomial(&self) -> Option<(usize, f64)> {
        let mut it = self.degrees();
        let first = it.next()?;
        it.next().is_none().then_some(first)
    }

    /// Series with coefficients `|N_k|`.
    pub fn majorant(&self) -> MajorantSeries {
        MajorantSeries::new(self.coeffs.iter().map(|c| c.abs()).collect())
    }

    /// Holomorphic evaluation by Horner's rule.
    pub fn apply(&self, u: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * u + c)
    }

    pub fn apply_field(&self, u: &[Complex64]) -> Vec<Complex64> {
        u.iter().map(|&z| self.apply(z)).collect()
    }
}

/// The free solution sharing the given Cauchy data at its anchor time.
pub fn theta(grid: &Grid, disp: &DispersionRelation, data: &CauchyData) -> Result<FreeSolution> {
    make_free_solution(grid, disp, data)
}

/// Chart form of `V_t`: sample at `t`, apply `N`, lift back to the chart.
pub fn lagrange_duhamel_v(
    grid: &Grid,
    disp: &DispersionRelation,
    nonlin: &NonlinearitySpec,
    t: f64,
    phi: &FreeSolution,
) -> Result<FreeSolution> {
    let at = phi.sample_at(grid, disp, t)?;
    let mut source = nonlin.apply_field(&at.psi);
    if disp.kind == DispersionKind::Schrodinger {
        let minus_i = Complex64::new(0.0, -1.0);
        source.iter_mut().for_each(|z| *z *= minus_i);
    }
    green_apply(grid, disp, t, &source)
}

/// Structure of `V_t` on real Klein-Gordon charts:
/// `V_t^(k)(phi) = N_k sum_j g_j (w_j . phi)^k`, where `g_j = A_{-t}(0, e_j)`
/// is the lift of a unit source at node `j` and `w_j` is row `j` of the `psi`
/// block of `A_t`.
#[derive(Clone, Debug)]
pub struct InteractionLift {
    pub time: f64,
    pub g: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
}

impl InteractionLift {
    pub fn new(grid: &Grid, disp: &DispersionRelation, t: f64) -> Result<Self> {
        let m = grid.points();
        let d = 2 * m;
        let fwd = propagator_matrix(grid, disp, t)?;
        let back = propagator_matrix(grid, disp, -t)?;
        let g = (0..m)
            .map(|j| (0..d).map(|r| back[r * d + m + j]).collect())
            .collect();
        let w = (0..m).map(|j| fwd[j * d..(j + 1) * d].to_vec()).collect();
        Ok(Self { time: t, g, w })
    }

    pub fn nodes(&self) -> usize {
        self.g.len()
    }

    /// `max_a sum_j |g_j[a]| ||w_j||_1^k`
    pub fn coefficient_growth(&self, k: usize) -> f64 {
        let d = self.g.first().map_or(0, |g| g.len());
        let wk: Vec<f64> = self
            .w
            .iter()
            .map(|w| w.iter().map(|x| x.abs()).sum::<f64>().powi(k as i32))
            .collect();
        (0..d)
            .map(|a| self.g.iter().zip(&wk).map(|(g, p)| g[a].abs() * p).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Degree-`k` component of `V_t` as a vector-valued symmetric tensor.
pub fn vector_field_tensor(
    grid: &Grid,
    disp: &DispersionRelation,
    nonlin: &NonlinearitySpec,
    t: f64,
    k: usize,
) -> Result<SymTensor> {
    let lift = InteractionLift::new(grid, disp, t)?;
    let d = 2 * grid.points();
    let mut out = SymTensor::zeros(k, d, d);
    let nk = nonlin.coeff(k);
    if nk == 0.0 {
        return Ok(out);
    }
    let n = out.canonical_len();
    for (g, w) in lift.g.iter().zip(&lift.w) {
        let pow = SymTensor::power_of_linear_form(w, k, nk);
        for (i, gi) in g.iter().enumerate() {
            if *gi == 0.0 {
                continue;
            }
            let row = &mut out.coeffs_mut()[i * n..(i + 1) * n];
            row.iter_mut().zip(pow.coeffs()).for_each(|(r, p)| *r += gi * p);
        }
    }
    Ok(out)
}

/// Solution path `t_i -> Theta_{t_i} u`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<FreeSolution>,
}

impl Trajectory {
    /// Pushes PDE Cauchy data through `theta`.
    pub fn from_cauchy_data(grid: &Grid, disp: &DispersionRelation, data: &[CauchyData]) -> Result<Self> {
        let states = data
            .iter()
            .map(|d| theta(grid, disp, d))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            times: data.iter().map(|d| d.time).collect(),
            states,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &FreeSolution {
        self.states.last().expect("trajectories are nonempty")
    }

    /// `[u]_{t_i} = [Theta_{t_i} u]_{t_i}`
    pub fn trace(&self, grid: &Grid, disp: &DispersionRelation, i: usize) -> Result<CauchyData> {
        self.states[i].sample_at(grid, disp, self.times[i])
    }
}

/// Number of uniform steps of size about `dt` covering `[t1, t2]`.
pub fn step_count(t1: f64, t2: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {dt}")));
    }
    let span = (t2 - t1).abs();
    let n = (span / dt).round();
    if (n * dt - span).abs() > 1e-9 * span.max(dt) {
        return Err(Error::Domain(format!(
            "step {dt} does not divide the interval length {span}"
        )));
    }
    Ok(n as usize)
}

fn chart_rhs(
    grid: &Grid,
    disp: &DispersionRelation,
    nonlin: &NonlinearitySpec,
    t: f64,
    c: &[Complex64],
) -> Result<Vec<Complex64>> {
    let phi = FreeSolution::from_chart(CauchyData::from_vec(c, disp.kind.second_order(), 0.0))?;
    let v = lagrange_duhamel_v(grid, disp, nonlin, t, &phi)?;
    Ok(v.chart().to_vec().into_iter().map(|z| -z).collect())
}

fn axpy(y: &[Complex64], a: f64, x: &[Complex64]) -> Vec<Complex64> {
    y.iter().zip(x).map(|(y, x)| y + x * a).collect()
}

/// Classical RK4 on the chart coordinates of `Theta_t u`.
pub fn evolve(
    grid: &Grid,
    disp: &DispersionRelation,
    nonlin: &NonlinearitySpec,
    initial: &CauchyData,
    t1: f64,
    t2: f64,
    dt: f64,
) -> Result<Trajectory> {
    if (initial.time - t1).abs() > 1e-12 * t1.abs().max(1.0) {
        return Err(Error::Domain(format!(
            "initial data is anchored at {}, not at t1 = {t1}",
            initial.time
        )));
    }
    let n = if t1 == t2 { 0 } else { step_count(t1, t2, dt)? };
    let start = theta(grid, disp, initial)?;
    let mut times = vec![t1];
    let mut states = vec![start.clone()];
    if n == 0 {
        return Ok(Trajectory { times, states });
    }
    let h = (t2 - t1) / n as f64;
    let so = disp.kind.second_order();
    let mut c = start.chart().to_vec();
    for step in 1..=n {
        let t = t1 + (step - 1) as f64 * h;
        let k1 = chart_rhs(grid, disp, nonlin, t, &c)?;
        let k2 = chart_rhs(grid, disp, nonlin, t + 0.5 * h, &axpy(&c, 0.5 * h, &k1))?;
        let k3 = chart_rhs(grid, disp, nonlin, t + 0.5 * h, &axpy(&c, 0.5 * h, &k2))?;
        let k4 = chart_rhs(grid, disp, nonlin, t + h, &axpy(&c, h, &k3))?;
        for i in 0..c.len() {
            c[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
        let state = CauchyData::from_vec(&c, so, 0.0);
        if !state.is_finite() || state.max_abs() > 1e150 {
            return Err(Error::Divergence {
                step,
                time: t + h,
                what: "evolve: chart coordinates left the representable range".into(),
            });
        }
        times.push(if step == n { t2 } else { t1 + step as f64 * h });
        states.push(FreeSolution::from_chart(state)?);
    }
    Ok(Trajectory { times, states })
}

/// Independent reference: Strang splitting of the PDE itself.
///
/// Each step is a half linear step, the pointwise nonlinear flow over a full
/// step, and another half linear step. For Klein-Gordon the nonlinear flow
/// `psi' = 0, chi' = -N(psi)` is exact; for Schrodinger `psi' = i N(psi)` is
/// integrated pointwise with four RK4 substeps. Returns the PDE Cauchy data
/// at every node.
pub fn strang_evolve(
    grid: &Grid,
    disp: &DispersionRelation,
    nonlin: &NonlinearitySpec,
    initial: &CauchyData,
    t1: f64,
    t2: f64,
    dt: f64,
) -> Result<Vec<CauchyData>> {
    let n = if t1 == t2 { 0 } else { step_count(t1, t2, dt)? };
    let mut out = vec![CauchyData {
        time: t1,
        ..initial.clone()
    }];
    if n == 0 {
        return Ok(out);
    }
    let h = (t2 - t1) / n as f64;
    let mut cur = out[0].clone();
    for step in 1..=n {
        let t = cur.time;
        let mut half = propagate(grid, disp, &cur, t + 0.5 * h)?;
        match disp.kind {
            DispersionKind::KleinGordon => {
                let kick = nonlin.apply_field(&half.psi);
                let chi = half.chi.as_mut().expect("second-order data");
                chi.iter_mut().zip(kick).for_each(|(c, f)| *c -= f * h);
            }
            DispersionKind::Schrodinger => {
                let i = Complex64::new(0.0, 1.0);
                let sub = 4;
                let hs = h / sub as f64;
                for z in half.psi.iter_mut() {
                    for _ in 0..sub {
                        let f = |u: Complex64| i * nonlin.apply(u);
                        let k1 = f(*z);
                        let k2 = f(*z + k1 * (0.5 * hs));
                        let k3 = f(*z + k2 * (0.5 * hs));
                        let k4 = f(*z + k3 * hs);
                        *z += (k1 + (k2 + k3) * 2.0 + k4) * (hs / 6.0);
                    }
                }
            }
        }
        let end = if step == n { t2 } else { t1 + step as f64 * h };
        // the second half step is anchored at the midpoint
        cur = propagate(grid, disp, &half, end)?;
        if !cur.is_finite() {
            return Err(Error::Divergence {
                step,
                time: end,
                what: "strang splitting: non-finite field values".into(),
            });
        }
        out.push(cur.clone());
    }
    Ok(out)
}

/// Composite quadrature weights on `n` uniform intervals of width `h`:
/// Simpson, with a closing 3/8 panel for odd `n >= 3`, trapezoid for `n = 1`.
pub fn composite_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n + 1];
    match n {
        0 => {}
        1 => {
            w[0] = 0.5 * h;
            w[1] = 0.5 * h;
        }
        _ => {
            let simpson = if n % 2 == 0 { n } else { n - 3 };
            for i in (0..simpson).step_by(2) {
                w[i] += h / 3.0;
                w[i + 1] += 4.0 * h / 3.0;
                w[i + 2] += h / 3.0;
            }
            if n % 2 == 1 {
                let s = simpson;
                for (o, c) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
                    w[s + o] += 3.0 * h / 8.0 * c;
                }
            }
        }
    }
    w
}

/// Residual of the integrated Duhamel identity with the quadrature's own error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualReport {
    pub residual: f64,
    pub quadrature_error: f64,
}

fn vector_field_samples(
    grid: &Grid,
    disp: &DispersionRelation,
    nonlin: &NonlinearitySpec,
    traj: &Trajectory,
) -> Result<Vec<Vec<Complex64>>> {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| Ok(lagrange_duhamel_v(grid, disp, nonlin, t, s)?.chart().to_vec()))
        .collect()
}

fn quadrature(values: &[Vec<Complex64>], weights: &[f64], stride: usize) -> Vec<Complex64> {
    let mut acc = vec![Complex64::new(0.0, 0.0); values[0].len()];
    for (k, w) in weights.iter().enumerate() {
        for (a, v) in acc.iter_mut().zip(&values[k * stride]) {
            *a += v * *w;
        }
    }
    acc
}

fn uniform_step(traj: &Trajectory) -> f64 {
    let n = traj.len() - 1;
    if n == 0 {
        0.0
    } else {
        (traj.times[n] - traj.times[0]) / n as f64
    }
}

/// `|| Theta_{t2} u - Theta_{t1} u + int_{t1}^{t2} V_t(Theta_t u) dt ||` over the
/// whole trajectory, with composite Simpson quadrature on the nodes.
pub fn duhamel_residual(
    grid: &Grid,
    disp: &DispersionRelation,
    nonlin: &NonlinearitySpec,
    traj: &Trajectory,
    norm: &CauchyNorm,
) -> Result<ResidualReport> {
    let n = traj.len() - 1;
    let h = uniform_step(traj);
    let vs = vector_field_samples(grid, disp, nonlin, traj)?;
    let integral = quadrature(&vs, &composite_weights(n, h), 1);
    let first = traj.states[0].chart().to_vec();
    let last = traj.last().chart().to_vec();
    let r: Vec<Complex64> = (0..first.len()).map(|i| last[i] - first[i] + integral[i]).collect();
    let quadrature_error = if n >= 4 && n % 2 == 0 {
        let coarse = quadrature(&vs, &composite_weights(n / 2, 2.0 * h), 2);
        let diff: Vec<Complex64> = integral.iter().zip(&coarse).map(|(a, b)| a - b).collect();
        norm.norm_complex(&diff) / 15.0
    } else {
        f64::NAN
    };
    Ok(ResidualReport {
        residual: norm.norm_complex(&r),
        quadrature_error,
    })
}

/// Residual over `[t_0, t_i]` for every node `i`.
pub fn duhamel_residual_running(
    grid: &Grid,
    disp: &DispersionRelation,
    nonlin: &NonlinearitySpec,
    traj: &Trajectory,
    norm: &CauchyNorm,
) -> Result<Vec<f64>> {
    let h = uniform_step(traj);
    let vs = vector_field_samples(grid, disp, nonlin, traj)?;
    let first = traj.states[0].chart().to_vec();
    Ok((0..traj.len())
        .map(|i| {
            let integral = quadrature(&vs[..=i], &composite_weights(i, h), 1);
            let cur = traj.states[i].chart().to_vec();
            let r: Vec<Complex64> = (0..first.len()).map(|a| cur[a] - first[a] + integral[a]).collect();
            norm.norm_complex(&r)
        })
        .collect())
}

/// Largest grid `L^2` norm of `u_tt - u_xx + m^2 u + N(u)` over interior nodes,
/// with `u(t_i) = (Theta_{t_i} u)|_{t_i}` and fourth-order time differences.
pub fn pde_residual(
    grid: &Grid,
    disp: &DispersionRelation,
    nonlin: &NonlinearitySpec,
    traj: &Trajectory,
) -> Result<f64> {
    if disp.kind != DispersionKind::KleinGordon {
        return Err(Error::Unsupported("the PDE residual is implemented for Klein-Gordon".into()));
    }
    if traj.len() < 5 {
        return Err(Error::Domain("the PDE residual needs at least five nodes".into()));
    }
    let h = uniform_step(traj);
    let u: Vec<Vec<Complex64>> = (0..traj.len())
        .map(|i| Ok(traj.trace(grid, disp, i)?.psi))
        .collect::<Result<_>>()?;
    let eps2: Vec<f64> = grid
        .frequencies()
        .iter()
        .map(|&xi| disp.epsilon(xi).powi(2))
        .collect();
    let mut worst = 0.0f64;
    for i in 2..traj.len() - 2 {
        let mut spec = grid.fft(&u[i]);
        spec.iter_mut().zip(&eps2).for_each(|(z, e)| *z *= e);
        let lin = grid.ifft(&spec);
        let nl = nonlin.apply_field(&u[i]);
        let mut sum = 0.0;
        for j in 0..grid.points() {
            let utt = (-u[i - 2][j] + u[i - 1][j] * 16.0 - u[i][j] * 30.0 + u[i + 1][j] * 16.0
                - u[i + 2][j])
                / (12.0 * h * h);
            sum += (utt + lin[j] + nl[j]).norm_sqr();
        }
        worst = worst.max((grid.dx() * sum).sqrt());
    }
    Ok(worst)
}

/// Bounds on the discrete algebra constant `||fg||_{H^s} <= Q ||f||_{H^s} ||g||_{H^s}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlgebraConstant {
    /// Certified: `sqrt(max_k sum_l K_{kl}^2 / Lx)` with
    /// `K_{kl} = <xi_k>^s / (<xi_l>^s <xi_{k-l}>^s)`, indices mod `M`.
    pub upper: f64,
    /// Best ratio found on sampled products.
    pub lower: f64,
}

pub fn algebra_constant(grid: &Grid, s: f64, m_ref: f64, seed: u64) -> AlgebraConstant {
    let m = grid.points();
    let w: Vec<f64> = grid.japanese_bracket(m_ref).iter().map(|b| b.powf(s)).collect();
    let sup = (0..m)
        .map(|k| {
            (0..m)
                .map(|l| {
                    let q = w[k] / (w[l] * w[(k + m - l) % m]);
                    q * q
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    let upper = (sup / grid.length()).sqrt();

    let hs = |f: &[Complex64]| {
        crate::propagator::sobolev_norm(grid, &CauchyData::new(f.to_vec(), None, 0.0).expect("no chi"), s, 0, m_ref)
            .expect("grid matches")
    };
    let ratio = |f: &[Complex64], g: &[Complex64]| {
        let fg: Vec<Complex64> = f.iter().zip(g).map(|(a, b)| a * b).collect();
        hs(&fg) / (hs(f) * hs(g))
    };
    let mut lower = ratio(&vec![Complex64::new(1.0, 0.0); m], &vec![Complex64::new(1.0, 0.0); m]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..256 {
        let f: Vec<Complex64> = (0..m).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), 0.0)).collect();
        let g: Vec<Complex64> = if trial % 2 == 0 {
            f.clone()
        } else {
            (0..m).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), 0.0)).collect()
        };
        lower = lower.max(ratio(&f, &g));
    }
    AlgebraConstant { upper, lower }
}

/// Majorant `X` of `V_t` together with the constants it was built from.
#[derive(Clone, Debug)]
pub struct VectorFieldMajorant {
    pub series: MajorantSeries,
    /// `C_A` with `||A_tau|| <= C_A` for `|tau| <= T`.
    pub propagator_bound: f64,
    pub algebra: AlgebraConstant,
    /// Norm-level coefficients `C_A^{k+1} Q^{k-1} |N_k| / m_ref`.
    pub analytic: Vec<f64>,
    /// Coefficient-level constants `|N_k| kappa^{k-1} max_t growth_k(t)`, which
    /// bound the computable upper tensor norms of `V_t . f` (Klein-Gordon only).
    pub coefficient: Vec<f64>,
}

/// Number of sample times per unit interval length used for the coefficient-level constants.
pub const MAJORANT_TIME_SAMPLES: usize = 256;

/// `X_k` dominating `||V_t^(k)||` for `|t| <= T` in the Cauchy norm `norm`.
///
/// Each `X_k` is the larger of the norm-level bound (propagator bound, algebra
/// constant, and `<xi> >= m_ref`) and the coefficient-level constant, so the
/// same series dominates both the operator norms and the coefficient upper
/// bounds used for certificates.
pub fn vector_field_majorant(
    grid: &Grid,
    disp: &DispersionRelation,
    nonlin: &NonlinearitySpec,
    horizon: f64,
    norm: &CauchyNorm,
) -> Result<VectorFieldMajorant> {
    let s = norm.s();
    if s < 0.0 {
        return Err(Error::Domain(format!("Sobolev index must be nonnegative, got {s}")));
    }
    let m_ref = norm.m_ref();
    let ca = propagator_bound(grid, disp, m_ref, horizon);
    let algebra = algebra_constant(grid, s, m_ref, 0x51a7);
    let q = algebra.upper;
    let len = nonlin.coeffs().len();
    let mut analytic = vec![0.0f64; len];
    for (k, nk) in nonlin.degrees() {
        analytic[k] = match (disp.kind, k) {
            (DispersionKind::KleinGordon, 0) => ca * grid.length().sqrt() * m_ref.powf(s - 1.0) * nk.abs(),
            (DispersionKind::KleinGordon, _) => {
                ca.powi(k as i32 + 1) * q.powi(k as i32 - 1) * nk.abs() / m_ref
            }
            (DispersionKind::Schrodinger, 0) => grid.length().sqrt() * m_ref.powf(s) * nk.abs(),
            (DispersionKind::Schrodinger, _) => q.powi(k as i32 - 1) * nk.abs(),
        };
    }
    let mut coefficient = vec![0.0f64; len];
    if disp.kind == DispersionKind::KleinGordon && !nonlin.is_zero() {
        let kappa = norm.kappa();
        let samples = ((MAJORANT_TIME_SAMPLES as f64 * horizon.abs()).ceil() as usize).max(16);
        let times: Vec<f64> = (0..=2 * samples)
            .map(|i| horizon.abs() * (i as f64 / samples as f64 - 1.0))
            .collect();
        let lifts: Vec<InteractionLift> = times
            .iter()
            .map(|&t| InteractionLift::new(grid, disp, t))
            .collect::<Result<_>>()?;
        for (k, nk) in nonlin.degrees() {
            let growth: Vec<f64> = lifts.iter().map(|l| l.coefficient_growth(k)).collect();
            let mut best = growth.iter().copied().fold(0.0f64, f64::max);
            // refine every interior local maximum of the samples
            for i in 1..growth.len() - 1 {
                if growth[i] >= growth[i - 1] && growth[i] >= growth[i + 1] {
                    let at = |t: f64| InteractionLift::new(grid, disp, t).map(|l| l.coefficient_growth(k));
                    best = best.max(golden_max(at, times[i - 1], times[i + 1])?);
                }
            }
            coefficient[k] = nk.abs() * kappa.powi(k as i32 - 1) * best;
        }
    }
    let coeffs = analytic
        .iter()
        .zip(&coefficient)
        .map(|(a, c)| a.max(*c))
        .collect();
    Ok(VectorFieldMajorant {
        series: MajorantSeries::new(coeffs),
        propagator_bound: ca,
        algebra,
        analytic,
        coefficient,
    })
}

/// Largest value of `f` found by golden-section search on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<f64> {
    let r = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    let mut best = fc.max(fd);
    for _ in 0..80 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
        best = best.max(fc).max(fd);
        if b - a < 1e-15 * (1.0 + a.abs()) {
            break;
        }
    }
    Ok(best)
}

/// Writes `(t, cau_norm, energy, duhamel_residual_running)` rows.
///
/// `cau_norm` is the Cauchy norm of the chart point `Theta_t u`; `energy` is the
/// linear energy of `[u]_t` (the grid `L^2` mass for Schrodinger).
#[allow(clippy::too_many_arguments)]
pub fn write_trajectory_csv<W: Write>(
    mut w: W,
    grid: &Grid,
    disp: &DispersionRelation,
    nonlin: &NonlinearitySpec,
    traj: &Trajectory,
    norm: &CauchyNorm,
) -> Result<()> {
    let running = duhamel_residual_running(grid, disp, nonlin, traj, norm)?;
    writeln!(w, "t,cau_norm,energy,duhamel_residual_running")?;
    for i in 0..traj.len() {
        let chart = traj.states[i].chart();
        let trace = traj.trace(grid, disp, i)?;
        let e = match disp.kind {
            DispersionKind::KleinGordon => crate::propagator::energy(grid, disp, &trace)?,
            DispersionKind::Schrodinger => grid.dx() * trace.psi.iter().map(|z| z.norm_sqr()).sum::<f64>(),
        };
        writeln!(
            w,
            "{:.17e},{:.17e},{:.17e},{:.17e}",
            traj.times[i],
            norm.norm_of(chart),
            e,
            running[i]
        )?;
    }
    Ok(())
}

/// Real chart data `(a cos(2 pi x / Lx), 0)` at time `t`.
pub fn cosine_data(grid: &Grid, amplitude: f64, t: f64) -> CauchyData {
    let psi: Vec<f64> = (0..grid.points())
        .map(|j| amplitude * (2.0 * std::f64::consts::PI * grid.x(j) / grid.length()).cos())
        .collect();
    CauchyData::new(to_complex(&psi), Some(vec![Complex64::new(0.0, 0.0); grid.points()]), t)
        .expect("lengths match")
}

/// Data with entries uniform in `[-amplitude, amplitude]` drawn from `seed`;
/// complex `psi` and no `chi` for Schrodinger.
pub fn random_data(grid: &Grid, disp: &DispersionRelation, amplitude: f64, seed: u64, t: f64) -> CauchyData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = grid.points();
    let mut draw = || amplitude * rng.gen_range(-1.0..=1.0);
    match disp.kind {
        DispersionKind::KleinGordon => {
            let psi: Vec<f64> = (0..m).map(|_| draw()).collect();
            let chi: Vec<f64> = (0..m).map(|_| draw()).collect();
            CauchyData::real(&psi, &chi, t).expect("lengths match")
        }
        DispersionKind::Schrodinger => {
            let psi = (0..m).map(|_| Complex64::new(draw(), draw())).collect();
            CauchyData::new(psi, None, t).expect("no chi")
        }
    }
}
