//! Exact spectral solutions of the linear equation on a periodic 1-D grid.
//!
//! Fourier conventions: the forward transform is unnormalized,
//! `psi_hat_k = sum_j psi_j e^{-i xi_k x_j}`, the inverse carries `1/M`, and
//! `L^2` pairings carry the Parseval weight `Lx / M^2`, so that
//! `||psi||_{H^s}^2 = (Lx/M^2) sum_k <xi_k>^{2s} |psi_hat_k|^2`. At `s = 0`
//! this is exactly the trapezoid grid norm `dx sum_j |psi_j|^2`.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multilinear::{AmbientNorm, CoordinateBound};

/// Uniform periodic grid `x_j = j Lx / M`.
#[derive(Clone)]
pub struct Grid {
    points: usize,
    length: f64,
    xi: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("points", &self.points)
            .field("length", &self.length)
            .finish()
    }
}

impl Grid {
    /// `points` must be a power of two `>= 4`.
    pub fn new(points: usize, length: f64) -> Result<Self> {
        if points < 4 || !points.is_power_of_two() {
            return Err(Error::Domain(format!(
                "grid size must be a power of two >= 4, got {points}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Domain(format!("grid length must be positive, got {length}")));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(points);
        let inverse = planner.plan_fft_inverse(points);
        let half = points as i64 / 2;
        let xi = (0..points as i64)
            .map(|j| {
                let k = if j < half { j } else { j - points as i64 };
                2.0 * PI * k as f64 / length
            })
            .collect();
        Ok(Self {
            points,
            length,
            xi,
            forward,
            inverse,
        })
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.points as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    /// Angular frequencies in FFT order (Nyquist mode taken as negative).
    pub fn frequencies(&self) -> &[f64] {
        &self.xi
    }

    /// Parseval weight `Lx / M^2`.
    pub fn parseval_weight(&self) -> f64 {
        self.length / (self.points * self.points) as f64
    }

    pub fn fft(&self, field: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(field.len(), self.points);
        let mut buf = field.to_vec();
        self.forward.process(&mut buf);
        buf
    }

    pub fn ifft(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(spectrum.len(), self.points);
        let mut buf = spectrum.to_vec();
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.points as f64;
        buf.iter_mut().for_each(|z| *z *= scale);
        buf
    }

    /// `<xi> = sqrt(m_ref^2 + xi^2)` per mode.
    pub fn japanese_bracket(&self, m_ref: f64) -> Vec<f64> {
        self.xi.iter().map(|x| (m_ref * m_ref + x * x).sqrt()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispersionKind {
    KleinGordon,
    Schrodinger,
}

impl DispersionKind {
    pub fn name(self) -> &'static str {
        match self {
            DispersionKind::KleinGordon => "klein_gordon",
            DispersionKind::Schrodinger => "schrodinger",
        }
    }

    /// Whether Cauchy data carries a time-derivative trace.
    pub fn second_order(self) -> bool {
        self == DispersionKind::KleinGordon
    }
}

impl fmt::Display for DispersionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `u_tt - u_xx + m^2 u = 0` or `i u_t + u_xx = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispersionRelation {
    pub kind: DispersionKind,
    pub mass: f64,
}

impl DispersionRelation {
    pub fn klein_gordon(mass: f64) -> Self {
        Self {
            kind: DispersionKind::KleinGordon,
            mass,
        }
    }

    pub fn schrodinger() -> Self {
        Self {
            kind: DispersionKind::Schrodinger,
            mass: 0.0,
        }
    }

    /// Klein-Gordon frequency `sqrt(m^2 + xi^2)`.
    pub fn epsilon(&self, xi: f64) -> f64 {
        (self.mass * self.mass + xi * xi).sqrt()
    }

    /// Schrodinger phase `-xi^2`.
    pub fn omega(&self, xi: f64) -> f64 {
        -xi * xi
    }

    /// Default weight mass for Sobolev norms: `m` when positive, else 1.
    pub fn reference_mass(&self) -> f64 {
        if self.kind == DispersionKind::KleinGordon && self.mass > 0.0 {
            self.mass
        } else {
            1.0
        }
    }
}

/// `sin(e t) / e`, with the `e -> 0` limit `t`.
pub fn sinc_time(e: f64, t: f64) -> f64 {
    if e == 0.0 {
        t
    } else {
        (e * t).sin() / e
    }
}

/// Per-mode Klein-Gordon evolution matrix `[[cos, sin/e], [-e sin, cos]]`.
pub fn kg_mode_matrix(e: f64, t: f64) -> [[f64; 2]; 2] {
    let c = (e * t).cos();
    [[c, sinc_time(e, t)], [-e * (e * t).sin(), c]]
}

/// Traces `(psi, chi)` on the slice `{time = t}`; `chi` is absent for first-order kinds.
#[derive(Clone, Debug, PartialEq)]
pub struct CauchyData {
    pub psi: Vec<Complex64>,
    pub chi: Option<Vec<Complex64>>,
    pub time: f64,
}

impl CauchyData {
    pub fn new(psi: Vec<Complex64>, chi: Option<Vec<Complex64>>, time: f64) -> Result<Self> {
        if let Some(c) = &chi {
            if c.len() != psi.len() {
                return Err(Error::DimensionMismatch {
                    expected: psi.len(),
                    got: c.len(),
                });
            }
        }
        Ok(Self { psi, chi, time })
    }

    /// Real second-order data.
    pub fn real(psi: &[f64], chi: &[f64], time: f64) -> Result<Self> {
        Self::new(to_complex(psi), Some(to_complex(chi)), time)
    }

    pub fn zeros(kind: DispersionKind, points: usize, time: f64) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); points];
        Self {
            psi: z.clone(),
            chi: kind.second_order().then_some(z),
            time,
        }
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    fn check(&self, grid: &Grid, disp: &DispersionRelation) -> Result<()> {
        if self.psi.len() != grid.points() {
            return Err(Error::DimensionMismatch {
                expected: grid.points(),
                got: self.psi.len(),
            });
        }
        if self.chi.is_some() != disp.kind.second_order() {
            return Err(Error::Domain(format!(
                "Cauchy data shape does not match a {} equation",
                disp.kind
            )));
        }
        Ok(())
    }

    /// Flat coordinates `(psi, chi)` (complex).
    pub fn to_vec(&self) -> Vec<Complex64> {
        let mut v = self.psi.clone();
        if let Some(c) = &self.chi {
            v.extend_from_slice(c);
        }
        v
    }

    pub fn from_vec(v: &[Complex64], second_order: bool, time: f64) -> Self {
        if second_order {
            let m = v.len() / 2;
            Self {
                psi: v[..m].to_vec(),
                chi: Some(v[m..].to_vec()),
                time,
            }
        } else {
            Self {
                psi: v.to_vec(),
                chi: None,
                time,
            }
        }
    }

    /// Real parts of the flat coordinates: the chart vector of real data.
    pub fn to_real_vec(&self) -> Vec<f64> {
        self.to_vec().iter().map(|z| z.re).collect()
    }

    pub fn from_real_vec(v: &[f64], second_order: bool, time: f64) -> Self {
        Self::from_vec(&to_complex(v), second_order, time)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.to_vec().iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.to_vec().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

pub fn to_complex(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// Exact solution operator of the linear equation from `data.time` to `tau`.
pub fn propagate(grid: &Grid, disp: &DispersionRelation, data: &CauchyData, tau: f64) -> Result<CauchyData> {
    data.check(grid, disp)?;
    let dt = tau - data.time;
    if dt == 0.0 {
        return Ok(CauchyData {
            time: tau,
            ..data.clone()
        });
    }
    let xi = grid.frequencies();
    match disp.kind {
        DispersionKind::KleinGordon => {
            let chi = data.chi.as_ref().expect("checked");
            let ph = grid.fft(&data.psi);
            let ch = grid.fft(chi);
            let (mut ph2, mut ch2) = (ph.clone(), ch.clone());
            for k in 0..xi.len() {
                let a = kg_mode_matrix(disp.epsilon(xi[k]), dt);
                ph2[k] = ph[k] * a[0][0] + ch[k] * a[0][1];
                ch2[k] = ph[k] * a[1][0] + ch[k] * a[1][1];
            }
            Ok(CauchyData {
                psi: grid.ifft(&ph2),
                chi: Some(grid.ifft(&ch2)),
                time: tau,
            })
        }
        DispersionKind::Schrodinger => {
            let mut ph = grid.fft(&data.psi);
            for (k, z) in ph.iter_mut().enumerate() {
                *z *= Complex64::from_polar(1.0, disp.omega(xi[k]) * dt);
            }
            Ok(CauchyData {
                psi: grid.ifft(&ph),
                chi: None,
                time: tau,
            })
        }
    }
}

/// A solution of the linear equation, stored through its Cauchy data at time 0.
#[derive(Clone, Debug, PartialEq)]
pub struct FreeSolution {
    chart: CauchyData,
}

impl FreeSolution {
    /// Wraps data that is already anchored at time 0.
    pub fn from_chart(chart: CauchyData) -> Result<Self> {
        if chart.time != 0.0 {
            return Err(Error::Domain(format!(
                "chart data must be anchored at 0, got {}",
                chart.time
            )));
        }
        Ok(Self { chart })
    }

    pub fn chart(&self) -> &CauchyData {
        &self.chart
    }

    pub fn into_chart(self) -> CauchyData {
        self.chart
    }

    /// Cauchy data of this solution on the slice `{time = t}`.
    pub fn sample_at(&self, grid: &Grid, disp: &DispersionRelation, t: f64) -> Result<CauchyData> {
        propagate(grid, disp, &self.chart, t)
    }
}

pub fn make_free_solution(grid: &Grid, disp: &DispersionRelation, data: &CauchyData) -> Result<FreeSolution> {
    Ok(FreeSolution {
        chart: propagate(grid, disp, data, 0.0)?,
    })
}

/// Free solution with Cauchy data `(0, f)` at time `t` (second order) or `f`
/// (first order).
pub fn green_apply(grid: &Grid, disp: &DispersionRelation, t: f64, f: &[Complex64]) -> Result<FreeSolution> {
    let zero = vec![Complex64::new(0.0, 0.0); f.len()];
    let data = match disp.kind {
        DispersionKind::KleinGordon => CauchyData::new(zero, Some(f.to_vec()), t)?,
        DispersionKind::Schrodinger => CauchyData::new(f.to_vec(), None, t)?,
    };
    make_free_solution(grid, disp, &data)
}

fn weighted_norm(grid: &Grid, field: &[Complex64], weights: &[f64]) -> f64 {
    let spec = grid.fft(field);
    let sum: f64 = spec.iter().zip(weights).map(|(z, w)| w * z.norm_sqr()).sum();
    (grid.parseval_weight() * sum).sqrt()
}

/// `||psi||_{H^s} + ||chi||_{H^{s-r}}` with weight `<xi> = sqrt(m_ref^2 + xi^2)`.
pub fn sobolev_norm(grid: &Grid, data: &CauchyData, s: f64, r_order: i32, m_ref: f64) -> Result<f64> {
    if !(m_ref > 0.0) {
        return Err(Error::Domain(format!("reference mass must be positive, got {m_ref}")));
    }
    if data.psi.len() != grid.points() {
        return Err(Error::DimensionMismatch {
            expected: grid.points(),
            got: data.psi.len(),
        });
    }
    let br = grid.japanese_bracket(m_ref);
    let w_psi: Vec<f64> = br.iter().map(|b| b.powf(2.0 * s)).collect();
    let mut n = weighted_norm(grid, &data.psi, &w_psi);
    if let Some(chi) = &data.chi {
        let w_chi: Vec<f64> = br.iter().map(|b| b.powf(2.0 * (s - r_order as f64))).collect();
        n += weighted_norm(grid, chi, &w_chi);
    }
    Ok(n)
}

/// Conserved quadratic form `1/2 (Lx/M^2) sum_k (|chi_hat|^2 + e^2 |psi_hat|^2)`.
pub fn energy(grid: &Grid, disp: &DispersionRelation, data: &CauchyData) -> Result<f64> {
    if disp.kind != DispersionKind::KleinGordon {
        return Err(Error::Unsupported("energy is defined for Klein-Gordon data".into()));
    }
    data.check(grid, disp)?;
    let ph = grid.fft(&data.psi);
    let ch = grid.fft(data.chi.as_ref().expect("checked"));
    let sum: f64 = grid
        .frequencies()
        .iter()
        .enumerate()
        .map(|(k, &xi)| {
            let e = disp.epsilon(xi);
            ch[k].norm_sqr() + e * e * ph[k].norm_sqr()
        })
        .sum();
    Ok(0.5 * grid.parseval_weight() * sum)
}

/// The Cauchy norm `||psi||_{H^s} + ||chi||_{H^{s-1}}` on real chart vectors.
#[derive(Clone, Debug)]
pub struct CauchyNorm {
    grid: Grid,
    second_order: bool,
    s: f64,
    m_ref: f64,
    kappa: f64,
}

impl CauchyNorm {
    pub fn new(grid: &Grid, disp: &DispersionRelation, s: f64, m_ref: f64) -> Result<Self> {
        if !(m_ref > 0.0) {
            return Err(Error::Domain(format!("reference mass must be positive, got {m_ref}")));
        }
        let br = grid.japanese_bracket(m_ref);
        let coord = |order: f64| {
            (br.iter().map(|b| b.powf(-2.0 * order)).sum::<f64>() / grid.length()).sqrt()
        };
        let second_order = disp.kind.second_order();
        let kappa = if second_order {
            coord(s).max(coord(s - 1.0))
        } else {
            coord(s)
        };
        Ok(Self {
            grid: grid.clone(),
            second_order,
            s,
            m_ref,
            kappa,
        })
    }

    /// Defaults: `s = 1` and the relation's reference mass.
    pub fn standard(grid: &Grid, disp: &DispersionRelation) -> Self {
        Self::new(grid, disp, 1.0, disp.reference_mass()).expect("reference mass is positive")
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn m_ref(&self) -> f64 {
        self.m_ref
    }

    /// `|v_i| <= kappa ||v||` for every chart coordinate.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn norm_of(&self, data: &CauchyData) -> f64 {
        sobolev_norm(&self.grid, data, self.s, 1, self.m_ref).expect("grid matches")
    }

    pub fn norm_complex(&self, v: &[Complex64]) -> f64 {
        self.norm_of(&CauchyData::from_vec(v, self.second_order, 0.0))
    }
}

impl AmbientNorm for CauchyNorm {
    fn norm(&self, v: &[f64]) -> f64 {
        self.norm_of(&CauchyData::from_real_vec(v, self.second_order, 0.0))
    }

    fn coordinate_bound(&self) -> CoordinateBound {
        CoordinateBound::MaxAbs(self.kappa)
    }
}

/// Bound `C_A` with `||A_tau c|| <= C_A ||c||` in the Cauchy norm for `|tau| <= horizon`.
///
/// Per mode, weighted coordinates `(<xi>^s psi_hat, <xi>^{s-1} chi_hat)` evolve
/// by `[[cos, rho sin], [-sin/rho, cos]]` with `rho = <xi>/e`. The sum of the
/// two component norms is within `sqrt(2)` of their Euclidean combination.
pub fn propagator_bound(grid: &Grid, disp: &DispersionRelation, m_ref: f64, horizon: f64) -> f64 {
    if disp.kind == DispersionKind::Schrodinger {
        return 1.0;
    }
    let t = horizon.abs();
    let worst = grid
        .frequencies()
        .iter()
        .map(|&xi| {
            let br = (m_ref * m_ref + xi * xi).sqrt();
            let e = disp.epsilon(xi);
            let s_bound = if e == 0.0 { t } else { t.min(1.0 / e) };
            let upper_left = br * s_bound;
            let lower_left = if br > 0.0 { e * (e * t).min(1.0) / br } else { 0.0 };
            let frob = (2.0 + upper_left * upper_left + lower_left * lower_left).sqrt();
            if e > 0.0 {
                let rho = br / e;
                rho.max(1.0 / rho).min(frob)
            } else {
                frob
            }
        })
        .fold(1.0f64, f64::max);
    std::f64::consts::SQRT_2 * worst
}

/// Dense real matrix of `A_tau` on chart vectors (row-major, `2M x 2M`).
pub fn propagator_matrix(grid: &Grid, disp: &DispersionRelation, tau: f64) -> Result<Vec<f64>> {
    if disp.kind != DispersionKind::KleinGordon {
        return Err(Error::Unsupported(
            "real chart matrices are available for Klein-Gordon only".into(),
        ));
    }
    let m = grid.points();
    let d = 2 * m;
    let mut a = vec![0.0; d * d];
    let mut e = vec![0.0; d];
    for col in 0..d {
        e.iter_mut().for_each(|x| *x = 0.0);
        e[col] = 1.0;
        let out = propagate(grid, disp, &CauchyData::from_real_vec(&e, true, 0.0), tau)?.to_real_vec();
        for (row, v) in out.into_iter().enumerate() {
            a[row * d + col] = v;
        }
    }
    Ok(a)
}

/// Writes `(x, psi, chi)` rows after a JSON header line (complex parts as
/// extra columns for Schrodinger data).
pub fn write_snapshot<W: Write>(
    mut w: W,
    grid: &Grid,
    disp: &DispersionRelation,
    data: &CauchyData,
) -> Result<()> {
    let header = serde_json::json!({
        "M": grid.points(),
        "Lx": grid.length(),
        "kind": disp.kind.name(),
        "m": disp.mass,
        "t": data.time,
    });
    writeln!(w, "# {header}")?;
    match &data.chi {
        Some(chi) => {
            writeln!(w, "x,psi,chi")?;
            for j in 0..grid.points() {
                writeln!(w, "{:.17e},{:.17e},{:.17e}", grid.x(j), data.psi[j].re, chi[j].re)?;
            }
        }
        None => {
            writeln!(w, "x,psi_re,psi_im")?;
            for j in 0..grid.points() {
                writeln!(w, "{:.17e},{:.17e},{:.17e}", grid.x(j), data.psi[j].re, data.psi[j].im)?;
            }
        }
    }
    Ok(())
}
