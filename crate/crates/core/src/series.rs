//! One-variable majorant calculus.
//!
//! A [`MajorantSeries`] is a power series with nonnegative coefficients. It is
//! the scalar shadow of a vector-valued formal series: coefficient `p` bounds
//! the tensor norm of the degree-`p` component. Flows of the holomorphic
//! vector field `X(z) d/dz` drive every convergence certificate in the crate.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// What is known about the coefficients beyond the stored ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tail {
    /// The series is a polynomial; omitted coefficients are zero.
    Zero,
    /// The series was cut at `truncation_degree`; omitted coefficients are unknown.
    Truncated,
}

/// Power series `sum_p coeffs[p] z^p` with `coeffs[p] >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct MajorantSeries {
    coeffs: Vec<f64>,
    tail: Tail,
}

impl MajorantSeries {
    /// Polynomial majorant. Panics on a negative or non-finite coefficient.
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self::with_tail(coeffs, Tail::Zero)
    }

    /// Series known only up to its last stored coefficient.
    pub fn truncated(coeffs: Vec<f64>) -> Self {
        Self::with_tail(coeffs, Tail::Truncated)
    }

    fn with_tail(coeffs: Vec<f64>, tail: Tail) -> Self {
        assert!(
            coeffs.iter().all(|c| c.is_finite() && *c >= 0.0),
            "majorant coefficients must be finite and nonnegative"
        );
        Self { coeffs, tail }
    }

    pub fn zero() -> Self {
        Self::new(Vec::new())
    }

    /// `c z^p`
    pub fn monomial(c: f64, p: usize) -> Self {
        let mut coeffs = vec![0.0; p + 1];
        coeffs[p] = c;
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    /// Index of the last stored coefficient (0 for the empty series).
    pub fn truncation_degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    /// Coefficient of `z^p`; zero past the stored range.
    pub fn coeff(&self, p: usize) -> f64 {
        self.coeffs.get(p).copied().unwrap_or(0.0)
    }

    /// Finite sum over the stored coefficients, Horner order.
    pub fn eval(&self, z: f64) -> f64 {
        debug_assert!(z >= 0.0);
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    /// k-th derivative; coefficient `j` is `(j+k)!/j! * coeffs[j+k]`.
    pub fn derivative(&self, k: usize) -> Self {
        if k >= self.coeffs.len() {
            return Self::with_tail(Vec::new(), self.tail);
        }
        let coeffs = (0..self.coeffs.len() - k)
            .map(|j| falling_factorial(j + k, k) * self.coeffs[j + k])
            .collect();
        Self::with_tail(coeffs, self.tail)
    }

    /// Coefficientwise sum.
    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|p| self.coeff(p) + other.coeff(p)).collect();
        let tail = if self.tail == Tail::Zero && other.tail == Tail::Zero {
            Tail::Zero
        } else {
            Tail::Truncated
        };
        Self::with_tail(coeffs, tail)
    }

    pub fn scale(&self, c: f64) -> Self {
        assert!(c >= 0.0);
        Self::with_tail(self.coeffs.iter().map(|x| x * c).collect(), self.tail)
    }

    /// `true` when every coefficient of `self` is `<=` the matching one of `other`
    /// (up to a relative slack).
    pub fn dominated_by(&self, other: &Self, rel_tol: f64) -> bool {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n).all(|p| self.coeff(p) <= other.coeff(p) * (1.0 + rel_tol) + f64::MIN_POSITIVE)
    }
}

/// `n!/(n-k)!`
pub fn falling_factorial(n: usize, k: usize) -> f64 {
    ((n - k + 1)..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Number of consecutive decreasing terms after which the supremum scan in
/// [`gamma_constant`] stops.
pub const GAMMA_SCAN_PATIENCE: usize = 50;

/// `Gamma^(k)(r,R) = r^{-k} sup_{p>=k} p!/(p-k)! (r/R)^p`.
///
/// The terms are log-concave in `p` and eventually decrease when `r < R`; the
/// scan stops once [`GAMMA_SCAN_PATIENCE`] consecutive terms have decreased.
pub fn gamma_constant(r: f64, big_r: f64, k: usize) -> Result<f64> {
    if !(r > 0.0 && big_r > 0.0) || r >= big_r {
        return Err(Error::Domain(format!(
            "gamma constant needs 0 < r < R, got r = {r}, R = {big_r}"
        )));
    }
    let log_ratio = (r / big_r).ln();
    // log of p!/(p-k)! (r/R)^p, starting at p = k
    let mut p = k;
    let mut log_term = (1..=k).map(|i| (i as f64).ln()).sum::<f64>() + k as f64 * log_ratio;
    let mut best = log_term;
    let mut decreasing = 0;
    while decreasing < GAMMA_SCAN_PATIENCE {
        let next = log_term + ((p + 1) as f64).ln() - ((p + 1 - k) as f64).ln() + log_ratio;
        if next < log_term {
            decreasing += 1;
        } else {
            decreasing = 0;
        }
        log_term = next;
        p += 1;
        if log_term > best {
            best = log_term;
        }
    }
    Ok((best - k as f64 * r.ln()).exp())
}

/// `(X d/dz)^k H`, computed by `k` iterated coefficient convolutions.
///
/// For polynomial inputs the result is exact and its degree grows by
/// `deg X - 1` per application. If either input is truncated, the result is
/// truncated at `min(deg H - 1, deg X)` per application, the highest degree
/// whose coefficient does not depend on omitted terms.
pub fn apply_majorant_operator(x: &MajorantSeries, h: &MajorantSeries, k: usize) -> MajorantSeries {
    let mut current = h.clone();
    for _ in 0..k {
        current = apply_once(x, &current);
    }
    current
}

fn apply_once(x: &MajorantSeries, h: &MajorantSeries) -> MajorantSeries {
    let exact = x.tail == Tail::Zero && h.tail == Tail::Zero;
    if h.coeffs.len() < 2 || x.coeffs.is_empty() {
        let tail = if exact { Tail::Zero } else { Tail::Truncated };
        return MajorantSeries::with_tail(Vec::new(), tail);
    }
    let deg_h = h.coeffs.len() - 1;
    let deg_x = x.coeffs.len() - 1;
    let out_deg = if exact {
        deg_h - 1 + deg_x
    } else {
        (deg_h - 1).min(deg_x)
    };
    let mut out = vec![0.0; out_deg + 1];
    // (X H')_m = sum_{i>=1} i H_i X_{m-i+1}
    for i in 1..=deg_h {
        let hi = i as f64 * h.coeffs[i];
        if hi == 0.0 {
            continue;
        }
        for (q, xq) in x.coeffs.iter().enumerate() {
            let m = i - 1 + q;
            if m > out_deg {
                break;
            }
            out[m] += hi * xq;
        }
    }
    let tail = if exact { Tail::Zero } else { Tail::Truncated };
    MajorantSeries::with_tail(out, tail)
}

/// Termination state of a flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowStatus {
    Completed,
    BlewUp,
    HitZero,
}

/// Outcome of integrating `dz/dtau = X(z)` on the real line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowResult {
    /// Final value; meaningful only when `status == Completed`.
    pub value: f64,
    /// Signed time at which integration stopped.
    pub time_reached: f64,
    pub status: FlowStatus,
}

impl FlowResult {
    pub fn completed(&self) -> bool {
        self.status == FlowStatus::Completed
    }
}

/// Outcome of a flow along a complex time ray.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexFlowResult {
    pub value: Complex64,
    /// Length of the ray covered, `0 <= s <= |tau|`.
    pub arc_reached: f64,
    pub status: FlowStatus,
}

/// Step control for the embedded Runge-Kutta integrator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// A backward real flow reports [`FlowStatus::HitZero`] once it drops below this.
    pub zero_floor: f64,
    /// `|z|` above which the flow is declared blown up.
    pub blowup_cap: f64,
    pub max_steps: usize,
}

impl Default for FlowControl {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            zero_floor: 1e-12,
            blowup_cap: 1e12,
            max_steps: 1_000_000,
        }
    }
}

// Dormand-Prince 5(4) tableau; the field is autonomous so the nodes c_i are not needed.
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

enum Stop {
    Done,
    BlewUp,
    HitZero,
}

/// Integrates `dz/ds = dir X(z)` for `s` in `[0, length]` with adaptive
/// Dormand-Prince steps. `floor_check` decides when a blow-down is reported.
fn integrate_ray(
    x: &MajorantSeries,
    dir: Complex64,
    length: f64,
    z0: Complex64,
    control: &FlowControl,
    floor_check: bool,
) -> (Complex64, f64, Stop) {
    let rhs = |z: Complex64| dir * x.eval_complex(z);
    let mut z = z0;
    let mut s = 0.0;
    if length == 0.0 {
        return (z, 0.0, Stop::Done);
    }
    let scale0 = control.abs_tol + control.rel_tol * z.norm();
    let f0 = rhs(z).norm();
    let mut h = if f0 > 0.0 {
        (0.01 * scale0.max(1e-8) / f0).powf(0.2).min(length).max(length * 1e-9)
    } else {
        length
    };
    let mut steps = 0;
    let mut k = [Complex64::new(0.0, 0.0); 7];
    k[0] = rhs(z);
    while s < length {
        if steps >= control.max_steps {
            return (z, s, Stop::BlewUp);
        }
        steps += 1;
        if s + h > length {
            h = length - s;
        }
        for i in 1..7 {
            let mut acc = z;
            for j in 0..i {
                acc += k[j] * (h * DP_A[i][j]);
            }
            k[i] = rhs(acc);
        }
        let mut z5 = z;
        let mut z4 = z;
        for i in 0..7 {
            z5 += k[i] * (h * DP_B5[i]);
            z4 += k[i] * (h * DP_B4[i]);
        }
        let err = (z5 - z4).norm();
        let tol = control.abs_tol + control.rel_tol * z.norm().max(z5.norm());
        if !z5.re.is_finite() || !z5.im.is_finite() {
            h *= 0.25;
            if h < length * 1e-16 || h < 1e-300 {
                return (z, s, Stop::BlewUp);
            }
            continue;
        }
        if err <= tol && floor_check && z5.re < control.zero_floor {
            // locate the floor crossing instead of stepping over it
            if h <= 1e-14 * (s + h) {
                return (z5, s + h, Stop::HitZero);
            }
            h *= 0.5;
            continue;
        }
        if err <= tol {
            s += h;
            z = z5;
            // FSAL: last stage is the derivative at the new point
            k[0] = k[6];
            if z.norm() > control.blowup_cap {
                return (z, s, Stop::BlewUp);
            }
            if floor_check && z.re < control.zero_floor {
                return (z, s, Stop::HitZero);
            }
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h < 1e-300 || (s < length && h < (length.abs() + s.abs()) * 1e-15) {
            return (z, s, Stop::BlewUp);
        }
    }
    (z, s, Stop::Done)
}

/// Real flow `e^{tX}(z0)`: integrates `dz/dtau = sign(t) X(z)` for `|t|`.
///
/// Backward flows (`t < 0`) started from `z0 > 0` stop with
/// [`FlowStatus::HitZero`] once they cross `control.zero_floor`.
pub fn flow(x: &MajorantSeries, t: f64, z0: f64, control: &FlowControl) -> FlowResult {
    let dir = if t < 0.0 { -1.0 } else { 1.0 };
    let (z, s, stop) = integrate_ray(
        x,
        Complex64::new(dir, 0.0),
        t.abs(),
        Complex64::new(z0, 0.0),
        control,
        t < 0.0,
    );
    let status = match stop {
        Stop::Done => {
            if t < 0.0 && z.re < control.zero_floor {
                FlowStatus::HitZero
            } else {
                FlowStatus::Completed
            }
        }
        Stop::BlewUp => FlowStatus::BlewUp,
        Stop::HitZero => FlowStatus::HitZero,
    };
    FlowResult {
        value: z.re,
        time_reached: dir * s,
        status,
    }
}

/// Flow along the complex time ray `tau`, i.e. `e^{tau X}(z0)` reached through
/// `s -> e^{s tau/|tau|}` for `s in [0, |tau|]`. No blow-down check.
pub fn flow_complex(
    x: &MajorantSeries,
    tau: Complex64,
    z0: Complex64,
    control: &FlowControl,
) -> ComplexFlowResult {
    let length = tau.norm();
    let dir = if length > 0.0 {
        tau / length
    } else {
        Complex64::new(1.0, 0.0)
    };
    let (z, s, stop) = integrate_ray(x, dir, length, z0, control, false);
    let status = match stop {
        Stop::Done => FlowStatus::Completed,
        Stop::BlewUp => FlowStatus::BlewUp,
        Stop::HitZero => FlowStatus::HitZero,
    };
    ComplexFlowResult {
        value: z,
        arc_reached: s,
        status,
    }
}

/// Result of [`guaranteed_time`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GuaranteedTime {
    Finite(f64),
    /// The backward flow stays above the floor for the whole search horizon.
    Unbounded,
}

impl GuaranteedTime {
    pub fn value(&self) -> f64 {
        match self {
            GuaranteedTime::Finite(t) => *t,
            GuaranteedTime::Unbounded => f64::INFINITY,
        }
    }
}

/// Search horizon for [`guaranteed_time`].
pub const GUARANTEED_TIME_HORIZON: f64 = 1e8;
/// Relative bisection tolerance for [`guaranteed_time`].
pub const GUARANTEED_TIME_REL_TOL: f64 = 1e-12;

/// Largest `T` with `e^{-TX}(R) >= floor`, found by bisection on [`flow`].
pub fn guaranteed_time(x: &MajorantSeries, big_r: f64, floor: f64) -> Result<GuaranteedTime> {
    if !(big_r > 0.0 && floor > 0.0 && floor < big_r) {
        return Err(Error::Domain(format!(
            "guaranteed time needs 0 < floor < R, got floor = {floor}, R = {big_r}"
        )));
    }
    let control = FlowControl {
        zero_floor: floor,
        rel_tol: 1e-12,
        abs_tol: floor * 1e-13,
        ..FlowControl::default()
    };
    let above = |t: f64| flow(x, -t, big_r, &control).status == FlowStatus::Completed;
    if x.is_zero() || above(GUARANTEED_TIME_HORIZON) {
        return Ok(GuaranteedTime::Unbounded);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while above(hi) {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > GUARANTEED_TIME_REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if above(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(GuaranteedTime::Finite(0.5 * (lo + hi)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn eval_examples() {
        assert_eq!(MajorantSeries::new(vec![0.0, 0.0, 0.0, 1.0]).eval(2.0), 8.0);
        assert_eq!(MajorantSeries::new(vec![1.0, 1.0]).eval(0.0), 1.0);
        let geometric = MajorantSeries::new(vec![1.0; 11]);
        // (1 - 0.5^11)/(1 - 0.5)
        let expected = (1.0 - 0.5f64.powi(11)) / 0.5;
        assert_eq!(expected, 1.9990234375);
        assert!(close(geometric.eval(0.5), expected, 1e-15));
    }

    #[test]
    fn derivative_examples() {
        let d = MajorantSeries::new(vec![0.0, 0.0, 1.0]).derivative(1);
        assert_eq!(d.coeffs(), &[0.0, 2.0]);
        let d = MajorantSeries::new(vec![5.0]).derivative(1);
        assert!(d.coeffs().is_empty());
        let d = MajorantSeries::new(vec![0.0, 0.0, 0.0, 1.0]).derivative(2);
        assert_eq!(d.coeffs(), &[0.0, 6.0]);
        assert_eq!(d.truncation_degree(), 1);
    }

    #[test]
    fn gamma_examples() {
        assert!(close(gamma_constant(1.0, 2.0, 0).unwrap(), 1.0, 1e-14));
        assert!(close(gamma_constant(1.0, 2.0, 1).unwrap(), 0.5, 1e-14));
        let e = std::f64::consts::E;
        assert!(close(gamma_constant(1.0, e, 1).unwrap(), (-1.0f64).exp(), 1e-14));
    }

    #[test]
    fn gamma_rejects_r_at_least_big_r() {
        assert!(gamma_constant(2.0, 2.0, 1).is_err());
        assert!(gamma_constant(3.0, 2.0, 0).is_err());
        assert!(gamma_constant(0.0, 2.0, 0).is_err());
    }

    #[test]
    fn flow_examples() {
        let c = FlowControl::default();
        let r = flow(&MajorantSeries::new(vec![0.0, 1.0]), 1.0, 1.0, &c);
        assert!(r.completed());
        assert!(close(r.value, std::f64::consts::E, 1e-9));

        let r = flow(&MajorantSeries::new(vec![0.0, 0.0, 1.0]), 0.5, 1.0, &c);
        assert!(close(r.value, 2.0, 1e-9));

        // R (1 + 2 C R^2 t)^{-1/2} with C = 2, t = 1
        let r = flow(&MajorantSeries::monomial(2.0, 3), -1.0, 1.0, &c);
        assert!(r.completed());
        assert!(close(r.value, 1.0 / 5f64.sqrt(), 1e-9));
    }

    #[test]
    fn flow_reports_blow_up() {
        let r = flow(&MajorantSeries::new(vec![0.0, 0.0, 1.0]), 2.0, 1.0, &FlowControl::default());
        assert_eq!(r.status, FlowStatus::BlewUp);
        assert!(r.time_reached > 0.99 && r.time_reached <= 1.0);
    }

    #[test]
    fn flow_reports_hit_zero() {
        let r = flow(&MajorantSeries::new(vec![1.0]), -2.0, 1.0, &FlowControl::default());
        assert_eq!(r.status, FlowStatus::HitZero);
        assert!(close(r.time_reached, -1.0, 1e-6));
    }

    #[test]
    fn guaranteed_time_examples() {
        let t = guaranteed_time(&MajorantSeries::new(vec![1.0]), 1.0, 0.1).unwrap();
        assert!(close(t.value(), 0.9, 1e-9));
        let t = guaranteed_time(&MajorantSeries::monomial(2.0, 3), 1.0, 0.5).unwrap();
        assert!(close(t.value(), 0.75, 1e-9));
        let t = guaranteed_time(&MajorantSeries::new(vec![0.0, 1.0]), 1.0, 0.1).unwrap();
        assert!(close(t.value(), 10f64.ln(), 1e-9));
        let t = guaranteed_time(&MajorantSeries::zero(), 1.0, 0.1).unwrap();
        assert_eq!(t, GuaranteedTime::Unbounded);
    }

    #[test]
    fn majorant_operator_examples() {
        let x = MajorantSeries::new(vec![0.0, 1.0]);
        let h = MajorantSeries::new(vec![0.0, 1.0]);
        assert_eq!(apply_majorant_operator(&x, &h, 1).coeffs(), &[0.0, 1.0]);
        let x = MajorantSeries::new(vec![1.0]);
        let h = MajorantSeries::new(vec![0.0, 0.0, 1.0]);
        assert_eq!(apply_majorant_operator(&x, &h, 1).coeffs(), &[0.0, 2.0]);
        let x = MajorantSeries::new(vec![0.0, 1.0]);
        assert_eq!(apply_majorant_operator(&x, &h, 2).coeffs(), &[0.0, 0.0, 4.0]);
        assert_eq!(apply_majorant_operator(&x, &h, 0), h);
    }

    #[test]
    fn truncated_operator_drops_unknown_degrees() {
        let x = MajorantSeries::truncated(vec![1.0, 1.0, 1.0]);
        let h = MajorantSeries::truncated(vec![1.0, 1.0, 1.0, 1.0]);
        let out = apply_majorant_operator(&x, &h, 1);
        assert_eq!(out.tail(), Tail::Truncated);
        assert_eq!(out.truncation_degree(), 2);
    }
}
