use std::sync::Arc;

use super::index::{table, DegreeTable};
use crate::error::{Error, Result};

/// Symmetric multilinear map `(R^dim)^{x degree} -> R^codomain_dim`.
///
/// Only the components `T^i_alpha` on canonical (nondecreasing) multi-indices
/// are stored. The full tensor is recovered by symmetry, so the diagonal
/// value is
///
/// ```text
/// f(phi) = sum_alpha mult(alpha) T_alpha phi^alpha
/// ```
///
/// where `mult(alpha)` counts the distinct orderings of `alpha`. With `d = 2`,
/// `p = 2`, the map `phi -> phi_0 phi_1` is stored as `T_(0,1) = 1/2`, and the
/// polarized value at `(e_0, e_1)` is `1/2`.
#[derive(Clone, Debug)]
pub struct SymTensor {
    degree: usize,
    dim: usize,
    codomain_dim: usize,
    table: Arc<DegreeTable>,
    /// `coeffs[i * n + idx]` for codomain component `i`, `n` canonical indices.
    coeffs: Vec<f64>,
}

impl PartialEq for SymTensor {
    fn eq(&self, other: &Self) -> bool {
        self.degree == other.degree
            && self.dim == other.dim
            && self.codomain_dim == other.codomain_dim
            && self.coeffs == other.coeffs
    }
}

impl SymTensor {
    pub fn zeros(degree: usize, dim: usize, codomain_dim: usize) -> Self {
        assert!(dim >= 1 && codomain_dim >= 1);
        let table = table(dim, degree);
        let coeffs = vec![0.0; table.len() * codomain_dim];
        Self {
            degree,
            dim,
            codomain_dim,
            table,
            coeffs,
        }
    }

    /// Builds from canonical-order components (codomain-major).
    pub fn from_coeffs(degree: usize, dim: usize, codomain_dim: usize, coeffs: Vec<f64>) -> Result<Self> {
        let mut t = Self::zeros(degree, dim, codomain_dim);
        if coeffs.len() != t.coeffs.len() {
            return Err(Error::DimensionMismatch {
                expected: t.coeffs.len(),
                got: coeffs.len(),
            });
        }
        t.coeffs = coeffs;
        Ok(t)
    }

    /// Scalar linear form `phi -> w . phi`.
    pub fn linear_form(w: &[f64]) -> Self {
        Self::from_coeffs(1, w.len(), 1, w.to_vec()).expect("length matches")
    }

    /// Degree-0 tensor holding a constant codomain vector.
    pub fn constant(value: &[f64], dim: usize) -> Self {
        Self::from_coeffs(0, dim, value.len(), value.to_vec()).expect("length matches")
    }

    /// Scalar tensor `c (w . phi)^p`, i.e. `T_alpha = c prod_k w_{alpha_k}`.
    pub fn power_of_linear_form(w: &[f64], p: usize, c: f64) -> Self {
        let mut t = Self::zeros(p, w.len(), 1);
        for idx in 0..t.table.len() {
            t.coeffs[idx] = c * t.table.multi_index(idx).iter().map(|&a| w[a as usize]).product::<f64>();
        }
        t
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn codomain_dim(&self) -> usize {
        self.codomain_dim
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn table(&self) -> &DegreeTable {
        &self.table
    }

    /// Number of canonical multi-indices per codomain component.
    pub fn canonical_len(&self) -> usize {
        self.table.len()
    }

    /// Component block for codomain index `i`.
    pub fn component(&self, i: usize) -> &[f64] {
        let n = self.table.len();
        &self.coeffs[i * n..(i + 1) * n]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut [f64] {
        let n = self.table.len();
        &mut self.coeffs[i * n..(i + 1) * n]
    }

    /// Component at an arbitrary (not necessarily sorted) multi-index.
    pub fn get(&self, codomain: usize, multi_index: &[usize]) -> f64 {
        let idx = self.rank_of(multi_index);
        self.coeffs[codomain * self.table.len() + idx]
    }

    pub fn set(&mut self, codomain: usize, multi_index: &[usize], value: f64) {
        let idx = self.rank_of(multi_index);
        let n = self.table.len();
        self.coeffs[codomain * n + idx] = value;
    }

    fn rank_of(&self, multi_index: &[usize]) -> usize {
        assert_eq!(multi_index.len(), self.degree);
        let mut mi: Vec<u16> = multi_index.iter().map(|&a| {
            assert!(a < self.dim);
            a as u16
        }).collect();
        mi.sort_unstable();
        self.table.rank(&mi)
    }

    fn check_arg(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Inserts `v` into one slot: the degree `p-1` tensor `T(v, ., ..., .)`.
    pub fn contract(&self, v: &[f64]) -> Result<SymTensor> {
        self.check_arg(v)?;
        if self.degree == 0 {
            return Err(Error::Domain("cannot contract a degree-0 tensor".into()));
        }
        let mut out = SymTensor::zeros(self.degree - 1, self.dim, self.codomain_dim);
        let lower = Arc::clone(&out.table);
        let raise = lower.raise_table();
        let n_in = self.table.len();
        let n_out = lower.len();
        for i in 0..self.codomain_dim {
            let src = &self.coeffs[i * n_in..(i + 1) * n_in];
            let dst = &mut out.coeffs[i * n_out..(i + 1) * n_out];
            for (beta, slot) in dst.iter_mut().enumerate() {
                let row = &raise[beta * self.dim..(beta + 1) * self.dim];
                *slot = row.iter().zip(v).map(|(&r, va)| va * src[r as usize]).sum();
            }
        }
        Ok(out)
    }

    /// Polarized evaluation `T(v_1, ..., v_p)`.
    pub fn eval_homogeneous(&self, args: &[&[f64]]) -> Result<Vec<f64>> {
        if args.len() != self.degree {
            return Err(Error::DimensionMismatch {
                expected: self.degree,
                got: args.len(),
            });
        }
        for a in args {
            self.check_arg(a)?;
        }
        let mut current = self.clone();
        for a in args.iter().rev() {
            current = current.contract(a)?;
        }
        Ok(current.coeffs)
    }

    /// Values of the monomials `phi^alpha` in canonical order.
    pub fn monomials(table: &DegreeTable, phi: &[f64]) -> Vec<f64> {
        if table.degree == 0 {
            return vec![1.0];
        }
        let lower = Self::monomials(&super::index::table(table.dim, table.degree - 1), phi);
        (0..table.len())
            .map(|idx| {
                let (par, last) = table.parent(idx);
                lower[par] * phi[last]
            })
            .collect()
    }

    /// Diagonal value `T(phi, ..., phi)`.
    pub fn eval_diagonal(&self, phi: &[f64]) -> Result<Vec<f64>> {
        self.check_arg(phi)?;
        let mono = Self::monomials(&self.table, phi);
        let mult = self.table.multiplicities();
        Ok((0..self.codomain_dim)
            .map(|i| {
                self.component(i)
                    .iter()
                    .zip(mult)
                    .zip(&mono)
                    .map(|((t, m), x)| t * m * x)
                    .sum()
            })
            .collect())
    }

    /// Monomial coefficients `c_alpha = mult(alpha) T_alpha` of the diagonal polynomial.
    pub fn to_monomial(&self) -> Vec<f64> {
        let mult = self.table.multiplicities();
        let n = self.table.len();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, t)| t * mult[k % n])
            .collect()
    }

    /// Inverse of [`SymTensor::to_monomial`].
    pub fn from_monomial(degree: usize, dim: usize, codomain_dim: usize, mono: &[f64]) -> Result<Self> {
        let mut t = Self::zeros(degree, dim, codomain_dim);
        if mono.len() != t.coeffs.len() {
            return Err(Error::DimensionMismatch {
                expected: t.coeffs.len(),
                got: mono.len(),
            });
        }
        let n = t.table.len();
        let mult = Arc::clone(&t.table);
        for (k, slot) in t.coeffs.iter_mut().enumerate() {
            *slot = mono[k] / mult.multiplicity(k % n);
        }
        Ok(t)
    }

    pub fn scale(&mut self, c: f64) {
        self.coeffs.iter_mut().for_each(|x| *x *= c);
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: f64, other: &SymTensor) {
        assert_eq!(self.degree, other.degree);
        assert_eq!(self.dim, other.dim);
        assert_eq!(self.codomain_dim, other.codomain_dim);
        self.coeffs
            .iter_mut()
            .zip(&other.coeffs)
            .for_each(|(a, b)| *a += c * b);
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// Multiplies a scalar homogeneous polynomial (monomial coefficients, degree
/// `p`) by the linear form `w . phi`; returns degree `p + 1` monomial
/// coefficients.
pub fn monomial_times_linear(table: &DegreeTable, mono: &[f64], w: &[f64], out: &mut [f64]) {
    debug_assert_eq!(mono.len(), table.len());
    let raise = table.raise_table();
    let d = table.dim;
    for (idx, &c) in mono.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let row = &raise[idx * d..(idx + 1) * d];
        for (a, &r) in row.iter().enumerate() {
            out[r as usize] += c * w[a];
        }
    }
}

/// Polarization formula: recovers the symmetric multilinear value from a
/// degree-`p` homogeneous map known only on the diagonal,
/// `1/(2^p p!) sum_eps (prod eps_j) f(sum_j eps_j v_j)`.
pub fn polarize<F>(f_diag: F, args: &[&[f64]]) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let p = args.len();
    if p == 0 {
        return f_diag(&[]);
    }
    let dim = args[0].len();
    let mut acc: Vec<f64> = Vec::new();
    let mut point = vec![0.0; dim];
    for mask in 0u64..(1u64 << p) {
        let mut sign = 1.0;
        point.iter_mut().for_each(|x| *x = 0.0);
        for (j, a) in args.iter().enumerate() {
            let eps = if mask >> j & 1 == 1 { -1.0 } else { 1.0 };
            sign *= eps;
            point.iter_mut().zip(a.iter()).for_each(|(x, y)| *x += eps * y);
        }
        let val = f_diag(&point);
        if acc.is_empty() {
            acc = vec![0.0; val.len()];
        }
        acc.iter_mut().zip(&val).for_each(|(s, v)| *s += sign * v);
    }
    let norm = (1u64 << p) as f64 * (1..=p).fold(1.0, |a, i| a * i as f64);
    acc.iter_mut().for_each(|x| *x /= norm);
    acc
}
