use super::norm::{upper_bound, AmbientNorm};
use super::tensor::SymTensor;
use crate::error::{Error, Result};
use crate::series::MajorantSeries;

/// Default degree cap for truncated formal series.
pub const DEFAULT_DEGREE_CAP: usize = 7;

/// Truncated formal series `f = sum_{p <= P} f^(p)` of symmetric tensors.
///
/// Absent degrees are stored as `None`; every present term shares `dim` and
/// `codomain_dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymFunctional {
    dim: usize,
    codomain_dim: usize,
    terms: Vec<Option<SymTensor>>,
}

impl SymFunctional {
    pub fn zero(dim: usize, codomain_dim: usize) -> Self {
        Self {
            dim,
            codomain_dim,
            terms: Vec::new(),
        }
    }

    /// The constant functional `1`.
    pub fn one(dim: usize) -> Self {
        let mut f = Self::zero(dim, 1);
        f.set_term(SymTensor::constant(&[1.0], dim));
        f
    }

    pub fn linear(w: &[f64]) -> Self {
        let mut f = Self::zero(w.len(), 1);
        f.set_term(SymTensor::linear_form(w));
        f
    }

    pub fn from_terms(dim: usize, codomain_dim: usize, terms: impl IntoIterator<Item = SymTensor>) -> Result<Self> {
        let mut f = Self::zero(dim, codomain_dim);
        for t in terms {
            if t.dim() != dim || t.codomain_dim() != codomain_dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: t.dim(),
                });
            }
            if f.term(t.degree()).is_some() {
                return Err(Error::Domain(format!("duplicate term of degree {}", t.degree())));
            }
            f.set_term(t);
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn codomain_dim(&self) -> usize {
        self.codomain_dim
    }

    /// Highest stored degree (0 for the zero functional).
    pub fn max_degree(&self) -> usize {
        self.terms.len().saturating_sub(1)
    }

    pub fn term(&self, p: usize) -> Option<&SymTensor> {
        self.terms.get(p).and_then(|t| t.as_ref())
    }

    pub fn term_mut(&mut self, p: usize) -> Option<&mut SymTensor> {
        self.terms.get_mut(p).and_then(|t| t.as_mut())
    }

    pub fn terms(&self) -> impl Iterator<Item = &SymTensor> {
        self.terms.iter().flatten()
    }

    /// Inserts or replaces the term of the tensor's degree.
    pub fn set_term(&mut self, t: SymTensor) {
        assert_eq!(t.dim(), self.dim);
        assert_eq!(t.codomain_dim(), self.codomain_dim);
        let p = t.degree();
        if self.terms.len() <= p {
            self.terms.resize(p + 1, None);
        }
        self.terms[p] = Some(t);
    }

    /// Keeps only degrees `<= cap`.
    pub fn truncate(&mut self, cap: usize) {
        self.terms.truncate(cap + 1);
    }

    fn check(&self, phi: &[f64]) -> Result<()> {
        if phi.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: phi.len(),
            });
        }
        Ok(())
    }

    /// `sum_p f^(p)(phi, ..., phi)`
    pub fn eval_series(&self, phi: &[f64]) -> Result<Vec<f64>> {
        self.check(phi)?;
        let mut out = vec![0.0; self.codomain_dim];
        for t in self.terms() {
            let v = t.eval_diagonal(phi)?;
            out.iter_mut().zip(v).for_each(|(o, x)| *o += x);
        }
        Ok(out)
    }

    /// Scalar value; panics if the codomain is not one-dimensional.
    pub fn eval_scalar(&self, phi: &[f64]) -> Result<f64> {
        assert_eq!(self.codomain_dim, 1);
        Ok(self.eval_series(phi)?[0])
    }

    /// `delta f_phi(psi) = sum_p p f^(p)(psi, phi, ..., phi)`
    pub fn directional_derivative(&self, phi: &[f64], psi: &[f64]) -> Result<Vec<f64>> {
        self.check(phi)?;
        self.check(psi)?;
        let mut out = vec![0.0; self.codomain_dim];
        for t in self.terms().filter(|t| t.degree() >= 1) {
            let v = t.contract(psi)?.eval_diagonal(phi)?;
            let p = t.degree() as f64;
            out.iter_mut().zip(v).for_each(|(o, x)| *o += p * x);
        }
        Ok(out)
    }

    /// Coefficient majorant built from upper-bound tensor norms.
    pub fn majorant(&self, arg: &dyn AmbientNorm, codomain: &dyn AmbientNorm) -> MajorantSeries {
        let coeffs = (0..self.terms.len())
            .map(|p| self.term(p).map_or(0.0, |t| upper_bound(t, arg, codomain)))
            .collect();
        MajorantSeries::new(coeffs)
    }

    /// `self += c * other`, term by term.
    pub fn axpy(&mut self, c: f64, other: &SymFunctional) {
        assert_eq!(self.dim, other.dim);
        assert_eq!(self.codomain_dim, other.codomain_dim);
        for t in other.terms() {
            match self.term_mut(t.degree()) {
                Some(mine) => mine.axpy(c, t),
                None => {
                    let mut scaled = t.clone();
                    scaled.scale(c);
                    self.set_term(scaled);
                }
            }
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.terms.iter_mut().flatten().for_each(|t| t.scale(c));
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms().all(|t| t.is_zero())
    }

    /// Largest absolute coefficient over all terms.
    pub fn max_abs(&self) -> f64 {
        self.terms().fold(0.0, |m, t| m.max(t.max_abs()))
    }
}
