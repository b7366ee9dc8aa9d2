//! Tensor norms.
//!
//! The norm `||f||_x` of a symmetric multilinear map is the smallest `C` with
//! `||f(v_1, ..., v_p)|| <= C ||v_1|| ... ||v_p||`. Computing it exactly is
//! intractable in general, so [`tensor_norm`] returns a certified upper bound
//! from the coefficients together with a sampled lower bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tensor::SymTensor;

/// How coordinates relate to an ambient norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoordinateBound {
    /// The norm is the l1 norm of the coordinates.
    SumAbs,
    /// `|v_i| <= c ||v||` for every coordinate `i`.
    MaxAbs(f64),
}

/// A norm on coordinate vectors of a fixed dimension.
pub trait AmbientNorm {
    fn norm(&self, v: &[f64]) -> f64;
    fn coordinate_bound(&self) -> CoordinateBound;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StandardNorm {
    L1,
    L2,
    LInf,
}

impl AmbientNorm for StandardNorm {
    fn norm(&self, v: &[f64]) -> f64 {
        match self {
            StandardNorm::L1 => v.iter().map(|x| x.abs()).sum(),
            StandardNorm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            StandardNorm::LInf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    fn coordinate_bound(&self) -> CoordinateBound {
        match self {
            StandardNorm::L1 => CoordinateBound::SumAbs,
            StandardNorm::L2 | StandardNorm::LInf => CoordinateBound::MaxAbs(1.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormBounds {
    /// Certified: `||f||_x <= upper`.
    pub upper: f64,
    /// Sampled: `lower <= ||f||_x`.
    pub lower: f64,
    /// Best sampled diagonal ratio `|f(phi)| / ||phi||^p`; `||f||_x <= p^p/p! * diagonal`.
    pub diagonal: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct SamplingOptions {
    pub directions: usize,
    pub ascent_steps: usize,
    pub seed: u64,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        Self {
            directions: 4096,
            ascent_steps: 64,
            seed: 0x5eed_7e45,
        }
    }
}

/// Upper bound on `||f||_x` from the stored components.
///
/// With an l1 ambient norm each codomain row contributes `max_alpha |T_alpha|`.
/// When coordinates are bounded by `c ||v||`, each row contributes
/// `c^p sum_alpha mult(alpha) |T_alpha|`. Rows are combined through the
/// triangle inequality with the codomain basis vectors measured in `codomain`.
pub fn upper_bound(f: &SymTensor, arg: &dyn AmbientNorm, codomain: &dyn AmbientNorm) -> f64 {
    let p = f.degree();
    let mult = f.table().multiplicities();
    let basis_norm = |i: usize| {
        if f.codomain_dim() == 1 {
            1.0
        } else {
            let mut e = vec![0.0; f.codomain_dim()];
            e[i] = 1.0;
            codomain.norm(&e)
        }
    };
    (0..f.codomain_dim())
        .map(|i| {
            let row = f.component(i);
            let bound = match arg.coordinate_bound() {
                CoordinateBound::SumAbs => row.iter().fold(0.0f64, |m, t| m.max(t.abs())),
                CoordinateBound::MaxAbs(c) => {
                    c.powi(p as i32) * row.iter().zip(mult).map(|(t, m)| t.abs() * m).sum::<f64>()
                }
            };
            bound * basis_norm(i)
        })
        .sum()
}

/// Scalar values are measured by their absolute value whatever `codomain` is.
fn measure(codomain: &dyn AmbientNorm, val: &[f64]) -> f64 {
    if val.len() == 1 {
        val[0].abs()
    } else {
        codomain.norm(val)
    }
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize, norm: &dyn AmbientNorm) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = norm.norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn ratio(f: &SymTensor, args: &[Vec<f64>], arg: &dyn AmbientNorm, codomain: &dyn AmbientNorm) -> f64 {
    let refs: Vec<&[f64]> = args.iter().map(|a| a.as_slice()).collect();
    let val = f.eval_homogeneous(&refs).expect("sample dimensions match");
    let denom: f64 = args.iter().map(|a| arg.norm(a)).product();
    measure(codomain, &val) / denom
}

fn diagonal_ratio(f: &SymTensor, phi: &[f64], arg: &dyn AmbientNorm, codomain: &dyn AmbientNorm) -> f64 {
    let val = f.eval_diagonal(phi).expect("sample dimensions match");
    measure(codomain, &val) / arg.norm(phi).powi(f.degree() as i32)
}

/// Random search over unit argument tuples followed by a perturbative ascent.
pub fn sampled_lower_bound(
    f: &SymTensor,
    arg: &dyn AmbientNorm,
    codomain: &dyn AmbientNorm,
    options: &SamplingOptions,
) -> (f64, f64) {
    let p = f.degree();
    let d = f.dim();
    if p == 0 {
        let v = measure(codomain, f.coeffs());
        return (v, v);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut best_tuple: Vec<Vec<f64>> = Vec::new();
    let mut best = 0.0f64;
    let mut best_diag_phi = vec![0.0; d];
    let mut best_diag = 0.0f64;
    // canonical basis directions first, then random ones
    for a in 0..d {
        let mut e = vec![0.0; d];
        e[a] = 1.0;
        let n = arg.norm(&e);
        e[a] = 1.0 / n;
        let r = diagonal_ratio(f, &e, arg, codomain);
        if r > best_diag {
            best_diag = r;
            best_diag_phi = e;
        }
    }
    for s in 0..options.directions {
        if s % 2 == 0 {
            let phi = random_unit(&mut rng, d, arg);
            let r = diagonal_ratio(f, &phi, arg, codomain);
            if r > best_diag {
                best_diag = r;
                best_diag_phi = phi;
            }
        } else {
            let tuple: Vec<Vec<f64>> = (0..p).map(|_| random_unit(&mut rng, d, arg)).collect();
            let r = ratio(f, &tuple, arg, codomain);
            if r > best {
                best = r;
                best_tuple = tuple;
            }
        }
    }
    // ascent on the diagonal
    let mut step = 0.5;
    for _ in 0..options.ascent_steps {
        let trial: Vec<f64> = best_diag_phi
            .iter()
            .map(|x| x + step * rng.gen_range(-1.0..1.0))
            .collect();
        let r = diagonal_ratio(f, &trial, arg, codomain);
        if r > best_diag {
            best_diag = r;
            let n = arg.norm(&trial);
            best_diag_phi = trial.into_iter().map(|x| x / n).collect();
        } else {
            step *= 0.9;
        }
    }
    // ascent on the polarized tuple
    if best_tuple.is_empty() {
        best_tuple = vec![best_diag_phi.clone(); p];
    }
    let mut step = 0.5;
    for _ in 0..options.ascent_steps {
        let slot = rng.gen_range(0..p);
        let mut trial = best_tuple.clone();
        trial[slot] = trial[slot]
            .iter()
            .map(|x| x + step * rng.gen_range(-1.0..1.0))
            .collect();
        let r = ratio(f, &trial, arg, codomain);
        if r > best {
            best = r;
            best_tuple = trial;
        } else {
            step *= 0.9;
        }
    }
    // every diagonal value is also a polarized value
    (best.max(best_diag), best_diag)
}

/// Certified upper bound and sampled lower bound on `||f||_x`.
pub fn tensor_norm(f: &SymTensor, arg: &dyn AmbientNorm, options: &SamplingOptions) -> NormBounds {
    tensor_norm_with_codomain(f, arg, arg, options)
}

pub fn tensor_norm_with_codomain(
    f: &SymTensor,
    arg: &dyn AmbientNorm,
    codomain: &dyn AmbientNorm,
    options: &SamplingOptions,
) -> NormBounds {
    if f.is_zero() {
        return NormBounds {
            upper: 0.0,
            lower: 0.0,
            diagonal: 0.0,
        };
    }
    let upper = upper_bound(f, arg, codomain);
    let (lower, diagonal) = sampled_lower_bound(f, arg, codomain, options);
    NormBounds {
        upper,
        lower,
        diagonal,
    }
}
