//! Gauss-Legendre rules and their collapse onto ordered simplices.

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Newton on P_n from the Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] to [0, 1]
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Points `0 < u_1 < ... < u_dim < 1` and weights of the collapsed product rule
/// on the ordered simplex (volume `1/dim!`), with `order` points per direction.
pub fn ordered_simplex_rule(dim: usize, order: usize) -> Vec<(Vec<f64>, f64)> {
    if dim == 0 {
        return vec![(Vec::new(), 1.0)];
    }
    let (x, w) = gauss_legendre(order);
    let total = order.pow(dim as u32);
    let mut out = Vec::with_capacity(total);
    let mut digits = vec![0usize; dim];
    for _ in 0..total {
        // u_dim = s_dim, u_i = s_i u_{i+1}; Jacobian prod_{i >= 2} u_i
        let mut u = vec![0.0; dim];
        let mut weight = 1.0;
        let mut upper = 1.0;
        for i in (0..dim).rev() {
            u[i] = x[digits[i]] * upper;
            weight *= w[digits[i]];
            if i > 0 {
                weight *= u[i];
            }
            upper = u[i];
        }
        out.push((u, weight));
        for d in digits.iter_mut() {
            *d += 1;
            if *d < order {
                break;
            }
            *d = 0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_point_rule_is_exact_to_degree_fifteen() {
        let (x, w) = gauss_legendre(8);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for p in 0..16 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-15, "degree {p}");
        }
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn simplex_rule_volumes_and_moments() {
        for dim in 0..4 {
            let rule = ordered_simplex_rule(dim, 8);
            let vol: f64 = rule.iter().map(|(_, w)| w).sum();
            let fact: f64 = (1..=dim).map(|k| k as f64).product();
            assert!((vol - 1.0 / fact).abs() < 1e-14);
            assert!(rule.iter().all(|(u, _)| u.windows(2).all(|p| p[0] <= p[1])));
        }
        // int_{0<u1<u2<1} u1 u2 = 1/8
        let q: f64 = ordered_simplex_rule(2, 8).iter().map(|(u, w)| w * u[0] * u[1]).sum();
        assert!((q - 0.125).abs() < 1e-15);
    }
}
