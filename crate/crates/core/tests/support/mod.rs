//! Shared oracle machinery for integration tests: an independent
//! quadrature route to Beta bin masses that never touches the library's
//! incomplete-beta implementation.

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on
/// the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-based initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            // evaluate P_n(x) and P_n'(x) by recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = pk;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let mut p0 = 1.0;
        let mut p1 = x;
        for k in 2..=n {
            let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = pk;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// ∫ f over [a, b] with a fixed Gauss-Legendre rule.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, nodes: &[f64], weights: &[f64]) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    nodes
        .iter()
        .zip(weights)
        .map(|(&t, &w)| w * f(mid + half * t))
        .sum::<f64>()
        * half
}

/// Bin masses of Beta(alpha, beta) on a uniform grid, by per-bin
/// quadrature of the unnormalized density with power substitutions at the
/// singular endpoints, self-normalized over the grid. Independent of any
/// incomplete-beta implementation.
pub fn beta_masses_by_quadrature(alpha: f64, beta: f64, n_bins: usize) -> Vec<f64> {
    let (nodes, weights) = gauss_legendre(48);
    let h = 1.0 / n_bins as f64;
    let pdf = |x: f64| x.powf(alpha - 1.0) * (1.0 - x).powf(beta - 1.0);
    let mut masses = Vec::with_capacity(n_bins);
    for i in 0..n_bins {
        let a = i as f64 * h;
        let b = (i + 1) as f64 * h;
        let mass = if i == 0 {
            // u = x^alpha turns x^{alpha-1} dx into du / alpha
            let upper = h.powf(alpha);
            integrate(
                |u| (1.0 - u.powf(1.0 / alpha)).powf(beta - 1.0),
                0.0,
                upper,
                &nodes,
                &weights,
            ) / alpha
        } else if i == n_bins - 1 {
            // v = (1-x)^beta symmetrically
            let upper = h.powf(beta);
            integrate(
                |v| (1.0 - v.powf(1.0 / beta)).powf(alpha - 1.0),
                0.0,
                upper,
                &nodes,
                &weights,
            ) / beta
        } else {
            integrate(pdf, a, b, &nodes, &weights)
        };
        masses.push(mass);
    }
    let total: f64 = masses.iter().sum();
    for m in masses.iter_mut() {
        *m /= total;
    }
    masses
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

#[allow(dead_code)]
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
