//! Quadrature rules: Gauss–Legendre nodes (Newton on the Legendre recurrence)
//! and uniform grids for momentum-side Fourier integrals.

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let (mut p, mut dp) = legendre(n, x);
        for _ in 0..100 {
            let dx = -p / dp;
            x += dx;
            let (np, ndp) = legendre(n, x);
            p = np;
            dp = ndp;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|wi| wi * half).collect(),
    )
}

/// Tensor-product quadrature over a `dim`-dimensional box. Nodes are listed in
/// lexicographic order; each entry is (point, weight).
pub fn tensor_grid(dim: usize, lo: &[f64], hi: &[f64], n_per_dim: usize) -> Vec<(Vec<f64>, f64)> {
    let rules: Vec<_> = (0..dim)
        .map(|d| gauss_legendre_on(n_per_dim, lo[d], hi[d]))
        .collect();
    let total = n_per_dim.pow(dim as u32);
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let mut pt = Vec::with_capacity(dim);
        let mut w = 1.0;
        for d in 0..dim {
            pt.push(rules[d].0[idx[d]]);
            w *= rules[d].1[idx[d]];
        }
        out.push((pt, w));
        for d in (0..dim).rev() {
            idx[d] += 1;
            if idx[d] < n_per_dim {
                break;
            }
            idx[d] = 0;
        }
    }
    out
}

/// Uniform grid with trapezoid weights over a centered box `[-r, r]^dim`.
/// For smooth integrands that vanish at the boundary this is spectrally
/// accurate, which is exactly the situation of compact momentum supports.
pub fn uniform_grid(dim: usize, radius: f64, n_per_dim: usize) -> Vec<(Vec<f64>, f64)> {
    assert!(n_per_dim >= 2);
    let h = 2.0 * radius / (n_per_dim as f64 - 1.0);
    let total = n_per_dim.pow(dim as u32);
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let mut pt = Vec::with_capacity(dim);
        let mut w = 1.0;
        for d in 0..dim {
            pt.push(-radius + h * idx[d] as f64);
            let edge = idx[d] == 0 || idx[d] == n_per_dim - 1;
            w *= if edge { 0.5 * h } else { h };
        }
        out.push((pt, w));
        for d in (0..dim).rev() {
            idx[d] += 1;
            if idx[d] < n_per_dim {
                break;
            }
            idx[d] = 0;
        }
    }
    out
}
