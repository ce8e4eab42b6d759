//! Analytic test fields: phase-space Gaussians (with exact derivatives and
//! momentum Fourier images), linear-polynomial Gaussian envelopes, Gaussian
//! wave packets on the base manifold, and smooth bump cutoffs.

use crate::C64;

/// Diagonal Gaussian on phase space, `f(x) = amp · exp(-Σ (x_k - c_k)^2 / 2 w_k^2)`
/// with `x = (q, p)` flattened to length `2n`.
#[derive(Debug, Clone)]
pub struct GaussianSymbol {
    pub n: usize,
    pub amp: C64,
    pub center: Vec<f64>,
    pub widths: Vec<f64>,
}

impl GaussianSymbol {
    pub fn new(amp: C64, center: Vec<f64>, widths: Vec<f64>) -> Self {
        assert_eq!(center.len(), widths.len());
        assert_eq!(center.len() % 2, 0);
        GaussianSymbol {
            n: center.len() / 2,
            amp,
            center,
            widths,
        }
    }

    pub fn value(&self, x: &[f64]) -> C64 {
        let mut e = 0.0;
        for k in 0..2 * self.n {
            let d = (x[k] - self.center[k]) / self.widths[k];
            e -= 0.5 * d * d;
        }
        self.amp * e.exp()
    }

    pub fn grad(&self, x: &[f64]) -> Vec<C64> {
        let v = self.value(x);
        (0..2 * self.n)
            .map(|k| v * (-(x[k] - self.center[k]) / (self.widths[k] * self.widths[k])))
            .collect()
    }

    /// Hessian, row-major `2n x 2n`.
    pub fn hess(&self, x: &[f64]) -> Vec<C64> {
        let v = self.value(x);
        let d = 2 * self.n;
        let mut out = vec![C64::new(0.0, 0.0); d * d];
        for k in 0..d {
            let tk = -(x[k] - self.center[k]) / (self.widths[k] * self.widths[k]);
            for l in 0..d {
                let tl = -(x[l] - self.center[l]) / (self.widths[l] * self.widths[l]);
                let mut h = tk * tl;
                if k == l {
                    h -= 1.0 / (self.widths[k] * self.widths[k]);
                }
                out[k * d + l] = v * h;
            }
        }
        out
    }

    /// Momentum Fourier image
    /// `f~(q, u) = (2πħ)^{-n} ∫ e^{i u p / ħ} f(q, p) dp / μ(q)`.
    pub fn fourier(&self, q: &[f64], u: &[f64], hbar: f64, mu_q: f64) -> C64 {
        let n = self.n;
        let mut e = 0.0;
        for k in 0..n {
            let d = (q[k] - self.center[k]) / self.widths[k];
            e -= 0.5 * d * d;
        }
        let mut phase = 0.0;
        let mut norm = 1.0;
        for k in 0..n {
            let w = self.widths[n + k];
            let p0 = self.center[n + k];
            phase += u[k] * p0 / hbar;
            e -= 0.5 * w * w * u[k] * u[k] / (hbar * hbar);
            norm *= (2.0 * std::f64::consts::PI).sqrt() * w;
        }
        let pref = norm / (2.0 * std::f64::consts::PI * hbar).powi(n as i32) / mu_q;
        self.amp * pref * C64::new(e, phase).exp()
    }

    /// Radius beyond which the momentum Fourier image is negligible.
    pub fn u_radius(&self, hbar: f64) -> f64 {
        let wmin = self.widths[self.n..]
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        7.0 * hbar / wmin
    }

    /// Radius of the configuration-space support around the q-center.
    pub fn q_radius(&self) -> f64 {
        let wmax = self.widths[..self.n].iter().cloned().fold(0.0, f64::max);
        7.0 * wmax
    }
}

/// `(alpha + Σ beta_k (x_k - c_k)) · G(x)` with `G` a diagonal Gaussian:
/// enough to realize momentum-polynomial symbols of degree one under smooth
/// envelopes, with a closed-form Fourier image.
#[derive(Debug, Clone)]
pub struct LinearGaussian {
    pub alpha: C64,
    pub beta: Vec<C64>,
    pub gauss: GaussianSymbol,
}

impl LinearGaussian {
    pub fn value(&self, x: &[f64]) -> C64 {
        let mut lin = self.alpha;
        for k in 0..2 * self.gauss.n {
            lin += self.beta[k] * (x[k] - self.gauss.center[k]);
        }
        lin * self.gauss.value(x)
    }

    pub fn fourier(&self, q: &[f64], u: &[f64], hbar: f64, mu_q: f64) -> C64 {
        let n = self.gauss.n;
        let base = self.gauss.fourier(q, u, hbar, mu_q);
        let mut lin = self.alpha;
        for k in 0..n {
            lin += self.beta[k] * (q[k] - self.gauss.center[k]);
        }
        // momentum factors: (p - p0)_k -> i w_k^2 u_k / hbar under the image
        for k in 0..n {
            let w = self.gauss.widths[n + k];
            lin += self.beta[n + k] * C64::new(0.0, w * w * u[k] / hbar);
        }
        lin * base
    }

    pub fn u_radius(&self, hbar: f64) -> f64 {
        1.3 * self.gauss.u_radius(hbar)
    }
}

/// Gaussian wave packet on the chart,
/// `ψ(q) = amp · exp(-|q - c|^2 / 2σ^2) · exp(i k·q)`.
#[derive(Debug, Clone)]
pub struct GaussianWave {
    pub amp: C64,
    pub center: Vec<f64>,
    pub sigma: Vec<f64>,
    pub wavevec: Vec<f64>,
}

impl GaussianWave {
    pub fn plain(center: Vec<f64>, sigma: f64) -> Self {
        let n = center.len();
        GaussianWave {
            amp: C64::new(1.0, 0.0),
            center,
            sigma: vec![sigma; n],
            wavevec: vec![0.0; n],
        }
    }

    pub fn value(&self, q: &[f64]) -> C64 {
        let mut e = 0.0;
        let mut ph = 0.0;
        for k in 0..q.len() {
            let d = (q[k] - self.center[k]) / self.sigma[k];
            e -= 0.5 * d * d;
            ph += self.wavevec[k] * q[k];
        }
        self.amp * C64::new(e, ph).exp()
    }
}

/// Smooth compact bump: identically 1 on `r <= plateau`, identically 0 on
/// `r >= support`, C-infinity in between.
#[derive(Debug, Clone, Copy)]
pub struct Bump {
    pub plateau: f64,
    pub support: f64,
}

impl Bump {
    pub fn eval(&self, r: f64) -> f64 {
        if r <= self.plateau {
            1.0
        } else if r >= self.support {
            0.0
        } else {
            let t = (self.support - r) / (self.support - self.plateau);
            let s = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
            s(t) / (s(t) + s(1.0 - t))
        }
    }

    pub fn at(&self, x: &[f64], center: &[f64]) -> f64 {
        let r = x
            .iter()
            .zip(center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        self.eval(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::uniform_grid;
    use approx::assert_relative_eq;

    #[test]
    fn fourier_image_matches_quadrature() {
        let hbar = 0.3;
        let f = GaussianSymbol::new(C64::new(1.3, 0.2), vec![0.1, -0.2, 0.4, 0.7], vec![1.0, 0.8, 0.9, 1.2]);
        let q = [0.15, -0.12];
        let u = [0.21, -0.33];
        let closed = f.fourier(&q, &u, hbar, 1.0);
        let nodes = uniform_grid(2, 9.0, 160);
        let mut val = C64::new(0.0, 0.0);
        for (p, w) in &nodes {
            let x = [q[0], q[1], p[0], p[1]];
            let phase = C64::new(0.0, (u[0] * p[0] + u[1] * p[1]) / hbar).exp();
            val += phase * f.value(&x) * *w;
        }
        val /= C64::new(2.0 * std::f64::consts::PI * hbar, 0.0).powi(2);
        assert_relative_eq!(closed.re, val.re, epsilon = 1e-10, max_relative = 1e-8);
        assert_relative_eq!(closed.im, val.im, epsilon = 1e-10, max_relative = 1e-8);
    }

    #[test]
    fn linear_gaussian_fourier() {
        let hbar = 0.25;
        let g = GaussianSymbol::new(C64::new(1.0, 0.0), vec![0.3, 0.5], vec![1.1, 0.9]);
        let f = LinearGaussian {
            alpha: C64::new(0.4, 0.0),
            beta: vec![C64::new(1.0, 0.0), C64::new(-0.7, 0.0)],
            gauss: g,
        };
        let q = [0.42];
        let u = [0.17];
        let closed = f.fourier(&q, &u, hbar, 1.0);
        let nodes = uniform_grid(1, 8.0, 400);
        let mut val = C64::new(0.0, 0.0);
        for (p, w) in &nodes {
            let x = [q[0], p[0]];
            let phase = C64::new(0.0, u[0] * p[0] / hbar).exp();
            val += phase * f.value(&x) * *w;
        }
        val /= C64::new(2.0 * std::f64::consts::PI * hbar, 0.0);
        assert_relative_eq!(closed.re, val.re, epsilon = 1e-10, max_relative = 1e-8);
        assert_relative_eq!(closed.im, val.im, epsilon = 1e-10, max_relative = 1e-8);
    }

    #[test]
    fn bump_plateau_and_support() {
        let b = Bump {
            plateau: 1.0,
            support: 2.0,
        };
        assert_eq!(b.eval(0.5), 1.0);
        assert_eq!(b.eval(2.5), 0.0);
        let mid = b.eval(1.5);
        assert!(mid > 0.0 && mid < 1.0);
    }

    #[test]
    fn gaussian_hessian_symmetry() {
        let f = GaussianSymbol::new(C64::new(1.0, 0.0), vec![0.0, 0.1, 0.2, 0.3], vec![1.0, 1.1, 0.9, 0.8]);
        let x = [0.3, -0.2, 0.4, 0.05];
        let h = f.hess(&x);
        for k in 0..4 {
            for l in 0..4 {
                assert_relative_eq!(h[k * 4 + l].re, h[l * 4 + k].re, epsilon = 1e-14);
            }
        }
    }
}
