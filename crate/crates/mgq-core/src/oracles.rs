//! Independent closed-form references used by the verification suites. These
//! deliberately avoid the geodesic engine and the convolution machinery: the
//! hyperbolic-plane formulas work in the ambient Minkowski space, and the flat
//! Moyal products are evaluated by exact Gaussian integration.

pub mod hyperboloid {
    //! Upper-sheet unit hyperboloid `x1^2 + x2^2 - x3^2 = -1` with the induced
    //! metric (curvature -1). Chart coordinates are the first two ambient
    //! components.

    pub fn to_ambient(q: &[f64]) -> [f64; 3] {
        [q[0], q[1], (1.0 + q[0] * q[0] + q[1] * q[1]).sqrt()]
    }

    pub fn mink(u: &[f64; 3], v: &[f64; 3]) -> f64 {
        u[0] * v[0] + u[1] * v[1] - u[2] * v[2]
    }

    /// Chart tangent -> ambient tangent at `q`.
    pub fn tangent_to_ambient(q: &[f64], u: &[f64]) -> [f64; 3] {
        let w = (1.0 + q[0] * q[0] + q[1] * q[1]).sqrt();
        [u[0], u[1], (q[0] * u[0] + q[1] * u[1]) / w]
    }

    pub fn exp_ambient(x: &[f64; 3], u: &[f64; 3]) -> [f64; 3] {
        let r2 = mink(u, u);
        if r2 <= 0.0 {
            return *x;
        }
        let r = r2.sqrt();
        if r < 1e-14 {
            return *x;
        }
        let (ch, sh) = (r.cosh(), r.sinh());
        [
            ch * x[0] + sh * u[0] / r,
            ch * x[1] + sh * u[1] / r,
            ch * x[2] + sh * u[2] / r,
        ]
    }

    pub fn exp_chart(q: &[f64], v: &[f64]) -> Vec<f64> {
        let x = to_ambient(q);
        let u = tangent_to_ambient(q, v);
        let y = exp_ambient(&x, &u);
        vec![y[0], y[1]]
    }

    pub fn dist_chart(q: &[f64], a: &[f64]) -> f64 {
        let x = to_ambient(q);
        let y = to_ambient(a);
        let c = -mink(&x, &y);
        c.max(1.0).acosh()
    }

    /// Chart components of `V_q(a)`.
    pub fn log_chart(q: &[f64], a: &[f64]) -> Vec<f64> {
        let x = to_ambient(q);
        let y = to_ambient(a);
        let c = -mink(&x, &y);
        if c <= 1.0 + 1e-15 {
            return vec![0.0, 0.0];
        }
        let d = c.acosh();
        let norm = (c * c - 1.0).sqrt();
        // W = Y - c X, |W| = sqrt(c^2 - 1); ambient tangent V = d W / |W|
        let scale = d / norm;
        vec![scale * (y[0] - c * x[0]), scale * (y[1] - c * x[1])]
    }

    pub fn reflect_chart(q: &[f64], a: &[f64]) -> Vec<f64> {
        let x = to_ambient(q);
        let y = to_ambient(a);
        let c = mink(&x, &y);
        vec![-y[0] - 2.0 * c * x[0], -y[1] - 2.0 * c * x[1]]
    }

    pub fn midpoint_chart(a: &[f64], b: &[f64]) -> Vec<f64> {
        let x = to_ambient(a);
        let y = to_ambient(b);
        let s = [x[0] + y[0], x[1] + y[1], x[2] + y[2]];
        let norm = (-mink(&s, &s)).sqrt();
        vec![s[0] / norm, s[1] / norm]
    }

    /// Determinant of the 3x3 matrix of ambient midpoint vectors. A geodesic
    /// triangle with these midpoints exists iff the value lies in (-1, 1).
    pub fn midpoint_det(x: &[f64], y: &[f64], z: &[f64]) -> f64 {
        let a = to_ambient(x);
        let b = to_ambient(y);
        let c = to_ambient(z);
        a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
            + a[2] * (b[0] * c[1] - b[1] * c[0])
    }

    /// Interior angle at vertex `q` of the geodesic triangle `(q, a, b)`.
    fn angle_at(q: &[f64], a: &[f64], b: &[f64]) -> f64 {
        let va = log_chart(q, a);
        let vb = log_chart(q, b);
        // metric at q in the chart
        let w2 = 1.0 + q[0] * q[0] + q[1] * q[1];
        let g = |u: &[f64], v: &[f64]| {
            u[0] * v[0] + u[1] * v[1] - (q[0] * u[0] + q[1] * u[1]) * (q[0] * v[0] + q[1] * v[1]) / w2
        };
        let cosang = g(&va, &vb) / (g(&va, &va).sqrt() * g(&vb, &vb).sqrt());
        cosang.clamp(-1.0, 1.0).acos()
    }

    /// Hyperbolic area of the geodesic triangle with the given vertices
    /// (Gauss–Bonnet angle defect, area = pi - sum of interior angles).
    pub fn triangle_area(p1: &[f64], p2: &[f64], p3: &[f64]) -> f64 {
        std::f64::consts::PI - angle_at(p1, p2, p3) - angle_at(p2, p3, p1) - angle_at(p3, p1, p2)
    }
}

pub mod moyal {
    //! Flat (and constant-field) Groenewold–Moyal product of Gaussian symbols
    //! by exact complex Gaussian integration:
    //!
    //! ```text
    //! (f ⋆ g)(x) = (πħ)^{-2n} ∫∫ f(y) g(z) exp{(2i/ħ) (y-x)^T Ω (z-x)} dy dz
    //! ```
    //!
    //! with the constant symplectic matrix `Ω = [[-F, I], [-I, 0]]`.

    use crate::fields::GaussianSymbol;
    use crate::linalg::{CMat, Mat};
    use crate::C64;

    /// Constant-coefficient symplectic matrix on the 2n phase space.
    pub fn omega_flat(n: usize, f12: f64) -> Mat {
        let mut om = Mat::zeros(2 * n, 2 * n);
        if n >= 2 {
            om[(0, 1)] = -f12;
            om[(1, 0)] = f12;
        }
        for i in 0..n {
            om[(i, n + i)] = 1.0;
            om[(n + i, i)] = -1.0;
        }
        om
    }

    /// Exact Moyal (or magnetic Moyal) product of two diagonal Gaussian
    /// symbols at the phase point `x`.
    pub fn star_gaussian(f: &GaussianSymbol, g: &GaussianSymbol, f12: f64, hbar: f64, x: &[f64]) -> C64 {
        let n = f.n;
        let d = 2 * n;
        let om = omega_flat(n, f12);
        // quadratic form M over (Y, Z), Y = y - x, Z = z - x
        let mut m = CMat::zeros(2 * d);
        for i in 0..d {
            m.set(i, i, C64::new(1.0 / (f.widths[i] * f.widths[i]), 0.0));
            m.set(
                d + i,
                d + i,
                C64::new(1.0 / (g.widths[i] * g.widths[i]), 0.0),
            );
        }
        let fac = C64::new(0.0, -2.0 / hbar);
        for i in 0..d {
            for j in 0..d {
                if om[(i, j)] != 0.0 {
                    m.set(i, d + j, fac * om[(i, j)]);
                    m.set(d + j, i, fac * om[(i, j)]);
                }
            }
        }
        // b = (D_f a_f, D_g a_g), a = center - x
        let mut b = vec![C64::new(0.0, 0.0); 2 * d];
        let mut const_exp = 0.0;
        for i in 0..d {
            let af = f.center[i] - x[i];
            let ag = g.center[i] - x[i];
            let df = 1.0 / (f.widths[i] * f.widths[i]);
            let dg = 1.0 / (g.widths[i] * g.widths[i]);
            b[i] = C64::new(df * af, 0.0);
            b[d + i] = C64::new(dg * ag, 0.0);
            const_exp -= 0.5 * (df * af * af + dg * ag * ag);
        }
        // det M is real positive: det M = det(D_f) det(D_g + (4/ħ²) Ω^T D_f^{-1} Ω)
        let mut det_df = 1.0;
        for i in 0..d {
            det_df *= 1.0 / (f.widths[i] * f.widths[i]);
        }
        let mut schur = Mat::zeros(d, d);
        for i in 0..d {
            schur[(i, i)] = 1.0 / (g.widths[i] * g.widths[i]);
        }
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0.0;
                for k in 0..d {
                    acc += om[(k, i)] * (f.widths[k] * f.widths[k]) * om[(k, j)];
                }
                schur[(i, j)] += 4.0 / (hbar * hbar) * acc;
            }
        }
        let det_m = det_df * schur.det();
        let minv_b = m.solve(&b).expect("gaussian quadratic form");
        let mut quad = C64::new(0.0, 0.0);
        for i in 0..2 * d {
            quad += b[i] * minv_b[i];
        }
        let pref = (2.0 * std::f64::consts::PI).powi(d as i32) / det_m.sqrt()
            / (std::f64::consts::PI * hbar).powi(d as i32);
        f.amp * g.amp * pref * (C64::new(const_exp, 0.0) + 0.5 * quad).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::hyperboloid as hyp;
    use super::moyal;
    use crate::fields::GaussianSymbol;
    use crate::quad::tensor_grid;
    use crate::C64;
    use approx::assert_relative_eq;

    #[test]
    fn ambient_roundtrip() {
        let q = [0.4, -0.9];
        let v = [0.7, 0.3];
        let a = hyp::exp_chart(&q, &v);
        let back = hyp::log_chart(&q, &a);
        assert_relative_eq!(back[0], v[0], epsilon = 1e-12);
        assert_relative_eq!(back[1], v[1], epsilon = 1e-12);
        let r = hyp::reflect_chart(&q, &a);
        let rr = hyp::reflect_chart(&q, &r);
        assert_relative_eq!(rr[0], a[0], epsilon = 1e-12);
    }

    #[test]
    fn midpoint_reflects() {
        let a = [0.3, 0.2];
        let b = [-0.8, 0.5];
        let c = hyp::midpoint_chart(&a, &b);
        let r = hyp::reflect_chart(&c, &a);
        assert_relative_eq!(r[0], b[0], epsilon = 1e-12);
        assert_relative_eq!(r[1], b[1], epsilon = 1e-12);
    }

    #[test]
    fn equilateral_area_small_triangle() {
        // tiny triangle: area ~ euclidean area at the origin
        let s = 0.02;
        let area = hyp::triangle_area(&[0.0, 0.0], &[s, 0.0], &[0.0, s]);
        assert_relative_eq!(area, 0.5 * s * s, max_relative = 1e-2);
    }

    #[test]
    fn gaussian_star_matches_quadrature() {
        // pin the closed form against brute-force quadrature at n = 1
        let hbar = 0.4;
        let f = GaussianSymbol::new(
            C64::new(1.0, 0.0),
            vec![0.2, -0.1],
            vec![0.9, 1.1],
        );
        let g = GaussianSymbol::new(
            C64::new(0.8, 0.0),
            vec![-0.3, 0.25],
            vec![1.2, 0.8],
        );
        let x = [0.1, 0.05];
        let closed = moyal::star_gaussian(&f, &g, 0.0, hbar, &x);
        // direct 4-d quadrature of the kernel representation
        let nodes = tensor_grid(2, &[-6.0, -6.0], &[6.0, 6.0], 48);
        let mut val = C64::new(0.0, 0.0);
        for (yy, wy) in &nodes {
            for (zz, wz) in &nodes {
                let yv = [x[0] + yy[0], x[1] + yy[1]];
                let zv = [x[0] + zz[0], x[1] + zz[1]];
                // S = 2 Y^T Omega Z with Omega = [[0,1],[-1,0]]
                let s = 2.0 * (yy[0] * zz[1] - yy[1] * zz[0]);
                let phase = C64::new(0.0, s / hbar).exp();
                val += phase * f.value(&yv) * g.value(&zv) * *wy * *wz;
            }
        }
        val /= C64::new(std::f64::consts::PI * hbar, 0.0).powi(2);
        assert_relative_eq!(closed.re, val.re, epsilon = 3e-6, max_relative = 3e-5);
        assert_relative_eq!(closed.im, val.im, epsilon = 3e-6, max_relative = 3e-5);
    }

    #[test]
    fn gaussian_star_unit_limit() {
        // very wide g approximates the unit symbol: f ⋆ 1 -> f
        let hbar = 0.1;
        let f = GaussianSymbol::new(C64::new(1.0, 0.0), vec![0.1, -0.2], vec![0.7, 0.9]);
        let g = GaussianSymbol::new(C64::new(1.0, 0.0), vec![0.0, 0.0], vec![500.0, 500.0]);
        let x = [0.3, 0.1];
        let st = moyal::star_gaussian(&f, &g, 0.0, hbar, &x);
        assert_relative_eq!(st.re, f.value(&x).re, max_relative = 1e-4);
        assert!(st.im.abs() < 1e-6);
    }
}
