//! Geodesic engine: exponential and logarithm maps, geodesic reflections,
//! midpoints and the Jacobian densities, all driven by one adaptive
//! integration of the geodesic equation with optional variational
//! (Jacobi-frame) and line-integral states.
//!
//! Augmented state layout for a single geodesic flow over `t ∈ [0, 1]`:
//!
//! ```text
//! [ q (n) | v (n) | Y (2n x 2n, row-major) | line (1) | rad (n) ]
//! ```
//!
//! `Y(t)` is the fundamental matrix of the variational equation, i.e.
//! `∂(q(t), v(t)) / ∂(q(0), v(0))`. The `line` state accumulates `∫ A(γ)·γ̇ dt`
//! for the magnetic potential `A`; `rad` accumulates the Jacobi-weighted
//! Lorentz integrand used by the radial-gauge potential.

use crate::error::{GeomError, Result};
use crate::geometry::ManifoldModel;
use crate::linalg::Mat;
use crate::ode::{Integrator, OdeOpts};

#[derive(Debug, Clone, Copy)]
pub struct GeoOpts {
    pub rtol: f64,
    pub atol: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
}

impl Default for GeoOpts {
    fn default() -> Self {
        GeoOpts {
            rtol: 1e-10,
            atol: 1e-12,
            newton_tol: 1e-11,
            max_newton: 60,
        }
    }
}

impl GeoOpts {
    /// Tightened profile for finite-difference consumers (second derivatives
    /// of maps built from geodesic solves).
    pub fn tight() -> Self {
        GeoOpts {
            rtol: 1e-13,
            atol: 1e-14,
            newton_tol: 5e-13,
            max_newton: 80,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FlowFlags {
    pub variational: bool,
    pub line_potential: bool,
    pub radial_accum: bool,
}

impl FlowFlags {
    pub fn plain() -> Self {
        FlowFlags::default()
    }

    pub fn var() -> Self {
        FlowFlags {
            variational: true,
            ..Default::default()
        }
    }

    pub fn var_line() -> Self {
        FlowFlags {
            variational: true,
            line_potential: true,
            ..Default::default()
        }
    }
}

/// One integrated geodesic with halfway and endpoint readouts.
#[derive(Debug, Clone)]
pub struct GeoFlow {
    pub n: usize,
    pub q0: Vec<f64>,
    pub v0: Vec<f64>,
    pub q_mid: Vec<f64>,
    pub v_mid: Vec<f64>,
    pub q1: Vec<f64>,
    pub v1: Vec<f64>,
    pub y_mid: Option<Mat>,
    pub y1: Option<Mat>,
    /// `∫_0^1 A(γ(t))·γ̇(t) dt` when requested and a potential exists.
    pub line: f64,
    /// Radial-potential accumulator `-∫ J(t)^T F(γ) γ̇ dt`.
    pub rad: Vec<f64>,
}

impl GeoFlow {
    /// `∂ exp_q(v) / ∂ v` (the Jacobi frame at the endpoint).
    pub fn dexp_v(&self) -> Mat {
        block_qv(self.y1.as_ref().expect("variational state"), self.n)
    }

    /// `∂ exp_q(v) / ∂ q` at fixed chart velocity.
    pub fn dexp_q(&self) -> Mat {
        block_qq(self.y1.as_ref().expect("variational state"), self.n)
    }
}

fn block_qv(y: &Mat, n: usize) -> Mat {
    let mut b = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] = y[(i, n + j)];
        }
    }
    b
}

fn block_qq(y: &Mat, n: usize) -> Mat {
    let mut b = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] = y[(i, j)];
        }
    }
    b
}

#[derive(Debug, Clone)]
pub struct LogData {
    pub v: Vec<f64>,
    /// Converged final flow from `q` with velocity `v` (variational state on).
    pub flow: GeoFlow,
    pub iterations: usize,
    pub residual: f64,
}

impl LogData {
    /// `∂ V_q(a) / ∂ a = (∂ exp_q(v)/∂v)^{-1}`.
    pub fn dlog(&self) -> Result<Mat> {
        self.flow.dexp_v().inverse()
    }
}

#[derive(Debug, Clone)]
pub struct MidpointData {
    /// Geodesic midpoint `a ∨ b`.
    pub mid: Vec<f64>,
    /// Mid-velocity `a ∧ b = 2 V_{a∨b}(a)`.
    pub velocity: Vec<f64>,
    /// `∂ exp_c(w) / ∂ w` at `w = V_c(a)`.
    pub frame_a: Mat,
    /// Same toward `b`.
    pub frame_b: Mat,
    /// Residual `‖s_c(a) - b‖` measured after construction.
    pub residual: f64,
}

/// Jacobian densities of the reflection/exponential maps at `(q, a)`.
#[derive(Debug, Clone)]
pub struct DensityPack {
    pub j: f64,
    pub e_at_a: f64,
    pub e_at_b: f64,
    pub measure_ratio: f64,
    pub big_j: f64,
}

/// Per-pair quantities consumed by the convolution cochain: midpoint,
/// mid-velocity, amplitude factors of `k(a, b)` and the potential line
/// integral along the connecting geodesic.
#[derive(Debug, Clone)]
pub struct PairData {
    pub mid: Vec<f64>,
    pub velocity: Vec<f64>,
    pub j_mid: f64,
    pub e_a: f64,
    pub e_b: f64,
    /// `(j_{a∨b}(a) e_{a∨b}(a) e_{a∨b}(b))^{1/2}`.
    pub kappa_amp: f64,
    /// `∫ A` along the geodesic `a → b`.
    pub line_ab: f64,
}

pub struct GeodesicEngine<'m> {
    pub model: &'m ManifoldModel,
    pub opts: GeoOpts,
}

impl<'m> GeodesicEngine<'m> {
    pub fn new(model: &'m ManifoldModel) -> Self {
        GeodesicEngine {
            model,
            opts: GeoOpts::default(),
        }
    }

    pub fn with_opts(model: &'m ManifoldModel, opts: GeoOpts) -> Self {
        GeodesicEngine { model, opts }
    }

    fn n(&self) -> usize {
        self.model.dim()
    }

    /// Integrate the geodesic from `(q, v)` over unit time.
    pub fn flow(&self, q: &[f64], v: &[f64], flags: FlowFlags) -> Result<GeoFlow> {
        let n = self.n();
        assert_eq!(q.len(), n);
        assert_eq!(v.len(), n);
        if !self.model.chart_contains(q) {
            return Err(GeomError::ChartExit);
        }
        let want_line = flags.line_potential && self.model.has_potential();
        let want_rad = flags.radial_accum;
        let want_var = flags.variational || want_rad;
        let var_len = if want_var { 4 * n * n } else { 0 };
        let line_len = usize::from(want_line);
        let rad_len = if want_rad { n } else { 0 };
        let dim = 2 * n + var_len + line_len + rad_len;
        let mut y = vec![0.0; dim];
        y[..n].copy_from_slice(q);
        y[n..2 * n].copy_from_slice(v);
        if want_var {
            for i in 0..2 * n {
                y[2 * n + i * 2 * n + i] = 1.0;
            }
        }

        let model = self.model;
        let mut gamma = vec![0.0; n * n * n];
        let mut dgamma = vec![0.0; n * n * n * n];
        let mut far = vec![0.0; n * n];
        let mut pot = vec![0.0; n];
        let rhs = move |_t: f64, s: &[f64], ds: &mut [f64]| {
            let (qs, rest) = s.split_at(n);
            let (vs, _) = rest.split_at(n);
            model.gamma(qs, &mut gamma);
            for i in 0..n {
                ds[i] = vs[i];
            }
            for k in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        acc += gamma[(k * n + i) * n + j] * vs[i] * vs[j];
                    }
                }
                ds[n + k] = -acc;
            }
            if want_var {
                dgamma.copy_from_slice(&model.dgamma(qs));
                let yb = &s[2 * n..2 * n + var_len];
                let dyb = &mut ds[2 * n..2 * n + var_len];
                let w = 2 * n;
                // C_{kl} = ∂_l Γ^k_{ij} v^i v^j ; D_{kj} = 2 Γ^k_{ij} v^i
                for c in 0..w {
                    for r in 0..n {
                        dyb[r * w + c] = yb[(n + r) * w + c];
                    }
                    for k in 0..n {
                        let mut acc = 0.0;
                        for l in 0..n {
                            let mut ckl = 0.0;
                            for i in 0..n {
                                for j in 0..n {
                                    ckl += dgamma[((k * n + i) * n + j) * n + l] * vs[i] * vs[j];
                                }
                            }
                            acc -= ckl * yb[l * w + c];
                        }
                        for j in 0..n {
                            let mut dkj = 0.0;
                            for i in 0..n {
                                dkj += 2.0 * gamma[(k * n + i) * n + j] * vs[i];
                            }
                            acc -= dkj * yb[(n + j) * w + c];
                        }
                        dyb[(n + k) * w + c] = acc;
                    }
                }
            }
            let mut off = 2 * n + var_len;
            if want_line {
                if let Some(p) = model.potential(qs) {
                    pot.copy_from_slice(&p);
                }
                ds[off] = pot.iter().zip(vs).map(|(a, b)| a * b).sum();
                off += 1;
            }
            if want_rad {
                model.faraday(qs, &mut far);
                let yb = &s[2 * n..2 * n + var_len];
                let w = 2 * n;
                for m in 0..n {
                    let mut acc = 0.0;
                    for j in 0..n {
                        let mut fv = 0.0;
                        for l in 0..n {
                            fv += far[j * n + l] * vs[l];
                        }
                        acc -= yb[j * w + (n + m)] * fv;
                    }
                    ds[off + m] = acc;
                }
            }
        };

        let mut integ = Integrator::new(OdeOpts {
            rtol: self.opts.rtol,
            atol: self.opts.atol,
            max_steps: 100_000,
        });
        let mut mid_state = vec![0.0; dim];
        integ.integrate(rhs, 0.0, 1.0, &mut y, &[0.5], |t, s| {
            if (t - 0.5).abs() < 1e-14 {
                mid_state.copy_from_slice(s);
            }
        })?;

        let take_y = |s: &[f64]| -> Option<Mat> {
            want_var.then(|| Mat::from_flat(2 * n, 2 * n, s[2 * n..2 * n + var_len].to_vec()))
        };
        let flow = GeoFlow {
            n,
            q0: q.to_vec(),
            v0: v.to_vec(),
            q_mid: mid_state[..n].to_vec(),
            v_mid: mid_state[n..2 * n].to_vec(),
            q1: y[..n].to_vec(),
            v1: y[n..2 * n].to_vec(),
            y_mid: take_y(&mid_state),
            y1: take_y(&y),
            line: if want_line { y[2 * n + var_len] } else { 0.0 },
            rad: if want_rad {
                y[2 * n + var_len + line_len..].to_vec()
            } else {
                Vec::new()
            },
        };
        if !self.model.chart_contains(&flow.q_mid) || !self.model.chart_contains(&flow.q1) {
            return Err(GeomError::ChartExit);
        }
        Ok(flow)
    }

    /// `exp_q(v)`.
    pub fn exp(&self, q: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        Ok(self.flow(q, v, FlowFlags::plain())?.q1)
    }

    /// Geodesic logarithm `V_q(a)`: shooting with a Newton iteration on the
    /// chart velocity, Jacobi frame as the Newton matrix, chart chord as the
    /// initial guess, with a short continuation ladder as fallback.
    pub fn log(&self, q: &[f64], a: &[f64], flags: FlowFlags) -> Result<LogData> {
        let n = self.n();
        let chord: Vec<f64> = a.iter().zip(q).map(|(ai, qi)| ai - qi).collect();
        match self.newton_log(q, a, &chord, flags) {
            Ok(d) => Ok(d),
            Err(first_err) => {
                // Continuation along the chart chord.
                let mut v = vec![0.0; n];
                let stages = [0.25, 0.5, 0.75, 1.0];
                let mut prev_s = 0.0;
                for &s in &stages {
                    let target: Vec<f64> =
                        q.iter().zip(a).map(|(qi, ai)| qi + s * (ai - qi)).collect();
                    let guess: Vec<f64> = if prev_s == 0.0 {
                        target.iter().zip(q).map(|(t, qi)| t - qi).collect()
                    } else {
                        v.iter().map(|vi| vi * s / prev_s).collect()
                    };
                    match self.newton_log(q, &target, &guess, flags) {
                        Ok(d) => {
                            v = d.v.clone();
                            prev_s = s;
                            if (s - 1.0).abs() < 1e-15 {
                                return Ok(d);
                            }
                        }
                        Err(_) => return Err(first_err),
                    }
                }
                Err(first_err)
            }
        }
    }

    fn newton_log(&self, q: &[f64], a: &[f64], v0: &[f64], flags: FlowFlags) -> Result<LogData> {
        let scale = 1.0 + a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let tol = self.opts.newton_tol * scale;
        let mut v = v0.to_vec();
        let full = FlowFlags {
            variational: true,
            ..flags
        };
        let mut flow = self.flow(q, &v, full)?;
        let mut res = norm2_diff(&flow.q1, a);
        for it in 0..self.opts.max_newton {
            if res < tol {
                return Ok(LogData {
                    v,
                    flow,
                    iterations: it,
                    residual: res,
                });
            }
            let jac = flow.dexp_v();
            let rhs: Vec<f64> = flow.q1.iter().zip(a).map(|(x, y)| x - y).collect();
            let delta = jac
                .solve(&rhs)
                .map_err(|_| GeomError::SingularJacobian("geodesic shooting"))?;
            // damped update
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..10 {
                let trial: Vec<f64> = v
                    .iter()
                    .zip(&delta)
                    .map(|(vi, di)| vi - lambda * di)
                    .collect();
                match self.flow(q, &trial, full) {
                    Ok(f2) => {
                        let r2 = norm2_diff(&f2.q1, a);
                        if r2 < res || r2 < tol {
                            v = trial;
                            flow = f2;
                            res = r2;
                            accepted = true;
                            break;
                        }
                    }
                    Err(_) => {}
                }
                lambda *= 0.5;
            }
            if !accepted {
                return Err(GeomError::NewtonStall {
                    context: "geodesic shooting",
                    residual: res,
                    iters: it,
                });
            }
        }
        if res < tol {
            Ok(LogData {
                v,
                flow,
                iterations: self.opts.max_newton,
                residual: res,
            })
        } else {
            Err(GeomError::NewtonStall {
                context: "geodesic shooting",
                residual: res,
                iters: self.opts.max_newton,
            })
        }
    }

    /// Geodesic reflection `s_q(a) = exp_q(-V_q(a))`.
    pub fn reflect(&self, q: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        let log = self.log(q, a, FlowFlags::plain())?;
        let neg: Vec<f64> = log.v.iter().map(|x| -x).collect();
        self.exp(q, &neg)
    }

    /// Reflection together with its differential `ds_q(a)`.
    pub fn reflect_with_frame(&self, q: &[f64], a: &[f64]) -> Result<(Vec<f64>, Mat)> {
        let log = self.log(q, a, FlowFlags::plain())?;
        let neg: Vec<f64> = log.v.iter().map(|x| -x).collect();
        let back = self.flow(q, &neg, FlowFlags::var())?;
        let ds = back
            .dexp_v()
            .matmul(&log.flow.dexp_v().inverse()?)
            .scale(-1.0);
        Ok((back.q1, ds))
    }

    /// Geodesic midpoint `a ∨ b`, mid-velocity `a ∧ b` and the Jacobi frames
    /// at the midpoint toward both endpoints. The midpoint is the halfway
    /// state of the connecting geodesic; the frames come from the fundamental
    /// matrix restricted to the half segments.
    pub fn midpoint(&self, a: &[f64], b: &[f64]) -> Result<MidpointData> {
        let n = self.n();
        let log = self.log(a, b, FlowFlags::plain())?;
        let y_mid = log.flow.y_mid.as_ref().expect("variational state");
        let y_end = log.flow.y1.as_ref().unwrap();
        let y_mid_inv = y_mid
            .inverse()
            .map_err(|_| GeomError::SingularJacobian("midpoint frame"))?;
        let frame_a = block_qv(&y_mid_inv, n).scale(-2.0);
        let frame_b = block_qv(&y_end.matmul(&y_mid_inv), n).scale(2.0);
        let velocity: Vec<f64> = log.flow.v_mid.iter().map(|x| -x).collect();
        Ok(MidpointData {
            mid: log.flow.q_mid.clone(),
            velocity,
            frame_a,
            frame_b,
            residual: log.residual,
        })
    }

    /// Midpoint with one Newton polish step on `H(c) = V_c(a) + V_c(b)` and
    /// an explicitly measured reflection residual `‖s_c(a) - b‖`.
    pub fn midpoint_refined(&self, a: &[f64], b: &[f64]) -> Result<MidpointData> {
        let mut md = self.midpoint(a, b)?;
        for _ in 0..2 {
            let la = self.log(&md.mid, a, FlowFlags::plain())?;
            let lb = self.log(&md.mid, b, FlowFlags::plain())?;
            let h: Vec<f64> = la.v.iter().zip(&lb.v).map(|(x, y)| x + y).collect();
            let hn = h.iter().map(|x| x * x).sum::<f64>().sqrt();
            if hn < 0.2 * self.opts.newton_tol {
                break;
            }
            // dH/dc ≈ -2 I near the midpoint
            for (ci, hi) in md.mid.iter_mut().zip(&h) {
                *ci += 0.5 * hi;
            }
        }
        let la = self.log(&md.mid, a, FlowFlags::plain())?;
        let lb = self.log(&md.mid, b, FlowFlags::plain())?;
        md.velocity = la.v.iter().map(|x| 2.0 * x).collect();
        md.frame_a = la.flow.dexp_v();
        md.frame_b = lb.flow.dexp_v();
        let neg: Vec<f64> = la.v.iter().map(|x| -x).collect();
        let refl = self.exp(&md.mid, &neg)?;
        md.residual = norm2_diff(&refl, b);
        Ok(md)
    }

    /// Midpoint amplitude data and the potential line integral for the
    /// convolution cochain `k(a, b)`.
    pub fn pair_data(&self, a: &[f64], b: &[f64]) -> Result<PairData> {
        let n = self.n();
        let log = self.log(a, b, FlowFlags::var_line())?;
        let y_mid = log.flow.y_mid.as_ref().unwrap();
        let y_end = log.flow.y1.as_ref().unwrap();
        let y_mid_inv = y_mid
            .inverse()
            .map_err(|_| GeomError::SingularJacobian("pair midpoint frame"))?;
        let frame_a = block_qv(&y_mid_inv, n).scale(-2.0);
        let frame_b = block_qv(&y_end.matmul(&y_mid_inv), n).scale(2.0);
        let c = &log.flow.q_mid;
        let mu_c = self.model.mu(c);
        let det_a = frame_a.det();
        let det_b = frame_b.det();
        let j_mid = two_pow_neg(n)
            * frame_a
                .inverse()
                .map_err(|_| GeomError::SingularJacobian("pair frame a"))?
                .add(
                    &frame_b
                        .inverse()
                        .map_err(|_| GeomError::SingularJacobian("pair frame b"))?,
                )
                .det()
                .abs();
        let e_a = self.model.mu(a) * det_a.abs() / mu_c;
        let e_b = self.model.mu(b) * det_b.abs() / mu_c;
        Ok(PairData {
            mid: c.clone(),
            velocity: log.flow.v_mid.iter().map(|x| -x).collect(),
            j_mid,
            e_a,
            e_b,
            kappa_amp: (j_mid * e_a * e_b).sqrt(),
            line_ab: log.flow.line,
        })
    }

    /// Jacobian densities at `(q, a)`: `j_q(a)`, `e_q` at both endpoints, the
    /// measure ratio of the reflection and `J_q(a)`.
    pub fn densities(&self, q: &[f64], a: &[f64]) -> Result<DensityPack> {
        let n = self.n();
        let log = self.log(q, a, FlowFlags::plain())?;
        let neg: Vec<f64> = log.v.iter().map(|x| -x).collect();
        let back = self.flow(q, &neg, FlowFlags::var())?;
        let fwd_frame = log.flow.dexp_v();
        let back_frame = back.dexp_v();
        let j = two_pow_neg(n)
            * fwd_frame
                .inverse()
                .map_err(|_| GeomError::SingularJacobian("densities fwd"))?
                .add(
                    &back_frame
                        .inverse()
                        .map_err(|_| GeomError::SingularJacobian("densities back"))?,
                )
                .det()
                .abs();
        let mu_q = self.model.mu(q);
        let e_at_a = self.model.mu(a) * fwd_frame.det().abs() / mu_q;
        let e_at_b = self.model.mu(&back.q1) * back_frame.det().abs() / mu_q;
        let ds = back_frame.matmul(&fwd_frame.inverse()?).scale(-1.0);
        let measure_ratio = self.model.mu(&back.q1) * ds.det().abs() / self.model.mu(a);
        Ok(DensityPack {
            j,
            e_at_a,
            e_at_b,
            measure_ratio,
            big_j: j * measure_ratio,
        })
    }

    /// Radial-gauge magnetic potential `A(q, base) ∈ T_q*M`: the Jacobi-field
    /// average of the Lorentz covector along the geodesic `base → q`. It
    /// satisfies `A(q, base)·V_q(base) = 0` and `d_q A = F`.
    pub fn radial_potential(&self, base: &[f64], q: &[f64]) -> Result<Vec<f64>> {
        let flags = FlowFlags {
            variational: true,
            line_potential: false,
            radial_accum: true,
        };
        let log = self.log(base, q, flags)?;
        let jac = log.flow.dexp_v();
        let jinv = jac
            .inverse()
            .map_err(|_| GeomError::SingularJacobian("radial potential propagator"))?;
        Ok(jinv.transpose().matvec(&log.flow.rad))
    }

    /// Potential line integral along the geodesic `a → b` (needs a model
    /// potential closure).
    pub fn line_integral(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        let log = self.log(a, b, FlowFlags::var_line())?;
        Ok(log.flow.line)
    }
}

fn two_pow_neg(n: usize) -> f64 {
    0.5f64.powi(n as i32)
}

pub(crate) fn norm2_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{builtin_model, FieldKind, ModelKind};
    use crate::oracles::hyperboloid as hyp;
    use approx::assert_relative_eq;

    fn sample(k: usize, lo: f64, hi: f64) -> f64 {
        let t = ((k * 2654435761) % 1000) as f64 / 999.0;
        lo + t * (hi - lo)
    }

    #[test]
    fn euclidean_exp_is_translation() {
        let m = builtin_model(ModelKind::Euclidean(2), FieldKind::Zero).unwrap();
        let eng = GeodesicEngine::new(&m);
        let out = eng.exp(&[0.3, -0.2], &[1.1, 0.7]).unwrap();
        assert_relative_eq!(out[0], 1.4, epsilon = 1e-12);
        assert_relative_eq!(out[1], 0.5, epsilon = 1e-12);
        let zero = eng.exp(&[0.3, -0.2], &[0.0, 0.0]).unwrap();
        assert_relative_eq!(zero[0], 0.3, epsilon = 1e-14);
    }

    #[test]
    fn euclidean_log_reflect_midpoint() {
        let m = builtin_model(ModelKind::Euclidean(2), FieldKind::Zero).unwrap();
        let eng = GeodesicEngine::new(&m);
        let q = [0.5, 0.1];
        let a = [-0.7, 0.9];
        let log = eng.log(&q, &a, FlowFlags::plain()).unwrap();
        assert_relative_eq!(log.v[0], -1.2, epsilon = 1e-10);
        assert_relative_eq!(log.v[1], 0.8, epsilon = 1e-10);
        let r = eng.reflect(&q, &a).unwrap();
        assert_relative_eq!(r[0], 2.0 * q[0] - a[0], epsilon = 1e-10);
        let md = eng.midpoint(&a, &r).unwrap();
        assert_relative_eq!(md.mid[0], q[0], epsilon = 1e-10);
        // a ∧ b = a - b in the flat chart
        assert_relative_eq!(md.velocity[0], a[0] - r[0], epsilon = 1e-9);
        let dp = eng.densities(&q, &a).unwrap();
        assert_relative_eq!(dp.j, 1.0, epsilon = 1e-10);
        assert_relative_eq!(dp.e_at_a, 1.0, epsilon = 1e-10);
        assert_relative_eq!(dp.big_j, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn hyperboloid_exp_matches_ambient_closed_form() {
        let m = builtin_model(ModelKind::HyperboloidH2, FieldKind::Zero).unwrap();
        let eng = GeodesicEngine::new(&m);
        // unit velocity at the chart origin
        let out = eng.exp(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_relative_eq!(out[0], 1.0f64.sinh(), epsilon = 1e-9);
        assert_relative_eq!(out[1], 0.0, epsilon = 1e-12);
        for k in 0..25 {
            let q = [sample(3 * k + 1, -1.5, 1.5), sample(3 * k + 2, -1.5, 1.5)];
            let v = [sample(3 * k + 7, -1.2, 1.2), sample(3 * k + 11, -1.2, 1.2)];
            let got = eng.exp(&q, &v).unwrap();
            let want = hyp::exp_chart(&q, &v);
            assert_relative_eq!(got[0], want[0], epsilon = 1e-8, max_relative = 1e-8);
            assert_relative_eq!(got[1], want[1], epsilon = 1e-8, max_relative = 1e-8);
        }
    }

    #[test]
    fn hyperboloid_log_distance_and_roundtrip() {
        let m = builtin_model(ModelKind::HyperboloidH2, FieldKind::Zero).unwrap();
        let eng = GeodesicEngine::new(&m);
        let t = 1.3f64;
        let a = [t.sinh(), 0.0];
        let log = eng.log(&[0.0, 0.0], &a, FlowFlags::plain()).unwrap();
        let g = m.metric(&[0.0, 0.0]).unwrap();
        let norm = (g[0] * log.v[0] * log.v[0]
            + 2.0 * g[1] * log.v[0] * log.v[1]
            + g[3] * log.v[1] * log.v[1])
            .sqrt();
        assert_relative_eq!(norm, t, epsilon = 1e-9);
        // exp/log round trips on scattered pairs
        for k in 0..50 {
            let q = [sample(5 * k + 1, -1.5, 1.5), sample(5 * k + 2, -1.5, 1.5)];
            let v = [sample(5 * k + 3, -1.0, 1.0), sample(5 * k + 4, -1.0, 1.0)];
            let a = eng.exp(&q, &v).unwrap();
            let back = eng.log(&q, &a, FlowFlags::plain()).unwrap();
            assert!(norm2_diff(&back.v, &v) < 1e-8, "roundtrip {k}");
            let fwd = eng.exp(&q, &back.v).unwrap();
            assert!(norm2_diff(&fwd, &a) < 1e-8);
        }
    }

    #[test]
    fn reflection_involution_and_fixed_point() {
        for model in [
            builtin_model(ModelKind::HyperboloidH2, FieldKind::Zero).unwrap(),
            builtin_model(ModelKind::DeformedR2 { eps: 0.15 }, FieldKind::Zero).unwrap(),
        ] {
            let eng = GeodesicEngine::new(&model);
            for k in 0..20 {
                let q = [sample(7 * k + 1, -1.0, 1.0), sample(7 * k + 2, -1.0, 1.0)];
                let a = [sample(7 * k + 3, -1.0, 1.0), sample(7 * k + 4, -1.0, 1.0)];
                let r = eng.reflect(&q, &a).unwrap();
                let rr = eng.reflect(&q, &r).unwrap();
                assert!(norm2_diff(&rr, &a) < 1e-8, "involution");
            }
            let q = [0.4, -0.3];
            let fixed = eng.reflect(&q, &q).unwrap();
            assert!(norm2_diff(&fixed, &q) < 1e-10);
        }
    }

    #[test]
    fn hyperboloid_midpoint_matches_ambient_normalization() {
        let m = builtin_model(ModelKind::HyperboloidH2, FieldKind::Zero).unwrap();
        let eng = GeodesicEngine::new(&m);
        let t = 1.1f64;
        let a = [0.0, 0.0];
        let b = [t.sinh(), 0.0];
        let md = eng.midpoint_refined(&a, &b).unwrap();
        assert_relative_eq!(md.mid[0], (t / 2.0).sinh(), epsilon = 1e-9);
        assert!(md.residual < 1e-9);
        // midpoint of equal points
        let md = eng.midpoint(&a, &a).unwrap();
        assert!(norm2_diff(&md.mid, &a) < 1e-12);
        assert!(md.velocity.iter().all(|x| x.abs() < 1e-12));
        // scattered pairs: s_{a∨b}(a) = b residual
        for k in 0..20 {
            let a = [sample(9 * k + 1, -1.2, 1.2), sample(9 * k + 2, -1.2, 1.2)];
            let b = [sample(9 * k + 3, -1.2, 1.2), sample(9 * k + 4, -1.2, 1.2)];
            let md = eng.midpoint_refined(&a, &b).unwrap();
            assert!(md.residual < 1e-9, "midpoint residual {}", md.residual);
            let want = hyp::midpoint_chart(&a, &b);
            assert!(norm2_diff(&md.mid, &want) < 1e-8);
        }
    }

    #[test]
    fn density_symmetry_and_h2_closed_form() {
        let m = builtin_model(ModelKind::HyperboloidH2, FieldKind::Zero).unwrap();
        let eng = GeodesicEngine::new(&m);
        for k in 0..15 {
            let q = [sample(11 * k + 1, -1.0, 1.0), sample(11 * k + 2, -1.0, 1.0)];
            let a = [sample(11 * k + 3, -1.0, 1.0), sample(11 * k + 4, -1.0, 1.0)];
            let d1 = eng.densities(&q, &a).unwrap();
            let b = eng.reflect(&q, &a).unwrap();
            let d2 = eng.densities(&q, &b).unwrap();
            assert_relative_eq!(d1.j, d2.j, epsilon = 1e-8, max_relative = 1e-8);
            assert_relative_eq!(d1.big_j, d1.j * d1.measure_ratio, epsilon = 1e-12);
            // e_q(a) = sinh(r)/r on the hyperbolic plane
            let r = hyp::dist_chart(&q, &a);
            assert_relative_eq!(d1.e_at_a, r.sinh() / r, epsilon = 1e-7, max_relative = 1e-7);
        }
    }

    #[test]
    fn chart_exit_is_detected() {
        let m = builtin_model(ModelKind::Euclidean(2), FieldKind::Zero)
            .unwrap()
            .with_chart_box(vec![-1.0, -1.0], vec![1.0, 1.0]);
        let eng = GeodesicEngine::new(&m);
        assert!(matches!(
            eng.exp(&[0.5, 0.0], &[2.0, 0.0]),
            Err(GeomError::ChartExit)
        ));
    }
}
