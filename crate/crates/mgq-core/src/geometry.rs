//! Chart-based manifold models and base-manifold tensor calculus.
//!
//! A model packages the chart dimension, the Christoffel field of a torsion
//! free affine connection, a positive measure density, a closed magnetic
//! 2-form and a base point. Flat index layouts (row-major):
//!
//! * `gamma[(k*n+i)*n+j]        = Γ^k_{ij}` (symmetric in `i, j`)
//! * `dgamma[((k*n+i)*n+j)*n+l] = ∂_l Γ^k_{ij}`
//! * `faraday[j*n+k]            = F_{jk}` (skew)
//! * `dfaraday[(j*n+k)*n+l]     = ∂_l F_{jk}`
//! * `riemann[((s*n+i)*n+j)*n+k] = R^s_{ijk}`, skew in the last pair, with
//!   `R^s_{ijk} = ∂_j Γ^s_{ik} - ∂_k Γ^s_{ij} + Γ^s_{jm}Γ^m_{ik} - Γ^s_{km}Γ^m_{ij}`.
//!
//! Magnetic sign conventions: potentials satisfy `F_{jk} = ∂_j A_k - ∂_k A_j`,
//! and fluxes are line integrals of `A` around oriented geodesic boundaries.

use std::fmt;
use std::sync::Arc;

use crate::error::{GeomError, Result};

type FieldClosure = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
type ScalarClosure = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Cube root of machine epsilon: optimal central-difference step scale.
pub(crate) const FD_EPS: f64 = 6.055454452393343e-6;

pub(crate) fn fd_step(q: &[f64]) -> f64 {
    let norm = q.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    FD_EPS * norm.max(1.0)
}

/// A point of `T*M` in chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Self {
        assert_eq!(q.len(), p.len());
        PhasePoint { q, p }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// Flattened (q, p) coordinates.
    pub fn coords(&self) -> Vec<f64> {
        let mut c = self.q.clone();
        c.extend_from_slice(&self.p);
        c
    }

    pub fn from_coords(c: &[f64]) -> Self {
        let n = c.len() / 2;
        PhasePoint {
            q: c[..n].to_vec(),
            p: c[n..].to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Euclidean(usize),
    HyperboloidH2,
    DeformedR2 { eps: f64 },
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldKind {
    Zero,
    Constant(f64),
    AreaForm(f64),
    Quadratic([f64; 6]),
    Custom,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Euclidean(n) => write!(f, "euclidean({n})"),
            ModelKind::HyperboloidH2 => write!(f, "hyperboloid_h2"),
            ModelKind::DeformedR2 { eps } => write!(f, "deformed_r2(eps={eps})"),
            ModelKind::Custom => write!(f, "custom"),
        }
    }
}

#[derive(Clone)]
pub struct ManifoldModel {
    dim: usize,
    pub kind: ModelKind,
    pub field: FieldKind,
    base_point: Vec<f64>,
    chart_box: Option<(Vec<f64>, Vec<f64>)>,
    /// Box from which random test points are drawn.
    pub sample_box: (Vec<f64>, Vec<f64>),
    christoffel: FieldClosure,
    dchristoffel: Option<FieldClosure>,
    measure: ScalarClosure,
    dmeasure: Option<FieldClosure>,
    faraday: FieldClosure,
    dfaraday: Option<FieldClosure>,
    potential: Option<FieldClosure>,
    metric: Option<FieldClosure>,
}

impl fmt::Debug for ManifoldModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ManifoldModel({}, field {:?})", self.kind, self.field)
    }
}

impl ManifoldModel {
    pub fn new(
        dim: usize,
        christoffel: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        measure: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        faraday: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        base_point: Vec<f64>,
    ) -> Self {
        assert_eq!(base_point.len(), dim);
        ManifoldModel {
            dim,
            kind: ModelKind::Custom,
            field: FieldKind::Custom,
            base_point,
            chart_box: None,
            sample_box: (vec![-2.0; dim], vec![2.0; dim]),
            christoffel: Arc::new(christoffel),
            dchristoffel: None,
            measure: Arc::new(measure),
            dmeasure: None,
            faraday: Arc::new(faraday),
            dfaraday: None,
            potential: None,
            metric: None,
        }
    }

    pub fn with_dchristoffel(
        mut self,
        f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        self.dchristoffel = Some(Arc::new(f));
        self
    }

    pub fn with_dfaraday(mut self, f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.dfaraday = Some(Arc::new(f));
        self
    }

    pub fn with_potential(
        mut self,
        f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        self.potential = Some(Arc::new(f));
        self
    }

    pub fn with_metric(mut self, f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.metric = Some(Arc::new(f));
        self
    }

    pub fn with_dmeasure(mut self, f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.dmeasure = Some(Arc::new(f));
        self
    }

    pub fn with_chart_box(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        self.chart_box = Some((lo, hi));
        self
    }

    pub fn with_base_point(mut self, o: Vec<f64>) -> Self {
        assert_eq!(o.len(), self.dim);
        self.base_point = o;
        self
    }

    pub fn with_sample_box(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        self.sample_box = (lo, hi);
        self
    }

    /// Replace the magnetic field data (2-form, derivative, potential).
    pub fn with_field(
        mut self,
        faraday: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        dfaraday: Option<FieldClosure>,
        potential: Option<FieldClosure>,
    ) -> Self {
        self.faraday = Arc::new(faraday);
        self.dfaraday = dfaraday;
        self.potential = potential;
        self.field = FieldKind::Custom;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn base_point(&self) -> &[f64] {
        &self.base_point
    }

    pub fn chart_contains(&self, q: &[f64]) -> bool {
        if !q.iter().all(|x| x.is_finite()) {
            return false;
        }
        match &self.chart_box {
            None => true,
            Some((lo, hi)) => q
                .iter()
                .zip(lo.iter().zip(hi.iter()))
                .all(|(x, (l, h))| *x >= *l && *x <= *h),
        }
    }

    pub fn gamma(&self, q: &[f64], out: &mut [f64]) {
        (self.christoffel)(q, out)
    }

    pub fn gamma_vec(&self, q: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n * n * n];
        self.gamma(q, &mut out);
        out
    }

    /// `∂_l Γ^k_{ij}`, analytic when available, otherwise central differences.
    pub fn dgamma(&self, q: &[f64]) -> Vec<f64> {
        let n = self.dim;
        if let Some(f) = &self.dchristoffel {
            let mut out = vec![0.0; n * n * n * n];
            f(q, &mut out);
            return out;
        }
        central_diff_field(q, n * n * n, |x, o| self.gamma(x, o))
    }

    /// `∂_m ∂_l Γ^k_{ij}` by differencing `dgamma`; layout `[dgamma-index]*n + m`.
    pub fn d2gamma(&self, q: &[f64]) -> Vec<f64> {
        let n = self.dim;
        central_diff_field(q, n * n * n * n, |x, o| {
            o.copy_from_slice(&self.dgamma(x));
        })
    }

    pub fn mu(&self, q: &[f64]) -> f64 {
        (self.measure)(q)
    }

    pub fn dmu(&self, q: &[f64]) -> Vec<f64> {
        if let Some(f) = &self.dmeasure {
            let mut out = vec![0.0; self.dim];
            f(q, &mut out);
            return out;
        }
        central_diff_field(q, 1, |x, o| o[0] = self.mu(x))
    }

    pub fn faraday(&self, q: &[f64], out: &mut [f64]) {
        (self.faraday)(q, out)
    }

    pub fn faraday_vec(&self, q: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        self.faraday(q, &mut out);
        out
    }

    pub fn dfaraday(&self, q: &[f64]) -> Vec<f64> {
        let n = self.dim;
        if let Some(f) = &self.dfaraday {
            let mut out = vec![0.0; n * n * n];
            f(q, &mut out);
            return out;
        }
        central_diff_field(q, n * n, |x, o| self.faraday(x, o))
    }

    pub fn d2faraday(&self, q: &[f64]) -> Vec<f64> {
        let n = self.dim;
        central_diff_field(q, n * n * n, |x, o| o.copy_from_slice(&self.dfaraday(x)))
    }

    /// Analytic primitive `A` with `F = dA`, when the field carries one.
    pub fn potential(&self, q: &[f64]) -> Option<Vec<f64>> {
        self.potential.as_ref().map(|f| {
            let mut out = vec![0.0; self.dim];
            f(q, &mut out);
            out
        })
    }

    pub fn has_potential(&self) -> bool {
        self.potential.is_some()
    }

    pub fn metric(&self, q: &[f64]) -> Option<Vec<f64>> {
        self.metric.as_ref().map(|f| {
            let mut out = vec![0.0; self.dim * self.dim];
            f(q, &mut out);
            out
        })
    }

    pub fn has_metric(&self) -> bool {
        self.metric.is_some()
    }

    pub fn metric_inv(&self, q: &[f64]) -> Option<Vec<f64>> {
        let g = self.metric(q)?;
        let m = crate::linalg::Mat::from_flat(self.dim, self.dim, g);
        Some(m.inverse().ok()?.data)
    }

    /// Type-invariant residuals at one chart point: torsion (Γ asymmetry),
    /// F skewness, dF closedness (cyclic sum) and measure positivity.
    pub fn invariant_residuals(&self, q: &[f64]) -> Result<InvariantReport> {
        if !self.chart_contains(q) {
            return Err(GeomError::ChartExit);
        }
        let n = self.dim;
        let g = self.gamma_vec(q);
        let mut torsion = 0.0f64;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    torsion = torsion.max((g[(k * n + i) * n + j] - g[(k * n + j) * n + i]).abs());
                }
            }
        }
        let f = self.faraday_vec(q);
        let mut skew = 0.0f64;
        for j in 0..n {
            for k in 0..n {
                skew = skew.max((f[j * n + k] + f[k * n + j]).abs());
            }
        }
        let df = self.dfaraday(q);
        let mut closed = 0.0f64;
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let cyc = df[(k * n + l) * n + j] + df[(l * n + j) * n + k]
                        + df[(j * n + k) * n + l];
                    closed = closed.max(cyc.abs());
                }
            }
        }
        Ok(InvariantReport {
            torsion,
            skew,
            closedness: closed,
            measure: self.mu(q),
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct InvariantReport {
    pub torsion: f64,
    pub skew: f64,
    pub closedness: f64,
    pub measure: f64,
}

pub(crate) fn central_diff_field(
    q: &[f64],
    out_len: usize,
    eval: impl Fn(&[f64], &mut [f64]),
) -> Vec<f64> {
    let n = q.len();
    let h = fd_step(q);
    let mut out = vec![0.0; out_len * n];
    let mut plus = vec![0.0; out_len];
    let mut minus = vec![0.0; out_len];
    let mut qp = q.to_vec();
    for l in 0..n {
        qp[l] = q[l] + h;
        eval(&qp, &mut plus);
        qp[l] = q[l] - h;
        eval(&qp, &mut minus);
        qp[l] = q[l];
        for idx in 0..out_len {
            out[idx * n + l] = (plus[idx] - minus[idx]) / (2.0 * h);
        }
    }
    out
}

/// Base-manifold curvature data at a point.
#[derive(Debug, Clone)]
pub struct BaseCurvature {
    pub dim: usize,
    /// `R^s_{ijk}`, flat layout as documented in the module header.
    pub riemann: Vec<f64>,
    /// Symmetric part of the Ricci tensor, `½ (R^k_{lks} + R^k_{skl})`.
    pub ricci_sym: Vec<f64>,
    /// `∇_l F_{jk}`, layout `[(j*n+k)*n+l]`.
    pub nabla_f: Vec<f64>,
    /// Coupling tensor entering the phase connection block `Γ^{p_j}_{qq}`:
    /// `coupling[j][k][l] = (1/3)(∇_k F_{lj} + ∇_l F_{kj})`, symmetric in `k, l`.
    pub coupling: Vec<f64>,
}

impl BaseCurvature {
    pub fn riemann_at(&self, s: usize, i: usize, j: usize, k: usize) -> f64 {
        let n = self.dim;
        self.riemann[((s * n + i) * n + j) * n + k]
    }

    pub fn nabla_f_at(&self, j: usize, k: usize, l: usize) -> f64 {
        let n = self.dim;
        self.nabla_f[(j * n + k) * n + l]
    }

    pub fn coupling_at(&self, j: usize, k: usize, l: usize) -> f64 {
        let n = self.dim;
        self.coupling[(j * n + k) * n + l]
    }
}

/// Curvature, symmetrized Ricci, covariant derivative of `F` and the coupling
/// tensor at `q`.
pub fn curvature_at(model: &ManifoldModel, q: &[f64]) -> Result<BaseCurvature> {
    if !model.chart_contains(q) {
        return Err(GeomError::ChartExit);
    }
    let n = model.dim();
    let g = model.gamma_vec(q);
    let dg = model.dgamma(q);
    if !dg.iter().all(|x| x.is_finite()) {
        return Err(GeomError::Invalid("non-finite christoffel derivative".into()));
    }
    let gam = |k: usize, i: usize, j: usize| g[(k * n + i) * n + j];
    let dgam = |k: usize, i: usize, j: usize, l: usize| dg[((k * n + i) * n + j) * n + l];
    let mut riemann = vec![0.0; n * n * n * n];
    for s in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut r = dgam(s, i, k, j) - dgam(s, i, j, k);
                    for m in 0..n {
                        r += gam(s, j, m) * gam(m, i, k) - gam(s, k, m) * gam(m, i, j);
                    }
                    riemann[((s * n + i) * n + j) * n + k] = r;
                }
            }
        }
    }
    let rie = |s: usize, i: usize, j: usize, k: usize| riemann[((s * n + i) * n + j) * n + k];
    let mut ricci_sym = vec![0.0; n * n];
    for l in 0..n {
        for s in 0..n {
            let mut v = 0.0;
            for k in 0..n {
                v += 0.5 * (rie(k, l, k, s) + rie(k, s, k, l));
            }
            ricci_sym[l * n + s] = v;
        }
    }
    let f = model.faraday_vec(q);
    let df = model.dfaraday(q);
    let mut nabla_f = vec![0.0; n * n * n];
    for j in 0..n {
        for k in 0..n {
            for l in 0..n {
                let mut v = df[(j * n + k) * n + l];
                for m in 0..n {
                    v -= gam(m, l, j) * f[m * n + k] + gam(m, l, k) * f[j * n + m];
                }
                nabla_f[(j * n + k) * n + l] = v;
            }
        }
    }
    let nf = |j: usize, k: usize, l: usize| nabla_f[(j * n + k) * n + l];
    let mut coupling = vec![0.0; n * n * n];
    for j in 0..n {
        for k in 0..n {
            for l in 0..n {
                coupling[(j * n + k) * n + l] = (nf(l, j, k) + nf(k, j, l)) / 3.0;
            }
        }
    }
    Ok(BaseCurvature {
        dim: n,
        riemann,
        ricci_sym,
        nabla_f,
        coupling,
    })
}

/// Residuals of the duality and cyclic identities tying `∇F` to the coupling
/// tensor.
#[derive(Debug, Clone, Copy)]
pub struct CouplingReport {
    pub duality: f64,
    pub inverse_duality: f64,
    pub cyclic_coupling: f64,
    pub cyclic_nabla_f: f64,
}

pub fn coupling_identities(bc: &BaseCurvature) -> CouplingReport {
    let n = bc.dim;
    let mut duality = 0.0f64;
    let mut inverse = 0.0f64;
    let mut cyc_c = 0.0f64;
    let mut cyc_nf = 0.0f64;
    for j in 0..n {
        for k in 0..n {
            for l in 0..n {
                // coupling_{jkl} = -(1/3)(F_[jk]l + F_[jl]k)
                let d = bc.coupling_at(j, k, l)
                    + (bc.nabla_f_at(j, k, l) + bc.nabla_f_at(j, l, k)) / 3.0;
                duality = duality.max(d.abs());
                // F_[jk]l = coupling_{kjl} - coupling_{jkl}
                let inv =
                    bc.nabla_f_at(j, k, l) - (bc.coupling_at(k, j, l) - bc.coupling_at(j, k, l));
                inverse = inverse.max(inv.abs());
                let cc = bc.coupling_at(j, k, l) + bc.coupling_at(k, l, j) + bc.coupling_at(l, j, k);
                cyc_c = cyc_c.max(cc.abs());
                let cn = bc.nabla_f_at(j, k, l) + bc.nabla_f_at(k, l, j) + bc.nabla_f_at(l, j, k);
                cyc_nf = cyc_nf.max(cn.abs());
            }
        }
    }
    CouplingReport {
        duality,
        inverse_duality: inverse,
        cyclic_coupling: cyc_c,
        cyclic_nabla_f: cyc_nf,
    }
}

/// Construct one of the built-in models with the requested magnetic field.
pub fn builtin_model(kind: ModelKind, field: FieldKind) -> Result<ManifoldModel> {
    let model = match kind {
        ModelKind::Euclidean(n) => {
            if n == 0 || n > 4 {
                return Err(GeomError::InvalidModel(format!(
                    "euclidean dimension {n} out of supported range 1..=4"
                )));
            }
            ManifoldModel::new(
                n,
                |_q, out| out.iter_mut().for_each(|x| *x = 0.0),
                |_q| 1.0,
                |_q, out| out.iter_mut().for_each(|x| *x = 0.0),
                vec![0.0; n],
            )
            .with_dchristoffel(|_q, out| out.iter_mut().for_each(|x| *x = 0.0))
            .with_dmeasure(|_q, out| out.iter_mut().for_each(|x| *x = 0.0))
            .with_metric(move |_q, out| {
                out.iter_mut().for_each(|x| *x = 0.0);
                for i in 0..n {
                    out[i * n + i] = 1.0;
                }
            })
        }
        ModelKind::HyperboloidH2 => hyperboloid_model(),
        ModelKind::DeformedR2 { eps } => {
            if !(0.0..0.5).contains(&eps.abs()) {
                return Err(GeomError::InvalidModel(format!(
                    "deformed_r2 eps {eps} outside (-0.5, 0.5)"
                )));
            }
            deformed_model(eps)
        }
        ModelKind::Custom => {
            return Err(GeomError::InvalidModel(
                "custom models are built programmatically".into(),
            ))
        }
    };
    let mut model = model;
    model.kind = kind.clone();
    attach_field(&mut model, field, &kind)?;
    Ok(model)
}

fn hyperboloid_model() -> ManifoldModel {
    // Graph chart on the upper sheet q3 = sqrt(1 + |q|^2) of the unit
    // hyperboloid; curvature -1, mu = 1/sqrt(1 + |q|^2).
    let g_at = |q: &[f64], i: usize, j: usize| {
        let w2 = 1.0 + q[0] * q[0] + q[1] * q[1];
        (if i == j { 1.0 } else { 0.0 }) - q[i] * q[j] / w2
    };
    ManifoldModel::new(
        2,
        move |q, out| {
            for k in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        out[(k * 2 + i) * 2 + j] = -q[k] * g_at(q, i, j);
                    }
                }
            }
        },
        |q| 1.0 / (1.0 + q[0] * q[0] + q[1] * q[1]).sqrt(),
        |_q, out| out.iter_mut().for_each(|x| *x = 0.0),
        vec![0.0, 0.0],
    )
    .with_dchristoffel(move |q, out| {
        let w2 = 1.0 + q[0] * q[0] + q[1] * q[1];
        let dg = |i: usize, j: usize, l: usize| {
            let del = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
            -(del(i, l) * q[j] + del(j, l) * q[i]) / w2 + 2.0 * q[i] * q[j] * q[l] / (w2 * w2)
        };
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    for l in 0..2 {
                        let del = if k == l { 1.0 } else { 0.0 };
                        out[((k * 2 + i) * 2 + j) * 2 + l] = -del * g_at(q, i, j) - q[k] * dg(i, j, l);
                    }
                }
            }
        }
    })
    .with_dmeasure(|q, out| {
        let w2 = 1.0 + q[0] * q[0] + q[1] * q[1];
        let w3 = w2.powf(1.5);
        out[0] = -q[0] / w3;
        out[1] = -q[1] / w3;
    })
    .with_metric(move |q, out| {
        for i in 0..2 {
            for j in 0..2 {
                out[i * 2 + j] = g_at(q, i, j);
            }
        }
    })
}

fn deformed_model(eps: f64) -> ManifoldModel {
    // Conformal deformation g = e^{2 phi} delta with phi = eps exp(-|q|^2/2).
    let phi = move |q: &[f64]| eps * (-0.5 * (q[0] * q[0] + q[1] * q[1])).exp();
    let dphi = move |q: &[f64], i: usize| -q[i] * phi(q);
    let d2phi = move |q: &[f64], i: usize, l: usize| {
        let del = if i == l { 1.0 } else { 0.0 };
        (-del + q[i] * q[l]) * phi(q)
    };
    ManifoldModel::new(
        2,
        move |q, out| {
            for k in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        let del = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                        out[(k * 2 + i) * 2 + j] =
                            del(i, k) * dphi(q, j) + del(j, k) * dphi(q, i) - del(i, j) * dphi(q, k);
                    }
                }
            }
        },
        move |q| (2.0 * phi(q)).exp(),
        |_q, out| out.iter_mut().for_each(|x| *x = 0.0),
        vec![0.0, 0.0],
    )
    .with_dchristoffel(move |q, out| {
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    for l in 0..2 {
                        let del = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                        out[((k * 2 + i) * 2 + j) * 2 + l] = del(i, k) * d2phi(q, j, l)
                            + del(j, k) * d2phi(q, i, l)
                            - del(i, j) * d2phi(q, k, l);
                    }
                }
            }
        }
    })
    .with_dmeasure(move |q, out| {
        let mu = (2.0 * phi(q)).exp();
        out[0] = 2.0 * dphi(q, 0) * mu;
        out[1] = 2.0 * dphi(q, 1) * mu;
    })
    .with_metric(move |q, out| {
        let e = (2.0 * phi(q)).exp();
        out[0] = e;
        out[1] = 0.0;
        out[2] = 0.0;
        out[3] = e;
    })
}

fn attach_field(model: &mut ManifoldModel, field: FieldKind, kind: &ModelKind) -> Result<()> {
    let n = model.dim();
    match field {
        FieldKind::Zero => {
            model.field = FieldKind::Zero;
            model.dfaraday = Some(Arc::new(|_q: &[f64], out: &mut [f64]| {
                out.iter_mut().for_each(|x| *x = 0.0)
            }));
            model.potential = Some(Arc::new(move |_q: &[f64], out: &mut [f64]| {
                out.iter_mut().for_each(|x| *x = 0.0)
            }));
        }
        FieldKind::Constant(b) => {
            if n < 2 {
                return Err(GeomError::InvalidModel(
                    "constant field needs dimension >= 2".into(),
                ));
            }
            model.field = FieldKind::Constant(b);
            model.faraday = Arc::new(move |_q: &[f64], out: &mut [f64]| {
                out.iter_mut().for_each(|x| *x = 0.0);
                out[1] = b; // F_{12}
                out[n] = -b; // F_{21}
            });
            model.dfaraday = Some(Arc::new(|_q: &[f64], out: &mut [f64]| {
                out.iter_mut().for_each(|x| *x = 0.0)
            }));
            // symmetric gauge A_k = (1/2) q_m F_{mk}
            model.potential = Some(Arc::new(move |q: &[f64], out: &mut [f64]| {
                out.iter_mut().for_each(|x| *x = 0.0);
                out[0] = -0.5 * b * q[1];
                out[1] = 0.5 * b * q[0];
            }));
        }
        FieldKind::AreaForm(b) => {
            match kind {
                ModelKind::HyperboloidH2 => {
                    model.faraday = Arc::new(move |q: &[f64], out: &mut [f64]| {
                        let f = b / (1.0 + q[0] * q[0] + q[1] * q[1]).sqrt();
                        out[0] = 0.0;
                        out[1] = f;
                        out[2] = -f;
                        out[3] = 0.0;
                    });
                    model.dfaraday = Some(Arc::new(move |q: &[f64], out: &mut [f64]| {
                        let w2 = 1.0 + q[0] * q[0] + q[1] * q[1];
                        let w3 = w2.powf(1.5);
                        for l in 0..2 {
                            let d = -b * q[l] / w3;
                            out[(0 * 2 + 1) * 2 + l] = d;
                            out[(1 * 2 + 0) * 2 + l] = -d;
                            out[(0 * 2 + 0) * 2 + l] = 0.0;
                            out[(1 * 2 + 1) * 2 + l] = 0.0;
                        }
                    }));
                    // A = (0, b asinh(q1 / sqrt(1 + q2^2))) satisfies dA = F.
                    model.potential = Some(Arc::new(move |q: &[f64], out: &mut [f64]| {
                        out[0] = 0.0;
                        out[1] = b * (q[0] / (1.0 + q[1] * q[1]).sqrt()).asinh();
                    }));
                }
                ModelKind::DeformedR2 { eps } => {
                    let eps = *eps;
                    let dens = move |q: &[f64]| {
                        (2.0 * eps * (-0.5 * (q[0] * q[0] + q[1] * q[1])).exp()).exp()
                    };
                    model.faraday = Arc::new(move |q: &[f64], out: &mut [f64]| {
                        let f = b * dens(q);
                        out[0] = 0.0;
                        out[1] = f;
                        out[2] = -f;
                        out[3] = 0.0;
                    });
                    // A = (0, P) with P = b * int_0^{q1} dens(t, q2) dt via
                    // composite Gauss-Legendre (dens is analytic and cheap).
                    model.potential = Some(Arc::new(move |q: &[f64], out: &mut [f64]| {
                        let (x, w) = crate::quad::gauss_legendre_on(24, 0.0, q[0]);
                        let p: f64 = x
                            .iter()
                            .zip(&w)
                            .map(|(t, wi)| wi * dens(&[*t, q[1]]))
                            .sum();
                        out[0] = 0.0;
                        out[1] = b * p;
                    }));
                    model.dfaraday = None; // finite differences of the closed form
                }
                _ => {
                    return Err(GeomError::InvalidModel(
                        "area_form field requires hyperboloid_h2 or deformed_r2".into(),
                    ))
                }
            }
            model.field = FieldKind::AreaForm(b);
        }
        FieldKind::Quadratic(c) => {
            if n != 2 {
                return Err(GeomError::InvalidModel(
                    "quadratic field requires a 2-d chart".into(),
                ));
            }
            model.field = FieldKind::Quadratic(c);
            let f12 = move |q: &[f64]| {
                c[0] + c[1] * q[0]
                    + c[2] * q[1]
                    + c[3] * q[0] * q[0]
                    + c[4] * q[0] * q[1]
                    + c[5] * q[1] * q[1]
            };
            model.faraday = Arc::new(move |q: &[f64], out: &mut [f64]| {
                let f = f12(q);
                out[0] = 0.0;
                out[1] = f;
                out[2] = -f;
                out[3] = 0.0;
            });
            model.dfaraday = Some(Arc::new(move |q: &[f64], out: &mut [f64]| {
                let d1 = c[1] + 2.0 * c[3] * q[0] + c[4] * q[1];
                let d2 = c[2] + c[4] * q[0] + 2.0 * c[5] * q[1];
                out[(0 * 2 + 1) * 2 + 0] = d1;
                out[(0 * 2 + 1) * 2 + 1] = d2;
                out[(1 * 2 + 0) * 2 + 0] = -d1;
                out[(1 * 2 + 0) * 2 + 1] = -d2;
                out[(0 * 2 + 0) * 2 + 0] = 0.0;
                out[(0 * 2 + 0) * 2 + 1] = 0.0;
                out[(1 * 2 + 1) * 2 + 0] = 0.0;
                out[(1 * 2 + 1) * 2 + 1] = 0.0;
            }));
            // A = (0, P) with P = int_0^{q1} f12(t, q2) dt, a closed form.
            model.potential = Some(Arc::new(move |q: &[f64], out: &mut [f64]| {
                let x = q[0];
                let y = q[1];
                out[0] = 0.0;
                out[1] = c[0] * x
                    + 0.5 * c[1] * x * x
                    + c[2] * y * x
                    + c[3] * x * x * x / 3.0
                    + 0.5 * c[4] * x * x * y
                    + c[5] * y * y * x;
            }));
        }
        FieldKind::Custom => {
            return Err(GeomError::InvalidModel(
                "custom fields are attached programmatically".into(),
            ))
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample_points(model: &ManifoldModel, count: usize) -> Vec<Vec<f64>> {
        // Low-discrepancy-ish deterministic samples inside the sample box.
        let (lo, hi) = model.sample_box.clone();
        let n = model.dim();
        (0..count)
            .map(|k| {
                (0..n)
                    .map(|d| {
                        let t = ((k * 7919 + d * 104729 + 13) % 1000) as f64 / 999.0;
                        lo[d] + t * (hi[d] - lo[d])
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn euclidean_flat_zero() {
        let m = builtin_model(ModelKind::Euclidean(2), FieldKind::Zero).unwrap();
        let bc = curvature_at(&m, &[0.3, -0.7]).unwrap();
        assert!(bc.riemann.iter().all(|x| x.abs() < 1e-12));
        assert!(bc.ricci_sym.iter().all(|x| x.abs() < 1e-12));
        assert_relative_eq!(m.mu(&[1.0, 2.0]), 1.0);
    }

    #[test]
    fn euclidean_constant_field_closed() {
        let m = builtin_model(ModelKind::Euclidean(2), FieldKind::Constant(1.5)).unwrap();
        let f = m.faraday_vec(&[0.4, 0.2]);
        assert_relative_eq!(f[1], 1.5);
        assert_relative_eq!(f[2], -1.5);
        let bc = curvature_at(&m, &[0.4, 0.2]).unwrap();
        assert!(bc.nabla_f.iter().all(|x| x.abs() < 1e-12));
        assert!(bc.coupling.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn hyperboloid_constant_negative_curvature() {
        let m = builtin_model(ModelKind::HyperboloidH2, FieldKind::Zero).unwrap();
        for q in sample_points(&m, 20) {
            let bc = curvature_at(&m, &q).unwrap();
            let g = m.metric(&q).unwrap();
            // R^s_{ijk} = -(delta^s_j g_{ik} - delta^s_k g_{ij}) for K = -1
            for s in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        for k in 0..2 {
                            let del = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                            let expect = -(del(s, j) * g[i * 2 + k] - del(s, k) * g[i * 2 + j]);
                            assert_relative_eq!(
                                bc.riemann_at(s, i, j, k),
                                expect,
                                epsilon = 1e-9
                            );
                        }
                    }
                }
            }
            // Ricci = (n-1) K g = -g
            for i in 0..2 {
                for j in 0..2 {
                    assert_relative_eq!(bc.ricci_sym[i * 2 + j], -g[i * 2 + j], epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn model_invariants_hold_on_random_points() {
        let models = [
            builtin_model(ModelKind::Euclidean(2), FieldKind::Zero).unwrap(),
            builtin_model(ModelKind::Euclidean(2), FieldKind::Constant(1.0)).unwrap(),
            builtin_model(ModelKind::Euclidean(2), FieldKind::Quadratic([0.5, 1.0, -0.4, 0.3, 0.2, -0.1])).unwrap(),
            builtin_model(ModelKind::HyperboloidH2, FieldKind::AreaForm(1.0)).unwrap(),
            builtin_model(ModelKind::DeformedR2 { eps: 0.1 }, FieldKind::AreaForm(0.7)).unwrap(),
        ];
        for m in &models {
            for q in sample_points(m, 100) {
                let rep = m.invariant_residuals(&q).unwrap();
                let tol = if matches!(m.field, FieldKind::AreaForm(_))
                    && matches!(m.kind, ModelKind::DeformedR2 { .. })
                {
                    1e-6 // finite-difference dF
                } else {
                    1e-9
                };
                assert!(rep.torsion < 1e-12, "torsion {} on {}", rep.torsion, m.kind);
                assert!(rep.skew < 1e-12);
                assert!(rep.closedness < tol, "closedness {} on {}", rep.closedness, m.kind);
                assert!(rep.measure > 0.0);
            }
        }
    }

    #[test]
    fn potentials_are_primitives() {
        // dA = F by finite differences for every built-in field carrying one.
        let models = [
            builtin_model(ModelKind::Euclidean(2), FieldKind::Constant(2.0)).unwrap(),
            builtin_model(ModelKind::Euclidean(2), FieldKind::Quadratic([1.0, -0.5, 0.25, 0.1, -0.2, 0.3])).unwrap(),
            builtin_model(ModelKind::HyperboloidH2, FieldKind::AreaForm(1.3)).unwrap(),
            builtin_model(ModelKind::DeformedR2 { eps: 0.12 }, FieldKind::AreaForm(0.9)).unwrap(),
        ];
        for m in &models {
            for q in sample_points(m, 12) {
                let f = m.faraday_vec(&q);
                let da = central_diff_field(&q, 2, |x, o| {
                    o.copy_from_slice(&m.potential(x).unwrap());
                });
                // da[k*n + j] = d_j A_k ; F_jk = d_j A_k - d_k A_j
                let fd12 = da[1 * 2 + 0] - da[0 * 2 + 1];
                assert_relative_eq!(f[1], fd12, epsilon = 2e-7, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn coupling_identities_flat_and_curved() {
        let m = builtin_model(
            ModelKind::Euclidean(2),
            FieldKind::Quadratic([0.4, 0.9, -0.3, 0.25, -0.15, 0.35]),
        )
        .unwrap();
        let bc = curvature_at(&m, &[0.37, -0.81]).unwrap();
        let rep = coupling_identities(&bc);
        assert!(rep.duality < 1e-10);
        assert!(rep.inverse_duality < 1e-10);
        assert!(rep.cyclic_coupling < 1e-10);
        assert!(rep.cyclic_nabla_f < 1e-10);

        let m = builtin_model(ModelKind::HyperboloidH2, FieldKind::AreaForm(1.0)).unwrap();
        let bc = curvature_at(&m, &[0.5, 0.2]).unwrap();
        let rep = coupling_identities(&bc);
        assert!(rep.duality < 1e-8);
        assert!(rep.inverse_duality < 1e-8);
        assert!(rep.cyclic_coupling < 1e-8);
        assert!(rep.cyclic_nabla_f < 1e-8, "cyclic nabla_f {}", rep.cyclic_nabla_f);
    }

    #[test]
    fn field_model_mismatch_rejected() {
        assert!(builtin_model(ModelKind::Euclidean(2), FieldKind::AreaForm(1.0)).is_err());
        assert!(builtin_model(ModelKind::Euclidean(1), FieldKind::Constant(1.0)).is_err());
        assert!(builtin_model(ModelKind::HyperboloidH2, FieldKind::Constant(1.0)).is_ok());
    }
}
