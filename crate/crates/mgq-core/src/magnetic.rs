//! Magnetic flux through geodesic triangles, the flux function of the
//! quantizer phase, and radial-gauge potentials.
//!
//! Orientation convention: `flux(P1, P2, P3)` is the integral of `F` over a
//! surface whose boundary runs `P1 → P2 → P3 → P1`, normalized so that it
//! equals the circulation of any primitive `A` (with `F = dA`, components
//! `F_{jk} = ∂_j A_k − ∂_k A_j`) around that boundary. On the Euclidean plane
//! with constant `F_{12} = B` and counterclockwise vertices the flux is
//! `B ×` area.

use crate::error::{GeomError, Result};
use crate::geodesics::{FlowFlags, GeodesicEngine};
use crate::geometry::ManifoldModel;
use crate::quad::gauss_legendre;

/// Geodesic triangle: three vertices, surface filled by the geodesic cone
/// from one vertex over the opposite edge.
#[derive(Debug, Clone)]
pub struct TrianglePatch {
    pub vertices: [Vec<f64>; 3],
}

impl TrianglePatch {
    pub fn new(p1: Vec<f64>, p2: Vec<f64>, p3: Vec<f64>) -> Self {
        TrianglePatch {
            vertices: [p1, p2, p3],
        }
    }
}

/// Flux by tensor-product Gauss quadrature of the pulled-back 2-form over the
/// cone with the given apex vertex (0, 1 or 2). Closedness of `F` makes the
/// apex choice irrelevant up to quadrature error.
pub fn flux_surface(
    model: &ManifoldModel,
    tri: &TrianglePatch,
    apex: usize,
    nodes_per_dim: usize,
) -> Result<f64> {
    let n = model.dim();
    let eng = GeodesicEngine::new(model);
    let apex_pt = &tri.vertices[apex];
    // Boundary order P1 -> P2 -> P3; the cone from vertex `apex` spans the
    // opposite edge traversed in boundary direction.
    let (eb, ec) = match apex {
        0 => (&tri.vertices[1], &tri.vertices[2]),
        1 => (&tri.vertices[2], &tri.vertices[0]),
        2 => (&tri.vertices[0], &tri.vertices[1]),
        _ => return Err(GeomError::Invalid("apex must be 0, 1 or 2".into())),
    };
    let (s_nodes, s_weights) = gauss_legendre(nodes_per_dim);
    let (t_nodes, t_weights) = gauss_legendre(nodes_per_dim);
    let to_unit = |x: f64| 0.5 * (x + 1.0);

    // Edge geodesic with readouts at the s-nodes.
    let edge_log = eng.log(eb, ec, FlowFlags::var())?;
    let mut s_sorted: Vec<(usize, f64)> = s_nodes
        .iter()
        .enumerate()
        .map(|(i, x)| (i, to_unit(*x)))
        .collect();
    s_sorted.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());

    let mut edge_states: Vec<(usize, Vec<f64>, Vec<f64>)> = Vec::with_capacity(nodes_per_dim);
    {
        let readouts: Vec<f64> = s_sorted.iter().map(|(_, s)| *s).collect();
        let mut integ = crate::ode::Integrator::new(crate::ode::OdeOpts {
            rtol: eng.opts.rtol,
            atol: eng.opts.atol,
            max_steps: 100_000,
        });
        let mut y = vec![0.0; 2 * n];
        y[..n].copy_from_slice(eb);
        y[n..].copy_from_slice(&edge_log.v);
        let model_ref = model;
        let mut gamma = vec![0.0; n * n * n];
        let mut k = 0usize;
        integ.integrate(
            |_t, s, ds| {
                let (qs, vs) = s.split_at(n);
                model_ref.gamma(qs, &mut gamma);
                ds[..n].copy_from_slice(vs);
                for kk in 0..n {
                    let mut acc = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            acc += gamma[(kk * n + i) * n + j] * vs[i] * vs[j];
                        }
                    }
                    ds[n + kk] = -acc;
                }
            },
            0.0,
            1.0,
            &mut y,
            &readouts,
            |t, s| {
                if k < s_sorted.len() && (t - s_sorted[k].1).abs() < 1e-13 {
                    edge_states.push((s_sorted[k].0, s[..n].to_vec(), s[n..].to_vec()));
                    k += 1;
                }
            },
        )?;
    }

    let mut total = 0.0;
    let mut fbuf = vec![0.0; n * n];
    for (orig_idx, eta, eta_dot) in &edge_states {
        let w_s = s_weights[*orig_idx] * 0.5;
        // ray from the apex to eta(s), with the Jacobi frame
        let ray = eng.log(apex_pt, eta, FlowFlags::var())?;
        let dexp_end = ray.flow.dexp_v();
        let vprime = dexp_end
            .inverse()
            .map_err(|_| GeomError::SingularJacobian("cone ray frame"))?
            .matvec(eta_dot);
        // integrate the ray once more, reading out at the t-nodes
        let mut t_sorted: Vec<(usize, f64)> = t_nodes
            .iter()
            .enumerate()
            .map(|(i, x)| (i, to_unit(*x)))
            .collect();
        t_sorted.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let readouts: Vec<f64> = t_sorted.iter().map(|(_, t)| *t).collect();
        let flags = FlowFlags::var();
        let mut states: Vec<(usize, Vec<f64>, Vec<f64>, crate::linalg::Mat)> = Vec::new();
        {
            let mut integ = crate::ode::Integrator::new(crate::ode::OdeOpts {
                rtol: eng.opts.rtol,
                atol: eng.opts.atol,
                max_steps: 100_000,
            });
            let dim_v = 2 * n + 4 * n * n;
            let _ = flags;
            let mut y = vec![0.0; dim_v];
            y[..n].copy_from_slice(apex_pt);
            y[n..2 * n].copy_from_slice(&ray.v);
            for i in 0..2 * n {
                y[2 * n + i * 2 * n + i] = 1.0;
            }
            let model_ref = model;
            let mut gamma = vec![0.0; n * n * n];
            let mut k = 0usize;
            integ.integrate(
                |_t, s, ds| {
                    let (qs, rest) = s.split_at(n);
                    let (vs, _) = rest.split_at(n);
                    model_ref.gamma(qs, &mut gamma);
                    ds[..n].copy_from_slice(vs);
                    for kk in 0..n {
                        let mut acc = 0.0;
                        for i in 0..n {
                            for j in 0..n {
                                acc += gamma[(kk * n + i) * n + j] * vs[i] * vs[j];
                            }
                        }
                        ds[n + kk] = -acc;
                    }
                    let dgamma = model_ref.dgamma(qs);
                    let yb = &s[2 * n..];
                    let dyb = &mut ds[2 * n..];
                    let w = 2 * n;
                    for c in 0..w {
                        for r in 0..n {
                            dyb[r * w + c] = yb[(n + r) * w + c];
                        }
                        for kk in 0..n {
                            let mut acc = 0.0;
                            for l in 0..n {
                                let mut ckl = 0.0;
                                for i in 0..n {
                                    for j in 0..n {
                                        ckl += dgamma[((kk * n + i) * n + j) * n + l] * vs[i] * vs[j];
                                    }
                                }
                                acc -= ckl * yb[l * w + c];
                            }
                            for j in 0..n {
                                let mut dkj = 0.0;
                                for i in 0..n {
                                    dkj += 2.0 * gamma[(kk * n + i) * n + j] * vs[i];
                                }
                                acc -= dkj * yb[(n + j) * w + c];
                            }
                            dyb[(n + kk) * w + c] = acc;
                        }
                    }
                },
                0.0,
                1.0,
                &mut y,
                &readouts,
                |t, s| {
                    if k < t_sorted.len() && (t - t_sorted[k].1).abs() < 1e-13 {
                        let w = 2 * n;
                        let mut jmat = crate::linalg::Mat::zeros(n, n);
                        for i in 0..n {
                            for j in 0..n {
                                jmat[(i, j)] = s[2 * n + i * w + (n + j)];
                            }
                        }
                        states.push((t_sorted[k].0, s[..n].to_vec(), s[n..2 * n].to_vec(), jmat));
                        k += 1;
                    }
                },
            )?;
        }
        for (tidx, qpt, qdot, jmat) in &states {
            let w_t = t_weights[*tidx] * 0.5;
            let dq_ds = jmat.matvec(&vprime);
            model.faraday(qpt, &mut fbuf);
            let mut f_val = 0.0;
            for j in 0..n {
                for k in 0..n {
                    f_val += fbuf[j * n + k] * dq_ds[j] * qdot[k];
                }
            }
            total += w_s * w_t * f_val;
        }
    }
    // The (s, t) cone parametrization of the P1-apex traces the boundary
    // P1 -> P3 -> P2, i.e. reversed; same for the other apex choices.
    Ok(-total)
}

/// Flux with an automatic error estimate by node doubling.
pub fn flux_triangle(model: &ManifoldModel, tri: &TrianglePatch) -> Result<f64> {
    let coarse = flux_surface(model, tri, 0, 16)?;
    let fine = flux_surface(model, tri, 0, 24)?;
    let scale = fine.abs().max(1.0);
    if (fine - coarse).abs() > 1e-6 * scale {
        return Err(GeomError::Quadrature(format!(
            "triangle flux estimates differ: {coarse:.3e} vs {fine:.3e}"
        )));
    }
    Ok(fine)
}

/// Flux via line integrals of the model's analytic primitive along the three
/// boundary geodesics (exact Stokes route; requires a potential closure).
pub fn flux_line(model: &ManifoldModel, p1: &[f64], p2: &[f64], p3: &[f64]) -> Result<f64> {
    if !model.has_potential() {
        return Err(GeomError::Invalid(
            "line-route flux needs a potential closure".into(),
        ));
    }
    let eng = GeodesicEngine::new(model);
    Ok(eng.line_integral(p1, p2)? + eng.line_integral(p2, p3)? + eng.line_integral(p3, p1)?)
}

/// Preferred flux evaluation: the line route when a primitive is available,
/// the surface quadrature otherwise.
pub fn flux_auto(model: &ManifoldModel, p1: &[f64], p2: &[f64], p3: &[f64]) -> Result<f64> {
    if model.has_potential() {
        flux_line(model, p1, p2, p3)
    } else {
        flux_triangle(
            model,
            &TrianglePatch::new(p1.to_vec(), p2.to_vec(), p3.to_vec()),
        )
    }
}

/// Magnetic phase flux of the quantizer: the flux through the geodesic
/// triangle with boundary `a → o → s_q(a) → a`, where `o` is the model base
/// point.
pub fn phi(model: &ManifoldModel, q: &[f64], a: &[f64]) -> Result<f64> {
    let eng = GeodesicEngine::new(model);
    let b = eng.reflect(q, a)?;
    flux_auto(model, a, model.base_point(), &b)
}

/// Same flux function written as the line integral of the radial-gauge
/// potential along the geodesic from `s_q(a)` to `a`.
pub fn phi_line_radial(model: &ManifoldModel, q: &[f64], a: &[f64], nodes: usize) -> Result<f64> {
    let eng = GeodesicEngine::new(model);
    let b = eng.reflect(q, a)?;
    let o = model.base_point().to_vec();
    // readout states along b -> a
    let log = eng.log(&b, a, FlowFlags::plain())?;
    let (x, w) = gauss_legendre(nodes);
    let mut total = 0.0;
    for (xi, wi) in x.iter().zip(&w) {
        let t = 0.5 * (xi + 1.0);
        let scaled: Vec<f64> = log.v.iter().map(|v| v * t).collect();
        let flow = eng.flow(&b, &scaled, FlowFlags::plain())?;
        let pos = flow.q1;
        // velocity of the b->a geodesic at parameter t equals the endpoint
        // velocity of the rescaled flow divided by t (chain rule), except at
        // t = 0 where it is v itself.
        let vel: Vec<f64> = if t > 1e-9 {
            flow.v1.iter().map(|v| v / t).collect()
        } else {
            log.v.clone()
        };
        let apot = eng.radial_potential(&o, &pos)?;
        let integrand: f64 = apot.iter().zip(&vel).map(|(a, v)| a * v).sum();
        total += 0.5 * wi * integrand;
    }
    Ok(total)
}

/// Radial-gauge potential `A(q, base)`; with `base = o` this is the gauge of
/// the momentum quantization formula.
pub fn radial_potential(model: &ManifoldModel, base: &[f64], q: &[f64]) -> Result<Vec<f64>> {
    GeodesicEngine::new(model).radial_potential(base, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{builtin_model, FieldKind, ModelKind};
    use crate::oracles::hyperboloid as hyp;
    use approx::assert_relative_eq;

    #[test]
    fn euclidean_constant_field_flux_is_signed_area() {
        let m = builtin_model(ModelKind::Euclidean(2), FieldKind::Constant(2.0)).unwrap();
        let tri = TrianglePatch::new(vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]);
        let f = flux_surface(&m, &tri, 0, 16).unwrap();
        assert_relative_eq!(f, 2.0 * 0.5, epsilon = 1e-10);
        // line route agrees
        let fl = flux_line(&m, &[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_relative_eq!(fl, 1.0, epsilon = 1e-10);
        // reversed orientation flips the sign
        let tri_r = TrianglePatch::new(vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]);
        assert_relative_eq!(flux_surface(&m, &tri_r, 0, 16).unwrap(), -1.0, epsilon = 1e-10);
    }

    #[test]
    fn degenerate_triangle_zero_flux() {
        let m = builtin_model(ModelKind::Euclidean(2), FieldKind::Constant(1.0)).unwrap();
        let tri = TrianglePatch::new(vec![0.0, 0.0], vec![0.5, 0.5], vec![1.0, 1.0]);
        assert!(flux_surface(&m, &tri, 0, 12).unwrap().abs() < 1e-12);
    }

    #[test]
    fn apex_independence_and_line_agreement() {
        let m = builtin_model(ModelKind::HyperboloidH2, FieldKind::AreaForm(1.0)).unwrap();
        let tri = TrianglePatch::new(vec![0.2, 0.1], vec![0.9, -0.3], vec![-0.4, 0.8]);
        let f0 = flux_surface(&m, &tri, 0, 16).unwrap();
        let f1 = flux_surface(&m, &tri, 1, 16).unwrap();
        let f2 = flux_surface(&m, &tri, 2, 16).unwrap();
        assert_relative_eq!(f0, f1, epsilon = 1e-7);
        assert_relative_eq!(f0, f2, epsilon = 1e-7);
        let fl = flux_line(&m, &tri.vertices[0], &tri.vertices[1], &tri.vertices[2]).unwrap();
        assert_relative_eq!(f0, fl, epsilon = 1e-7);
    }

    #[test]
    fn hyperboloid_flux_matches_gauss_bonnet_area() {
        let m = builtin_model(ModelKind::HyperboloidH2, FieldKind::AreaForm(1.3)).unwrap();
        let (p1, p2, p3) = (vec![0.1, 0.0], vec![0.6, 0.1], vec![0.2, 0.55]);
        let f = flux_line(&m, &p1, &p2, &p3).unwrap();
        let area = hyp::triangle_area(&p1, &p2, &p3);
        // counterclockwise chart order carries positive orientation
        assert_relative_eq!(f.abs(), 1.3 * area, max_relative = 1e-6);
    }

    #[test]
    fn flux_additivity_under_cevian_split() {
        let m = builtin_model(ModelKind::HyperboloidH2, FieldKind::AreaForm(0.8)).unwrap();
        let (p1, p2, p3) = (vec![0.0, 0.0], vec![0.8, 0.0], vec![0.1, 0.7]);
        let eng = GeodesicEngine::new(&m);
        // midpoint of the p2-p3 edge as the cevian foot
        let md = eng.midpoint(&p2, &p3).unwrap();
        let whole = flux_line(&m, &p1, &p2, &p3).unwrap();
        let left = flux_line(&m, &p1, &p2, &md.mid).unwrap();
        let right = flux_line(&m, &p1, &md.mid, &p3).unwrap();
        assert_relative_eq!(whole, left + right, epsilon = 1e-9);
    }

    #[test]
    fn phi_zero_cases_and_euclidean_value() {
        let m0 = builtin_model(ModelKind::Euclidean(2), FieldKind::Zero).unwrap();
        assert!(phi(&m0, &[0.3, 0.1], &[0.9, -0.4]).unwrap().abs() < 1e-12);
        let m = builtin_model(ModelKind::Euclidean(2), FieldKind::Constant(1.0)).unwrap();
        // a = q gives the degenerate triangle
        assert!(phi(&m, &[0.5, 0.2], &[0.5, 0.2]).unwrap().abs() < 1e-12);
        // worked constant-field configuration: o = 0, q = (1,0), a = (1,1),
        // s_q(a) = (1,-1); circulation of the symmetric-gauge primitive gives +B
        let v = phi(&m, &[1.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn phi_surface_vs_line_form() {
        for m in [
            builtin_model(ModelKind::Euclidean(2), FieldKind::Quadratic([0.5, 0.3, -0.2, 0.1, 0.05, -0.15])).unwrap(),
            builtin_model(ModelKind::HyperboloidH2, FieldKind::AreaForm(1.0)).unwrap(),
        ] {
            for k in 0..6 {
                let t = k as f64 / 5.0;
                let q = [0.4 * t - 0.2, 0.3 - 0.4 * t];
                let a = [0.5 - 0.3 * t, 0.4 * t];
                let v1 = phi(&m, &q, &a).unwrap();
                let v2 = phi_line_radial(&m, &q, &a, 24).unwrap();
                assert_relative_eq!(v1, v2, epsilon = 1e-7, max_relative = 1e-7);
            }
        }
    }

    #[test]
    fn radial_potential_gauge_and_valatin() {
        let m = builtin_model(ModelKind::Euclidean(2), FieldKind::Constant(1.4)).unwrap();
        let eng = GeodesicEngine::new(&m);
        // Valatin/symmetric gauge from the origin: A_k = (1/2) q_m F_{mk}
        let q = [0.8, -0.5];
        let a = radial_potential(&m, &[0.0, 0.0], &q).unwrap();
        assert_relative_eq!(a[0], -0.5 * 1.4 * q[1], epsilon = 1e-10);
        assert_relative_eq!(a[1], 0.5 * 1.4 * q[0], epsilon = 1e-10);
        // base = q gives zero
        let z = radial_potential(&m, &q, &q).unwrap();
        assert!(z.iter().all(|x| x.abs() < 1e-12));
        // gauge condition A(q, o) · V_q(o) = 0 on scattered points, curved case
        let mh = builtin_model(ModelKind::HyperboloidH2, FieldKind::AreaForm(1.0)).unwrap();
        let engh = GeodesicEngine::new(&mh);
        for k in 0..50 {
            let t = k as f64 / 49.0;
            let q = [1.4 * t - 0.7, 0.6 - 1.1 * t];
            if q[0].abs() < 1e-3 && q[1].abs() < 1e-3 {
                continue;
            }
            let apot = engh.radial_potential(&[0.0, 0.0], &q).unwrap();
            let v = engh
                .log(&q, &[0.0, 0.0], crate::geodesics::FlowFlags::plain())
                .unwrap()
                .v;
            let pair: f64 = apot.iter().zip(&v).map(|(x, y)| x * y).sum();
            assert!(pair.abs() < 1e-8, "gauge pairing {pair}");
        }
        let _ = eng;
    }

    #[test]
    fn radial_potential_differential_is_faraday() {
        // d_q A(q, base) = F(q) by finite differences
        let m = builtin_model(ModelKind::HyperboloidH2, FieldKind::AreaForm(1.2)).unwrap();
        let base = [0.3, -0.2];
        let q = [0.5, 0.4];
        let h = 1e-5;
        let mut da = [[0.0; 2]; 2]; // da[j][k] = d_j A_k
        for j in 0..2 {
            let mut qp = q;
            qp[j] += h;
            let ap = radial_potential(&m, &base, &qp).unwrap();
            qp[j] = q[j] - h;
            let am = radial_potential(&m, &base, &qp).unwrap();
            for k in 0..2 {
                da[j][k] = (ap[k] - am[k]) / (2.0 * h);
            }
        }
        let f = m.faraday_vec(&q);
        assert_relative_eq!(da[0][1] - da[1][0], f[1], epsilon = 1e-6, max_relative = 1e-6);
    }
}
