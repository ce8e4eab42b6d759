//! Adaptive embedded Runge–Kutta pair (Dormand–Prince 5(4)) with FSAL and a
//! PI step controller. States are flat `f64` slices; the stage buffers live in
//! a reusable workspace so the hot geodesic loops do not allocate per step.

use crate::error::{GeomError, Result};

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct OdeOpts {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOpts {
    fn default() -> Self {
        OdeOpts {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 100_000,
        }
    }
}

pub struct Integrator {
    opts: OdeOpts,
    k: [Vec<f64>; 7],
    ytmp: Vec<f64>,
    ynew: Vec<f64>,
}

impl Integrator {
    pub fn new(opts: OdeOpts) -> Self {
        Integrator {
            opts,
            k: Default::default(),
            ytmp: Vec::new(),
            ynew: Vec::new(),
        }
    }

    pub fn opts(&self) -> OdeOpts {
        self.opts
    }

    fn ensure(&mut self, dim: usize) {
        for k in &mut self.k {
            k.resize(dim, 0.0);
        }
        self.ytmp.resize(dim, 0.0);
        self.ynew.resize(dim, 0.0);
    }

    /// Integrate `y' = rhs(t, y)` from `t0` to `t1` in place, calling
    /// `on_node(t, y)` at every time in `readouts` (which must be sorted and
    /// lie inside `[t0, t1]`) and once at `t1`.
    pub fn integrate<F>(
        &mut self,
        mut rhs: F,
        t0: f64,
        t1: f64,
        y: &mut [f64],
        readouts: &[f64],
        mut on_node: impl FnMut(f64, &[f64]),
    ) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let mut t = t0;
        for &tr in readouts {
            self.advance(&mut rhs, t, tr, y)?;
            t = tr;
            on_node(t, y);
        }
        if (t1 - t).abs() > 0.0 {
            self.advance(&mut rhs, t, t1, y)?;
        }
        on_node(t1, y);
        Ok(())
    }

    fn advance<F>(&mut self, rhs: &mut F, t0: f64, t1: f64, y: &mut [f64]) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        if t1 == t0 {
            return Ok(());
        }
        let dim = y.len();
        self.ensure(dim);
        let span = t1 - t0;
        let dir = span.signum();
        let mut t = t0;
        let mut h = (span.abs() * 0.1).min(0.5) * dir;
        let mut fsal_valid = false;
        let mut err_prev: f64 = 1.0;
        for _ in 0..self.opts.max_steps {
            if (t - t1) * dir >= 0.0 {
                return Ok(());
            }
            if (t + h - t1) * dir > 0.0 {
                h = t1 - t;
                fsal_valid = false;
            }
            if h.abs() < 1e-15 * (1.0 + t.abs()) {
                return Err(GeomError::StepUnderflow(t));
            }
            if !fsal_valid {
                rhs(t, y, &mut self.k[0]);
            }
            for s in 1..7 {
                for i in 0..dim {
                    let mut acc = 0.0;
                    for (j, kj) in self.k.iter().enumerate().take(s) {
                        let a = A[s - 1][j];
                        if a != 0.0 {
                            acc += a * kj[i];
                        }
                    }
                    self.ytmp[i] = y[i] + h * acc;
                }
                let ts = t + h * C_NODES[s];
                if s == 6 {
                    self.ynew.copy_from_slice(&self.ytmp);
                }
                let (head, tail) = self.k.split_at_mut(s);
                let _ = head;
                rhs(ts, &self.ytmp, &mut tail[0]);
            }
            // error estimate: 5th-order solution is ynew (stage-6 combination)
            let mut err = 0.0f64;
            for i in 0..dim {
                let mut y4 = y[i];
                for (j, kj) in self.k.iter().enumerate() {
                    y4 += h * B4[j] * kj[i];
                }
                let sc = self.opts.atol + self.opts.rtol * self.ynew[i].abs().max(y[i].abs());
                let e = (self.ynew[i] - y4) / sc;
                err += e * e;
            }
            err = (err / dim as f64).sqrt();
            if err <= 1.0 {
                t += h;
                y.copy_from_slice(&self.ynew);
                self.k.swap(0, 6); // FSAL
                fsal_valid = true;
                let fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
                h *= fac.clamp(0.2, 5.0);
                err_prev = err.max(1e-10);
            } else {
                let fac = 0.9 * err.powf(-0.2);
                h *= fac.clamp(0.1, 0.9);
                fsal_valid = true; // k[0] still holds f(t, y)
            }
        }
        Err(GeomError::NewtonStall {
            context: "ode step limit",
            residual: (t1 - t).abs(),
            iters: self.opts.max_steps,
        })
    }
}

const C_NODES: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
