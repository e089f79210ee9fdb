//! Dormand–Prince 5(4) with Hairer's fourth-order dense output.

use crate::error::{Error, Result};

use super::{TimeGrid, Trajectory};

pub const DEFAULT_ODE_TOL: f64 = 1e-10;
const MAX_STEPS: usize = 1_000_000;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
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
/// Difference between the fifth- and fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One accepted step with its interpolation coefficients.
#[derive(Debug, Clone)]
struct DenseStep {
    t: f64,
    h: f64,
    r: [Vec<f64>; 5],
}

impl DenseStep {
    fn eval(&self, t: f64, out: &mut [f64]) {
        let th = (t - self.t) / self.h;
        let u = 1.0 - th;
        let [r1, r2, r3, r4, r5] = &self.r;
        for i in 0..out.len() {
            out[i] = r1[i] + th * (r2[i] + u * (r3[i] + th * (r4[i] + u * r5[i])));
        }
    }

    fn deriv(&self, t: f64, out: &mut [f64]) {
        let th = (t - self.t) / self.h;
        let u = 1.0 - th;
        let [_, r2, r3, r4, r5] = &self.r;
        for i in 0..out.len() {
            out[i] = (r2[i]
                + (u - th) * r3[i]
                + (2.0 * th * u - th * th) * r4[i]
                + (2.0 * th * u * u - 2.0 * th * th * u) * r5[i])
                / self.h;
        }
    }
}

/// Continuous solution on `[t0, t1]`.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    t0: f64,
    t1: f64,
    dim: usize,
    steps: Vec<DenseStep>,
}

impl OdeSolution {
    pub fn domain(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    fn locate(&self, t: f64) -> Result<&DenseStep> {
        let slack = 1e-12 * self.t0.abs().max(self.t1.abs()).max(1.0);
        if !(t >= self.t0 - slack && t <= self.t1 + slack) {
            return Err(Error::Domain {
                message: format!("solution evaluated outside [{}, {}]", self.t0, self.t1),
                t: Some(t),
            });
        }
        let k = self.steps.partition_point(|s| s.t <= t);
        Ok(&self.steps[k.saturating_sub(1)])
    }

    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.locate(t)?.eval(t, &mut out);
        Ok(out)
    }

    /// Derivative of the interpolant. At a step boundary the later step is used.
    pub fn deriv(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.locate(t)?.deriv(t, &mut out);
        Ok(out)
    }

    pub fn sample(&self, grid: &TimeGrid) -> Result<Trajectory> {
        let states = grid.nodes().iter().map(|&t| self.eval(t)).collect::<Result<_>>()?;
        Ok(Trajectory::new(grid.clone(), states))
    }
}

fn rms_norm(v: &[f64], scale: &[f64]) -> f64 {
    let s: f64 = v.iter().zip(scale).map(|(x, s)| (x / s).powi(2)).sum();
    (s / v.len().max(1) as f64).sqrt()
}

struct Stepper<'a, F> {
    rhs: &'a mut F,
    tol: f64,
    k: [Vec<f64>; 7],
    y_stage: Vec<f64>,
    y_new: Vec<f64>,
    err: Vec<f64>,
    scale: Vec<f64>,
}

impl<F> Stepper<'_, F>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    fn call(&mut self, t: f64, y: &[f64], out_stage: usize) -> Result<()> {
        (self.rhs)(t, y, &mut self.k[out_stage]).map_err(|e| e.at_time(t))?;
        if self.k[out_stage].iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite right-hand side at t = {t}")));
        }
        Ok(())
    }

    fn initial_step(&mut self, t: f64, y: &[f64], span: f64) -> Result<f64> {
        for (s, v) in self.scale.iter_mut().zip(y) {
            *s = self.tol + self.tol * v.abs();
        }
        let d0 = rms_norm(y, &self.scale);
        let d1 = rms_norm(&self.k[0], &self.scale);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        for i in 0..y.len() {
            self.y_stage[i] = y[i] + h0 * self.k[0][i];
        }
        let ys = std::mem::take(&mut self.y_stage);
        self.call(t + h0, &ys, 1)?;
        self.y_stage = ys;
        let diff: Vec<f64> = self.k[1].iter().zip(&self.k[0]).map(|(a, b)| a - b).collect();
        let d2 = rms_norm(&diff, &self.scale) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        Ok((100.0 * h0).min(h1).min(span))
    }

    /// Attempt a step from `t` to `t_new`. Returns the error norm; on success
    /// `y_new`, `err` and all stages are filled. `k[0]` must hold `f(t, y)`.
    fn attempt(&mut self, t: f64, y: &[f64], h: f64, t_new: f64, segment_end: bool) -> Result<f64> {
        let n = y.len();
        let mut ys = std::mem::take(&mut self.y_stage);
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, a) in A[s][..s].iter().enumerate() {
                    acc += a * self.k[j][i];
                }
                ys[i] = y[i] + h * acc;
            }
            let ts = if C[s] == 1.0 {
                if segment_end {
                    t_new.next_down()
                } else {
                    t_new
                }
            } else {
                t + C[s] * h
            };
            self.call(ts, &ys, s)?;
        }
        // The seventh stage is evaluated at the fifth-order solution itself.
        self.y_new.copy_from_slice(&ys);
        self.y_stage = ys;
        for i in 0..n {
            let mut e = 0.0;
            for (j, w) in E.iter().enumerate() {
                e += w * self.k[j][i];
            }
            self.err[i] = h * e;
            self.scale[i] = self.tol + self.tol * y[i].abs().max(self.y_new[i].abs());
        }
        Ok(rms_norm(&self.err, &self.scale))
    }

    fn dense(&self, t: f64, h: f64, y: &[f64]) -> DenseStep {
        let n = y.len();
        let mut r = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for i in 0..n {
            let dy = self.y_new[i] - y[i];
            let bspl = h * self.k[0][i] - dy;
            r[0][i] = y[i];
            r[1][i] = dy;
            r[2][i] = bspl;
            r[3][i] = dy - h * self.k[6][i] - bspl;
            let mut acc = 0.0;
            for (j, d) in D.iter().enumerate() {
                acc += d * self.k[j][i];
            }
            r[4][i] = h * acc;
        }
        DenseStep { t, h, r }
    }
}

/// Integrate `x' = rhs(t, x)` on `[t0, t1]` with dense output.
///
/// Integration restarts at every point of `breakpoints`, so a right-hand side
/// that jumps there is never straddled by a step. The last stage of a
/// segment is evaluated one ulp before its end, which gives the left limit
/// of a left-closed piecewise signal.
pub fn solve_dense<F>(mut rhs: F, x0: &[f64], t0: f64, t1: f64, breakpoints: &[f64], tol: f64) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(Error::invalid(format!("invalid integration interval [{t0}, {t1}]")));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("initial state must be finite"));
    }
    let n = x0.len();
    let mut cuts = vec![t0];
    let mut inner: Vec<f64> = breakpoints.iter().copied().filter(|&b| b > t0 && b < t1).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    cuts.extend(inner);
    cuts.push(t1);

    let mut st = Stepper {
        rhs: &mut rhs,
        tol,
        k: std::array::from_fn(|_| vec![0.0; n]),
        y_stage: vec![0.0; n],
        y_new: vec![0.0; n],
        err: vec![0.0; n],
        scale: vec![0.0; n],
    };
    let mut steps = Vec::new();
    let mut y = x0.to_vec();
    let mut total = 0usize;
    for seg in cuts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let mut t = a;
        st.call(t, &y, 0)?;
        let mut h = st.initial_step(t, &y, b - a)?;
        let mut last_rejected = false;
        loop {
            total += 1;
            if total > MAX_STEPS {
                return Err(Error::Numeric(format!("step budget exhausted at t = {t}")));
            }
            if h < 16.0 * f64::EPSILON * t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t });
            }
            let end = t + h >= b || (b - t - h) < 1e-12 * h;
            let (h_try, t_new) = if end { (b - t, b) } else { (h, t + h) };
            let err = st.attempt(t, &y, h_try, t_new, end)?;
            if err <= 1.0 {
                steps.push(st.dense(t, h_try, &y));
                y.copy_from_slice(&st.y_new);
                t = t_new;
                if end {
                    break;
                }
                // First-same-as-last, except where the last stage sat one
                // ulp early.
                st.k.swap(0, 6);
                let fac = if last_rejected { 1.0 } else { 5.0 };
                h = h_try * (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, fac);
                last_rejected = false;
            } else {
                h = h_try * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                last_rejected = true;
            }
        }
    }
    Ok(OdeSolution { t0, t1, dim: n, steps })
}

/// Integrate and sample on `grid`.
pub fn solve_ode<F>(rhs: F, x0: &[f64], grid: &TimeGrid, breakpoints: &[f64], tol: f64) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let sol = solve_dense(rhs, x0, grid.t0(), grid.t1(), breakpoints, tol)?;
    sol.sample(grid)
}
