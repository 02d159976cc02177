//! Adaptive embedded Runge-Kutta integration of autonomous systems.
//!
//! Two Dormand-Prince pairs are available: the 8(5,3) pair used by default
//! and the classic 5(4) pair. The integrator is generic over [`OdeState`],
//! which is implemented for the dense complex vectors and matrices used by
//! the rest of the crate and for small fixed-size real states. Output is
//! produced at caller-supplied sample times: the step size is clipped so
//! every sample time is hit exactly, and the accepted step size carries over
//! between samples.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

mod tableau;

use tableau::{Tableau, DOP853, DOPRI5};

/// Default absolute and relative local error tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Vector-space operations needed by the integrator.
pub trait OdeState: Clone {
    fn zeros_like(&self) -> Self;
    fn fill_zero(&mut self);
    /// `self += a * x`
    fn axpy(&mut self, a: f64, x: &Self);
    /// Scaled RMS norm of `err` against `atol + rtol * max(|y0|, |y1|)`.
    fn error_norm(err: &Self, y0: &Self, y1: &Self, atol: f64, rtol: f64) -> f64;
    fn is_finite(&self) -> bool;
}

fn complex_error_norm(err: &[Complex64], y0: &[Complex64], y1: &[Complex64], atol: f64, rtol: f64) -> f64 {
    let n = err.len().max(1) as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let scale = atol + rtol * a.norm().max(b.norm());
            (e.norm() / scale).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

macro_rules! impl_complex_state {
    ($ty:ty) => {
        impl OdeState for $ty {
            fn zeros_like(&self) -> Self {
                Self::zeros(self.nrows(), self.ncols())
            }

            fn fill_zero(&mut self) {
                self.fill(Complex64::new(0.0, 0.0));
            }

            fn axpy(&mut self, a: f64, x: &Self) {
                let a = Complex64::new(a, 0.0);
                for (s, v) in self.iter_mut().zip(x.iter()) {
                    *s += a * v;
                }
            }

            fn error_norm(err: &Self, y0: &Self, y1: &Self, atol: f64, rtol: f64) -> f64 {
                complex_error_norm(err.as_slice(), y0.as_slice(), y1.as_slice(), atol, rtol)
            }

            fn is_finite(&self) -> bool {
                self.iter().all(|z| z.re.is_finite() && z.im.is_finite())
            }
        }
    };
}

impl_complex_state!(DMatrix<Complex64>);

impl OdeState for DVector<Complex64> {
    fn zeros_like(&self) -> Self {
        DVector::zeros(self.len())
    }

    fn fill_zero(&mut self) {
        self.fill(Complex64::new(0.0, 0.0));
    }

    fn axpy(&mut self, a: f64, x: &Self) {
        let a = Complex64::new(a, 0.0);
        for (s, v) in self.iter_mut().zip(x.iter()) {
            *s += a * v;
        }
    }

    fn error_norm(err: &Self, y0: &Self, y1: &Self, atol: f64, rtol: f64) -> f64 {
        complex_error_norm(err.as_slice(), y0.as_slice(), y1.as_slice(), atol, rtol)
    }

    fn is_finite(&self) -> bool {
        self.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl<const D: usize> OdeState for [f64; D] {
    fn zeros_like(&self) -> Self {
        [0.0; D]
    }

    fn fill_zero(&mut self) {
        *self = [0.0; D];
    }

    fn axpy(&mut self, a: f64, x: &Self) {
        for (s, v) in self.iter_mut().zip(x) {
            *s += a * v;
        }
    }

    fn error_norm(err: &Self, y0: &Self, y1: &Self, atol: f64, rtol: f64) -> f64 {
        let sum: f64 = (0..D)
            .map(|i| {
                let scale = atol + rtol * y0[i].abs().max(y1[i].abs());
                (err[i] / scale).powi(2)
            })
            .sum();
        (sum / D.max(1) as f64).sqrt()
    }

    fn is_finite(&self) -> bool {
        self.iter().all(|x| x.is_finite())
    }
}

const SAFETY: f64 = 0.9;

/// Ratio between the per-step tolerance and the requested tolerance. Error
/// accumulates roughly linearly in the number of steps, so the local control
/// runs two decades tighter to keep long-run invariant drift within a small
/// multiple of the requested tolerance.
pub const LOCAL_TOL_FACTOR: f64 = 1e-2;

/// Floor for the per-step tolerance, a few hundred ulps.
const MIN_LOCAL_TOL: f64 = 1e-15;
const MIN_FACTOR: f64 = 0.2;

/// Which embedded pair to step with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Dormand-Prince 8(5,3).
    #[default]
    Dop853,
    /// Dormand-Prince 5(4).
    Dopri5,
}

impl Method {
    fn tableau(self) -> &'static Tableau {
        match self {
            Method::Dop853 => &DOP853,
            Method::Dopri5 => &DOPRI5,
        }
    }
}

/// Step statistics of the last integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
pub struct Integrator {
    pub method: Method,
    pub atol: f64,
    pub rtol: f64,
    pub max_steps: usize,
    /// Upper bound on the step size; `None` means unbounded.
    pub h_max: Option<f64>,
    pub stats: Stats,
}

impl Integrator {
    /// DOP853 targeting accuracy `tol`; see [`LOCAL_TOL_FACTOR`].
    pub fn new(tol: f64) -> Self {
        let local = (tol * LOCAL_TOL_FACTOR).max(MIN_LOCAL_TOL);
        Self { method: Method::Dop853, atol: local, rtol: local, max_steps: 10_000_000, h_max: None, stats: Stats::default() }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = Some(h_max);
        self
    }

    /// Integrate `dy/dt = rhs(y)` from `y0` at `times[0]`, returning the
    /// state at every entry of `times` (which must be non-decreasing).
    pub fn integrate<S, F>(&mut self, rhs: F, y0: S, times: &[f64]) -> Result<Vec<S>>
    where
        S: OdeState,
        F: FnMut(&S, &mut S),
    {
        self.run(rhs, y0, times, None::<fn(&mut S)>)
    }

    /// Like [`Integrator::integrate`], with `post_step` applied to the state
    /// after each accepted step.
    pub fn integrate_with<S, F, P>(&mut self, rhs: F, y0: S, times: &[f64], post_step: P) -> Result<Vec<S>>
    where
        S: OdeState,
        F: FnMut(&S, &mut S),
        P: FnMut(&mut S),
    {
        self.run(rhs, y0, times, Some(post_step))
    }

    fn run<S, F, P>(&mut self, mut rhs: F, y0: S, times: &[f64], mut post_step: Option<P>) -> Result<Vec<S>>
    where
        S: OdeState,
        F: FnMut(&S, &mut S),
        P: FnMut(&mut S),
    {
        self.stats = Stats::default();
        let tab = self.method.tableau();
        let mut out = Vec::with_capacity(times.len());
        let Some(&t0) = times.first() else {
            return Ok(out);
        };
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(crate::error::invalid("times", "sample times must be non-decreasing"));
        }

        let mut y = y0;
        let mut t = t0;
        let stages = tab.b.len();
        // k[0..stages] are the stages, k[stages] holds f(y_new).
        let mut k: Vec<S> = (0..=stages).map(|_| y.zeros_like()).collect();
        rhs(&y, &mut k[0]);
        self.stats.evaluations += 1;
        let mut stage = y.clone();
        let mut y_new = y.clone();
        let mut err_main = y.zeros_like();
        let mut err_aux = y.zeros_like();

        let span = times.last().copied().unwrap_or(t0) - t0;
        let mut h = self.initial_step(&y, &k[0], span);
        out.push(y.clone());

        for &target in &times[1..] {
            while t < target {
                if self.stats.accepted + self.stats.rejected >= self.max_steps {
                    return Err(Error::TooManySteps { t, max_steps: self.max_steps });
                }
                let remaining = target - t;
                // Land exactly on the sample when close.
                let h_step = if h >= remaining * (1.0 - 1e-12) { remaining } else { h };
                if h_step <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
                    return Err(Error::StepUnderflow { t, h: h_step });
                }

                for i in 1..stages {
                    stage.clone_from(&y);
                    for (j, &a) in tab.a[i].iter().enumerate() {
                        if a != 0.0 {
                            stage.axpy(h_step * a, &k[j]);
                        }
                    }
                    rhs(&stage, &mut k[i]);
                }
                y_new.clone_from(&y);
                for (j, &b) in tab.b.iter().enumerate() {
                    if b != 0.0 {
                        y_new.axpy(h_step * b, &k[j]);
                    }
                }
                rhs(&y_new, &mut k[stages]);
                self.stats.evaluations += stages;

                let err_norm = self.error_estimate(tab, &k, h_step, &y, &y_new, &mut err_main, &mut err_aux);

                if !err_norm.is_finite() || !y_new.is_finite() {
                    self.stats.rejected += 1;
                    h = h_step * MIN_FACTOR;
                    continue;
                }

                if err_norm <= 1.0 {
                    self.stats.accepted += 1;
                    t = if h_step == remaining { target } else { t + h_step };
                    std::mem::swap(&mut y, &mut y_new);
                    match post_step.as_mut() {
                        Some(project) => {
                            project(&mut y);
                            rhs(&y, &mut k[0]);
                            self.stats.evaluations += 1;
                        }
                        // FSAL
                        None => k.swap(0, stages),
                    }
                    let factor = if err_norm == 0.0 {
                        tab.max_factor
                    } else {
                        (SAFETY * err_norm.powf(-1.0 / tab.error_exponent)).clamp(MIN_FACTOR, tab.max_factor)
                    };
                    // A step shortened only to hit a sample keeps the old size.
                    let base = if h_step < h { h } else { h_step };
                    h = self.clip(base * factor);
                } else {
                    self.stats.rejected += 1;
                    let factor = (SAFETY * err_norm.powf(-1.0 / tab.error_exponent)).clamp(MIN_FACTOR, 1.0);
                    h = h_step * factor;
                }
            }
            out.push(y.clone());
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn error_estimate<S: OdeState>(
        &self,
        tab: &Tableau,
        k: &[S],
        h: f64,
        y: &S,
        y_new: &S,
        err_main: &mut S,
        err_aux: &mut S,
    ) -> f64 {
        err_main.fill_zero();
        for (j, &e) in tab.e_main.iter().enumerate() {
            if e != 0.0 {
                err_main.axpy(h * e, &k[j]);
            }
        }
        let main = S::error_norm(err_main, y, y_new, self.atol, self.rtol);
        match tab.e_aux {
            None => main,
            Some(weights) => {
                err_aux.fill_zero();
                for (j, &e) in weights.iter().enumerate() {
                    if e != 0.0 {
                        err_aux.axpy(h * e, &k[j]);
                    }
                }
                let aux = S::error_norm(err_aux, y, y_new, self.atol, self.rtol);
                if main == 0.0 && aux == 0.0 {
                    return 0.0;
                }
                // Blend of the 5th and 3rd order estimates used by DOP853.
                main * main / (main * main + 0.01 * aux * aux).sqrt()
            }
        }
    }

    fn clip(&self, h: f64) -> f64 {
        match self.h_max {
            Some(m) => h.min(m),
            None => h,
        }
    }

    fn initial_step<S: OdeState>(&self, y: &S, f: &S, span: f64) -> f64 {
        let zero = y.zeros_like();
        // Size-based guess in the spirit of Hairer's starting step heuristic.
        let d0 = S::error_norm(y, y, &zero, self.atol, self.rtol);
        let d1 = S::error_norm(f, y, &zero, self.atol, self.rtol);
        let guess = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let guess = if span > 0.0 { guess.min(span) } else { guess };
        self.clip(guess.max(1e-12))
    }
}
