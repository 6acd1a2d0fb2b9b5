//! Time marching of `M u' + A u = l(tau)`.
//!
//! All schemes factor one system matrix up front. The Rannacher start takes
//! four implicit half-steps `(M + dt/2 A) u+ = M u + dt/2 l+`, each
//! advancing `dt/2`, and then continues with Crank-Nicolson steps of `dt`
//! using the same factors.

use std::sync::Arc;

use crate::assembly::Discretization;
use crate::dg_space::DGSolution;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sparse::{Factorization, SparseMatrix};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Scheme {
    CrankNicolson,
    #[default]
    RannacherCN,
    BackwardEuler,
}

impl Scheme {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "cn" | "cranknicolson" => Ok(Self::CrankNicolson),
            "rannacher" | "rannachercn" => Ok(Self::RannacherCN),
            "be" | "backwardeuler" | "euler" => Ok(Self::BackwardEuler),
            _ => Err(Error::Config(format!("unknown time scheme `{s}`"))),
        }
    }
}

/// Number of implicit half-steps of the Rannacher start.
pub const RANNACHER_HALF_STEPS: usize = 4;

/// Uniform subdivision of `[0, horizon]`, optionally with a shorter last step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid<T> {
    pub horizon: T,
    pub step: T,
    /// Number of full steps.
    pub steps: usize,
    /// Length of a trailing partial step, zero when `step` divides `horizon`.
    pub remainder: T,
}

impl<T: Real> TimeGrid<T> {
    /// Requires `step` to divide `horizon` up to `1e-12` relative.
    pub fn new(horizon: T, step: T) -> Result<Self> {
        let grid = Self::with_remainder(horizon, step)?;
        if grid.remainder > T::zero() {
            return Err(Error::NonDivisibleHorizon {
                horizon: horizon.as_f64(),
                step: step.as_f64(),
            });
        }
        Ok(grid)
    }

    /// Full steps of `step` followed by one shorter step when needed.
    pub fn with_remainder(horizon: T, step: T) -> Result<Self> {
        if !(step > T::zero()) || !step.is_finite() {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: format!("time step must be positive, got {step}"),
            });
        }
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return Err(Error::InvalidParameter {
                name: "maturity",
                reason: format!("horizon must be positive, got {horizon}"),
            });
        }
        let ratio = (horizon / step).as_f64();
        let nearest = ratio.round();
        // Single precision cannot resolve 1e-12; judge it at its own round-off.
        let tol = ratio.max(1.0) * 1e-12_f64.max(4.0 * T::epsilon().as_f64());
        let (steps, remainder) = if (ratio - nearest).abs() <= tol {
            (nearest as usize, T::zero())
        } else {
            let full = ratio.floor() as usize;
            (full, horizon - T::from_index(full) * step)
        };
        Ok(Self {
            horizon,
            step,
            steps,
            remainder,
        })
    }

    pub fn divisible(&self) -> bool {
        self.remainder == T::zero()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct MarchOptions {
    /// Store the iterate every this many steps (startup half-steps count).
    pub snapshot_every: Option<usize>,
    /// Refactor the system matrix at every step instead of reusing it.
    pub refactor_each_step: bool,
}

#[derive(Clone, Debug)]
pub struct MarchOutput<T> {
    pub solution: Vec<T>,
    pub tau: T,
    /// `(tau, iterate)` pairs including the initial and final states when
    /// snapshots were requested.
    pub snapshots: Vec<(T, Vec<T>)>,
    pub factorizations: usize,
    pub solves: usize,
}

/// One kind of step of a scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Step<T> {
    /// `(M + h/2 A) u+ = M u + h/2 l(tau + h/2)`, advancing `h/2`.
    Half(T),
    /// Crank-Nicolson with step `h`.
    Trapezoidal(T),
    /// Backward Euler with step `h`.
    Implicit(T),
}

impl<T: Real> Step<T> {
    /// `(lhs scale of A, advance)`.
    fn shape(self) -> (T, T) {
        let half = T::lit(0.5);
        match self {
            Step::Half(h) => (half * h, half * h),
            Step::Trapezoidal(h) => (half * h, h),
            Step::Implicit(h) => (h, h),
        }
    }
}

fn plan<T: Real>(grid: &TimeGrid<T>, scheme: Scheme) -> Result<Vec<Step<T>>> {
    let dt = grid.step;
    let mut steps = Vec::with_capacity(grid.steps + RANNACHER_HALF_STEPS + 1);
    match scheme {
        Scheme::CrankNicolson => steps.extend(std::iter::repeat_n(Step::Trapezoidal(dt), grid.steps)),
        Scheme::BackwardEuler => steps.extend(std::iter::repeat_n(Step::Implicit(dt), grid.steps)),
        Scheme::RannacherCN => {
            if grid.steps < 2 {
                return Err(Error::HorizonTooShort(format!(
                    "the Rannacher start covers 2 dt but the horizon holds {} full steps",
                    grid.steps
                )));
            }
            steps.extend(std::iter::repeat_n(Step::Half(dt), RANNACHER_HALF_STEPS));
            steps.extend(std::iter::repeat_n(Step::Trapezoidal(dt), grid.steps - 2));
        }
    }
    if grid.remainder > T::zero() {
        let r = grid.remainder;
        steps.push(match scheme {
            Scheme::BackwardEuler => Step::Implicit(r),
            _ => Step::Trapezoidal(r),
        });
    }
    Ok(steps)
}

/// Marches `u0` from `tau = 0` to the grid horizon.
pub fn march<T: Real>(
    m: &SparseMatrix<T>,
    a: &SparseMatrix<T>,
    load: &dyn Fn(T) -> Vec<T>,
    u0: &[T],
    grid: &TimeGrid<T>,
    scheme: Scheme,
    opts: MarchOptions,
) -> Result<MarchOutput<T>> {
    let n = m.dim();
    if a.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.dim() });
    }
    if u0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: u0.len() });
    }
    let steps = plan(grid, scheme)?;
    let mut out = MarchOutput {
        solution: u0.to_vec(),
        tau: T::zero(),
        snapshots: Vec::new(),
        factorizations: 0,
        solves: 0,
    };
    if opts.snapshot_every.is_some() {
        out.snapshots.push((T::zero(), u0.to_vec()));
    }
    let mut current: Option<(T, Factorization<T>)> = None;
    let mut load_now = load(T::zero());
    let half = T::lit(0.5);
    for (count, step) in steps.iter().enumerate() {
        let (scale, advance) = step.shape();
        let stale = current.as_ref().is_none_or(|(s, _)| *s != scale);
        if stale || opts.refactor_each_step {
            let sys = m.add_scaled(a, scale)?;
            current = Some((scale, Factorization::new(&sys)?));
            out.factorizations += 1;
        }
        let tau_next = if count + 1 == steps.len() { grid.horizon } else { out.tau + advance };
        let load_next = load(tau_next);
        let u = &out.solution;
        let mut rhs = m.mul_vec(u);
        match step {
            Step::Half(_) | Step::Implicit(_) => {
                for (r, l) in rhs.iter_mut().zip(&load_next) {
                    *r += advance * *l;
                }
            }
            Step::Trapezoidal(_) => {
                let au = a.mul_vec(u);
                for i in 0..n {
                    rhs[i] += -scale * au[i] + half * advance * (load_now[i] + load_next[i]);
                }
            }
        }
        let (_, lu) = current.as_ref().expect("factorization present");
        lu.solve_in_place(&mut rhs);
        out.solves += 1;
        out.solution = rhs;
        out.tau = tau_next;
        load_now = load_next;
        if let Some(every) = opts.snapshot_every {
            if (count + 1) % every.max(1) == 0 || count + 1 == steps.len() {
                out.snapshots.push((out.tau, out.solution.clone()));
            }
        }
    }
    Ok(out)
}

/// Marches a [`Discretization`] from the initial coefficients `u0`.
pub fn march_discretization<T: Real>(
    disc: &Discretization<T>,
    u0: &DGSolution<T>,
    grid: &TimeGrid<T>,
    scheme: Scheme,
    opts: MarchOptions,
) -> Result<(DGSolution<T>, MarchOutput<T>)> {
    if !Arc::ptr_eq(u0.space(), disc.space()) {
        return Err(Error::MismatchedSpaces);
    }
    let zero = vec![T::zero(); disc.space().num_dofs()];
    let out = if disc.load_is_zero() {
        march(disc.mass(), disc.stiffness(), &|_| zero.clone(), u0.coeffs(), grid, scheme, opts)?
    } else {
        march(disc.mass(), disc.stiffness(), &|tau| disc.load(tau), u0.coeffs(), grid, scheme, opts)?
    };
    let sol = DGSolution::new(Arc::clone(disc.space()), out.solution.clone(), out.tau)?;
    Ok((sol, out))
}
