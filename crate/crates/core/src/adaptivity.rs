//! Residual error indicators, Dörfler marking and the
//! SOLVE -> ESTIMATE -> MARK -> REFINE loop that builds a fixed mesh from the
//! first time step.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::assembly::{edge_frame, lerp, Discretization};
use crate::dg_space::{DGSolution, DGSpace};
use crate::error::{invalid, Error, Result};
use crate::mesh::Mesh;
use crate::model::{BoundaryKind, PdeCoefficients};
use crate::pipeline::PricingProblem;
use crate::quadrature::{LineRule, TriangleRule};
use crate::scalar::{dot, mat_vec, Real, Vec2};
use crate::timestepping::{march_discretization, MarchOptions, Scheme, TimeGrid};

/// Squared indicator components per element.
#[derive(Clone, Debug)]
pub struct ErrorIndicators<T> {
    /// `eta_R^2`.
    pub residual: Vec<T>,
    /// `eta_E0^2`, half of every interior edge of the element.
    pub interior: Vec<T>,
    /// `eta_ED^2`.
    pub dirichlet: Vec<T>,
    /// `eta_EN^2`.
    pub neumann: Vec<T>,
    /// `rho_K`.
    pub weight: Vec<T>,
}

impl<T: Real> ErrorIndicators<T> {
    pub fn len(&self) -> usize {
        self.residual.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residual.is_empty()
    }

    /// `eta_K^2`.
    pub fn local_squared(&self, k: usize) -> T {
        self.residual[k] + self.interior[k] + self.dirichlet[k] + self.neumann[k]
    }

    pub fn local(&self, k: usize) -> T {
        self.local_squared(k).sqrt()
    }

    /// `eta = (sum eta_K^2)^(1/2)`.
    pub fn total(&self) -> T {
        (0..self.len()).map(|k| self.local_squared(k)).sum::<T>().sqrt()
    }

    /// CSV with columns `element,eta,residual,interior,dirichlet,neumann,weight`;
    /// the components are the unsquared `eta_R`, `eta_E0`, ...
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "element,eta,residual,interior,dirichlet,neumann,weight")?;
        for k in 0..self.len() {
            writeln!(
                w,
                "{k},{:e},{:e},{:e},{:e},{:e},{:e}",
                self.local(k),
                self.residual[k].sqrt(),
                self.interior[k].sqrt(),
                self.dirichlet[k].sqrt(),
                self.neumann[k].sqrt(),
                self.weight[k]
            )?;
        }
        Ok(())
    }
}

/// `min(h d0^{-1/2}, r^{-1/2})`, the second argument dropped when `r <= 0`.
fn robust_weight<T: Real>(h: T, d0: T, r: T) -> T {
    let diffusive = h / d0.sqrt();
    if r > T::zero() {
        diffusive.min(T::one() / r.sqrt())
    } else {
        diffusive
    }
}

/// Indicators of the first step `u0 -> u1` of length `dt1`.
pub fn estimate<T: Real>(disc: &Discretization<T>, u1: &DGSolution<T>, u0: &DGSolution<T>, dt1: T) -> Result<ErrorIndicators<T>> {
    let space = disc.space();
    if !Arc::ptr_eq(u1.space(), space) || !Arc::ptr_eq(u0.space(), space) {
        return Err(Error::MismatchedSpaces);
    }
    if !(dt1 > T::zero()) {
        return Err(invalid("dt1", format!("must be > 0, got {dt1}")));
    }
    let k = space.degree();
    let vol = TriangleRule::<T>::with_degree(2 * k + 3);
    let line = LineRule::<T>::with_degree(2 * k + 5);
    let tau = u1.tau;
    let rows: Vec<[T; 5]> = (0..space.num_elements())
        .into_par_iter()
        .map(|elem| element_indicators(disc, u1, u0, dt1, tau, elem, &vol, &line))
        .collect::<Result<_>>()?;
    let mut out = ErrorIndicators {
        residual: Vec::with_capacity(rows.len()),
        interior: Vec::with_capacity(rows.len()),
        dirichlet: Vec::with_capacity(rows.len()),
        neumann: Vec::with_capacity(rows.len()),
        weight: Vec::with_capacity(rows.len()),
    };
    for r in rows {
        out.residual.push(r[0]);
        out.interior.push(r[1]);
        out.dirichlet.push(r[2]);
        out.neumann.push(r[3]);
        out.weight.push(r[4]);
    }
    Ok(out)
}

/// Divergence of `A grad u` inside `elem` at `z`.
fn flux_divergence<T: Real>(
    coeffs: &dyn PdeCoefficients<T>,
    u: &DGSolution<T>,
    hess: &[crate::scalar::Mat2<T>],
    elem: usize,
    z: Vec2<T>,
) -> T {
    let a = coeffs.diffusion(z);
    let grad = u.gradient_in(elem, z);
    let local = u.local(elem);
    let mut second = T::zero();
    for (c, h) in local.iter().zip(hess) {
        second += *c * (a[0][0] * h[0][0] + a[0][1] * h[0][1] + a[1][0] * h[1][0] + a[1][1] * h[1][1]);
    }
    dot(coeffs.diffusion_divergence(z), grad) + second
}

#[allow(clippy::too_many_arguments)]
fn element_indicators<T: Real>(
    disc: &Discretization<T>,
    u1: &DGSolution<T>,
    u0: &DGSolution<T>,
    dt1: T,
    tau: T,
    elem: usize,
    vol: &TriangleRule<T>,
    line: &LineRule<T>,
) -> Result<[T; 5]> {
    let space: &DGSpace<T> = disc.space();
    let mesh = space.mesh();
    let coeffs = disc.coeffs();
    let spec = disc.spec();
    let penalty = disc.penalty();
    let map = space.map(elem);
    let centroid = map.to_physical([T::lit(1.0 / 3.0), T::lit(1.0 / 3.0)]);
    let (d0, _) = coeffs.ellipticity_bounds(centroid);
    let r = coeffs.reaction(centroid);
    let rho = robust_weight(mesh.diameter(elem), d0, r);

    let hess = space.hessians(elem);
    let hess = &hess[..space.local_dim()];
    let mut cell = T::zero();
    for (xi, w) in vol.points.iter().zip(&vol.weights) {
        let z = map.to_physical(*xi);
        let u = u1.eval_in(elem, z);
        let mut res = (u - u0.eval_in(elem, z)) / dt1 - flux_divergence(coeffs, u1, hess, elem, z)
            + dot(coeffs.convection(z), u1.gradient_in(elem, z))
            + coeffs.reaction(z) * u;
        if coeffs.has_source() {
            res -= coeffs.source(z, tau);
        }
        cell += *w * map.det * res * res;
    }
    let cell = rho * rho * cell;

    let half = T::lit(0.5);
    let (mut interior, mut dirichlet, mut neumann) = (T::zero(), T::zero(), T::zero());
    for (local, &e) in mesh.triangle_edges(elem).iter().enumerate() {
        let edge = &mesh.edges()[e];
        let (a, b, n, h) = edge_frame(mesh, elem, local);
        let (d0e, r_e) = (penalty.d0[e], coeffs.reaction(lerp(a, b, half)));
        let rho_e = robust_weight(h, d0e, r_e);
        let b_mid = coeffs.convection(lerp(a, b, half));
        let omega = penalty.sigma[e] / h + r_e.max(T::zero()) * h + h * dot(b_mid, b_mid) / d0e;
        let neighbour = mesh.neighbor(elem, local);
        let kind = match (neighbour, edge.side) {
            (Some(_), _) => None,
            (None, Some(side)) => Some((side, spec.kind(side))),
            (None, None) => return Err(Error::InconsistentBoundary(format!("boundary edge {e} has no side tag"))),
        };
        let mut flux_jump = T::zero();
        let mut value_jump = T::zero();
        for (s, w) in line.points.iter().zip(&line.weights) {
            let z = lerp(a, b, *s);
            let wh = *w * h;
            let a_z = coeffs.diffusion(z);
            let flux = dot(mat_vec(&a_z, u1.gradient_in(elem, z)), n);
            let u = u1.eval_in(elem, z);
            match (neighbour, kind) {
                (Some(other), _) => {
                    let jf = flux - dot(mat_vec(&a_z, u1.gradient_in(other, z)), n);
                    let ju = u - u1.eval_in(other, z);
                    flux_jump += wh * jf * jf;
                    value_jump += wh * ju * ju;
                }
                (None, Some((side, BoundaryKind::Dirichlet))) => {
                    let ju = spec.eval(side, tau, z) - u;
                    value_jump += wh * ju * ju;
                }
                (None, Some((side, BoundaryKind::Neumann))) => {
                    let jf = flux - spec.eval(side, tau, z);
                    flux_jump += wh * jf * jf;
                }
                (None, None) => unreachable!(),
            }
        }
        let flux_weight = rho_e / d0e.sqrt();
        match kind {
            None => interior += half * (flux_weight * flux_jump + omega * value_jump),
            Some((_, BoundaryKind::Dirichlet)) => dirichlet += omega * value_jump,
            Some((_, BoundaryKind::Neumann)) => neumann += flux_weight * flux_jump,
        }
    }
    Ok([cell, interior, dirichlet, neumann, rho])
}

/// Smallest set whose squared indicators sum to at least
/// `theta^2 eta^2`, taken in decreasing order of `eta_K` with ties broken by
/// ascending element id. Returned sorted by id.
pub fn mark<T: Real>(ind: &ErrorIndicators<T>, theta: T) -> Result<Vec<usize>> {
    if !(theta > T::zero() && theta < T::one()) {
        return Err(invalid("theta_mark", format!("must lie in (0, 1), got {theta}")));
    }
    let eta2: Vec<T> = (0..ind.len()).map(|k| ind.local_squared(k)).collect();
    let total: T = eta2.iter().copied().sum();
    let target = theta * theta * total;
    let mut order: Vec<usize> = (0..eta2.len()).collect();
    order.sort_by(|&a, &b| eta2[b].partial_cmp(&eta2[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let mut acc = T::zero();
    let mut marked = Vec::new();
    for k in order {
        if acc >= target || !(eta2[k] > T::zero()) {
            break;
        }
        acc += eta2[k];
        marked.push(k);
    }
    marked.sort_unstable();
    Ok(marked)
}

/// Controls for [`adapt_loop`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptOptions<T> {
    /// Stop once `eta < tolerance`.
    pub tolerance: T,
    /// Maximum number of refinements.
    pub max_rounds: usize,
    pub theta_mark: T,
    /// Stop before a refinement that would exceed this many triangles.
    pub max_elements: usize,
}

impl<T: Real> Default for AdaptOptions<T> {
    fn default() -> Self {
        Self {
            tolerance: T::lit(1e-2),
            max_rounds: 12,
            theta_mark: T::lit(0.5),
            max_elements: 200_000,
        }
    }
}

/// One pass of the loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptRound<T> {
    pub elements: usize,
    pub dofs: usize,
    pub eta: T,
    pub marked: usize,
}

pub struct AdaptOutcome<T: Real> {
    pub mesh: Mesh<T>,
    /// Indicators on `mesh`.
    pub indicators: ErrorIndicators<T>,
    pub rounds: Vec<AdaptRound<T>>,
    /// `eta < tolerance` on the returned mesh.
    pub converged: bool,
}

/// First step of `problem.scheme` from the projected payoff: the first
/// backward Euler half step for Rannacher smoothing. Returns `(u1, u0, dt1)`.
pub fn first_step<T: Real>(problem: &PricingProblem<T>, disc: &Discretization<T>) -> Result<(DGSolution<T>, DGSolution<T>, T)> {
    let (scheme, dt1) = match problem.scheme {
        Scheme::RannacherCN => (Scheme::BackwardEuler, problem.dt * T::lit(0.5)),
        s => (s, problem.dt),
    };
    let u0 = problem.initial_condition(disc.space());
    let grid = TimeGrid::new(dt1, dt1)?;
    let (u1, _) = march_discretization(disc, &u0, &grid, scheme, MarchOptions::default())?;
    Ok((u1, u0, dt1))
}

/// SOLVE -> ESTIMATE -> MARK -> REFINE from `initial` until `eta < tolerance`
/// or `max_rounds` refinements.
pub fn adapt_loop<T: Real>(problem: &PricingProblem<T>, initial: Mesh<T>, opts: &AdaptOptions<T>) -> Result<AdaptOutcome<T>> {
    if !(opts.tolerance > T::zero()) {
        return Err(invalid("tolerance", format!("must be > 0, got {}", opts.tolerance)));
    }
    problem.validate()?;
    let mut mesh = initial;
    let mut rounds = Vec::new();
    let coeffs: Arc<dyn PdeCoefficients<T>> = Arc::new(problem.coefficients());
    loop {
        let space = Arc::new(DGSpace::new(Arc::new(mesh.clone()), problem.degree)?);
        let disc = Discretization::new(Arc::clone(&space), Arc::clone(&coeffs), problem.boundary_spec()?)?;
        let (u1, u0, dt1) = first_step(problem, &disc)?;
        let indicators = estimate(&disc, &u1, &u0, dt1)?;
        let eta = indicators.total();
        let converged = eta < opts.tolerance;
        let mut round = AdaptRound {
            elements: mesh.num_triangles(),
            dofs: space.num_dofs(),
            eta,
            marked: 0,
        };
        if converged || rounds.len() >= opts.max_rounds {
            rounds.push(round);
            return Ok(AdaptOutcome {
                mesh,
                indicators,
                rounds,
                converged,
            });
        }
        let marked = mark(&indicators, opts.theta_mark)?;
        let refined = mesh.refine(&marked)?;
        if refined.num_triangles() > opts.max_elements {
            rounds.push(round);
            return Ok(AdaptOutcome {
                mesh,
                indicators,
                rounds,
                converged,
            });
        }
        round.marked = marked.len();
        rounds.push(round);
        mesh = refined;
    }
}
