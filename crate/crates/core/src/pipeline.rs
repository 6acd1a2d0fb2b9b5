//! End-to-end PDE pricing: mesh, space, initial projection, assembly and
//! time marching for one contract.

use std::sync::Arc;

use crate::assembly::Discretization;
use crate::dg_space::{l2_project_with_breaks, DGSolution, DGSpace};
use crate::error::{invalid, Error, Result};
use crate::mesh::{uniform_mesh_with, Diagonal, Mesh};
use crate::model::{
    boundary_spec_with, payoff, BoundaryOptions, BoundarySpec, DMinusVariance, Domain, Example, HestonCoefficients,
    HestonParams, OptionKind, PdeCoefficients,
};
use crate::presets;
use crate::scalar::Real;
use crate::timestepping::{march_discretization, MarchOptions, MarchOutput, Scheme, TimeGrid};

/// Everything needed to price one contract on a uniform mesh.
#[derive(Clone, Debug)]
pub struct PricingProblem<T> {
    pub params: HestonParams<T>,
    pub domain: Domain<T>,
    pub kind: OptionKind<T>,
    pub example: Example,
    pub boundary: BoundaryOptions,
    pub degree: usize,
    pub n_v: usize,
    pub n_x: usize,
    pub diagonal: Diagonal,
    pub dt: T,
    pub scheme: Scheme,
}

/// Result of a PDE solve at `tau = T`.
#[derive(Clone)]
pub struct PdeSolution<T: Real> {
    pub solution: DGSolution<T>,
    pub discretization: Discretization<T>,
    pub march: MarchOutput<T>,
}

impl<T: Real> PricingProblem<T> {
    /// European call with Dirichlet data on every side (Table 1 set),
    /// 64 x 64 cells and `dt = 0.01`.
    pub fn table1(strike: f64, degree: usize) -> Self {
        Self {
            params: presets::table1_params(strike),
            domain: presets::table1_domain(),
            kind: OptionKind::EuropeanCall,
            example: Example::DirichletCall,
            boundary: BoundaryOptions::default(),
            degree,
            n_v: 64,
            n_x: 64,
            diagonal: Diagonal::default(),
            dt: T::lit(0.01),
            scheme: Scheme::RannacherCN,
        }
    }

    /// Convection-dominated call with `dt = 0.0125`.
    pub fn convection(n_v: usize, n_x: usize, degree: usize) -> Self {
        Self {
            params: presets::table3_params(),
            domain: presets::convection_domain(),
            kind: OptionKind::EuropeanCall,
            example: Example::ConvectionDominatedCall,
            boundary: BoundaryOptions::default(),
            degree,
            n_v,
            n_x,
            diagonal: Diagonal::default(),
            dt: T::lit(0.0125),
            scheme: Scheme::RannacherCN,
        }
    }

    /// Butterfly spread on spacings `dv = 0.016`, `dx = 0.078` with `dt = 0.025`.
    pub fn butterfly(degree: usize) -> Self {
        let domain = presets::exotic_domain();
        let (n_v, n_x) = presets::cells_for_spacing(&domain, 0.016, 0.078);
        Self {
            params: presets::butterfly_params(),
            domain,
            kind: presets::butterfly_kind(),
            example: Example::Butterfly,
            boundary: BoundaryOptions::default(),
            degree,
            n_v,
            n_x,
            diagonal: Diagonal::default(),
            dt: T::lit(0.025),
            scheme: Scheme::RannacherCN,
        }
    }

    /// Digital call with `dt = 0.025`.
    pub fn digital(n_v: usize, n_x: usize, degree: usize, scheme: Scheme) -> Self {
        Self {
            params: presets::table4_params(),
            domain: presets::exotic_domain(),
            kind: OptionKind::DigitalCall,
            example: Example::Digital,
            boundary: BoundaryOptions::default(),
            degree,
            n_v,
            n_x,
            diagonal: Diagonal::default(),
            dt: T::lit(0.025),
            scheme,
        }
    }

    /// Preset by name: `table1`, `convection`, `butterfly` or `digital`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "table1" | "call" | "example1" => Ok(Self::table1(100.0, 1)),
            "convection" | "example2" => Ok(Self::convection(32, 32, 1)),
            "butterfly" | "example3" => Ok(Self::butterfly(1)),
            "digital" | "example4" => Ok(Self::digital(32, 128, 1, Scheme::RannacherCN)),
            other => Err(Error::Config(format!(
                "unknown preset `{other}` (expected table1, convection, butterfly or digital)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.domain.validate()?;
        if !(1..=2).contains(&self.degree) {
            return Err(invalid("degree", format!("supported degrees are 1 and 2, got {}", self.degree)));
        }
        if self.n_v == 0 || self.n_x == 0 {
            return Err(invalid("mesh", "cell counts must be positive"));
        }
        if self.example == Example::ConvectionDominatedCall && self.domain.v_min <= T::zero() {
            return Err(invalid("domain.v_min", "the convection-dominated example needs v_min > 0"));
        }
        TimeGrid::new(self.params.maturity, self.dt)?;
        if let OptionKind::Butterfly { k1, k2, k3 } = self.kind {
            OptionKind::butterfly_checked(k1, k2, k3)?;
        }
        Ok(())
    }

    /// `x = ln(S0 / K)` with `K` the contract's reference strike.
    pub fn spot_x(&self) -> T {
        (self.params.spot / self.kind.reference_strike(&self.params)).ln()
    }

    pub fn coefficients(&self) -> HestonCoefficients<T> {
        HestonCoefficients::new(self.params, &self.domain)
    }

    pub fn boundary_spec(&self) -> Result<BoundarySpec<T>> {
        boundary_spec_with(self.example, &self.params, &self.domain, self.boundary)
    }

    pub fn uniform_mesh(&self) -> Result<Mesh<T>> {
        uniform_mesh_with(&self.domain, self.n_v, self.n_x, self.diagonal)
    }

    pub fn time_grid(&self) -> Result<TimeGrid<T>> {
        TimeGrid::new(self.params.maturity, self.dt)
    }

    /// Projected payoff, integrated piecewise across its kinks.
    pub fn initial_condition(&self, space: &Arc<DGSpace<T>>) -> DGSolution<T> {
        let (kind, p) = (self.kind, self.params);
        l2_project_with_breaks(|z| payoff(&kind, z[1], &p), space, &self.kind.kinks())
    }

    pub fn solve(&self) -> Result<PdeSolution<T>> {
        self.validate()?;
        self.solve_on(Arc::new(self.uniform_mesh()?), MarchOptions::default())
    }

    /// Solves on a given mesh of the problem domain.
    pub fn solve_on(&self, mesh: Arc<Mesh<T>>, opts: MarchOptions) -> Result<PdeSolution<T>> {
        let space = Arc::new(DGSpace::new(mesh, self.degree)?);
        let coeffs: Arc<dyn PdeCoefficients<T>> = Arc::new(self.coefficients());
        let disc = Discretization::new(Arc::clone(&space), coeffs, self.boundary_spec()?)?;
        let u0 = self.initial_condition(&space);
        let (solution, march) = march_discretization(&disc, &u0, &self.time_grid()?, self.scheme, opts)?;
        Ok(PdeSolution {
            solution,
            discretization: disc,
            march,
        })
    }

    /// PDE price at `(v0, ln(S0/K))`.
    pub fn price(&self, sol: &PdeSolution<T>) -> Result<T> {
        sol.solution.eval([self.params.v0, self.spot_x()])
    }

    pub fn with_d_minus(mut self, which: DMinusVariance) -> Self {
        self.boundary.d_minus_variance = which;
        self
    }
}
