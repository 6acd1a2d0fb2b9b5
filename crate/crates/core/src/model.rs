//! Heston model data, PDE coefficients, payoffs and boundary-condition sets.
//!
//! The pricing PDE is written in the time-to-maturity variable `tau` and the
//! log-moneyness `x = ln(S/K)` on the `(v, x)` rectangle:
//!
//! ```text
//! U_tau - div(A grad U) + b . grad U + r_d U = 0
//! A(v) = v/2 [[sigma^2, rho sigma], [rho sigma, 1]]
//! b(v) = v (kappa, 1/2) + (-kappa theta + sigma^2/2, -(r_d - r_f) + rho sigma/2)
//! ```

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::scalar::{sym_eigenvalues, Mat2, Real, Vec2};

/// Model constants and contract data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HestonParams<T> {
    /// Mean reversion rate of the variance.
    pub kappa: T,
    /// Long-run variance.
    pub theta: T,
    /// Volatility of the variance.
    pub sigma: T,
    /// Correlation between the asset and variance drivers.
    pub rho: T,
    /// Domestic short rate.
    pub r_d: T,
    /// Foreign short rate (dividend yield for equities).
    pub r_f: T,
    /// Maturity in years.
    pub maturity: T,
    pub strike: T,
    pub spot: T,
    /// Initial variance.
    pub v0: T,
}

impl<T: Real> HestonParams<T> {
    /// Checks the parameter invariants required by the PDE solver.
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("kappa", self.kappa),
            ("theta", self.theta),
            ("sigma", self.sigma),
            ("rho", self.rho),
            ("r_d", self.r_d),
            ("r_f", self.r_f),
            ("T", self.maturity),
            ("K", self.strike),
            ("S0", self.spot),
            ("v0", self.v0),
        ];
        for (name, value) in all {
            if !value.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        let positive = [
            ("sigma", self.sigma),
            ("kappa", self.kappa),
            ("theta", self.theta),
            ("T", self.maturity),
            ("K", self.strike),
            ("S0", self.spot),
        ];
        for (name, value) in positive {
            if value <= T::zero() {
                return Err(invalid(name, format!("must be > 0, got {value}")));
            }
        }
        if self.v0 < T::zero() {
            return Err(invalid("v0", format!("must be >= 0, got {}", self.v0)));
        }
        if self.rho.abs() >= T::one() {
            return Err(invalid(
                "rho",
                format!("must lie strictly inside (-1, 1), got {}", self.rho),
            ));
        }
        Ok(())
    }

    /// Log-moneyness of the spot, `ln(S0/K)`.
    pub fn spot_log_moneyness(&self) -> T {
        (self.spot / self.strike).ln()
    }
}

/// Truncated computational rectangle `(v_min, v_max) x (x_min, x_max)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain<T> {
    pub v_min: T,
    pub v_max: T,
    pub x_min: T,
    pub x_max: T,
}

impl<T: Real> Domain<T> {
    pub fn new(v_min: T, v_max: T, x_min: T, x_max: T) -> Result<Self> {
        let d = Self {
            v_min,
            v_max,
            x_min,
            x_max,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.v_min, self.v_max, self.x_min, self.x_max]
            .iter()
            .all(|c| c.is_finite());
        if !finite {
            return Err(Error::DegenerateDomain("non-finite bound".into()));
        }
        if !(self.v_min < self.v_max) || !(self.x_min < self.x_max) {
            return Err(Error::DegenerateDomain(format!(
                "empty rectangle ({}, {}) x ({}, {})",
                self.v_min, self.v_max, self.x_min, self.x_max
            )));
        }
        if self.v_min < T::zero() {
            return Err(Error::DegenerateDomain(format!(
                "v_min = {} is negative",
                self.v_min
            )));
        }
        Ok(())
    }

    pub fn area(&self) -> T {
        (self.v_max - self.v_min) * (self.x_max - self.x_min)
    }

    pub fn contains(&self, z: Vec2<T>, tol: T) -> bool {
        z[0] >= self.v_min - tol
            && z[0] <= self.v_max + tol
            && z[1] >= self.x_min - tol
            && z[1] <= self.x_max + tol
    }
}

/// Sides of the computational rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    VMin,
    VMax,
    XMin,
    XMax,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::VMin, Side::VMax, Side::XMin, Side::XMax];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Outward unit normal of the side.
    pub fn normal<T: Real>(self) -> Vec2<T> {
        let (o, z) = (T::one(), T::zero());
        match self {
            Side::VMin => [-o, z],
            Side::VMax => [o, z],
            Side::XMin => [z, -o],
            Side::XMax => [z, o],
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Side::VMin => "v_min",
            Side::VMax => "v_max",
            Side::XMin => "x_min",
            Side::XMax => "x_max",
        };
        f.write_str(s)
    }
}

/// Contract type. Strikes of the butterfly are absolute levels; its
/// log-moneyness is measured against the middle strike.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OptionKind<T> {
    EuropeanCall,
    EuropeanPut,
    Butterfly { k1: T, k2: T, k3: T },
    DigitalCall,
}

impl<T: Real> OptionKind<T> {
    /// Butterfly with the middle strike placed at the midpoint.
    pub fn butterfly(k1: T, k3: T) -> Result<Self> {
        Self::butterfly_checked(k1, T::lit(0.5) * (k1 + k3), k3)
    }

    /// Butterfly from three strikes; the middle one must be the midpoint.
    pub fn butterfly_checked(k1: T, k2: T, k3: T) -> Result<Self> {
        if !(T::zero() < k1 && k1 < k2 && k2 < k3) {
            return Err(invalid("butterfly", "strikes must satisfy 0 < K1 < K2 < K3"));
        }
        let mid = T::lit(0.5) * (k1 + k3);
        if (k2 - mid).abs() > T::lit(4.0) * T::epsilon() * k3 {
            return Err(invalid(
                "butterfly",
                format!("K2 = {k2} is not the midpoint {mid} of K1 and K3"),
            ));
        }
        Ok(OptionKind::Butterfly { k1, k2, k3 })
    }

    /// Reference level `K` such that `x = ln(S/K)`.
    pub fn reference_strike(&self, p: &HestonParams<T>) -> T {
        match *self {
            OptionKind::Butterfly { k2, .. } => k2,
            _ => p.strike,
        }
    }

    /// Log-moneyness locations where the payoff has a kink or jump.
    pub fn kinks(&self) -> Vec<T> {
        match *self {
            OptionKind::Butterfly { k1, k2, k3 } => vec![(k1 / k2).ln(), T::zero(), (k3 / k2).ln()],
            _ => vec![T::zero()],
        }
    }
}

/// Terminal payoff as a function of log-moneyness. Independent of `v`.
pub fn payoff<T: Real>(kind: &OptionKind<T>, x: T, p: &HestonParams<T>) -> T {
    let zero = T::zero();
    match *kind {
        OptionKind::EuropeanCall => (p.strike * x.exp() - p.strike).max(zero),
        OptionKind::EuropeanPut => (p.strike - p.strike * x.exp()).max(zero),
        OptionKind::Butterfly { k1, k2, k3 } => {
            let s = k2 * x.exp();
            let two = T::lit(2.0);
            // Clamp the tiny negative rounding residue outside (K1, K3).
            ((s - k1).max(zero) - two * (s - k2).max(zero) + (s - k3).max(zero)).max(zero)
        }
        OptionKind::DigitalCall => {
            if x > zero {
                T::one()
            } else {
                zero
            }
        }
    }
}

/// Diffusion matrix `A(v)`.
pub fn diffusion_matrix<T: Real>(v: T, p: &HestonParams<T>) -> Result<Mat2<T>> {
    if !(v >= T::zero()) {
        return Err(invalid("v", format!("variance must be >= 0, got {v}")));
    }
    Ok(heston_diffusion(v, p))
}

#[inline]
fn heston_diffusion<T: Real>(v: T, p: &HestonParams<T>) -> Mat2<T> {
    let half_v = T::lit(0.5) * v;
    let off = half_v * p.rho * p.sigma;
    [[half_v * p.sigma * p.sigma, off], [off, half_v]]
}

/// Convection field `b(v)`.
pub fn convection_field<T: Real>(v: T, p: &HestonParams<T>) -> Result<Vec2<T>> {
    if !(v >= T::zero()) {
        return Err(invalid("v", format!("variance must be >= 0, got {v}")));
    }
    Ok(heston_convection(v, p))
}

#[inline]
fn heston_convection<T: Real>(v: T, p: &HestonParams<T>) -> Vec2<T> {
    let half = T::lit(0.5);
    [
        v * p.kappa - p.kappa * p.theta + half * p.sigma * p.sigma,
        half * v - (p.r_d - p.r_f) + half * p.rho * p.sigma,
    ]
}

/// `2 kappa theta >= sigma^2`.
pub fn feller_holds<T: Real>(p: &HestonParams<T>) -> bool {
    T::lit(2.0) * p.kappa * p.theta >= p.sigma * p.sigma
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf<T: Real>(x: T) -> T {
    let x = x.as_f64();
    T::lit(0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2))
}

/// Coefficients of a stationary diffusion-convection-reaction operator
/// `-div(A grad u) + b . grad u + c u` with an optional source term.
pub trait PdeCoefficients<T: Real>: Send + Sync {
    fn diffusion(&self, z: Vec2<T>) -> Mat2<T>;

    /// Column-wise divergence of `A`: component `j` is `sum_i d_i A_ij`.
    fn diffusion_divergence(&self, z: Vec2<T>) -> Vec2<T>;

    fn convection(&self, z: Vec2<T>) -> Vec2<T>;

    fn reaction(&self, z: Vec2<T>) -> T;

    /// Right-hand side `f(z, tau)`; zero for the pricing problems.
    fn source(&self, _z: Vec2<T>, _tau: T) -> T {
        T::zero()
    }

    fn has_source(&self) -> bool {
        false
    }

    /// Ellipticity bounds `(d0, d1)` used by the penalty and the estimator.
    fn ellipticity_bounds(&self, z: Vec2<T>) -> (T, T) {
        sym_eigenvalues(&self.diffusion(z))
    }
}

/// Heston coefficients. Ellipticity bounds evaluate `A` with `v` floored at
/// `max(v_min, 1e-8)` since `A(0)` vanishes.
#[derive(Clone, Copy, Debug)]
pub struct HestonCoefficients<T> {
    pub params: HestonParams<T>,
    pub variance_floor: T,
}

impl<T: Real> HestonCoefficients<T> {
    pub fn new(params: HestonParams<T>, domain: &Domain<T>) -> Self {
        Self {
            params,
            variance_floor: domain.v_min.max(T::lit(1e-8)),
        }
    }
}

impl<T: Real> PdeCoefficients<T> for HestonCoefficients<T> {
    fn diffusion(&self, z: Vec2<T>) -> Mat2<T> {
        heston_diffusion(z[0].max(T::zero()), &self.params)
    }

    fn diffusion_divergence(&self, _z: Vec2<T>) -> Vec2<T> {
        let half = T::lit(0.5);
        let p = &self.params;
        [half * p.sigma * p.sigma, half * p.rho * p.sigma]
    }

    fn convection(&self, z: Vec2<T>) -> Vec2<T> {
        heston_convection(z[0].max(T::zero()), &self.params)
    }

    fn reaction(&self, _z: Vec2<T>) -> T {
        self.params.r_d
    }

    fn ellipticity_bounds(&self, z: Vec2<T>) -> (T, T) {
        let v = z[0].max(self.variance_floor);
        sym_eigenvalues(&heston_diffusion(v, &self.params))
    }
}

/// Constant-coefficient operator, used for manufactured solutions and for
/// the Heston operator frozen at a fixed variance.
#[derive(Clone)]
pub struct ConstantCoefficients<T> {
    pub diffusion: Mat2<T>,
    pub convection: Vec2<T>,
    pub reaction: T,
    pub source: Option<Arc<dyn Fn(Vec2<T>, T) -> T + Send + Sync>>,
}

impl<T: Real> ConstantCoefficients<T> {
    pub fn new(diffusion: Mat2<T>, convection: Vec2<T>, reaction: T) -> Self {
        Self {
            diffusion,
            convection,
            reaction,
            source: None,
        }
    }

    /// Heston diffusion, convection and reaction frozen at variance `v`.
    pub fn frozen_heston(p: &HestonParams<T>, v: T) -> Self {
        Self::new(heston_diffusion(v, p), heston_convection(v, p), p.r_d)
    }

    pub fn with_source(mut self, f: impl Fn(Vec2<T>, T) -> T + Send + Sync + 'static) -> Self {
        self.source = Some(Arc::new(f));
        self
    }
}

impl<T: Real> PdeCoefficients<T> for ConstantCoefficients<T> {
    fn diffusion(&self, _z: Vec2<T>) -> Mat2<T> {
        self.diffusion
    }

    fn diffusion_divergence(&self, _z: Vec2<T>) -> Vec2<T> {
        [T::zero(), T::zero()]
    }

    fn convection(&self, _z: Vec2<T>) -> Vec2<T> {
        self.convection
    }

    fn reaction(&self, _z: Vec2<T>) -> T {
        self.reaction
    }

    fn source(&self, z: Vec2<T>, tau: T) -> T {
        self.source.as_ref().map_or(T::zero(), |f| f(z, tau))
    }

    fn has_source(&self) -> bool {
        self.source.is_some()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

/// Boundary value `g(tau, z)`. For Neumann sides it is the conormal flux
/// `A grad U . n`.
pub type BoundaryFn<T> = Arc<dyn Fn(T, Vec2<T>) -> T + Send + Sync>;

#[derive(Clone)]
pub struct SideCondition<T> {
    pub kind: BoundaryKind,
    pub value: BoundaryFn<T>,
    /// True when the data vanishes identically; lets assembly skip the side.
    pub homogeneous: bool,
}

impl<T: Real> SideCondition<T> {
    pub fn dirichlet(f: impl Fn(T, Vec2<T>) -> T + Send + Sync + 'static) -> Self {
        Self {
            kind: BoundaryKind::Dirichlet,
            value: Arc::new(f),
            homogeneous: false,
        }
    }

    pub fn neumann(f: impl Fn(T, Vec2<T>) -> T + Send + Sync + 'static) -> Self {
        Self {
            kind: BoundaryKind::Neumann,
            value: Arc::new(f),
            homogeneous: false,
        }
    }

    pub fn homogeneous(kind: BoundaryKind) -> Self {
        Self {
            kind,
            value: Arc::new(|_, _| T::zero()),
            homogeneous: true,
        }
    }

    pub fn eval(&self, tau: T, z: Vec2<T>) -> T {
        (self.value)(tau, z)
    }
}

impl<T> fmt::Debug for SideCondition<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SideCondition")
            .field("kind", &self.kind)
            .field("homogeneous", &self.homogeneous)
            .finish()
    }
}

/// One condition per rectangle side, indexed by [`Side`].
#[derive(Clone, Debug)]
pub struct BoundarySpec<T> {
    sides: [SideCondition<T>; 4],
}

impl<T: Real> BoundarySpec<T> {
    /// Sides in [`Side::ALL`] order.
    pub fn new(sides: [SideCondition<T>; 4]) -> Self {
        Self { sides }
    }

    pub fn side(&self, side: Side) -> &SideCondition<T> {
        &self.sides[side.index()]
    }

    pub fn kind(&self, side: Side) -> BoundaryKind {
        self.side(side).kind
    }

    pub fn eval(&self, side: Side, tau: T, z: Vec2<T>) -> T {
        self.side(side).eval(tau, z)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.sides.iter().all(|s| s.homogeneous)
    }

    pub fn has_dirichlet(&self) -> bool {
        self.sides.iter().any(|s| s.kind == BoundaryKind::Dirichlet)
    }

    /// Same condition type and value on every side.
    pub fn uniform(cond: SideCondition<T>) -> Self {
        Self::new([cond.clone(), cond.clone(), cond.clone(), cond])
    }
}

/// The four pricing test problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Example {
    /// European call with Dirichlet data on all sides.
    DirichletCall = 1,
    /// Convection-dominated European call (large foreign rate).
    ConvectionDominatedCall = 2,
    /// Butterfly spread, zero Dirichlet in `x`, zero Neumann in `v`.
    Butterfly = 3,
    /// Digital call.
    Digital = 4,
}

impl TryFrom<u32> for Example {
    type Error = Error;

    fn try_from(i: u32) -> Result<Self> {
        match i {
            1 => Ok(Example::DirichletCall),
            2 => Ok(Example::ConvectionDominatedCall),
            3 => Ok(Example::Butterfly),
            4 => Ok(Example::Digital),
            other => Err(Error::UnknownExample(other)),
        }
    }
}

/// Which variance enters `d_-` of the `v_min` condition of the
/// convection-dominated example.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DMinusVariance {
    VMin,
    /// Uses `v_max` in `d_-` while `d_+` uses `v_min`.
    #[default]
    VMax,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BoundaryOptions {
    pub d_minus_variance: DMinusVariance,
}

/// Boundary conditions of test problem `example` (1..=4).
pub fn boundary_spec<T: Real>(
    example: u32,
    p: &HestonParams<T>,
    d: &Domain<T>,
) -> Result<BoundarySpec<T>> {
    boundary_spec_with(Example::try_from(example)?, p, d, BoundaryOptions::default())
}

pub fn boundary_spec_with<T: Real>(
    example: Example,
    p: &HestonParams<T>,
    d: &Domain<T>,
    opts: BoundaryOptions,
) -> Result<BoundarySpec<T>> {
    let (k, r_d, r_f) = (p.strike, p.r_d, p.r_f);
    let zero = T::zero();
    let spec = match example {
        Example::DirichletCall => {
            let x_max = d.x_max;
            BoundarySpec::new([
                SideCondition::dirichlet(move |tau: T, z: Vec2<T>| {
                    (k * (z[1] - r_f * tau).exp() - k * (-r_d * tau).exp()).max(zero)
                }),
                SideCondition::dirichlet(move |tau: T, z: Vec2<T>| k * (z[1] - r_f * tau).exp()),
                SideCondition::homogeneous(BoundaryKind::Dirichlet),
                SideCondition::dirichlet(move |tau: T, _z: Vec2<T>| {
                    (k * (x_max - r_f * tau).exp() - k * (-r_d * tau).exp()).max(zero)
                }),
            ])
        }
        Example::ConvectionDominatedCall => {
            let (v_min, v_max, x_min) = (d.v_min, d.v_max, d.x_min);
            if v_min <= zero {
                return Err(invalid(
                    "domain.v_min",
                    "the convection-dominated boundary data needs v_min > 0",
                ));
            }
            let v_minus = match opts.d_minus_variance {
                DMinusVariance::VMin => v_min,
                DMinusVariance::VMax => v_max,
            };
            let low = move |tau: T, x: T| -> T {
                if tau <= zero {
                    return (k * x.exp() - k).max(zero);
                }
                let half = T::lit(0.5);
                let d_plus = (x + (r_d - r_f + half * v_min) * tau) / (v_min * tau).sqrt();
                let d_minus = (x + (r_d - r_f - half * v_minus) * tau) / (v_minus * tau).sqrt();
                k * (x - r_f * tau).exp() * normal_cdf(d_plus)
                    - k * (-r_d * tau).exp() * normal_cdf(d_minus)
            };
            let high = move |tau: T, x: T| k * (x - r_f * tau).exp();
            BoundarySpec::new([
                SideCondition::dirichlet(move |tau: T, z: Vec2<T>| low(tau, z[1])),
                SideCondition::dirichlet(move |tau: T, z: Vec2<T>| high(tau, z[1])),
                SideCondition::dirichlet(move |tau: T, z: Vec2<T>| {
                    let lambda = ((z[0] - v_min) / (v_max - v_min)).max(zero).min(T::one());
                    lambda * high(tau, x_min) + (T::one() - lambda) * low(tau, x_min)
                }),
                SideCondition::neumann(move |tau: T, z: Vec2<T>| {
                    T::lit(0.5) * z[0] * k * (z[1] - r_f * tau).exp()
                }),
            ])
        }
        Example::Butterfly => BoundarySpec::new([
            SideCondition::homogeneous(BoundaryKind::Neumann),
            SideCondition::homogeneous(BoundaryKind::Neumann),
            SideCondition::homogeneous(BoundaryKind::Dirichlet),
            SideCondition::homogeneous(BoundaryKind::Dirichlet),
        ]),
        Example::Digital => {
            let x_max = d.x_max;
            BoundarySpec::new([
                SideCondition::homogeneous(BoundaryKind::Neumann),
                SideCondition::homogeneous(BoundaryKind::Neumann),
                SideCondition::homogeneous(BoundaryKind::Dirichlet),
                SideCondition::dirichlet(move |tau: T, _z: Vec2<T>| (x_max - r_f * tau).exp()),
            ])
        }
    };
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn table1() -> HestonParams<f64> {
        presets::table1_params(100.0)
    }

    #[test]
    fn diffusion_matrix_examples() {
        let p = table1();
        assert_eq!(diffusion_matrix(0.0, &p).unwrap(), [[0.0, 0.0], [0.0, 0.0]]);
        let a = diffusion_matrix(1.0, &p).unwrap();
        let expect = [[0.08, -0.14], [-0.14, 0.5]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((a[i][j] - expect[i][j]).abs() < 1e-15);
            }
        }
        assert!(diffusion_matrix(-1e-3, &p).is_err());
        let ratio = |v: f64| {
            let (lo, hi) = sym_eigenvalues(&diffusion_matrix(v, &p).unwrap());
            hi / lo
        };
        for v in [0.1, 1.0, 4.0] {
            assert!((ratio(v) - ratio(1.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn convection_field_examples() {
        let p = table1();
        let b0 = convection_field(0.0, &p).unwrap();
        assert!((b0[0] + 0.01).abs() < 1e-15 && (b0[1] + 0.18).abs() < 1e-15);
        let b1 = convection_field(1.0, &p).unwrap();
        assert!((b1[0] - 0.99).abs() < 1e-15 && (b1[1] - 0.32).abs() < 1e-15);

        let mut q = p;
        q.kappa = 0.0;
        q.theta = 0.0;
        q.sigma = 0.0;
        q.rho = 0.0;
        q.r_f = q.r_d;
        for v in [0.0, 0.3, 2.0] {
            assert_eq!(convection_field(v, &q).unwrap(), [0.0, 0.5 * v]);
        }
    }

    #[test]
    fn feller_examples() {
        assert!(feller_holds(&table1()));
        assert!(!feller_holds(&presets::table3_params::<f64>()));
        let mut p = table1();
        p.sigma = 0.0;
        assert!(feller_holds(&p));
    }

    #[test]
    fn payoff_examples() {
        let p = table1();
        assert_eq!(payoff(&OptionKind::EuropeanCall, 0.0, &p), 0.0);
        let fly = OptionKind::butterfly_checked(0.1, 0.5, 0.9).unwrap();
        assert!((payoff(&fly, 0.0, &p) - 0.4).abs() < 1e-15);
        assert_eq!(payoff(&OptionKind::DigitalCall, 1e-9, &p), 1.0);
        assert_eq!(payoff(&OptionKind::DigitalCall, -1e-9, &p), 0.0);
    }

    #[test]
    fn butterfly_midpoint_is_enforced() {
        assert!(OptionKind::butterfly_checked(0.1, 0.55, 0.9).is_err());
        assert!(OptionKind::butterfly_checked(0.9, 0.5, 0.1).is_err());
        match OptionKind::butterfly(0.1_f64, 0.9).unwrap() {
            OptionKind::Butterfly { k1, k2, k3 } => assert_eq!(k2, 0.5 * (k1 + k3)),
            _ => unreachable!(),
        }
    }

    #[test]
    fn butterfly_is_call_combination() {
        let p = table1();
        let (k1, k2, k3) = (80.0, 100.0, 120.0);
        let fly = OptionKind::butterfly_checked(k1, k2, k3).unwrap();
        for i in 0..200 {
            let s = 40.0 + i as f64;
            let x = (s / k2).ln();
            let c = |k: f64| (s - k).max(0.0);
            let expect = c(k1) - 2.0 * c(k2) + c(k3);
            assert!((payoff(&fly, x, &p) - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn normal_cdf_examples() {
        assert_eq!(normal_cdf(0.0_f64), 0.5);
        // Composite Simpson on the density from -12 to 1.96 as oracle.
        let n = 20_000;
        let (a, b) = (-12.0_f64, 1.96_f64);
        let h = (b - a) / n as f64;
        let pdf = |y: f64| (-0.5 * y * y).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut s = pdf(a) + pdf(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * pdf(a + i as f64 * h);
        }
        let oracle = s * h / 3.0;
        assert!((normal_cdf(1.96) - oracle).abs() < 1e-10);
        assert!((normal_cdf(1.96_f64) - 0.9750).abs() < 1e-4);
        assert!(normal_cdf(-8.0) < 1e-14);
        assert!(normal_cdf(-8.0) > 0.0);
    }

    #[test]
    fn example_one_boundary_values() {
        let p = table1();
        let d = presets::table1_domain();
        let spec = boundary_spec(1, &p, &d).unwrap();
        assert_eq!(spec.eval(Side::XMin, 0.3, [1.0, d.x_min]), 0.0);
        for x in [-1.0, -0.2, 0.3, 1.5] {
            let at_vmax = spec.eval(Side::VMax, 0.0, [d.v_max, x]);
            assert!((at_vmax - 100.0 * f64::exp(x)).abs() < 1e-12);
            if x >= 0.0 {
                assert!((at_vmax - payoff(&OptionKind::EuropeanCall, x, &p) - 100.0).abs() < 1e-10);
            }
        }
        // tau = 0 agrees with the payoff on the x sides.
        for side in [Side::XMin, Side::XMax] {
            let x = if side == Side::XMin { d.x_min } else { d.x_max };
            let g = spec.eval(side, 0.0, [0.7, x]);
            assert!((g - payoff(&OptionKind::EuropeanCall, x, &p)).abs() < 1e-10);
        }
        assert!(matches!(boundary_spec(7, &p, &d), Err(Error::UnknownExample(7))));
    }

    #[test]
    fn example_four_boundary_value() {
        let p = presets::table4_params::<f64>();
        let d = presets::exotic_domain();
        let spec = boundary_spec(4, &p, &d).unwrap();
        let g = spec.eval(Side::XMax, 0.25, [0.2, d.x_max]);
        let expect = d.x_max.exp() * 1.048_f64.powf(-0.25);
        assert!((g - expect).abs() < 1e-12 * expect);
        assert_eq!(spec.kind(Side::VMin), BoundaryKind::Neumann);
        assert_eq!(spec.kind(Side::XMin), BoundaryKind::Dirichlet);
    }

    #[test]
    fn example_two_corner_consistency() {
        let p = presets::table3_params::<f64>();
        let d = presets::convection_domain();
        for variant in [DMinusVariance::VMin, DMinusVariance::VMax] {
            let opts = BoundaryOptions {
                d_minus_variance: variant,
            };
            let spec = boundary_spec_with(Example::ConvectionDominatedCall, &p, &d, opts).unwrap();
            for tau in [0.0, 0.05, 0.25] {
                let lo = spec.eval(Side::XMin, tau, [d.v_min, d.x_min]);
                let lo_ref = spec.eval(Side::VMin, tau, [d.v_min, d.x_min]);
                let hi = spec.eval(Side::XMin, tau, [d.v_max, d.x_min]);
                let hi_ref = spec.eval(Side::VMax, tau, [d.v_max, d.x_min]);
                assert!((lo - lo_ref).abs() < 1e-12 && (hi - hi_ref).abs() < 1e-12);
            }
            assert_eq!(spec.kind(Side::XMax), BoundaryKind::Neumann);
        }
    }

    #[test]
    fn params_validation() {
        let mut p = table1();
        assert!(p.validate().is_ok());
        p.rho = 1.0;
        assert!(p.validate().is_err());
        let mut p = table1();
        p.sigma = 0.0;
        assert!(p.validate().is_err());
        assert!(Domain::new(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(Domain::new(-0.1, 1.0, 0.0, 1.0).is_err());
    }
}
