#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use heston_dg::assembly::Discretization;
use heston_dg::dg_space::{l2_error, l2_project, DGSpace};
use heston_dg::mesh::uniform_mesh;
use heston_dg::model::{BoundarySpec, ConstantCoefficients, Domain, PdeCoefficients, SideCondition};
use heston_dg::presets;
use heston_dg::timestepping::{march_discretization, MarchOptions, Scheme, TimeGrid};

/// Smooth stationary solution `sin(pi v) cos(x) + v x`.
pub fn exact(z: [f64; 2]) -> f64 {
    (PI * z[0]).sin() * z[1].cos() + z[0] * z[1]
}

/// Right-hand side of `-div(A grad u) + b . grad u + r u = f` for [`exact`].
fn forcing(c: &ConstantCoefficients<f64>, z: [f64; 2]) -> f64 {
    let (v, x) = (z[0], z[1]);
    let (s, co) = ((PI * v).sin(), (PI * v).cos());
    let u_v = PI * co * x.cos() + x;
    let u_x = -s * x.sin() + v;
    let u_vv = -PI * PI * s * x.cos();
    let u_xx = -s * x.cos();
    let u_vx = -PI * co * x.sin() + 1.0;
    let a = c.diffusion;
    let b = c.convection;
    -(a[0][0] * u_vv + (a[0][1] + a[1][0]) * u_vx + a[1][1] * u_xx) + b[0] * u_v + b[1] * u_x + c.reaction * exact(z)
}

/// `L^2` errors at `tau = 0.5` of the constant-coefficient Heston operator
/// (frozen at `v = 0.25`) on `n x n` meshes of `[0, 1] x [-1, 1]`.
pub fn manufactured_errors(degree: usize, sizes: &[usize]) -> Vec<f64> {
    let p = presets::table1_params::<f64>(100.0);
    let base = ConstantCoefficients::frozen_heston(&p, 0.25);
    let frozen = base.clone();
    let coeffs = base.with_source(move |z, _tau| forcing(&frozen, z));
    let coeffs: Arc<dyn PdeCoefficients<f64>> = Arc::new(coeffs);
    let domain = Domain::new(0.0, 1.0, -1.0, 1.0).unwrap();
    sizes
        .iter()
        .map(|&n| {
            let mesh = Arc::new(uniform_mesh(&domain, n, n).unwrap());
            let space = Arc::new(DGSpace::new(mesh, degree).unwrap());
            let spec = BoundarySpec::uniform(SideCondition::dirichlet(|_tau, z| exact(z)));
            let disc = Discretization::new(Arc::clone(&space), Arc::clone(&coeffs), spec).unwrap();
            let u0 = l2_project(exact, &space);
            let grid = TimeGrid::new(0.5, 0.05).unwrap();
            let (u, _) = march_discretization(&disc, &u0, &grid, Scheme::RannacherCN, MarchOptions::default()).unwrap();
            l2_error(&u, exact, 2 * degree + 6)
        })
        .collect()
}

/// Observed orders between consecutive halvings of `h`.
pub fn rates(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
