//! SIPG mass and stiffness matrices and the boundary load vector.
//!
//! The bilinear form is
//! `sum_K (A grad U . grad w + b . grad U w + r U w)`
//! plus, on interior and Dirichlet edges,
//! `sigma_e/h_e [U][w] - {A grad w}.[U] - {A grad U}.[w]`,
//! plus upwind terms on inflow parts of element boundaries.

use std::sync::Arc;

use rayon::prelude::*;

use crate::dg_space::{DGSpace, MAX_LOCAL};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::model::{BoundaryKind, BoundarySpec, PdeCoefficients, Side};
use crate::quadrature::LineRule;
use crate::scalar::{dot, mat_vec, Real, Vec2};
use crate::sparse::SparseMatrix;

type Triplets<T> = Vec<(usize, usize, T)>;

/// `sigma_e = c d1^2 / d0 k (k + 1) cot(theta)` with `c = 3` on interior and
/// `c = 6` on Dirichlet edges.
pub fn penalty_formula<T: Real>(d0: T, d1: T, degree: usize, min_angle: T, dirichlet: bool) -> T {
    let c = if dirichlet { T::lit(6.0) } else { T::lit(3.0) };
    let k = T::from_index(degree);
    c * d1 * d1 / d0 * k * (k + T::one()) / min_angle.tan()
}

/// Per-edge penalty data. Neumann edges carry `sigma = 0`.
#[derive(Clone, Debug)]
pub struct PenaltyTable<T> {
    pub sigma: Vec<T>,
    pub h: Vec<T>,
    pub d0: Vec<T>,
    pub d1: Vec<T>,
    pub min_angle: T,
}

impl<T: Real> PenaltyTable<T> {
    pub fn new(mesh: &Mesh<T>, degree: usize, coeffs: &dyn PdeCoefficients<T>, spec: &BoundarySpec<T>) -> Result<Self> {
        let n = mesh.edges().len();
        let mut table = Self {
            sigma: vec![T::zero(); n],
            h: vec![T::zero(); n],
            d0: vec![T::zero(); n],
            d1: vec![T::zero(); n],
            min_angle: mesh.min_angle(),
        };
        for e in 0..n {
            let kind = edge_kind(mesh, e, spec)?;
            let (d0, d1) = edge_ellipticity(mesh, e, coeffs);
            table.h[e] = mesh.edge_length(e);
            table.d0[e] = d0;
            table.d1[e] = d1;
            if kind == Some(BoundaryKind::Neumann) {
                continue;
            }
            table.sigma[e] = penalty_sigma(mesh, e, degree, coeffs, kind == Some(BoundaryKind::Dirichlet))?;
        }
        Ok(table)
    }

    /// Multiplies every penalty by `factor`.
    pub fn scaled(mut self, factor: T) -> Self {
        for s in &mut self.sigma {
            *s *= factor;
        }
        self
    }
}

/// Ellipticity bounds of `A` at the edge midpoint, i.e. at its mean variance.
pub fn edge_ellipticity<T: Real>(mesh: &Mesh<T>, edge: usize, coeffs: &dyn PdeCoefficients<T>) -> (T, T) {
    let [a, b] = mesh.edges()[edge].vertices;
    let (p, q) = (mesh.vertices()[a], mesh.vertices()[b]);
    let half = T::lit(0.5);
    coeffs.ellipticity_bounds([half * (p[0] + q[0]), half * (p[1] + q[1])])
}

/// Penalty of one edge; `dirichlet` selects the boundary constant.
pub fn penalty_sigma<T: Real>(
    mesh: &Mesh<T>,
    edge: usize,
    degree: usize,
    coeffs: &dyn PdeCoefficients<T>,
    dirichlet: bool,
) -> Result<T> {
    let (d0, d1) = edge_ellipticity(mesh, edge, coeffs);
    if !(d0 > T::zero()) {
        return Err(Error::DegeneratePenalty(d0.as_f64(), edge));
    }
    Ok(penalty_formula(d0, d1, degree, mesh.min_angle(), dirichlet))
}

/// `None` for interior edges.
fn edge_kind<T: Real>(mesh: &Mesh<T>, e: usize, spec: &BoundarySpec<T>) -> Result<Option<BoundaryKind>> {
    let edge = &mesh.edges()[e];
    match (edge.right, edge.side) {
        (Some(_), None) => Ok(None),
        (None, Some(side)) => Ok(Some(spec.kind(side))),
        (Some(_), Some(side)) => Err(Error::InconsistentBoundary(format!("interior edge {e} tagged with side {side}"))),
        (None, None) => Err(Error::InconsistentBoundary(format!("boundary edge {e} has no side tag"))),
    }
}

/// Endpoints, unit normal (outward from triangle `tri`) and length of local
/// edge `local`.
pub(crate) fn edge_frame<T: Real>(mesh: &Mesh<T>, tri: usize, local: usize) -> (Vec2<T>, Vec2<T>, Vec2<T>, T) {
    let c = mesh.corners(tri);
    let a = c[(local + 1) % 3];
    let b = c[(local + 2) % 3];
    let t = [b[0] - a[0], b[1] - a[1]];
    let h = (t[0] * t[0] + t[1] * t[1]).sqrt();
    (a, b, [t[1] / h, -t[0] / h], h)
}

pub(crate) fn lerp<T: Real>(a: Vec2<T>, b: Vec2<T>, s: T) -> Vec2<T> {
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
}

/// Element-local mass matrices; block diagonal.
pub fn assemble_mass<T: Real>(space: &DGSpace<T>) -> SparseMatrix<T> {
    let n = space.local_dim();
    let rule = space.volume_rule();
    let tab = space.volume_tabulation();
    let trips: Triplets<T> = (0..space.num_elements())
        .into_par_iter()
        .map(|elem| {
            let det = space.map(elem).det;
            let mut out = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let m: T = rule.weights.iter().zip(&tab.values).map(|(&w, v)| w * v[i] * v[j]).sum();
                    out.push((space.dof(elem, i), space.dof(elem, j), det * m));
                }
            }
            out
        })
        .flatten()
        .collect();
    let mut m = SparseMatrix::from_triplets(space.num_dofs(), trips).expect("indices are in range");
    m.symmetric = true;
    m
}

/// Stiffness matrix with the penalty computed from `coeffs`.
pub fn assemble_stiffness<T: Real>(
    space: &DGSpace<T>,
    coeffs: &dyn PdeCoefficients<T>,
    spec: &BoundarySpec<T>,
) -> Result<SparseMatrix<T>> {
    let penalty = PenaltyTable::new(space.mesh(), space.degree(), coeffs, spec)?;
    assemble_stiffness_with(space, coeffs, spec, &penalty)
}

pub fn assemble_stiffness_with<T: Real>(
    space: &DGSpace<T>,
    coeffs: &dyn PdeCoefficients<T>,
    spec: &BoundarySpec<T>,
    penalty: &PenaltyTable<T>,
) -> Result<SparseMatrix<T>> {
    let mesh = space.mesh();
    let kinds = (0..mesh.edges().len())
        .map(|e| edge_kind(mesh, e, spec))
        .collect::<Result<Vec<_>>>()?;
    let volume: Vec<Triplets<T>> = (0..space.num_elements())
        .into_par_iter()
        .map(|elem| volume_block(space, coeffs, elem))
        .collect();
    let faces: Vec<Triplets<T>> = (0..mesh.edges().len())
        .into_par_iter()
        .map(|e| match kinds[e] {
            None => interior_face_block(space, coeffs, penalty, e),
            Some(BoundaryKind::Dirichlet) => dirichlet_face_block(space, coeffs, penalty, e),
            Some(BoundaryKind::Neumann) => Vec::new(),
        })
        .collect();
    let trips = volume.into_iter().chain(faces).flatten().collect();
    SparseMatrix::from_triplets(space.num_dofs(), trips)
}

fn volume_block<T: Real>(space: &DGSpace<T>, coeffs: &dyn PdeCoefficients<T>, elem: usize) -> Triplets<T> {
    let n = space.local_dim();
    let map = space.map(elem);
    let rule = space.volume_rule();
    let tab = space.volume_tabulation();
    let mut block = [[T::zero(); MAX_LOCAL]; MAX_LOCAL];
    for (q, (xi, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
        let z = map.to_physical(*xi);
        let a = coeffs.diffusion(z);
        let b = coeffs.convection(z);
        let r = coeffs.reaction(z);
        let wq = w * map.det;
        let phi = &tab.values[q];
        let mut grad = [[T::zero(); 2]; MAX_LOCAL];
        for j in 0..n {
            grad[j] = map.push_gradient(tab.gradients[q][j]);
        }
        for j in 0..n {
            let ag = mat_vec(&a, grad[j]);
            let bg = dot(b, grad[j]);
            for i in 0..n {
                block[i][j] += wq * (dot(ag, grad[i]) + bg * phi[i] + r * phi[j] * phi[i]);
            }
        }
    }
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push((space.dof(elem, i), space.dof(elem, j), block[i][j]));
        }
    }
    out
}

fn interior_face_block<T: Real>(
    space: &DGSpace<T>,
    coeffs: &dyn PdeCoefficients<T>,
    penalty: &PenaltyTable<T>,
    e: usize,
) -> Triplets<T> {
    let mesh = space.mesh();
    let n = space.local_dim();
    let edge = &mesh.edges()[e];
    let (k1, l1) = edge.left;
    let (k2, _) = edge.right.expect("interior edge");
    let elems = [k1, k2];
    let (pa, pb, normal, h) = edge_frame(mesh, k1, l1);
    let sig = penalty.sigma[e] / h;
    let half = T::lit(0.5);
    let eps = [T::one(), -T::one()];
    // blocks[a][b][i][j]: test side a, trial side b.
    let mut blocks = [[[[T::zero(); MAX_LOCAL]; MAX_LOCAL]; 2]; 2];
    let rule = space.edge_rule();
    for (&s, &w) in rule.points.iter().zip(&rule.weights) {
        let z = lerp(pa, pb, s);
        let wq = w * h;
        let a = coeffs.diffusion(z);
        let bn = dot(coeffs.convection(z), normal);
        let phi = [space.values_at(k1, z), space.values_at(k2, z)];
        let grads = [space.gradients_at(k1, z), space.gradients_at(k2, z)];
        let mut flux = [[T::zero(); MAX_LOCAL]; 2];
        for side in 0..2 {
            for j in 0..n {
                flux[side][j] = dot(mat_vec(&a, grads[side][j]), normal);
            }
        }
        for ta in 0..2 {
            for tb in 0..2 {
                let blk = &mut blocks[ta][tb];
                for i in 0..n {
                    for j in 0..n {
                        let jump = sig * eps[ta] * eps[tb] * phi[ta][i] * phi[tb][j];
                        let cons = half * (flux[ta][i] * eps[tb] * phi[tb][j] + flux[tb][j] * eps[ta] * phi[ta][i]);
                        blk[i][j] += wq * (jump - cons);
                    }
                }
            }
        }
        // Upwind: the downstream element sees the jump from upstream.
        let (down, up, bn_in) = if bn < T::zero() { (0, 1, bn) } else { (1, 0, -bn) };
        if bn != T::zero() {
            for i in 0..n {
                for j in 0..n {
                    blocks[down][up][i][j] += wq * bn_in * phi[up][j] * phi[down][i];
                    blocks[down][down][i][j] -= wq * bn_in * phi[down][j] * phi[down][i];
                }
            }
        }
    }
    let mut out = Vec::with_capacity(4 * n * n);
    for ta in 0..2 {
        for tb in 0..2 {
            for i in 0..n {
                for j in 0..n {
                    out.push((space.dof(elems[ta], i), space.dof(elems[tb], j), blocks[ta][tb][i][j]));
                }
            }
        }
    }
    out
}

fn dirichlet_face_block<T: Real>(
    space: &DGSpace<T>,
    coeffs: &dyn PdeCoefficients<T>,
    penalty: &PenaltyTable<T>,
    e: usize,
) -> Triplets<T> {
    let mesh = space.mesh();
    let n = space.local_dim();
    let (k, l) = mesh.edges()[e].left;
    let (pa, pb, normal, h) = edge_frame(mesh, k, l);
    let sig = penalty.sigma[e] / h;
    let mut blk = [[T::zero(); MAX_LOCAL]; MAX_LOCAL];
    let rule = space.edge_rule();
    for (&s, &w) in rule.points.iter().zip(&rule.weights) {
        let z = lerp(pa, pb, s);
        let wq = w * h;
        let a = coeffs.diffusion(z);
        let bn = dot(coeffs.convection(z), normal);
        let inflow = if bn < T::zero() { -bn } else { T::zero() };
        let phi = space.values_at(k, z);
        let grads = space.gradients_at(k, z);
        let mut flux = [T::zero(); MAX_LOCAL];
        for j in 0..n {
            flux[j] = dot(mat_vec(&a, grads[j]), normal);
        }
        for i in 0..n {
            for j in 0..n {
                blk[i][j] += wq * ((sig + inflow) * phi[i] * phi[j] - flux[i] * phi[j] - flux[j] * phi[i]);
            }
        }
    }
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push((space.dof(k, i), space.dof(k, j), blk[i][j]));
        }
    }
    out
}

/// Boundary and source load `l_h(tau)`.
pub fn assemble_load<T: Real>(
    space: &DGSpace<T>,
    coeffs: &dyn PdeCoefficients<T>,
    spec: &BoundarySpec<T>,
    penalty: &PenaltyTable<T>,
    tau: T,
) -> Vec<T> {
    let mut load = vec![T::zero(); space.num_dofs()];
    add_boundary_load(space, coeffs, spec, penalty, tau, &mut load);
    add_source_load(space, coeffs, tau, &mut load);
    load
}

fn load_edge_rule<T: Real>(space: &DGSpace<T>) -> LineRule<T> {
    LineRule::with_degree(2 * space.degree() + 9)
}

fn add_boundary_load<T: Real>(
    space: &DGSpace<T>,
    coeffs: &dyn PdeCoefficients<T>,
    spec: &BoundarySpec<T>,
    penalty: &PenaltyTable<T>,
    tau: T,
    load: &mut [T],
) {
    let mesh = space.mesh();
    let n = space.local_dim();
    let rule = load_edge_rule(space);
    for (e, edge) in mesh.edges().iter().enumerate() {
        let Some(side) = edge.side else { continue };
        let cond = spec.side(side);
        if cond.homogeneous {
            continue;
        }
        let (k, l) = edge.left;
        let (pa, pb, normal, h) = edge_frame(mesh, k, l);
        let local = &mut load[space.dof(k, 0)..space.dof(k, 0) + n];
        for (&s, &w) in rule.points.iter().zip(&rule.weights) {
            let z = lerp(pa, pb, s);
            let g = cond.eval(tau, z) * w * h;
            let phi = space.values_at(k, z);
            match cond.kind {
                BoundaryKind::Neumann => {
                    for i in 0..n {
                        local[i] += g * phi[i];
                    }
                }
                BoundaryKind::Dirichlet => {
                    let a = coeffs.diffusion(z);
                    let bn = dot(coeffs.convection(z), normal);
                    let inflow = if bn < T::zero() { -bn } else { T::zero() };
                    let grads = space.gradients_at(k, z);
                    let sig = penalty.sigma[e] / h;
                    for i in 0..n {
                        let flux = dot(mat_vec(&a, grads[i]), normal);
                        local[i] += g * ((sig + inflow) * phi[i] - flux);
                    }
                }
            }
        }
    }
}

fn add_source_load<T: Real>(space: &DGSpace<T>, coeffs: &dyn PdeCoefficients<T>, tau: T, load: &mut [T]) {
    if !coeffs.has_source() {
        return;
    }
    let n = space.local_dim();
    let rule = space.volume_rule();
    let tab = space.volume_tabulation();
    load.par_chunks_mut(n).enumerate().for_each(|(elem, local)| {
        let map = space.map(elem);
        for (q, (xi, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let f = coeffs.source(map.to_physical(*xi), tau) * w * map.det;
            for i in 0..n {
                local[i] += f * tab.values[q][i];
            }
        }
    });
}

/// Assembled operators of one mesh and coefficient set; the load is
/// re-evaluated for each time level.
#[derive(Clone)]
pub struct Discretization<T: Real> {
    space: Arc<DGSpace<T>>,
    coeffs: Arc<dyn PdeCoefficients<T>>,
    spec: BoundarySpec<T>,
    penalty: PenaltyTable<T>,
    mass: SparseMatrix<T>,
    stiffness: SparseMatrix<T>,
}

impl<T: Real> Discretization<T> {
    pub fn new(space: Arc<DGSpace<T>>, coeffs: Arc<dyn PdeCoefficients<T>>, spec: BoundarySpec<T>) -> Result<Self> {
        let penalty = PenaltyTable::new(space.mesh(), space.degree(), coeffs.as_ref(), &spec)?;
        Self::with_penalty(space, coeffs, spec, penalty)
    }

    pub fn with_penalty(
        space: Arc<DGSpace<T>>,
        coeffs: Arc<dyn PdeCoefficients<T>>,
        spec: BoundarySpec<T>,
        penalty: PenaltyTable<T>,
    ) -> Result<Self> {
        let mass = assemble_mass(&space);
        let stiffness = assemble_stiffness_with(&space, coeffs.as_ref(), &spec, &penalty)?;
        Ok(Self {
            space,
            coeffs,
            spec,
            penalty,
            mass,
            stiffness,
        })
    }

    pub fn space(&self) -> &Arc<DGSpace<T>> {
        &self.space
    }

    pub fn coeffs(&self) -> &dyn PdeCoefficients<T> {
        self.coeffs.as_ref()
    }

    pub fn coeffs_arc(&self) -> &Arc<dyn PdeCoefficients<T>> {
        &self.coeffs
    }

    pub fn spec(&self) -> &BoundarySpec<T> {
        &self.spec
    }

    pub fn penalty(&self) -> &PenaltyTable<T> {
        &self.penalty
    }

    pub fn mass(&self) -> &SparseMatrix<T> {
        &self.mass
    }

    pub fn stiffness(&self) -> &SparseMatrix<T> {
        &self.stiffness
    }

    pub fn load(&self, tau: T) -> Vec<T> {
        assemble_load(&self.space, self.coeffs.as_ref(), &self.spec, &self.penalty, tau)
    }

    /// True when the load vanishes for every `tau`.
    pub fn load_is_zero(&self) -> bool {
        !self.coeffs.has_source()
            && Side::ALL.iter().all(|&s| self.spec.side(s).homogeneous)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg_space::l2_project;
    use crate::mesh::uniform_mesh;
    use crate::model::{boundary_spec, ConstantCoefficients, Domain, HestonCoefficients, SideCondition};
    use crate::presets;
    use crate::scalar::sym_eigenvalues;

    fn unit_space(n: usize, k: usize) -> Arc<DGSpace<f64>> {
        let d = Domain::new(0.0, 1.0, 0.0, 1.0).unwrap();
        Arc::new(DGSpace::new(Arc::new(uniform_mesh(&d, n, n).unwrap()), k).unwrap())
    }

    fn neumann() -> BoundarySpec<f64> {
        BoundarySpec::uniform(SideCondition::homogeneous(BoundaryKind::Neumann))
    }

    fn dirichlet() -> BoundarySpec<f64> {
        BoundarySpec::uniform(SideCondition::homogeneous(BoundaryKind::Dirichlet))
    }

    fn sym_eigs(m: &SparseMatrix<f64>) -> Vec<f64> {
        let d = m.to_dense();
        let n = d.len();
        let s = faer::Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (d[i][j] + d[j][i]));
        let mut e = s.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
        e.sort_by(f64::total_cmp);
        e
    }

    #[test]
    fn penalty_formula_examples() {
        let pi = std::f64::consts::PI;
        assert!((penalty_formula(1.0, 1.0, 1, pi / 4.0, false) - 6.0).abs() < 1e-12);
        assert!((penalty_formula(1.0, 1.0, 1, pi / 4.0, true) - 12.0).abs() < 1e-12);
        assert!((penalty_formula(1.0, 1.0, 2, pi / 3.0, false) - 6.0 * 3f64.sqrt()).abs() < 1e-12);
        // Table-1 diffusion at v = 1.
        let (d0, d1) = sym_eigenvalues(&[[0.08, -0.14], [-0.14, 0.5]]);
        let tr: f64 = 0.58;
        let det: f64 = 0.08 * 0.5 - 0.14 * 0.14;
        let disc = (tr * tr / 4.0 - det).sqrt();
        assert!((d0 - (tr / 2.0 - disc)).abs() < 1e-14 && (d1 - (tr / 2.0 + disc)).abs() < 1e-14);
        let s = penalty_formula(d0, d1, 1, pi / 4.0, false);
        assert!((s - 6.0 * d1 * d1 / d0).abs() < 1e-10);
    }

    #[test]
    fn penalty_table_uses_mean_variance() {
        let p = presets::table1_params::<f64>(100.0);
        let d = Domain::new(0.0, 2.0, -1.0, 1.0).unwrap();
        let mesh = uniform_mesh(&d, 2, 2).unwrap();
        let coeffs = HestonCoefficients::new(p, &d);
        let spec = boundary_spec(1, &p, &d).unwrap();
        let table = PenaltyTable::new(&mesh, 1, &coeffs, &spec).unwrap();
        for (e, edge) in mesh.edges().iter().enumerate() {
            assert!(table.sigma[e] > 0.0);
            let [a, b] = edge.vertices;
            let v = 0.5 * (mesh.vertices()[a][0] + mesh.vertices()[b][0]);
            let (d0, d1) = sym_eigenvalues(&crate::model::diffusion_matrix(v.max(1e-8), &p).unwrap());
            let expect = penalty_formula(d0, d1, 1, mesh.min_angle(), edge.is_boundary());
            assert!((table.sigma[e] - expect).abs() < 1e-9 * expect);
        }
        // A degenerate diffusion is rejected.
        let zero = ConstantCoefficients::new([[0.0, 0.0], [0.0, 0.0]], [0.0, 0.0], 0.0);
        assert!(matches!(PenaltyTable::new(&mesh, 1, &zero, &spec), Err(Error::DegeneratePenalty(..))));
    }

    #[test]
    fn mass_matrix_is_block_diagonal_spd() {
        let s = unit_space(1, 1);
        let m = assemble_mass(&s);
        let one = l2_project(|_| 1.0, &s);
        let c = one.coeffs();
        let total: f64 = m.mul_vec(c).iter().zip(c).map(|(a, b)| a * b).sum();
        assert!((total - 1.0).abs() < 1e-14);
        for (i, j, _) in m.triplets() {
            assert_eq!(i / 3, j / 3);
        }
        assert!(sym_eigs(&m)[0] > 0.0);
        // Local blocks are 2|K| I, condition number one.
        assert!((m.get(0, 0) - 1.0).abs() < 1e-14 && m.get(0, 1).abs() < 1e-14);
    }

    #[test]
    fn pure_diffusion_is_symmetric() {
        let s = unit_space(3, 2);
        let c = ConstantCoefficients::new([[1.0, 0.3], [0.3, 0.5]], [0.0, 0.0], 0.0);
        let a = assemble_stiffness(&s, &c, &dirichlet()).unwrap();
        assert!(a.asymmetry() < 1e-12);
    }

    #[test]
    fn constants_in_kernel_without_dirichlet() {
        let s = unit_space(3, 1);
        let c = ConstantCoefficients::new([[1.0, 0.3], [0.3, 0.5]], [0.0, 0.0], 0.0);
        let a = assemble_stiffness(&s, &c, &neumann()).unwrap();
        let one = l2_project(|_| 1.0, &s);
        assert!(a.mul_vec(one.coeffs()).iter().all(|r| r.abs() < 1e-12));
        // With Dirichlet faces only boundary rows are hit.
        let a = assemble_stiffness(&s, &c, &dirichlet()).unwrap();
        let r = a.mul_vec(one.coeffs());
        let mesh = s.mesh();
        for elem in 0..s.num_elements() {
            let on_boundary = mesh.triangle_edges(elem).iter().any(|&e| mesh.edges()[e].is_boundary());
            if !on_boundary {
                assert!(r[s.dof(elem, 0)..s.dof(elem, 3)].iter().all(|v| v.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn reaction_reduces_to_mass() {
        let s = unit_space(2, 2);
        let c = ConstantCoefficients::new([[0.5, 0.0], [0.0, 0.5]], [0.0, 0.0], 1.0);
        let a = assemble_stiffness(&s, &c, &neumann()).unwrap();
        let m = assemble_mass(&s);
        let u = l2_project(|_| 2.5, &s);
        for (x, y) in a.mul_vec(u.coeffs()).iter().zip(m.mul_vec(u.coeffs())) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn coercivity_of_symmetric_part() {
        let s = unit_space(2, 1);
        let c = ConstantCoefficients::new([[1.0, 0.2], [0.2, 0.6]], [0.0, 0.0], 0.0);
        let eig = sym_eigs(&assemble_stiffness(&s, &c, &neumann()).unwrap());
        assert!(eig[0].abs() < 1e-10 && eig[1] > 1e-6, "{:?}", &eig[..3]);
        let eig = sym_eigs(&assemble_stiffness(&s, &c, &dirichlet()).unwrap());
        assert!(eig[0] > 1e-6);
    }

    #[test]
    fn smooth_solutions_see_no_face_terms() {
        // For u in P_1 globally, jumps vanish and the form reduces to the
        // volume integrals when no Dirichlet edges are present.
        let s = unit_space(3, 1);
        let a_mat = [[0.7, -0.1], [-0.1, 0.4]];
        let b = [0.8, -1.3];
        let c = ConstantCoefficients::new(a_mat, b, 0.2);
        let u = |z: Vec2<f64>| 1.0 + z[0] + 2.0 * z[1];
        let grad = [1.0, 2.0];
        let a = assemble_stiffness(&s, &c, &neumann()).unwrap();
        let uh = l2_project(u, &s);
        let got = a.mul_vec(uh.coeffs());
        let rule = crate::quadrature::TriangleRule::<f64>::with_degree(6);
        for elem in 0..s.num_elements() {
            let map = s.map(elem);
            for i in 0..3 {
                let mut want = 0.0;
                for (xi, w) in rule.points.iter().zip(&rule.weights) {
                    let z = map.to_physical(*xi);
                    let phi = s.values_at(elem, z)[i];
                    let g = s.gradients_at(elem, z)[i];
                    want += w * map.det * (dot(mat_vec(&a_mat, grad), g) + dot(b, grad) * phi + 0.2 * u(z) * phi);
                }
                // Consistency term -{A grad u}.[w] on interior edges.
                for l in 0..3 {
                    if s.mesh().neighbor(elem, l).is_none() {
                        continue;
                    }
                    let (pa, pb, n, h) = edge_frame(s.mesh(), elem, l);
                    let flux = dot(mat_vec(&a_mat, grad), n);
                    for (&t, &w) in s.edge_rule().points.iter().zip(&s.edge_rule().weights) {
                        want -= w * h * flux * s.values_at(elem, lerp(pa, pb, t))[i];
                    }
                }
                assert!((got[s.dof(elem, i)] - want).abs() < 1e-12, "{elem} {i} {} {want}", got[s.dof(elem, i)]);
            }
        }
    }

    #[test]
    fn homogeneous_data_gives_zero_load() {
        let s = unit_space(2, 1);
        let c = ConstantCoefficients::new([[1.0, 0.0], [0.0, 1.0]], [1.0, 0.0], 0.0);
        for spec in [dirichlet(), neumann()] {
            let pen = PenaltyTable::new(s.mesh(), 1, &c, &spec).unwrap();
            assert!(assemble_load(&s, &c, &spec, &pen, 0.3).iter().all(|&v| v == 0.0));
        }
        let p = presets::butterfly_params::<f64>();
        let d = presets::exotic_domain();
        let space = Arc::new(DGSpace::new(Arc::new(uniform_mesh(&d, 3, 4).unwrap()), 1).unwrap());
        let disc = Discretization::new(space, Arc::new(HestonCoefficients::new(p, &d)), boundary_spec(3, &p, &d).unwrap()).unwrap();
        assert!(disc.load_is_zero());
        for tau in [0.0, 0.1, 0.25] {
            assert!(disc.load(tau).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn dirichlet_load_matches_simpson_oracle() {
        let p = presets::table1_params::<f64>(100.0);
        let d = presets::table1_domain();
        let space = DGSpace::new(Arc::new(uniform_mesh(&d, 4, 4).unwrap()), 1).unwrap();
        let coeffs = HestonCoefficients::new(p, &d);
        let spec = boundary_spec(1, &p, &d).unwrap();
        let pen = PenaltyTable::new(space.mesh(), 1, &coeffs, &spec).unwrap();
        let load = assemble_load(&space, &coeffs, &spec, &pen, 0.0);
        let mesh = space.mesh();
        // A VMax edge whose element has no other boundary edge.
        let one_boundary = |k: usize| mesh.triangle_edges(k).iter().filter(|&&x| mesh.edges()[x].is_boundary()).count() == 1;
        let e = mesh
            .edges()
            .iter()
            .position(|e| e.side == Some(Side::VMax) && one_boundary(e.left.0))
            .unwrap();
        let (k, l) = mesh.edges()[e].left;
        let (pa, pb, n, h) = edge_frame(mesh, k, l);
        let m = 2000;
        for i in 0..3 {
            let f = |s: f64| {
                let z = lerp(pa, pb, s);
                let g = spec.eval(Side::VMax, 0.0, z);
                let a = coeffs.diffusion(z);
                let bn = dot(coeffs.convection(z), n);
                let phi = space.values_at(k, z)[i];
                let flux = dot(mat_vec(&a, space.gradients_at(k, z)[i]), n);
                g * ((pen.sigma[e] / h + (-bn).max(0.0)) * phi - flux)
            };
            let mut acc = f(0.0) + f(1.0);
            for j in 1..m {
                acc += if j % 2 == 1 { 4.0 } else { 2.0 } * f(j as f64 / m as f64);
            }
            let want = acc * h / (3.0 * m as f64);
            let got = load[space.dof(k, i)];
            assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "{got} {want}");
        }
    }

    #[test]
    fn system_matrix_factorizes_with_doubled_penalty() {
        let p = presets::table1_params::<f64>(100.0);
        let d = presets::table1_domain();
        let space = Arc::new(DGSpace::new(Arc::new(uniform_mesh(&d, 4, 4).unwrap()), 2).unwrap());
        let coeffs: Arc<dyn PdeCoefficients<f64>> = Arc::new(HestonCoefficients::new(p, &d));
        let spec = boundary_spec(1, &p, &d).unwrap();
        for factor in [1.0, 2.0] {
            let pen = PenaltyTable::new(space.mesh(), 2, coeffs.as_ref(), &spec).unwrap().scaled(factor);
            let disc = Discretization::with_penalty(Arc::clone(&space), Arc::clone(&coeffs), spec.clone(), pen).unwrap();
            let sys = disc.mass().add_scaled(disc.stiffness(), 0.005).unwrap();
            let f = crate::sparse::Factorization::new(&sys).unwrap();
            assert!(f.solve(&vec![1.0; sys.dim()]).iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn couplings_only_across_shared_edges() {
        let s = unit_space(3, 1);
        let c = ConstantCoefficients::new([[1.0, 0.0], [0.0, 1.0]], [0.5, 0.5], 0.1);
        let a = assemble_stiffness(&s, &c, &dirichlet()).unwrap();
        let mesh = s.mesh();
        for (i, j, _) in a.triplets() {
            let (ei, ej) = (i / 3, j / 3);
            if ei != ej {
                assert!((0..3).any(|l| mesh.neighbor(ei, l) == Some(ej)));
            }
        }
    }
}
