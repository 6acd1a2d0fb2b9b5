//! Discontinuous piecewise-polynomial spaces on triangular meshes.
//!
//! Each element carries `(k+1)(k+2)/2` basis functions obtained by mapping an
//! orthonormal basis of `P_k` on the reference triangle through the affine
//! element map, so the local mass matrix is `2|K|` times the identity.

use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::mesh::{signed_area, Mesh};
use crate::quadrature::{LineRule, TriangleRule};
use crate::scalar::{Mat2, Real, Vec2};

/// Largest local dimension supported (`k = 2`).
pub const MAX_LOCAL: usize = 6;

/// Orthonormal basis of `P_k` on the reference triangle, expressed in the
/// monomials `1, xi, eta, xi^2, xi eta, eta^2`.
#[derive(Clone, Debug)]
pub struct RefBasis<T> {
    degree: usize,
    dim: usize,
    coeffs: [[T; MAX_LOCAL]; MAX_LOCAL],
}

impl<T: Real> RefBasis<T> {
    pub fn new(degree: usize) -> Result<Self> {
        if !(1..=2).contains(&degree) {
            return Err(invalid("degree", format!("supported degrees are 1 and 2, got {degree}")));
        }
        let dim = local_dim(degree);
        // Gram matrix of the monomials, exact with a degree-2k rule.
        let rule = TriangleRule::<f64>::with_degree(2 * degree);
        let mut gram = [[0.0_f64; MAX_LOCAL]; MAX_LOCAL];
        for (p, &w) in rule.points.iter().zip(&rule.weights) {
            let m = monomials(*p);
            for i in 0..dim {
                for j in 0..dim {
                    gram[i][j] += w * m[i] * m[j];
                }
            }
        }
        // Cholesky G = L L^T; the rows of L^{-1} are orthonormal combinations.
        let mut l = [[0.0_f64; MAX_LOCAL]; MAX_LOCAL];
        for i in 0..dim {
            for j in 0..=i {
                let s: f64 = gram[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
                if i == j {
                    l[i][i] = s.sqrt();
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        let mut inv = [[0.0_f64; MAX_LOCAL]; MAX_LOCAL];
        for c in 0..dim {
            for i in 0..dim {
                let rhs = if i == c { 1.0 } else { 0.0 };
                let s: f64 = (0..i).map(|k| l[i][k] * inv[k][c]).sum();
                inv[i][c] = (rhs - s) / l[i][i];
            }
        }
        let mut coeffs = [[T::zero(); MAX_LOCAL]; MAX_LOCAL];
        for i in 0..dim {
            for j in 0..dim {
                coeffs[i][j] = T::lit(inv[i][j]);
            }
        }
        Ok(Self { degree, dim, coeffs })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self, xi: Vec2<T>) -> [T; MAX_LOCAL] {
        let m = monomials(xi);
        let mut out = [T::zero(); MAX_LOCAL];
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            *o = (0..self.dim).map(|j| self.coeffs[i][j] * m[j]).sum();
        }
        out
    }

    /// Reference gradients.
    pub fn gradients(&self, xi: Vec2<T>) -> [Vec2<T>; MAX_LOCAL] {
        let g = monomial_gradients(xi);
        let mut out = [[T::zero(); 2]; MAX_LOCAL];
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            for j in 0..self.dim {
                o[0] += self.coeffs[i][j] * g[j][0];
                o[1] += self.coeffs[i][j] * g[j][1];
            }
        }
        out
    }

    /// Reference Hessians (constant on the element).
    pub fn hessians(&self) -> [Mat2<T>; MAX_LOCAL] {
        let two = T::lit(2.0);
        let (o, z) = (T::one(), T::zero());
        let mono: [Mat2<T>; MAX_LOCAL] = [
            [[z, z], [z, z]],
            [[z, z], [z, z]],
            [[z, z], [z, z]],
            [[two, z], [z, z]],
            [[z, o], [o, z]],
            [[z, z], [z, two]],
        ];
        let mut out = [[[T::zero(); 2]; 2]; MAX_LOCAL];
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            for (j, h) in mono.iter().enumerate().take(self.dim) {
                for a in 0..2 {
                    for b in 0..2 {
                        o[a][b] += self.coeffs[i][j] * h[a][b];
                    }
                }
            }
        }
        out
    }
}

pub fn local_dim(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

fn monomials<T: Real>(p: Vec2<T>) -> [T; MAX_LOCAL] {
    let (s, t) = (p[0], p[1]);
    [T::one(), s, t, s * s, s * t, t * t]
}

fn monomial_gradients<T: Real>(p: Vec2<T>) -> [Vec2<T>; MAX_LOCAL] {
    let (s, t) = (p[0], p[1]);
    let (o, z, two) = (T::one(), T::zero(), T::lit(2.0));
    [[z, z], [o, z], [z, o], [two * s, z], [t, s], [z, two * t]]
}

/// Affine map `z = p0 + J xi` from the reference triangle to an element.
#[derive(Clone, Copy, Debug)]
pub struct ElementMap<T> {
    pub origin: Vec2<T>,
    pub jacobian: Mat2<T>,
    /// `J^{-1}`.
    pub inverse: Mat2<T>,
    /// `det J = 2|K|`.
    pub det: T,
}

impl<T: Real> ElementMap<T> {
    pub fn new(p: [Vec2<T>; 3]) -> Self {
        let j = [
            [p[1][0] - p[0][0], p[2][0] - p[0][0]],
            [p[1][1] - p[0][1], p[2][1] - p[0][1]],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let inverse = [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]];
        Self {
            origin: p[0],
            jacobian: j,
            inverse,
            det,
        }
    }

    pub fn to_physical(&self, xi: Vec2<T>) -> Vec2<T> {
        let j = &self.jacobian;
        [
            self.origin[0] + j[0][0] * xi[0] + j[0][1] * xi[1],
            self.origin[1] + j[1][0] * xi[0] + j[1][1] * xi[1],
        ]
    }

    pub fn to_reference(&self, z: Vec2<T>) -> Vec2<T> {
        let d = [z[0] - self.origin[0], z[1] - self.origin[1]];
        let m = &self.inverse;
        [m[0][0] * d[0] + m[0][1] * d[1], m[1][0] * d[0] + m[1][1] * d[1]]
    }

    /// Physical gradient `J^{-T} g`.
    pub fn push_gradient(&self, g: Vec2<T>) -> Vec2<T> {
        let m = &self.inverse;
        [m[0][0] * g[0] + m[1][0] * g[1], m[0][1] * g[0] + m[1][1] * g[1]]
    }

    /// Physical Hessian `J^{-T} H J^{-1}`.
    pub fn push_hessian(&self, h: &Mat2<T>) -> Mat2<T> {
        let m = &self.inverse;
        let mut out = [[T::zero(); 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                let mut s = T::zero();
                for i in 0..2 {
                    for j in 0..2 {
                        s += m[i][a] * h[i][j] * m[j][b];
                    }
                }
                out[a][b] = s;
            }
        }
        out
    }
}

/// Basis values and reference gradients at the points of a rule.
#[derive(Clone, Debug)]
pub struct Tabulation<T> {
    pub values: Vec<[T; MAX_LOCAL]>,
    pub gradients: Vec<[Vec2<T>; MAX_LOCAL]>,
}

/// The broken space `W_h` of degree `k` on a mesh.
#[derive(Debug)]
pub struct DGSpace<T> {
    mesh: Arc<Mesh<T>>,
    basis: RefBasis<T>,
    volume_rule: TriangleRule<T>,
    volume_tab: Tabulation<T>,
    edge_rule: LineRule<T>,
    maps: Vec<ElementMap<T>>,
}

impl<T: Real> DGSpace<T> {
    /// Volume and edge rules are exact for degree `2k + 1`.
    pub fn new(mesh: Arc<Mesh<T>>, degree: usize) -> Result<Self> {
        let basis = RefBasis::new(degree)?;
        let volume_rule = TriangleRule::with_degree(2 * degree + 1);
        let volume_tab = Tabulation {
            values: volume_rule.points.iter().map(|&p| basis.values(p)).collect(),
            gradients: volume_rule.points.iter().map(|&p| basis.gradients(p)).collect(),
        };
        let edge_rule = LineRule::with_degree(2 * degree + 1);
        let maps = (0..mesh.num_triangles()).map(|t| ElementMap::new(mesh.corners(t))).collect();
        Ok(Self {
            mesh,
            basis,
            volume_rule,
            volume_tab,
            edge_rule,
            maps,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh<T>> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    /// Local dimension `n_q`.
    pub fn local_dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn num_elements(&self) -> usize {
        self.maps.len()
    }

    pub fn num_dofs(&self) -> usize {
        self.num_elements() * self.local_dim()
    }

    /// Global index of local basis function `j` on element `elem`.
    #[inline]
    pub fn dof(&self, elem: usize, j: usize) -> usize {
        elem * self.local_dim() + j
    }

    pub fn basis(&self) -> &RefBasis<T> {
        &self.basis
    }

    pub fn volume_rule(&self) -> &TriangleRule<T> {
        &self.volume_rule
    }

    pub fn volume_tabulation(&self) -> &Tabulation<T> {
        &self.volume_tab
    }

    pub fn edge_rule(&self) -> &LineRule<T> {
        &self.edge_rule
    }

    pub fn map(&self, elem: usize) -> &ElementMap<T> {
        &self.maps[elem]
    }

    /// Basis values of element `elem` at physical point `z`.
    pub fn values_at(&self, elem: usize, z: Vec2<T>) -> [T; MAX_LOCAL] {
        self.basis.values(self.maps[elem].to_reference(z))
    }

    /// Physical basis gradients of element `elem` at `z`.
    pub fn gradients_at(&self, elem: usize, z: Vec2<T>) -> [Vec2<T>; MAX_LOCAL] {
        let map = &self.maps[elem];
        let g = self.basis.gradients(map.to_reference(z));
        let mut out = [[T::zero(); 2]; MAX_LOCAL];
        for j in 0..self.local_dim() {
            out[j] = map.push_gradient(g[j]);
        }
        out
    }

    /// Physical basis Hessians of element `elem`.
    pub fn hessians(&self, elem: usize) -> [Mat2<T>; MAX_LOCAL] {
        let map = &self.maps[elem];
        let h = self.basis.hessians();
        let mut out = [[[T::zero(); 2]; 2]; MAX_LOCAL];
        for j in 0..self.local_dim() {
            out[j] = map.push_hessian(&h[j]);
        }
        out
    }
}

/// Coefficient vector over a [`DGSpace`] at time-to-maturity `tau`.
#[derive(Clone, Debug)]
pub struct DGSolution<T> {
    space: Arc<DGSpace<T>>,
    coeffs: Vec<T>,
    pub tau: T,
}

impl<T: Real> DGSolution<T> {
    pub fn new(space: Arc<DGSpace<T>>, coeffs: Vec<T>, tau: T) -> Result<Self> {
        if coeffs.len() != space.num_dofs() {
            return Err(Error::DimensionMismatch {
                expected: space.num_dofs(),
                got: coeffs.len(),
            });
        }
        Ok(Self { space, coeffs, tau })
    }

    pub fn zeros(space: Arc<DGSpace<T>>) -> Self {
        let n = space.num_dofs();
        Self {
            space,
            coeffs: vec![T::zero(); n],
            tau: T::zero(),
        }
    }

    pub fn space(&self) -> &Arc<DGSpace<T>> {
        &self.space
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [T] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn local(&self, elem: usize) -> &[T] {
        let n = self.space.local_dim();
        &self.coeffs[elem * n..(elem + 1) * n]
    }

    /// Value of the trace from `elem` at `z`.
    pub fn eval_in(&self, elem: usize, z: Vec2<T>) -> T {
        let phi = self.space.values_at(elem, z);
        self.local(elem).iter().zip(&phi).map(|(&c, &p)| c * p).sum()
    }

    /// Gradient of the trace from `elem` at `z`.
    pub fn gradient_in(&self, elem: usize, z: Vec2<T>) -> Vec2<T> {
        let g = self.space.gradients_at(elem, z);
        let mut out = [T::zero(); 2];
        for (c, gj) in self.local(elem).iter().zip(&g) {
            out[0] += *c * gj[0];
            out[1] += *c * gj[1];
        }
        out
    }

    /// Value at `z`; on shared edges the element with the lowest id is used.
    pub fn eval(&self, z: Vec2<T>) -> Result<T> {
        let elem = self
            .space
            .mesh()
            .locate(z)
            .ok_or(Error::PointOutsideDomain(z[0].as_f64(), z[1].as_f64()))?;
        Ok(self.eval_in(elem, z))
    }

    /// Smallest value over the vertices and volume quadrature points of all
    /// elements.
    pub fn sampled_min(&self) -> T {
        let space = &self.space;
        let mut best = T::infinity();
        let refs = [[T::zero(), T::zero()], [T::one(), T::zero()], [T::zero(), T::one()]];
        for elem in 0..space.num_elements() {
            let map = space.map(elem);
            for xi in refs.iter().chain(space.volume_rule().points.iter()) {
                best = best.min(self.eval_in(elem, map.to_physical(*xi)));
            }
        }
        best
    }
}

/// Element-local `L^2` projection of `f`.
pub fn l2_project<T: Real>(f: impl Fn(Vec2<T>) -> T, space: &Arc<DGSpace<T>>) -> DGSolution<T> {
    l2_project_with_breaks(f, space, &[])
}

/// `L^2` projection where elements cut by a line `x = c` (for `c` in
/// `x_breaks`) are integrated piecewise on the sub-polygons, so that kinks
/// and jumps of `f` along those lines do not pollute the quadrature.
pub fn l2_project_with_breaks<T: Real>(
    f: impl Fn(Vec2<T>) -> T,
    space: &Arc<DGSpace<T>>,
    x_breaks: &[T],
) -> DGSolution<T> {
    let n = space.local_dim();
    let rule = TriangleRule::<T>::with_degree(2 * space.degree() + 4);
    let mut coeffs = vec![T::zero(); space.num_dofs()];
    for elem in 0..space.num_elements() {
        let map = space.map(elem);
        let mut pieces = vec![space.mesh().corners(elem)];
        for &c in x_breaks {
            pieces = pieces.into_iter().flat_map(|p| split_by_x(p, c)).collect();
        }
        let local = &mut coeffs[elem * n..(elem + 1) * n];
        for piece in pieces {
            let sub = ElementMap::new(piece);
            let scale = sub.det.abs() / map.det;
            for (xi, &w) in rule.points.iter().zip(&rule.weights) {
                let z = sub.to_physical(*xi);
                let phi = space.basis().values(map.to_reference(z));
                let fz = f(z) * w * scale;
                for j in 0..n {
                    local[j] += fz * phi[j];
                }
            }
        }
    }
    DGSolution {
        space: Arc::clone(space),
        coeffs,
        tau: T::zero(),
    }
}

/// Splits a triangle along the line `x = c` into triangles lying on either
/// side. Triangles not cut by the line are returned unchanged.
pub fn split_by_x<T: Real>(p: [Vec2<T>; 3], c: T) -> Vec<[Vec2<T>; 3]> {
    let s = p.map(|z| z[1] - c);
    let scale = p.iter().map(|z| z[1].abs()).fold(c.abs(), T::max).max(T::one());
    let tol = T::lit(1e-13) * scale;
    if s.iter().all(|&d| d >= -tol) || s.iter().all(|&d| d <= tol) {
        return vec![p];
    }
    let mut out = Vec::with_capacity(3);
    for keep_above in [true, false] {
        let mut poly: Vec<Vec2<T>> = Vec::with_capacity(4);
        for i in 0..3 {
            let (a, b) = (p[i], p[(i + 1) % 3]);
            let (sa, sb) = (s[i], s[(i + 1) % 3]);
            let inside = |d: T| if keep_above { d >= T::zero() } else { d <= T::zero() };
            if inside(sa) {
                poly.push(a);
            }
            if (sa > T::zero() && sb < T::zero()) || (sa < T::zero() && sb > T::zero()) {
                let t = sa / (sa - sb);
                poly.push([a[0] + t * (b[0] - a[0]), c]);
            }
        }
        for k in 1..poly.len().saturating_sub(1) {
            let tri = [poly[0], poly[k], poly[k + 1]];
            if signed_area(tri) > T::zero() {
                out.push(tri);
            }
        }
    }
    out
}

/// `||u_h - f||_{L^2}` with a rule exact to `degree`.
pub fn l2_error<T: Real>(sol: &DGSolution<T>, f: impl Fn(Vec2<T>) -> T, degree: usize) -> T {
    let space = sol.space();
    let rule = TriangleRule::<T>::with_degree(degree);
    let mut acc = T::zero();
    for elem in 0..space.num_elements() {
        let map = space.map(elem);
        for (xi, &w) in rule.points.iter().zip(&rule.weights) {
            let z = map.to_physical(*xi);
            let e = sol.eval_in(elem, z) - f(z);
            acc += w * map.det * e * e;
        }
    }
    acc.sqrt()
}

/// Broken energy-type error `(sum_K ||A^{1/2} grad(u_h - u)||^2 + c ||u_h - u||^2)^{1/2}`.
pub fn energy_error<T: Real>(
    sol: &DGSolution<T>,
    u: impl Fn(Vec2<T>) -> T,
    grad_u: impl Fn(Vec2<T>) -> Vec2<T>,
    diffusion: impl Fn(Vec2<T>) -> Mat2<T>,
    reaction: T,
    degree: usize,
) -> T {
    let space = sol.space();
    let rule = TriangleRule::<T>::with_degree(degree);
    let mut acc = T::zero();
    for elem in 0..space.num_elements() {
        let map = space.map(elem);
        for (xi, &w) in rule.points.iter().zip(&rule.weights) {
            let z = map.to_physical(*xi);
            let g = sol.gradient_in(elem, z);
            let ge = grad_u(z);
            let d = [g[0] - ge[0], g[1] - ge[1]];
            let a = diffusion(z);
            let ad = crate::scalar::mat_vec(&a, d);
            let e = sol.eval_in(elem, z) - u(z);
            acc += w * map.det * (crate::scalar::dot(ad, d) + reaction * e * e);
        }
    }
    acc.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::uniform_mesh;
    use crate::model::Domain;

    fn space(nv: usize, nx: usize, k: usize) -> Arc<DGSpace<f64>> {
        let d = Domain::new(0.0, 1.0, -1.0, 1.0).unwrap();
        Arc::new(DGSpace::new(Arc::new(uniform_mesh(&d, nv, nx).unwrap()), k).unwrap())
    }

    #[test]
    fn local_dimensions() {
        assert_eq!(local_dim(1), 3);
        assert_eq!(local_dim(2), 6);
        assert!(RefBasis::<f64>::new(3).is_err());
        assert!(RefBasis::<f64>::new(0).is_err());
    }

    #[test]
    fn basis_is_orthonormal_on_reference() {
        for k in 1..=2 {
            let b = RefBasis::<f64>::new(k).unwrap();
            let rule = TriangleRule::<f64>::with_degree(2 * k);
            let n = b.dim();
            let mut m = vec![vec![0.0; n]; n];
            for (p, &w) in rule.points.iter().zip(&rule.weights) {
                let v = b.values(*p);
                for i in 0..n {
                    for j in 0..n {
                        m[i][j] += w * v[i] * v[j];
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((m[i][j] - e).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn basis_gradients_match_finite_differences() {
        let h = 1e-7;
        for k in 1..=2 {
            let b = RefBasis::<f64>::new(k).unwrap();
            for p in [[0.2, 0.3], [0.6, 0.1], [0.05, 0.9]] {
                let g = b.gradients(p);
                let vp = b.values([p[0] + h, p[1]]);
                let vm = b.values([p[0] - h, p[1]]);
                let wp = b.values([p[0], p[1] + h]);
                let wm = b.values([p[0], p[1] - h]);
                for j in 0..b.dim() {
                    assert!(((vp[j] - vm[j]) / (2.0 * h) - g[j][0]).abs() < 1e-6);
                    assert!(((wp[j] - wm[j]) / (2.0 * h) - g[j][1]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn volume_rule_integrates_area() {
        let s = space(3, 5, 2);
        for elem in 0..s.num_elements() {
            let m = s.map(elem);
            let a: f64 = s.volume_rule().weights.iter().map(|w| w * m.det).sum();
            let area = s.mesh().area(elem);
            assert!((a - area).abs() < 1e-14 * area);
        }
    }

    #[test]
    fn constant_one_and_zero() {
        let s = space(2, 2, 1);
        let one = l2_project(|_| 1.0, &s);
        for z in [[0.1, 0.2], [0.5, 0.0], [0.99, -0.9]] {
            assert!((one.eval(z).unwrap() - 1.0).abs() < 1e-14);
        }
        let zero = DGSolution::zeros(Arc::clone(&s));
        assert_eq!(zero.eval([0.3, 0.3]).unwrap(), 0.0);
        assert!(matches!(zero.eval([2.0, 0.0]), Err(Error::PointOutsideDomain(..))));
    }

    #[test]
    fn linear_is_reproduced_at_centroid() {
        let d = Domain::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let mesh = Mesh::from_parts(d, vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], vec![[0, 1, 2], [0, 2, 3]]);
        let s = Arc::new(DGSpace::new(Arc::new(mesh.unwrap()), 1).unwrap());
        let u = l2_project(|z: Vec2<f64>| z[0] + z[1], &s);
        let c = [2.0 / 3.0, 1.0 / 3.0];
        assert!((u.eval_in(0, c) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn projection_reproduces_polynomials_and_is_idempotent() {
        let s = space(3, 4, 2);
        let f = |z: Vec2<f64>| 1.0 - 2.0 * z[0] + 0.5 * z[1] + z[0] * z[1] - 3.0 * z[1] * z[1];
        let u = l2_project(f, &s);
        for elem in 0..s.num_elements() {
            let z = s.map(elem).to_physical([0.3, 0.3]);
            assert!((u.eval_in(elem, z) - f(z)).abs() < 1e-13);
        }
        let g = |z: Vec2<f64>| (3.0 * z[0]).sin() * z[1].exp();
        let p1 = l2_project(g, &s);
        let p2 = l2_project(|z| p1.eval(z).unwrap(), &s);
        for (a, b) in p1.coeffs().iter().zip(p2.coeffs()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn split_preserves_area() {
        let tri = [[0.0, -0.5], [1.0, 0.2], [0.2, 0.8]];
        let pieces = split_by_x(tri, 0.0);
        assert_eq!(pieces.len(), 3);
        let a: f64 = pieces.iter().map(|p| signed_area(*p)).sum();
        assert!((a - signed_area(tri)).abs() < 1e-15);
        for p in &pieces {
            assert!(p.iter().all(|z| z[1] >= -1e-15) || p.iter().all(|z| z[1] <= 1e-15));
        }
        assert_eq!(split_by_x(tri, 2.0).len(), 1);
        // Cut through a vertex.
        let pieces = split_by_x([[0.0, -1.0], [1.0, 0.0], [0.0, 1.0]], 0.0);
        assert_eq!(pieces.len(), 2);
    }

    #[test]
    fn kink_projection_converges_at_full_order() {
        // The kink x = 0.1 cuts elements; split quadrature keeps the best
        // approximation error at h^{k+1} in L^2 away from the kink and the
        // computed error close to the true best approximation.
        let f = |z: Vec2<f64>| (z[1] - 0.1).max(0.0);
        let mut errs = Vec::new();
        for n in [4, 8, 16] {
            let s = space(n, n, 1);
            let u = l2_project_with_breaks(f, &s, &[0.1]);
            errs.push(l2_error(&u, f, 8));
        }
        assert!(errs[1] < errs[0] && errs[2] < errs[1]);
        let rate = (errs[1] / errs[2]).log2();
        assert!(rate > 1.4, "rate {rate}");
    }

    #[test]
    fn digital_projection_overshoot_is_bounded() {
        let f = |z: Vec2<f64>| if z[1] > 0.05 { 1.0 } else { 0.0 };
        let mut over = Vec::new();
        for n in [4, 8, 16, 32] {
            let s = space(n, n, 1);
            let u = l2_project_with_breaks(f, &s, &[0.05]);
            let mut m: f64 = 0.0;
            for elem in 0..s.num_elements() {
                for xi in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]] {
                    let z = s.map(elem).to_physical(xi);
                    m = m.max(u.eval_in(elem, z) - 1.0).max(-u.eval_in(elem, z));
                }
            }
            over.push(m);
        }
        let first = over[0].max(1e-3);
        assert!(over.iter().all(|&o| o <= 1.5 * first + 1e-12), "{over:?}");
    }
}
