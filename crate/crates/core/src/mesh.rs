//! Conforming triangulations of the `(v, x)` rectangle.
//!
//! Triangles are stored counter-clockwise as `[a, b, c]` where `(a, b)` is
//! the refinement edge and `c` the newest vertex. Local edge `i` is the edge
//! opposite vertex `i`, so the refinement edge is local edge 2.

use std::collections::{HashMap, HashSet};
use std::io::Write;

use crate::error::{Error, Result};
use crate::model::{Domain, Side};
use crate::scalar::{Real, Vec2};

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub vertices: [usize; 2],
    /// `(triangle, local edge index)` of the first incident triangle.
    pub left: (usize, usize),
    /// Second incident triangle for interior edges.
    pub right: Option<(usize, usize)>,
    /// Rectangle side for boundary edges.
    pub side: Option<Side>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct Mesh<T> {
    domain: Domain<T>,
    vertices: Vec<Vec2<T>>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    tri_edges: Vec<[usize; 3]>,
    areas: Vec<T>,
    diameters: Vec<T>,
    edge_lengths: Vec<T>,
    min_angle: T,
    locator: Locator<T>,
}

/// Direction of the cell diagonals of a uniform mesh.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Diagonal {
    /// From `(v_i, x_j)` to `(v_{i+1}, x_{j+1})`.
    #[default]
    Rising,
    /// From `(v_{i+1}, x_j)` to `(v_i, x_{j+1})`.
    Falling,
}

/// Rectangle split into `n_v x n_x` cells, each cut along its `(+v, +x)`
/// diagonal into two right triangles whose refinement edge is the diagonal.
pub fn uniform_mesh<T: Real>(d: &Domain<T>, n_v: usize, n_x: usize) -> Result<Mesh<T>> {
    uniform_mesh_with(d, n_v, n_x, Diagonal::Rising)
}

pub fn uniform_mesh_with<T: Real>(d: &Domain<T>, n_v: usize, n_x: usize, diagonal: Diagonal) -> Result<Mesh<T>> {
    d.validate()?;
    if n_v == 0 || n_x == 0 {
        return Err(Error::DegenerateDomain(format!(
            "need at least one cell per direction, got {n_v} x {n_x}"
        )));
    }
    let dv = (d.v_max - d.v_min) / T::from_index(n_v);
    let dx = (d.x_max - d.x_min) / T::from_index(n_x);
    let mut vertices = Vec::with_capacity((n_v + 1) * (n_x + 1));
    for i in 0..=n_v {
        let v = if i == n_v { d.v_max } else { d.v_min + T::from_index(i) * dv };
        for j in 0..=n_x {
            let x = if j == n_x { d.x_max } else { d.x_min + T::from_index(j) * dx };
            vertices.push([v, x]);
        }
    }
    let id = |i: usize, j: usize| i * (n_x + 1) + j;
    let mut triangles = Vec::with_capacity(2 * n_v * n_x);
    for i in 0..n_v {
        for j in 0..n_x {
            let (p00, p10, p01, p11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            match diagonal {
                Diagonal::Rising => {
                    triangles.push([p11, p00, p10]);
                    triangles.push([p00, p11, p01]);
                }
                Diagonal::Falling => {
                    triangles.push([p10, p01, p00]);
                    triangles.push([p01, p10, p11]);
                }
            }
        }
    }
    Mesh::from_parts(*d, vertices, triangles)
}

impl<T: Real> Mesh<T> {
    /// Builds connectivity, boundary tags and geometric data.
    pub fn from_parts(domain: Domain<T>, vertices: Vec<Vec2<T>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let mut areas = Vec::with_capacity(triangles.len());
        let mut diameters = Vec::with_capacity(triangles.len());
        let mut min_angle = T::infinity();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::InconsistentBoundary(format!("triangle {t} references a missing vertex")));
            }
            let p = tri.map(|i| vertices[i]);
            let area = signed_area(p);
            if !(area > T::zero()) {
                return Err(Error::DegenerateDomain(format!(
                    "triangle {t} has non-positive signed area {area}"
                )));
            }
            areas.push(area);
            let lens = [0, 1, 2].map(|i| dist(p[(i + 1) % 3], p[(i + 2) % 3]));
            diameters.push(lens[0].max(lens[1]).max(lens[2]));
            min_angle = min_angle.min(smallest_angle(p));
        }

        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 2);
        let mut edges: Vec<Edge> = Vec::with_capacity(triangles.len() * 2);
        let mut tri_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut local = [0usize; 3];
            for (i, slot) in local.iter_mut().enumerate() {
                let (a, b) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
                let key = (a.min(b), a.max(b));
                let e = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        vertices: [a, b],
                        left: (t, i),
                        right: None,
                        side: None,
                    });
                    edges.len() - 1
                });
                if edges[e].left.0 != t {
                    if edges[e].right.is_some() {
                        return Err(Error::InconsistentBoundary(format!(
                            "edge ({a}, {b}) shared by more than two triangles"
                        )));
                    }
                    edges[e].right = Some((t, i));
                }
                *slot = e;
            }
            tri_edges.push(local);
        }

        let scale = (domain.v_max - domain.v_min).max(domain.x_max - domain.x_min);
        let tol = T::lit(1e-12) * scale;
        let on_side = |z: Vec2<T>, s: Side| match s {
            Side::VMin => (z[0] - domain.v_min).abs() <= tol,
            Side::VMax => (z[0] - domain.v_max).abs() <= tol,
            Side::XMin => (z[1] - domain.x_min).abs() <= tol,
            Side::XMax => (z[1] - domain.x_max).abs() <= tol,
        };
        for e in edges.iter_mut().filter(|e| e.right.is_none()) {
            let (a, b) = (vertices[e.vertices[0]], vertices[e.vertices[1]]);
            let side = Side::ALL.into_iter().find(|&s| on_side(a, s) && on_side(b, s));
            match side {
                Some(s) => e.side = Some(s),
                None => {
                    return Err(Error::InconsistentBoundary(format!(
                        "boundary edge ({:?}, {:?}) does not lie on the rectangle",
                        e.vertices[0], e.vertices[1]
                    )))
                }
            }
        }
        let edge_lengths = edges
            .iter()
            .map(|e| dist(vertices[e.vertices[0]], vertices[e.vertices[1]]))
            .collect();

        let locator = Locator::build(&domain, &vertices, &triangles);
        Ok(Self {
            domain,
            vertices,
            triangles,
            edges,
            tri_edges,
            areas,
            diameters,
            edge_lengths,
            min_angle,
            locator,
        })
    }

    pub fn domain(&self) -> &Domain<T> {
        &self.domain
    }

    pub fn vertices(&self) -> &[Vec2<T>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edge ids of triangle `t`, local edge `i` opposite vertex `i`.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.tri_edges[t]
    }

    pub fn corners(&self, t: usize) -> [Vec2<T>; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }

    pub fn area(&self, t: usize) -> T {
        self.areas[t]
    }

    /// Diameter `h_K` (longest edge).
    pub fn diameter(&self, t: usize) -> T {
        self.diameters[t]
    }

    /// Length `h_e` of edge `e`.
    pub fn edge_length(&self, e: usize) -> T {
        self.edge_lengths[e]
    }

    /// Smallest interior angle over all triangles, in radians.
    pub fn min_angle(&self) -> T {
        self.min_angle
    }

    /// Neighbour of `t` across its local edge `i`.
    pub fn neighbor(&self, t: usize, i: usize) -> Option<usize> {
        let e = &self.edges[self.tri_edges[t][i]];
        match e.right {
            Some((r, _)) if e.left.0 == t => Some(r),
            Some(_) => Some(e.left.0),
            None => None,
        }
    }

    /// Triangle containing `z`; on shared edges and vertices the lowest id wins.
    pub fn locate(&self, z: Vec2<T>) -> Option<usize> {
        self.locator.locate(self, z)
    }

    /// True when `z` lies in triangle `t` up to a relative tolerance.
    pub fn contains(&self, t: usize, z: Vec2<T>) -> bool {
        let p = self.corners(t);
        let tol = T::lit(-1e-12);
        barycentric(p, z).iter().all(|&l| l >= tol)
    }

    /// Newest-vertex bisection of the marked triangles followed by the
    /// closure that removes hanging nodes.
    pub fn refine(&self, marked: &[usize]) -> Result<Mesh<T>> {
        Ok(self.refine_tracked(marked)?.0)
    }

    /// As [`Mesh::refine`], also returning the parent of every new triangle.
    pub fn refine_tracked(&self, marked: &[usize]) -> Result<(Mesh<T>, Vec<usize>)> {
        if self.triangles.is_empty() {
            return Err(Error::EmptyMesh);
        }
        if let Some(&bad) = marked.iter().find(|&&t| t >= self.triangles.len()) {
            return Err(Error::TriangleOutOfRange(bad));
        }
        // Mark refinement edges, then close: a triangle with any marked edge
        // must also bisect its refinement edge.
        let mut marked_edges: HashSet<usize> = HashSet::new();
        let mut stack: Vec<usize> = Vec::new();
        for &t in marked {
            let e = self.tri_edges[t][2];
            if marked_edges.insert(e) {
                stack.push(e);
            }
        }
        while let Some(e) = stack.pop() {
            let edge = &self.edges[e];
            for (t, _) in std::iter::once(edge.left).chain(edge.right) {
                let r = self.tri_edges[t][2];
                if marked_edges.insert(r) {
                    stack.push(r);
                }
            }
        }

        let mut vertices = self.vertices.clone();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut ordered: Vec<usize> = marked_edges.into_iter().collect();
        ordered.sort_unstable();
        for &e in &ordered {
            let [a, b] = self.edges[e].vertices;
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            let half = T::lit(0.5);
            vertices.push([half * (pa[0] + pb[0]), half * (pa[1] + pb[1])]);
            midpoint.insert((a.min(b), a.max(b)), vertices.len() - 1);
        }

        let mut triangles = Vec::with_capacity(self.triangles.len() + 2 * ordered.len());
        let mut parents = Vec::with_capacity(triangles.capacity());
        for (t, &tri) in self.triangles.iter().enumerate() {
            bisect(tri, &midpoint, t, &mut triangles, &mut parents);
        }
        let mesh = Mesh::from_parts(self.domain, vertices, triangles)?;
        Ok((mesh, parents))
    }

    /// Writes a vertex table followed by a triangle index table.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# vertices {}", self.vertices.len())?;
        writeln!(w, "v,x")?;
        for p in &self.vertices {
            writeln!(w, "{},{}", p[0], p[1])?;
        }
        writeln!(w, "# triangles {}", self.triangles.len())?;
        writeln!(w, "a,b,c")?;
        for t in &self.triangles {
            writeln!(w, "{},{},{}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

fn bisect(
    tri: [usize; 3],
    midpoint: &HashMap<(usize, usize), usize>,
    parent: usize,
    out: &mut Vec<[usize; 3]>,
    parents: &mut Vec<usize>,
) {
    let [a, b, c] = tri;
    match midpoint.get(&(a.min(b), a.max(b))) {
        Some(&m) => {
            bisect([c, a, m], midpoint, parent, out, parents);
            bisect([b, c, m], midpoint, parent, out, parents);
        }
        None => {
            out.push(tri);
            parents.push(parent);
        }
    }
}

pub(crate) fn signed_area<T: Real>(p: [Vec2<T>; 3]) -> T {
    T::lit(0.5) * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

fn dist<T: Real>(a: Vec2<T>, b: Vec2<T>) -> T {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn smallest_angle<T: Real>(p: [Vec2<T>; 3]) -> T {
    let mut best = T::infinity();
    for i in 0..3 {
        let (o, a, b) = (p[i], p[(i + 1) % 3], p[(i + 2) % 3]);
        let u = [a[0] - o[0], a[1] - o[1]];
        let w = [b[0] - o[0], b[1] - o[1]];
        let cross = u[0] * w[1] - u[1] * w[0];
        let dot = u[0] * w[0] + u[1] * w[1];
        best = best.min(cross.abs().atan2(dot));
    }
    best
}

/// Barycentric coordinates of `z` with respect to `p`.
pub(crate) fn barycentric<T: Real>(p: [Vec2<T>; 3], z: Vec2<T>) -> [T; 3] {
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let l1 = ((z[0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (z[1] - p[0][1])) / det;
    let l2 = ((p[1][0] - p[0][0]) * (z[1] - p[0][1]) - (z[0] - p[0][0]) * (p[1][1] - p[0][1])) / det;
    [T::one() - l1 - l2, l1, l2]
}

/// Uniform bucket grid over the rectangle for point location.
#[derive(Clone, Debug)]
struct Locator<T> {
    origin: Vec2<T>,
    cell: Vec2<T>,
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl<T: Real> Locator<T> {
    fn build(d: &Domain<T>, vertices: &[Vec2<T>], triangles: &[[usize; 3]]) -> Self {
        let n = ((triangles.len() as f64 / 2.0).sqrt().ceil() as usize).clamp(1, 512);
        let dims = [n, n];
        let cell = [
            (d.v_max - d.v_min) / T::from_index(n),
            (d.x_max - d.x_min) / T::from_index(n),
        ];
        let mut loc = Self {
            origin: [d.v_min, d.x_min],
            cell,
            dims,
            buckets: vec![Vec::new(); n * n],
        };
        for (t, tri) in triangles.iter().enumerate() {
            let p = tri.map(|i| vertices[i]);
            let lo = [
                p[0][0].min(p[1][0]).min(p[2][0]),
                p[0][1].min(p[1][1]).min(p[2][1]),
            ];
            let hi = [
                p[0][0].max(p[1][0]).max(p[2][0]),
                p[0][1].max(p[1][1]).max(p[2][1]),
            ];
            let (i0, j0) = loc.bucket(lo);
            let (i1, j1) = loc.bucket(hi);
            for i in i0..=i1 {
                for j in j0..=j1 {
                    loc.buckets[i * dims[1] + j].push(t);
                }
            }
        }
        loc
    }

    fn bucket(&self, z: Vec2<T>) -> (usize, usize) {
        let idx = |k: usize| {
            let f = ((z[k] - self.origin[k]) / self.cell[k]).floor();
            let f = f.max(T::zero()).to_usize().unwrap_or(0);
            f.min(self.dims[k] - 1)
        };
        (idx(0), idx(1))
    }

    fn locate(&self, mesh: &Mesh<T>, z: Vec2<T>) -> Option<usize> {
        let scale = self.cell[0].max(self.cell[1]);
        if !mesh.domain.contains(z, T::lit(1e-12) * scale) {
            return None;
        }
        let (i, j) = self.bucket(z);
        self.buckets[i * self.dims[1] + j]
            .iter()
            .copied()
            .filter(|&t| mesh.contains(t, z))
            .min()
    }
}
