use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use super::group::{build_genus2_octagon, inverse_index, mobius_key, FuchsianGroup, Octagon, Word};
use crate::disk::{self, Mobius};
use crate::sparse::{CsrMatrix, Triplets};
use crate::{Error, Result};

pub const MESH_FORMAT_HEADER: &str = "hitchlab-mesh v1";

/// Subdivisions of each sector edge at level 0.
const BASE_SUBDIVISIONS: usize = 16;
const MATCH_TOL: f64 = 1e-9;

/// A boundary vertex that is a translate of its representative:
/// `vertices[vertex] = eval(word)(vertices[representative])`.
#[derive(Clone, Debug, PartialEq)]
pub struct Identification {
    pub vertex: usize,
    pub representative: usize,
    pub word: Word,
}

/// Triangulated octagon with its side identifications.
///
/// Vertices on the boundary are stored in every copy in which they occur;
/// `dof[v]` names the logical degree of freedom and `words[v]` the group
/// element carrying the representative of that dof onto `v`.
#[derive(Clone, Debug)]
pub struct SurfaceMesh {
    pub level: u32,
    pub subdivisions: usize,
    pub vertices: Vec<Complex64>,
    pub triangles: Vec<[usize; 3]>,
    pub dof: Vec<usize>,
    pub words: Vec<Word>,
    /// Vertex index of the representative of each dof.
    pub representatives: Vec<usize>,
    pub identifications: Vec<Identification>,
    /// Unique vertex pairs `(a, b)` with `a < b`.
    pub edges: Vec<[usize; 2]>,
    /// Edge opposite each triangle corner.
    pub triangle_edges: Vec<[usize; 3]>,
    /// Hyperbolic area lumped to vertices.
    pub vertex_area: Vec<f64>,
    pub dof_area: Vec<f64>,
    pub group: FuchsianGroup,
    pub octagon: Octagon,
}

/// Cotangent weights of a (possibly Beltrami-sheared) mesh.
#[derive(Clone, Debug)]
pub struct CotanWeights {
    /// `½ cot` of the angle opposite each triangle corner.
    pub per_triangle: Vec<[f64; 3]>,
    /// Sum of the triangle contributions for each mesh edge.
    pub per_edge: Vec<f64>,
}

/// `½ cot` of the angles of the triangle `z` after the shear `z ↦ z + μ z̄`,
/// indexed by the corner opposite to the edge.
pub fn triangle_cotans(z: [Complex64; 3], mu: Complex64) -> [f64; 3] {
    let w = if mu == Complex64::new(0.0, 0.0) {
        z
    } else {
        [
            z[0] + mu * z[0].conj(),
            z[1] + mu * z[1].conj(),
            z[2] + mu * z[2].conj(),
        ]
    };
    let mut out = [0.0; 3];
    for k in 0..3 {
        let u = w[(k + 1) % 3] - w[k];
        let v = w[(k + 2) % 3] - w[k];
        let p = u.conj() * v;
        out[k] = 0.5 * p.re / p.im.abs();
    }
    out
}

fn signed_area(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    0.5 * ((b - a).conj() * (c - a)).im
}

/// Point of the polygon side of sector `k` in direction `dir`, pushed from
/// the chord onto the geodesic arc.
fn bend(oct: &Octagon, p: Complex64) -> Complex64 {
    if p.norm() == 0.0 {
        return p;
    }
    let theta = p.arg();
    // Sector containing the direction: side k spans angles kπ/4 ± π/8.
    let k = ((theta / (std::f64::consts::PI / 4.0)).round() as i64).rem_euclid(8) as usize;
    let phi = theta - Octagon::side_angle(k);
    let m = oct.midpoint_radius;
    let (c0, c1) = oct.side_corners(k);
    // Chord through the two corners, intersected with the ray.
    let dir = Complex64::from_polar(1.0, theta);
    let e = c1 - c0;
    let denom = (dir.conj() * e).im;
    let t_chord = (c0.conj() * e).im / denom;
    let dist = (1.0 + m * m) / (2.0 * m);
    let cp = phi.cos();
    let t_arc = dist * cp - (dist * dist * cp * cp - 1.0).sqrt();
    p * (t_arc / t_chord)
}

struct Builder {
    n: usize,
    keys: HashMap<(usize, usize, usize), usize>,
    vertices: Vec<Complex64>,
    side_of: Vec<Option<usize>>,
}

impl Builder {
    /// Canonical key: the ray `j = i` of sector `k` is the ray `j = 0` of
    /// sector `k + 1`, and the centre is shared by all.
    fn key(&self, k: usize, i: usize, j: usize) -> (usize, usize, usize) {
        if i == 0 {
            (0, 0, 0)
        } else if j == i {
            ((k + 1) % 8, i, 0)
        } else {
            (k, i, j)
        }
    }

    fn vertex(&mut self, oct: &Octagon, k: usize, i: usize, j: usize) -> usize {
        let key = self.key(k, i, j);
        if let Some(&v) = self.keys.get(&key) {
            return v;
        }
        let (k, i, j) = key;
        let n = self.n as f64;
        let (c0, c1) = oct.side_corners(k);
        let flat = c0 * ((i - j) as f64 / n) + c1 * (j as f64 / n);
        let z = if i == 0 { flat } else { bend(oct, flat) };
        let v = self.vertices.len();
        self.vertices.push(z);
        self.side_of.push((i == self.n && j != 0).then_some(k));
        self.keys.insert(key, v);
        v
    }
}

/// Triangulates the octagon into eight bent sectors with `16·2^level`
/// subdivisions per sector edge.
pub fn triangulate(group: &FuchsianGroup, octagon: &Octagon, level: u32) -> Result<SurfaceMesh> {
    if level > 6 {
        return Err(Error::Invalid(format!("mesh level {level} is too large")));
    }
    let n = BASE_SUBDIVISIONS << level;
    let mut b = Builder {
        n,
        keys: HashMap::new(),
        vertices: Vec::new(),
        side_of: Vec::new(),
    };
    let mut triangles = Vec::new();
    for k in 0..8 {
        for i in 0..n {
            for j in 0..=i {
                let a = b.vertex(octagon, k, i, j);
                let p = b.vertex(octagon, k, i + 1, j);
                let q = b.vertex(octagon, k, i + 1, j + 1);
                triangles.push([a, p, q]);
                if j < i {
                    let r = b.vertex(octagon, k, i, j + 1);
                    triangles.push([a, q, r]);
                }
            }
        }
    }
    let vertices = b.vertices;
    for t in triangles.iter_mut() {
        if signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]) < 0.0 {
            t.swap(1, 2);
        }
    }
    // Corner c is the end of the ray j = 0 of sector c + 1.
    let corner_vertex: Vec<usize> = (0..8).map(|c| b.keys[&((c + 1) % 8, n, 0)]).collect();
    let (words, representative) = identify(group, octagon, &vertices, &b.side_of, &corner_vertex)?;
    SurfaceMesh::assemble(
        level,
        n,
        vertices,
        triangles,
        words,
        representative,
        group.clone(),
        octagon.clone(),
    )
}

/// Words and representatives of every vertex.
fn identify(
    group: &FuchsianGroup,
    octagon: &Octagon,
    vertices: &[Complex64],
    side_of: &[Option<usize>],
    corner_vertex: &[usize],
) -> Result<(Vec<Word>, Vec<usize>)> {
    let nv = vertices.len();
    let mut words: Vec<Word> = vec![Vec::new(); nv];
    let mut representative: Vec<usize> = (0..nv).collect();
    let mut by_side: Vec<Vec<usize>> = vec![Vec::new(); 8];
    for (v, s) in side_of.iter().enumerate() {
        if let Some(k) = s {
            by_side[*k].push(v);
        }
    }
    for &(from, to, gen) in &octagon.pairings {
        if by_side[from].len() != by_side[to].len() {
            return Err(Error::Identification(format!(
                "sides {from} and {to} have {} and {} vertices",
                by_side[from].len(),
                by_side[to].len()
            )));
        }
        let inv = group.generators[inverse_index(gen) as usize];
        for &v in &by_side[to] {
            let target = inv.apply(vertices[v]);
            let (best, dist) = by_side[from]
                .iter()
                .map(|&u| (u, (vertices[u] - target).norm()))
                .fold((usize::MAX, f64::INFINITY), |acc, x| {
                    if x.1 < acc.1 {
                        x
                    } else {
                        acc
                    }
                });
            if dist > MATCH_TOL {
                return Err(Error::Identification(format!(
                    "vertex {v} on side {to} has no partner on side {from} (gap {dist:e})"
                )));
            }
            representative[v] = best;
            words[v] = vec![gen];
        }
    }
    // Corners: one orbit, reached from corner 0 through the pairings.
    let corner_index = |z: Complex64| (0..8).find(|&k| (octagon.corners[k] - z).norm() < MATCH_TOL);
    let mut corner_word: Vec<Option<Word>> = vec![None; 8];
    corner_word[0] = Some(Vec::new());
    let mut queue = VecDeque::from([0usize]);
    while let Some(c) = queue.pop_front() {
        let word = corner_word[c].clone().expect("visited");
        for &(from, to, gen) in &octagon.pairings {
            for (side, g) in [(from, gen), (to, inverse_index(gen))] {
                let (e0, e1) = octagon.side_corners(side);
                let z = octagon.corners[c];
                if (e0 - z).norm() > MATCH_TOL && (e1 - z).norm() > MATCH_TOL {
                    continue;
                }
                let image = group.generators[g as usize].apply(z);
                let Some(next) = corner_index(image) else {
                    return Err(Error::Identification(format!(
                        "corner {c} is not mapped to a corner by generator {g}"
                    )));
                };
                if corner_word[next].is_none() {
                    let mut w = vec![g];
                    w.extend_from_slice(&word);
                    corner_word[next] = Some(w);
                    queue.push_back(next);
                }
            }
        }
    }
    for k in 0..8 {
        let Some(w) = corner_word[k].clone() else {
            return Err(Error::Identification(format!("corner {k} not reached")));
        };
        let v = corner_vertex[k];
        let pos = group.eval(&w).apply(octagon.corners[0]);
        if (pos - vertices[v]).norm() > MATCH_TOL {
            return Err(Error::Identification(format!(
                "corner {k} word misplaces it"
            )));
        }
        representative[v] = corner_vertex[0];
        words[v] = w;
    }
    Ok((words, representative))
}

impl SurfaceMesh {
    /// Builds the level-`level` mesh of the regular octagon.
    pub fn octagon(level: u32) -> Result<Self> {
        let (group, oct) = build_genus2_octagon();
        triangulate(&group, &oct, level)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        level: u32,
        subdivisions: usize,
        vertices: Vec<Complex64>,
        triangles: Vec<[usize; 3]>,
        words: Vec<Word>,
        representative: Vec<usize>,
        group: FuchsianGroup,
        octagon: Octagon,
    ) -> Result<Self> {
        let nv = vertices.len();
        let mut dof = vec![usize::MAX; nv];
        let mut representatives = Vec::new();
        for v in 0..nv {
            if representative[v] == v {
                dof[v] = representatives.len();
                representatives.push(v);
            }
        }
        let mut identifications = Vec::new();
        for v in 0..nv {
            let r = representative[v];
            if r != v {
                if representative[r] != r {
                    return Err(Error::Identification(format!(
                        "representative {r} of vertex {v} is itself identified"
                    )));
                }
                dof[v] = dof[r];
                identifications.push(Identification {
                    vertex: v,
                    representative: r,
                    word: words[v].clone(),
                });
            }
        }
        let mut edge_index: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for t in &triangles {
            let mut te = [0; 3];
            for k in 0..3 {
                let (a, b) = (t[(k + 1) % 3], t[(k + 2) % 3]);
                let key = [a.min(b), a.max(b)];
                te[k] = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edges.len() - 1
                });
            }
            triangle_edges.push(te);
        }
        let mut vertex_area = vec![0.0; nv];
        for t in &triangles {
            let z = [vertices[t[0]], vertices[t[1]], vertices[t[2]]];
            let euclid = signed_area(z[0], z[1], z[2]);
            // Edge-midpoint rule for the conformal factor.
            let lam: f64 = (0..3)
                .map(|k| disk::area_density((z[k] + z[(k + 1) % 3]) / 2.0))
                .sum::<f64>()
                / 3.0;
            for &v in t {
                vertex_area[v] += lam * euclid / 3.0;
            }
        }
        let mut dof_area = vec![0.0; representatives.len()];
        for v in 0..nv {
            dof_area[dof[v]] += vertex_area[v];
        }
        Ok(Self {
            level,
            subdivisions,
            vertices,
            triangles,
            dof,
            words,
            representatives,
            identifications,
            edges,
            triangle_edges,
            vertex_area,
            dof_area,
            group,
            octagon,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_dofs(&self) -> usize {
        self.representatives.len()
    }

    pub fn total_area(&self) -> f64 {
        self.vertex_area.iter().sum()
    }

    /// Group element (of the domain group) placing each vertex.
    pub fn vertex_transforms(&self) -> Vec<Mobius> {
        self.words.iter().map(|w| self.group.eval(w)).collect()
    }

    /// Mean hyperbolic edge length.
    pub fn mesh_size(&self) -> f64 {
        let total: f64 = self
            .edges
            .iter()
            .map(|e| disk::distance(self.vertices[e[0]], self.vertices[e[1]]))
            .sum();
        total / self.edges.len() as f64
    }

    /// Longest hyperbolic edge; sits near the corners, where cells are
    /// stretched, and approaches halving only asymptotically.
    pub fn max_edge_length(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| disk::distance(self.vertices[e[0]], self.vertices[e[1]]))
            .fold(0.0, f64::max)
    }

    /// Euler characteristic of the identified complex.
    pub fn euler_characteristic(&self) -> i64 {
        let transforms = self.vertex_transforms();
        let key = |m: &Mobius| mobius_key(m, 1e6);
        let mut seen = std::collections::HashSet::new();
        for &[a, b] in &self.edges {
            let (a, b) = if self.dof[a] <= self.dof[b] {
                (a, b)
            } else {
                (b, a)
            };
            let rel = transforms[a].inverse().compose(&transforms[b]);
            let mut k = key(&rel);
            if self.dof[a] == self.dof[b] {
                k = k.min(key(&rel.inverse()));
            }
            seen.insert((self.dof[a], self.dof[b], k));
        }
        self.num_dofs() as i64 - seen.len() as i64 + self.triangles.len() as i64
    }

    /// Scalar Laplacian on dofs, `(L f)_i = Σ w_ij (f_i - f_j)`.
    pub fn scalar_laplacian(&self, weights: &CotanWeights) -> CsrMatrix {
        let mut t = Triplets::new(self.num_dofs());
        for (e, &[a, b]) in self.edges.iter().enumerate() {
            let (i, j, w) = (self.dof[a], self.dof[b], weights.per_edge[e]);
            t.push(i, i, w);
            t.push(j, j, w);
            t.push(i, j, -w);
            t.push(j, i, -w);
        }
        t.build()
    }

    /// Serialises the mesh as a plain-text table.
    ///
    /// ```text
    /// hitchlab-mesh v1
    /// level <L> subdivisions <N>
    /// vertices <V>
    /// <re> <im> <dof> <word letters or ->      (V lines)
    /// triangles <T>
    /// <a> <b> <c>                               (T lines)
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{MESH_FORMAT_HEADER}");
        let _ = writeln!(s, "level {} subdivisions {}", self.level, self.subdivisions);
        let _ = writeln!(s, "vertices {}", self.vertices.len());
        for (v, z) in self.vertices.iter().enumerate() {
            let word = if self.words[v].is_empty() {
                "-".to_string()
            } else {
                self.words[v].iter().map(|g| char::from(b'0' + g)).collect()
            };
            let _ = writeln!(s, "{:e} {:e} {} {}", z.re, z.im, self.dof[v], word);
        }
        let _ = writeln!(s, "triangles {}", self.triangles.len());
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |what: &str| Error::Invalid(format!("mesh file: {what}"));
        let mut lines = text.lines();
        if lines.next() != Some(MESH_FORMAT_HEADER) {
            return Err(bad("missing header"));
        }
        let head: Vec<&str> = lines
            .next()
            .ok_or_else(|| bad("truncated"))?
            .split_whitespace()
            .collect();
        let (level, subdivisions) = match head.as_slice() {
            ["level", l, "subdivisions", n] => (
                l.parse().map_err(|_| bad("level"))?,
                n.parse().map_err(|_| bad("subdivisions"))?,
            ),
            _ => return Err(bad("level line")),
        };
        let count = |line: Option<&str>, tag: &str| -> Result<usize> {
            let line = line.ok_or_else(|| bad("truncated"))?;
            line.strip_prefix(tag)
                .and_then(|r| r.trim().parse().ok())
                .ok_or_else(|| bad(tag))
        };
        let nv = count(lines.next(), "vertices")?;
        let mut vertices = Vec::with_capacity(nv);
        let mut dofs = Vec::with_capacity(nv);
        let mut words = Vec::with_capacity(nv);
        for _ in 0..nv {
            let f: Vec<&str> = lines
                .next()
                .ok_or_else(|| bad("truncated"))?
                .split_whitespace()
                .collect();
            if f.len() != 4 {
                return Err(bad("vertex line"));
            }
            let re: f64 = f[0].parse().map_err(|_| bad("coordinate"))?;
            let im: f64 = f[1].parse().map_err(|_| bad("coordinate"))?;
            let d: usize = f[2].parse().map_err(|_| bad("dof"))?;
            let w: Word = if f[3] == "-" {
                Vec::new()
            } else {
                f[3].bytes().map(|c| c.wrapping_sub(b'0')).collect()
            };
            if w.iter().any(|&g| g > 7) {
                return Err(bad("word"));
            }
            vertices.push(Complex64::new(re, im));
            dofs.push(d);
            words.push(w);
        }
        let nt = count(lines.next(), "triangles")?;
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let f: Vec<usize> = lines
                .next()
                .ok_or_else(|| bad("truncated"))?
                .split_whitespace()
                .map(|x| x.parse().map_err(|_| bad("triangle")))
                .collect::<Result<_>>()?;
            if f.len() != 3 || f.iter().any(|&v| v >= nv) {
                return Err(bad("triangle"));
            }
            triangles.push([f[0], f[1], f[2]]);
        }
        // Representatives are the first vertex carrying each dof with an
        // empty word.
        let mut rep_of_dof: HashMap<usize, usize> = HashMap::new();
        for v in 0..nv {
            if words[v].is_empty() {
                if rep_of_dof.insert(dofs[v], v).is_some() {
                    return Err(bad("two representatives for one dof"));
                }
            }
        }
        let representative = (0..nv)
            .map(|v| {
                rep_of_dof
                    .get(&dofs[v])
                    .copied()
                    .ok_or_else(|| bad("dof without representative"))
            })
            .collect::<Result<Vec<_>>>()?;
        let (group, octagon) = build_genus2_octagon();
        let mesh = Self::assemble(
            level,
            subdivisions,
            vertices,
            triangles,
            words,
            representative,
            group,
            octagon,
        )?;
        if mesh.dof != dofs {
            return Err(bad("dof numbering is not canonical"));
        }
        Ok(mesh)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Cotangent weights for the conformal structure `|dz + μ dz̄|²`, with `μ`
/// given per vertex (or `None` for the undeformed structure) and averaged
/// over each triangle.
pub fn cotan_weights(mesh: &SurfaceMesh, mu: Option<&[Complex64]>) -> Result<CotanWeights> {
    if let Some(mu) = mu {
        if mu.len() != mesh.num_vertices() {
            return Err(Error::Invalid(format!(
                "Beltrami sample has {} values for {} vertices",
                mu.len(),
                mesh.num_vertices()
            )));
        }
        let sup = mu.iter().map(|m| m.norm()).fold(0.0, f64::max);
        if !(sup < 1.0) {
            return Err(Error::BeltramiTooLarge(sup));
        }
    }
    let per_triangle: Vec<[f64; 3]> = mesh
        .triangles
        .iter()
        .map(|t| {
            let z = [
                mesh.vertices[t[0]],
                mesh.vertices[t[1]],
                mesh.vertices[t[2]],
            ];
            let m = match mu {
                Some(mu) => (mu[t[0]] + mu[t[1]] + mu[t[2]]) / 3.0,
                None => Complex64::new(0.0, 0.0),
            };
            triangle_cotans(z, m)
        })
        .collect();
    let mut per_edge = vec![0.0; mesh.edges.len()];
    for (t, w) in per_triangle.iter().enumerate() {
        for k in 0..3 {
            per_edge[mesh.triangle_edges[t][k]] += w[k];
        }
    }
    Ok(CotanWeights {
        per_triangle,
        per_edge,
    })
}

/// `Σ_v density(v)·area(v)` over mesh vertices.
pub fn integrate(mesh: &SurfaceMesh, density: &[f64]) -> f64 {
    assert_eq!(density.len(), mesh.num_vertices());
    density
        .iter()
        .zip(&mesh.vertex_area)
        .map(|(d, a)| d * a)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn mesh0() -> SurfaceMesh {
        SurfaceMesh::octagon(0).unwrap()
    }

    #[test]
    fn level0_size_and_topology() {
        let m = mesh0();
        assert!(m.num_vertices() > 800 && m.num_vertices() < 1500);
        assert_eq!(m.euler_characteristic(), -2);
    }

    #[test]
    fn identified_vertices_are_translates() {
        let m = mesh0();
        for id in &m.identifications {
            let g = m.group.eval(&id.word);
            let z = g.apply(m.vertices[id.representative]);
            assert!((z - m.vertices[id.vertex]).norm() < 1e-9);
        }
        // 8 corners in one dof plus the side interiors of four sides.
        let n = m.subdivisions;
        assert_eq!(m.identifications.len(), 7 + 4 * (n - 1));
    }

    #[test]
    fn triangles_are_positively_oriented() {
        let m = mesh0();
        for t in &m.triangles {
            let a = signed_area(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]);
            assert!(a > 0.0);
        }
    }

    #[test]
    fn area_close_to_four_pi() {
        let m = mesh0();
        let rel = (m.total_area() - 4.0 * PI).abs() / (4.0 * PI);
        assert!(rel < 0.02, "{rel}");
        let d: Vec<f64> = vec![0.0; m.num_vertices()];
        assert_eq!(integrate(&m, &d), 0.0);
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let m = mesh0();
        let w = cotan_weights(&m, None).unwrap();
        let l = m.scalar_laplacian(&w);
        for i in 0..l.dim() {
            let s: f64 = l.row(i).map(|(_, v)| v).sum();
            assert!(s.abs() < 1e-10);
        }
        assert_eq!(l.asymmetry(), 0.0);
    }

    #[test]
    fn zero_beltrami_is_bitwise_identity() {
        let m = mesh0();
        let a = cotan_weights(&m, None).unwrap();
        let zero = vec![Complex64::new(0.0, 0.0); m.num_vertices()];
        let b = cotan_weights(&m, Some(&zero)).unwrap();
        assert_eq!(a.per_edge, b.per_edge);
    }

    #[test]
    fn rejects_large_beltrami() {
        let m = mesh0();
        let big = vec![Complex64::new(1.0, 0.0); m.num_vertices()];
        assert!(matches!(
            cotan_weights(&m, Some(&big)),
            Err(Error::BeltramiTooLarge(_))
        ));
    }

    #[test]
    fn text_roundtrip() {
        let m = mesh0();
        let back = SurfaceMesh::from_text(&m.to_text()).unwrap();
        assert_eq!(back.triangles, m.triangles);
        assert_eq!(back.dof, m.dof);
        assert_eq!(back.words, m.words);
        assert_eq!(back.to_text(), m.to_text());
        assert!(SurfaceMesh::from_text("nope").is_err());
    }
}
