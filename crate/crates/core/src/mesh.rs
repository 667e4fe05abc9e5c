//! Triangulations of the reference disk built by uniform red refinement of a
//! hexagon fan, with boundary vertices projected onto the circle after every
//! refinement step. All parameter samples share the topology; physical
//! meshes are obtained by moving vertices.

use std::collections::HashMap;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::geometry::{Point, ShapeSample};

pub const MAX_LEVEL: u32 = 8;

#[derive(Clone, Debug)]
pub struct TriangleMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    level: u32,
}

/// Signed area of the triangle `(a, b, c)`; positive when counterclockwise.
pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Mesh of the unit disk with `6 * 4^level` triangles.
pub fn unit_disk_mesh(level: u32) -> Result<TriangleMesh> {
    if level > MAX_LEVEL {
        return Err(Error::Resource(format!(
            "mesh level {level} exceeds the cap {MAX_LEVEL}"
        )));
    }
    let mut vertices = vec![[0.0, 0.0]];
    let mut boundary = vec![false];
    for k in 0..6 {
        let a = std::f64::consts::PI / 3.0 * k as f64;
        vertices.push([a.cos(), a.sin()]);
        boundary.push(true);
    }
    let mut triangles: Vec<[usize; 3]> = (0..6).map(|k| [0, 1 + k, 1 + (k + 1) % 6]).collect();

    for _ in 0..level {
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &triangles {
            for e in 0..3 {
                *edge_count.entry(edge_key(t[e], t[(e + 1) % 3])).or_default() += 1;
            }
        }
        let first_new = vertices.len();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut refined = Vec::with_capacity(4 * triangles.len());
        for t in &triangles {
            let mut mid = [0usize; 3];
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                let key = edge_key(a, b);
                mid[e] = *midpoint.entry(key).or_insert_with(|| {
                    let (pa, pb) = (vertices[a], vertices[b]);
                    vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                    boundary.push(edge_count[&key] == 1);
                    vertices.len() - 1
                });
            }
            let [a, b, c] = *t;
            let [ab, bc, ca] = mid;
            refined.push([a, ab, ca]);
            refined.push([ab, b, bc]);
            refined.push([ca, bc, c]);
            refined.push([ab, bc, ca]);
        }
        triangles = refined;
        for (v, on_boundary) in vertices.iter_mut().zip(&boundary).skip(first_new) {
            if *on_boundary {
                let r = v[0].hypot(v[1]);
                v[0] /= r;
                v[1] /= r;
            }
        }
    }

    Ok(TriangleMesh {
        vertices,
        triangles,
        boundary,
        level,
    })
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl TriangleMesh {
    /// Mesh from explicit vertices and counterclockwise triangles. Boundary
    /// vertices are those on edges used by exactly one triangle.
    pub fn from_parts(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for (i, t) in triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Parameter(format!("triangle {i} references a missing vertex")));
            }
            if signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]) <= 0.0 {
                return Err(Error::Parameter(format!("triangle {i} is not counterclockwise")));
            }
            for e in 0..3 {
                *edge_count.entry(edge_key(t[e], t[(e + 1) % 3])).or_default() += 1;
            }
        }
        if let Some((edge, _)) = edge_count.iter().find(|(_, &c)| c > 2) {
            return Err(Error::Parameter(format!("edge {edge:?} shared by more than two triangles")));
        }
        let mut boundary = vec![false; vertices.len()];
        for (&(a, b), &c) in &edge_count {
            if c == 1 {
                boundary[a] = true;
                boundary[b] = true;
            }
        }
        Ok(TriangleMesh {
            vertices,
            triangles,
            boundary,
            level: 0,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&v| self.boundary[v]).collect()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        signed_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    /// Maximum triangle diameter `h`.
    pub fn mesh_size(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.diameter(t))
            .fold(0.0, f64::max)
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_degrees(&self) -> f64 {
        let mut min = f64::INFINITY;
        for t in 0..self.triangles.len() {
            let p = self.corners(t);
            for k in 0..3 {
                let (o, u, v) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
                let (ux, uy) = (u[0] - o[0], u[1] - o[1]);
                let (vx, vy) = (v[0] - o[0], v[1] - o[1]);
                let cos = (ux * vx + uy * vy) / (ux.hypot(uy) * vx.hypot(vy));
                min = min.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        min
    }

    /// Unique edges as sorted vertex pairs.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |e| edge_key(t[e], t[(e + 1) % 3])))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Neighbouring triangle across edge `e` (opposite to local vertex `e + 2`),
    /// i.e. across the edge `(t[e], t[e + 1])`.
    pub fn neighbors(&self) -> Vec<[Option<usize>; 3]> {
        let mut owner: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for (ti, t) in self.triangles.iter().enumerate() {
            for e in 0..3 {
                owner
                    .entry(edge_key(t[e], t[(e + 1) % 3]))
                    .or_default()
                    .push((ti, e));
            }
        }
        let mut out = vec![[None; 3]; self.triangles.len()];
        for list in owner.values() {
            if let [(t0, e0), (t1, e1)] = list[..] {
                out[t0][e0] = Some(t1);
                out[t1][e1] = Some(t0);
            }
        }
        out
    }

    /// Uniform scaling of all vertex coordinates.
    pub fn scaled(&self, factor: f64) -> TriangleMesh {
        let mut out = self.clone();
        for v in &mut out.vertices {
            v[0] *= factor;
            v[1] *= factor;
        }
        out
    }

    /// Physical mesh: vertices moved by the shape transformation, topology
    /// unchanged.
    pub fn pushforward(&self, shape: &ShapeSample) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|&v| shape.transform(v)).collect(),
            triangles: self.triangles.clone(),
            boundary: self.boundary.clone(),
            level: self.level,
        }
    }

    /// Plain-text dump: `vertices N triangles T`, then `x y` lines, then
    /// 0-based `i j k` lines.
    pub fn write_dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "vertices {} triangles {}",
            self.vertices.len(),
            self.triangles.len()
        )?;
        for v in &self.vertices {
            writeln!(out, "{:.17e} {:.17e}", v[0], v[1])?;
        }
        for t in &self.triangles {
            writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}
