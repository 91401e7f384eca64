//! Boundary element backend for closed triangulated surfaces.
//!
//! Centroid Nystrom discretisation with one collocation point per flat
//! panel. The single layer self-term is the exact potential of a flat disk
//! of equal area plus the smooth limit `i z / (4 pi)`; the static `K*`
//! diagonal comes from the Gauss identity `\int_Gamma d_nu_x G_0(x - y) = -1/2`
//! applied column by column (area weighted), which is what the adjoint
//! double layer actually satisfies on a non-spherical surface.

use crate::error::{FprError, Result};
use crate::medium::Medium;
use crate::modal::ball_dirichlet_roots;
use faer::linalg::solvers::Solve;
use faer::{c64, Mat};
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{Read, Write};

type V3 = [f64; 3];

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
fn cross(a: V3, b: V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}
fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}

/// Closed triangulated surface with per-panel quadrature data.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    pub vertices: Vec<V3>,
    pub triangles: Vec<[usize; 3]>,
    pub centers: Vec<V3>,
    pub areas: Vec<f64>,
    pub normals: Vec<V3>,
}

impl SurfaceMesh {
    /// Builds panel data and orients all normals outward (positive volume).
    pub fn from_parts(vertices: Vec<V3>, mut triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(FprError::DegenerateMesh("no triangles".into()));
        }
        for t in &triangles {
            if t.iter().any(|&i| i >= vertices.len()) {
                return Err(FprError::DegenerateMesh(format!("triangle {t:?} references a missing vertex")));
            }
        }
        let mut mesh = Self::geometry(vertices, &triangles)?;
        if mesh.volume() < 0.0 {
            for t in triangles.iter_mut() {
                t.swap(1, 2);
            }
            mesh = Self::geometry(mesh.vertices, &triangles)?;
        }
        let total = mesh.total_area();
        let mut s = [0.0; 3];
        for (n, a) in mesh.normals.iter().zip(&mesh.areas) {
            for d in 0..3 {
                s[d] += a * n[d];
            }
        }
        if norm(s) > 1e-10 * total {
            return Err(FprError::DegenerateMesh(format!(
                "surface is not closed or not consistently oriented (|sum a n| = {:.3e})",
                norm(s)
            )));
        }
        Ok(mesh)
    }

    fn geometry(vertices: Vec<V3>, triangles: &[[usize; 3]]) -> Result<Self> {
        let mut centers = Vec::with_capacity(triangles.len());
        let mut areas = Vec::with_capacity(triangles.len());
        let mut normals = Vec::with_capacity(triangles.len());
        for (idx, t) in triangles.iter().enumerate() {
            let (a, b, c) = (vertices[t[0]], vertices[t[1]], vertices[t[2]]);
            let cr = cross(sub(b, a), sub(c, a));
            let len = norm(cr);
            if !(len > 0.0) {
                return Err(FprError::DegenerateMesh(format!("panel {idx} has zero area")));
            }
            centers.push([(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0, (a[2] + b[2] + c[2]) / 3.0]);
            areas.push(0.5 * len);
            normals.push([cr[0] / len, cr[1] / len, cr[2] / len]);
        }
        Ok(SurfaceMesh { vertices, triangles: triangles.to_vec(), centers, areas, normals })
    }

    pub fn len(&self) -> usize {
        self.areas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.areas.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Enclosed volume via the divergence theorem.
    pub fn volume(&self) -> f64 {
        self.centers.iter().zip(&self.normals).zip(&self.areas).map(|((c, n), a)| dot(*c, *n) * a / 3.0).sum()
    }

    /// Radius of the sphere with the same surface area.
    pub fn equivalent_radius(&self) -> f64 {
        (self.total_area() / (4.0 * PI)).sqrt()
    }

    /// Uniformly scaled copy (panel data scaled, not recomputed).
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(FprError::Domain(format!("scale factor {s} must be positive")));
        }
        let sc = |p: &V3| [s * p[0], s * p[1], s * p[2]];
        Ok(SurfaceMesh {
            vertices: self.vertices.iter().map(sc).collect(),
            triangles: self.triangles.clone(),
            centers: self.centers.iter().map(sc).collect(),
            areas: self.areas.iter().map(|a| a * s * s).collect(),
            normals: self.normals.clone(),
        })
    }

    /// Replaces the flat panel data by that of the spherical triangles on the
    /// circumscribed unit sphere: projected centroid, radial normal and
    /// spherical excess as area. Only meaningful for unit-sphere vertices.
    fn curve_onto_unit_sphere(mut self) -> Self {
        for (idx, t) in self.triangles.iter().enumerate() {
            let (a, b, c) = (self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]);
            let triple = dot(a, cross(b, c)).abs();
            let excess = 2.0 * triple.atan2(1.0 + dot(a, b) + dot(b, c) + dot(c, a));
            let l = norm(self.centers[idx]);
            let u = [self.centers[idx][0] / l, self.centers[idx][1] / l, self.centers[idx][2] / l];
            self.centers[idx] = u;
            self.normals[idx] = u;
            self.areas[idx] = excess;
        }
        self
    }

    /// Copy with every vertex mapped by `f`.
    pub fn mapped(&self, f: impl Fn(V3) -> V3) -> Result<Self> {
        Self::from_parts(self.vertices.iter().map(|&p| f(p)).collect(), self.triangles.clone())
    }
}

/// Icosahedron subdivided `refinement` times, vertices on the unit sphere.
/// Panels are the spherical triangles over the flat faces, so total area
/// and volume are exact; `SurfaceMesh::from_parts` on the same vertices
/// gives the flat polyhedron instead.
pub fn build_sphere_mesh(refinement: usize) -> Result<SurfaceMesh> {
    if refinement > 6 {
        return Err(FprError::Domain(format!("refinement {refinement} exceeds 6")));
    }
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<V3> = [
        [-1.0, p, 0.0],
        [1.0, p, 0.0],
        [-1.0, -p, 0.0],
        [1.0, -p, 0.0],
        [0.0, -1.0, p],
        [0.0, 1.0, p],
        [0.0, -1.0, -p],
        [0.0, 1.0, -p],
        [p, 0.0, -1.0],
        [p, 0.0, 1.0],
        [-p, 0.0, -1.0],
        [-p, 0.0, 1.0],
    ]
    .iter()
    .map(|v| {
        let l = norm(*v);
        [v[0] / l, v[1] / l, v[2] / l]
    })
    .collect();
    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..refinement {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vs: &mut Vec<V3>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                let m = [vs[a][0] + vs[b][0], vs[a][1] + vs[b][1], vs[a][2] + vs[b][2]];
                let l = norm(m);
                vs.push([m[0] / l, m[1] / l, m[2] / l]);
                vs.len() - 1
            })
        };
        let mut next = Vec::with_capacity(tris.len() * 4);
        for t in &tris {
            let ab = midpoint(t[0], t[1], &mut vertices);
            let bc = midpoint(t[1], t[2], &mut vertices);
            let ca = midpoint(t[2], t[0], &mut vertices);
            next.push([t[0], ab, ca]);
            next.push([t[1], bc, ab]);
            next.push([t[2], ca, bc]);
            next.push([ab, bc, ca]);
        }
        tris = next;
    }
    // star-shaped about the origin: orient each panel outward individually
    for t in tris.iter_mut() {
        let (a, b, c) = (vertices[t[0]], vertices[t[1]], vertices[t[2]]);
        if dot(cross(sub(b, a), sub(c, a)), a) < 0.0 {
            t.swap(1, 2);
        }
    }
    Ok(SurfaceMesh::from_parts(vertices, tris)?.curve_onto_unit_sphere())
}

/// Spheroid with semi-axis `a` along z and `b` in the equatorial plane.
pub fn build_spheroid_mesh(refinement: usize, a: f64, b: f64) -> Result<SurfaceMesh> {
    if !(a > 0.0 && b > 0.0) {
        return Err(FprError::Domain("spheroid semi-axes must be positive".into()));
    }
    build_sphere_mesh(refinement)?.mapped(|p| [b * p[0], b * p[1], a * p[2]])
}

/// Parses an OFF file (header, counts line, vertices, triangular faces).
pub fn parse_off(text: &str) -> Result<SurfaceMesh> {
    let bad = |m: &str| FprError::DegenerateMesh(format!("OFF parse error: {m}"));
    let mut lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty());
    let head = lines.next().ok_or_else(|| bad("empty file"))?;
    let counts_line = if head == "OFF" {
        lines.next().ok_or_else(|| bad("missing counts"))?
    } else if let Some(rest) = head.strip_prefix("OFF") {
        rest
    } else {
        return Err(bad("missing OFF header"));
    };
    let counts: Vec<usize> = counts_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad("bad counts line")))
        .collect::<Result<_>>()?;
    if counts.len() < 2 {
        return Err(bad("counts line needs vertex and face counts"));
    }
    let (nv, nf) = (counts[0], counts[1]);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let l = lines.next().ok_or_else(|| bad("too few vertex lines"))?;
        let v: Vec<f64> = l
            .split_whitespace()
            .take(3)
            .map(|t| t.parse().map_err(|_| bad("bad vertex")))
            .collect::<Result<_>>()?;
        if v.len() != 3 {
            return Err(bad("vertex needs three coordinates"));
        }
        vertices.push([v[0], v[1], v[2]]);
    }
    let mut tris = Vec::with_capacity(nf);
    for _ in 0..nf {
        let l = lines.next().ok_or_else(|| bad("too few face lines"))?;
        let f: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("bad face index")))
            .collect::<Result<_>>()?;
        if f.len() < 4 || f[0] != 3 {
            return Err(bad("only triangular faces are supported"));
        }
        tris.push([f[1], f[2], f[3]]);
    }
    SurfaceMesh::from_parts(vertices, tris)
}

pub fn read_off(path: &std::path::Path) -> Result<SurfaceMesh> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| FprError::DegenerateMesh(format!("cannot read {}: {e}", path.display())))?;
    parse_off(&text)
}

pub fn write_off(mesh: &SurfaceMesh) -> String {
    let mut s = format!("OFF\n{} {} 0\n", mesh.vertices.len(), mesh.triangles.len());
    for v in &mesh.vertices {
        s.push_str(&format!("{:.17e} {:.17e} {:.17e}\n", v[0], v[1], v[2]));
    }
    for t in &mesh.triangles {
        s.push_str(&format!("3 {} {} {}\n", t[0], t[1], t[2]));
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelTag {
    S,
    KStar,
}

/// Dense discretisation of one boundary operator.
#[derive(Debug, Clone)]
pub struct OperatorBlock {
    pub matrix: Mat<c64>,
    pub tag: KernelTag,
    pub wave_number: Complex64,
}

const BLOCK_MAGIC: &[u8; 8] = b"FPRBLK01";

impl OperatorBlock {
    /// Binary export: magic, rows and cols as u64 LE, then row-major
    /// complex128 entries (re, im as f64 LE).
    pub fn export(&self, w: &mut impl Write) -> std::io::Result<()> {
        let m = &self.matrix;
        w.write_all(BLOCK_MAGIC)?;
        w.write_all(&(m.nrows() as u64).to_le_bytes())?;
        w.write_all(&(m.ncols() as u64).to_le_bytes())?;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                w.write_all(&m[(i, j)].re.to_le_bytes())?;
                w.write_all(&m[(i, j)].im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Reads a matrix written by [`OperatorBlock::export`].
    pub fn import_matrix(r: &mut impl Read) -> std::io::Result<Mat<c64>> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != BLOCK_MAGIC {
            return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, "bad block magic"));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let rows = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let cols = u64::from_le_bytes(b8) as usize;
        let mut m = Mat::<c64>::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                r.read_exact(&mut b8)?;
                let re = f64::from_le_bytes(b8);
                r.read_exact(&mut b8)?;
                m[(i, j)] = c64::new(re, f64::from_le_bytes(b8));
            }
        }
        Ok(m)
    }
}

/// Fills an `n x n` matrix column by column in parallel.
fn par_columns(n: usize, col: impl Fn(usize, &mut [c64]) + Sync) -> Mat<c64> {
    let mut data = vec![c64::new(0.0, 0.0); n * n];
    data.par_chunks_mut(n).enumerate().for_each(|(j, c)| col(j, c));
    Mat::from_fn(n, n, |i, j| data[j * n + i])
}

/// Nystrom matrix of the single layer operator `S_z`.
pub fn assemble_single_layer(mesh: &SurfaceMesh, z: Complex64) -> Result<OperatorBlock> {
    check_wave_number(z)?;
    let iz = Complex64::i() * z;
    let matrix = par_columns(mesh.len(), |j, col| {
        let (y, aj) = (mesh.centers[j], mesh.areas[j]);
        for (i, out) in col.iter_mut().enumerate() {
            *out = if i == j {
                Complex64::new((aj / PI).sqrt() / 2.0, 0.0) + iz * aj / (4.0 * PI)
            } else {
                let r = norm(sub(mesh.centers[i], y));
                (iz * r).exp() / (4.0 * PI * r) * aj
            };
        }
    });
    Ok(OperatorBlock { matrix, tag: KernelTag::S, wave_number: z })
}

/// Static `K*` diagonal from `sum_i a_i K*_0(x_i, x_j) = -1/2`.
fn kstar_static_diagonal(mesh: &SurfaceMesh) -> Vec<f64> {
    (0..mesh.len())
        .into_par_iter()
        .map(|j| {
            let y = mesh.centers[j];
            let mut s = 0.0;
            for i in 0..mesh.len() {
                if i != j {
                    let d = sub(mesh.centers[i], y);
                    let r = norm(d);
                    s += mesh.areas[i] * (-dot(mesh.normals[i], d)) / (4.0 * PI * r * r * r);
                }
            }
            -0.5 - s
        })
        .collect()
}

/// Nystrom matrix of the adjoint double layer `K*_z` (normal derivative at
/// the target panel).
pub fn assemble_kstar(mesh: &SurfaceMesh, z: Complex64) -> Result<OperatorBlock> {
    check_wave_number(z)?;
    let diag = kstar_static_diagonal(mesh);
    let iz = Complex64::i() * z;
    let matrix = par_columns(mesh.len(), |j, col| {
        let (y, aj) = (mesh.centers[j], mesh.areas[j]);
        for (i, out) in col.iter_mut().enumerate() {
            *out = if i == j {
                Complex64::new(diag[j], 0.0)
            } else {
                let d = sub(mesh.centers[i], y);
                let r = norm(d);
                dot(mesh.normals[i], d) * (iz * r - 1.0) * (iz * r).exp() / (4.0 * PI * r * r * r) * aj
            };
        }
    });
    Ok(OperatorBlock { matrix, tag: KernelTag::KStar, wave_number: z })
}

fn check_wave_number(z: Complex64) -> Result<()> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(FprError::Domain(format!("wave number {z} is not finite")));
    }
    Ok(())
}

/// `C = \int_Gamma S_0^{-1} 1`.
pub fn capacitance(mesh: &SurfaceMesh) -> Result<f64> {
    let s = assemble_single_layer(mesh, Complex64::new(0.0, 0.0))?.matrix;
    let n = mesh.len();
    let ones = Mat::<c64>::from_fn(n, 1, |_, _| c64::new(1.0, 0.0));
    let psi = s.partial_piv_lu().solve(&ones);
    let resid = &s * &psi - &ones;
    let rn = (0..n).map(|i| resid[(i, 0)].norm()).fold(0.0, f64::max);
    if !(rn < 1e-8) {
        return Err(FprError::SingularSystem(format!("static single layer solve residual {rn:.3e}")));
    }
    let c: f64 = (0..n).map(|i| psi[(i, 0)].re * mesh.areas[i]).sum();
    if !(c > 0.0) {
        return Err(FprError::SingularSystem(format!("non-positive capacitance {c}")));
    }
    Ok(c)
}

/// Classical capacitance of the prolate spheroid (`a > b`).
pub fn prolate_spheroid_capacitance(a: f64, b: f64) -> f64 {
    let e = (a * a - b * b).sqrt();
    8.0 * PI * e / ((a + e) / (a - e)).ln()
}

/// Dirichlet-to-Neumann map `(sign/2 + K*) S^{-1}`: sign = +1 interior,
/// -1 exterior.
fn dtn_matrix(mesh: &SurfaceMesh, k: Complex64, sign: f64) -> Result<Mat<c64>> {
    let s = assemble_single_layer(mesh, k)?.matrix;
    let mut p = assemble_kstar(mesh, k)?.matrix;
    for i in 0..mesh.len() {
        p[(i, i)] += 0.5 * sign;
    }
    // Lambda = P S^{-1}  <=>  S^T Lambda^T = P^T
    let lu = s.partial_piv_lu();
    let x = lu.solve_transpose(p.transpose());
    let out = x.transpose().to_owned();
    if out.col_iter().any(|c| c.iter().any(|v| !v.re.is_finite() || !v.im.is_finite())) {
        return Err(FprError::SingularSystem(format!("single layer at k = {k} is singular")));
    }
    Ok(out)
}

/// Guards against the interior Dirichlet eigenvalues of the equivalent ball,
/// where `S` is singular and the DtN maps are undefined.
fn spurious_guard(mesh: &SurfaceMesh, z: Complex64, speeds: &[f64]) -> Result<()> {
    let r = mesh.equivalent_radius();
    for &c in speeds {
        let k = z / c;
        if k.im.abs() >= 1e-3 {
            continue;
        }
        let x = k.re.abs() * r;
        let kmax = ((x / PI).ceil() as usize + 1).clamp(1, 50);
        let nmax = ((x as usize) + 2).min(50);
        for (n, roots) in ball_dirichlet_roots(nmax, kmax)?.iter().enumerate() {
            for &mu in roots {
                let d = (x - mu).abs();
                if d < 1e-3 {
                    let _ = n;
                    return Err(FprError::SpuriousFrequency { z, eigenvalue: c * mu / r, distance: d });
                }
            }
        }
    }
    Ok(())
}

/// `(1/(rho1 tau)) Lambda_int(z/c1) - (1/rho0) Lambda_ext(z/c0)`; singular
/// exactly at the scattering resonances.
pub fn transmission_operator(mesh: &SurfaceMesh, z: Complex64, m: &Medium) -> Result<Mat<c64>> {
    m.validate()?;
    spurious_guard(mesh, z, &[m.c1(), m.c0()])?;
    let li = dtn_matrix(mesh, z / m.c1(), 1.0)?;
    let le = dtn_matrix(mesh, z / m.c0(), -1.0)?;
    let (a, b) = (1.0 / (m.rho1 * m.tau), 1.0 / m.rho0);
    Ok(Mat::from_fn(mesh.len(), mesh.len(), |i, j| a * li[(i, j)] - b * le[(i, j)]))
}

/// Smallest singular value of [`transmission_operator`].
pub fn transmission_dispersion_svdmin(mesh: &SurfaceMesh, z: Complex64, m: &Medium) -> Result<f64> {
    crate::rootfind::smallest_singular_value(&transmission_operator(mesh, z, m)?)
}

/// Applies a block to panel samples.
pub fn apply(block: &OperatorBlock, v: &[Complex64]) -> Vec<Complex64> {
    let n = v.len();
    let x = Mat::<c64>::from_fn(n, 1, |i, _| v[i]);
    let y = &block.matrix * &x;
    (0..n).map(|i| y[(i, 0)]).collect()
}
