//! Two-dimensional triangular meshes: structured unit-square and sector
//! families, boundary tagging, element geometry and a plain-text format.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::Path;

use thiserror::Error;

/// A point in the plane.
pub type Point = [f64; 2];

/// Tolerance for boundary vertices lying on their declared boundary.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid mesh size: {0}")]
    InvalidSize(String),
    #[error("invalid sector angle phi = {0} (must lie in (0, pi))")]
    InvalidAngle(f64),
    #[error("invalid grading {0} (must be finite and >= 1)")]
    InvalidGrading(f64),
    #[error("mesh has no triangles")]
    Empty,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid mesh: {0}")]
    Invalid(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Tag attached to every boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    Left,
    Right,
    Bottom,
    Top,
    WedgeEdge0,
    WedgeEdge1,
    Arc,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 7] = [
        BoundaryTag::Left,
        BoundaryTag::Right,
        BoundaryTag::Bottom,
        BoundaryTag::Top,
        BoundaryTag::WedgeEdge0,
        BoundaryTag::WedgeEdge1,
        BoundaryTag::Arc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::Left => "left",
            BoundaryTag::Right => "right",
            BoundaryTag::Bottom => "bottom",
            BoundaryTag::Top => "top",
            BoundaryTag::WedgeEdge0 => "wedge_edge_0",
            BoundaryTag::WedgeEdge1 => "wedge_edge_1",
            BoundaryTag::Arc => "arc",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == name)
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
}

/// Affine map from the reference triangle {(0,0),(1,0),(0,1)} to an element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    /// Columns are `x1 - x0` and `x2 - x0`.
    pub jacobian: [[f64; 2]; 2],
    pub jacobian_det: f64,
    pub area: f64,
    /// Longest edge length.
    pub diameter: f64,
    /// `J^{-T}`, maps reference gradients to physical gradients.
    pub inverse_transpose: [[f64; 2]; 2],
    pub origin: Point,
}

impl ElementGeometry {
    pub fn new(p: [Point; 3]) -> Self {
        let j = [
            [p[1][0] - p[0][0], p[2][0] - p[0][0]],
            [p[1][1] - p[0][1], p[2][1] - p[0][1]],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let inv_t = [
            [j[1][1] / det, -j[1][0] / det],
            [-j[0][1] / det, j[0][0] / det],
        ];
        let diameter = (0..3)
            .map(|i| distance(p[i], p[(i + 1) % 3]))
            .fold(0.0, f64::max);
        Self {
            jacobian: j,
            jacobian_det: det,
            area: 0.5 * det,
            diameter,
            inverse_transpose: inv_t,
            origin: p[0],
        }
    }

    /// Physical coordinates of a reference point.
    pub fn map(&self, xi: Point) -> Point {
        let j = &self.jacobian;
        [
            self.origin[0] + j[0][0] * xi[0] + j[0][1] * xi[1],
            self.origin[1] + j[1][0] * xi[0] + j[1][1] * xi[1],
        ]
    }

    /// Physical gradient from a reference gradient.
    pub fn map_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        let m = &self.inverse_transpose;
        [
            m[0][0] * g[0] + m[0][1] * g[1],
            m[1][0] * g[0] + m[1][1] * g[1],
        ]
    }
}

pub fn distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Immutable triangular mesh with a global edge numbering.
///
/// Local edge `l` of a triangle joins local vertices `l` and `(l + 1) % 3`.
#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    edges: Vec<[usize; 2]>,
    triangle_edges: Vec<[usize; 3]>,
    edge_triangles: Vec<Vec<usize>>,
    geometry: Vec<ElementGeometry>,
}

impl Mesh {
    /// Builds a mesh and checks every structural invariant.
    pub fn new(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Result<Self, MeshError> {
        let nv = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&v) = tri.iter().find(|&&v| v >= nv) {
                return Err(MeshError::Invalid(format!(
                    "triangle {t} references vertex {v}, but there are only {nv} vertices"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::Invalid(format!("triangle {t} repeats a vertex")));
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(area > 0.0) {
                return Err(MeshError::Invalid(format!(
                    "triangle {t} is not counter-clockwise (signed area {area:e})"
                )));
            }
        }

        let mut edge_index: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut edge_triangles: Vec<Vec<usize>> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut te = [0; 3];
            for l in 0..3 {
                let key = sorted_pair(tri[l], tri[(l + 1) % 3]);
                let id = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_triangles.push(Vec::new());
                    edges.len() - 1
                });
                edge_triangles[id].push(t);
                te[l] = id;
            }
            triangle_edges.push(te);
        }
        if let Some((id, ts)) = edge_triangles
            .iter()
            .enumerate()
            .find(|(_, ts)| ts.len() > 2)
        {
            return Err(MeshError::Invalid(format!(
                "edge {:?} is shared by {} triangles",
                edges[id],
                ts.len()
            )));
        }

        let mut declared: HashMap<[usize; 2], BoundaryTag> = HashMap::new();
        for (b, be) in boundary_edges.iter().enumerate() {
            let [a, c] = be.vertices;
            if a >= nv || c >= nv {
                return Err(MeshError::Invalid(format!(
                    "boundary edge {b} references a vertex out of range"
                )));
            }
            let key = sorted_pair(a, c);
            match edge_index.get(&key) {
                Some(&id) if edge_triangles[id].len() == 1 => {}
                Some(_) => {
                    return Err(MeshError::Invalid(format!(
                        "boundary edge {b} ({a}, {c}) is an interior edge"
                    )))
                }
                None => {
                    return Err(MeshError::Invalid(format!(
                        "boundary edge {b} ({a}, {c}) is not an edge of any triangle"
                    )))
                }
            }
            if declared.insert(key, be.tag).is_some() {
                return Err(MeshError::Invalid(format!(
                    "boundary edge {b} ({a}, {c}) declared twice"
                )));
            }
        }
        for (id, ts) in edge_triangles.iter().enumerate() {
            if ts.len() == 1 && !declared.contains_key(&edges[id]) {
                return Err(MeshError::Invalid(format!(
                    "edge {:?} lies on the boundary but carries no tag",
                    edges[id]
                )));
            }
        }
        check_boundary_geometry(&vertices, &boundary_edges)?;

        let geometry = triangles
            .iter()
            .map(|t| ElementGeometry::new([vertices[t[0]], vertices[t[1]], vertices[t[2]]]))
            .collect();

        Ok(Self {
            vertices,
            triangles,
            boundary_edges,
            edges,
            triangle_edges,
            edge_triangles,
            geometry,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Global edges as sorted vertex pairs.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Global edge ids of the three local edges of triangle `t`.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    /// Triangles sharing global edge `e`.
    pub fn edge_triangles(&self, e: usize) -> &[usize] {
        &self.edge_triangles[e]
    }

    pub fn geometry(&self, t: usize) -> &ElementGeometry {
        &self.geometry[t]
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        [(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0]
    }

    pub fn total_area(&self) -> f64 {
        self.geometry.iter().map(|g| g.area).sum()
    }

    /// Boundary edges carrying a given tag.
    pub fn edges_with_tag(&self, tag: BoundaryTag) -> impl Iterator<Item = &BoundaryEdge> {
        self.boundary_edges.iter().filter(move |e| e.tag == tag)
    }

    /// The distinct tags present on the boundary, in sorted order.
    pub fn boundary_tags(&self) -> Vec<BoundaryTag> {
        let mut tags: Vec<_> = self.boundary_edges.iter().map(|e| e.tag).collect();
        tags.sort();
        tags.dedup();
        tags
    }

    /// Owners of every boundary edge, in boundary-edge order.
    pub fn boundary_edge_owners(&self) -> Vec<(usize, usize)> {
        let mut lookup: HashMap<[usize; 2], (usize, usize)> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for l in 0..3 {
                let e = self.triangle_edges[t][l];
                if self.edge_triangles[e].len() == 1 {
                    lookup.insert(sorted_pair(tri[l], tri[(l + 1) % 3]), (t, l));
                }
            }
        }
        self.boundary_edges
            .iter()
            .map(|be| lookup[&sorted_pair(be.vertices[0], be.vertices[1])])
            .collect()
    }
}

fn sorted_pair(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

fn check_boundary_geometry(vertices: &[Point], edges: &[BoundaryEdge]) -> Result<(), MeshError> {
    let tol = BOUNDARY_TOLERANCE;
    // Direction of the second wedge edge, taken from its farthest vertex.
    let wedge_dir = edges
        .iter()
        .filter(|e| e.tag == BoundaryTag::WedgeEdge1)
        .flat_map(|e| e.vertices)
        .map(|v| vertices[v])
        .max_by(|a, b| a[0].hypot(a[1]).total_cmp(&b[0].hypot(b[1])))
        .and_then(|p| {
            let r = p[0].hypot(p[1]);
            (r > 0.0).then(|| [p[0] / r, p[1] / r])
        });
    for (b, e) in edges.iter().enumerate() {
        for &v in &e.vertices {
            let [x, y] = vertices[v];
            let ok = match e.tag {
                BoundaryTag::Left => x.abs() <= tol,
                BoundaryTag::Right => (x - 1.0).abs() <= tol,
                BoundaryTag::Bottom => y.abs() <= tol,
                BoundaryTag::Top => (y - 1.0).abs() <= tol,
                BoundaryTag::WedgeEdge0 => y.abs() <= tol && x >= -tol,
                BoundaryTag::WedgeEdge1 => match wedge_dir {
                    Some(d) => (d[0] * y - d[1] * x).abs() <= tol && d[0] * x + d[1] * y >= -tol,
                    None => true,
                },
                BoundaryTag::Arc => (x.hypot(y) - 1.0).abs() <= tol,
            };
            if !ok {
                return Err(MeshError::Invalid(format!(
                    "boundary edge {b} tagged {} has vertex {v} at ({x}, {y}) off that boundary",
                    e.tag
                )));
            }
        }
    }
    Ok(())
}

/// Structured mesh of the unit square: `(n+1)^2` vertices, each cell split
/// along its lower-left to upper-right diagonal.
pub fn unit_square_mesh(n: usize) -> Result<Mesh, MeshError> {
    if n == 0 {
        return Err(MeshError::InvalidSize("unit square needs n >= 1".into()));
    }
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let mut boundary = Vec::with_capacity(4 * n);
    for i in 0..n {
        boundary.push(BoundaryEdge {
            vertices: [idx(i, 0), idx(i + 1, 0)],
            tag: BoundaryTag::Bottom,
        });
        boundary.push(BoundaryEdge {
            vertices: [idx(i + 1, n), idx(i, n)],
            tag: BoundaryTag::Top,
        });
        boundary.push(BoundaryEdge {
            vertices: [idx(0, i + 1), idx(0, i)],
            tag: BoundaryTag::Left,
        });
        boundary.push(BoundaryEdge {
            vertices: [idx(n, i), idx(n, i + 1)],
            tag: BoundaryTag::Right,
        });
    }
    Mesh::new(vertices, triangles, boundary)
}

/// Opening angle `2*pi - phi` of the sector with re-entrant angle `phi`.
pub fn opening_angle(phi: f64) -> f64 {
    2.0 * PI - phi
}

/// Radii of the node layers of a sector mesh, `(j/n)^grading` for `j = 1..=n`.
pub fn radial_layers(n_radial: usize, grading: f64) -> Vec<f64> {
    (1..=n_radial)
        .map(|j| (j as f64 / n_radial as f64).powf(grading))
        .collect()
}

/// Unit-radius circular sector with its corner at the origin, spanning
/// polar angles `[0, 2*pi - phi]`.
///
/// The outer ring carries `n_angular` chords; inner rings use fewer segments
/// so that elements stay roughly isotropic, with at most 60 degrees per
/// segment in the innermost fan.
pub fn reentrant_mesh(
    phi: f64,
    n_radial: usize,
    n_angular: usize,
    grading: f64,
) -> Result<Mesh, MeshError> {
    if !(phi > 0.0 && phi < PI) {
        return Err(MeshError::InvalidAngle(phi));
    }
    if n_radial == 0 || n_angular == 0 {
        return Err(MeshError::InvalidSize(format!(
            "sector needs n_radial, n_angular >= 1 (got {n_radial}, {n_angular})"
        )));
    }
    if !(grading.is_finite() && grading >= 1.0) {
        return Err(MeshError::InvalidGrading(grading));
    }
    let psi = opening_angle(phi);
    let radii = radial_layers(n_radial, grading);

    // radius-to-thickness ratio of each layer, normalised by the outer one
    let thickness = |j: usize| radii[j] - if j == 0 { 0.0 } else { radii[j - 1] };
    let outer_ratio = radii[n_radial - 1] / thickness(n_radial - 1);
    let min_segments = (psi / (PI / 3.0)).ceil() as usize;
    let mut segments = Vec::with_capacity(n_radial);
    for j in 0..n_radial {
        let rho = (radii[j] / thickness(j)) / outer_ratio;
        let wanted = ((n_angular as f64) * rho - 1e-9).ceil().max(1.0) as usize;
        let prev = segments.last().copied().unwrap_or(0);
        let m = if j + 1 == n_radial {
            n_angular
        } else {
            wanted.min(n_angular)
        };
        segments.push(m.max(min_segments).max(prev));
    }

    let mut vertices = vec![[0.0, 0.0]];
    let mut rings: Vec<Vec<usize>> = Vec::with_capacity(n_radial);
    for (j, &m) in segments.iter().enumerate() {
        let r = radii[j];
        let ring = (0..=m)
            .map(|i| {
                let p = if i == 0 {
                    [r, 0.0]
                } else {
                    let t = psi * i as f64 / m as f64;
                    [r * t.cos(), r * t.sin()]
                };
                vertices.push(p);
                vertices.len() - 1
            })
            .collect();
        rings.push(ring);
    }

    let mut triangles = Vec::new();
    let mut push = |tri: [usize; 3], verts: &[Point]| {
        if signed_area(verts[tri[0]], verts[tri[1]], verts[tri[2]]) > 0.0 {
            triangles.push(tri);
        } else {
            triangles.push([tri[0], tri[2], tri[1]]);
        }
    };
    for w in rings[0].windows(2) {
        push([0, w[0], w[1]], &vertices);
    }
    for j in 1..n_radial {
        let (inner, outer) = (&rings[j - 1], &rings[j]);
        let (ma, mb) = (inner.len() - 1, outer.len() - 1);
        let (mut i, mut o) = (0, 0);
        while i < ma || o < mb {
            let advance_outer = o < mb && (i == ma || (o + 1) * ma <= (i + 1) * mb);
            if advance_outer {
                push([inner[i], outer[o], outer[o + 1]], &vertices);
                o += 1;
            } else {
                push([inner[i], outer[o], inner[i + 1]], &vertices);
                i += 1;
            }
        }
    }

    let mut boundary = Vec::new();
    let mut spoke0 = vec![0];
    let mut spoke1 = vec![0];
    for ring in &rings {
        spoke0.push(ring[0]);
        spoke1.push(*ring.last().unwrap());
    }
    for w in spoke0.windows(2) {
        boundary.push(BoundaryEdge {
            vertices: [w[0], w[1]],
            tag: BoundaryTag::WedgeEdge0,
        });
    }
    for w in spoke1.windows(2) {
        boundary.push(BoundaryEdge {
            vertices: [w[1], w[0]],
            tag: BoundaryTag::WedgeEdge1,
        });
    }
    for w in rings[n_radial - 1].windows(2) {
        boundary.push(BoundaryEdge {
            vertices: [w[0], w[1]],
            tag: BoundaryTag::Arc,
        });
    }
    Mesh::new(vertices, triangles, boundary)
}

/// Sector mesh for refinement level `n`: `n` radial layers and an outer ring
/// resolution matched to the outer layer thickness.
pub fn reentrant_mesh_level(phi: f64, n: usize, grading: f64) -> Result<Mesh, MeshError> {
    if n == 0 {
        return Err(MeshError::InvalidSize("sector level must be >= 1".into()));
    }
    let radii = radial_layers(n, grading);
    let outer = radii[n - 1] - if n > 1 { radii[n - 2] } else { 0.0 };
    let n_angular = (opening_angle(phi) / outer).round().max(1.0) as usize;
    reentrant_mesh(phi, n, n_angular, grading)
}

/// Characteristic mesh size: the largest element diameter.
pub fn mesh_size(mesh: &Mesh) -> Result<f64, MeshError> {
    if mesh.n_triangles() == 0 {
        return Err(MeshError::Empty);
    }
    Ok(mesh.geometry.iter().map(|g| g.diameter).fold(0.0, f64::max))
}

/// Writes the line-oriented text format: `nv nt nb`, then vertices,
/// triangles and tagged boundary edges.
pub fn write_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    let path = path.as_ref();
    fs::write(path, format_mesh(mesh)).map_err(|source| MeshError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn format_mesh(mesh: &Mesh) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {}",
        mesh.n_vertices(),
        mesh.n_triangles(),
        mesh.boundary_edges.len()
    );
    for [x, y] in &mesh.vertices {
        let _ = writeln!(out, "{x:e} {y:e}");
    }
    for [a, b, c] in &mesh.triangles {
        let _ = writeln!(out, "{a} {b} {c}");
    }
    for e in &mesh.boundary_edges {
        let _ = writeln!(out, "{} {} {}", e.vertices[0], e.vertices[1], e.tag);
    }
    out
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<Mesh, MeshError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| MeshError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_mesh(&text)
}

/// Parses the text format, reporting the offending line on failure.
pub fn parse_mesh(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let mut next = |what: &str| {
        lines.next().ok_or_else(|| MeshError::Parse {
            line: text.lines().count() + 1,
            message: format!("unexpected end of file, expected {what}"),
        })
    };
    fn fields<'a>(line: usize, l: &'a str, n: usize) -> Result<Vec<&'a str>, MeshError> {
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != n {
            return Err(MeshError::Parse {
                line,
                message: format!("expected {n} fields, found {}", f.len()),
            });
        }
        Ok(f)
    }
    fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T, MeshError> {
        s.parse().map_err(|_| MeshError::Parse {
            line,
            message: format!("cannot parse '{s}'"),
        })
    }

    let (line, header) = next("header 'nv nt nb'")?;
    let h = fields(line, header, 3)?;
    let (nv, nt, nb): (usize, usize, usize) =
        (num(line, h[0])?, num(line, h[1])?, num(line, h[2])?);

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, l) = next("vertex")?;
        let f = fields(line, l, 2)?;
        let p: Point = [num(line, f[0])?, num(line, f[1])?];
        if !p.iter().all(|c| c.is_finite()) {
            return Err(MeshError::Parse {
                line,
                message: "non-finite coordinate".into(),
            });
        }
        vertices.push(p);
    }
    let mut triangles = Vec::with_capacity(nt);
    for t in 0..nt {
        let (line, l) = next("triangle")?;
        let f = fields(line, l, 3)?;
        let tri: [usize; 3] = [num(line, f[0])?, num(line, f[1])?, num(line, f[2])?];
        if let Some(&v) = tri.iter().find(|&&v| v >= nv) {
            return Err(MeshError::Parse {
                line,
                message: format!("triangle {t} references vertex {v} out of range (nv = {nv})"),
            });
        }
        let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
        if !(area > 0.0) {
            return Err(MeshError::Parse {
                line,
                message: format!("triangle {t} is not counter-clockwise (signed area {area:e})"),
            });
        }
        triangles.push(tri);
    }
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (line, l) = next("boundary edge")?;
        let f = fields(line, l, 3)?;
        let (a, b): (usize, usize) = (num(line, f[0])?, num(line, f[1])?);
        if a >= nv || b >= nv {
            return Err(MeshError::Parse {
                line,
                message: format!("boundary edge references vertex out of range (nv = {nv})"),
            });
        }
        let tag = BoundaryTag::from_name(f[2]).ok_or_else(|| MeshError::Parse {
            line,
            message: format!("unknown boundary tag '{}'", f[2]),
        })?;
        boundary.push(BoundaryEdge {
            vertices: [a, b],
            tag,
        });
    }
    if let Some((line, _)) = lines.next() {
        return Err(MeshError::Parse {
            line,
            message: "trailing content after mesh".into(),
        });
    }
    Mesh::new(vertices, triangles, boundary)
}
