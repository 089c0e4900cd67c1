//! Sampled data on a regular grid of the unit square and its assignment to
//! mesh elements by nearest sample point.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::forms::{ProblemData, VectorData};
use crate::mesh::{Mesh, Point};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("data grid needs nd >= 1")]
    EmptyDataSet,
    #[error("invalid data set: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One sampled `(ẽ, s̃)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataPair {
    pub e: [f64; 2],
    pub s: [f64; 2],
}

/// Samples taken at the centroids of an `nd × nd` grid of cells covering
/// `[0,1]²`; sample `i + nd·j` sits in column `i`, row `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    nd: usize,
    sample_points: Vec<Point>,
    pairs: Vec<DataPair>,
}

fn grid_point(nd: usize, i: usize, j: usize) -> Point {
    [(i as f64 + 0.5) / nd as f64, (j as f64 + 0.5) / nd as f64]
}

/// Evaluates the gradient and flux fields at every cell centroid.
pub fn build_dataset(
    nd: usize,
    exact_e: impl Fn(Point) -> [f64; 2],
    exact_s: impl Fn(Point) -> [f64; 2],
) -> Result<DataSet, DataError> {
    if nd == 0 {
        return Err(DataError::EmptyDataSet);
    }
    let sample_points: Vec<Point> = (0..nd * nd)
        .map(|k| grid_point(nd, k % nd, k / nd))
        .collect();
    let pairs = sample_points
        .iter()
        .map(|&p| DataPair {
            e: exact_e(p),
            s: exact_s(p),
        })
        .collect();
    Ok(DataSet {
        nd,
        sample_points,
        pairs,
    })
}

impl DataSet {
    pub fn nd(&self) -> usize {
        self.nd
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn sample_points(&self) -> &[Point] {
        &self.sample_points
    }

    pub fn pairs(&self) -> &[DataPair] {
        &self.pairs
    }

    /// Index of the sample closest to `p`, lowest index on ties.
    ///
    /// The cells of a regular grid are the Voronoi cells of their
    /// centroids, so the answer lies in the cell containing `p` (clamped to
    /// the grid) or, on a tie, in one of its neighbours.
    pub fn nearest(&self, p: Point) -> usize {
        let nd = self.nd;
        let cell = |x: f64| ((x * nd as f64).floor().max(0.0) as usize).min(nd - 1);
        let (ci, cj) = (cell(p[0]), cell(p[1]));
        let mut best = (f64::INFINITY, usize::MAX);
        for j in cj.saturating_sub(1)..=(cj + 1).min(nd - 1) {
            for i in ci.saturating_sub(1)..=(ci + 1).min(nd - 1) {
                let k = i + nd * j;
                let q = self.sample_points[k];
                let d = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                if d < best.0 || (d == best.0 && k < best.1) {
                    best = (d, k);
                }
            }
        }
        best.1
    }

    /// `x,y,ex,ey,sx,sy`, one row per sample in index order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,ex,ey,sx,sy\n");
        for (p, d) in self.sample_points.iter().zip(&self.pairs) {
            let _ = writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e},{:e}",
                p[0], p[1], d.e[0], d.e[1], d.s[0], d.s[1]
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, DataError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == "x,y,ex,ey,sx,sy" => {}
            other => return Err(DataError::Invalid(format!("unexpected header {other:?}"))),
        }
        let mut points = Vec::new();
        let mut pairs = Vec::new();
        for (row, line) in lines.enumerate() {
            let v: Vec<f64> = line
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| DataError::Invalid(format!("row {}: {e}", row + 1)))?;
            if v.len() != 6 {
                return Err(DataError::Invalid(format!(
                    "row {}: expected 6 values, found {}",
                    row + 1,
                    v.len()
                )));
            }
            points.push([v[0], v[1]]);
            pairs.push(DataPair {
                e: [v[2], v[3]],
                s: [v[4], v[5]],
            });
        }
        let nd = (points.len() as f64).sqrt().round() as usize;
        if nd == 0 {
            return Err(DataError::EmptyDataSet);
        }
        if nd * nd != points.len() {
            return Err(DataError::Invalid(format!(
                "{} samples do not form a square grid",
                points.len()
            )));
        }
        for (k, p) in points.iter().enumerate() {
            let g = grid_point(nd, k % nd, k / nd);
            if (p[0] - g[0]).abs() > 1e-12 || (p[1] - g[1]).abs() > 1e-12 {
                return Err(DataError::Invalid(format!(
                    "sample {k} at {p:?} is not the grid centroid {g:?}"
                )));
            }
        }
        Ok(DataSet {
            nd,
            sample_points: points,
            pairs,
        })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_csv(&text)
    }
}

/// Elementwise-constant data fields, one sample per element.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignedData {
    /// Sample index used by each element.
    pub sample: Vec<usize>,
    pub e_tilde: Vec<[f64; 2]>,
    pub s_tilde: Vec<[f64; 2]>,
}

/// Gives each element the pair of the sample nearest to its centroid.
pub fn assign_to_elements(mesh: &Mesh, dataset: &DataSet) -> Result<AssignedData, DataError> {
    if dataset.is_empty() {
        return Err(DataError::EmptyDataSet);
    }
    let sample: Vec<usize> = (0..mesh.n_triangles())
        .map(|t| dataset.nearest(mesh.centroid(t)))
        .collect();
    let e_tilde = sample.iter().map(|&k| dataset.pairs[k].e).collect();
    let s_tilde = sample.iter().map(|&k| dataset.pairs[k].s).collect();
    Ok(AssignedData {
        sample,
        e_tilde,
        s_tilde,
    })
}

/// Replaces the data fields of `data` with the assigned elementwise values.
pub fn with_assigned_data(mut data: ProblemData, assigned: AssignedData) -> ProblemData {
    data.e_tilde = VectorData::Elementwise(assigned.e_tilde);
    data.s_tilde = VectorData::Elementwise(assigned.s_tilde);
    data
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_square_mesh;

    fn zero(_: Point) -> [f64; 2] {
        [0.0; 2]
    }

    #[test]
    fn grid_layout() {
        let d = build_dataset(2, zero, zero).unwrap();
        assert_eq!(
            d.sample_points(),
            &[[0.25, 0.25], [0.75, 0.25], [0.25, 0.75], [0.75, 0.75]]
        );
        let d = build_dataset(1, zero, zero).unwrap();
        assert_eq!(d.sample_points(), &[[0.5, 0.5]]);
        assert!(matches!(
            build_dataset(0, zero, zero),
            Err(DataError::EmptyDataSet)
        ));
    }

    #[test]
    fn nearest_examples() {
        let d = build_dataset(2, zero, zero).unwrap();
        assert_eq!(d.nearest([0.1, 0.1]), 0);
        assert_eq!(d.nearest([0.75, 0.75]), 3);
        assert_eq!(d.nearest([0.5, 0.25]), 0);
        assert_eq!(d.nearest([0.5, 0.5]), 0);
        assert_eq!(d.nearest([0.9, 0.5]), 1);
        assert_eq!(d.nearest([2.0, -1.0]), 1);
    }

    #[test]
    fn csv_round_trip_and_validation() {
        let d = build_dataset(3, |p| [p[0], -p[1]], |p| [p[0] * p[1], 1.0 / 3.0]).unwrap();
        assert_eq!(DataSet::from_csv(&d.to_csv()).unwrap(), d);
        assert!(DataSet::from_csv("x,y,ex,ey,sx,sy\n0.5,0.5,1,2,3\n").is_err());
        assert!(DataSet::from_csv("x,y\n").is_err());
        assert!(DataSet::from_csv("x,y,ex,ey,sx,sy\n0.4,0.5,1,2,3,4\n").is_err());
    }

    #[test]
    fn assignment_uses_element_centroids() {
        let mesh = unit_square_mesh(2).unwrap();
        let d = build_dataset(2, |p| [p[0], p[1]], zero).unwrap();
        let a = assign_to_elements(&mesh, &d).unwrap();
        for t in 0..mesh.n_triangles() {
            let c = mesh.centroid(t);
            let k = a.sample[t];
            assert_eq!(a.e_tilde[t], d.sample_points()[k]);
            assert_eq!(k, d.nearest(c));
        }
    }
}
