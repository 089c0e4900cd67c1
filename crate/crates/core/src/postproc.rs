//! Error norms, convergence rates, the second-law audit and report output.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::elements::{quadrature, ElementError, Family, FeSpace, Tabulation};
use crate::forms::{FieldSpaces, FormsError, Solution};
use crate::manufactured::ManufacturedCase;
use crate::mesh::{Mesh, Point};

#[derive(Debug, Error)]
pub enum PostprocError {
    #[error("need at least two meshes to fit a rate, got {0}")]
    TooFewPoints(usize),
    #[error("mesh sizes must be positive and strictly decreasing")]
    NonDecreasingSizes,
    #[error("errors must be positive to fit a rate (found {0})")]
    NonPositiveError(f64),
    #[error("nodal error fields need a continuous space")]
    NotContinuous,
    #[error("malformed report, line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Forms(#[from] FormsError),
    #[error(transparent)]
    Element(#[from] ElementError),
}

/// Exact fields an approximate solution is measured against.
pub trait ExactSolution {
    fn u(&self, p: Point) -> f64;
    fn grad_u(&self, p: Point) -> [f64; 2];
    fn lambda(&self, p: Point) -> f64;
    fn grad_lambda(&self, p: Point) -> [f64; 2];
    fn e(&self, p: Point) -> [f64; 2];
    fn s(&self, p: Point) -> [f64; 2];
    fn mu(&self, p: Point) -> [f64; 2];
    fn div_e(&self, p: Point) -> f64;
    fn div_s(&self, p: Point) -> f64;
    fn div_mu(&self, p: Point) -> f64;
}

impl ExactSolution for ManufacturedCase {
    fn u(&self, p: Point) -> f64 {
        ManufacturedCase::u(self, p)
    }
    fn grad_u(&self, p: Point) -> [f64; 2] {
        ManufacturedCase::e(self, p).unwrap_or([f64::NAN; 2])
    }
    fn lambda(&self, p: Point) -> f64 {
        ManufacturedCase::lambda(self, p)
    }
    fn grad_lambda(&self, p: Point) -> [f64; 2] {
        ManufacturedCase::grad_lambda(self, p)
    }
    fn e(&self, p: Point) -> [f64; 2] {
        ManufacturedCase::e(self, p).unwrap_or([f64::NAN; 2])
    }
    fn s(&self, p: Point) -> [f64; 2] {
        ManufacturedCase::s(self, p).unwrap_or([f64::NAN; 2])
    }
    fn mu(&self, p: Point) -> [f64; 2] {
        ManufacturedCase::mu(self, p)
    }
    fn div_e(&self, p: Point) -> f64 {
        ManufacturedCase::div_e(self, p)
    }
    fn div_s(&self, p: Point) -> f64 {
        ManufacturedCase::div_s(self, p)
    }
    fn div_mu(&self, p: Point) -> f64 {
        ManufacturedCase::div_mu(self, p)
    }
}

/// Error columns in report order.
pub const ERROR_COLUMNS: [&str; 10] = [
    "u_L2",
    "u_H1",
    "lambda_L2",
    "lambda_H1",
    "e_L2",
    "s_L2",
    "mu_L2",
    "s_Hdiv",
    "e_Hdiv",
    "mu_Hdiv",
];

/// Errors of one solve. H1 entries are seminorms; H(div) entries combine
/// the L2 error with the elementwise divergence error.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ErrorRecord {
    pub u_l2: f64,
    pub u_h1: f64,
    pub lambda_l2: f64,
    pub lambda_h1: f64,
    pub e_l2: f64,
    pub s_l2: f64,
    pub mu_l2: f64,
    pub s_hdiv: f64,
    pub e_hdiv: f64,
    pub mu_hdiv: f64,
}

impl ErrorRecord {
    pub fn to_array(&self) -> [f64; 10] {
        [
            self.u_l2,
            self.u_h1,
            self.lambda_l2,
            self.lambda_h1,
            self.e_l2,
            self.s_l2,
            self.mu_l2,
            self.s_hdiv,
            self.e_hdiv,
            self.mu_hdiv,
        ]
    }

    pub fn from_array(a: [f64; 10]) -> Self {
        ErrorRecord {
            u_l2: a[0],
            u_h1: a[1],
            lambda_l2: a[2],
            lambda_h1: a[3],
            e_l2: a[4],
            s_l2: a[5],
            mu_l2: a[6],
            s_hdiv: a[7],
            e_hdiv: a[8],
            mu_hdiv: a[9],
        }
    }

    pub fn get(&self, column: &str) -> Option<f64> {
        ERROR_COLUMNS
            .iter()
            .position(|c| *c == column)
            .map(|i| self.to_array()[i])
    }
}

/// Discrete field values at the quadrature points of one element.
struct PointValues {
    u: f64,
    grad_u: [f64; 2],
    lambda: f64,
    grad_lambda: [f64; 2],
    e: [f64; 2],
    s: [f64; 2],
    mu: [f64; 2],
    div_e: f64,
    div_s: f64,
    div_mu: f64,
}

fn point_values(
    spaces: &FieldSpaces,
    sol: &Solution,
    mesh: &Mesh,
    t: usize,
    q: usize,
    ts: &Tabulation,
    tv: &Tabulation,
) -> PointValues {
    let geo = mesh.geometry(t);
    let nvs = spaces.vector.n_scalar_dofs();
    let mut v = PointValues {
        u: 0.0,
        grad_u: [0.0; 2],
        lambda: 0.0,
        grad_lambda: [0.0; 2],
        e: [0.0; 2],
        s: [0.0; 2],
        mu: [0.0; 2],
        div_e: 0.0,
        div_s: 0.0,
        div_mu: 0.0,
    };
    for (i, &d) in spaces.scalar.cell_scalar_dofs(t).iter().enumerate() {
        let phi = ts.values(q)[i];
        let g = geo.map_gradient(ts.grads(q)[i]);
        v.u += sol.u[d] * phi;
        v.lambda += sol.lambda[d] * phi;
        for c in 0..2 {
            v.grad_u[c] += sol.u[d] * g[c];
            v.grad_lambda[c] += sol.lambda[d] * g[c];
        }
    }
    for (i, &d) in spaces.vector.cell_scalar_dofs(t).iter().enumerate() {
        let psi = tv.values(q)[i];
        let g = geo.map_gradient(tv.grads(q)[i]);
        for c in 0..2 {
            let k = c * nvs + d;
            v.e[c] += sol.e[k] * psi;
            v.s[c] += sol.s[k] * psi;
            v.mu[c] += sol.mu[k] * psi;
            v.div_e += sol.e[k] * g[c];
            v.div_s += sol.s[k] * g[c];
            v.div_mu += sol.mu[k] * g[c];
        }
    }
    v
}

/// Errors of `sol` against `exact`, by quadrature of exactness
/// `2 * (max degree) + 3` unless overridden.
pub fn error_norms(
    mesh: &Mesh,
    spaces: &FieldSpaces,
    sol: &Solution,
    exact: &dyn ExactSolution,
    quadrature_degree: Option<usize>,
) -> Result<ErrorRecord, PostprocError> {
    let x = sol.to_vector();
    if x.len() != spaces.n_dofs() {
        return Err(FormsError::LengthMismatch {
            expected: spaces.n_dofs(),
            found: x.len(),
        }
        .into());
    }
    let max_degree = spaces.scalar.degree().max(spaces.vector.degree());
    let rule = quadrature(quadrature_degree.unwrap_or(2 * max_degree + 3))?;
    let ts = Tabulation::new(spaces.scalar.degree(), &rule.points)?;
    let tv = Tabulation::new(spaces.vector.degree(), &rule.points)?;
    let sq = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
    let mut acc = [0.0f64; 10];
    for t in 0..mesh.n_triangles() {
        let geo = mesh.geometry(t);
        for (q, (xi, w)) in rule.iter().enumerate() {
            let w = w * geo.jacobian_det.abs();
            let p = geo.map(xi);
            let v = point_values(spaces, sol, mesh, t, q, &ts, &tv);
            acc[0] += w * (v.u - exact.u(p)).powi(2);
            acc[1] += w * sq(v.grad_u, exact.grad_u(p));
            acc[2] += w * (v.lambda - exact.lambda(p)).powi(2);
            acc[3] += w * sq(v.grad_lambda, exact.grad_lambda(p));
            acc[4] += w * sq(v.e, exact.e(p));
            acc[5] += w * sq(v.s, exact.s(p));
            acc[6] += w * sq(v.mu, exact.mu(p));
            acc[7] += w * (v.div_s - exact.div_s(p)).powi(2);
            acc[8] += w * (v.div_e - exact.div_e(p)).powi(2);
            acc[9] += w * (v.div_mu - exact.div_mu(p)).powi(2);
        }
    }
    Ok(ErrorRecord {
        u_l2: acc[0].sqrt(),
        u_h1: acc[1].sqrt(),
        lambda_l2: acc[2].sqrt(),
        lambda_h1: acc[3].sqrt(),
        e_l2: acc[4].sqrt(),
        s_l2: acc[5].sqrt(),
        mu_l2: acc[6].sqrt(),
        s_hdiv: (acc[5] + acc[7]).sqrt(),
        e_hdiv: (acc[4] + acc[8]).sqrt(),
        mu_hdiv: (acc[6] + acc[9]).sqrt(),
    })
}

/// H1 seminorm error of a single scalar field.
pub fn scalar_h1_error(
    mesh: &Mesh,
    space: &FeSpace,
    coeffs: &[f64],
    exact_grad: impl Fn(Point) -> [f64; 2],
) -> Result<f64, PostprocError> {
    if coeffs.len() != space.n_dofs() {
        return Err(ElementError::LengthMismatch {
            expected: space.n_dofs(),
            found: coeffs.len(),
        }
        .into());
    }
    let rule = quadrature(2 * space.degree() + 3)?;
    let tab = Tabulation::new(space.degree(), &rule.points)?;
    let mut acc = 0.0;
    for t in 0..mesh.n_triangles() {
        let geo = mesh.geometry(t);
        for (q, (xi, w)) in rule.iter().enumerate() {
            let mut g = [0.0; 2];
            for (i, &d) in space.cell_scalar_dofs(t).iter().enumerate() {
                let gi = geo.map_gradient(tab.grads(q)[i]);
                g[0] += coeffs[d] * gi[0];
                g[1] += coeffs[d] * gi[1];
            }
            let ex = exact_grad(geo.map(xi));
            acc += w * geo.jacobian_det.abs() * ((g[0] - ex[0]).powi(2) + (g[1] - ex[1]).powi(2));
        }
    }
    Ok(acc.sqrt())
}

/// Least-squares slope of `log(error)` against `log(h)`.
pub fn convergence_rate(hs: &[f64], errors: &[f64]) -> Result<f64, PostprocError> {
    let n = hs.len().min(errors.len());
    if n < 2 {
        return Err(PostprocError::TooFewPoints(n));
    }
    if hs[0] <= 0.0 || hs.windows(2).any(|w| !(w[1] < w[0]) || w[1] <= 0.0) {
        return Err(PostprocError::NonDecreasingSizes);
    }
    if let Some(&e) = errors.iter().find(|&&e| !(e > 0.0)) {
        return Err(PostprocError::NonPositiveError(e));
    }
    let x: Vec<f64> = hs[..n].iter().map(|h| h.ln()).collect();
    let y: Vec<f64> = errors[..n].iter().map(|e| e.ln()).collect();
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(sxy / sxx)
}

/// Rate between the last two meshes only.
pub fn last_pair_rate(hs: &[f64], errors: &[f64]) -> Result<f64, PostprocError> {
    let n = hs.len().min(errors.len());
    if n < 2 {
        return Err(PostprocError::TooFewPoints(n));
    }
    convergence_rate(&hs[n - 2..n], &errors[n - 2..n])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditResult {
    pub nodes: usize,
    pub violations: usize,
    /// Largest value of `s_h·e_h` over all nodes.
    pub max_value: f64,
}

/// Evaluates `s_h·e_h` at every node of the shared e/s space and counts
/// values above `tol`.
pub fn second_law_audit(spaces: &FieldSpaces, sol: &Solution, tol: f64) -> AuditResult {
    let n = spaces.vector.n_scalar_dofs();
    let mut out = AuditResult {
        nodes: n,
        violations: 0,
        max_value: f64::NEG_INFINITY,
    };
    for d in 0..n {
        let v = sol.s[d] * sol.e[d] + sol.s[n + d] * sol.e[n + d];
        if v > tol {
            out.violations += 1;
        }
        out.max_value = out.max_value.max(v);
    }
    out
}

/// `u_h − u` at every node of a continuous space, as `(x, y, value)`.
pub fn nodal_error_field(
    space: &FeSpace,
    u_h: &[f64],
    exact_u: impl Fn(Point) -> f64,
) -> Result<Vec<(f64, f64, f64)>, PostprocError> {
    if space.family() != Family::Cg {
        return Err(PostprocError::NotContinuous);
    }
    if u_h.len() != space.n_scalar_dofs() {
        return Err(ElementError::LengthMismatch {
            expected: space.n_scalar_dofs(),
            found: u_h.len(),
        }
        .into());
    }
    Ok(space
        .node_coords()
        .iter()
        .zip(u_h)
        .map(|(p, v)| (p[0], p[1], v - exact_u(*p)))
        .collect())
}

pub fn write_nodal_csv(
    values: &[(f64, f64, f64)],
    path: impl AsRef<Path>,
) -> Result<(), PostprocError> {
    let mut text = String::from("x,y,value\n");
    for (x, y, v) in values {
        writeln!(text, "{x},{y},{v}").unwrap();
    }
    write_file(path.as_ref(), &text)
}

fn write_file(path: &Path, text: &str) -> Result<(), PostprocError> {
    std::fs::write(path, text).map_err(|source| PostprocError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub h: f64,
    pub dofs: usize,
    pub errors: ErrorRecord,
}

/// Per-mesh errors of one convergence sweep, sorted by decreasing `h`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StudyReport {
    pub case: String,
    pub formulation: String,
    rows: Vec<ReportRow>,
}

pub const REPORT_HEADER: &str =
    "h,dofs,u_L2,u_H1,lambda_L2,lambda_H1,e_L2,s_L2,mu_L2,s_Hdiv,e_Hdiv,mu_Hdiv";

impl StudyReport {
    pub fn new(case: impl Into<String>, formulation: impl Into<String>) -> Self {
        StudyReport {
            case: case.into(),
            formulation: formulation.into(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: ReportRow) {
        let at = self.rows.partition_point(|r| r.h >= row.h);
        self.rows.insert(at, row);
    }

    pub fn rows(&self) -> &[ReportRow] {
        &self.rows
    }

    pub fn hs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.h).collect()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        self.rows.iter().map(|r| r.errors.get(name)).collect()
    }

    /// Least-squares rate of a column; `None` when it cannot be fitted.
    pub fn rate(&self, name: &str) -> Option<f64> {
        convergence_rate(&self.hs(), &self.column(name)?).ok()
    }

    pub fn last_pair_rate(&self, name: &str) -> Option<f64> {
        last_pair_rate(&self.hs(), &self.column(name)?).ok()
    }

    /// Fitted rate of every column, NaN where undefined.
    pub fn rates(&self) -> [f64; 10] {
        ERROR_COLUMNS.map(|c| self.rate(c).unwrap_or(f64::NAN))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(REPORT_HEADER);
        out.push('\n');
        for r in &self.rows {
            write!(out, "{},{}", r.h, r.dofs).unwrap();
            for v in r.errors.to_array() {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        if self.rows.len() >= 2 {
            out.push_str("rate,");
            for v in self.rates() {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Parses the rows of a CSV report; the rate footer is recomputed, not read.
    pub fn from_csv(text: &str) -> Result<Self, PostprocError> {
        let mut lines = text.lines().enumerate();
        let bad = |line: usize, message: String| PostprocError::Parse {
            line: line + 1,
            message,
        };
        match lines.next() {
            Some((_, h)) if h.trim() == REPORT_HEADER => {}
            _ => return Err(bad(0, "missing or unexpected header".into())),
        }
        let mut report = StudyReport::default();
        for (i, line) in lines {
            if line.trim().is_empty() || line.starts_with("rate,") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 12 {
                return Err(bad(
                    i,
                    format!("expected 12 fields, found {}", fields.len()),
                ));
            }
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| bad(i, format!("{s:?}: {e}")))
            };
            let h = num(fields[0])?;
            let dofs = fields[1]
                .trim()
                .parse::<usize>()
                .map_err(|e| bad(i, format!("dofs: {e}")))?;
            let mut errs = [0.0; 10];
            for (k, f) in fields[2..].iter().enumerate() {
                errs[k] = num(f)?;
            }
            report.push(ReportRow {
                h,
                dofs,
                errors: ErrorRecord::from_array(errs),
            });
        }
        Ok(report)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), PostprocError> {
        write_file(path.as_ref(), &self.to_csv())
    }

    pub fn write_svg(&self, path: impl AsRef<Path>) -> Result<(), PostprocError> {
        write_file(path.as_ref(), &plot_loglog(self))
    }
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Log-log plot of every positive error column against h, with reference
/// slope triangles for orders 1, 2 and 3.
pub fn plot_loglog(report: &StudyReport) -> String {
    let (w, hgt, margin) = (640.0, 480.0, 60.0);
    let points: Vec<(f64, f64)> = report
        .rows
        .iter()
        .flat_map(|r| {
            r.errors
                .to_array()
                .into_iter()
                .filter(|e| *e > 0.0)
                .map(move |e| (r.h, e))
        })
        .collect();
    let mut svg = String::new();
    writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{hgt}" viewBox="0 0 {w} {hgt}">"#)
        .unwrap();
    writeln!(svg, r#"<rect width="{w}" height="{hgt}" fill="white"/>"#).unwrap();
    writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{} / {}</text>"#,
        w / 2.0,
        escape(&report.case),
        escape(&report.formulation)
    )
    .unwrap();
    if points.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let lx = |v: f64| v.log10();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(h, e) in &points {
        x0 = x0.min(lx(h));
        x1 = x1.max(lx(h));
        y0 = y0.min(lx(e));
        y1 = y1.max(lx(e));
    }
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let px = |h: f64| margin + (lx(h) - x0) / (x1 - x0) * (w - 2.0 * margin);
    let py = |e: f64| hgt - margin - (lx(e) - y0) / (y1 - y0) * (hgt - 2.0 * margin);
    writeln!(
        svg,
        r#"<rect x="{margin}" y="{margin}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - 2.0 * margin,
        hgt - 2.0 * margin
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">h</text>"#,
        w / 2.0,
        hgt - 20.0
    )
    .unwrap();
    for (k, name) in ERROR_COLUMNS.iter().enumerate() {
        let pts: Vec<String> = report
            .rows
            .iter()
            .map(|r| (r.h, r.errors.to_array()[k]))
            .filter(|(_, e)| *e > 0.0)
            .map(|(h, e)| format!("{:.2},{:.2}", px(h), py(e)))
            .collect();
        if pts.len() < 2 {
            continue;
        }
        writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"><title>{name}</title></polyline>"#,
            PALETTE[k],
            pts.join(" ")
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="10" fill="{}">{name}</text>"#,
            w - margin + 4.0,
            margin + 12.0 * k as f64,
            PALETTE[k]
        )
        .unwrap();
    }
    // Reference triangles in the lower-left corner, sized to fit the frame.
    let dx = ((x1 - x0) / 6.0).min((y1 - y0) / 6.0);
    let base = y0 + 0.05 * (y1 - y0);
    for order in 1..=3 {
        let xa = x0 + 0.05 * (x1 - x0) + (order - 1) as f64 * 1.5 * dx;
        let (ha, hb) = (10f64.powf(xa), 10f64.powf(xa + dx));
        let (ea, eb) = (10f64.powf(base), 10f64.powf(base + order as f64 * dx));
        writeln!(
            svg,
            r#"<polygon fill="none" stroke="gray" stroke-dasharray="4,2" points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}"><title>slope {order}</title></polygon>"#,
            px(ha),
            py(ea),
            px(hb),
            py(ea),
            px(hb),
            py(eb)
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" fill="gray">{order}</text>"#,
            px(hb) + 3.0,
            py(eb)
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
