//! Discrete domains, boundary distance and boundary-graded meshes.
//!
//! Supported shapes are the interval `[a, b]`, the rectangle `[0, lx] x [0, ly]`
//! and the disk of radius `R` centred at the origin. All three have a closed-form
//! boundary distance, which the grids store exactly (node positions are generated
//! from the distance map, so tiny distances next to the boundary keep full
//! relative precision).
//!
//! Node ordering is lexicographic: interval nodes left to right; rectangle nodes
//! by `x` index first, then `y` index (`index = i * ny + j`); disk nodes start
//! with the centre, followed by rings of increasing radius, each ring ordered by
//! increasing angle from `theta = 0`.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid domain extents: {0}")]
    Domain(String),
    #[error("point {point:?} lies outside the closed domain")]
    Outside { point: Vec<f64> },
    #[error("resolution too small: n = {n}, need n >= {min}")]
    Resolution { n: usize, min: usize },
    #[error("grading strength {0} outside [0, 4]")]
    Grading(f64),
    #[error("grid function has {got} values, grid has {expected} nodes")]
    Length { expected: usize, got: usize },
    #[error("grid functions live on different grids")]
    Mismatch,
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
}

/// Smallest admissible node count per axis.
pub const MIN_NODES: usize = 8;

/// Tolerance (relative to the domain size) used to accept points that sit on the
/// boundary up to rounding.
const CLOSURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Interval { a: f64, b: f64 },
    Rectangle { lx: f64, ly: f64 },
    Disk { radius: f64 },
}

impl Domain {
    pub fn interval(a: f64, b: f64) -> Result<Self, GeometryError> {
        let d = Domain::Interval { a, b };
        d.validate()?;
        Ok(d)
    }

    pub fn rectangle(lx: f64, ly: f64) -> Result<Self, GeometryError> {
        let d = Domain::Rectangle { lx, ly };
        d.validate()?;
        Ok(d)
    }

    pub fn disk(radius: f64) -> Result<Self, GeometryError> {
        let d = Domain::Disk { radius };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        match *self {
            Domain::Interval { a, b } => {
                if !(a.is_finite() && b.is_finite() && b > a) {
                    return Err(GeometryError::Domain(format!("interval needs a < b, got [{a}, {b}]")));
                }
            }
            Domain::Rectangle { lx, ly } => {
                if !(ok(lx) && ok(ly)) {
                    return Err(GeometryError::Domain(format!("rectangle sides must be positive, got {lx} x {ly}")));
                }
            }
            Domain::Disk { radius } => {
                if !ok(radius) {
                    return Err(GeometryError::Domain(format!("disk radius must be positive, got {radius}")));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            _ => 2,
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => b - a,
            Domain::Rectangle { lx, ly } => lx.hypot(ly),
            Domain::Disk { radius } => 2.0 * radius,
        }
    }

    fn scale(&self) -> f64 {
        self.diameter()
    }

    /// Largest boundary distance attained in the domain (inradius).
    pub fn inradius(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => 0.5 * (b - a),
            Domain::Rectangle { lx, ly } => 0.5 * lx.min(ly),
            Domain::Disk { radius } => radius,
        }
    }
}

/// Euclidean distance from `point` to the boundary of `domain`.
pub fn distance_to_boundary(domain: &Domain, point: &[f64]) -> Result<f64, GeometryError> {
    let tol = CLOSURE_TOL * domain.scale();
    let outside = || GeometryError::Outside { point: point.to_vec() };
    let d = match *domain {
        Domain::Interval { a, b } => {
            let x = *point.first().ok_or_else(outside)?;
            (x - a).min(b - x)
        }
        Domain::Rectangle { lx, ly } => {
            if point.len() < 2 {
                return Err(outside());
            }
            let (x, y) = (point[0], point[1]);
            (x).min(lx - x).min(y).min(ly - y)
        }
        Domain::Disk { radius } => {
            if point.len() < 2 {
                return Err(outside());
            }
            radius - point[0].hypot(point[1])
        }
    };
    if !d.is_finite() || d < -tol {
        return Err(outside());
    }
    Ok(d.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Grading {
    Uniform,
    BoundaryGraded { strength: f64 },
}

impl Grading {
    pub fn exponent(&self) -> f64 {
        match *self {
            Grading::Uniform => 1.0,
            Grading::BoundaryGraded { strength } => 1.0 + strength,
        }
    }
}

/// The one-sided grading map `s -> s^k` with `k = 1 + strength`.
pub fn grading_map(s: f64, k: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        s.powf(k)
    }
}

/// Node positions along one axis, stored as distances from both ends so that
/// spacings near either end keep full relative precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub pos: Vec<f64>,
    pub from_lo: Vec<f64>,
    pub from_hi: Vec<f64>,
}

impl Axis {
    /// Symmetric axis on `[lo, lo + len]`: `x = len/2 * (2 xi)^k` on the left half,
    /// mirrored on the right half.
    fn symmetric(lo: f64, len: f64, n: usize, k: f64) -> Axis {
        let mut from_lo = vec![0.0; n];
        let mut from_hi = vec![0.0; n];
        let m = (n - 1) as f64;
        for i in 0..n {
            let xi = i as f64 / m;
            let xr = (n - 1 - i) as f64 / m;
            // each half is the image of [0, 1/2] under the grading map
            let dl = if 2 * i < n { 0.5 * len * grading_map(2.0 * xi, k) } else { len - 0.5 * len * grading_map(2.0 * xr, k) };
            let dr = if 2 * i >= n - 1 { 0.5 * len * grading_map(2.0 * xr, k) } else { len - 0.5 * len * grading_map(2.0 * xi, k) };
            from_lo[i] = dl;
            from_hi[i] = dr;
        }
        from_lo[0] = 0.0;
        from_hi[n - 1] = 0.0;
        let pos = (0..n)
            .map(|i| if 2 * i < n { lo + from_lo[i] } else { lo + len - from_hi[i] })
            .collect();
        Axis { pos, from_lo, from_hi }
    }

    /// Radial axis on `[0, R]` graded towards `R` only.
    fn radial(radius: f64, n: usize, k: f64) -> Axis {
        let m = (n - 1) as f64;
        let from_hi: Vec<f64> = (0..n).map(|j| radius * grading_map((n - 1 - j) as f64 / m, k)).collect();
        let mut from_hi = from_hi;
        from_hi[0] = radius;
        from_hi[n - 1] = 0.0;
        let from_lo: Vec<f64> = from_hi.iter().map(|d| radius - d).collect();
        Axis { pos: from_lo.clone(), from_lo, from_hi }
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
    }

    /// Spacing between node `i` and node `i + 1`.
    pub fn gap(&self, i: usize) -> f64 {
        if self.from_lo[i + 1] <= self.from_hi[i] {
            self.from_lo[i + 1] - self.from_lo[i]
        } else {
            self.from_hi[i] - self.from_hi[i + 1]
        }
    }

    fn dist(&self, i: usize) -> f64 {
        self.from_lo[i].min(self.from_hi[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    Line { x: Axis },
    Lattice { x: Axis, y: Axis },
    /// `rho[0] = 0` is the centre; ring `j >= 1` carries `n_theta` nodes.
    Polar { rho: Axis, n_theta: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    domain: Domain,
    grading: Grading,
    n: usize,
    layout: Layout,
    coords: Vec<[f64; 2]>,
    interior: Vec<bool>,
    delta: Vec<f64>,
}

/// Angular node count used by disk grids with `n` radial nodes (multiple of 8).
pub fn disk_angles(n: usize) -> usize {
    8 * (n - 1).div_ceil(2)
}

pub fn build_grid(domain: Domain, n: usize, grading: Grading) -> Result<Grid, GeometryError> {
    domain.validate()?;
    if n < MIN_NODES {
        return Err(GeometryError::Resolution { n, min: MIN_NODES });
    }
    if let Grading::BoundaryGraded { strength } = grading {
        if !(0.0..=4.0).contains(&strength) || strength.is_nan() {
            return Err(GeometryError::Grading(strength));
        }
    }
    let k = grading.exponent();
    let mut coords = Vec::new();
    let mut interior = Vec::new();
    let mut delta = Vec::new();
    let layout = match domain {
        Domain::Interval { a, b } => {
            let x = Axis::symmetric(a, b - a, n, k);
            for i in 0..n {
                coords.push([x.pos[i], 0.0]);
                let d = x.dist(i);
                interior.push(i > 0 && i < n - 1);
                delta.push(if i == 0 || i == n - 1 { 0.0 } else { d });
            }
            Layout::Line { x }
        }
        Domain::Rectangle { lx, ly } => {
            let x = Axis::symmetric(0.0, lx, n, k);
            let y = Axis::symmetric(0.0, ly, n, k);
            for i in 0..n {
                for j in 0..n {
                    coords.push([x.pos[i], y.pos[j]]);
                    let inner = i > 0 && i < n - 1 && j > 0 && j < n - 1;
                    interior.push(inner);
                    delta.push(if inner { x.dist(i).min(y.dist(j)) } else { 0.0 });
                }
            }
            Layout::Lattice { x, y }
        }
        Domain::Disk { radius } => {
            let rho = Axis::radial(radius, n, k);
            let m = disk_angles(n);
            coords.push([0.0, 0.0]);
            interior.push(true);
            delta.push(radius);
            for j in 1..n {
                for t in 0..m {
                    let th = 2.0 * std::f64::consts::PI * t as f64 / m as f64;
                    let r = rho.pos[j];
                    coords.push([r * th.cos(), r * th.sin()]);
                    interior.push(j < n - 1);
                    delta.push(if j < n - 1 { rho.from_hi[j] } else { 0.0 });
                }
            }
            Layout::Polar { rho, n_theta: m }
        }
    };
    Ok(Grid { domain, grading, n, layout, coords, interior, delta })
}

impl Grid {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    /// Node count per axis (radial node count for disks).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i][..self.dim()]
    }

    pub fn interior_mask(&self) -> &[bool] {
        &self.interior
    }

    pub fn is_interior(&self, i: usize) -> bool {
        self.interior[i]
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.interior[i]).collect()
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn max_delta(&self) -> f64 {
        self.delta.iter().cloned().fold(0.0, f64::max)
    }

    /// Grids built from the same `(domain, n, grading)` triple are identical.
    pub fn same_as(&self, other: &Grid) -> bool {
        std::ptr::eq(self, other) || (self.domain == other.domain && self.n == other.n && self.grading == other.grading)
    }

    /// Distinct positive boundary distances in increasing order.
    pub fn delta_levels(&self) -> Vec<f64> {
        let mut d: Vec<f64> = self.delta.iter().cloned().filter(|&v| v > 0.0).collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        d.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs());
        d
    }

    pub fn polar_index(&self, ring: usize, angle: usize) -> usize {
        match &self.layout {
            Layout::Polar { n_theta, .. } => {
                if ring == 0 {
                    0
                } else {
                    1 + (ring - 1) * n_theta + angle % n_theta
                }
            }
            _ => panic!("polar_index on a non-polar grid"),
        }
    }

    /// Nearest neighbours along the grid lines through node `i`.
    pub fn axis_neighbors(&self, i: usize) -> Vec<usize> {
        let n = self.n;
        match &self.layout {
            Layout::Line { .. } => {
                let mut v = Vec::new();
                if i > 0 {
                    v.push(i - 1);
                }
                if i + 1 < n {
                    v.push(i + 1);
                }
                v
            }
            Layout::Lattice { .. } => {
                let (a, b) = (i / n, i % n);
                let mut v = Vec::new();
                if a > 0 {
                    v.push(i - n);
                }
                if a + 1 < n {
                    v.push(i + n);
                }
                if b > 0 {
                    v.push(i - 1);
                }
                if b + 1 < n {
                    v.push(i + 1);
                }
                v
            }
            Layout::Polar { n_theta, .. } => {
                let m = *n_theta;
                if i == 0 {
                    return (0..4).map(|q| self.polar_index(1, q * m / 4)).collect();
                }
                let (j, t) = ((i - 1) / m + 1, (i - 1) % m);
                let mut v = vec![self.polar_index(j - 1, t)];
                if j + 1 < n {
                    v.push(self.polar_index(j + 1, t));
                }
                v.push(self.polar_index(j, t + 1));
                v.push(self.polar_index(j, t + m - 1));
                v
            }
        }
    }

    /// Nodes along an inward normal, starting at a boundary node and ending at
    /// the point of largest boundary distance on that line.
    pub fn normal_ray(&self) -> Vec<usize> {
        let n = self.n;
        match &self.layout {
            Layout::Line { .. } => (0..=(n - 1) / 2).collect(),
            Layout::Lattice { x, y } => {
                // the normal through the middle of the side x = 0 (or the closest grid line)
                let jm = (0..n)
                    .min_by(|&a, &b| {
                        let ya = (y.pos[a] - 0.5 * y.pos[n - 1]).abs();
                        let yb = (y.pos[b] - 0.5 * y.pos[n - 1]).abs();
                        ya.partial_cmp(&yb).unwrap()
                    })
                    .unwrap();
                let _ = x;
                (0..=(n - 1) / 2).map(|i| i * n + jm).collect()
            }
            Layout::Polar { .. } => (0..n).rev().map(|j| self.polar_index(j, 0)).collect(),
        }
    }

    pub fn zeros(self: &Arc<Self>) -> GridFunction {
        GridFunction { grid: Arc::clone(self), values: vec![0.0; self.len()] }
    }
}

/// Nodal values attached to a grid.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self, GeometryError> {
        if values.len() != grid.len() {
            return Err(GeometryError::Length { expected: grid.len(), got: values.len() });
        }
        Ok(GridFunction { grid: Arc::clone(grid), values })
    }

    /// Evaluates `f(point, delta)` at every node.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(&[f64], f64) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i), grid.delta()[i])).collect();
        GridFunction { grid: Arc::clone(grid), values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction { grid: Arc::clone(&self.grid), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<(), GeometryError> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(GeometryError::Mismatch)
        }
    }

    pub fn check_finite(&self) -> Result<(), GeometryError> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(GeometryError::NonFinite(i)),
            None => Ok(()),
        }
    }

    /// CSV with one row per node: coordinates, delta, interior flag, value.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(w);
        let dim = self.grid.dim();
        if dim == 1 {
            wtr.write_record(["x", "delta", "interior", "value"])?;
        } else {
            wtr.write_record(["x", "y", "delta", "interior", "value"])?;
        }
        for i in 0..self.len() {
            let c = self.grid.coords[i];
            let mut row = vec![format!("{:e}", c[0])];
            if dim == 2 {
                row.push(format!("{:e}", c[1]));
            }
            row.push(format!("{:e}", self.grid.delta[i]));
            row.push((self.grid.interior[i] as u8).to_string());
            row.push(format!("{:e}", self.values[i]));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_uniform_five_nodes() {
        let g = build_grid(Domain::interval(0.0, 1.0).unwrap(), 8, Grading::Uniform).unwrap();
        assert_eq!(g.len(), 8);
        // n = 5 is below the minimum, so check the spacing of the n = 9 grid instead
        let g = build_grid(Domain::interval(0.0, 1.0).unwrap(), 9, Grading::Uniform).unwrap();
        let xs: Vec<f64> = g.coords().iter().map(|c| c[0]).collect();
        for (i, x) in xs.iter().enumerate() {
            assert!((x - i as f64 / 8.0).abs() < 1e-15);
        }
        assert_eq!(g.delta()[0], 0.0);
        assert_eq!(g.delta()[8], 0.0);
        assert!((g.delta()[2] - 0.25).abs() < 1e-15);
        assert!((g.delta()[6] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn graded_first_node_matches_map() {
        let g = build_grid(Domain::interval(0.0, 1.0).unwrap(), 9, Grading::BoundaryGraded { strength: 1.0 }).unwrap();
        // xi = 1/8, mapped on the left half: 0.5 * (2 xi)^2
        let expect = 0.5 * (2.0f64 * 0.125).powi(2);
        assert!((g.coords()[1][0] - expect).abs() < 1e-15);
        assert!((g.delta()[7] - expect).abs() < 1e-15);
    }

    #[test]
    fn small_n_rejected() {
        let e = build_grid(Domain::interval(0.0, 1.0).unwrap(), 5, Grading::Uniform).unwrap_err();
        assert!(matches!(e, GeometryError::Resolution { .. }));
        assert!(Domain::interval(1.0, 1.0).is_err());
        assert!(Domain::disk(-1.0).is_err());
    }

    #[test]
    fn disk_centre_distance() {
        for n in [8, 9, 13] {
            let g = build_grid(Domain::disk(1.0).unwrap(), n, Grading::Uniform).unwrap();
            assert_eq!(g.delta()[0], 1.0);
            assert_eq!(g.len(), 1 + (n - 1) * disk_angles(n));
        }
    }

    #[test]
    fn closed_form_distances() {
        let r = Domain::rectangle(1.0, 2.0).unwrap();
        assert!((distance_to_boundary(&r, &[0.3, 1.0]).unwrap() - 0.3).abs() < 1e-15);
        let d = Domain::disk(2.0).unwrap();
        assert_eq!(distance_to_boundary(&d, &[0.0, 0.0]).unwrap(), 2.0);
        let i = Domain::interval(0.0, 1.0).unwrap();
        assert!((distance_to_boundary(&i, &[0.9]).unwrap() - 0.1).abs() < 1e-15);
        assert!(distance_to_boundary(&i, &[1.5]).is_err());
    }

    #[test]
    fn grid_delta_matches_distance() {
        let cases = [
            (Domain::interval(-1.0, 2.0).unwrap(), Grading::BoundaryGraded { strength: 2.0 }),
            (Domain::rectangle(1.0, 0.5).unwrap(), Grading::Uniform),
            (Domain::disk(1.5).unwrap(), Grading::BoundaryGraded { strength: 1.0 }),
        ];
        for (dom, gr) in cases {
            let g = build_grid(dom, 17, gr).unwrap();
            for i in 0..g.len() {
                let d = distance_to_boundary(&dom, g.point(i)).unwrap();
                assert!((d - g.delta()[i]).abs() < 1e-14, "{dom:?} node {i}: {d} vs {}", g.delta()[i]);
                assert_eq!(g.is_interior(i), g.delta()[i] > 0.0);
            }
        }
    }

    #[test]
    fn uniform_refinement_keeps_shared_deltas() {
        let dom = Domain::interval(0.0, 1.0).unwrap();
        let c = build_grid(dom, 11, Grading::Uniform).unwrap();
        let f = build_grid(dom, 21, Grading::Uniform).unwrap();
        for i in 0..11 {
            assert_eq!(c.delta()[i].to_bits(), f.delta()[2 * i].to_bits());
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let g = Arc::new(build_grid(Domain::disk(1.0).unwrap(), 8, Grading::Uniform).unwrap());
        let u = GridFunction::from_fn(&g, |_, d| d);
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,y,delta,interior,value");
        assert_eq!(lines.len(), g.len() + 1);
    }
}
