//! Equidistant grids on `[-R, R]^2` and scatterer geometry.

use crate::error::{Error, Result};
use crate::field::RealField;

/// The lattice `z_ij = (i h, j h)`, `-J <= i, j <= J`, with `h = R / J`.
///
/// Points are stored row-major with `i` (the x index) running fastest, so
/// the flat index of `(i, j)` is `(j + J) * (2J + 1) + (i + J)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    half_width: f64,
    half_count: usize,
    step: f64,
}

impl Grid2D {
    pub fn new(half_width: f64, half_count: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid half-width must be positive, got {half_width}"
            )));
        }
        if half_count < 1 {
            return Err(Error::InvalidParameter(
                "grid half-count J must be at least 1".into(),
            ));
        }
        let step = half_width / half_count as f64;
        Ok(Self {
            half_width: step * half_count as f64,
            half_count,
            step,
        })
    }

    /// `R`
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// `J`
    pub fn half_count(&self) -> usize {
        self.half_count
    }

    /// `h = R / J`
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Points per axis, `2J + 1`.
    pub fn side(&self) -> usize {
        2 * self.half_count + 1
    }

    pub fn len(&self) -> usize {
        self.side() * self.side()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid with the same `R` and twice the resolution.
    pub fn refined(&self) -> Self {
        Self::new(self.half_width, 2 * self.half_count).expect("refining a valid grid")
    }

    pub fn index(&self, i: i64, j: i64) -> usize {
        let jj = self.half_count as i64;
        debug_assert!(i.abs() <= jj && j.abs() <= jj);
        ((j + jj) as usize) * self.side() + (i + jj) as usize
    }

    /// Lattice indices `(i, j)` of a flat index.
    pub fn lattice(&self, index: usize) -> (i64, i64) {
        let side = self.side();
        let jj = self.half_count as i64;
        ((index % side) as i64 - jj, (index / side) as i64 - jj)
    }

    pub fn point(&self, index: usize) -> [f64; 2] {
        let (i, j) = self.lattice(index);
        [i as f64 * self.step, j as f64 * self.step]
    }

    pub fn points(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.len()).map(move |idx| self.point(idx))
    }

    /// Flat index of the point reflected through the origin.
    pub fn negated(&self, index: usize) -> usize {
        self.len() - 1 - index
    }
}

/// Scatterer geometry. Membership is boundary inclusive.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Disk { center: [f64; 2], radius: f64 },
    /// The kite `t -> c + s (cos t + 0.65 cos 2t - 0.65, 1.5 sin t)`.
    Kite { center: [f64; 2], scale: f64 },
    /// A simple closed polygon; the closing edge is implicit.
    Polygon { vertices: Vec<[f64; 2]> },
}

const KITE_SEGMENTS: usize = 4096;
const DISK_SEGMENTS: usize = 4096;
const BOUNDARY_TOL: f64 = 1e-12;

impl Shape {
    pub fn disk(center: [f64; 2], radius: f64) -> Self {
        Shape::Disk { center, radius }
    }

    pub fn kite(center: [f64; 2], scale: f64) -> Self {
        Shape::Kite { center, scale }
    }

    pub fn polygon(vertices: Vec<[f64; 2]>) -> Self {
        Shape::Polygon { vertices }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Shape::Disk { radius, .. } if !(*radius > 0.0 && radius.is_finite()) => Err(
                Error::InvalidParameter(format!("disk radius must be positive, got {radius}")),
            ),
            Shape::Kite { scale, .. } if !(*scale > 0.0 && scale.is_finite()) => Err(
                Error::InvalidParameter(format!("kite scale must be positive, got {scale}")),
            ),
            Shape::Polygon { vertices } if vertices.len() < 3 => Err(Error::InvalidParameter(
                "polygon needs at least three vertices".into(),
            )),
            Shape::Polygon { vertices } if polygon_self_intersects(vertices) => Err(
                Error::InvalidParameter("polygon must be simple".into()),
            ),
            _ => Ok(()),
        }
    }

    pub fn kite_point(center: [f64; 2], scale: f64, t: f64) -> [f64; 2] {
        [
            center[0] + scale * (t.cos() + 0.65 * (2.0 * t).cos() - 0.65),
            center[1] + scale * 1.5 * t.sin(),
        ]
    }

    fn kite_polygon(center: [f64; 2], scale: f64) -> Vec<[f64; 2]> {
        (0..KITE_SEGMENTS)
            .map(|m| {
                let t = 2.0 * std::f64::consts::PI * m as f64 / KITE_SEGMENTS as f64;
                Self::kite_point(center, scale, t)
            })
            .collect()
    }

    /// Boundary as a closed polygon; disks and kites are sampled finely.
    pub fn boundary_polygon(&self) -> Vec<[f64; 2]> {
        match self {
            Shape::Disk { center, radius } => (0..DISK_SEGMENTS)
                .map(|m| {
                    let t = 2.0 * std::f64::consts::PI * m as f64 / DISK_SEGMENTS as f64;
                    [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
                })
                .collect(),
            Shape::Kite { center, scale } => Self::kite_polygon(*center, *scale),
            Shape::Polygon { vertices } => vertices.clone(),
        }
    }

    /// Axis-aligned bounding box `[min_x, min_y, max_x, max_y]`.
    pub fn bounding_box(&self) -> [f64; 4] {
        match self {
            Shape::Disk { center, radius } => [
                center[0] - radius,
                center[1] - radius,
                center[0] + radius,
                center[1] + radius,
            ],
            Shape::Kite { center, scale } => bbox(&Self::kite_polygon(*center, *scale)),
            Shape::Polygon { vertices } => bbox(vertices),
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        match self {
            Shape::Disk { center, radius } => {
                let d = ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt();
                d <= radius + BOUNDARY_TOL * radius.max(1.0)
            }
            Shape::Kite { center, scale } => {
                polygon_contains(&Self::kite_polygon(*center, *scale), p)
            }
            Shape::Polygon { vertices } => polygon_contains(vertices, p),
        }
    }

    /// Signed distance to the boundary: negative inside, positive outside.
    /// Exact for disks and polygons; the kite uses its fine polygonization.
    pub fn signed_distance(&self, p: [f64; 2]) -> f64 {
        match self {
            Shape::Disk { center, radius } => {
                ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt() - radius
            }
            Shape::Kite { center, scale } => {
                polygon_signed_distance(&Self::kite_polygon(*center, *scale), p)
            }
            Shape::Polygon { vertices } => polygon_signed_distance(vertices, p),
        }
    }
}

fn bbox(vertices: &[[f64; 2]]) -> [f64; 4] {
    vertices.iter().fold(
        [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY],
        |b, v| [b[0].min(v[0]), b[1].min(v[1]), b[2].max(v[0]), b[3].max(v[1])],
    )
}

fn segment_distance(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((a[0] + t * dx - p[0]).powi(2) + (a[1] + t * dy - p[1]).powi(2)).sqrt()
}

fn edges(vertices: &[[f64; 2]]) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
    vertices
        .iter()
        .zip(vertices.iter().cycle().skip(1))
        .map(|(a, b)| (*a, *b))
}

/// Winding-number test; points on an edge count as inside.
fn polygon_contains(vertices: &[[f64; 2]], p: [f64; 2]) -> bool {
    let scale = {
        let b = bbox(vertices);
        (b[2] - b[0]).max(b[3] - b[1]).max(1.0)
    };
    let mut winding = 0i32;
    for (a, b) in edges(vertices) {
        if segment_distance(a, b, p) <= BOUNDARY_TOL * scale {
            return true;
        }
        let cross = (b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1]);
        if a[1] <= p[1] {
            if b[1] > p[1] && cross > 0.0 {
                winding += 1;
            }
        } else if b[1] <= p[1] && cross < 0.0 {
            winding -= 1;
        }
    }
    winding != 0
}

fn polygon_signed_distance(vertices: &[[f64; 2]], p: [f64; 2]) -> f64 {
    let d = edges(vertices)
        .map(|(a, b)| segment_distance(a, b, p))
        .fold(f64::INFINITY, f64::min);
    if polygon_contains(vertices, p) {
        -d
    } else {
        d
    }
}

fn segments_cross(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let orient = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| {
        (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    };
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

fn polygon_self_intersects(vertices: &[[f64; 2]]) -> bool {
    let n = vertices.len();
    let e: Vec<_> = edges(vertices).collect();
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_cross(e[i].0, e[i].1, e[j].0, e[j].1) {
                return true;
            }
        }
    }
    false
}

/// Boolean membership per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportMask {
    grid: Grid2D,
    inside: Vec<bool>,
}

impl SupportMask {
    pub fn empty(grid: Grid2D) -> Self {
        Self {
            grid,
            inside: vec![false; grid.len()],
        }
    }

    pub fn from_flags(grid: Grid2D, inside: Vec<bool>) -> Result<Self> {
        if inside.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                actual: inside.len(),
            });
        }
        let mask = Self { grid, inside };
        if mask.touches_boundary() {
            return Err(Error::ShapeOutOfBounds {
                half_width: grid.half_width(),
            });
        }
        Ok(mask)
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn flags(&self) -> &[bool] {
        &self.inside
    }

    pub fn contains(&self, index: usize) -> bool {
        self.inside[index]
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    /// Flat indices of the points inside.
    pub fn indices(&self) -> Vec<usize> {
        (0..self.inside.len()).filter(|&i| self.inside[i]).collect()
    }

    pub fn union(&self, other: &SupportMask) -> Result<SupportMask> {
        if self.grid != other.grid {
            return Err(Error::DimensionMismatch {
                expected: self.inside.len(),
                actual: other.inside.len(),
            });
        }
        Ok(SupportMask {
            grid: self.grid,
            inside: self
                .inside
                .iter()
                .zip(&other.inside)
                .map(|(a, b)| *a || *b)
                .collect(),
        })
    }

    pub fn is_subset_of(&self, other: &SupportMask) -> bool {
        self.inside
            .iter()
            .zip(&other.inside)
            .all(|(a, b)| !*a || *b)
    }

    fn touches_boundary(&self) -> bool {
        let jj = self.grid.half_count() as i64;
        (0..self.inside.len()).any(|idx| {
            let (i, j) = self.grid.lattice(idx);
            self.inside[idx] && (i.abs() == jj || j.abs() == jj)
        })
    }
}

/// Marks the grid points inside `shape`.
pub fn rasterize(shape: &Shape, grid: &Grid2D) -> Result<SupportMask> {
    shape.validate()?;
    let r = grid.half_width();
    let b = shape.bounding_box();
    if !(b[0] > -r && b[1] > -r && b[2] < r && b[3] < r) {
        return Err(Error::ShapeOutOfBounds { half_width: r });
    }
    let inside = match shape {
        // Avoid rebuilding the kite polygon per point.
        Shape::Kite { center, scale } => {
            let poly = Shape::kite_polygon(*center, *scale);
            grid.points().map(|p| polygon_contains(&poly, p)).collect()
        }
        _ => grid.points().map(|p| shape.contains(p)).collect(),
    };
    SupportMask::from_flags(*grid, inside)
}

fn polygon_area(vertices: &[[f64; 2]]) -> f64 {
    0.5 * edges(vertices)
        .map(|(a, b)| a[0] * b[1] - b[0] * a[1])
        .sum::<f64>()
}

/// Sutherland-Hodgman clip of `poly` to the half plane `sign * (p[axis] - value) >= 0`.
fn clip_half_plane(poly: &[[f64; 2]], axis: usize, value: f64, sign: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(poly.len() + 4);
    for (a, b) in edges(poly) {
        let (da, db) = (sign * (a[axis] - value), sign * (b[axis] - value));
        if da >= 0.0 {
            out.push(a);
        }
        if (da >= 0.0) != (db >= 0.0) {
            let t = da / (da - db);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

/// Area of `poly` inside the axis-aligned box `[x0, x1] x [y0, y1]`.
fn clipped_area(poly: &[[f64; 2]], x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let mut p = clip_half_plane(poly, 0, x0, 1.0);
    for (axis, value, sign) in [(0, x1, -1.0), (1, y0, 1.0), (1, y1, -1.0)] {
        if p.is_empty() {
            return 0.0;
        }
        p = clip_half_plane(&p, axis, value, sign);
    }
    polygon_area(&p).abs()
}

/// Fractions below this are treated as round-off and dropped.
const COVERAGE_FLOOR: f64 = 1e-12;

/// Fraction of each grid cell `[x - h/2, x + h/2] x [y - h/2, y + h/2]`
/// covered by `shape`, in `[0, 1]`.
pub fn coverage(shape: &Shape, grid: &Grid2D) -> Result<RealField> {
    shape.validate()?;
    let r = grid.half_width();
    let h = grid.step();
    let b = shape.bounding_box();
    if !(b[0] > -r + h && b[1] > -r + h && b[2] < r - h && b[3] < r - h) {
        return Err(Error::ShapeOutOfBounds { half_width: r });
    }
    let poly = shape.boundary_polygon();
    let half = 0.5 * h;
    let values = grid
        .points()
        .map(|p| {
            let (x0, x1, y0, y1) = (p[0] - half, p[0] + half, p[1] - half, p[1] + half);
            if x1 < b[0] || x0 > b[2] || y1 < b[1] || y0 > b[3] {
                return 0.0;
            }
            let f = (clipped_area(&poly, x0, x1, y0, y1) / (h * h)).clamp(0.0, 1.0);
            if f < COVERAGE_FLOOR {
                0.0
            } else {
                f
            }
        })
        .collect();
    RealField::from_values(*grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_construction() {
        let g = Grid2D::new(5.0, 20).unwrap();
        assert_eq!(g.side(), 41);
        assert_eq!(g.step(), 0.25);
        assert_eq!(g.step() * g.half_count() as f64, g.half_width());

        let g = Grid2D::new(1.0, 1).unwrap();
        assert_eq!((g.side(), g.step()), (3, 1.0));

        let g = Grid2D::new(5.0, 40).unwrap();
        assert_eq!((g.side(), g.step()), (81, 0.125));

        assert!(Grid2D::new(0.0, 3).is_err());
        assert!(Grid2D::new(-1.0, 3).is_err());
        assert!(Grid2D::new(1.0, 0).is_err());
    }

    #[test]
    fn indexing_round_trip_and_negation() {
        let g = Grid2D::new(2.0, 3).unwrap();
        for idx in 0..g.len() {
            let (i, j) = g.lattice(idx);
            assert_eq!(g.index(i, j), idx);
            let p = g.point(idx);
            let q = g.point(g.negated(idx));
            assert_eq!([p[0], p[1]], [-q[0], -q[1]]);
        }
    }

    fn brute_count(grid: &Grid2D, pred: impl Fn(f64, f64) -> bool) -> usize {
        let jj = grid.half_count() as i64;
        let h = grid.step();
        let mut n = 0;
        for j in -jj..=jj {
            for i in -jj..=jj {
                if pred(i as f64 * h, j as f64 * h) {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn rasterized_counts() {
        let g = Grid2D::new(5.0, 20).unwrap();
        let tiny = rasterize(&Shape::disk([0.0, 0.0], 0.1), &g).unwrap();
        assert_eq!(tiny.count(), 1);
        assert!(tiny.contains(g.index(0, 0)));

        let unit = rasterize(&Shape::disk([0.0, 0.0], 1.0), &g).unwrap();
        let oracle = brute_count(&g, |x, y| x * x + y * y <= 1.0);
        assert_eq!(oracle, 49);
        assert_eq!(unit.count(), oracle);

        let square = Shape::polygon(vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]);
        let sq = rasterize(&square, &g).unwrap();
        let oracle = brute_count(&g, |x, y| x.abs() <= 1.0 && y.abs() <= 1.0);
        assert_eq!(oracle, 81);
        assert_eq!(sq.count(), oracle);
    }

    #[test]
    fn out_of_bounds_shapes_are_rejected() {
        let g = Grid2D::new(2.0, 8).unwrap();
        assert!(matches!(
            rasterize(&Shape::disk([0.0, 0.0], 2.0), &g),
            Err(Error::ShapeOutOfBounds { .. })
        ));
        assert!(rasterize(&Shape::disk([1.5, 0.0], 0.6), &g).is_err());
        assert!(rasterize(&Shape::disk([0.0, 0.0], -1.0), &g).is_err());
        let bowtie = Shape::polygon(vec![[-1.0, -1.0], [1.0, 1.0], [1.0, -1.0], [-1.0, 1.0]]);
        assert!(rasterize(&bowtie, &g).is_err());
    }

    #[test]
    fn nested_disks_are_monotone() {
        let g = Grid2D::new(5.0, 20).unwrap();
        let mut prev = SupportMask::empty(g);
        for m in 1..=16 {
            let mask = rasterize(&Shape::disk([0.3, -0.2], 0.25 * m as f64), &g).unwrap();
            assert!(prev.is_subset_of(&mask));
            prev = mask;
        }
    }

    #[test]
    fn centrally_symmetric_shapes_give_symmetric_masks() {
        let g = Grid2D::new(5.0, 20).unwrap();
        let shapes = [
            Shape::disk([0.0, 0.0], 1.3),
            Shape::polygon(vec![[-2.0, -0.5], [0.0, -1.5], [2.0, 0.5], [0.0, 1.5]]),
        ];
        for s in &shapes {
            let mask = rasterize(s, &g).unwrap();
            for idx in 0..g.len() {
                assert_eq!(mask.contains(idx), mask.contains(g.negated(idx)));
            }
        }
    }

    #[test]
    fn kite_membership() {
        let kite = Shape::kite([0.0, 0.0], 1.0);
        assert!(kite.contains([0.0, 0.0]));
        assert!(kite.contains([0.9, 0.0]));
        assert!(!kite.contains([1.1, 0.0]));
        // the concave notch on the negative x axis: x(pi) = -1
        assert!(!kite.contains([-1.05, 0.0]));
        assert!(kite.contains([-0.95, 0.0]));
        assert!(kite.contains([-1.2, 1.0]));
        let g = Grid2D::new(5.0, 20).unwrap();
        let mask = rasterize(&kite, &g).unwrap();
        assert!(mask.count() > 49);
        assert!(kite.signed_distance([0.0, 0.0]) < 0.0);
        assert!(kite.signed_distance([3.0, 0.0]) > 1.9);
    }

    #[test]
    fn coverage_of_aligned_square_is_exact() {
        let grid = Grid2D::new(2.0, 8).unwrap();
        // cell edges sit at odd multiples of h/2 = 0.125
        let sq = Shape::polygon(vec![[-0.625, -0.375], [0.625, -0.375], [0.625, 0.375], [-0.625, 0.375]]);
        let c = coverage(&sq, &grid).unwrap();
        let total: f64 = c.values().iter().sum();
        assert!((total * 0.0625 - 1.25 * 0.75).abs() < 1e-12);
        assert!(c.values().iter().all(|&v| v < 1e-12 || (v - 1.0).abs() < 1e-12));
        assert_eq!(c.values().iter().filter(|&&v| v > 0.5).count(), 15);
    }

    #[test]
    fn coverage_of_disk_sums_to_area() {
        let grid = Grid2D::new(2.0, 16).unwrap();
        let c = coverage(&Shape::disk([0.1, -0.2], 1.0), &grid).unwrap();
        let h = grid.step();
        let area: f64 = c.values().iter().sum::<f64>() * h * h;
        assert!((area - std::f64::consts::PI).abs() < 1e-5);
        assert!(c.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        let centre = grid.index(0, 0);
        assert!((c[centre] - 1.0).abs() < 1e-12);
        // every point-sampled cell has positive coverage
        let mask = rasterize(&Shape::disk([0.1, -0.2], 1.0), &grid).unwrap();
        assert!(mask.indices().iter().all(|&i| c[i] > 0.0));
    }

    #[test]
    fn coverage_is_orientation_independent_and_bounded() {
        let grid = Grid2D::new(3.0, 12).unwrap();
        let tri = vec![[0.0, 0.0], [1.3, 0.2], [0.4, 1.1]];
        let rev: Vec<_> = tri.iter().rev().copied().collect();
        let a = coverage(&Shape::polygon(tri), &grid).unwrap();
        let b = coverage(&Shape::polygon(rev), &grid).unwrap();
        assert!(a.values().iter().zip(b.values()).all(|(x, y)| (x - y).abs() < 1e-13));
        assert!(coverage(&Shape::disk([0.0, 0.0], 2.9), &grid).is_err());
        let k = coverage(&Shape::kite([0.0, 0.0], 1.0), &grid).unwrap();
        assert!(k.values().iter().sum::<f64>() > 0.0);
    }
}
