//! Convex polygons in the `(R1, R2)` plane.

use serde::{Deserialize, Serialize};

/// Cross-product tolerance of the hull construction.
pub const HULL_TOL: f64 = 1e-12;

pub type Point = [f64; 2];

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew's monotone chain. Returns the hull counterclockwise starting from
/// the lexicographically smallest point, without collinear vertices.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points
        .iter()
        .copied()
        .filter(|p| p[0].is_finite() && p[1].is_finite())
        .collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| (a[0] - b[0]).abs() <= HULL_TOL && (a[1] - b[1]).abs() <= HULL_TOL);
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= HULL_TOL {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= HULL_TOL {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn dist_to_segment(p: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    };
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// Convex rate region, vertices counterclockwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionPolygon {
    pub vertices: Vec<Point>,
}

impl RegionPolygon {
    /// The convex hull of `points` together with the origin.
    pub fn hull_of(points: &[Point]) -> Self {
        let mut all = Vec::with_capacity(points.len() + 1);
        all.push([0.0, 0.0]);
        all.extend_from_slice(points);
        Self {
            vertices: convex_hull(&all),
        }
    }

    pub fn union_hull<'a>(regions: impl IntoIterator<Item = &'a RegionPolygon>) -> Self {
        let pts: Vec<Point> = regions.into_iter().flat_map(|r| r.vertices.iter().copied()).collect();
        Self::hull_of(&pts)
    }

    /// Whether `p` lies in the polygon or within `tol` of it.
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        let v = &self.vertices;
        match v.len() {
            0 => false,
            1 => ((p[0] - v[0][0]).powi(2) + (p[1] - v[0][1]).powi(2)).sqrt() <= tol,
            _ => {
                if v.len() >= 3 && (0..v.len()).all(|i| cross(v[i], v[(i + 1) % v.len()], p) >= 0.0) {
                    return true;
                }
                (0..v.len()).any(|i| dist_to_segment(p, v[i], v[(i + 1) % v.len()]) <= tol)
            }
        }
    }

    pub fn contains_region(&self, other: &RegionPolygon, tol: f64) -> bool {
        other.vertices.iter().all(|&p| self.contains(p, tol))
    }

    /// `max lambda R1 + (1 - lambda) R2` over the region.
    pub fn support(&self, lambda: f64) -> f64 {
        self.vertices
            .iter()
            .map(|p| lambda * p[0] + (1.0 - lambda) * p[1])
            .fold(0.0, f64::max)
    }

    /// Largest `R1 + R2` in the region.
    pub fn max_sum_rate(&self) -> f64 {
        self.vertices.iter().map(|p| p[0] + p[1]).fold(0.0, f64::max)
    }

    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        let n = v.len();
        (0..n)
            .map(|i| v[i][0] * v[(i + 1) % n][1] - v[(i + 1) % n][0] * v[i][1])
            .sum::<f64>()
            / 2.0
    }

    /// CSV with header `R1_bits,R2_bits`, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("R1_bits,R2_bits\n");
        for p in &self.vertices {
            s.push_str(&format!("{},{}\n", p[0], p[1]));
        }
        s
    }
}

/// Non-dominated vertices of the region, sorted by `R1` ascending.
pub fn pareto_points(region: &RegionPolygon) -> Vec<Point> {
    let v = &region.vertices;
    let mut out: Vec<Point> = v
        .iter()
        .copied()
        .filter(|p| {
            !v.iter().any(|q| {
                q[0] >= p[0] - HULL_TOL && q[1] >= p[1] - HULL_TOL && (q[0] > p[0] + HULL_TOL || q[1] > p[1] + HULL_TOL)
            })
        })
        .collect();
    out.sort_by(|a, b| a[0].total_cmp(&b[0]));
    out
}
