use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the horizontal plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        let (dx, dy) = (self.x - other.x, self.y - other.y);
        (dx * dx + dy * dy).sqrt()
    }

    /// Direction of `other` as seen from `self`, radians in `(-pi, pi]`.
    pub fn bearing_to(self, other: Point2) -> f64 {
        (other.y - self.y).atan2(other.x - self.x)
    }
}

/// Shared scatterer field of a drop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScattererField {
    pub cluster_positions: Vec<Point2>,
    pub rays_per_cluster: usize,
}

/// Ellipse with foci at the two link ends. A cluster contributes to the link
/// iff the single-bounce path through it is at most `axis_ratio` times the
/// direct distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseGate {
    pub focus_a: Point2,
    pub focus_b: Point2,
    pub axis_ratio: f64,
}

impl EllipseGate {
    pub fn new(focus_a: Point2, focus_b: Point2, axis_ratio: f64) -> Result<Self> {
        if focus_a.distance(focus_b) == 0.0 {
            return Err(Error::DegenerateEllipse);
        }
        if !(axis_ratio >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "ellipse axis ratio must be >= 1, got {axis_ratio}"
            )));
        }
        Ok(EllipseGate {
            focus_a,
            focus_b,
            axis_ratio,
        })
    }

    pub fn contains(&self, c: Point2) -> bool {
        let bound = self.axis_ratio * self.focus_a.distance(self.focus_b);
        c.distance(self.focus_a) + c.distance(self.focus_b) <= bound
    }
}

/// Indices (ascending) of the clusters inside the ellipse spanned by `ap`
/// and `ms`.
pub fn select_active_clusters(
    ap: Point2,
    ms: Point2,
    field: &ScattererField,
    axis_ratio: f64,
) -> Result<Vec<usize>> {
    let gate = EllipseGate::new(ap, ms, axis_ratio)?;
    let bound = gate.axis_ratio * ap.distance(ms);
    // Cheap bounding-box reject before the two square roots.
    let half = bound / 2.0;
    let (cx, cy) = ((ap.x + ms.x) / 2.0, (ap.y + ms.y) / 2.0);
    Ok(field
        .cluster_positions
        .iter()
        .enumerate()
        .filter(|(_, c)| (c.x - cx).abs() <= half && (c.y - cy).abs() <= half)
        .filter(|(_, &c)| c.distance(ap) + c.distance(ms) <= bound)
        .map(|(i, _)| i)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(points: &[(f64, f64)]) -> ScattererField {
        ScattererField {
            cluster_positions: points.iter().map(|&(x, y)| Point2::new(x, y)).collect(),
            rays_per_cluster: 3,
        }
    }

    #[test]
    fn midpoint_always_selected() {
        let a = Point2::new(3.0, -2.0);
        let b = Point2::new(40.0, 17.0);
        let mid = Point2::new(21.5, 7.5);
        for ratio in [1.0, 1.2, 3.0] {
            let sel = select_active_clusters(a, b, &field(&[(mid.x, mid.y)]), ratio).unwrap();
            assert_eq!(sel, vec![0]);
        }
    }

    #[test]
    fn far_cluster_rejected() {
        let a = Point2::new(0.0, 0.0);
        let b = Point2::new(10.0, 0.0);
        // 10 * |a - b| away from both foci.
        let y = (100.0f64.powi(2) - 5.0f64.powi(2)).sqrt();
        let sel = select_active_clusters(a, b, &field(&[(5.0, y)]), 1.5).unwrap();
        assert!(sel.is_empty());
    }

    #[test]
    fn hand_geometry_case() {
        // 2 * sqrt(50^2 + 40^2) = 128.06 <= 150.
        let a = Point2::new(0.0, 0.0);
        let b = Point2::new(100.0, 0.0);
        let f = field(&[(50.0, 40.0), (50.0, 60.0), (-10.0, 0.0)]);
        // (50, 60): 2 * 78.10 = 156.2 > 150. (-10, 0): 10 + 110 = 120 <= 150.
        assert_eq!(select_active_clusters(a, b, &f, 1.5).unwrap(), vec![0, 2]);
    }

    #[test]
    fn coincident_foci_rejected() {
        let p = Point2::new(1.0, 1.0);
        assert!(matches!(
            select_active_clusters(p, p, &field(&[(0.0, 0.0)]), 1.5),
            Err(Error::DegenerateEllipse)
        ));
    }
}
