//! Oriented rectangle overlap by the separating-axis theorem.

use crate::kinematics::VehicleState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedRect {
    pub cx: f64,
    pub cy: f64,
    pub half_length: f64,
    pub half_width: f64,
    /// Rotation of the length axis from +x (rad).
    pub heading: f64,
}

impl OrientedRect {
    pub fn new(cx: f64, cy: f64, length: f64, width: f64, heading: f64) -> Self {
        Self {
            cx,
            cy,
            half_length: 0.5 * length,
            half_width: 0.5 * width,
            heading,
        }
    }

    pub fn of_vehicle(v: &VehicleState) -> Self {
        Self::new(v.x, v.y, v.length, v.width, v.phi)
    }

    fn axes(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.heading.sin_cos();
        [[c, s], [-s, c]]
    }

    /// Half extent of the rectangle projected on a unit axis.
    fn radius_along(&self, axis: [f64; 2]) -> f64 {
        let [u, w] = self.axes();
        self.half_length * (u[0] * axis[0] + u[1] * axis[1]).abs()
            + self.half_width * (w[0] * axis[0] + w[1] * axis[1]).abs()
    }

    /// True if the rectangles share at least one point. Touching counts as contact.
    pub fn intersects(&self, other: &OrientedRect) -> bool {
        let d = [other.cx - self.cx, other.cy - self.cy];
        let reach = self.half_length + self.half_width + other.half_length + other.half_width;
        if d[0] * d[0] + d[1] * d[1] > reach * reach {
            return false;
        }
        self.axes().into_iter().chain(other.axes()).all(|axis| {
            let dist = (d[0] * axis[0] + d[1] * axis[1]).abs();
            dist <= self.radius_along(axis) + other.radius_along(axis)
        })
    }

    /// Point containment, used by tests as an independent oracle.
    pub fn contains(&self, px: f64, py: f64) -> bool {
        let [u, w] = self.axes();
        let (dx, dy) = (px - self.cx, py - self.cy);
        (dx * u[0] + dy * u[1]).abs() <= self.half_length
            && (dx * w[0] + dy * w[1]).abs() <= self.half_width
    }
}
