/// Straight road with parallel lanes numbered 1.. from left to right.
///
/// Lane `i` is centred at `(i - 1) * lane_width`; the drivable surface extends half a
/// lane beyond the outer centres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneGeometry {
    pub num_lanes: u8,
    pub lane_width: f64,
}

impl Default for LaneGeometry {
    fn default() -> Self {
        Self {
            num_lanes: 3,
            lane_width: 4.0,
        }
    }
}

impl LaneGeometry {
    pub fn lane_center(&self, lane: u8) -> f64 {
        f64::from(lane.saturating_sub(1)) * self.lane_width
    }

    /// Lane whose centre is nearest to `y`, saturating at the outer lanes.
    pub fn lane_of(&self, y: f64) -> u8 {
        let idx = (y / self.lane_width).round();
        if idx.is_nan() || idx < 0.0 {
            1
        } else if idx >= f64::from(self.num_lanes - 1) {
            self.num_lanes
        } else {
            idx as u8 + 1
        }
    }

    pub fn road_width(&self) -> f64 {
        f64::from(self.num_lanes) * self.lane_width
    }

    /// Lateral extent of the drivable surface, `(min_y, max_y)`.
    pub fn lateral_bounds(&self) -> (f64, f64) {
        let half = 0.5 * self.lane_width;
        (-half, self.lane_center(self.num_lanes) + half)
    }

    pub fn contains_lane(&self, lane: u8) -> bool {
        (1..=self.num_lanes).contains(&lane)
    }
}
