use super::{Action, LaneGeometry};
use crate::kinematics::{KinematicsParams, VehicleState};

/// Two-stage proportional lane keeping: lateral error sets a reference heading, the
/// heading error sets the front wheel angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneKeeping {
    pub k_lat: f64,
    /// The lateral error is closed over `max(lookahead_min, lookahead_time * v)` metres.
    pub lookahead_time: f64,
    pub lookahead_min: f64,
    pub k_head: f64,
}

impl Default for LaneKeeping {
    fn default() -> Self {
        Self {
            k_lat: 1.0,
            lookahead_time: 0.3,
            lookahead_min: 3.0,
            k_head: 2.0,
        }
    }
}

impl LaneKeeping {
    pub fn steer(
        &self,
        vehicle: &VehicleState,
        target_lane: u8,
        road: &LaneGeometry,
        params: &KinematicsParams,
    ) -> f64 {
        let lateral_error = road.lane_center(target_lane) - vehicle.y;
        let lookahead = self.lookahead_min.max(self.lookahead_time * vehicle.v);
        let heading_ref = (self.k_lat * lateral_error / lookahead).atan();
        (self.k_head * (heading_ref - vehicle.phi)).clamp(-params.delta_max, params.delta_max)
    }
}

/// Target lane after applying `action`. Lane changes saturate at the road edges.
pub fn ego_target_lane(action: Action, target_lane: u8, road: &LaneGeometry) -> u8 {
    match action {
        Action::LeftLane if target_lane > 1 => target_lane - 1,
        Action::RightLane if target_lane < road.num_lanes => target_lane + 1,
        _ => target_lane,
    }
}

/// Acceleration and steering for one substep of the ego vehicle.
pub fn ego_controller(
    action: Action,
    ego: &VehicleState,
    target_lane: u8,
    accel_magnitude: f64,
    keeping: &LaneKeeping,
    road: &LaneGeometry,
    params: &KinematicsParams,
) -> (f64, f64) {
    let accel = match action {
        Action::Accelerate => accel_magnitude,
        Action::Decelerate => -accel_magnitude,
        _ => 0.0,
    };
    (accel, keeping.steer(ego, target_lane, road, params))
}
