//! Scripted surrounding traffic: speed tracking with emergency braking, plus random
//! gap-checked lane changes.

use rand::Rng;

use super::LaneGeometry;
use crate::kinematics::VehicleState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficConfig {
    /// Vehicles spawned in each lane.
    pub n_per_lane: usize,
    /// Centre-to-centre spacing between consecutive vehicles in a lane at reset (m).
    pub spawn_gap_range: (f64, f64),
    pub traffic_speed_range: (f64, f64),
    /// Probability of attempting a lane change at each decision step.
    pub lane_change_prob: f64,
    /// Bumper-to-bumper gap to the leader below which a vehicle brakes hard (m).
    pub safe_gap_front: f64,
    /// Minimum gap to the follower in the destination lane for a lane change (m).
    pub safe_gap_rear: f64,
    /// Proportional gain of the speed tracker (1/s).
    pub speed_gain: f64,
    /// Speed tracking acceleration limit (m/s²).
    pub accel_limit: f64,
    /// Deceleration applied when the front gap is unsafe (m/s²).
    pub hard_brake: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            n_per_lane: 4,
            spawn_gap_range: (20.0, 60.0),
            traffic_speed_range: (18.0, 24.0),
            lane_change_prob: 0.1,
            safe_gap_front: 15.0,
            safe_gap_rear: 10.0,
            speed_gain: 0.5,
            accel_limit: 3.0,
            hard_brake: 5.0,
        }
    }
}

/// A surrounding vehicle with its own cruise speed and lane-change latch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficVehicle {
    pub state: VehicleState,
    pub target_speed: f64,
    pub target_lane: u8,
}

impl TrafficVehicle {
    pub fn cruising(state: VehicleState) -> Self {
        Self {
            target_speed: state.v,
            target_lane: state.lane,
            state,
        }
    }

    /// Settled in its target lane; only then may it start another lane change.
    pub fn is_settled(&self, road: &LaneGeometry) -> bool {
        self.state.lane == self.target_lane
            && (self.state.y - road.lane_center(self.target_lane)).abs() < SETTLE_TOLERANCE
    }
}

const SETTLE_TOLERANCE: f64 = 0.5;

/// Longitudinal footprint of a vehicle for gap queries. A vehicle changing lanes
/// occupies both its current and its target lane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Occupant {
    pub x: f64,
    pub half_length: f64,
    pub lane: u8,
    pub target_lane: u8,
}

impl Occupant {
    pub fn new(state: &VehicleState, target_lane: u8) -> Self {
        Self {
            x: state.x,
            half_length: 0.5 * state.length,
            lane: state.lane,
            target_lane,
        }
    }

    pub fn occupies(&self, lane: u8) -> bool {
        self.lane == lane || self.target_lane == lane
    }
}

/// Bumper-to-bumper `(front, rear)` gaps around `occupants[subject]` in `lane`.
/// Missing neighbours give infinite gaps.
pub fn lane_gaps(occupants: &[Occupant], subject: usize, lane: u8) -> (f64, f64) {
    let me = &occupants[subject];
    let mut front = f64::INFINITY;
    let mut rear = f64::INFINITY;
    for (j, o) in occupants.iter().enumerate() {
        if j == subject || !o.occupies(lane) {
            continue;
        }
        let gap = (o.x - me.x).abs() - o.half_length - me.half_length;
        if o.x >= me.x {
            front = front.min(gap);
        } else {
            rear = rear.min(gap);
        }
    }
    (front, rear)
}

/// Speed tracking acceleration, overridden by hard braking behind a close leader.
pub fn longitudinal_accel(speed: f64, target_speed: f64, front_gap: f64, cfg: &TrafficConfig) -> f64 {
    if front_gap < cfg.safe_gap_front {
        -cfg.hard_brake
    } else {
        (cfg.speed_gain * (target_speed - speed)).clamp(-cfg.accel_limit, cfg.accel_limit)
    }
}

/// Randomly commit `occupants[subject]` to an adjacent lane.
///
/// With probability `lane_change_prob` an adjacent lane is drawn uniformly; the change
/// is committed only if both gaps there are safe. Random draws happen in a fixed order
/// so the outcome is a pure function of the rng state and the occupants.
pub fn decide_lane_change<R: Rng + ?Sized>(
    occupants: &[Occupant],
    subject: usize,
    road: &LaneGeometry,
    cfg: &TrafficConfig,
    rng: &mut R,
) -> Option<u8> {
    if !(rng.gen::<f64>() < cfg.lane_change_prob) {
        return None;
    }
    let lane = occupants[subject].lane;
    let mut candidates = [0u8; 2];
    let mut n = 0;
    if lane > 1 {
        candidates[n] = lane - 1;
        n += 1;
    }
    if lane < road.num_lanes {
        candidates[n] = lane + 1;
        n += 1;
    }
    if n == 0 {
        return None;
    }
    let choice = candidates[rng.gen_range(0..n)];
    let (front, rear) = lane_gaps(occupants, subject, choice);
    (front >= cfg.safe_gap_front && rear >= cfg.safe_gap_rear).then_some(choice)
}
