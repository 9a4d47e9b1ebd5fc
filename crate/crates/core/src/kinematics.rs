//! Kinematic bicycle model.
//!
//! Position evolves along the velocity direction `phi + beta`, heading turns at
//! `v / l * sin(beta)`, and the slip angle follows from the front wheel angle as
//! `beta = atan(tan(delta) / 2)`. Integration is explicit Euler.

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

use crate::env::LaneGeometry;

/// Longitudinal acceleration is clamped to this magnitude before integration (m/s²).
pub const ACCEL_LIMIT: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("front wheel angle {0} rad is outside (-pi/2, pi/2)")]
    SteeringDomain(f64),
    #[error("invalid kinematics parameters: {0}")]
    InvalidParams(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicsParams {
    /// Distance from the rear axle to the centre of mass (m).
    pub l: f64,
    /// Integration substep (s).
    pub dt: f64,
    pub v_min: f64,
    pub v_max: f64,
    /// Front wheel angle limit (rad).
    pub delta_max: f64,
}

impl Default for KinematicsParams {
    fn default() -> Self {
        Self {
            l: 2.5,
            dt: 0.1,
            v_min: 0.0,
            v_max: 40.0,
            delta_max: std::f64::consts::FRAC_PI_6,
        }
    }
}

impl KinematicsParams {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        if !(self.l > 0.0) {
            return Err(KinematicsError::InvalidParams("l must be positive"));
        }
        if !(self.dt > 0.0) {
            return Err(KinematicsError::InvalidParams("dt must be positive"));
        }
        if !(self.v_min >= 0.0 && self.v_min < self.v_max) {
            return Err(KinematicsError::InvalidParams("need 0 <= v_min < v_max"));
        }
        if !(self.delta_max > 0.0 && self.delta_max < FRAC_PI_2) {
            return Err(KinematicsError::InvalidParams("need 0 < delta_max < pi/2"));
        }
        Ok(())
    }
}

/// Pose, speed and footprint of one vehicle. Lanes are numbered from 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub phi: f64,
    pub length: f64,
    pub width: f64,
    pub lane: u8,
}

impl VehicleState {
    pub const DEFAULT_LENGTH: f64 = 5.0;
    pub const DEFAULT_WIDTH: f64 = 2.0;

    /// A default-sized vehicle heading straight down the road.
    pub fn new(x: f64, y: f64, v: f64, road: &LaneGeometry) -> Self {
        Self {
            x,
            y,
            v,
            phi: 0.0,
            length: Self::DEFAULT_LENGTH,
            width: Self::DEFAULT_WIDTH,
            lane: road.lane_of(y),
        }
    }
}

/// Slip angle for a front wheel angle.
pub fn slip_angle(delta: f64) -> Result<f64, KinematicsError> {
    if !(delta.abs() < FRAC_PI_2) {
        return Err(KinematicsError::SteeringDomain(delta));
    }
    Ok((0.5 * delta.tan()).atan())
}

/// One explicit Euler substep of length `params.dt`.
///
/// `accel` is clamped to `±ACCEL_LIMIT` and `delta` to `±delta_max`; the resulting
/// speed is clamped to `[v_min, v_max]` and the lane is recomputed from the new `y`.
pub fn integrate_step(
    state: &VehicleState,
    accel: f64,
    delta: f64,
    params: &KinematicsParams,
    road: &LaneGeometry,
) -> VehicleState {
    debug_assert!(delta.abs() <= params.delta_max + 1e-12, "steering beyond delta_max");
    let accel = accel.clamp(-ACCEL_LIMIT, ACCEL_LIMIT);
    let delta = delta.clamp(-params.delta_max, params.delta_max);
    // delta_max < pi/2 is a params invariant
    let beta = (0.5 * delta.tan()).atan();
    let dt = params.dt;
    let (sin_course, cos_course) = (state.phi + beta).sin_cos();
    let y = state.y + state.v * sin_course * dt;
    VehicleState {
        x: state.x + state.v * cos_course * dt,
        y,
        phi: state.phi + state.v / params.l * beta.sin() * dt,
        v: (state.v + accel * dt).clamp(params.v_min, params.v_max),
        lane: road.lane_of(y),
        ..*state
    }
}

/// Signed offsets of `other` relative to `ego`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeState {
    pub dx: f64,
    pub dy: f64,
    pub dv: f64,
}

impl std::ops::Neg for RelativeState {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            dx: -self.dx,
            dy: -self.dy,
            dv: -self.dv,
        }
    }
}

pub fn relative_state(ego: &VehicleState, other: &VehicleState) -> RelativeState {
    RelativeState {
        dx: other.x - ego.x,
        dy: other.y - ego.y,
        dv: other.v - ego.v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn road() -> LaneGeometry {
        LaneGeometry::default()
    }

    fn car(x: f64, y: f64, v: f64) -> VehicleState {
        VehicleState::new(x, y, v, &road())
    }

    #[test]
    fn slip_angle_values() {
        assert_eq!(slip_angle(0.0).unwrap(), 0.0);
        // atan(0.5 * tan(0.1)) evaluated at 40 digits
        let expected = 0.050_125_313_073_171_44_f64;
        assert!((slip_angle(0.1).unwrap() - expected).abs() < 1e-14);
        assert!(matches!(
            slip_angle(FRAC_PI_2),
            Err(KinematicsError::SteeringDomain(_))
        ));
        assert!(slip_angle(-2.0).is_err());
        assert!(slip_angle(f64::NAN).is_err());
    }

    #[test]
    fn straight_line() {
        let p = KinematicsParams::default();
        let s = integrate_step(&car(0.0, 0.0, 25.0), 0.0, 0.0, &p, &road());
        assert_eq!(s.x, 2.5);
        assert_eq!((s.y, s.phi, s.v), (0.0, 0.0, 25.0));
    }

    #[test]
    fn pure_acceleration() {
        let p = KinematicsParams::default();
        let s0 = car(0.0, 4.0, 25.0);
        let s = integrate_step(&s0, 2.0, 0.0, &p, &road());
        assert!((s.v - 25.2).abs() < 1e-12);
        assert_eq!(s.y, s0.y);
        assert_eq!(s.phi, s0.phi);
    }

    #[test]
    fn accel_and_speed_are_clamped() {
        let p = KinematicsParams::default();
        let s = integrate_step(&car(0.0, 0.0, 39.9), 100.0, 0.0, &p, &road());
        assert_eq!(s.v, 40.0);
        let s = integrate_step(&car(0.0, 0.0, 10.0), 100.0, 0.0, &p, &road());
        assert!((s.v - 10.5).abs() < 1e-12);
        let s = integrate_step(&car(0.0, 0.0, 0.2), -5.0, 0.0, &p, &road());
        assert_eq!(s.v, 0.0);
    }

    #[test]
    fn lane_tracks_lateral_position() {
        let p = KinematicsParams::default();
        let mut s = car(0.0, 0.0, 20.0);
        assert_eq!(s.lane, 1);
        s.y = 2.05;
        let s = integrate_step(&s, 0.0, 0.0, &p, &road());
        assert_eq!(s.lane, 2);
    }

    #[test]
    fn relative_state_examples() {
        let ego = car(100.0, 4.0, 25.0);
        let other = car(120.0, 4.0, 22.0);
        let r = relative_state(&ego, &other);
        assert_eq!((r.dx, r.dy, r.dv), (20.0, 0.0, -3.0));
        let z = relative_state(&ego, &ego);
        assert_eq!((z.dx, z.dy, z.dv), (0.0, 0.0, 0.0));
    }

    proptest! {
        #[test]
        fn slip_angle_is_odd(d in -std::f64::consts::FRAC_PI_6..std::f64::consts::FRAC_PI_6) {
            let a = slip_angle(d).unwrap();
            prop_assert_eq!(slip_angle(-d).unwrap(), -a);
            prop_assert!(a == 0.0 || a.signum() == d.signum());
        }

        #[test]
        fn speed_stays_in_bounds(
            v0 in 0.0f64..40.0,
            cmds in proptest::collection::vec((-20.0f64..20.0, -0.5f64..0.5), 1..200),
        ) {
            let p = KinematicsParams::default();
            let mut s = car(0.0, 4.0, v0);
            for (a, d) in cmds {
                s = integrate_step(&s, a, d, &p, &road());
                prop_assert!(s.v >= p.v_min && s.v <= p.v_max);
            }
        }

        #[test]
        fn relative_state_antisymmetric(
            ax in -1e3f64..1e3, ay in -2.0f64..10.0, av in 0.0f64..40.0,
            bx in -1e3f64..1e3, by in -2.0f64..10.0, bv in 0.0f64..40.0,
        ) {
            let a = car(ax, ay, av);
            let b = car(bx, by, bv);
            prop_assert_eq!(relative_state(&a, &b), -relative_state(&b, &a));
        }

        #[test]
        fn zero_input_keeps_lateral_state(v0 in 0.0f64..40.0, y0 in -1.0f64..9.0, n in 1usize..300) {
            let p = KinematicsParams::default();
            let mut s = car(0.0, y0, v0);
            for _ in 0..n {
                let next = integrate_step(&s, 0.0, 0.0, &p, &road());
                prop_assert_eq!(integrate_step(&s, 0.0, 0.0, &p, &road()), next);
                s = next;
            }
            prop_assert_eq!(s.y.to_bits(), y0.to_bits());
            prop_assert_eq!(s.phi.to_bits(), 0f64.to_bits());
            prop_assert_eq!(s.v.to_bits(), v0.to_bits());
        }
    }
}
