#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardMode {
    /// `-(v - v_ref_max)^2` when no collision.
    SquaredShortfall,
    /// `1 - ((v_ref_max - v) / (v_ref_max - v_ref_min))^2`, clipped to `[0, 1]`.
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardConfig {
    pub mode: RewardMode,
    pub collision_penalty: f64,
    pub v_ref_max: f64,
    pub v_ref_min: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            mode: RewardMode::Normalized,
            collision_penalty: -10.0,
            v_ref_max: 40.0,
            v_ref_min: 0.0,
        }
    }
}

impl RewardConfig {
    pub fn reward(&self, ego_speed: f64, collided: bool) -> f64 {
        if collided {
            return self.collision_penalty;
        }
        match self.mode {
            RewardMode::SquaredShortfall => -(ego_speed - self.v_ref_max).powi(2),
            RewardMode::Normalized => {
                let shortfall = (self.v_ref_max - ego_speed) / (self.v_ref_max - self.v_ref_min);
                (1.0 - shortfall * shortfall).clamp(0.0, 1.0)
            }
        }
    }

    /// Largest per-step reward attainable without collision.
    pub fn max_step_reward(&self) -> f64 {
        match self.mode {
            RewardMode::SquaredShortfall => 0.0,
            RewardMode::Normalized => 1.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reward_examples() {
        let n = RewardConfig::default();
        assert_eq!(n.reward(33.0, true), -10.0);
        assert_eq!(n.reward(40.0, false), 1.0);
        assert_eq!(n.reward(0.0, false), 0.0);
        assert_eq!(n.reward(25.0, false), 0.859375);
        let lit = RewardConfig {
            mode: RewardMode::SquaredShortfall,
            ..n
        };
        assert_eq!(lit.reward(40.0, false), 0.0);
        assert_eq!(lit.reward(30.0, false), -100.0);
        assert_eq!(lit.reward(30.0, true), -10.0);
    }

    #[test]
    fn normalized_is_clipped() {
        let n = RewardConfig {
            v_ref_min: 10.0,
            ..RewardConfig::default()
        };
        assert_eq!(n.reward(10.0, false), 0.0);
        assert_eq!(n.reward(2.0, false), 0.0);
        for v in 0..=40 {
            let r = n.reward(f64::from(v), false);
            assert!((0.0..=1.0).contains(&r));
        }
    }
}
