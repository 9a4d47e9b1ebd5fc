/// Exponentially decaying exploration rate, indexed by environment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub eps_start: f64,
    pub eps_end: f64,
    /// Decay time constant in environment steps.
    pub tau: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            eps_start: 1.0,
            eps_end: 0.05,
            tau: 6000.0,
        }
    }
}

impl EpsilonSchedule {
    pub fn is_valid(&self) -> bool {
        self.eps_start <= 1.0 && self.eps_start >= self.eps_end && self.eps_end > 0.0 && self.tau > 0.0
    }

    pub fn epsilon_at(&self, step: u64) -> f64 {
        self.eps_end + (self.eps_start - self.eps_end) * (-(step as f64) / self.tau).exp()
    }
}
