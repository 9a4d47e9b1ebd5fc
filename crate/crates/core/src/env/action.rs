use std::fmt;

use thiserror::Error;

/// Discrete ego control. The integer codes are stable; checkpoints and CSVs rely on them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    LeftLane = 0,
    Maintain = 1,
    RightLane = 2,
    Accelerate = 3,
    Decelerate = 4,
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("invalid action code {0}, expected 0..=4")]
pub struct InvalidAction(pub usize);

impl Action {
    pub const COUNT: usize = 5;
    pub const ALL: [Action; Action::COUNT] = [
        Action::LeftLane,
        Action::Maintain,
        Action::RightLane,
        Action::Accelerate,
        Action::Decelerate,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Result<Self, InvalidAction> {
        Self::ALL.get(code).copied().ok_or(InvalidAction(code))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Action::LeftLane => "LEFT_LANE",
            Action::Maintain => "MAINTAIN",
            Action::RightLane => "RIGHT_LANE",
            Action::Accelerate => "ACCELERATE",
            Action::Decelerate => "DECELERATE",
        };
        f.write_str(name)
    }
}
