use std::time::Instant;

use serde::{Deserialize, Serialize};

/// Source of elapsed-time measurements.
///
/// `Frozen` reports zero for every interval so that runs are reproducible
/// byte for byte; `Wall` measures real time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clock {
    #[default]
    Wall,
    Frozen,
}

#[derive(Clone, Copy, Debug)]
pub struct Timer {
    start: Option<Instant>,
}

impl Clock {
    pub fn start(self) -> Timer {
        Timer {
            start: match self {
                Clock::Wall => Some(Instant::now()),
                Clock::Frozen => None,
            },
        }
    }
}

impl Timer {
    pub fn elapsed_s(&self) -> f64 {
        self.start.map_or(0.0, |s| s.elapsed().as_secs_f64())
    }
}
