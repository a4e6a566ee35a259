//! Work budgets for exhaustive enumerations.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};

/// Environment variable holding a global wall-clock budget in milliseconds.
pub const BUDGET_ENV: &str = "EFBOUND_BUDGET_MS";

/// Node/step limit plus an optional wall-clock deadline.
///
/// A budget is consumed by one operation at a time; clone it to hand the
/// same limits to an independent operation.
#[derive(Debug)]
pub struct Budget {
    max_steps: u64,
    steps: AtomicU64,
    deadline: Option<Instant>,
}

impl Clone for Budget {
    fn clone(&self) -> Self {
        Budget {
            max_steps: self.max_steps,
            steps: AtomicU64::new(self.used()),
            deadline: self.deadline,
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::steps(50_000_000)
    }
}

impl Budget {
    pub fn steps(max_steps: u64) -> Self {
        Budget {
            max_steps,
            steps: AtomicU64::new(0),
            deadline: None,
        }
    }

    pub fn unlimited() -> Self {
        Budget::steps(u64::MAX)
    }

    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.deadline = Some(Instant::now() + limit);
        self
    }

    /// Applies `EFBOUND_BUDGET_MS` when set to a valid integer.
    pub fn with_env_deadline(self) -> Self {
        match std::env::var(BUDGET_ENV).ok().and_then(|v| v.trim().parse::<u64>().ok()) {
            Some(ms) => self.with_time_limit(Duration::from_millis(ms)),
            None => self,
        }
    }

    pub fn used(&self) -> u64 {
        self.steps.load(Ordering::Relaxed)
    }

    /// Charges `n` steps; fails once the step limit or deadline is passed.
    pub fn charge(&self, n: u64, what: &str) -> Result<()> {
        let used = self.steps.fetch_add(n, Ordering::Relaxed).saturating_add(n);
        if used > self.max_steps {
            return Err(Error::budget(format!(
                "{what}: step limit {} exceeded",
                self.max_steps
            )));
        }
        if let Some(deadline) = self.deadline {
            if Instant::now() > deadline {
                return Err(Error::budget(format!("{what}: time budget exhausted")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_limit_trips() {
        let b = Budget::steps(10);
        assert!(b.charge(10, "x").is_ok());
        let err = b.charge(1, "x").unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn zero_time_limit_trips() {
        let b = Budget::unlimited().with_time_limit(Duration::from_millis(0));
        std::thread::sleep(Duration::from_millis(2));
        assert!(b.charge(1, "x").is_err());
    }
}
