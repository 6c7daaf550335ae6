use serde::{Deserialize, Serialize};
use thiserror::Error;

use patrol_core::pilot::AlarmCause;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AlarmStatus {
    Quiet,
    Active,
    Acknowledged,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlarmError {
    #[error("no active alarm to acknowledge")]
    NotActive,
}

/// Further signals received while an alarm is already active.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatSignal {
    pub cause: AlarmCause,
    pub t_sim: f64,
    pub session: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlarmState {
    pub status: AlarmStatus,
    pub cause: Option<AlarmCause>,
    /// Sim time of the triggering detection.
    pub raised_at: Option<f64>,
    /// Unix ms when the center raised it.
    pub raised_wall: Option<u64>,
    pub session: Option<String>,
    pub lockdown_issued: bool,
    pub repeats: Vec<RepeatSignal>,
    pub acknowledged_by: Option<String>,
}

impl Default for AlarmState {
    fn default() -> Self {
        Self {
            status: AlarmStatus::Quiet,
            cause: None,
            raised_at: None,
            raised_wall: None,
            session: None,
            lockdown_issued: false,
            repeats: Vec::new(),
            acknowledged_by: None,
        }
    }
}

impl AlarmState {
    /// Returns true when this signal starts a new incident; the caller then
    /// issues the lockdown. A signal during an active incident is recorded
    /// as a repeat.
    pub fn raise(&mut self, cause: AlarmCause, t_sim: f64, session: &str, now: u64) -> bool {
        if self.status == AlarmStatus::Active {
            self.repeats.push(RepeatSignal {
                cause,
                t_sim,
                session: session.to_owned(),
            });
            return false;
        }
        *self = Self {
            status: AlarmStatus::Active,
            cause: Some(cause),
            raised_at: Some(t_sim),
            raised_wall: Some(now),
            session: Some(session.to_owned()),
            lockdown_issued: true,
            repeats: Vec::new(),
            acknowledged_by: None,
        };
        true
    }

    pub fn acknowledge(&mut self, operator: &str) -> Result<(), AlarmError> {
        if self.status != AlarmStatus::Active {
            return Err(AlarmError::NotActive);
        }
        self.status = AlarmStatus::Acknowledged;
        self.acknowledged_by = Some(operator.to_owned());
        Ok(())
    }
}
