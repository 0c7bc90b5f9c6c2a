//! Ordered record of pipeline stages and test-label access.
//!
//! Test labels are moved into [`SealedLabels`] as soon as the splits exist;
//! everything upstream of the final evaluation sees the test corpus without
//! labels. Each [`SealedLabels::reveal`] call is logged, so a run can be
//! checked after the fact for label reads before evaluation.

use std::sync::Mutex;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEvent {
    pub seq: usize,
    pub stage: String,
    pub event: String,
}

pub const STAGE_STARTED: &str = "started";
pub const TEST_LABELS_READ: &str = "test-labels-read";

#[derive(Debug, Default)]
pub struct AuditLog {
    events: Mutex<Vec<AuditEvent>>,
}

impl AuditLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, stage: &str, event: &str) {
        let mut events = self.events.lock().expect("audit log poisoned");
        let seq = events.len();
        events.push(AuditEvent {
            seq,
            stage: stage.to_string(),
            event: event.to_string(),
        });
    }

    pub fn enter(&self, stage: &str) {
        self.record(stage, STAGE_STARTED);
    }

    pub fn events(&self) -> Vec<AuditEvent> {
        self.events.lock().expect("audit log poisoned").clone()
    }
}

/// Test-split labels, readable only through a logged [`reveal`](Self::reveal).
#[derive(Debug)]
pub struct SealedLabels {
    labels: Vec<usize>,
}

impl SealedLabels {
    pub fn seal(labels: Vec<usize>) -> Self {
        Self { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn reveal(&self, log: &AuditLog, stage: &str) -> &[usize] {
        log.record(stage, TEST_LABELS_READ);
        &self.labels
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reveal_is_logged_in_order() {
        let log = AuditLog::new();
        let sealed = SealedLabels::seal(vec![1, 2, 3]);
        log.enter("train");
        assert_eq!(sealed.reveal(&log, "evaluate"), &[1, 2, 3]);
        let events = log.events();
        assert_eq!(events.len(), 2);
        assert_eq!(events[1].stage, "evaluate");
        assert_eq!(events[1].event, TEST_LABELS_READ);
        assert_eq!(events[1].seq, 1);
    }
}
