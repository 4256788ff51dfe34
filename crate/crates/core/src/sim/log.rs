use std::fmt::Write as _;

use crate::net::Micros;

/// Line-delimited `time_ms,actor,kind,digest` records.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    text: String,
    lines: usize,
    enabled: bool,
}

impl EventLog {
    pub fn new(enabled: bool) -> Self {
        EventLog { text: String::new(), lines: 0, enabled }
    }

    pub fn record(&mut self, time: Micros, actor: impl std::fmt::Display, kind: &str, digest: impl std::fmt::Display) {
        if !self.enabled {
            return;
        }
        let _ = writeln!(self.text, "{}.{:03},{actor},{kind},{digest}", time / 1000, time % 1000);
        self.lines += 1;
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn len(&self) -> usize {
        self.lines
    }

    pub fn is_empty(&self) -> bool {
        self.lines == 0
    }

    pub fn contains_kind(&self, kind: &str) -> bool {
        self.text.lines().any(|l| l.split(',').nth(2) == Some(kind))
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format() {
        let mut log = EventLog::new(true);
        log.record(12_345, "iot:3", "tx-send", "abc");
        assert_eq!(log.as_str(), "12.345,iot:3,tx-send,abc\n");
        assert!(log.contains_kind("tx-send"));
        let mut off = EventLog::new(false);
        off.record(1, "x", "y", "z");
        assert!(off.is_empty());
    }
}
