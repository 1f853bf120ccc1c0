//! Per-destination aggregation buffers with fixed or adaptive age limits.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::net::Payload;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AggPolicy {
    /// Every item is sent on its own.
    None,
    /// Fixed age limit.
    Fab,
    /// Age limit follows the observed arrival rate.
    Vab,
}

impl FromStr for AggPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(AggPolicy::None),
            "fab" => Ok(AggPolicy::Fab),
            "vab" => Ok(AggPolicy::Vab),
            _ => Err(format!("unknown aggregation policy `{s}`")),
        }
    }
}

impl fmt::Display for AggPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AggPolicy::None => "none",
            AggPolicy::Fab => "fab",
            AggPolicy::Vab => "vab",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlushDecision {
    Hold,
    Flush,
}

#[derive(Debug)]
pub struct AggregationBuffer {
    pub pending: Vec<Payload>,
    pub age: u32,
    pub max_age: u32,
    age_cap: u32,
    policy: AggPolicy,
    window: usize,
    rates: VecDeque<f64>,
    pub rate_estimate: f64,
}

impl AggregationBuffer {
    pub fn new(policy: AggPolicy, max_age: u32, age_cap: u32, window: usize) -> Self {
        let max_age = max_age.clamp(1, age_cap.max(1));
        AggregationBuffer {
            pending: Vec::new(),
            age: 0,
            max_age,
            age_cap: age_cap.max(max_age),
            policy,
            window: window.max(1),
            rates: VecDeque::new(),
            rate_estimate: 0.0,
        }
    }

    pub fn push(&mut self, p: Payload) -> FlushDecision {
        self.pending.push(p);
        if self.policy == AggPolicy::None {
            FlushDecision::Flush
        } else {
            FlushDecision::Hold
        }
    }

    /// Called once per processed message.
    pub fn tick(&mut self) -> FlushDecision {
        if self.pending.is_empty() {
            return FlushDecision::Hold;
        }
        self.age += 1;
        if self.age >= self.max_age {
            FlushDecision::Flush
        } else {
            FlushDecision::Hold
        }
    }

    /// Empties the buffer. `aged_out` distinguishes age-triggered flushes,
    /// the only ones that feed the rate estimate.
    pub fn take(&mut self, aged_out: bool) -> Vec<Payload> {
        if aged_out && self.policy == AggPolicy::Vab && self.age > 0 {
            self.adapt(self.pending.len() as f64 / f64::from(self.age));
        }
        self.age = 0;
        std::mem::take(&mut self.pending)
    }

    fn adapt(&mut self, rate: f64) {
        if !self.rates.is_empty() {
            if rate > self.rate_estimate {
                self.max_age = (self.max_age + 1).min(self.age_cap);
            } else if rate < self.rate_estimate && self.max_age > 1 {
                self.max_age -= 1;
            }
        }
        self.rates.push_back(rate);
        if self.rates.len() > self.window {
            self.rates.pop_front();
        }
        self.rate_estimate = self.rates.iter().sum::<f64>() / self.rates.len() as f64;
    }
}
