use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::NodeRef;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QueueConfig {
    /// Packets a relay can hold.
    pub capacity: usize,
    /// Packets a relay forwards at the end of each transmission round.
    pub service_per_round: usize,
    /// Waiting time charged per packet ahead in the queue, seconds.
    pub service_time_s: f64,
}

impl Default for QueueConfig {
    fn default() -> Self {
        Self {
            capacity: 100,
            service_per_round: 100,
            service_time_s: 0.0,
        }
    }
}

impl QueueConfig {
    pub fn validate(&self) -> Result<()> {
        if self.capacity == 0 {
            return Err(Error::config("queue.capacity", "must be >= 1"));
        }
        if !(self.service_time_s >= 0.0 && self.service_time_s.is_finite()) {
            return Err(Error::config("queue.service_time_s", "must be >= 0"));
        }
        Ok(())
    }
}

/// Bounded FIFO at a leader or AUV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelayQueue {
    pub owner: NodeRef,
    pub capacity: usize,
    pub occupancy: usize,
    /// Occupancy at the end of each round, before service.
    pub occupancy_trace: Vec<usize>,
    pub arrivals: u64,
    pub drops: u64,
}

/// Result of offering a packet to a queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Admission {
    /// Accepted behind `ahead` packets.
    Queued { ahead: usize },
    Dropped,
}

impl RelayQueue {
    pub fn new(owner: NodeRef, capacity: usize) -> Self {
        Self {
            owner,
            capacity,
            occupancy: 0,
            occupancy_trace: Vec::new(),
            arrivals: 0,
            drops: 0,
        }
    }

    pub fn offer(&mut self) -> Admission {
        self.arrivals += 1;
        if self.occupancy >= self.capacity {
            self.drops += 1;
            Admission::Dropped
        } else {
            let ahead = self.occupancy;
            self.occupancy += 1;
            Admission::Queued { ahead }
        }
    }

    /// Closes a round: records occupancy, then forwards up to `service` packets.
    pub fn end_round(&mut self, service: usize) {
        self.occupancy_trace.push(self.occupancy);
        self.occupancy -= self.occupancy.min(service);
    }

    pub fn peak_occupancy(&self) -> usize {
        self.occupancy_trace.iter().copied().max().unwrap_or(self.occupancy)
    }
}
