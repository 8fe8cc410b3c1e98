use serde::{Deserialize, Serialize};
use uwsn_core::optimizer::Stage;

use crate::api::ErrorBody;
use crate::session::Session;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    Optimize,
    Run,
    Experiment,
}

impl JobKind {
    pub(crate) const COUNT: usize = 3;

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

/// Messages on the `/events` stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    /// A deploy or environment change published `revision`.
    Revision { revision: u64 },
    /// One GA generation or PSO iteration finished.
    Progress {
        job_id: u64,
        stage: Stage,
        step: usize,
        best_cost: f64,
    },
    /// One experiment run finished; `completed` counts finished runs.
    RunProgress {
        job_id: u64,
        run: usize,
        completed: usize,
        total: usize,
    },
    /// A job published `revision`; `state` is the snapshot at that revision.
    Completed {
        job_id: u64,
        kind: JobKind,
        revision: u64,
        state: Box<Session>,
    },
    Failed {
        job_id: u64,
        kind: JobKind,
        error: ErrorBody,
    },
    /// The subscriber fell behind and missed events; re-read `/state`.
    Lagged { skipped: u64 },
}

impl Event {
    pub fn name(&self) -> &'static str {
        match self {
            Event::Revision { .. } => "revision",
            Event::Progress { .. } => "progress",
            Event::RunProgress { .. } => "run_progress",
            Event::Completed { .. } => "completed",
            Event::Failed { .. } => "failed",
            Event::Lagged { .. } => "lagged",
        }
    }
}
