//! Per-task progress state machine: which pass a task runs next, and when
//! eigenvalues are extracted.
//!
//! A task at level `m` runs `2m - 2` passes per iteration. Pass 1 applies the
//! subtracted shift and left step 1, passes `2..=m-1` continue the left
//! sweep, passes `m..=2m-3` run the right sweep and pass `2m - 2` runs the last
//! right step plus the shift restore. In the narrow variant every pass is
//! split into micro-steps of two matrix positions: left step `i` touches
//! `m - i + 1` column pairs, right step `i` touches `i + 1` row pairs.

use std::fmt;

use thiserror::Error;

use super::Variant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    SubtractShift,
    LeftSweep,
    RightSweep,
    AddShift,
    Done,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::SubtractShift => "subtract-shift",
            Phase::LeftSweep => "left-sweep",
            Phase::RightSweep => "right-sweep",
            Phase::AddShift => "add-shift",
            Phase::Done => "done",
        })
    }
}

/// Eigenvalue writes triggered by a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extraction {
    None,
    /// `eig[m-1]` of the level just finished.
    One {
        index: usize,
    },
    /// `eig[1]` and then `eig[0]` when the last level finishes.
    Two,
}

impl Extraction {
    pub fn count(self) -> usize {
        match self {
            Extraction::None => 0,
            Extraction::One { .. } => 1,
            Extraction::Two => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchedulerError {
    #[error("illegal task state: {0}")]
    IllegalState(String),
}

/// Progress of one task; `pass` and `micro` name the step about to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TaskState {
    pub task_id: u64,
    pub level: usize,
    pub iteration: usize,
    pub pass: usize,
    /// Micro-step within the pass, 1-based; always 1 for the wide variant.
    pub micro: usize,
    pub phase: Phase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub state: TaskState,
    pub extraction: Extraction,
}

/// Phase of pass `p` at level `m`.
pub fn phase_of(m: usize, p: usize) -> Phase {
    if p == 1 {
        Phase::SubtractShift
    } else if p < m {
        Phase::LeftSweep
    } else if p < 2 * m - 2 {
        Phase::RightSweep
    } else {
        Phase::AddShift
    }
}

/// Micro-steps making up pass `p` at level `m`.
pub fn micro_steps(variant: Variant, m: usize, p: usize) -> usize {
    match variant {
        Variant::Wide => 1,
        Variant::Narrow if p < m => m - p + 1,
        Variant::Narrow => p - (m - 1) + 1,
    }
}

/// Transition rules for a fixed degree, iteration count and variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scheduler {
    pub degree: usize,
    pub iterations: usize,
    pub variant: Variant,
}

impl Scheduler {
    pub fn new(degree: usize, iterations: usize, variant: Variant) -> Result<Self, SchedulerError> {
        if degree < 2 || iterations < 1 {
            return Err(SchedulerError::IllegalState(format!(
                "need degree >= 2 and iterations >= 1, got n={degree}, T={iterations}"
            )));
        }
        Ok(Self { degree, iterations, variant })
    }

    pub fn initial(&self, task_id: u64) -> TaskState {
        TaskState { task_id, level: self.degree, iteration: 1, pass: 1, micro: 1, phase: Phase::SubtractShift }
    }

    pub fn validate(&self, s: &TaskState) -> Result<(), SchedulerError> {
        let illegal = |what: String| Err(SchedulerError::IllegalState(what));
        let m = s.level;
        if s.phase == Phase::Done {
            return illegal("task already done".into());
        }
        if m < 2 || m > self.degree {
            return illegal(format!("level {m} outside 2..={}", self.degree));
        }
        if s.iteration < 1 || s.iteration > self.iterations {
            return illegal(format!("iteration {} outside 1..={}", s.iteration, self.iterations));
        }
        if s.pass < 1 || s.pass > 2 * m - 2 {
            return illegal(format!("pass {} outside 1..={} at level {m}", s.pass, 2 * m - 2));
        }
        let micro_max = micro_steps(self.variant, m, s.pass);
        if s.micro < 1 || s.micro > micro_max {
            return illegal(format!("micro-step {} outside 1..={micro_max}", s.micro));
        }
        let expected = phase_of(m, s.pass);
        if s.phase != expected {
            return illegal(format!("phase {} inconsistent with pass {} (expected {expected})", s.phase, s.pass));
        }
        Ok(())
    }

    /// The state after the step `s` completes.
    pub fn next(&self, s: &TaskState) -> Result<Transition, SchedulerError> {
        self.validate(s)?;
        let mut n = *s;
        let m = s.level;
        let mut extraction = Extraction::None;
        if s.micro < micro_steps(self.variant, m, s.pass) {
            n.micro += 1;
        } else if s.pass < 2 * m - 2 {
            n.pass += 1;
            n.micro = 1;
        } else if s.iteration < self.iterations {
            n.iteration += 1;
            n.pass = 1;
            n.micro = 1;
        } else if m > 2 {
            extraction = Extraction::One { index: m - 1 };
            n.level -= 1;
            n.iteration = 1;
            n.pass = 1;
            n.micro = 1;
        } else {
            extraction = Extraction::Two;
            n.phase = Phase::Done;
            return Ok(Transition { state: n, extraction });
        }
        n.phase = phase_of(n.level, n.pass);
        Ok(Transition { state: n, extraction })
    }

    /// Steps from `s` to done, counting one per transition.
    pub fn steps_to_done(&self, s: &TaskState) -> Result<u64, SchedulerError> {
        let mut cur = *s;
        let mut steps = 0;
        while cur.phase != Phase::Done {
            cur = self.next(&cur)?.state;
            steps += 1;
        }
        Ok(steps)
    }
}
