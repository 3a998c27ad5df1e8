//! Pass-level cycle simulation of the PE core ring.
//!
//! Each core is a ring of `N_p` stages; a step entering stage 0 at cycle `c`
//! leaves the last stage at the end of cycle `c + N_p - 1` and is back at the
//! input selector on cycle `c + N_p`. There the selector re-admits it if its
//! task has steps left, otherwise the task's results go to the FIFO on that
//! cycle and the freed slot takes a fresh external input.
//!
//! The FIFO accepts one write per cycle over a single bus. When several cores
//! finish a task on the same cycle the bus is granted round-robin and the
//! losers freeze for that cycle, as does a core whose write finds the FIFO
//! full.

use std::collections::VecDeque;

use serde::Serialize;

use super::scheduler::{Phase, Scheduler, TaskState};
use super::{passes_per_task, PipelineConfig, PipelineError};

/// Counters after one simulated cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleSnapshot {
    pub cycle: u64,
    pub injected: u64,
    pub emitted: u64,
    pub in_flight: u64,
    pub fifo_occupancy: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub degree: usize,
    pub iterations: usize,
    pub variant: String,
    pub pipeline_depth: usize,
    pub core_count: usize,
    pub tasks: u64,
    /// Cycles from the first input to the last FIFO write, inclusive.
    pub total_cycles: u64,
    /// Steps each task needed, as counted by the scheduler.
    pub passes_per_task: u64,
    /// Average cycles per input: spacing of outputs one full ring apart near
    /// the end of the run, or `total_cycles / tasks` when the run never fills
    /// the ring.
    pub cycles_per_input: f64,
    /// `(K + 1) * N_p`.
    pub c_batch: u64,
    pub throughput_per_s: f64,
    pub fifo_max_occupancy: usize,
    pub stall_cycles: u64,
    pub extractions: u64,
}

impl SimReport {
    /// Machine-readable `key=value` lines.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        kv("degree", self.degree.to_string());
        kv("iterations", self.iterations.to_string());
        kv("variant", self.variant.clone());
        kv("pipeline_depth", self.pipeline_depth.to_string());
        kv("core_count", self.core_count.to_string());
        kv("tasks", self.tasks.to_string());
        kv("total_cycles", self.total_cycles.to_string());
        kv("K", self.passes_per_task.to_string());
        kv("C", format_number(self.cycles_per_input));
        kv("C_batch", self.c_batch.to_string());
        kv("throughput_per_s", format_number(self.throughput_per_s));
        kv("fifo_max_occupancy", self.fifo_max_occupancy.to_string());
        kv("stall_cycles", self.stall_cycles.to_string());
        out
    }

    pub fn to_table(&self) -> String {
        let rows = [
            ("degree n", self.degree.to_string()),
            ("iterations T", self.iterations.to_string()),
            ("variant", self.variant.clone()),
            ("pipeline depth N_p", self.pipeline_depth.to_string()),
            ("cores", self.core_count.to_string()),
            ("tasks", self.tasks.to_string()),
            ("passes per task K", self.passes_per_task.to_string()),
            ("total cycles", self.total_cycles.to_string()),
            ("cycles per input C", format_number(self.cycles_per_input)),
            ("batch cycles (K+1)N_p", self.c_batch.to_string()),
            ("throughput /s", format!("{:.4e}", self.throughput_per_s)),
            ("FIFO max occupancy", self.fifo_max_occupancy.to_string()),
            ("stall cycles", self.stall_cycles.to_string()),
        ];
        let w = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        rows.iter().map(|(k, v)| format!("{k:<w$}  {v}\n")).collect()
    }
}

/// Integers print without a fractional part.
pub(crate) fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

struct Core {
    ring: Vec<Option<TaskState>>,
    steps_done: Vec<u64>,
}

pub fn simulate(cfg: &PipelineConfig, tasks: u64) -> Result<SimReport, PipelineError> {
    simulate_observed(cfg, tasks, |_| {})
}

/// Runs the simulation, calling `observer` after every cycle.
pub fn simulate_observed<O: FnMut(&CycleSnapshot)>(
    cfg: &PipelineConfig,
    tasks: u64,
    mut observer: O,
) -> Result<SimReport, PipelineError> {
    cfg.validate()?;
    if tasks == 0 {
        return Err(PipelineError::InvalidConfig("task count must be >= 1".into()));
    }
    let scheduler = Scheduler::new(cfg.degree, cfg.iterations, cfg.variant)
        .map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
    let np = cfg.pipeline_depth;
    let mut cores: Vec<Core> =
        (0..cfg.core_count).map(|_| Core { ring: vec![None; np], steps_done: vec![0; np] }).collect();
    // per-core ring position, advanced only on cycles the core is not frozen
    let mut position = vec![0usize; cfg.core_count];

    let mut next_task = 0u64;
    let mut emitted = 0u64;
    let mut fifo = 0usize;
    let mut fifo_max = 0usize;
    let mut stalls = 0u64;
    let mut extractions = 0u64;
    let ring = np * cfg.core_count;
    // the last `ring + 1` FIFO write cycles
    let mut done_cycles: VecDeque<u64> = VecDeque::with_capacity(ring + 1);
    let mut observed_steps: Option<u64> = None;
    let mut grant = 0usize;
    let mut cycle = 0u64;

    loop {
        fifo -= fifo.min(cfg.fifo_drain_per_cycle);

        // transitions of the steps arriving back at each selector
        let mut arriving = Vec::with_capacity(cfg.core_count);
        for (core, &pos) in cores.iter().zip(&position) {
            let t = match &core.ring[pos] {
                Some(state) => Some(scheduler.next(state).map_err(|e| PipelineError::Internal(e.to_string()))?),
                None => None,
            };
            arriving.push(t);
        }
        let wants_write = |k: usize| matches!(arriving[k], Some(t) if t.state.phase == Phase::Done);
        let winner = (0..cfg.core_count)
            .map(|k| (grant + k) % cfg.core_count)
            .find(|&k| wants_write(k) && fifo < cfg.fifo_depth);

        for k in 0..cfg.core_count {
            let pos = position[k];
            let core = &mut cores[k];
            match arriving[k] {
                Some(t) if t.state.phase == Phase::Done => {
                    if Some(k) != winner {
                        stalls += 1;
                        continue;
                    }
                    extractions += t.extraction.count() as u64;
                    fifo += 1;
                    fifo_max = fifo_max.max(fifo);
                    emitted += 1;
                    if done_cycles.len() == ring + 1 {
                        done_cycles.pop_front();
                    }
                    done_cycles.push_back(cycle);
                    let steps = core.steps_done[pos];
                    match observed_steps {
                        None => observed_steps = Some(steps),
                        Some(prev) if prev != steps => {
                            return Err(PipelineError::Internal(format!(
                                "task took {steps} steps, an earlier one took {prev}"
                            )))
                        }
                        _ => {}
                    }
                    core.ring[pos] = None;
                }
                // recirculation has priority over fresh input
                Some(t) => {
                    extractions += t.extraction.count() as u64;
                    core.ring[pos] = Some(t.state);
                    core.steps_done[pos] += 1;
                }
                None => {}
            }
            if core.ring[pos].is_none() && next_task < tasks {
                core.ring[pos] = Some(scheduler.initial(next_task));
                core.steps_done[pos] = 1;
                next_task += 1;
            }
            position[k] = (pos + 1) % np;
        }
        if let Some(w) = winner {
            grant = (w + 1) % cfg.core_count;
        }

        let in_flight = next_task - emitted;
        observer(&CycleSnapshot { cycle, injected: next_task, emitted, in_flight, fifo_occupancy: fifo });
        cycle += 1;
        if emitted == tasks {
            break;
        }
    }

    let total_cycles = cycle;
    let k = observed_steps.unwrap_or(0);
    let expected = passes_per_task(cfg.degree, cfg.iterations, cfg.variant);
    if k != expected {
        return Err(PipelineError::Internal(format!("simulated {k} steps per task, closed form gives {expected}")));
    }
    let cycles_per_input = if tasks > ring as u64 {
        (done_cycles[ring] - done_cycles[0]) as f64 / ring as f64
    } else {
        total_cycles as f64 / tasks as f64
    };
    Ok(SimReport {
        degree: cfg.degree,
        iterations: cfg.iterations,
        variant: cfg.variant.to_string(),
        pipeline_depth: np,
        core_count: cfg.core_count,
        tasks,
        total_cycles,
        passes_per_task: k,
        cycles_per_input,
        c_batch: (k + 1) * np as u64,
        throughput_per_s: cfg.clock_hz / cycles_per_input,
        fifo_max_occupancy: fifo_max,
        stall_cycles: stalls,
        extractions,
    })
}
