//! Cost model of a pipelined QR core: pass counts, a cycle simulator and the
//! throughput and energy-efficiency arithmetic built on them.

pub mod scheduler;
pub mod sim;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use scheduler::{Extraction, Phase, Scheduler, SchedulerError, TaskState, Transition};
pub use sim::{simulate, simulate_observed, CycleSnapshot, SimReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
    #[error("simulator invariant violated: {0}")]
    Internal(String),
}

/// Width of the matrix-multiply stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `2n` complex mul-add units: a full row or column pair per pass.
    #[default]
    Wide,
    /// 2 units: one position pair per pass.
    Narrow,
}

impl FromStr for Variant {
    type Err = PipelineError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "wide" => Ok(Variant::Wide),
            "narrow" => Ok(Variant::Narrow),
            _ => Err(PipelineError::InvalidConfig(format!("unknown variant '{s}' (wide, narrow)"))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Wide => "wide",
            Variant::Narrow => "narrow",
        })
    }
}

pub const DEFAULT_PIPELINE_DEPTH: usize = 16;
pub const DEFAULT_CLOCK_HZ: f64 = 100e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub degree: usize,
    pub iterations: usize,
    pub pipeline_depth: usize,
    pub clock_hz: f64,
    pub variant: Variant,
    pub fifo_depth: usize,
    pub fifo_drain_per_cycle: usize,
    pub core_count: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            degree: 6,
            iterations: 10,
            pipeline_depth: DEFAULT_PIPELINE_DEPTH,
            clock_hz: DEFAULT_CLOCK_HZ,
            variant: Variant::Wide,
            fifo_depth: 16,
            fifo_drain_per_cycle: 1,
            core_count: 1,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::InvalidConfig(msg));
        if self.degree < 2 {
            return bad(format!("degree must be >= 2, got {}", self.degree));
        }
        if self.iterations < 1 {
            return bad("iterations must be >= 1".into());
        }
        if self.pipeline_depth < 1 {
            return bad("pipeline depth must be >= 1".into());
        }
        if !(self.clock_hz > 0.0 && self.clock_hz.is_finite()) {
            return bad(format!("clock must be a positive frequency, got {}", self.clock_hz));
        }
        if self.fifo_depth < 1 || self.fifo_drain_per_cycle < 1 {
            return bad("FIFO depth and drain rate must be >= 1".into());
        }
        if self.core_count < 1 {
            return bad("core count must be >= 1".into());
        }
        Ok(())
    }
}

/// Pipeline transits one task needs, summed level by level.
///
/// # Panics
/// If `n < 2` or `t < 1`.
pub fn passes_per_task(n: usize, t: usize, variant: Variant) -> u64 {
    assert!(n >= 2 && t >= 1, "passes_per_task needs n >= 2 and T >= 1");
    let per_level = |m: u64| match variant {
        Variant::Wide => 2 * m - 2,
        Variant::Narrow => 2 * (2..=m).sum::<u64>(),
    };
    let k = t as u64 * (2..=n as u64).map(per_level).sum::<u64>();
    debug_assert_eq!(k, passes_closed_form(n, t, variant));
    k
}

/// `n(n-1)T` for the wide variant, `T n (n^2 + 3n - 4) / 3` for the narrow.
pub fn passes_closed_form(n: usize, t: usize, variant: Variant) -> u64 {
    let (n, t) = (n as u64, t as u64);
    match variant {
        Variant::Wide => n * (n - 1) * t,
        // n(n^2+3n-4) = n(n-1)(n+4) is divisible by 3
        Variant::Narrow => t * n * (n * n + 3 * n - 4) / 3,
    }
}

/// Steady-state polynomials per second: `clock * cores / K`.
pub fn throughput_model(cfg: &PipelineConfig) -> f64 {
    let k = passes_per_task(cfg.degree, cfg.iterations, cfg.variant);
    cfg.clock_hz * cfg.core_count as f64 / k as f64
}

/// `(throughput_b / throughput_a) / (power_b / power_a)`: the energy
/// efficiency of design `b` relative to design `a`.
pub fn efficiency_ratio(throughput_a: f64, throughput_b: f64, power_a: f64, power_b: f64) -> f64 {
    assert!(power_a > 0.0 && power_b > 0.0, "powers must be positive");
    (throughput_b / throughput_a) / (power_b / power_a)
}

/// Published figures of the hardware design and its CPU and GPU baselines,
/// used only as constants in ratio arithmetic.
pub mod reference {
    pub const CLOCK_HZ: f64 = 100e6;
    pub const DEGREE: usize = 6;
    pub const ITERATIONS: usize = 10;

    pub const FPGA_THROUGHPUT: f64 = 3.33e5;
    pub const FPGA_GFLOPS_AVERAGE: f64 = 13.93;
    pub const FPGA_GFLOPS_CEILING: f64 = 20.40;
    pub const FPGA_EFFICIENCY: f64 = 9.74;
    pub const CPU_THROUGHPUT: f64 = 1.22e5;
    pub const CPU_GFLOPS: f64 = 5.11;
    pub const CPU_EFFICIENCY: f64 = 0.15;
    pub const GPU_THROUGHPUT: f64 = 5.01e7;
    pub const GPU_GFLOPS: f64 = 2089.50;
    pub const GPU_EFFICIENCY: f64 = 29.85;

    pub const POWER_PE_CORE_W: f64 = 1.43;
    pub const POWER_TOTAL_W: f64 = 2.22;
    pub const POWER_NARROW_PE_CORE_W: f64 = 0.68;
    /// Narrow-core power as the rounded fraction of the wide core's.
    pub const NARROW_POWER_FRACTION: f64 = 0.48;
    pub const POWER_CPU_W: f64 = 34.6;
    pub const POWER_GPU_W: f64 = 70.0;

    /// FLOP per polynomial implied by the average GFLOP/s and throughput.
    pub fn implied_flops_per_poly() -> f64 {
        FPGA_GFLOPS_AVERAGE * 1e9 / FPGA_THROUGHPUT
    }
}

/// Wide vs narrow comparison at one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VariantComparison {
    pub cycles_wide: u64,
    pub cycles_narrow: u64,
    pub throughput_wide: f64,
    pub throughput_narrow: f64,
    /// `C / C'`.
    pub throughput_ratio: f64,
    /// Relative efficiency with the rounded power fraction.
    pub efficiency_ratio: f64,
    /// Relative efficiency with the raw wattages.
    pub efficiency_ratio_raw_watts: f64,
}

pub fn compare_variants(cfg: &PipelineConfig) -> VariantComparison {
    let cycles_wide = passes_per_task(cfg.degree, cfg.iterations, Variant::Wide);
    let cycles_narrow = passes_per_task(cfg.degree, cfg.iterations, Variant::Narrow);
    let throughput_ratio = cycles_wide as f64 / cycles_narrow as f64;
    VariantComparison {
        cycles_wide,
        cycles_narrow,
        throughput_wide: throughput_model(&PipelineConfig { variant: Variant::Wide, ..*cfg }),
        throughput_narrow: throughput_model(&PipelineConfig { variant: Variant::Narrow, ..*cfg }),
        throughput_ratio,
        efficiency_ratio: efficiency_ratio(1.0, throughput_ratio, 1.0, reference::NARROW_POWER_FRACTION),
        efficiency_ratio_raw_watts: efficiency_ratio(
            1.0,
            throughput_ratio,
            reference::POWER_PE_CORE_W,
            reference::POWER_NARROW_PE_CORE_W,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(n: usize, t: usize, np: usize, variant: Variant) -> PipelineConfig {
        PipelineConfig { degree: n, iterations: t, pipeline_depth: np, variant, ..Default::default() }
    }

    #[test]
    fn pass_count_examples() {
        assert_eq!(passes_per_task(6, 10, Variant::Wide), 300);
        assert_eq!(passes_per_task(6, 10, Variant::Narrow), 1000);
        assert_eq!(passes_per_task(2, 1, Variant::Wide), 2);
        assert_eq!(passes_per_task(2, 1, Variant::Narrow), 4);
    }

    #[test]
    fn pass_count_matches_eigensolver() {
        for n in 2..=8 {
            for t in 1..=12 {
                assert_eq!(passes_per_task(n, t, Variant::Wide), crate::eigensolver::pass_count(n, t));
            }
        }
    }

    #[test]
    fn throughput_examples() {
        let wide = cfg(6, 10, 16, Variant::Wide);
        assert!((throughput_model(&wide) - 1e8 / 300.0).abs() < 1e-6);
        let narrow = cfg(6, 10, 16, Variant::Narrow);
        assert_eq!(throughput_model(&narrow), 1e5);
        let slow = PipelineConfig { clock_hz: 300.0, ..wide };
        assert_eq!(throughput_model(&slow), 1.0);
    }

    #[test]
    fn efficiency_examples() {
        let cmp = compare_variants(&PipelineConfig::default());
        assert_eq!(cmp.throughput_ratio, 0.3);
        assert!((cmp.efficiency_ratio - 0.625).abs() < 1e-15);
        assert!((cmp.efficiency_ratio_raw_watts - 0.6309).abs() < 1e-4);
        assert_eq!(efficiency_ratio(5.0, 5.0, 2.0, 2.0), 1.0);
        let fpga_over_cpu = reference::FPGA_EFFICIENCY / reference::CPU_EFFICIENCY;
        assert!((fpga_over_cpu - 64.93).abs() < 0.01);
        assert_eq!(fpga_over_cpu.round(), 65.0);
    }

    #[test]
    fn config_validation() {
        assert!(PipelineConfig::default().validate().is_ok());
        assert!(cfg(1, 10, 4, Variant::Wide).validate().is_err());
        assert!(cfg(6, 0, 4, Variant::Wide).validate().is_err());
        assert!(cfg(6, 10, 0, Variant::Wide).validate().is_err());
        assert!(PipelineConfig { clock_hz: 0.0, ..Default::default() }.validate().is_err());
        assert!(PipelineConfig { fifo_drain_per_cycle: 0, ..Default::default() }.validate().is_err());
        assert!(simulate(&PipelineConfig::default(), 0).is_err());
    }

    #[test]
    fn single_batch_takes_k_plus_one_rings() {
        for np in [1, 4, 16, 64] {
            let r = simulate(&cfg(6, 10, np, Variant::Wide), np as u64).unwrap();
            assert_eq!(r.total_cycles, 301 * np as u64);
            assert_eq!(r.c_batch, r.total_cycles);
            assert_eq!(r.cycles_per_input, 301.0);
        }
    }

    #[test]
    fn single_task_latency() {
        // one occupant: K transits of N_p cycles plus the FIFO write
        let r = simulate(&cfg(6, 10, 8, Variant::Wide), 1).unwrap();
        assert_eq!(r.total_cycles, 300 * 8 + 1);
        let r = simulate(&cfg(6, 10, 1, Variant::Wide), 1).unwrap();
        assert_eq!(r.total_cycles, 301);
    }

    #[test]
    fn stream_reaches_k_cycles_per_input() {
        let r = simulate(&cfg(6, 10, 16, Variant::Wide), 16 * 20).unwrap();
        assert_eq!(r.cycles_per_input, 300.0);
        assert!((r.throughput_per_s - 1e8 / 300.0).abs() < 1e-6);
        let r = simulate(&cfg(6, 10, 16, Variant::Narrow), 16 * 5).unwrap();
        assert_eq!(r.cycles_per_input, 1000.0);
        let r = simulate(&cfg(2, 1, 3, Variant::Wide), 30).unwrap();
        assert_eq!(r.cycles_per_input, 2.0);
    }

    #[test]
    fn fifo_safety_single_core() {
        let r = simulate(&PipelineConfig { fifo_depth: 1, ..cfg(4, 3, 5, Variant::Wide) }, 100).unwrap();
        assert_eq!(r.stall_cycles, 0);
        assert!(r.fifo_max_occupancy <= 1);
        assert_eq!(r.extractions, 4 * 100);
    }

    #[test]
    fn shared_bus_contention_stalls() {
        // two cores finish on the same cycle; one write per cycle on the bus
        let two = PipelineConfig { core_count: 2, ..cfg(3, 1, 2, Variant::Wide) };
        let r = simulate(&two, 4).unwrap();
        assert!(r.stall_cycles > 0);
        let one = simulate(&cfg(3, 1, 2, Variant::Wide), 4).unwrap();
        assert!(r.total_cycles < one.total_cycles);
        // slow drain into a shallow FIFO backs up
        let slow = PipelineConfig { core_count: 4, fifo_depth: 1, ..cfg(2, 1, 1, Variant::Wide) };
        let r = simulate(&slow, 40).unwrap();
        assert!(r.stall_cycles > 0);
        assert!(r.fifo_max_occupancy <= 1);
    }

    #[test]
    fn multi_core_throughput_scales() {
        let four = PipelineConfig { core_count: 4, ..cfg(6, 10, 16, Variant::Wide) };
        assert!((throughput_model(&four) - 4e8 / 300.0).abs() < 1e-6);
        let r = simulate(&four, 4 * 16 * 6).unwrap();
        assert!(r.cycles_per_input <= 300.0 / 4.0 + 1.0, "{}", r.cycles_per_input);
    }

    #[test]
    fn report_formats() {
        let r = simulate(&cfg(6, 10, 4, Variant::Wide), 40).unwrap();
        let kv = r.to_kv();
        for key in
            ["total_cycles=", "K=300\n", "C=300\n", "throughput_per_s=", "fifo_max_occupancy=", "stall_cycles=0\n"]
        {
            assert!(kv.contains(key), "{key} missing from {kv}");
        }
        assert!(r.to_table().contains("passes per task K"));
    }

    proptest! {
        #[test]
        fn closed_forms_agree(n in 2usize..40, t in 1usize..50) {
            for v in [Variant::Wide, Variant::Narrow] {
                prop_assert_eq!(passes_per_task(n, t, v), passes_closed_form(n, t, v));
            }
        }

        #[test]
        fn simulation_agrees_with_formula_and_conserves(
            n in 2usize..=8, t in 1usize..=12, np in 1usize..=6, tasks in 1u64..20, narrow in any::<bool>(),
        ) {
            let variant = if narrow { Variant::Narrow } else { Variant::Wide };
            let c = cfg(n, t, np, variant);
            let mut ok = true;
            let r = simulate_observed(&c, tasks, |s| ok &= s.injected == s.emitted + s.in_flight).unwrap();
            prop_assert!(ok);
            let k = passes_per_task(n, t, variant);
            prop_assert_eq!(r.passes_per_task, k);
            prop_assert_eq!(r.stall_cycles, 0);
            prop_assert_eq!(r.extractions, n as u64 * tasks);
            let ceil = tasks.div_ceil(np as u64);
            prop_assert!(r.total_cycles <= (k + 1) * np as u64 * ceil);
            prop_assert!(k * tasks <= r.total_cycles);
        }
    }
}
