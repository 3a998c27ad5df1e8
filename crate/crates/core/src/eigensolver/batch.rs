use num_complex::Complex;
use rayon::prelude::*;

use super::{RootSet, SolveConfig, SolveError, Solver};
use crate::polynomial::Polynomial;
use crate::scalar::Real;

/// Fixed-degree batch solver backed by a dedicated worker pool.
///
/// Every polynomial is solved independently by a freshly reset [`Solver`],
/// so results are bit-identical for any worker count and always come back
/// in input order.
pub struct BatchSolver {
    cfg: SolveConfig,
    workers: usize,
    pool: Option<rayon::ThreadPool>,
}

impl BatchSolver {
    pub fn new(cfg: SolveConfig, workers: usize) -> Result<Self, SolveError> {
        cfg.validate()?;
        if workers == 0 {
            return Err(SolveError::InvalidConfig("worker count must be >= 1".into()));
        }
        let pool = if workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| SolveError::InvalidConfig(format!("cannot start worker pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(Self { cfg, workers, pool })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn config(&self) -> &SolveConfig {
        &self.cfg
    }

    /// Solves a chunk, writing `degree` roots per polynomial into a flat
    /// vector in input order.
    pub fn solve_flat<F: Real>(&self, polys: &[Polynomial<F>]) -> Result<Vec<Complex<F>>, SolveError> {
        let Some(first) = polys.first() else {
            return Ok(Vec::new());
        };
        let n = first.degree();
        check_degrees(polys, n)?;
        let mut out = vec![Complex::new(F::zero(), F::zero()); n * polys.len()];
        let cfg = self.cfg;
        match &self.pool {
            None => {
                let mut solver = Solver::new(n, cfg)?;
                for (p, dst) in polys.iter().zip(out.chunks_mut(n)) {
                    solver.solve_into(p, dst);
                }
            }
            Some(pool) => {
                pool.install(|| {
                    polys.par_iter().zip(out.par_chunks_mut(n)).for_each_init(
                        || Solver::new(n, cfg).expect("config validated"),
                        |solver, (p, dst)| solver.solve_into(p, dst),
                    );
                });
            }
        }
        Ok(out)
    }

    pub fn solve<F: Real>(&self, polys: &[Polynomial<F>]) -> Result<Vec<RootSet<F>>, SolveError> {
        let n = polys.first().map_or(0, Polynomial::degree);
        let flat = self.solve_flat(polys)?;
        Ok(flat.chunks(n.max(1)).map(|c| RootSet { roots: c.to_vec() }).collect())
    }

    /// Streams an iterator through the solver in chunks of `chunk` polynomials.
    /// `sink` sees each chunk with its flat roots, in input order; peak memory
    /// is bounded by the chunk size.
    pub fn solve_stream<F, I, S>(&self, polys: I, chunk: usize, mut sink: S) -> Result<u64, SolveError>
    where
        F: Real,
        I: IntoIterator<Item = Polynomial<F>>,
        S: FnMut(&[Polynomial<F>], &[Complex<F>]),
    {
        let chunk = chunk.max(1);
        let mut buf = Vec::with_capacity(chunk);
        let mut degree = None;
        let mut seen = 0u64;
        let mut flush = |buf: &mut Vec<Polynomial<F>>| -> Result<(), SolveError> {
            let roots = self.solve_flat(buf)?;
            sink(buf, &roots);
            buf.clear();
            Ok(())
        };
        for p in polys {
            let n = *degree.get_or_insert(p.degree());
            if p.degree() != n {
                return Err(SolveError::MixedDegreeBatch { expected: n, found: p.degree(), index: seen as usize });
            }
            buf.push(p);
            seen += 1;
            if buf.len() == chunk {
                flush(&mut buf)?;
            }
        }
        if !buf.is_empty() {
            flush(&mut buf)?;
        }
        Ok(seen)
    }
}

fn check_degrees<F: Real>(polys: &[Polynomial<F>], n: usize) -> Result<(), SolveError> {
    match polys.iter().position(|p| p.degree() != n) {
        Some(index) => Err(SolveError::MixedDegreeBatch { expected: n, found: polys[index].degree(), index }),
        None => Ok(()),
    }
}

/// Solves a same-degree batch with `workers` threads.
pub fn batch_solve<F: Real>(
    polys: &[Polynomial<F>],
    cfg: &SolveConfig,
    workers: usize,
) -> Result<Vec<RootSet<F>>, SolveError> {
    BatchSolver::new(*cfg, workers)?.solve(polys)
}
