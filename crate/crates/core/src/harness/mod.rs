//! Experiment runner: sweeps, allocation optimization, Monte-Carlo jobs and
//! data emission.
//!
//! Every runner takes a [`SweepConfig`] and is deterministic in it. Sweep
//! points fan out over `jobs` threads and are gathered back in axis order.

pub mod config;
pub mod mle_job;
pub mod point;
pub mod sweeps;
pub mod table;

pub use config::{Axis, Experiment, FSq, MleCase, MleCaseKind, SweepConfig};
pub use mle_job::{coherent_heterodyne_model, emit_mle, mle_verify_job, quantum_homodyne_model, MleCaseReport};
pub use point::{configured_probe, fim_job, qfim_job, ConfiguredProbe, FimReport, QfimReport};
pub use sweeps::{
    departure_point, detuning_sweep, evaluate_probe, find_crossing, kappa_sweep, loglog_slope, optimize_split,
    photon_sweep, Optimum, PointResult,
};
pub use table::{emit, read_table, Metadata, SweepRow, SweepTable};

/// Applies `f` to every item on up to `jobs` threads; results keep the
/// input order.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(jobs);
    std::thread::scope(|scope| {
        let f = &f;
        let handles: Vec<_> =
            items.chunks(chunk).map(|c| scope.spawn(move || c.iter().map(f).collect::<Vec<R>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker thread panicked")).collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<u32> = (0..37).collect();
        assert_eq!(parallel_map(&items, 4, |x| x * 2), items.iter().map(|x| x * 2).collect::<Vec<_>>());
        assert!(parallel_map(&Vec::<u32>::new(), 3, |x| *x).is_empty());
    }
}
