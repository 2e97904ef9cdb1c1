use rayon::prelude::*;
use sldg_core::lab::SampleExecutor;
use sldg_core::Result;

/// Runs samples on the rayon pool. Results are collected by sample index, so
/// every reduction downstream sees the same order as the sequential executor.
#[derive(Debug, Clone, Copy, Default)]
pub struct RayonExecutor;

impl SampleExecutor for RayonExecutor {
    fn run<T, F>(&self, count: usize, task: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        let results: Vec<Result<T>> = (0..count).into_par_iter().map(&task).collect();
        results
            .into_iter()
            .enumerate()
            .map(|(i, r)| r.map_err(|e| e.at_sample(i)))
            .collect()
    }
}
