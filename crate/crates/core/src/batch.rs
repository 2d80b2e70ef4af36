//! Data-parallel batch work done outside the timed windows.
//!
//! With the `parallel` feature (default) batches run on the rayon pool;
//! without it they run sequentially. Results are identical either way since
//! every item depends only on its own ordinal.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::workload::{
    frame_for, size_for, verify_frame, DistributionError, FileSizeDistribution, FramedFile,
    Verification,
};

/// Frames for a contiguous run of file ordinals.
pub fn build_frames(
    dist: &FileSizeDistribution,
    ordinals: Range<u64>,
) -> Result<Vec<FramedFile>, DistributionError> {
    #[cfg(feature = "parallel")]
    {
        ordinals.into_par_iter().map(|o| frame_for(dist, o)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        ordinals.map(|o| frame_for(dist, o)).collect()
    }
}

/// Sizes the first `count` files of a run would have.
pub fn sample_sizes(dist: &FileSizeDistribution, count: u64) -> Result<Vec<u64>, DistributionError> {
    #[cfg(feature = "parallel")]
    {
        (0..count).into_par_iter().map(|o| size_for(dist, o)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(|o| size_for(dist, o)).collect()
    }
}

pub fn verify_all<T: AsRef<[u8]> + Sync>(contents: &[T]) -> Vec<Verification> {
    #[cfg(feature = "parallel")]
    {
        contents.par_iter().map(|c| verify_frame(c.as_ref())).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        contents.iter().map(|c| verify_frame(c.as_ref())).collect()
    }
}

/// Mean and population standard deviation.
pub fn mean_sd(values: &[u64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
    let var = values
        .iter()
        .map(|&v| {
            let d = v as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    (mean, var.sqrt())
}
