//! Thread-parallel shooting scan. Marches at distinct K are independent;
//! results are collected in scan order, so the outcome is identical to the
//! sequential path regardless of thread count.

use coagscale_core::profile::LogGrid;
use coagscale_core::shooting::{
    bisect, bracket_from_scan, march, refine_outcome, scan_point, Classification, ShootControls,
    ShotOutcome,
};
use coagscale_core::{Complex64, ModelParams, Result};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Number of worker threads: COAGSCALE_THREADS if set, else the machine's
/// available parallelism.
pub fn thread_count() -> usize {
    if let Ok(s) = std::env::var("COAGSCALE_THREADS") {
        if let Ok(n) = s.trim().parse::<usize>() {
            return n.max(1);
        }
    }
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

pub fn scan_parallel(
    params: &ModelParams,
    grid: &LogGrid,
    points: usize,
    controls: &ShootControls,
    threads: usize,
) -> Result<Vec<(f64, Classification)>> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<(f64, Classification)>>>> =
        Mutex::new(vec![None; points]);
    std::thread::scope(|s| {
        for _ in 0..threads.min(points) {
            s.spawn(|| loop {
                let j = next.fetch_add(1, Ordering::Relaxed);
                if j >= points {
                    break;
                }
                let k = scan_point(params, j, points);
                let r = march(params, Complex64::new(k, 0.0), grid, &controls.march)
                    .map(|shot| (k, shot.classification));
                results.lock().unwrap()[j] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("scan worker skipped a point"))
        .collect()
}

/// Scan in parallel, then bisect the leftmost bracket sequentially.
pub fn shoot_parallel(
    params: &ModelParams,
    grid: &LogGrid,
    controls: &ShootControls,
    threads: usize,
) -> Result<(f64, ShotOutcome)> {
    let scanned = scan_parallel(params, grid, controls.scan_points, controls, threads)?;
    let (lo, hi) = bracket_from_scan(&scanned)?;
    let (k, mut shot) = bisect(params, grid, lo, hi, controls)?;
    refine_outcome(&mut shot, &controls.march)?;
    Ok((k, shot))
}
