//! Benchmark harness: times the three allocation methods on shared test
//! sets, summarizes sum-rates, and drives the cross-distribution and
//! size-sweep robustness protocols.
//!
//! Timing wraps the allocation call alone; rates are recomputed outside
//! the timed region. Each method gets one untimed warm-up run on the
//! first sample before its measured passes. Parallel evaluation keeps
//! record order; callers that care about wall times should keep it off.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use uwmmse_core::channel::{generate, ChannelFamily, ChannelSpec};
use uwmmse_core::model::{unfolded_allocate, ModelParams};
use uwmmse_core::wmmse::{sum_rate, wmmse_allocate, ProblemConfig};
use uwmmse_core::{CsiTensor, Error};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Wmmse,
    TrWmmse,
    Uwmmse,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Wmmse, Method::TrWmmse, Method::Uwmmse];

    pub fn label(&self) -> &'static str {
        match self {
            Method::Wmmse => "wmmse",
            Method::TrWmmse => "trwmmse",
            Method::Uwmmse => "uwmmse",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub sample_id: usize,
    pub method: Method,
    pub users: usize,
    pub tx: usize,
    pub rx: usize,
    pub streams: usize,
    pub family: String,
    pub sum_rate_bits: f64,
    pub wall_time_s: f64,
    pub iters: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct MethodSummary {
    pub method: Method,
    pub mean: f64,
    pub std: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub n: usize,
    pub time_mean_s: f64,
    pub time_median_s: f64,
}

fn run_one(
    h: &CsiTensor,
    method: Method,
    params: &ModelParams,
    cfg: &ProblemConfig,
    wmmse_iters: usize,
    trunc_iters: usize,
) -> Result<(Vec<uwmmse_core::Mat<f64>>, f64, usize), Error> {
    let start = Instant::now();
    let (v, iters) = match method {
        Method::Wmmse => wmmse_allocate(h, cfg, wmmse_iters, 0.0)?,
        Method::TrWmmse => wmmse_allocate(h, cfg, trunc_iters, 0.0)?,
        Method::Uwmmse => {
            let v = unfolded_allocate(h, params, cfg)?;
            (v, params.layers)
        }
    };
    let elapsed = start.elapsed().as_secs_f64();
    Ok((v, elapsed, iters))
}

/// Runs WMMSE, truncated WMMSE and the unfolded model over `test_set`
/// and returns one record per (sample, method), grouped by method.
pub fn compare_methods(
    test_set: &[CsiTensor],
    family: &str,
    params: &ModelParams,
    cfg: &ProblemConfig,
    wmmse_iters: usize,
    trunc_iters: usize,
    parallel: bool,
) -> Result<Vec<RunRecord>, Error> {
    if test_set.is_empty() {
        return Err(Error::Config("empty test set".into()));
    }
    let mut out = Vec::with_capacity(3 * test_set.len());
    for method in Method::ALL {
        run_one(&test_set[0], method, params, cfg, wmmse_iters, trunc_iters)?;
        let record = |(sample_id, h): (usize, &CsiTensor)| -> Result<RunRecord, Error> {
            let (v, wall_time_s, iters) =
                run_one(h, method, params, cfg, wmmse_iters, trunc_iters)?;
            let rate = sum_rate(&h.lift::<f64>(), &v, cfg)?;
            Ok(RunRecord {
                sample_id,
                method,
                users: h.users(),
                tx: h.tx(),
                rx: h.rx(),
                streams: cfg.streams,
                family: family.to_string(),
                sum_rate_bits: rate,
                wall_time_s,
                iters,
            })
        };
        let records: Result<Vec<RunRecord>, Error> = if parallel {
            test_set.par_iter().enumerate().map(record).collect()
        } else {
            test_set.iter().enumerate().map(record).collect()
        };
        out.extend(records?);
    }
    Ok(out)
}

/// Linear-interpolation quantile of an ascending slice (the convention
/// most statistics packages default to).
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn stats(values: &[f64]) -> (f64, f64, f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    (mean, std, quantile(&sorted, 0.25), quantile(&sorted, 0.5), quantile(&sorted, 0.75))
}

/// Per-method sum-rate statistics plus timing mean and median, in fixed
/// method order. Methods absent from `records` are skipped.
pub fn summarize(records: &[RunRecord]) -> Vec<MethodSummary> {
    let mut out = Vec::new();
    for method in Method::ALL {
        let rates: Vec<f64> =
            records.iter().filter(|r| r.method == method).map(|r| r.sum_rate_bits).collect();
        if rates.is_empty() {
            continue;
        }
        let times: Vec<f64> =
            records.iter().filter(|r| r.method == method).map(|r| r.wall_time_s).collect();
        let (mean, std, q1, median, q3) = stats(&rates);
        let (time_mean_s, _, _, time_median_s, _) = stats(&times);
        out.push(MethodSummary {
            method,
            mean,
            std,
            q1,
            median,
            q3,
            n: rates.len(),
            time_mean_s,
            time_median_s,
        });
    }
    out
}

pub fn write_results_csv(path: &Path, records: &[RunRecord]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "sample_id,method,M,T,R,d,family,sum_rate_bits,wall_time_s,iters")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.sample_id,
            r.method,
            r.users,
            r.tx,
            r.rx,
            r.streams,
            r.family,
            r.sum_rate_bits,
            r.wall_time_s,
            r.iters
        )?;
    }
    w.flush()
}

pub fn write_summary_csv(path: &Path, summaries: &[MethodSummary]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "method,mean,std,q1,median,q3,n")?;
    for s in summaries {
        writeln!(w, "{},{},{},{},{},{},{}", s.method, s.mean, s.std, s.q1, s.median, s.q3, s.n)?;
    }
    w.flush()
}

#[derive(Clone, Debug)]
pub struct RobustnessGroup {
    pub trained_on: ChannelFamily,
    pub tested_on: ChannelFamily,
    pub records: Vec<RunRecord>,
}

/// Evaluates every trained model on every test family, the classical
/// baselines included in each group for reference.
pub fn robustness_cross_distribution(
    models: &BTreeMap<ChannelFamily, ModelParams>,
    test_sets: &BTreeMap<ChannelFamily, Vec<CsiTensor>>,
    cfg: &ProblemConfig,
    wmmse_iters: usize,
    trunc_iters: usize,
    parallel: bool,
) -> Result<Vec<RobustnessGroup>, Error> {
    if models.is_empty() || test_sets.is_empty() {
        return Err(Error::Config("cross-distribution run needs at least one model and one test set".into()));
    }
    let mut out = Vec::with_capacity(models.len() * test_sets.len());
    for (&trained_on, params) in models {
        for (&tested_on, test_set) in test_sets {
            let records = compare_methods(
                test_set,
                tested_on.name(),
                params,
                cfg,
                wmmse_iters,
                trunc_iters,
                parallel,
            )?;
            out.push(RobustnessGroup { trained_on, tested_on, records });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    /// Network sizes to evaluate.
    pub sizes: Vec<usize>,
    /// Sizes the checkpoint was trained on, kept for reporting.
    pub train_sizes: Vec<usize>,
    pub train_family: ChannelFamily,
    pub test_family: ChannelFamily,
    pub tx: usize,
    pub rx: usize,
    pub rician_k_db: f64,
    pub samples_per_size: usize,
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), Error> {
        if self.sizes.is_empty() || self.sizes.iter().any(|&m| m == 0) {
            return Err(Error::Config("sweep sizes must be non-empty and all >= 1".into()));
        }
        if self.samples_per_size == 0 {
            return Err(Error::Config("sweep needs at least one sample per size".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SizeGroup {
    pub users: usize,
    pub trained_on: ChannelFamily,
    pub records: Vec<RunRecord>,
}

/// Evaluates each model at every size in `spec.sizes` on a fresh seeded
/// test set per size. The parameter count does not depend on the user
/// count, so a single checkpoint covers the whole sweep.
pub fn size_sweep(
    params_by_family: &BTreeMap<ChannelFamily, ModelParams>,
    spec: &SweepSpec,
    cfg: &ProblemConfig,
    wmmse_iters: usize,
    trunc_iters: usize,
    parallel: bool,
) -> Result<Vec<SizeGroup>, Error> {
    spec.validate()?;
    if params_by_family.is_empty() {
        return Err(Error::Config("size sweep needs at least one model".into()));
    }
    let mut out = Vec::with_capacity(spec.sizes.len() * params_by_family.len());
    for &users in &spec.sizes {
        let test_set = generate(
            &ChannelSpec {
                family: spec.test_family,
                users,
                tx: spec.tx,
                rx: spec.rx,
                rician_k_db: spec.rician_k_db,
                seed: spec.seed.wrapping_add(users as u64),
            },
            spec.samples_per_size,
        )?;
        for (&trained_on, params) in params_by_family {
            let records = compare_methods(
                &test_set,
                spec.test_family.name(),
                params,
                cfg,
                wmmse_iters,
                trunc_iters,
                parallel,
            )?;
            out.push(SizeGroup { users, trained_on, records });
        }
    }
    Ok(out)
}
