use std::fmt;
use std::hint::black_box;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SketchError};
use crate::estimate::{estimate_cardinality, estimate_jaccard_p, exact_jaccard_p};
use crate::randgen::{derive_seed, SeedScheme};
use crate::sketch::{
    sketch_fastgm, sketch_naive, GenerationParams, GumbelMaxSketch, WeightedVector,
};
use crate::stream::sketch_stream;

use super::dataset::SparseDataset;
use super::synthetic::{gen_synthetic, WeightDist};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Method {
    Naive,
    FastGm,
    Stream,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::FastGm => "fastgm",
            Method::Stream => "stream",
        }
    }

    /// Sketch plus the number of order statistics drawn.
    pub fn run(
        &self,
        v: &WeightedVector,
        params: &GenerationParams,
    ) -> Result<(GumbelMaxSketch, u64)> {
        match self {
            Method::Naive => sketch_naive(v, params).map(|(s, st)| (s, st.emitted)),
            Method::FastGm => sketch_fastgm(v, params).map(|(s, st)| (s, st.emitted)),
            Method::Stream => sketch_stream(v, params.k, params.scheme),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = SketchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "naive" => Ok(Method::Naive),
            "fastgm" | "fast" => Ok(Method::FastGm),
            "stream" | "stream-fastgm" => Ok(Method::Stream),
            _ => Err(SketchError::InvalidConfig(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Workload {
    Synthetic {
        n: usize,
        dist: WeightDist,
        vectors: usize,
    },
    Dataset(SparseDataset),
}

impl Workload {
    fn materialize(&self, master_seed: u64) -> Result<Vec<WeightedVector>> {
        match self {
            Workload::Synthetic { n, dist, vectors } => (0..*vectors as u64)
                .map(|i| gen_synthetic(*n, *dist, derive_seed(master_seed, i)))
                .collect(),
            Workload::Dataset(ds) => Ok(ds
                .vectors
                .iter()
                .filter(|v| !v.is_empty())
                .cloned()
                .collect()),
        }
    }

    fn describe(&self) -> (Option<usize>, String, Option<String>) {
        match self {
            Workload::Synthetic { n, dist, .. } => (Some(*n), dist.to_string(), None),
            Workload::Dataset(ds) => (None, "dataset".into(), Some(ds.name.clone())),
        }
    }
}

/// Echo of the inputs that produced a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportConfig {
    pub k_list: Vec<usize>,
    pub n: Option<usize>,
    pub distribution: String,
    pub dataset: Option<String>,
    pub master_seed: u64,
    pub methods: Vec<String>,
    pub repetitions: usize,
    pub delta: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport<R, S = ()> {
    pub experiment: String,
    pub config: ReportConfig,
    pub rows: Vec<R>,
    pub summary: Vec<S>,
}

impl<R: Serialize, S: Serialize> ExperimentReport<R, S> {
    /// One CSV line per row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)
                .map_err(|e| SketchError::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| SketchError::Io(e.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct SpeedSpec {
    pub workload: Workload,
    pub k_list: Vec<usize>,
    pub methods: Vec<Method>,
    pub master_seed: u64,
    /// Timed repetitions after one warm-up; at least 5.
    pub reps: usize,
    pub delta: Option<usize>,
}

/// One timed pass of one method over the whole workload.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedRow {
    pub method: String,
    pub k: usize,
    pub vectors: usize,
    pub mean_n_plus: f64,
    pub rep: usize,
    pub duration_ns: u64,
    pub emitted: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedSummary {
    pub method: String,
    pub k: usize,
    pub median_ns: u64,
    pub emitted: u64,
    /// Naive median over this method's median, when naive was run.
    pub speedup_vs_naive: Option<f64>,
    /// Whether every sketch equals the one produced by the first method.
    pub agrees: bool,
}

pub type SpeedReport = ExperimentReport<SpeedRow, SpeedSummary>;

impl SpeedReport {
    /// Copy with every wall-clock field zeroed.
    pub fn without_timings(&self) -> Self {
        let mut out = self.clone();
        out.rows.iter_mut().for_each(|r| r.duration_ns = 0);
        out.summary.iter_mut().for_each(|s| {
            s.median_ns = 0;
            s.speedup_vs_naive = None;
        });
        out
    }

    pub fn summary_for(&self, method: Method, k: usize) -> Option<&SpeedSummary> {
        self.summary
            .iter()
            .find(|s| s.method == method.name() && s.k == k)
    }
}

fn median(mut xs: Vec<u64>) -> u64 {
    xs.sort_unstable();
    xs[xs.len() / 2]
}

/// Times each method on the same vectors and seed scheme for every `k`.
///
/// Each (method, k) cell gets one untimed warm-up pass followed by `reps`
/// timed passes; the summary reports the median.
pub fn run_speed_experiment(spec: &SpeedSpec) -> Result<SpeedReport> {
    if spec.reps < 5 {
        return Err(SketchError::InvalidConfig(
            "speed runs need at least 5 repetitions".into(),
        ));
    }
    if spec.methods.is_empty() || spec.k_list.is_empty() {
        return Err(SketchError::InvalidConfig(
            "need at least one method and one k".into(),
        ));
    }
    let vectors = spec.workload.materialize(spec.master_seed)?;
    if vectors.is_empty() {
        return Err(SketchError::EmptyVector);
    }
    let mean_n_plus =
        vectors.iter().map(|v| v.n_plus()).sum::<usize>() as f64 / vectors.len() as f64;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &k in &spec.k_list {
        let scheme = SeedScheme::new(derive_seed(spec.master_seed, k as u64 ^ (1 << 48)));
        let mut params = GenerationParams::new(k, scheme);
        if let Some(d) = spec.delta {
            params = params.with_delta(d);
        }
        params.validate()?;
        let mut reference: Option<Vec<GumbelMaxSketch>> = None;
        let mut medians = Vec::new();
        for &method in &spec.methods {
            let mut sketches = Vec::with_capacity(vectors.len());
            let mut emitted = 0;
            for v in &vectors {
                let (sk, e) = method.run(v, &params)?;
                emitted += e;
                sketches.push(sk);
            }
            let agrees = match &reference {
                None => {
                    reference = Some(sketches);
                    true
                }
                Some(r) => r.iter().zip(&sketches).all(|(a, b)| a.bit_eq(b)),
            };
            let mut durations = Vec::with_capacity(spec.reps);
            for rep in 0..spec.reps {
                let start = Instant::now();
                for v in &vectors {
                    black_box(method.run(black_box(v), &params)?);
                }
                let ns = (start.elapsed().as_nanos() as u64).max(1);
                durations.push(ns);
                rows.push(SpeedRow {
                    method: method.name().into(),
                    k,
                    vectors: vectors.len(),
                    mean_n_plus,
                    rep,
                    duration_ns: ns,
                    emitted,
                });
            }
            let med = median(durations);
            medians.push((method, med));
            summary.push(SpeedSummary {
                method: method.name().into(),
                k,
                median_ns: med,
                emitted,
                speedup_vs_naive: None,
                agrees,
            });
        }
        if let Some(&(_, naive)) = medians.iter().find(|(m, _)| *m == Method::Naive) {
            let start = summary.len() - medians.len();
            for (s, (_, med)) in summary[start..].iter_mut().zip(&medians) {
                s.speedup_vs_naive = Some(naive as f64 / *med as f64);
            }
        }
    }
    let (n, distribution, dataset) = spec.workload.describe();
    Ok(ExperimentReport {
        experiment: "speed".into(),
        config: ReportConfig {
            k_list: spec.k_list.clone(),
            n,
            distribution,
            dataset,
            master_seed: spec.master_seed,
            methods: spec.methods.iter().map(|m| m.name().into()).collect(),
            repetitions: spec.reps,
            delta: spec.delta,
        },
        rows,
        summary,
    })
}

/// Least-squares fit of `emitted ~ c1 * k ln k + c2 * n` (no intercept).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorkFit {
    pub c1: f64,
    pub c2: f64,
    pub r_squared: f64,
}

/// Fits `(k, n, emitted)` observations to `c1 * k ln k + c2 * n`.
pub fn work_fit(points: &[(usize, usize, f64)]) -> WorkFit {
    let feats: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|&(k, n, w)| {
            let k = k as f64;
            (k * k.ln(), n as f64, w)
        })
        .collect();
    let (mut s11, mut s12, mut s22, mut s1y, mut s2y) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(a, b, y) in &feats {
        s11 += a * a;
        s12 += a * b;
        s22 += b * b;
        s1y += a * y;
        s2y += b * y;
    }
    let det = s11 * s22 - s12 * s12;
    let c1 = (s1y * s22 - s2y * s12) / det;
    let c2 = (s2y * s11 - s1y * s12) / det;
    let mean = feats.iter().map(|f| f.2).sum::<f64>() / feats.len() as f64;
    let ss_tot: f64 = feats.iter().map(|f| (f.2 - mean).powi(2)).sum();
    let ss_res: f64 = feats
        .iter()
        .map(|&(a, b, y)| (y - c1 * a - c2 * b).powi(2))
        .sum();
    WorkFit {
        c1,
        c2,
        r_squared: 1.0 - ss_res / ss_tot,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RmseTask {
    /// Pair `(u, v)` where `v` shares a fraction `overlap` of `u`'s ids with
    /// identical weights and has fresh weights elsewhere.
    Jaccard {
        overlap: f64,
    },
    Cardinality,
}

#[derive(Debug, Clone)]
pub struct RmseSpec {
    pub task: RmseTask,
    pub n: usize,
    pub dist: WeightDist,
    pub k_list: Vec<usize>,
    /// Independent seed schemes per `k`; at least 100.
    pub trials: usize,
    pub master_seed: u64,
    /// Worker threads; 0 uses the global pool.
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmseRow {
    pub task: String,
    pub k: usize,
    pub trials: usize,
    pub truth: f64,
    pub mean_estimate: f64,
    pub rmse: f64,
    pub relative_rmse: f64,
    /// `sqrt(J(1-J)/k)` for similarity, `c * sqrt(2/k)` for cardinality.
    pub theory_rmse: f64,
    /// Exact `c / sqrt(k-2)` for the gamma-distributed cardinality estimate.
    pub theory_rmse_gamma: Option<f64>,
}

pub type RmseReport = ExperimentReport<RmseRow>;

fn jaccard_pair(
    n: usize,
    dist: WeightDist,
    overlap: f64,
    seed: u64,
) -> Result<(WeightedVector, WeightedVector)> {
    if !(0.0..=1.0).contains(&overlap) {
        return Err(SketchError::InvalidConfig(format!(
            "overlap {overlap} outside [0, 1]"
        )));
    }
    let u = gen_synthetic(n, dist, derive_seed(seed, 0))?;
    let fresh = gen_synthetic(n, dist, derive_seed(seed, 1))?;
    let shift = ((1.0 - overlap) * n as f64).round() as u64;
    let v = WeightedVector::from_pairs((1..=n as u64).map(|i| {
        let id = i + shift;
        let w = u.get(id).unwrap_or_else(|| fresh.get(i).unwrap());
        (id, w)
    }))?;
    Ok((u, v))
}

/// Empirical RMSE over independent seed schemes for each `k`.
pub fn run_rmse_experiment(spec: &RmseSpec) -> Result<RmseReport> {
    if spec.trials < 100 {
        return Err(SketchError::InvalidConfig(
            "accuracy runs need at least 100 trials".into(),
        ));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.threads)
        .build()
        .map_err(|e| SketchError::InvalidConfig(e.to_string()))?;
    let workload_seed = derive_seed(spec.master_seed, u64::MAX);
    let mut rows = Vec::new();
    for &k in &spec.k_list {
        let (task, truth, estimates): (&str, f64, Vec<f64>) = match spec.task {
            RmseTask::Jaccard { overlap } => {
                let (u, v) = jaccard_pair(spec.n, spec.dist, overlap, workload_seed)?;
                let truth = exact_jaccard_p(&u, &v);
                let est = pool.install(|| {
                    (0..spec.trials as u64)
                        .into_par_iter()
                        .map(|t| {
                            let params = GenerationParams::new(
                                k,
                                SeedScheme::new(derive_seed(spec.master_seed, t)),
                            );
                            let a = sketch_fastgm(&u, &params)?.0;
                            let b = sketch_fastgm(&v, &params)?.0;
                            Ok(estimate_jaccard_p(&a, &b)?.value)
                        })
                        .collect::<Result<Vec<f64>>>()
                })?;
                ("jaccard", truth, est)
            }
            RmseTask::Cardinality => {
                let v = gen_synthetic(spec.n, spec.dist, workload_seed)?;
                let est = pool.install(|| {
                    (0..spec.trials as u64)
                        .into_par_iter()
                        .map(|t| {
                            let params = GenerationParams::new(
                                k,
                                SeedScheme::new(derive_seed(spec.master_seed, t)),
                            );
                            Ok(estimate_cardinality(&sketch_fastgm(&v, &params)?.0)?.value)
                        })
                        .collect::<Result<Vec<f64>>>()
                })?;
                ("cardinality", v.weight_sum(), est)
            }
        };
        let m = estimates.len() as f64;
        let mean_estimate = estimates.iter().sum::<f64>() / m;
        let rmse = (estimates.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / m).sqrt();
        let kf = k as f64;
        let (theory_rmse, theory_rmse_gamma) = match spec.task {
            RmseTask::Jaccard { .. } => ((truth * (1.0 - truth) / kf).sqrt(), None),
            RmseTask::Cardinality => (
                truth * (2.0 / kf).sqrt(),
                (k > 2).then(|| truth / (kf - 2.0).sqrt()),
            ),
        };
        rows.push(RmseRow {
            task: task.into(),
            k,
            trials: spec.trials,
            truth,
            mean_estimate,
            rmse,
            relative_rmse: if truth > 0.0 { rmse / truth } else { rmse },
            theory_rmse,
            theory_rmse_gamma,
        });
    }
    Ok(ExperimentReport {
        experiment: "rmse".into(),
        config: ReportConfig {
            k_list: spec.k_list.clone(),
            n: Some(spec.n),
            distribution: spec.dist.to_string(),
            dataset: None,
            master_seed: spec.master_seed,
            methods: vec![Method::FastGm.name().into()],
            repetitions: spec.trials,
            delta: None,
        },
        rows,
        summary: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn speed_spec(n: usize, k_list: Vec<usize>) -> SpeedSpec {
        SpeedSpec {
            workload: Workload::Synthetic {
                n,
                dist: WeightDist::Uniform01,
                vectors: 2,
            },
            k_list,
            methods: vec![Method::Naive, Method::FastGm, Method::Stream],
            master_seed: 11,
            reps: 5,
            delta: None,
        }
    }

    #[test]
    fn speed_report_shape_and_agreement() {
        let report = run_speed_experiment(&speed_spec(50, vec![1, 16])).unwrap();
        assert_eq!(report.rows.len(), 2 * 3 * 5);
        assert!(report.rows.iter().all(|r| r.duration_ns > 0));
        assert_eq!(report.summary.len(), 6);
        assert!(report.summary.iter().all(|s| s.agrees));
        let naive = report.summary_for(Method::Naive, 16).unwrap();
        assert_eq!(naive.emitted, 2 * 50 * 16);
        assert!(report
            .summary_for(Method::FastGm, 16)
            .unwrap()
            .speedup_vs_naive
            .is_some());
    }

    #[test]
    fn speed_report_is_deterministic_apart_from_timings() {
        let a = run_speed_experiment(&speed_spec(40, vec![8, 32])).unwrap();
        let b = run_speed_experiment(&speed_spec(40, vec![8, 32])).unwrap();
        assert_eq!(
            a.without_timings().to_json().unwrap(),
            b.without_timings().to_json().unwrap()
        );
    }

    #[test]
    fn speed_spec_validation() {
        let mut spec = speed_spec(10, vec![4]);
        spec.reps = 4;
        assert!(run_speed_experiment(&spec).is_err());
        let mut spec = speed_spec(10, vec![0]);
        spec.reps = 5;
        assert!(run_speed_experiment(&spec).is_err());
    }

    #[test]
    fn fastgm_work_grows_like_k_log_k() {
        // Every element draws its first customer regardless of k; the
        // remainder is the part that scales with k ln k.
        let (n, vectors) = (1000, 50);
        let report = run_speed_experiment(&SpeedSpec {
            workload: Workload::Synthetic {
                n,
                dist: WeightDist::Uniform01,
                vectors,
            },
            methods: vec![Method::FastGm],
            ..speed_spec(n, vec![256, 512])
        })
        .unwrap();
        let e = |k| {
            report.summary_for(Method::FastGm, k).unwrap().emitted as f64 - (n * vectors) as f64
        };
        let ratio = e(512) / e(256);
        assert!(ratio > 1.8 && ratio < 2.4, "ratio {ratio}");
    }

    #[test]
    fn work_fit_recovers_exact_coefficients() {
        let pts: Vec<(usize, usize, f64)> = [(64, 100), (128, 1000), (256, 100), (512, 5000)]
            .iter()
            .map(|&(k, n)| (k, n, 1.5 * k as f64 * (k as f64).ln() + 2.0 * n as f64))
            .collect();
        let fit = work_fit(&pts);
        assert!((fit.c1 - 1.5).abs() < 1e-9 && (fit.c2 - 2.0).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_pair_has_zero_error() {
        let report = run_rmse_experiment(&RmseSpec {
            task: RmseTask::Jaccard { overlap: 1.0 },
            n: 30,
            dist: WeightDist::Exp1,
            k_list: vec![16],
            trials: 100,
            master_seed: 1,
            threads: 2,
        })
        .unwrap();
        assert!((report.rows[0].truth - 1.0).abs() < 1e-12);
        assert!(report.rows[0].rmse < 1e-12);
        assert_eq!(report.rows[0].mean_estimate, 1.0);
    }

    #[test]
    fn jaccard_rmse_shrinks_by_root_two_per_doubling() {
        let spec = RmseSpec {
            task: RmseTask::Jaccard { overlap: 0.5 },
            n: 40,
            dist: WeightDist::Uniform01,
            k_list: vec![64, 128],
            trials: 2000,
            master_seed: 5,
            threads: 0,
        };
        let report = run_rmse_experiment(&spec).unwrap();
        let ratio = report.rows[0].rmse / report.rows[1].rmse;
        assert!(ratio > 1.3 && ratio < 1.5, "ratio {ratio}");
        for row in &report.rows {
            assert!((row.rmse / row.theory_rmse - 1.0).abs() < 0.1);
        }
    }

    #[test]
    fn rmse_report_is_deterministic_across_thread_counts() {
        let mut spec = RmseSpec {
            task: RmseTask::Cardinality,
            n: 100,
            dist: WeightDist::Normal,
            k_list: vec![32],
            trials: 100,
            master_seed: 3,
            threads: 1,
        };
        let a = run_rmse_experiment(&spec).unwrap();
        spec.threads = 4;
        assert_eq!(a, run_rmse_experiment(&spec).unwrap());
        spec.trials = 99;
        assert!(run_rmse_experiment(&spec).is_err());
    }

    #[test]
    fn csv_has_one_line_per_row() {
        let report = run_speed_experiment(&speed_spec(10, vec![4])).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + report.rows.len());
        assert!(text.starts_with("method,k,vectors,mean_n_plus,rep,duration_ns,emitted"));
    }
}
