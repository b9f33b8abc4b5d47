//! One function per subcommand. Each is a pure function of its arguments and
//! input files; wall-clock timings go to the diagnostics only.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use mbar_core::analysis::{
    improvement_criterion, interference_probability, jsd, rank_distribution, ranking_error_curves,
    ranking_error_curves_mc, sensitivity_sweep, CriterionVerdict, DiscreteDensity, NoiseSweepConfig,
    SweepAxis,
};
use mbar_core::approx::{mae_distribution, magic_barrier_rmse, rmse_distribution};
use mbar_core::ingest::{
    filter_nonvanishing, fit_exponential, fit_pair_gaussians, ks_normality_test, sample_variances,
    ExponentialFit,
};
use mbar_core::mc::{optimal_predictors, simulate_metric, Histogram, MCConfig};
use mbar_core::{GaussianSummary, MetricKind, PredictorVector, RatingDistribution, ScaleSpec};
use serde::Serialize;
use serde_json::json;

use crate::args::{
    Axis, CompareArgs, EstimateArgs, IngestArgs, McArgs, PairSource, RankArgs, RankcurvesArgs, ScaleArgs,
    SensitivityArgs, SimulateArgs, TransferArgs,
};
use crate::error::CliError;
use crate::io::{self, HistogramDoc, SummaryDoc};
use crate::output::{Report, Table};

/// Pair counts below which the normal approximation is flagged.
pub const SMALL_N_WARNING: usize = 100;

/// Diagnostics destined for stderr, kept out of the report bytes.
#[derive(Debug, Default)]
pub struct Diagnostics {
    pub lines: Vec<String>,
}

impl Diagnostics {
    pub fn note(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }
}

/// The arguments plus the Monte-Carlo configuration they resolve to.
fn with_resolved_mc(args: impl Serialize, cfg: &MCConfig) -> Result<serde_json::Value, CliError> {
    let mut v = serde_json::to_value(args)?;
    if let Some(map) = v.as_object_mut() {
        map.insert("resolved_mc".into(), serde_json::to_value(cfg)?);
    }
    Ok(v)
}

fn num(x: f64) -> String {
    x.to_string()
}

fn scale_of(a: &ScaleArgs) -> Result<ScaleSpec, CliError> {
    ScaleSpec::new(a.scale_min, a.scale_max, a.trials).map_err(CliError::from_grid)
}

fn mc_config(a: &McArgs) -> Result<MCConfig, CliError> {
    let mut cfg = MCConfig::new(a.tau, a.seed);
    if let Some(b) = a.bins {
        cfg = cfg.with_bins(b);
    }
    cfg.validate().map_err(CliError::from_grid)?;
    Ok(cfg)
}

/// Pairs from `--pairs`, or zero-mean pairs named `v{i}` from `--variances`.
fn load_pairs(src: &PairSource) -> Result<Vec<RatingDistribution>, CliError> {
    match (&src.pairs, &src.variances) {
        (Some(p), _) => io::read_pairs_file(p),
        (None, Some(v)) => variances_as_pairs(&io::read_variances_file(v)?),
        (None, None) => Err(CliError::Usage("one of --pairs or --variances is required".into())),
    }
}

fn variances_as_pairs(variances: &[f64]) -> Result<Vec<RatingDistribution>, CliError> {
    variances
        .iter()
        .enumerate()
        .map(|(i, &v)| RatingDistribution::new(format!("v{i}"), format!("v{i}"), 0.0, v).map_err(CliError::from))
        .collect()
}

/// The pairs a metric distribution is computed over together with the
/// predictions. The optimal recommender only sees non-vanishing pairs.
fn select_system(
    all: &[RatingDistribution],
    predictors: Option<&Path>,
    metric: MetricKind,
) -> Result<(Vec<RatingDistribution>, PredictorVector), CliError> {
    match predictors {
        Some(path) => {
            let p = io::read_predictors_file(path)?;
            p.check_aligned(all)?;
            Ok((all.to_vec(), p))
        }
        None => {
            let used = filter_nonvanishing(all);
            if used.is_empty() {
                return Err(CliError::Degenerate("no pair has a nonzero variance".into()));
            }
            let p = optimal_predictors(&used, metric)?;
            Ok((used, p))
        }
    }
}

fn small_n_warning(n: usize, report: &mut Report) {
    if n < SMALL_N_WARNING {
        report.warnings.push(format!(
            "only {n} pairs; the normal approximation of the metric degrades below {SMALL_N_WARNING}"
        ));
    }
}

#[derive(Serialize)]
struct ItemFraction {
    item: String,
    pairs: usize,
    nonvanishing: usize,
    fraction: f64,
}

pub fn ingest(a: &IngestArgs, diag: &mut Diagnostics) -> Result<Report, CliError> {
    let scale = scale_of(&a.scale)?;
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(CliError::Usage("alpha must lie in (0, 1)".into()));
    }
    let tensor = io::read_tensor_file(&a.input, scale)?;
    let dists = fit_pair_gaussians(&tensor)?;
    let slices = tensor.slices();

    let mut items: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for d in &dists {
        let e = items.entry(d.item.as_str()).or_default();
        e.0 += 1;
        if d.variance > 0.0 {
            e.1 += 1;
        }
    }
    let fractions: Vec<ItemFraction> = items
        .into_iter()
        .map(|(item, (pairs, nonzero))| ItemFraction {
            item: item.to_string(),
            pairs,
            nonvanishing: nonzero,
            fraction: nonzero as f64 / pairs as f64,
        })
        .collect();

    let mut tested = 0usize;
    let mut rejected = 0usize;
    for (d, s) in dists.iter().zip(&slices) {
        if d.variance > 0.0 {
            let r = ks_normality_test(&s.values(), d.mean, d.std_dev(), a.alpha)?;
            tested += 1;
            rejected += usize::from(r.rejected);
        }
    }

    let nonvanishing: Vec<f64> = filter_nonvanishing(&dists).iter().map(|d| d.variance).collect();
    let mut warnings = Vec::new();
    let fit = match fit_exponential(&nonvanishing) {
        Ok(f) => Some(f),
        Err(e) => {
            warnings.push(format!("exponential fit unavailable: {e}"));
            None
        }
    };
    if let Some(path) = &a.variances_out {
        io::write_variances(io::create(path)?, &nonvanishing)?;
        diag.note(format!("wrote {} variances to {}", nonvanishing.len(), path.display()));
    }

    let mut table = Table::new(vec!["user", "item", "mean", "variance"]);
    for d in &dists {
        table.push(vec![d.user.clone(), d.item.clone(), num(d.mean), num(d.variance)]);
    }
    let result = json!({
        "records": tensor.len(),
        "pair_count": dists.len(),
        "nonvanishing_pairs": nonvanishing.len(),
        "items": fractions,
        "exponential_fit": fit,
        "ks": {"alpha": a.alpha, "tested": tested, "rejected": rejected},
        "pairs": dists,
    });
    let mut report = Report::new("ingest", a, result, table)?;
    report.warnings = warnings;
    Ok(report)
}

fn summary_table(metric: MetricKind, pairs: usize, g: &GaussianSummary) -> Table {
    let mut t = Table::new(vec!["metric", "pairs", "mean", "variance"]);
    t.push(vec![metric.name().into(), pairs.to_string(), num(g.mean), num(g.variance)]);
    t
}

pub fn estimate(a: &EstimateArgs, diag: &mut Diagnostics) -> Result<Report, CliError> {
    let metric = MetricKind::from(a.metric);
    let all = load_pairs(&a.source)?;
    let (used, predictors) = select_system(&all, a.predictors.as_deref(), metric)?;
    let start = Instant::now();
    let summary = match (metric, a.predictors.is_some()) {
        (MetricKind::Rmse, false) => {
            let variances: Vec<f64> = used.iter().map(|d| d.variance).collect();
            magic_barrier_rmse(&variances)?
        }
        (MetricKind::Rmse, true) => rmse_distribution(&used, &predictors)?,
        (MetricKind::Mae, _) => mae_distribution(&used, &predictors)?,
    };
    let elapsed = start.elapsed();
    diag.note(format!("closed form over {} pairs took {:.3} ms", used.len(), elapsed.as_secs_f64() * 1e3));

    let result = json!({
        "metric": metric,
        "optimal": a.predictors.is_none(),
        "pairs_total": all.len(),
        "pairs_used": used.len(),
        "mean": summary.mean,
        "variance": summary.variance,
        "std_dev": summary.std_dev(),
    });
    let mut report = Report::new("estimate", a, result, summary_table(metric, used.len(), &summary))?;
    small_n_warning(used.len(), &mut report);
    Ok(report)
}

pub fn simulate(a: &SimulateArgs, diag: &mut Diagnostics) -> Result<Report, CliError> {
    let metric = MetricKind::from(a.metric);
    let all = load_pairs(&a.source)?;
    let (used, predictors) = select_system(&all, a.predictors.as_deref(), metric)?;
    let mut cfg = mc_config(&a.mc)?;
    if let (Some(lo), Some(hi)) = (a.clip_min, a.clip_max) {
        if !(lo < hi) {
            return Err(CliError::Usage("clip_min must be below clip_max".into()));
        }
        cfg = cfg.with_clip(lo, hi);
    }
    let start = Instant::now();
    let sample = simulate_metric(&used, &predictors, metric, &cfg)?;
    diag.note(format!(
        "{} trials over {} pairs took {:.3} s",
        cfg.trials,
        used.len(),
        start.elapsed().as_secs_f64()
    ));
    if let Some(path) = &a.values_out {
        io::write_values(io::create(path)?, &sample.values)?;
    }

    let mut table = Table::new(vec!["bin_low", "bin_high", "height"]);
    for (w, h) in sample.histogram.edges.windows(2).zip(&sample.histogram.heights) {
        table.push(vec![num(w[0]), num(w[1]), num(*h)]);
    }
    let result = json!({
        "metric": metric,
        "optimal": a.predictors.is_none(),
        "pairs_total": all.len(),
        "pairs_used": used.len(),
        "mc": cfg,
        "trials": sample.trials(),
        "values_path": a.values_out,
        "mean": sample.summary.mean,
        "variance": sample.summary.variance,
        "standard_error": sample.standard_error(),
        "histogram": sample.histogram,
    });
    let mut report = Report::new("simulate", with_resolved_mc(a, &cfg)?, result, table)?;
    small_n_warning(used.len(), &mut report);
    Ok(report)
}

fn density_of(h: &HistogramDoc) -> Result<DiscreteDensity, CliError> {
    let hist = Histogram {
        edges: h.edges.clone(),
        heights: h.heights.clone(),
    };
    Ok(DiscreteDensity::from_histogram(&hist)?)
}

/// JSD of two histograms after rebinning both onto one equal-width grid
/// spanning their union.
pub fn histogram_jsd(a: &HistogramDoc, b: &HistogramDoc, normalizer: f64) -> Result<f64, CliError> {
    let (pa, pb) = (density_of(a)?, density_of(b)?);
    let lo = pa.edges[0].min(pb.edges[0]);
    let hi = pa.edges[pa.edges.len() - 1].max(pb.edges[pb.edges.len() - 1]);
    let bins = pa.masses.len().max(pb.masses.len());
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| lo + i as f64 * width).collect();
    edges.push(hi);
    Ok(jsd(&pa.rebin(edges.clone())?, &pb.rebin(edges)?, normalizer)?)
}

fn verdict_word(v: &CriterionVerdict) -> &'static str {
    if v.differentiated_analysis_needed {
        "needed"
    } else {
        "improvable"
    }
}

pub fn compare(a: &CompareArgs, _diag: &mut Diagnostics) -> Result<Report, CliError> {
    if !(a.normalizer > 0.0) {
        return Err(CliError::Usage("normalizer must be positive".into()));
    }
    let barrier: SummaryDoc = io::read_summary_file(&a.barrier)?;
    let system: SummaryDoc = io::read_summary_file(&a.system)?;
    let (mb, rmse) = (barrier.gaussian()?, system.gaussian()?);
    let p = interference_probability(&mb, &rmse);
    let verdict = improvement_criterion(&mb, &rmse);
    let divergence = match (&barrier.histogram, &system.histogram) {
        (Some(x), Some(y)) => Some(histogram_jsd(x, y, a.normalizer)?),
        _ => None,
    };

    let mut table = Table::new(vec!["quantity", "value"]);
    table.push(vec!["interference_probability".into(), num(p)]);
    table.push(vec!["verdict".into(), verdict_word(&verdict).into()]);
    table.push(vec!["margin".into(), num(verdict.margin)]);
    table.push(vec!["gap".into(), num(verdict.gap)]);
    table.push(vec!["simplified_threshold".into(), num(verdict.simplified_threshold)]);
    if let Some(d) = divergence {
        table.push(vec!["jsd".into(), num(d)]);
    }
    let result = json!({
        "barrier": {"mean": mb.mean, "variance": mb.variance},
        "system": {"mean": rmse.mean, "variance": rmse.variance},
        "interference_probability": p,
        "verdict": verdict_word(&verdict),
        "criterion": verdict,
        "jsd": divergence,
    });
    Report::new("compare", a, result, table)
}

pub fn sensitivity(a: &SensitivityArgs, _diag: &mut Diagnostics) -> Result<Report, CliError> {
    let scale = scale_of(&a.scale)?;
    let axis = match a.vary {
        Axis::Pairs => {
            let variance = a
                .variance
                .ok_or_else(|| CliError::Usage("--vary pairs needs --variance".into()))?;
            let counts = a
                .grid
                .iter()
                .map(|&g| {
                    if g >= 1.0 && g.fract() == 0.0 && g <= usize::MAX as f64 {
                        Ok(g as usize)
                    } else {
                        Err(CliError::Usage(format!("pair count {g} is not a positive integer")))
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            SweepAxis::PairCount { counts, variance }
        }
        Axis::Variance => {
            let count = a
                .count
                .ok_or_else(|| CliError::Usage("--vary variance needs --count".into()))?;
            SweepAxis::Variance {
                variances: a.grid.clone(),
                count,
            }
        }
    };
    let rows = sensitivity_sweep(&axis, &scale).map_err(CliError::from_grid)?;
    let mut table = Table::new(vec![
        "axis_value",
        "pairs",
        "variance_per_pair",
        "mean",
        "variance",
        "mean_low",
        "mean_high",
        "variance_low",
        "variance_high",
    ]);
    for r in &rows {
        table.push(vec![
            num(r.axis_value),
            r.pairs.to_string(),
            num(r.variance_per_pair),
            num(r.mean),
            num(r.variance),
            num(r.mean_low),
            num(r.mean_high),
            num(r.variance_low),
            num(r.variance_high),
        ]);
    }
    Report::new("sensitivity", a, json!({ "rows": rows }), table)
}

pub fn rankcurves(a: &RankcurvesArgs, diag: &mut Diagnostics) -> Result<Report, CliError> {
    let base_variances = match &a.pairs {
        Some(p) => io::read_pairs_file(p)?.iter().map(|d| d.variance).collect(),
        None => vec![a.variance; a.count],
    };
    let cfg = NoiseSweepConfig {
        relative_differences: a.deltas.clone(),
        offsets: a.offsets.clone(),
        base_variances,
        noise_scale: a.noise_scale,
        seed: a.seed,
    };
    let start = Instant::now();
    let points = match a.mc_trials {
        Some(t) => ranking_error_curves_mc(&cfg, t),
        None => ranking_error_curves(&cfg),
    }
    .map_err(CliError::from_grid)?;
    diag.note(format!("{} curve points took {:.3} s", points.len(), start.elapsed().as_secs_f64()));
    let mut table = Table::new(vec!["delta", "offset", "error_probability"]);
    for p in &points {
        table.push(vec![num(p.delta), num(p.offset), num(p.error_probability)]);
    }
    let result = json!({
        "method": if a.mc_trials.is_some() { "monte-carlo" } else { "closed-form" },
        "pairs": cfg.base_variances.len(),
        "points": points,
    });
    Report::new("rankcurves", a, result, table)
}

fn ordering_label(o: &[usize]) -> String {
    o.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(">")
}

pub fn rank(a: &RankArgs, diag: &mut Diagnostics) -> Result<Report, CliError> {
    let metric = MetricKind::from(a.metric);
    let dists = io::read_pairs_file(&a.pairs)?;
    let mut names: Vec<String> = Vec::new();
    let mut systems: Vec<PredictorVector> = Vec::new();
    if a.include_optimal {
        names.push("optimal".into());
        systems.push(optimal_predictors(&dists, metric)?);
    }
    for path in &a.predictors {
        let p = io::read_predictors_file(path)?;
        p.check_aligned(&dists).map_err(|e| CliError::from(e).in_file(path))?;
        names.push(path.display().to_string());
        systems.push(p);
    }
    if systems.is_empty() {
        return Err(CliError::Usage("give --predictors or --include-optimal".into()));
    }
    let cfg = mc_config(&a.mc)?;
    let start = Instant::now();
    let dist = rank_distribution(&systems, &dists, metric, &cfg)?;
    diag.note(format!("ranking took {:.3} s", start.elapsed().as_secs_f64()));

    let mut table = Table::new(vec!["ordering", "count", "probability"]);
    let mut orderings = Vec::new();
    for (o, p) in dist.probabilities() {
        let count = dist.counts[&o];
        table.push(vec![ordering_label(&o), count.to_string(), num(p)]);
        orderings.push(json!({"ordering": o, "count": count, "probability": p}));
    }
    let result = json!({
        "metric": metric,
        "systems": names,
        "mc": cfg,
        "trials": dist.trials,
        "orderings": orderings,
    });
    Report::new("rank", with_resolved_mc(a, &cfg)?, result, table)
}

/// Mean of `Exp(rate)` conditioned on `[low, high]`.
pub fn truncated_exponential_mean(rate: f64, low: f64, high: f64) -> f64 {
    let span = high - low;
    let tail = (-rate * span).exp();
    low + 1.0 / rate - span * tail / (1.0 - tail)
}

#[derive(Serialize)]
struct TransferResolved<'a> {
    #[serde(flatten)]
    args: &'a TransferArgs,
    bounds: Option<(f64, f64)>,
}

pub fn transfer(a: &TransferArgs, diag: &mut Diagnostics) -> Result<Report, CliError> {
    let fit = ExponentialFit::new(a.lambda).map_err(CliError::from_grid)?;
    let bounds = match (a.lower, a.upper) {
        (None, None) => None,
        (Some(l), Some(h)) => Some((l, h)),
        _ => return Err(CliError::Usage("--lower and --upper go together".into())),
    };
    if a.count == 0 {
        return Err(CliError::Usage("count must be positive".into()));
    }
    let variances = sample_variances(&fit, a.count, bounds, a.seed).map_err(CliError::from_grid)?;
    let start = Instant::now();
    let barrier = magic_barrier_rmse(&variances)?;
    let elapsed = start.elapsed();
    diag.note(format!(
        "closed form over {} variances took {:.3} ms",
        variances.len(),
        elapsed.as_secs_f64() * 1e3
    ));
    let expected_variance = match bounds {
        None => fit.mean(),
        Some((l, h)) => truncated_exponential_mean(a.lambda, l, h),
    };
    let competitor = GaussianSummary::new(a.competitor_mean, a.competitor_variance.unwrap_or(barrier.variance))
        .map_err(CliError::from_grid)?;
    let verdict = improvement_criterion(&barrier, &competitor);
    let p = interference_probability(&barrier, &competitor);

    let mut table = Table::new(vec!["quantity", "value"]);
    for (k, v) in [
        ("barrier_mean", barrier.mean),
        ("barrier_variance", barrier.variance),
        ("analytic_mean", expected_variance.sqrt()),
        ("competitor_mean", competitor.mean),
        ("interference_probability", p),
        ("margin", verdict.margin),
    ] {
        table.push(vec![k.into(), num(v)]);
    }
    table.push(vec!["verdict".into(), verdict_word(&verdict).into()]);
    let result = json!({
        "count": variances.len(),
        "mean_sampled_variance": mbar_core::math::sum(variances.iter().copied()) / variances.len() as f64,
        "expected_variance": expected_variance,
        "analytic_mean": expected_variance.sqrt(),
        "mean": barrier.mean,
        "variance": barrier.variance,
        "competitor": {"mean": competitor.mean, "variance": competitor.variance},
        "interference_probability": p,
        "verdict": verdict_word(&verdict),
        "criterion": verdict,
    });
    Report::new("transfer", TransferResolved { args: a, bounds }, result, table)
}
