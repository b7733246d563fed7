//! The subcommands as library functions. Each reads its inputs from and
//! writes its outputs to the configured output directory.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sparse_pce::regression::{generalization_error, FitDiagnostics};
use sparse_pce::sampling::format_float;
use sparse_pce::sensitivity::{
    grouped_sums, repeated_subsample_study, screen, sobol_closed, univariate_effect, Screening, StudyOptions,
    SubsampleStudy,
};
use sparse_pce::{adaptive_fit, lhs, nested_lhs_enrich, ExperimentalDesign, Marginal, ResponseScale, SobolReport, SparsePce};

use crate::config::{ModelConfig, RunConfig};
use crate::evaluator::{demo_model, Evaluator};

pub const DESIGN_FILE: &str = "design.csv";
pub const ENRICHMENT_FILE: &str = "enrichment.csv";

/// Responses file that goes with a design file.
pub fn responses_path(design: &Path) -> PathBuf {
    let stem = design.file_stem().and_then(|s| s.to_str()).unwrap_or("design");
    design.with_file_name(format!("{stem}_responses.csv"))
}

/// Who produced a report, from what.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub design_seed: u64,
    pub enrich_seed: Option<u64>,
    pub scale: ResponseScale,
    pub parallel: bool,
}

impl Provenance {
    pub fn new(config: &RunConfig, scale: ResponseScale) -> Self {
        Provenance {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config.hash(),
            design_seed: config.design.seed,
            enrich_seed: (config.design.n_enrich > 0).then_some(config.design.enrich_seed),
            scale,
            parallel: sparse_pce::parallel_enabled(),
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

// ---------------------------------------------------------------- sample

#[derive(Debug, Clone)]
pub struct SampleOutcome {
    pub design: PathBuf,
    pub enrichment: Option<PathBuf>,
}

pub fn cmd_sample(config: &RunConfig) -> Result<SampleOutcome> {
    let dir = &config.output.dir;
    fs::create_dir_all(dir)?;
    let eval = Evaluator::from_config(config)?;
    let rv = eval.random_vector(config)?;
    let design = lhs(config.design.n, &rv, config.design.seed)?;
    let design_path = dir.join(DESIGN_FILE);
    design.write_csv_file(&design_path)?;
    let enrichment = if config.design.n_enrich > 0 {
        let extra = nested_lhs_enrich(&design, config.design.n_enrich, &rv, config.design.enrich_seed)?;
        let path = dir.join(ENRICHMENT_FILE);
        extra.write_csv_file(&path)?;
        Some(path)
    } else {
        None
    };
    Ok(SampleOutcome {
        design: design_path,
        enrichment,
    })
}

// ---------------------------------------------------------------- evaluate

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationOutcome {
    pub responses: Vec<f64>,
    /// `(row, message)` for rows without a response.
    pub failures: Vec<(usize, String)>,
    /// Rows evaluated by this call (the others were already done).
    pub computed: usize,
}

type RowResult = std::result::Result<f64, String>;

fn parse_row_line(line: &str) -> Option<(usize, RowResult)> {
    let mut parts = line.splitn(3, ',');
    let row = parts.next()?.trim().parse().ok()?;
    let value = parts.next()?.trim();
    let error = parts.next().unwrap_or("").trim();
    match value.parse::<f64>() {
        Ok(y) if y.is_finite() => Some((row, Ok(y))),
        _ => Some((row, Err(error.trim_matches('"').to_string()))),
    }
}

/// Rows already evaluated: the final responses file first, then the journal
/// of an interrupted run.
fn load_previous(path: &Path, journal: &Path) -> Result<BTreeMap<usize, RowResult>> {
    let mut done = BTreeMap::new();
    for p in [path, journal] {
        if let Ok(f) = File::open(p) {
            for line in BufReader::new(f).lines().skip(usize::from(p == path)) {
                if let Some((row, r)) = parse_row_line(&line?) {
                    done.insert(row, r);
                }
            }
        }
    }
    Ok(done)
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "'").replace('\n', " "))
}

fn row_line(row: usize, r: &RowResult) -> String {
    match r {
        Ok(y) => format!("{row},{},\n", format_float(*y)),
        Err(e) => format!("{row},NaN,{}\n", quote(e)),
    }
}

fn run_rows(eval: &Evaluator, rows: Vec<(usize, Vec<f64>)>, workers: usize, sink: &Mutex<File>) -> Result<Vec<(usize, RowResult)>> {
    let task = |(row, x): &(usize, Vec<f64>)| -> (usize, RowResult) {
        let r = eval.eval(*row, x).map_err(|e| format!("{e:#}"));
        let mut f = sink.lock().expect("journal lock");
        // Journal write failures only cost resumability, never results.
        let _ = f.write_all(row_line(*row, &r).as_bytes()).and_then(|_| f.flush());
        (*row, r)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
        Ok(pool.install(|| rows.par_iter().map(task).collect()))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        Ok(rows.iter().map(task).collect())
    }
}

/// Evaluate every row of `design` not yet present in `out`, then rewrite
/// `out` as `row,response,error` in row order.
pub fn evaluate_design(eval: &Evaluator, design: &ExperimentalDesign, out: &Path, workers: usize) -> Result<EvaluationOutcome> {
    let journal = out.with_extension("journal");
    let mut done = load_previous(out, &journal)?;
    done.retain(|&row, r| row < design.len() && r.is_ok());
    let pending: Vec<(usize, Vec<f64>)> = (0..design.len())
        .filter(|r| !done.contains_key(r))
        .map(|r| (r, design.point(r).to_vec()))
        .collect();
    let computed = pending.len();
    if computed > 0 {
        let sink = Mutex::new(OpenOptions::new().create(true).append(true).open(&journal)?);
        for (row, r) in run_rows(eval, pending, workers, &sink)? {
            done.insert(row, r);
        }
    }
    let mut text = String::from("row,response,error\n");
    let mut responses = Vec::with_capacity(design.len());
    let mut failures = Vec::new();
    for (row, r) in &done {
        text.push_str(&row_line(*row, r));
        match r {
            Ok(y) => responses.push(*y),
            Err(e) => {
                responses.push(f64::NAN);
                failures.push((*row, e.clone()));
            }
        }
    }
    fs::write(out, text)?;
    let _ = fs::remove_file(&journal);
    Ok(EvaluationOutcome {
        responses,
        failures,
        computed,
    })
}

/// Read a responses file written by [`evaluate_design`]; every row must have a value.
pub fn read_responses(path: &Path, n: usize) -> Result<Vec<f64>> {
    let f = File::open(path).with_context(|| format!("reading {} (run `evaluate` first)", path.display()))?;
    let mut y = vec![f64::NAN; n];
    for line in BufReader::new(f).lines().skip(1) {
        if let Some((row, r)) = parse_row_line(&line?) {
            if row < n {
                y[row] = r.unwrap_or(f64::NAN);
            }
        }
    }
    if let Some(row) = y.iter().position(|v| !v.is_finite()) {
        bail!("{}: no response for row {row}; rerun `evaluate`", path.display());
    }
    Ok(y)
}

pub fn cmd_evaluate(config: &RunConfig, designs: &[PathBuf]) -> Result<Vec<EvaluationOutcome>> {
    let eval = Evaluator::from_config(config)?;
    let rv = eval.random_vector(config)?;
    let mut out = Vec::new();
    for path in designs {
        let design = ExperimentalDesign::read_csv_file(path).with_context(|| format!("reading {}", path.display()))?;
        if design.names() != rv.names() {
            bail!("{}: columns do not match the model inputs", path.display());
        }
        out.push(evaluate_design(&eval, &design, &responses_path(path), config.evaluate.workers)?);
    }
    Ok(out)
}

/// Design files produced by `sample` for this configuration.
pub fn default_designs(config: &RunConfig) -> Vec<PathBuf> {
    let dir = &config.output.dir;
    let mut v = vec![dir.join(DESIGN_FILE)];
    if config.design.n_enrich > 0 {
        v.push(dir.join(ENRICHMENT_FILE));
    }
    v
}

fn load_evaluated(path: &Path) -> Result<ExperimentalDesign> {
    let d = ExperimentalDesign::read_csv_file(path).with_context(|| format!("reading {}", path.display()))?;
    let y = read_responses(&responses_path(path), d.len())?;
    Ok(d.with_responses(y)?)
}

// ---------------------------------------------------------------- fit

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub provenance: Provenance,
    /// `design` or `joint` (design plus enrichment).
    pub training: String,
    pub n_train: usize,
    pub n_validation: usize,
    pub diagnostics: FitDiagnostics,
    pub pce: SparsePce,
}

#[derive(Debug, Clone, Default)]
pub struct FitOverrides {
    pub scale: Option<ResponseScale>,
    pub joint: Option<bool>,
    /// Report file stem (default `pce`).
    pub name: Option<String>,
}

pub fn cmd_fit(config: &RunConfig, overrides: &FitOverrides) -> Result<(PathBuf, FitReport)> {
    let eval = Evaluator::from_config(config)?;
    let rv = eval.random_vector(config)?;
    let mut fit = config.fit.clone();
    if let Some(s) = overrides.scale {
        fit.scale = s;
    }
    if let Some(j) = overrides.joint {
        fit.joint = j;
    }
    let dir = &config.output.dir;
    let design = load_evaluated(&dir.join(DESIGN_FILE))?;
    let enrichment = if config.design.n_enrich > 0 {
        Some(load_evaluated(&dir.join(ENRICHMENT_FILE))?)
    } else if fit.joint {
        bail!("joint fitting needs an enrichment set");
    } else {
        None
    };
    let (train, validation) = match (&enrichment, fit.joint) {
        (Some(e), true) => (design.union(e)?, None),
        (e, _) => (design, e.clone()),
    };
    let (mut pce, diagnostics) = adaptive_fit(&train, &rv, &fit.options())?;
    if let Some(v) = &validation {
        let e = generalization_error(&pce, v)?;
        pce.set_err_gen(e);
    }
    let report = FitReport {
        provenance: Provenance::new(config, fit.scale),
        training: if fit.joint { "joint" } else { "design" }.into(),
        n_train: train.len(),
        n_validation: validation.as_ref().map_or(0, |v| v.len()),
        diagnostics,
        pce,
    };
    let path = dir.join(format!("{}.json", overrides.name.as_deref().unwrap_or("pce")));
    write_json(&path, &report)?;
    Ok((path, report))
}

// ---------------------------------------------------------------- sobol

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub group: String,
    pub members: Vec<String>,
    /// Sum of member first-order indices.
    pub first_order_sum: f64,
    /// Closed index: variance share of terms involving only members.
    pub closed: f64,
    pub total_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolOutput {
    pub provenance: Provenance,
    pub report: SobolReport,
    pub screening: Screening,
    pub groups: Vec<GroupRow>,
    pub top_first: Vec<(String, f64)>,
    pub top_total: Vec<(String, f64)>,
}

/// Group label per variable plus groups declared without any present variable.
fn grouping(spec: &str, names: &[String]) -> Result<(Vec<String>, Vec<String>)> {
    match spec {
        "prefix" => Ok((names.iter().map(|n| n.split('_').next().unwrap_or(n).to_string()).collect(), vec![])),
        "none" => Ok((names.to_vec(), vec![])),
        path => {
            let mut r = csv::Reader::from_path(path).with_context(|| format!("reading grouping file {path}"))?;
            let mut map = BTreeMap::new();
            let mut declared = Vec::new();
            for rec in r.records() {
                let rec = rec?;
                let (v, g) = (rec.get(0).unwrap_or("").trim(), rec.get(1).unwrap_or("").trim());
                map.insert(v.to_string(), g.to_string());
                if !declared.contains(&g.to_string()) {
                    declared.push(g.to_string());
                }
            }
            let labels = names
                .iter()
                .map(|n| map.get(n).cloned().unwrap_or_else(|| "ungrouped".into()))
                .collect();
            Ok((labels, declared))
        }
    }
}

fn effect_grid(m: &Marginal, points: usize) -> Vec<f64> {
    let (lo, hi) = match *m {
        Marginal::Uniform { lower, upper } => (lower, upper),
        Marginal::Gaussian { mean, std } => (mean - 3.0 * std, mean + 3.0 * std),
    };
    let n = points.max(2);
    (0..n)
        .map(|k| {
            let t = k as f64 / (n - 1) as f64;
            // lo + (hi - lo) can land one ulp above hi.
            (lo * (1.0 - t) + hi * t).clamp(lo, hi)
        })
        .collect()
}

fn write_pairs(path: &Path, header: [&str; 2], rows: &[(String, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for (n, v) in rows {
        w.write_record([n.clone(), format_float(*v)])?;
    }
    w.flush()?;
    Ok(())
}

/// Directory holding the sensitivity outputs of a fit report.
pub fn sobol_dir(pce_path: &Path) -> PathBuf {
    let stem = pce_path.file_stem().and_then(|s| s.to_str()).unwrap_or("pce");
    pce_path.with_file_name(format!("{stem}_sobol"))
}

pub fn sobol_output(config: &RunConfig, fit: &FitReport) -> Result<SobolOutput> {
    let pce = &fit.pce;
    let s = &config.sensitivity;
    let report = SobolReport::new(pce, s.threshold);
    let (labels, declared) = grouping(&s.grouping, &report.names)?;
    let firsts = grouped_sums(&report, &labels)?;
    let mut order: Vec<String> = firsts.iter().map(|g| g.0.clone()).collect();
    for g in declared {
        if !order.contains(&g) {
            order.push(g);
        }
    }
    let groups = order
        .into_iter()
        .map(|g| {
            let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == g).collect();
            GroupRow {
                first_order_sum: members.iter().map(|&i| report.first_order[i]).sum(),
                total_sum: members.iter().map(|&i| report.total[i]).sum(),
                closed: if members.is_empty() { 0.0 } else { sobol_closed(pce, &members) },
                members: members.iter().map(|&i| report.names[i].clone()).collect(),
                group: g,
            }
        })
        .collect();
    let mut by_first: Vec<usize> = (0..report.names.len()).collect();
    by_first.sort_by(|&a, &b| report.first_order[b].total_cmp(&report.first_order[a]));
    let top_first = by_first
        .into_iter()
        .take(s.top)
        .map(|i| (report.names[i].clone(), report.first_order[i]))
        .collect();
    let top_total = report
        .top(s.top)
        .into_iter()
        .map(|i| (report.names[i].clone(), report.total[i]))
        .collect();
    Ok(SobolOutput {
        provenance: fit.provenance.clone(),
        screening: screen(&report, s.threshold),
        report,
        groups,
        top_first,
        top_total,
    })
}

pub fn cmd_sobol(config: &RunConfig, pce_path: &Path) -> Result<SobolOutput> {
    let fit: FitReport = read_json(pce_path)?;
    let out = sobol_output(config, &fit)?;
    let dir = sobol_dir(pce_path);
    fs::create_dir_all(dir.join("effects"))?;
    write_json(&dir.join("sobol.json"), &out)?;
    out.report.write_indices_csv(File::create(dir.join("indices.csv"))?)?;
    out.report.write_second_order_csv(File::create(dir.join("second_order.csv"))?)?;
    write_pairs(&dir.join("top_first_order.csv"), ["variable", "first_order"], &out.top_first)?;
    write_pairs(&dir.join("top_total.csv"), ["variable", "total"], &out.top_total)?;
    let mut w = csv::Writer::from_path(dir.join("groups.csv"))?;
    w.write_record(["group", "members", "first_order_sum", "closed", "total_sum"])?;
    for g in &out.groups {
        w.write_record([
            g.group.clone(),
            g.members.len().to_string(),
            format_float(g.first_order_sum),
            format_float(g.closed),
            format_float(g.total_sum),
        ])?;
    }
    w.flush()?;
    let rv = fit.pce.input();
    for (name, _) in &out.top_total {
        let i = rv.index_of(name).expect("name from the same input");
        let effect = univariate_effect(&fit.pce, i, &effect_grid(rv.marginal(i), config.sensitivity.effect_points))?;
        let mut w = csv::Writer::from_path(dir.join("effects").join(format!("{name}.csv")))?;
        w.write_record([name.as_str(), "effect"])?;
        for (x, v) in effect.grid.iter().zip(&effect.values) {
            w.write_record([format_float(*x), format_float(*v)])?;
        }
        w.flush()?;
    }
    Ok(out)
}

// ---------------------------------------------------------------- study

pub fn cmd_study(config: &RunConfig) -> Result<SubsampleStudy> {
    let Some(sc) = &config.study else {
        bail!("no [study] section in the configuration");
    };
    let eval = Evaluator::from_config(config)?;
    let rv = eval.random_vector(config)?;
    let dir = &config.output.dir;
    let design = load_evaluated(&dir.join(DESIGN_FILE))?;
    let opts = StudyOptions {
        subset_size: sc.subset_size,
        repetitions: sc.repetitions,
        seed: sc.seed,
        fit: config.fit.options(),
    };
    let study = repeated_subsample_study(&design, &rv, &opts)?;
    study.write_stats_csv(File::create(dir.join("study.csv"))?)?;
    let mut w = csv::Writer::from_path(dir.join("study_totals.csv"))?;
    w.write_record(std::iter::once("repetition".to_string()).chain(study.names.iter().cloned()))?;
    for (r, t) in study.totals.iter().enumerate() {
        w.write_record(std::iter::once(r.to_string()).chain(t.iter().map(|v| format_float(*v))))?;
    }
    w.flush()?;
    Ok(study)
}

// ---------------------------------------------------------------- demo

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoSummary {
    pub response_years: f64,
    pub seconds_per_year: f64,
    pub outflow_fractions: Vec<(String, f64)>,
    pub budget: aquifer::OutflowBudget,
    pub flow_iterations: usize,
    pub lifetime_iterations: usize,
    pub cells: usize,
}

/// Nominal run of the aquifer model with field export.
pub fn cmd_demo(config: Option<&RunConfig>, dir: &Path) -> Result<DemoSummary> {
    let model = match config.map(|c| &c.model) {
        Some(ModelConfig::Demo { data, nx, nz }) => demo_model(data.as_deref(), *nx, *nz)?,
        _ => demo_model(None, None, None)?,
    };
    fs::create_dir_all(dir)?;
    let s = model.run(&model.nominal())?;
    model.write_field_csv(&s, File::create(dir.join("field.csv"))?)?;
    let summary = DemoSummary {
        response_years: s.response,
        seconds_per_year: model.data().transport.seconds_per_year,
        outflow_fractions: model.outflow_fractions(&s.budget),
        budget: s.budget.clone(),
        flow_iterations: s.flow.iterations,
        lifetime_iterations: s.mle.iterations,
        cells: model.grid().len(),
    };
    write_json(&dir.join("demo.json"), &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------- full

#[derive(Debug, Clone)]
pub struct FullOutcome {
    pub fit: FitReport,
    pub sobol: SobolOutput,
    pub study: Option<SubsampleStudy>,
}

/// sample, evaluate, fit, sobol and (when configured) study.
pub fn cmd_full(config: &RunConfig) -> Result<FullOutcome> {
    cmd_sample(config)?;
    for o in cmd_evaluate(config, &default_designs(config))? {
        if !o.failures.is_empty() {
            bail!("{} rows failed (first: row {}: {}); rerun to retry", o.failures.len(), o.failures[0].0, o.failures[0].1);
        }
    }
    let (path, fit) = cmd_fit(config, &FitOverrides::default())?;
    let sobol = cmd_sobol(config, &path)?;
    let study = match config.study {
        Some(_) => Some(cmd_study(config)?),
        None => None,
    };
    Ok(FullOutcome { fit, sobol, study })
}
