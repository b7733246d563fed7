//! End-to-end runs of the subcommands on small problems.

use std::fs;
use std::path::Path;
use std::process::Command;

use pcesa::config::RunConfig;
use pcesa::pipeline::{self, FitOverrides, FitReport};
use sparse_pce::basis::MultiIndex;
use sparse_pce::ResponseScale;

fn config(dir: &Path, body: &str) -> RunConfig {
    let text = format!("{body}\n[output]\ndir = \"{}\"\n", dir.display());
    RunConfig::from_toml(&text).unwrap()
}

fn read_column(path: &Path, col: usize) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap()[col].to_string()).collect()
}

#[test]
fn sample_is_reproducible_and_stratified() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let body = "[design]\nn = 4\nseed = 9\n[model]\nkind = \"ishigami\"";
    let pa = pipeline::cmd_sample(&config(a.path(), body)).unwrap().design;
    let pb = pipeline::cmd_sample(&config(b.path(), body)).unwrap().design;
    assert_eq!(fs::read(&pa).unwrap(), fs::read(&pb).unwrap());
    for col in 0..3 {
        let mut strata: Vec<usize> = read_column(&pa, col)
            .iter()
            .map(|v| {
                let x: f64 = v.parse().unwrap();
                ((x + std::f64::consts::PI) / (2.0 * std::f64::consts::PI) * 4.0).floor() as usize
            })
            .collect();
        strata.sort_unstable();
        assert_eq!(strata, vec![0, 1, 2, 3]);
    }
}

#[test]
fn demo_evaluation_of_nominal_row() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), "[model]\nkind = \"demo\"");
    let model = aquifer::CrossSectionModel::bundled();
    let names: Vec<String> = model.parameter_specs().iter().map(|s| s.name.clone()).collect();
    let path = dir.path().join("nominal.csv");
    let mut w = csv::Writer::from_path(&path).unwrap();
    w.write_record(&names).unwrap();
    w.write_record(model.nominal().iter().map(|v| format!("{v:e}"))).unwrap();
    w.flush().unwrap();
    drop(w);
    let out = pipeline::cmd_evaluate(&c, std::slice::from_ref(&path)).unwrap();
    assert_eq!(out[0].responses.len(), 1);
    assert!((40_000.0..=200_000.0).contains(&out[0].responses[0]));
}

#[test]
fn empty_design_gives_empty_responses() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), "[model]\nkind = \"ishigami\"");
    let path = dir.path().join("empty.csv");
    fs::write(&path, "x1,x2,x3\n").unwrap();
    let out = pipeline::cmd_evaluate(&c, std::slice::from_ref(&path)).unwrap();
    assert!(out[0].responses.is_empty());
    assert_eq!(fs::read_to_string(pipeline::responses_path(&path)).unwrap(), "row,response,error\n");
}

const TWO_VARS: &str = "[[variables]]\nname = \"a\"\nkind = \"uniform\"\nlower = -1.0\nupper = 1.0\n\
[[variables]]\nname = \"b\"\nkind = \"uniform\"\nlower = -1.0\nupper = 1.0\n";

#[test]
fn external_constant_command() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("[design]\nn = 6\n[model]\nkind = \"external\"\ncommand = \"echo 3.5 > {{response}} # {{params}}\"\n{TWO_VARS}");
    let c = config(dir.path(), &body);
    pipeline::cmd_sample(&c).unwrap();
    let out = pipeline::cmd_evaluate(&c, &pipeline::default_designs(&c)).unwrap();
    assert_eq!(out[0].responses, vec![3.5; 6]);
}

#[test]
fn failed_rows_are_recorded_and_retried() {
    let dir = tempfile::tempdir().unwrap();
    let flag = dir.path().join("flag");
    let command = format!(
        "if [ {{row}} = 2 ] && [ ! -f {f} ]; then touch {f}; exit 3; fi; echo 1.25 > {{response}} # {{params}}",
        f = flag.display()
    );
    let body = format!("[design]\nn = 5\n[model]\nkind = \"external\"\ncommand = \"{command}\"\n{TWO_VARS}");
    let c = config(dir.path(), &body);
    pipeline::cmd_sample(&c).unwrap();
    let designs = pipeline::default_designs(&c);
    let first = pipeline::cmd_evaluate(&c, &designs).unwrap().remove(0);
    assert_eq!(first.computed, 5);
    assert_eq!(first.failures.len(), 1);
    assert_eq!(first.failures[0].0, 2);
    assert!(first.failures[0].1.contains("exit"));
    assert!(first.responses[2].is_nan());
    let second = pipeline::cmd_evaluate(&c, &designs).unwrap().remove(0);
    assert_eq!(second.computed, 1);
    assert!(second.failures.is_empty());
    assert_eq!(second.responses, vec![1.25; 5]);
}

#[test]
fn interrupted_run_resumes_from_journal() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), "[design]\nn = 8\n[model]\nkind = \"ishigami\"");
    let designs = pipeline::cmd_sample(&c).map(|o| vec![o.design]).unwrap();
    let full = pipeline::cmd_evaluate(&c, &designs).unwrap().remove(0);
    // Leave a journal holding three rows, as a killed run would.
    let responses = pipeline::responses_path(&designs[0]);
    fs::remove_file(&responses).unwrap();
    let journal: String = [5usize, 0, 3]
        .iter()
        .map(|&r| format!("{r},{:.16e},\n", full.responses[r]))
        .collect();
    fs::write(responses.with_extension("journal"), journal).unwrap();
    let resumed = pipeline::cmd_evaluate(&c, &designs).unwrap().remove(0);
    assert_eq!(resumed.computed, 5);
    assert_eq!(resumed.responses, full.responses);
    assert!(!responses.with_extension("journal").exists());
}

#[test]
fn fit_variants_match_the_three_workflows() {
    let dir = tempfile::tempdir().unwrap();
    let body = "[design]\nn = 120\nn_enrich = 40\n[model]\nkind = \"gfunction\"\na = [0.0, 1.0, 9.0]\n[fit]\nq = 1.0\np_max = 6";
    let c = config(dir.path(), body);
    pipeline::cmd_sample(&c).unwrap();
    pipeline::cmd_evaluate(&c, &pipeline::default_designs(&c)).unwrap();
    let named = |name: &str, scale, joint| FitOverrides {
        scale: Some(scale),
        joint: Some(joint),
        name: Some(name.into()),
    };
    let (_, a) = pipeline::cmd_fit(&c, &named("pce_a", ResponseScale::Original, false)).unwrap();
    let (_, b) = pipeline::cmd_fit(&c, &named("pce_b", ResponseScale::Log, false)).unwrap();
    let (path_c, cc) = pipeline::cmd_fit(&c, &named("pce_c", ResponseScale::Original, true)).unwrap();
    assert_eq!((a.n_train, a.n_validation, a.training.as_str()), (120, 40, "design"));
    assert!(a.pce.err_gen().is_some() && b.pce.err_gen().is_some());
    assert_eq!(b.pce.scale(), ResponseScale::Log);
    assert_eq!(b.provenance.scale, ResponseScale::Log);
    assert_eq!((cc.n_train, cc.n_validation, cc.training.as_str()), (160, 0, "joint"));
    assert!(cc.pce.err_gen().is_none());
    let reread: FitReport = serde_json::from_str(&fs::read_to_string(path_c).unwrap()).unwrap();
    assert_eq!(reread, cc);
    assert_eq!(a.provenance.config_hash, c.hash());
}

#[test]
fn single_degree_range() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), "[design]\nn = 30\n[model]\nkind = \"ishigami\"\n[fit]\np_min = 1\np_max = 1");
    pipeline::cmd_sample(&c).unwrap();
    pipeline::cmd_evaluate(&c, &pipeline::default_designs(&c)).unwrap();
    let (_, r) = pipeline::cmd_fit(&c, &FitOverrides::default()).unwrap();
    assert_eq!(r.diagnostics.rows.len(), 1);
    assert_eq!(r.pce.degree(), 1);
}

#[test]
fn external_sparse_truth_is_recovered() {
    let dir = tempfile::tempdir().unwrap();
    // y = 1 + 2a + 0.5ab, computed by awk from the parameter file.
    let command = "awk -F, 'NR==2 {printf \\\"%.17g\\\", 1 + 2*$1 + 0.5*$1*$2}' {params} > {response}";
    let body = format!("[design]\nn = 40\n[model]\nkind = \"external\"\ncommand = \"{command}\"\n[fit]\nq = 1.0\np_max = 3\n{TWO_VARS}");
    let c = config(dir.path(), &body);
    pipeline::cmd_sample(&c).unwrap();
    let ev = pipeline::cmd_evaluate(&c, &pipeline::default_designs(&c)).unwrap();
    assert!(ev[0].failures.is_empty(), "{:?}", ev[0].failures);
    let (_, r) = pipeline::cmd_fit(&c, &FitOverrides::default()).unwrap();
    let support: Vec<Vec<usize>> = r
        .pce
        .active_set()
        .iter()
        .zip(r.pce.coefficients())
        .filter(|(_, c)| c.abs() > 1e-8)
        .map(|(a, _)| vec![a.degree_of(0), a.degree_of(1)])
        .collect();
    let mut support = support;
    support.sort();
    assert_eq!(support, vec![vec![0, 0], vec![1, 0], vec![1, 1]]);
    // Coefficient of psi_1(a) psi_1(b) = 3 a b is 0.5 / 3.
    let c11 = r.pce.coefficient(&MultiIndex::from_dense(&[1, 1]));
    assert!((c11 - 0.5 / 3.0).abs() < 1e-9);
}

#[test]
fn sobol_outputs_and_grouping_file() {
    let dir = tempfile::tempdir().unwrap();
    let groups = dir.path().join("groups.csv");
    fs::write(&groups, "variable,group\nx1,trig\nx3,trig\nx2,square\nx9,phantom\n").unwrap();
    let body = format!(
        "[design]\nn = 200\n[model]\nkind = \"ishigami\"\n[fit]\nq = 1.0\np_max = 12\n[sensitivity]\ngrouping = \"{}\"\ntop = 2",
        groups.display()
    );
    let c = config(dir.path(), &body);
    pipeline::cmd_sample(&c).unwrap();
    pipeline::cmd_evaluate(&c, &pipeline::default_designs(&c)).unwrap();
    let (path, _) = pipeline::cmd_fit(&c, &FitOverrides::default()).unwrap();
    let out = pipeline::cmd_sobol(&c, &path).unwrap();
    let row = |g: &str| out.groups.iter().find(|r| r.group == g).unwrap().clone();
    assert_eq!(row("phantom").first_order_sum, 0.0);
    assert_eq!(row("phantom").closed, 0.0);
    let trig = row("trig");
    assert!((trig.first_order_sum - 0.3139).abs() < 0.02);
    assert!((trig.closed - (0.3139 + 0.2437)).abs() < 0.03);
    assert_eq!(out.top_total.len(), 2);
    let sd = pipeline::sobol_dir(&path);
    for f in ["sobol.json", "indices.csv", "second_order.csv", "top_first_order.csv", "top_total.csv", "groups.csv"] {
        assert!(sd.join(f).exists(), "{f}");
    }
    assert_eq!(read_column(&sd.join("effects").join("x1.csv"), 0).len(), 51);
}

#[test]
fn study_with_one_repetition() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        dir.path(),
        "[design]\nn = 80\n[model]\nkind = \"ishigami\"\n[fit]\nq = 1.0\np_max = 6\n[study]\nsubset_size = 60\nrepetitions = 1",
    );
    pipeline::cmd_sample(&c).unwrap();
    pipeline::cmd_evaluate(&c, &pipeline::default_designs(&c)).unwrap();
    let s = pipeline::cmd_study(&c).unwrap();
    assert_eq!(s.totals.len(), 1);
    assert!(s.stats.iter().all(|b| b.q25 == b.q75));
    assert_eq!(read_column(&dir.path().join("study_totals.csv"), 0), vec!["0"]);
    let header = fs::read_to_string(dir.path().join("study.csv")).unwrap();
    assert!(header.starts_with("variable,min,q25,median,q75,max"));
}

#[test]
fn full_pipeline_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        dir.path(),
        "[design]\nn = 60\nn_enrich = 20\n[model]\nkind = \"ishigami\"\n[fit]\nq = 1.0\np_max = 6\n[study]\nsubset_size = 40\nrepetitions = 3",
    );
    let files = ["design.csv", "enrichment.csv", "pce.json", "pce_sobol/sobol.json", "pce_sobol/indices.csv", "study.csv"];
    pipeline::cmd_full(&c).unwrap();
    let first: Vec<Vec<u8>> = files.iter().map(|f| fs::read(dir.path().join(f)).unwrap()).collect();
    for f in fs::read_dir(dir.path()).unwrap() {
        let p = f.unwrap().path();
        if p.is_dir() {
            fs::remove_dir_all(p).unwrap();
        } else {
            fs::remove_file(p).unwrap();
        }
    }
    pipeline::cmd_full(&c).unwrap();
    for (f, bytes) in files.iter().zip(first) {
        assert_eq!(fs::read(dir.path().join(f)).unwrap(), bytes, "{f}");
    }
}

#[test]
fn demo_writes_field_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let s = pipeline::cmd_demo(None, dir.path()).unwrap();
    assert!((40_000.0..=200_000.0).contains(&s.response_years));
    assert_eq!(read_column(&dir.path().join("field.csv"), 0).len(), s.cells);
    assert!(dir.path().join("demo.json").exists());
}

#[test]
fn binary_runs_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "[design]\nn = 50\n[model]\nkind = \"ishigami\"\n[fit]\nq = 1.0\np_max = 5\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_pcesa"))
        .args(["full", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    assert!(out.join("pce_sobol").join("indices.csv").exists());
    let bad = Command::new(env!("CARGO_BIN_EXE_pcesa"))
        .args(["fit", "--config"])
        .arg(dir.path().join("missing.toml"))
        .output()
        .unwrap();
    assert!(!bad.status.success());
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e:#}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 4);
}
