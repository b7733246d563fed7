//! The black box behind `evaluate`: the bundled aquifer model, an analytic
//! benchmark, or an external program driven through files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use anyhow::{anyhow, bail, Context, Result};
use aquifer::{CrossSectionModel, ModelData};
use sparse_pce::models::AnalyticModel;
use sparse_pce::sampling::format_float;
use sparse_pce::RandomVector;

use crate::config::{ModelConfig, RunConfig};

pub enum Evaluator {
    Demo(Box<CrossSectionModel>),
    Analytic(AnalyticModel),
    External {
        command: String,
        names: Vec<String>,
        workdir: PathBuf,
    },
}

/// Load the aquifer model described by a `demo` model section.
pub fn demo_model(data: Option<&Path>, nx: Option<usize>, nz: Option<usize>) -> Result<CrossSectionModel> {
    let data = match data {
        Some(p) => ModelData::from_toml(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => ModelData::bundled(),
    };
    let (nx, nz) = (nx.unwrap_or(data.grid.nx), nz.unwrap_or(data.grid.nz));
    Ok(CrossSectionModel::with_resolution(data, nx, nz)?)
}

impl Evaluator {
    pub fn from_config(config: &RunConfig) -> Result<Self> {
        Ok(match &config.model {
            ModelConfig::Demo { data, nx, nz } => Evaluator::Demo(Box::new(demo_model(data.as_deref(), *nx, *nz)?)),
            ModelConfig::Ishigami { a, b } => Evaluator::Analytic(AnalyticModel::Ishigami { a: *a, b: *b }),
            ModelConfig::Gfunction { a } => Evaluator::Analytic(AnalyticModel::GFunction { a: a.clone() }),
            ModelConfig::External { command } => Evaluator::External {
                command: command.clone(),
                names: config.variables.iter().map(|v| v.name.clone()).collect(),
                workdir: config.output.dir.join("external"),
            },
        })
    }

    /// Input distribution of the model.
    pub fn random_vector(&self, config: &RunConfig) -> Result<RandomVector> {
        Ok(match self {
            Evaluator::Demo(m) => aquifer::random_vector(m.data()),
            Evaluator::Analytic(a) => a.random_vector()?,
            Evaluator::External { .. } => RandomVector::new(config.variables.clone())?,
        })
    }

    /// Response at design row `row` with inputs `x`.
    pub fn eval(&self, row: usize, x: &[f64]) -> Result<f64> {
        let y = match self {
            Evaluator::Demo(m) => m.evaluate(x)?,
            Evaluator::Analytic(a) => a.eval(x)?,
            Evaluator::External {
                command,
                names,
                workdir,
            } => run_external(command, names, workdir, row, x)?,
        };
        if !y.is_finite() {
            bail!("row {row}: non-finite response {y}");
        }
        Ok(y)
    }
}

fn run_external(command: &str, names: &[String], workdir: &Path, row: usize, x: &[f64]) -> Result<f64> {
    fs::create_dir_all(workdir)?;
    let params = workdir.join(format!("row_{row}.csv"));
    let response = workdir.join(format!("row_{row}.out"));
    let mut w = csv::Writer::from_path(&params)?;
    w.write_record(names)?;
    w.write_record(x.iter().map(|v| format_float(*v)))?;
    w.flush()?;
    drop(w);
    let _ = fs::remove_file(&response);
    let cmd = command
        .replace("{params}", &params.display().to_string())
        .replace("{response}", &response.display().to_string())
        .replace("{row}", &row.to_string());
    let out = Command::new("sh")
        .arg("-c")
        .arg(&cmd)
        .output()
        .with_context(|| format!("row {row}: launching `{cmd}`"))?;
    if !out.status.success() {
        bail!(
            "row {row}: command exited with {}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr).trim()
        );
    }
    let text = fs::read_to_string(&response).with_context(|| format!("row {row}: missing response file"))?;
    let y: f64 = text
        .trim()
        .parse()
        .map_err(|_| anyhow!("row {row}: response `{}` is not a number", text.trim()))?;
    Ok(y)
}
