//! The 78-entry parameter vector: five properties per layer, then one head
//! gradient per boundary zone.

use serde::{Deserialize, Serialize};
use sparse_pce::{Marginal, RandomVector, Variable};

use crate::data::ModelData;
use crate::error::{Error, Result};

/// Per-layer parameter prefixes, in vector order. The prefix doubles as the
/// grouping label for grouped sensitivity indices.
pub const LAYER_PREFIXES: [&str; 5] = ["phi", "AK", "theta", "alphaL", "Aalpha"];
pub const GRADIENT_PREFIX: &str = "gradH";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpec {
    pub name: String,
    pub group: String,
    pub lower: f64,
    pub upper: f64,
    pub nominal: f64,
}

impl ParameterSpec {
    fn check(&self, value: f64) -> Result<()> {
        if !(self.lower <= value && value <= self.upper) {
            return Err(Error::ParameterOutOfRange {
                name: self.name.clone(),
                value,
                lower: self.lower,
                upper: self.upper,
            });
        }
        Ok(())
    }
}

/// Names, ranges and nominal values in vector order.
pub fn parameter_specs(data: &ModelData) -> Vec<ParameterSpec> {
    let (n, r) = (&data.nominal, &data.ranges);
    let mut out = Vec::with_capacity(5 * data.layers.len() + data.boundaries.len());
    for l in &data.layers {
        let entries = [
            (l.phi_min, l.phi_max, l.phi_nominal),
            (r.anisotropy_k[0], r.anisotropy_k[1], n.anisotropy_k),
            (r.theta[0], r.theta[1], n.theta),
            (r.alpha_l[0], r.alpha_l[1], n.alpha_l),
            (r.anisotropy_alpha[0], r.anisotropy_alpha[1], n.anisotropy_alpha),
        ];
        for (prefix, (lower, upper, nominal)) in LAYER_PREFIXES.iter().zip(entries) {
            out.push(ParameterSpec {
                name: format!("{prefix}_{}", l.name),
                group: prefix.to_string(),
                lower,
                upper,
                nominal,
            });
        }
    }
    for b in data.zones() {
        out.push(ParameterSpec {
            name: format!("{GRADIENT_PREFIX}_{}", b.zone),
            group: GRADIENT_PREFIX.to_string(),
            lower: b.gradient_range[0],
            upper: b.gradient_range[1],
            nominal: b.gradient,
        });
    }
    out
}

/// Independent uniform inputs over the parameter ranges.
pub fn random_vector(data: &ModelData) -> RandomVector {
    let vars = parameter_specs(data)
        .into_iter()
        .map(|s| Variable {
            name: s.name,
            marginal: Marginal::Uniform {
                lower: s.lower,
                upper: s.upper,
            },
        })
        .collect();
    RandomVector::new(vars).expect("parameter ranges are valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub phi: f64,
    pub anisotropy_k: f64,
    /// degrees
    pub theta: f64,
    pub alpha_l: f64,
    pub anisotropy_alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    /// Same order as the layers of the model data.
    pub layers: Vec<LayerParams>,
    /// Head gradient per boundary zone, by zone number.
    pub gradients: Vec<f64>,
}

impl Parameters {
    pub fn nominal(data: &ModelData) -> Self {
        let v: Vec<f64> = parameter_specs(data).iter().map(|s| s.nominal).collect();
        Self::from_slice(data, &v).expect("nominal values lie in their ranges")
    }

    /// Unpack and range-check a parameter vector.
    pub fn from_slice(data: &ModelData, values: &[f64]) -> Result<Self> {
        let specs = parameter_specs(data);
        if values.len() != specs.len() {
            return Err(Error::ParameterCount {
                expected: specs.len(),
                got: values.len(),
            });
        }
        for (s, &v) in specs.iter().zip(values) {
            s.check(v)?;
        }
        let n = 5 * data.layers.len();
        let layers = values[..n]
            .chunks_exact(5)
            .map(|c| LayerParams {
                phi: c[0],
                anisotropy_k: c[1],
                theta: c[2],
                alpha_l: c[3],
                anisotropy_alpha: c[4],
            })
            .collect();
        Ok(Parameters {
            layers,
            gradients: values[n..].to_vec(),
        })
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .layers
            .iter()
            .flat_map(|l| [l.phi, l.anisotropy_k, l.theta, l.alpha_l, l.anisotropy_alpha])
            .collect();
        v.extend_from_slice(&self.gradients);
        v
    }
}
