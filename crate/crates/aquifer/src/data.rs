//! Model geometry, boundary conditions and parameter anchors, loaded from a
//! TOML description. The bundled default lives in `data/cross_section.toml`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUNDLED: &str = include_str!("../data/cross_section.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub length: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSize {
    pub nx: usize,
    pub nz: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetZone {
    pub x: [f64; 2],
    pub z: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transport {
    /// m^2/s
    pub molecular_diffusion: f64,
    pub seconds_per_year: f64,
}

/// Values (or ranges) shared by every layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shared<T> {
    pub anisotropy_k: T,
    pub theta: T,
    pub alpha_l: T,
    pub anisotropy_alpha: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    /// Prescribed heads on both lateral ends over an elevation band.
    Lateral,
    /// Prescribed head along the whole top of the domain.
    Top,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryZone {
    pub name: String,
    pub zone: usize,
    pub kind: BoundaryKind,
    /// Elevation band for lateral boundaries.
    #[serde(default)]
    pub z: Option<[f64; 2]>,
    pub mean_head: f64,
    pub gradient: f64,
    pub gradient_range: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub name: String,
    pub top: f64,
    pub bottom: f64,
    pub phi_nominal: f64,
    pub kx_nominal: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub kx_min: f64,
    pub kx_max: f64,
}

impl Layer {
    /// Longitudinal conductivity from porosity: log10(K_x) is piecewise linear
    /// in phi through the minimum, nominal and maximum anchors.
    pub fn petrofacies_kx(&self, phi: f64) -> Result<f64> {
        if !(self.phi_min..=self.phi_max).contains(&phi) {
            return Err(Error::ParameterOutOfRange {
                name: format!("phi_{}", self.name),
                value: phi,
                lower: self.phi_min,
                upper: self.phi_max,
            });
        }
        let (p0, k0, p1, k1) = if phi <= self.phi_nominal {
            (self.phi_min, self.kx_min, self.phi_nominal, self.kx_nominal)
        } else {
            (self.phi_nominal, self.kx_nominal, self.phi_max, self.kx_max)
        };
        let t = (phi - p0) / (p1 - p0);
        // Hit the anchors exactly rather than through exp/log round trips.
        if t == 0.0 {
            return Ok(k0);
        }
        if t == 1.0 {
            return Ok(k1);
        }
        Ok(10f64.powf(k0.log10() + t * (k1.log10() - k0.log10())))
    }

    pub fn thickness(&self) -> f64 {
        self.top - self.bottom
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelData {
    pub domain: Domain,
    pub grid: GridSize,
    pub target_zone: TargetZone,
    pub transport: Transport,
    pub nominal: Shared<f64>,
    pub ranges: Shared<[f64; 2]>,
    pub boundaries: Vec<BoundaryZone>,
    /// Top to bottom.
    pub layers: Vec<Layer>,
}

impl ModelData {
    /// The bundled cross-section.
    pub fn bundled() -> Self {
        Self::from_toml(BUNDLED).expect("bundled model data is valid")
    }

    pub fn bundled_toml() -> &'static str {
        BUNDLED
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let data: ModelData = toml::from_str(text)?;
        data.validate()?;
        Ok(data)
    }

    pub fn layer(&self, name: &str) -> Result<&Layer> {
        self.layers
            .iter()
            .find(|l| l.name == name)
            .ok_or_else(|| Error::UnknownLayer(name.to_string()))
    }

    /// Boundary zones ordered by zone number.
    pub fn zones(&self) -> Vec<&BoundaryZone> {
        let mut z: Vec<&BoundaryZone> = self.boundaries.iter().collect();
        z.sort_by_key(|b| b.zone);
        z
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidData(m));
        if self.domain.length <= 0.0 || self.domain.height <= 0.0 {
            return bad("domain extents must be positive".into());
        }
        if self.grid.nx == 0 || self.grid.nz == 0 {
            return bad("grid must have at least one cell per direction".into());
        }
        if self.layers.is_empty() {
            return bad("no layers".into());
        }
        // Layers must tile the vertical extent from the top down.
        let mut expected_top = self.domain.height;
        for l in &self.layers {
            if (l.top - expected_top).abs() > 1e-9 {
                return bad(format!("layer {} starts at {} instead of {}", l.name, l.top, expected_top));
            }
            if l.bottom >= l.top {
                return bad(format!("layer {} has non-positive thickness", l.name));
            }
            if !(0.0 < l.phi_min && l.phi_min < l.phi_nominal && l.phi_nominal < l.phi_max && l.phi_max < 1.0) {
                return bad(format!("layer {}: porosity anchors must satisfy 0 < min < nominal < max < 1", l.name));
            }
            if !(0.0 < l.kx_min && l.kx_min <= l.kx_nominal && l.kx_nominal <= l.kx_max) {
                return bad(format!("layer {}: conductivity anchors must be positive and ordered", l.name));
            }
            expected_top = l.bottom;
        }
        if expected_top.abs() > 1e-9 {
            return bad(format!("layers end at {expected_top} instead of 0"));
        }
        let mut zones: Vec<usize> = self.boundaries.iter().map(|b| b.zone).collect();
        zones.sort_unstable();
        if zones != (1..=self.boundaries.len()).collect::<Vec<_>>() {
            return bad("boundary zones must be numbered 1..n".into());
        }
        for b in &self.boundaries {
            if b.kind == BoundaryKind::Lateral && b.z.is_none_or(|z| z[0] >= z[1]) {
                return bad(format!("lateral boundary {} needs an elevation band", b.name));
            }
            if !(b.gradient_range[0] <= b.gradient && b.gradient <= b.gradient_range[1]) {
                return bad(format!("boundary {}: nominal gradient outside its range", b.name));
            }
        }
        let tz = &self.target_zone;
        if tz.x[0] >= tz.x[1] || tz.z[0] > tz.z[1] {
            return bad("empty target zone".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_data_is_consistent() {
        let d = ModelData::bundled();
        assert_eq!(d.layers.len(), 15);
        assert_eq!(d.boundaries.len(), 3);
        let c2 = d.layer("C2").unwrap();
        let tz = &d.target_zone;
        assert!(c2.bottom <= tz.z[0] && tz.z[1] <= c2.top);
        // Oxfordian sequence 260 m, Dogger sequence 250 m.
        let ox: f64 = ["C3ab", "L1a", "L1b", "L2a", "L2b", "L2c"]
            .iter()
            .map(|n| d.layer(n).unwrap().thickness())
            .sum();
        let dogger: f64 = ["D1", "D2", "D3", "D4", "C1"].iter().map(|n| d.layer(n).unwrap().thickness()).sum();
        assert_eq!((ox, dogger), (260.0, 250.0));
    }

    #[test]
    fn petrofacies_anchors() {
        let d = ModelData::bundled();
        let d4 = d.layer("D4").unwrap();
        assert_eq!(d4.petrofacies_kx(0.0905).unwrap(), 1.65e-5);
        assert_eq!(d4.petrofacies_kx(0.0237).unwrap(), 1.6408e-7);
        assert_eq!(d4.petrofacies_kx(0.1573).unwrap(), 3.1521e-3);
        let mid = 0.5 * (0.0237 + 0.0905);
        let expect = (1.6408e-7f64 * 1.65e-5).sqrt();
        assert!((d4.petrofacies_kx(mid).unwrap() - expect).abs() < 1e-12 * expect);
        assert!(d4.petrofacies_kx(0.2).is_err());
    }

    #[test]
    fn petrofacies_is_monotone_in_every_layer() {
        let d = ModelData::bundled();
        for l in &d.layers {
            let mut prev = 0.0;
            for s in 0..=200 {
                let phi = l.phi_min + (l.phi_max - l.phi_min) * s as f64 / 200.0;
                let k = l.petrofacies_kx(phi.min(l.phi_max)).unwrap();
                assert!(k >= prev, "{}", l.name);
                prev = k;
            }
        }
    }

    #[test]
    fn rejects_gaps_between_layers() {
        let text = ModelData::bundled_toml().replacen("bottom = 920.0", "bottom = 930.0", 1);
        assert!(matches!(ModelData::from_toml(&text), Err(Error::InvalidData(_))));
    }
}
