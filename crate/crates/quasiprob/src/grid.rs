//! Phase-space grids and their on-disk formats.
//!
//! A [`DistributionGrid`] is a rectangular (q, p) lattice of complex values
//! plus metadata (state spec, route, truncation, calibration constant,
//! timestamp). CSV output is `q,p,re,im` in q-major order; JSON embeds the
//! metadata block. Numbers are printed with 17 significant digits so every
//! binary64 value re-parses bit-identically.

use num_complex::Complex64;
use serde::Deserialize;
use thiserror::Error;

/// Route names a grid may carry in its metadata.
pub const REGISTERED_ROUTES: &[&str] = &[
    "wigner-integral",
    "wigner-parity",
    "wigner-charfn",
    "kr-direct",
    "kr-charfn",
    "kr-vacuum",
    "kr-p",
    "husimi",
    "charfn",
    "cohen-unity",
    "cohen-dirac-pair",
    "cohen-custom",
];

#[derive(Debug, Error)]
pub enum GridError {
    #[error("axis needs count >= 2 and max > min, got [{min}, {max}] x {count}")]
    BadAxis { min: f64, max: f64, count: usize },
    #[error("value count {got} does not match grid {expect}")]
    ValueCount { got: usize, expect: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("route name {0:?} is not registered")]
    UnknownRoute(String),
    #[error("malformed grid file: {0}")]
    Parse(String),
}

/// A uniform axis: `count` points from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self, GridError> {
        if count < 2 || !(max > min) || !min.is_finite() || !max.is_finite() {
            return Err(GridError::BadAxis { min, max, count });
        }
        Ok(Self { min, max, count })
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }

    pub fn value(&self, i: usize) -> f64 {
        self.min + self.step() * i as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }
}

/// Rectangular evaluation domain for grid producers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub q: Axis,
    pub p: Axis,
}

impl GridSpec {
    pub fn new(q: Axis, p: Axis) -> Self {
        Self { q, p }
    }

    pub fn square(min: f64, max: f64, count: usize) -> Result<Self, GridError> {
        let a = Axis::new(min, max, count)?;
        Ok(Self { q: a, p: a })
    }

    /// Parse `qmin,qmax,nq,pmin,pmax,np`.
    pub fn parse(text: &str) -> Result<Self, GridError> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != 6 {
            return Err(GridError::Parse(format!(
                "grid spec needs 6 comma-separated fields qmin,qmax,nq,pmin,pmax,np, got {}",
                parts.len()
            )));
        }
        let f = |s: &str| -> Result<f64, GridError> {
            s.parse().map_err(|_| GridError::Parse(format!("bad number {s:?} in grid spec")))
        };
        let n = |s: &str| -> Result<usize, GridError> {
            s.parse().map_err(|_| GridError::Parse(format!("bad count {s:?} in grid spec")))
        };
        Ok(Self {
            q: Axis::new(f(parts[0])?, f(parts[1])?, n(parts[2])?)?,
            p: Axis::new(f(parts[3])?, f(parts[4])?, n(parts[5])?)?,
        })
    }

    pub fn cell_area(&self) -> f64 {
        self.q.step() * self.p.step()
    }
}

/// Provenance carried alongside grid values.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMetadata {
    pub state: String,
    pub route: String,
    pub dim: usize,
    pub calibration: Option<Complex64>,
    pub timestamp: Option<String>,
}

/// A sampled distribution over a (q, p) lattice, values in q-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionGrid {
    pub spec: GridSpec,
    values: Vec<Complex64>,
    pub metadata: GridMetadata,
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

impl DistributionGrid {
    pub fn new(spec: GridSpec, values: Vec<Complex64>, metadata: GridMetadata) -> Result<Self, GridError> {
        let expect = spec.q.count * spec.p.count;
        if values.len() != expect {
            return Err(GridError::ValueCount { got: values.len(), expect });
        }
        if let Some(i) = values.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(GridError::NonFinite(i));
        }
        if !REGISTERED_ROUTES.contains(&metadata.route.as_str()) {
            return Err(GridError::UnknownRoute(metadata.route.clone()));
        }
        Ok(Self { spec, values, metadata })
    }

    pub fn value(&self, iq: usize, ip: usize) -> Complex64 {
        self.values[iq * self.spec.p.count + ip]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Grid sum times cell area: the lattice approximation of the total mass.
    pub fn mass(&self) -> Complex64 {
        let s: Complex64 = self.values.iter().sum();
        s * self.spec.cell_area()
    }

    /// Sum over p at fixed q index, times the p step.
    pub fn marginal_q(&self, iq: usize) -> Complex64 {
        let row: Complex64 = (0..self.spec.p.count).map(|ip| self.value(iq, ip)).sum();
        row * self.spec.p.step()
    }

    /// Sum over q at fixed p index, times the q step.
    pub fn marginal_p(&self, ip: usize) -> Complex64 {
        let col: Complex64 = (0..self.spec.q.count).map(|iq| self.value(iq, ip)).sum();
        col * self.spec.q.step()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.values.len() * 64 + 16);
        s.push_str("q,p,re,im\n");
        for iq in 0..self.spec.q.count {
            let q = self.spec.q.value(iq);
            for ip in 0..self.spec.p.count {
                let p = self.spec.p.value(ip);
                let z = self.value(iq, ip);
                s.push_str(&fmt17(q));
                s.push(',');
                s.push_str(&fmt17(p));
                s.push(',');
                s.push_str(&fmt17(z.re));
                s.push(',');
                s.push_str(&fmt17(z.im));
                s.push('\n');
            }
        }
        s
    }

    /// Reconstruct a grid from its CSV form. The CSV does not carry the
    /// metadata block, so route/state fields come back as placeholders; axes
    /// and values are recovered bit-identically.
    pub fn from_csv(text: &str) -> Result<Self, GridError> {
        let mut lines = text.lines();
        match lines.next() {
            Some("q,p,re,im") => {}
            other => return Err(GridError::Parse(format!("bad CSV header {other:?}"))),
        }
        let mut qs: Vec<f64> = Vec::new();
        let mut ps: Vec<f64> = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(GridError::Parse(format!("line {}: expected 4 columns", lineno + 2)));
            }
            let parse = |s: &str| -> Result<f64, GridError> {
                s.parse().map_err(|_| GridError::Parse(format!("line {}: bad number {s:?}", lineno + 2)))
            };
            let q = parse(cols[0])?;
            let p = parse(cols[1])?;
            if qs.last() != Some(&q) && !qs.contains(&q) {
                qs.push(q);
            }
            if qs.len() == 1 {
                ps.push(p);
            }
            values.push(Complex64::new(parse(cols[2])?, parse(cols[3])?));
        }
        if qs.len() < 2 || ps.len() < 2 {
            return Err(GridError::Parse("grid too small".into()));
        }
        let spec = GridSpec::new(
            Axis::new(qs[0], *qs.last().unwrap(), qs.len())?,
            Axis::new(ps[0], *ps.last().unwrap(), ps.len())?,
        );
        Self::new(
            spec,
            values,
            GridMetadata {
                state: String::new(),
                route: "kr-direct".into(),
                dim: 0,
                calibration: None,
                timestamp: None,
            },
        )
    }

    pub fn to_json(&self) -> String {
        let mut s = String::with_capacity(self.values.len() * 56 + 512);
        s.push_str("{\n  \"q_axis\": ");
        s.push_str(&format!(
            "{{\"min\": {}, \"max\": {}, \"count\": {}}},\n",
            fmt17(self.spec.q.min),
            fmt17(self.spec.q.max),
            self.spec.q.count
        ));
        s.push_str("  \"p_axis\": ");
        s.push_str(&format!(
            "{{\"min\": {}, \"max\": {}, \"count\": {}}},\n",
            fmt17(self.spec.p.min),
            fmt17(self.spec.p.max),
            self.spec.p.count
        ));
        s.push_str("  \"metadata\": {");
        s.push_str(&format!("\"state\": {}, ", json_string(&self.metadata.state)));
        s.push_str(&format!("\"route\": {}, ", json_string(&self.metadata.route)));
        s.push_str(&format!("\"dim\": {}, ", self.metadata.dim));
        match self.metadata.calibration {
            Some(c) => s.push_str(&format!("\"calibration\": [{}, {}], ", fmt17(c.re), fmt17(c.im))),
            None => s.push_str("\"calibration\": null, "),
        }
        match &self.metadata.timestamp {
            Some(t) => s.push_str(&format!("\"timestamp\": {}", json_string(t))),
            None => s.push_str("\"timestamp\": null"),
        }
        s.push_str("},\n  \"values\": [");
        for iq in 0..self.spec.q.count {
            if iq > 0 {
                s.push(',');
            }
            s.push_str("\n    [");
            for ip in 0..self.spec.p.count {
                if ip > 0 {
                    s.push_str(", ");
                }
                let z = self.value(iq, ip);
                s.push_str(&format!("[{}, {}]", fmt17(z.re), fmt17(z.im)));
            }
            s.push(']');
        }
        s.push_str("\n  ]\n}\n");
        s
    }

    pub fn from_json(text: &str) -> Result<Self, GridError> {
        #[derive(Deserialize)]
        struct AxisDto {
            min: f64,
            max: f64,
            count: usize,
        }
        #[derive(Deserialize)]
        struct MetaDto {
            state: String,
            route: String,
            dim: usize,
            calibration: Option<[f64; 2]>,
            timestamp: Option<String>,
        }
        #[derive(Deserialize)]
        struct Dto {
            q_axis: AxisDto,
            p_axis: AxisDto,
            metadata: MetaDto,
            values: Vec<Vec<[f64; 2]>>,
        }
        let dto: Dto = serde_json::from_str(text).map_err(|e| GridError::Parse(e.to_string()))?;
        let spec = GridSpec::new(
            Axis::new(dto.q_axis.min, dto.q_axis.max, dto.q_axis.count)?,
            Axis::new(dto.p_axis.min, dto.p_axis.max, dto.p_axis.count)?,
        );
        let mut values = Vec::with_capacity(spec.q.count * spec.p.count);
        if dto.values.len() != spec.q.count {
            return Err(GridError::Parse("row count does not match q axis".into()));
        }
        for row in &dto.values {
            if row.len() != spec.p.count {
                return Err(GridError::Parse("column count does not match p axis".into()));
            }
            for z in row {
                values.push(Complex64::new(z[0], z[1]));
            }
        }
        Self::new(
            spec,
            values,
            GridMetadata {
                state: dto.metadata.state,
                route: dto.metadata.route,
                dim: dto.metadata.dim,
                calibration: dto.metadata.calibration.map(|c| Complex64::new(c[0], c[1])),
                timestamp: dto.metadata.timestamp,
            },
        )
    }
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_grid() -> DistributionGrid {
        let spec = GridSpec::square(-1.0, 1.0, 3).unwrap();
        let values: Vec<Complex64> = (0..9)
            .map(|i| Complex64::new(0.1 * i as f64 + 0.05, -0.3 / (i as f64 + 1.0)))
            .collect();
        DistributionGrid::new(
            spec,
            values,
            GridMetadata {
                state: "fock:1".into(),
                route: "kr-direct".into(),
                dim: 32,
                calibration: Some(Complex64::new(1.0 / std::f64::consts::PI, 0.0)),
                timestamp: None,
            },
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip_bits() {
        let g = sample_grid();
        let back = DistributionGrid::from_csv(&g.to_csv()).unwrap();
        assert_eq!(back.spec, g.spec);
        for (a, b) in g.values().iter().zip(back.values()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn json_round_trip_bits_and_metadata() {
        let g = sample_grid();
        let back = DistributionGrid::from_json(&g.to_json()).unwrap();
        assert_eq!(back.spec, g.spec);
        assert_eq!(back.metadata, g.metadata);
        for (a, b) in g.values().iter().zip(back.values()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn validation_errors() {
        assert!(Axis::new(1.0, 1.0, 5).is_err());
        assert!(Axis::new(0.0, 1.0, 1).is_err());
        let spec = GridSpec::square(-1.0, 1.0, 3).unwrap();
        let meta = GridMetadata {
            state: String::new(),
            route: "bogus".into(),
            dim: 0,
            calibration: None,
            timestamp: None,
        };
        let err = DistributionGrid::new(spec, vec![Complex64::new(0.0, 0.0); 9], meta);
        assert!(matches!(err, Err(GridError::UnknownRoute(_))));
    }

    #[test]
    fn grid_spec_parse() {
        let g = GridSpec::parse("-4,4,81,-4,4,81").unwrap();
        assert_eq!(g.q.count, 81);
        assert_eq!(g.p.min, -4.0);
        assert!(GridSpec::parse("1,2,3").is_err());
        assert!(GridSpec::parse("a,4,81,-4,4,81").is_err());
    }
}
