//! JSON snapshots of a simulation state. Every binary64 value is stored as
//! the 16-digit hex image of its bit pattern, so reading a snapshot restores
//! the state bit for bit.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::msflow::SimState;
use crate::refgeom::{GeometryParams, HeightField};
use crate::{Error, Result};

pub const FORMAT: &str = "mslab-snapshot-1";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    format: String,
    time: String,
    #[serde(rename = "R")]
    r: String,
    #[serde(rename = "R_outer")]
    r_outer: String,
    a: String,
    n_theta: usize,
    step: u64,
    dt: String,
    /// Nodal values `h(theta_j)`.
    values: Vec<String>,
    /// FFT-ordered coefficients `[re, im]`.
    coeffs: Vec<[String; 2]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub state_t: f64,
    pub step: u64,
    pub dt: f64,
    pub geometry: GeometryParams,
    pub h: HeightField,
}

pub fn encode(v: f64) -> String {
    format!("0x{:016x}", v.to_bits())
}

pub fn decode(s: &str) -> Result<f64> {
    let hex = s.strip_prefix("0x").ok_or_else(|| Error::Snapshot(format!("`{s}` lacks the 0x prefix")))?;
    if hex.len() != 16 {
        return Err(Error::Snapshot(format!("`{s}` is not a 64-bit pattern")));
    }
    u64::from_str_radix(hex, 16)
        .map(f64::from_bits)
        .map_err(|e| Error::Snapshot(format!("`{s}`: {e}")))
}

impl Snapshot {
    pub fn new(state: &SimState, dt: f64, geometry: GeometryParams) -> Self {
        Self { state_t: state.t, step: state.step, dt, geometry, h: state.h.clone() }
    }

    pub fn state(&self) -> SimState {
        SimState { t: self.state_t, h: self.h.clone(), step: self.step }
    }

    pub fn to_json(&self) -> String {
        let raw = Raw {
            format: FORMAT.into(),
            time: encode(self.state_t),
            r: encode(self.geometry.r),
            r_outer: encode(self.geometry.r_outer),
            a: encode(self.geometry.a),
            n_theta: self.h.n_theta(),
            step: self.step,
            dt: encode(self.dt),
            values: self.h.values().iter().map(|&v| encode(v)).collect(),
            coeffs: self.h.coeffs().iter().map(|c| [encode(c.re), encode(c.im)]).collect(),
        };
        serde_json::to_string_pretty(&raw).expect("plain data serializes")
    }

    /// Parses and validates a snapshot, including admissibility of `h`.
    pub fn from_json(src: &str) -> Result<Self> {
        let raw: Raw = serde_json::from_str(src).map_err(|e| Error::Snapshot(format!("schema violation: {e}")))?;
        if raw.format != FORMAT {
            return Err(Error::Snapshot(format!("unknown format `{}`", raw.format)));
        }
        if raw.values.len() != raw.n_theta || raw.coeffs.len() != raw.n_theta {
            return Err(Error::Snapshot(format!(
                "n_theta = {} but {} values and {} coefficients",
                raw.n_theta,
                raw.values.len(),
                raw.coeffs.len()
            )));
        }
        let geometry = GeometryParams::new(decode(&raw.r)?, decode(&raw.r_outer)?, decode(&raw.a)?)?;
        let values = raw.values.iter().map(|s| decode(s)).collect::<Result<Vec<_>>>()?;
        let coeffs = raw
            .coeffs
            .iter()
            .map(|[re, im]| Ok(Complex64::new(decode(re)?, decode(im)?)))
            .collect::<Result<Vec<_>>>()?;
        let h = HeightField::from_parts(values, coeffs)?;
        h.check_admissible(&geometry)?;
        let state_t = decode(&raw.time)?;
        let dt = decode(&raw.dt)?;
        if !(state_t.is_finite() && state_t >= 0.0) {
            return Err(Error::Snapshot(format!("invalid time {state_t}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Snapshot(format!("invalid time step {dt}")));
        }
        Ok(Self { state_t, step: raw.step, dt, geometry, h })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
