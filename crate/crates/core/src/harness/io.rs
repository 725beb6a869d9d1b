//! CSV tables, trajectory exports and the binary field snapshot.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::full_system::FullState;
use crate::geometry::{BoundaryField, Geometry, InteriorField};

pub const TRAJECTORY_COLUMNS: [&str; 9] = [
    "t", "u_0.25", "u_0.5", "u_0.75", "norm_u", "norm_v", "abs_delta", "abs_theta", "energy",
];

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"SLL1";

/// A numeric table rendered as CSV with shortest round-trip floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            for (k, x) in row.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                write!(out, "{x}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Config("empty CSV".into()))?;
        let columns: Vec<String> = header.split(',').map(str::to_string).collect();
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Config(format!("CSV line {}: {e}", k + 2)))?;
            if row.len() != columns.len() {
                return Err(Error::Config(format!("CSV line {} has {} fields", k + 2, row.len())));
            }
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }
}

/// Linear interpolation of nodal values at `x`, with the trace values as
/// the end points.
pub fn probe(geo: &Geometry, u: &InteriorField, x: f64) -> f64 {
    let grid = geo.grid();
    let h = grid.h();
    let n = grid.n_interior();
    let g = geo.trace(u).expect("field matches its geometry");
    let value = |k: usize| -> f64 {
        match k {
            0 => g.left,
            k if k == n + 1 => g.right,
            k => u.values()[k - 1],
        }
    };
    let s = (x / h).clamp(0.0, (n + 1) as f64);
    let k = (s.floor() as usize).min(n);
    let w = s - k as f64;
    (1.0 - w) * value(k) + w * value(k + 1)
}

/// One trajectory row from the generic quantities of any of the systems.
pub fn trajectory_row(
    geo: &Geometry,
    t: f64,
    u: &InteriorField,
    v: &InteriorField,
    delta: BoundaryField,
    theta: BoundaryField,
    energy: f64,
) -> Vec<f64> {
    let nu = geo.norms(u).expect("field matches its geometry");
    let nv = geo.norms(v).expect("field matches its geometry");
    vec![
        t,
        probe(geo, u, 0.25),
        probe(geo, u, 0.5),
        probe(geo, u, 0.75),
        nu.l2,
        nv.l2,
        delta.l2(),
        theta.l2(),
        energy,
    ]
}

pub fn full_trajectory_table(geo: &Geometry, states: &[FullState], energy: impl Fn(&FullState) -> f64) -> Table {
    let mut table = Table::new(&TRAJECTORY_COLUMNS);
    for s in states {
        table.push(trajectory_row(geo, s.t, &s.u, &s.v, s.delta, s.theta, energy(s)));
    }
    table
}

/// `"SLL1"`, `n_interior: u32`, `steps: u64`, then `steps` fields of
/// `n_interior` little-endian `f64`.
pub fn encode_snapshot(fields: &[&InteriorField]) -> Result<Vec<u8>> {
    let n = fields.first().map_or(0, |f| f.len());
    if fields.iter().any(|f| f.len() != n) {
        return Err(Error::Contract("snapshot fields have different lengths".into()));
    }
    let n32 = u32::try_from(n).map_err(|_| Error::Contract("field too long for a snapshot".into()))?;
    let mut out = Vec::with_capacity(16 + 8 * n * fields.len());
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(&n32.to_le_bytes());
    out.extend_from_slice(&(fields.len() as u64).to_le_bytes());
    for f in fields {
        for x in f.values() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<Vec<InteriorField>> {
    let bad = |why: &str| Error::Contract(format!("malformed snapshot: {why}"));
    if bytes.len() < 16 || &bytes[..4] != SNAPSHOT_MAGIC {
        return Err(bad("missing SLL1 header"));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let steps = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let body = &bytes[16..];
    if body.len() != 8 * n * steps {
        return Err(bad("body length does not match header"));
    }
    Ok(body
        .chunks_exact(8 * n.max(1))
        .take(steps)
        .map(|chunk| {
            InteriorField(
                chunk
                    .chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                    .collect(),
            )
        })
        .collect())
}
