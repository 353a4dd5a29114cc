//! Deterministic text formats: transport plans and dual potentials as CSV,
//! reflector meshes as Wavefront OBJ.
//!
//! All floats are written with 17 significant digits so a rerun of the same
//! pipeline produces byte-identical files and a read-back loses nothing.

use std::fmt::Write as _;

use crate::transport::{DualPotentials, TransportPlan};
use crate::{Error, Result};

/// 17 significant digits, enough to round-trip any f64 exactly.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Domain(format!("bad number {s:?}: {e}")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|e| Error::Domain(format!("bad index {s:?}: {e}")))
}

/// `i,j,mass` rows, one per plan entry, in solver order.
pub fn plan_to_csv(plan: &TransportPlan) -> String {
    let mut out = String::from("i,j,mass\n");
    for &(i, j, mass) in &plan.entries {
        let _ = writeln!(out, "{i},{j},{}", fmt_g17(mass));
    }
    out
}

pub fn plan_from_csv(text: &str) -> Result<TransportPlan> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Domain("empty plan CSV".into()))?;
    if header.trim() != "i,j,mass" {
        return Err(Error::Domain(format!("bad plan CSV header: {header:?}")));
    }
    let mut entries = Vec::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(Error::Domain(format!("bad plan row: {line:?}")));
        }
        entries.push((parse_usize(f[0])?, parse_usize(f[1])?, parse_f64(f[2])?));
    }
    Ok(TransportPlan { entries })
}

/// `node_kind,index,value` rows: all sources then all targets.
pub fn potentials_to_csv(pot: &DualPotentials) -> String {
    let mut out = String::from("node_kind,index,value\n");
    for (i, r) in pot.r.iter().enumerate() {
        let _ = writeln!(out, "source,{i},{}", fmt_g17(*r));
    }
    for (j, z) in pot.zeta.iter().enumerate() {
        let _ = writeln!(out, "target,{j},{}", fmt_g17(*z));
    }
    out
}

pub fn potentials_from_csv(text: &str) -> Result<DualPotentials> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Domain("empty potentials CSV".into()))?;
    if header.trim() != "node_kind,index,value" {
        return Err(Error::Domain(format!(
            "bad potentials CSV header: {header:?}"
        )));
    }
    let mut r = Vec::new();
    let mut zeta = Vec::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(Error::Domain(format!("bad potentials row: {line:?}")));
        }
        let idx = parse_usize(f[1])?;
        let val = parse_f64(f[2])?;
        let dst = match f[0].trim() {
            "source" => &mut r,
            "target" => &mut zeta,
            other => return Err(Error::Domain(format!("bad node kind {other:?}"))),
        };
        if idx != dst.len() {
            return Err(Error::Domain(format!(
                "potentials rows out of order at index {idx}"
            )));
        }
        dst.push(val);
    }
    if r.is_empty() || zeta.is_empty() {
        return Err(Error::Domain("potentials CSV missing a node kind".into()));
    }
    Ok(DualPotentials {
        r,
        zeta,
        gauge_node: 0,
    })
}

/// Triangle mesh with 0-based face indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
}

/// Wavefront OBJ: `v` records then `f` records (1-based indices).
pub fn mesh_to_obj(mesh: &Mesh, name: &str) -> String {
    let mut out = format!("o {name}\n");
    for v in &mesh.vertices {
        let _ = writeln!(
            out,
            "v {} {} {}",
            fmt_g17(v[0]),
            fmt_g17(v[1]),
            fmt_g17(v[2])
        );
    }
    for f in &mesh.faces {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}
