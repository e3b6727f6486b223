//! JSON file formats for states and local unitaries.
//!
//! A state file is an object with `dims`, `kind` (`"pure"` or `"mixed"`),
//! `data` and optional `name` and `seed`. Pure data is a list of `[re, im]`
//! pairs in basis order; mixed data is a list of rows of such pairs. A
//! unitary file holds `cut` (e.g. `"1|2,3"`), `u_x` and `u_y` as rows of
//! pairs. Numbers are written in shortest round-trip form, so write then read
//! is bit-exact.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::ser::{SerializeSeq, Serializer};
use serde_json::{json, Map, Value};

use crate::constructors::LocalUnitary;
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::state::{Bipartition, MultiState, PartyDims, StateKind};

/// A state together with its optional provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFile {
    pub state: MultiState,
    pub name: Option<String>,
    pub seed: Option<u64>,
}

impl StateFile {
    pub fn new(state: MultiState) -> Self {
        StateFile { state, name: None, seed: None }
    }

    pub fn named(state: MultiState, name: impl Into<String>) -> Self {
        StateFile { state, name: Some(name.into()), seed: None }
    }
}

fn parse_err(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse { location: location.into(), message: message.into() }
}

fn pair(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn matrix_value(m: &ComplexMatrix) -> Value {
    Value::Array((0..m.rows()).map(|r| Value::Array(m.row(r).iter().map(|&z| pair(z)).collect())).collect())
}

/// Serde adapter writing a matrix as rows of `[re, im]` pairs.
pub fn serialize_matrix<S: Serializer>(m: &ComplexMatrix, ser: S) -> std::result::Result<S::Ok, S::Error> {
    let mut seq = ser.serialize_seq(Some(m.rows()))?;
    for r in 0..m.rows() {
        let row: Vec<[f64; 2]> = m.row(r).iter().map(|z| [z.re, z.im]).collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

impl serde::Serialize for MultiState {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        state_to_json(&StateFile::new(self.clone())).serialize(ser)
    }
}

pub fn state_to_json(file: &StateFile) -> Value {
    let s = &file.state;
    let mut obj = Map::new();
    if let Some(name) = &file.name {
        obj.insert("name".into(), json!(name));
    }
    obj.insert("dims".into(), json!(s.dims().as_slice()));
    let kind = match s.kind() {
        StateKind::Pure => "pure",
        StateKind::Mixed => "mixed",
    };
    obj.insert("kind".into(), json!(kind));
    if let Some(seed) = file.seed {
        obj.insert("seed".into(), json!(seed));
    }
    let data = match s.kind() {
        StateKind::Pure => Value::Array(s.data().as_slice().iter().map(|&z| pair(z)).collect()),
        StateKind::Mixed => matrix_value(s.data()),
    };
    obj.insert("data".into(), data);
    Value::Object(obj)
}

fn parse_pair(v: &Value, at: &str) -> Result<Complex64> {
    let arr = v.as_array().ok_or_else(|| parse_err(at, "expected an [re, im] pair"))?;
    if arr.len() != 2 {
        return Err(parse_err(at, format!("expected 2 numbers, found {}", arr.len())));
    }
    let num = |k: usize| {
        arr[k].as_f64().ok_or_else(|| parse_err(format!("{at}[{k}]"), "expected a number"))
    };
    Ok(Complex64::new(num(0)?, num(1)?))
}

fn parse_vector(v: &Value, at: &str, len: usize) -> Result<Vec<Complex64>> {
    let arr = v.as_array().ok_or_else(|| parse_err(at, "expected a list"))?;
    if arr.len() != len {
        return Err(parse_err(at, format!("expected {len} entries, found {}", arr.len())));
    }
    arr.iter().enumerate().map(|(i, x)| parse_pair(x, &format!("{at}[{i}]"))).collect()
}

fn parse_matrix(v: &Value, at: &str, rows: usize, cols: usize) -> Result<ComplexMatrix> {
    let arr = v.as_array().ok_or_else(|| parse_err(at, "expected a list of rows"))?;
    if arr.len() != rows {
        return Err(parse_err(at, format!("expected {rows} rows, found {}", arr.len())));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (r, row) in arr.iter().enumerate() {
        data.extend(parse_vector(row, &format!("{at}[{r}]"), cols)?);
    }
    ComplexMatrix::from_vec(rows, cols, data).map_err(|e| parse_err(at, e.to_string()))
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| parse_err(key, "missing field"))
}

fn parse_square(v: &Value, at: &str) -> Result<ComplexMatrix> {
    let n = v.as_array().map(|a| a.len()).ok_or_else(|| parse_err(at, "expected a list of rows"))?;
    parse_matrix(v, at, n, n)
}

pub fn state_from_json(v: &Value) -> Result<StateFile> {
    let obj = v.as_object().ok_or_else(|| parse_err("document", "expected an object"))?;
    let dims_v = field(obj, "dims")?.as_array().ok_or_else(|| parse_err("dims", "expected a list"))?;
    let dims = dims_v
        .iter()
        .enumerate()
        .map(|(i, d)| {
            d.as_u64().map(|d| d as usize).ok_or_else(|| parse_err(format!("dims[{i}]"), "expected a positive integer"))
        })
        .collect::<Result<Vec<_>>>()?;
    let dims = PartyDims::new(dims).map_err(|e| parse_err("dims", e.to_string()))?;
    let total = dims.total();
    let kind = match field(obj, "kind")?.as_str() {
        Some("pure") => StateKind::Pure,
        Some("mixed") => StateKind::Mixed,
        _ => return Err(parse_err("kind", "expected \"pure\" or \"mixed\"")),
    };
    let data = field(obj, "data")?;
    let state = match kind {
        StateKind::Pure => MultiState::pure(dims, parse_vector(data, "data", total)?),
        StateKind::Mixed => MultiState::mixed(dims, parse_matrix(data, "data", total, total)?),
    }
    .map_err(|e| parse_err("data", e.to_string()))?;
    let name = match obj.get("name") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(parse_err("name", "expected a string")),
    };
    let seed = match obj.get("seed") {
        None | Some(Value::Null) => None,
        Some(s) => Some(s.as_u64().ok_or_else(|| parse_err("seed", "expected a nonnegative integer"))?),
    };
    Ok(StateFile { state, name, seed })
}

fn parse_text(text: &str) -> Result<Value> {
    serde_json::from_str(text)
        .map_err(|e| parse_err(format!("line {}, column {}", e.line(), e.column()), e.to_string()))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_value(v: &Value, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn parse_state(text: &str) -> Result<StateFile> {
    state_from_json(&parse_text(text)?)
}

pub fn read_state_file(path: impl AsRef<Path>) -> Result<StateFile> {
    parse_state(&read_text(path.as_ref())?)
}

pub fn read_state(path: impl AsRef<Path>) -> Result<MultiState> {
    Ok(read_state_file(path)?.state)
}

pub fn write_state_file(file: &StateFile, path: impl AsRef<Path>) -> Result<()> {
    write_value(&state_to_json(file), path.as_ref())
}

pub fn write_state(s: &MultiState, path: impl AsRef<Path>) -> Result<()> {
    write_state_file(&StateFile::new(s.clone()), path)
}

pub fn unitary_to_json(lu: &LocalUnitary) -> Value {
    json!({
        "cut": lu.bipartition.label(),
        "u_x": matrix_value(&lu.u_x),
        "u_y": matrix_value(&lu.u_y),
    })
}

/// Parses a unitary file for a state with `dims`; factors must match the
/// grouped side dimensions but unitarity is left to the caller.
pub fn unitary_from_json(v: &Value, dims: &PartyDims) -> Result<LocalUnitary> {
    let obj = v.as_object().ok_or_else(|| parse_err("document", "expected an object"))?;
    let cut = field(obj, "cut")?.as_str().ok_or_else(|| parse_err("cut", "expected a string"))?;
    let bp = Bipartition::parse(cut, dims.parties()).map_err(|e| parse_err("cut", e.to_string()))?;
    let u_x = parse_square(field(obj, "u_x")?, "u_x")?;
    let u_y = parse_square(field(obj, "u_y")?, "u_y")?;
    let (dx, dy) = (dims.dim_of(bp.x()), dims.dim_of(bp.y()));
    if u_x.rows() != dx || u_y.rows() != dy {
        return Err(parse_err(
            "u_x",
            format!("factor sizes {}x{} and {}x{} do not match sides {dx} and {dy}", u_x.rows(), u_x.rows(), u_y.rows(), u_y.rows()),
        ));
    }
    Ok(LocalUnitary::new(bp, u_x, u_y))
}

pub fn read_unitary(path: impl AsRef<Path>, dims: &PartyDims) -> Result<LocalUnitary> {
    unitary_from_json(&parse_text(&read_text(path.as_ref())?)?, dims)
}

pub fn write_unitary(lu: &LocalUnitary, path: impl AsRef<Path>) -> Result<()> {
    write_value(&unitary_to_json(lu), path.as_ref())
}
