//! File formats: VTK legacy fields, nodal dumps, key=value configs and
//! JSON-lines run logs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{check_len, Error, Result};
use crate::fem::MeshP1;

/// Writes nodal scalar fields on the mesh as a legacy ASCII VTK file.
pub fn write_vtk(path: &Path, mesh: &MeshP1, title: &str, fields: &[(&str, &[f64])]) -> Result<()> {
    let n_x = mesh.num_nodes();
    for (name, f) in fields {
        check_len(n_x, f.len(), "VTK field")?;
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!("invalid VTK field name {name:?}")));
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\n{}\nASCII\nDATASET UNSTRUCTURED_GRID", title.replace('\n', " "));
    let _ = writeln!(s, "POINTS {n_x} double");
    for [x, y] in mesh.coords() {
        let _ = writeln!(s, "{x:?} {y:?} 0");
    }
    let tris = mesh.triangles();
    let _ = writeln!(s, "CELLS {} {}", tris.len(), 4 * tris.len());
    for t in tris {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {}", tris.len());
    for _ in tris {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "POINT_DATA {n_x}");
    for (name, f) in fields {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for x in *f {
            let _ = writeln!(s, "{x:?}");
        }
    }
    fs::write(path, s)?;
    Ok(())
}

/// Named nodal fields on an `n x n` mesh. Stored as a CSV of values and a
/// `key=value` header next to it; values round-trip exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalDump {
    pub n: usize,
    pub names: Vec<String>,
    pub fields: Vec<Vec<f64>>,
}

impl NodalDump {
    pub fn new(n: usize, fields: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let nodes = (n + 1) * (n + 1);
        for (name, f) in &fields {
            check_len(nodes, f.len(), "nodal dump field")?;
            if name.is_empty() || name.contains([',', '\n', '=']) {
                return Err(Error::InvalidArgument(format!("invalid field name {name:?}")));
            }
        }
        let (names, fields) = fields.into_iter().unzip();
        Ok(Self { n, names, fields })
    }

    /// Path of the header belonging to a dump at `path`.
    pub fn header_path(path: &Path) -> PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".hdr");
        PathBuf::from(s)
    }

    pub fn field(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.fields[i].as_slice())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let header = format!(
            "n={}\nh={:?}\nfields={}\n",
            self.n,
            1.0 / self.n as f64,
            self.names.join(",")
        );
        fs::write(Self::header_path(path), header)?;
        let mut out = BufWriter::new(fs::File::create(path)?);
        writeln!(out, "{}", self.names.join(","))?;
        let nodes = (self.n + 1) * (self.n + 1);
        for i in 0..nodes {
            let row: Vec<String> = self.fields.iter().map(|f| format!("{:?}", f[i])).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let header = parse_key_values(&fs::read_to_string(Self::header_path(path))?)?;
        let get = |k: &str| {
            header
                .get(k)
                .ok_or_else(|| Error::Parse(format!("nodal dump header lacks `{k}`")))
        };
        let n: usize = get("n")?
            .parse()
            .map_err(|e| Error::Parse(format!("header n: {e}")))?;
        let names: Vec<String> = get("fields")?.split(',').map(str::to_owned).collect();
        let body = fs::read_to_string(path)?;
        let mut lines = body.lines();
        let first = lines.next().ok_or_else(|| Error::Parse("empty nodal dump".into()))?;
        if first.split(',').ne(names.iter().map(String::as_str)) {
            return Err(Error::Parse(format!("column names {first:?} disagree with header")));
        }
        let mut fields = vec![Vec::new(); names.len()];
        for (ln, line) in lines.enumerate() {
            let vals: Vec<&str> = line.split(',').collect();
            if vals.len() != names.len() {
                return Err(Error::Parse(format!("row {}: expected {} values", ln + 2, names.len())));
            }
            for (f, v) in fields.iter_mut().zip(vals) {
                f.push(v.trim().parse().map_err(|e| Error::Parse(format!("row {}: {e}", ln + 2)))?);
            }
        }
        Self::new(n, names.into_iter().zip(fields).collect())
    }
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key=value, got {line:?}", ln + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::Parse(format!("line {}: empty key", ln + 1)));
        }
        if out.insert(k.to_owned(), v.trim().to_owned()).is_some() {
            return Err(Error::Parse(format!("line {}: duplicate key `{k}`", ln + 1)));
        }
    }
    Ok(out)
}

/// Appends one JSON object per record.
pub struct JsonLines<W: Write> {
    out: W,
}

impl JsonLines<BufWriter<fs::File>> {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(Self::new(BufWriter::new(fs::File::create(path)?)))
    }
}

impl<W: Write> JsonLines<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn record<T: Serialize>(&mut self, value: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, value)?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
