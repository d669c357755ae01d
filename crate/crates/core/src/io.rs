//! Result files: the per-level CSV table, legacy ASCII VTK meshes with
//! attached fields, and the log of majorant totals per sweep.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{check_len, Error, Result};
use crate::experiment::LevelRecord;
use crate::mesh::TriMesh;

/// Column order of the CSV table.
pub const CSV_HEADER: [&str; 11] = [
    "level",
    "num_nodes",
    "J_primal",
    "I_dual",
    "gap",
    "majorant_total",
    "m1",
    "m2",
    "m3",
    "beta",
    "energy_lower",
];

/// VTK cell type of a linear triangle.
pub const VTK_TRIANGLE: u8 = 5;

/// Scientific notation with six significant digits, e.g. `6.03834e+00`.
pub fn sci(x: f64) -> String {
    let s = format!("{x:.5e}");
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let (sign, digits) = match exp.strip_prefix('-') {
                Some(d) => ('-', d),
                None => ('+', exp),
            };
            format!("{mantissa}e{sign}{digits:0>2}")
        }
        None => s, // inf / NaN
    }
}

/// Writes one row per level under [`CSV_HEADER`].
pub fn write_csv(records: &[LevelRecord], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(CSV_HEADER)?;
    for r in records {
        writer.write_record([
            r.level.to_string(),
            r.num_nodes.to_string(),
            sci(r.j_primal),
            sci(r.i_dual),
            sci(r.gap),
            sci(r.majorant_total),
            sci(r.m1),
            sci(r.m2),
            sci(r.m3),
            sci(r.beta),
            sci(r.energy_lower),
        ])?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Majorant total after every sweep, one block per level.
pub fn write_majorant_log(entries: &[(usize, Vec<f64>)], path: &Path) -> Result<()> {
    let mut out = String::from("# level sweep majorant_total\n");
    for (level, history) in entries {
        for (k, total) in history.iter().enumerate() {
            writeln!(out, "{level} {} {total:.15e}", k + 1).expect("writing to a string");
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Legacy ASCII VTK unstructured grid with named scalar fields.
///
/// Values are printed in shortest round-trip form, so parsing the file
/// recovers them exactly.
pub fn vtk_string(
    mesh: &TriMesh,
    title: &str,
    point_data: &[(&str, &[f64])],
    cell_data: &[(&str, &[f64])],
) -> Result<String> {
    for (_, values) in point_data {
        check_len(mesh.num_nodes(), values.len(), "VTK point data")?;
    }
    for (_, values) in cell_data {
        check_len(mesh.num_triangles(), values.len(), "VTK cell data")?;
    }
    let mut out = String::new();
    let w = &mut out;
    // writing into a String cannot fail
    let _ = writeln!(w, "# vtk DataFile Version 3.0");
    let _ = writeln!(w, "{}", title.lines().next().unwrap_or(""));
    let _ = writeln!(w, "ASCII");
    let _ = writeln!(w, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(w, "POINTS {} double", mesh.num_nodes());
    for p in mesh.vertices() {
        let _ = writeln!(w, "{} {} 0", p[0], p[1]);
    }
    let nt = mesh.num_triangles();
    let _ = writeln!(w, "CELLS {nt} {}", 4 * nt);
    for t in mesh.triangles() {
        let _ = writeln!(w, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(w, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(w, "{VTK_TRIANGLE}");
    }
    write_attributes(w, "POINT_DATA", mesh.num_nodes(), point_data)?;
    write_attributes(w, "CELL_DATA", nt, cell_data)?;
    Ok(out)
}

fn write_attributes(
    w: &mut String,
    section: &str,
    count: usize,
    data: &[(&str, &[f64])],
) -> Result<()> {
    if data.is_empty() {
        return Ok(());
    }
    let _ = writeln!(w, "{section} {count}");
    for (name, values) in data {
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!(
                "invalid VTK field name `{name}`"
            )));
        }
        let _ = writeln!(w, "SCALARS {name} double 1");
        let _ = writeln!(w, "LOOKUP_TABLE default");
        for v in values.iter() {
            let _ = writeln!(w, "{v}");
        }
    }
    Ok(())
}

/// Writes [`vtk_string`] to `path`.
pub fn write_vtk(
    mesh: &TriMesh,
    point_data: &[(&str, &[f64])],
    cell_data: &[(&str, &[f64])],
    path: &Path,
) -> Result<()> {
    let text = vtk_string(mesh, "two-phase obstacle", point_data, cell_data)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Contents of a legacy ASCII unstructured-grid file as written above.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VtkFile {
    pub title: String,
    pub points: Vec<[f64; 3]>,
    pub cells: Vec<Vec<usize>>,
    pub cell_types: Vec<u8>,
    pub point_data: Vec<(String, Vec<f64>)>,
    pub cell_data: Vec<(String, Vec<f64>)>,
}

/// Parses the subset of the legacy format produced by [`vtk_string`].
pub fn parse_vtk(text: &str) -> Result<VtkFile> {
    let bad = |msg: &str| Error::InvalidArgument(format!("malformed VTK file: {msg}"));
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty"))?;
    if !header.starts_with("# vtk DataFile") {
        return Err(bad("missing header"));
    }
    let mut file = VtkFile {
        title: lines
            .next()
            .ok_or_else(|| bad("missing title"))?
            .to_string(),
        ..VtkFile::default()
    };
    if lines.next().map(str::trim) != Some("ASCII") {
        return Err(bad("only ASCII files are supported"));
    }
    let mut tokens = lines.flat_map(str::split_whitespace);
    let mut next = |what: &str| tokens.next().ok_or_else(|| bad(what));
    fn num<T: std::str::FromStr>(s: &str) -> Result<T> {
        s.parse()
            .map_err(|_| Error::InvalidArgument(format!("malformed VTK file: bad number `{s}`")))
    }

    if (next("DATASET")?, next("type")?) != ("DATASET", "UNSTRUCTURED_GRID") {
        return Err(bad("expected DATASET UNSTRUCTURED_GRID"));
    }
    let mut section_len = 0;
    let mut in_cells = true;
    while let Ok(keyword) = next("keyword") {
        match keyword {
            "POINTS" => {
                let n: usize = num(next("count")?)?;
                next("type")?;
                for _ in 0..n {
                    let p = [num(next("x")?)?, num(next("y")?)?, num(next("z")?)?];
                    file.points.push(p);
                }
            }
            "CELLS" => {
                let n: usize = num(next("count")?)?;
                next("size")?;
                for _ in 0..n {
                    let k: usize = num(next("cell size")?)?;
                    let cell = (0..k)
                        .map(|_| num(next("index")?))
                        .collect::<Result<Vec<usize>>>()?;
                    file.cells.push(cell);
                }
            }
            "CELL_TYPES" => {
                let n: usize = num(next("count")?)?;
                for _ in 0..n {
                    file.cell_types.push(num(next("cell type")?)?);
                }
            }
            "POINT_DATA" | "CELL_DATA" => {
                section_len = num(next("count")?)?;
                in_cells = keyword == "CELL_DATA";
            }
            "SCALARS" => {
                let name = next("name")?.to_string();
                next("type")?;
                let components: usize = num(next("components")?)?;
                let lookup = next("LOOKUP_TABLE")?;
                next("table name")?;
                if components != 1 || lookup != "LOOKUP_TABLE" {
                    return Err(bad("unsupported SCALARS layout"));
                }
                let values = (0..section_len)
                    .map(|_| num(next("value")?))
                    .collect::<Result<Vec<f64>>>()?;
                if in_cells {
                    file.cell_data.push((name, values));
                } else {
                    file.point_data.push((name, values));
                }
            }
            other => return Err(bad(&format!("unexpected keyword `{other}`"))),
        }
    }
    Ok(file)
}
