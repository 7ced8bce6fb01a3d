use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use lyapcert::certify::StabilityCertificate;
use lyapcert::expr::{Variables, VectorFieldDef};
use lyapcert::geometry::{parse_mesh, MeshData};

use crate::{io_error, write_atomic, CliError};

const SIZE: f64 = 640.0;
const GREEN: &str = "#1a9850";
const RED: &str = "#d73027";

/// Parses the certificate's field with whichever variable naming accepts it.
fn field_of(cert: &StabilityCertificate) -> Result<VectorFieldDef, CliError> {
    let n = cert.dimension;
    VectorFieldDef::parse(&cert.field, Variables::cartesian(n))
        .or_else(|e| {
            if n.is_multiple_of(2) {
                VectorFieldDef::parse(&cert.field, Variables::canonical(n / 2))
            } else {
                Err(e)
            }
        })
        .map_err(|e| CliError::Input(format!("certificate field: {e}")))
}

struct View {
    lo: [f64; 2],
    scale: f64,
}

impl View {
    fn map(&self, p: &[f64]) -> (f64, f64) {
        (
            (p[0] - self.lo[0]) * self.scale,
            SIZE - (p[1] - self.lo[1]) * self.scale,
        )
    }
}

fn read_trajectory(path: &Path) -> Result<Vec<[f64; 2]>, CliError> {
    let text = fs::read_to_string(path).map_err(io_error(path))?;
    let mut pts = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Input(format!("{}:{}: bad number", path.display(), i + 1)))?;
        if cols.len() < 3 {
            return Err(CliError::Input(format!("{}:{}: expected t,x1,x2", path.display(), i + 1)));
        }
        pts.push([cols[1], cols[2]]);
    }
    Ok(pts)
}

pub fn cmd_plot(cert_path: &Path, out: &Path, traj_dir: Option<&Path>) -> Result<(), CliError> {
    let text = fs::read_to_string(cert_path).map_err(io_error(cert_path))?;
    let cert = StabilityCertificate::from_json(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", cert_path.display())))?;
    if cert.dimension != 2 {
        return Err(CliError::Input("plotting supports n=2 only".into()));
    }
    let field = field_of(&cert)?;
    let (lo, hi) = (&cert.grid.lo, &cert.grid.hi);
    let view = View {
        lo: [lo[0], lo[1]],
        scale: SIZE / (hi[0] - lo[0]).max(hi[1] - lo[1]),
    };

    let mut meshes: Vec<(f64, MeshData)> = Vec::new();
    for rec in &cert.surfaces {
        let Some(name) = &rec.mesh else {
            return Err(CliError::Input(format!("surface {} has no mesh sidecar", rec.index)));
        };
        let path = cert_path.with_file_name(name);
        let mesh_text = fs::read_to_string(&path).map_err(io_error(&path))?;
        let mesh = parse_mesh(&mesh_text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        meshes.push((rec.tol_s, mesh));
    }

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        svg,
        "<title>{} | {} | verdict {}</title>",
        cert.field.join(", "),
        cert.function,
        cert.verdict
    )
    .unwrap();

    if let Some(dir) = traj_dir {
        let mut files: Vec<_> = fs::read_dir(dir)
            .map_err(io_error(dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        files.sort();
        for f in files {
            let pts = read_trajectory(&f)?;
            let coords: Vec<String> = pts
                .iter()
                .map(|p| {
                    let (x, y) = view.map(p);
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            writeln!(
                svg,
                r##"<polyline class="trajectory" points="{}" fill="none" stroke="#7f7f7f" stroke-width="0.6"/>"##,
                coords.join(" ")
            )
            .unwrap();
        }
    }

    let (mut green, mut red) = (0usize, 0usize);
    for (i, (tol, mesh)) in meshes.iter().enumerate() {
        writeln!(svg, r#"<g class="surface" data-index="{i}" data-level="{:e}">"#, mesh.level).unwrap();
        for [a, b] in &mesh.edges {
            let (x1, y1) = view.map(&mesh.vertices[*a]);
            let (x2, y2) = view.map(&mesh.vertices[*b]);
            writeln!(
                svg,
                r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="black" stroke-width="0.8"/>"#
            )
            .unwrap();
        }
        for (v, n) in mesh.vertices.iter().zip(&mesh.normals) {
            let f = field
                .evaluate(&v[..2])
                .map_err(|e| CliError::Input(format!("evaluating the field: {e}")))?;
            let s = n[0] * f[0] + n[1] * f[1];
            let color = if s < -tol {
                red += 1;
                RED
            } else {
                green += 1;
                GREEN
            };
            let (x, y) = view.map(v);
            writeln!(svg, r#"<circle cx="{x:.2}" cy="{y:.2}" r="1.4" fill="{color}"/>"#).unwrap();
        }
        writeln!(svg, "</g>").unwrap();
    }

    let (cx, cy) = view.map(&cert.equilibrium);
    writeln!(
        svg,
        r##"<path class="equilibrium" d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke="#2166ac" stroke-width="1.5"/>"##,
        cx - 5.0,
        cy - 5.0,
        cx + 5.0,
        cy + 5.0,
        cx - 5.0,
        cy + 5.0,
        cx + 5.0,
        cy - 5.0
    )
    .unwrap();
    writeln!(svg, "</svg>").unwrap();
    write_atomic(out, &svg)?;
    println!("{green} green and {red} red vertices -> {}", out.display());
    Ok(())
}
