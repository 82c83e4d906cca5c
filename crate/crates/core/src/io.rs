//! Snapshot persistence, diagnostics CSV, and self-contained SVG charts.
//!
//! Snapshot layout (all multi-byte values little-endian, tagged):
//! magic "BSPLIT1" | endianness tag b'L' | spatial_dims u32 | space_n u32 |
//! velocity_radius f64 | velocity_n u32 | gamma f64 | s f64 | q f64 |
//! time_stamp f64 | schedule position u64 | parity u8 | payload (f64,
//! space-major node order) | fnv1a-64 checksum of everything before it.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{CoreError, Result};
use crate::field::DistributionField;
use crate::splitting::{DiagRow, SubstepKind};

pub const SNAPSHOT_MAGIC: &[u8; 7] = b"BSPLIT1";

/// Self-describing snapshot header; enough to rebuild both grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub spatial_dims: u32,
    pub space_n: u32,
    pub velocity_radius: f64,
    pub velocity_n: u32,
    pub gamma: f64,
    pub s: f64,
    pub q: f64,
    pub time_stamp: f64,
    pub position: u64,
    pub parity: u8,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

pub fn snapshot_bytes(header: &SnapshotHeader, field: &DistributionField) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 8 * field.values.len());
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.push(b'L');
    out.extend_from_slice(&header.spatial_dims.to_le_bytes());
    out.extend_from_slice(&header.space_n.to_le_bytes());
    out.extend_from_slice(&header.velocity_radius.to_le_bytes());
    out.extend_from_slice(&header.velocity_n.to_le_bytes());
    out.extend_from_slice(&header.gamma.to_le_bytes());
    out.extend_from_slice(&header.s.to_le_bytes());
    out.extend_from_slice(&header.q.to_le_bytes());
    out.extend_from_slice(&header.time_stamp.to_le_bytes());
    out.extend_from_slice(&header.position.to_le_bytes());
    out.push(header.parity);
    for v in &field.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let checksum = fnv1a(&out);
    out.extend_from_slice(&checksum.to_le_bytes());
    out
}

pub fn write_snapshot(
    path: &Path,
    header: &SnapshotHeader,
    field: &DistributionField,
) -> Result<()> {
    fs::write(path, snapshot_bytes(header, field))?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(CoreError::Snapshot("file truncated".into()));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
}

pub fn parse_snapshot(bytes: &[u8]) -> Result<(SnapshotHeader, DistributionField)> {
    if bytes.len() < 8 {
        return Err(CoreError::Snapshot("file truncated".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().unwrap());
    if fnv1a(body) != stored {
        return Err(CoreError::Snapshot("checksum mismatch".into()));
    }
    let mut r = Reader { bytes: body, pos: 0 };
    if r.take(7)? != SNAPSHOT_MAGIC {
        return Err(CoreError::Snapshot("bad magic".into()));
    }
    if r.u8()? != b'L' {
        return Err(CoreError::Snapshot(
            "unsupported endianness tag (expected little-endian 'L')".into(),
        ));
    }
    let header = SnapshotHeader {
        spatial_dims: r.u32()?,
        space_n: r.u32()?,
        velocity_radius: r.f64()?,
        velocity_n: r.u32()?,
        gamma: r.f64()?,
        s: r.f64()?,
        q: r.f64()?,
        time_stamp: r.f64()?,
        position: r.u64()?,
        parity: r.u8()?,
    };
    let n_velocity = (header.velocity_n as usize).pow(3);
    let n_space = if header.spatial_dims == 0 {
        1
    } else {
        (header.space_n as usize).pow(header.spatial_dims)
    };
    let expect = n_space * n_velocity * 8;
    let payload = r.take(expect)?;
    if r.pos != body.len() {
        return Err(CoreError::Snapshot("trailing bytes after payload".into()));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let field = DistributionField {
        values,
        n_space,
        n_velocity,
        time_stamp: header.time_stamp,
    };
    Ok((header, field))
}

pub fn read_snapshot(path: &Path) -> Result<(SnapshotHeader, DistributionField)> {
    parse_snapshot(&fs::read(path)?)
}

/// Fixed fitted-constant columns of the CSV schema, matching the inequality
/// suite report names.
pub const CSV_CHECKS: [&str; 4] = [
    "qs_pointwise_bound",
    "kernel_annulus_bound",
    "weight_commutator",
    "coercivity",
];

fn kind_label(kind: Option<SubstepKind>) -> &'static str {
    match kind {
        None => "init",
        Some(SubstepKind::Collision) => "collision",
        Some(SubstepKind::Transport) => "transport",
    }
}

/// Column schema: time, substep, mass, momentum xyz, energy, entropy, one
/// `sup_q<q>` column per tracked exponent, barrier margin, negativity mass,
/// one `fitted_<check>` column per suite check (empty when the suite did not
/// run at that row).
pub fn csv_header(track_qs: &[f64]) -> String {
    let mut h = String::from("time,substep,mass,momentum_x,momentum_y,momentum_z,energy,entropy");
    for q in track_qs {
        let _ = write!(h, ",sup_q{q}");
    }
    h.push_str(",barrier_margin,negativity_mass");
    for name in CSV_CHECKS {
        let _ = write!(h, ",fitted_{name}");
    }
    h
}

pub fn csv_rows(rows: &[DiagRow], track_qs: &[f64]) -> String {
    let mut out = csv_header(track_qs);
    out.push('\n');
    for row in rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.time,
            kind_label(row.kind),
            row.hydro.mass,
            row.hydro.momentum[0],
            row.hydro.momentum[1],
            row.hydro.momentum[2],
            row.hydro.energy,
            row.hydro.entropy
        );
        for &q in track_qs {
            match row.sups.iter().find(|(rq, _)| *rq == q) {
                Some((_, sup)) => {
                    let _ = write!(out, ",{sup}");
                }
                None => out.push(','),
            }
        }
        let _ = write!(out, ",{},{}", row.barrier_margin, row.hydro.negativity_mass);
        for name in CSV_CHECKS {
            match row.fitted.iter().find(|(n, _)| *n == name) {
                Some((_, c)) => {
                    let _ = write!(out, ",{c}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

pub fn emit_csv(path: &Path, rows: &[DiagRow], track_qs: &[f64]) -> Result<()> {
    fs::write(path, csv_rows(rows, track_qs))?;
    Ok(())
}

/// Reparse an emitted CSV back into diagnostics rows (inverse of
/// [`csv_rows`] for its own output).
pub fn parse_csv(text: &str) -> Result<Vec<DiagRow>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CoreError::Snapshot("empty csv".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let qs: Vec<f64> = cols
        .iter()
        .filter_map(|c| c.strip_prefix("sup_q"))
        .map(|q| {
            q.parse()
                .map_err(|_| CoreError::Snapshot(format!("bad sup column `{q}`")))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(CoreError::Snapshot(format!(
                "row has {} fields, header has {}",
                fields.len(),
                cols.len()
            )));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i]
                .parse()
                .map_err(|_| CoreError::Snapshot(format!("bad number `{}`", fields[i])))
        };
        let kind = match fields[1] {
            "init" => None,
            "collision" => Some(SubstepKind::Collision),
            "transport" => Some(SubstepKind::Transport),
            other => return Err(CoreError::Snapshot(format!("bad substep `{other}`"))),
        };
        let mut row = DiagRow {
            time: num(0)?,
            kind,
            hydro: crate::diagnostics::HydroMoments {
                mass: num(2)?,
                momentum: [num(3)?, num(4)?, num(5)?],
                energy: num(6)?,
                entropy: num(7)?,
                negativity_mass: 0.0,
            },
            sups: Vec::new(),
            barrier_margin: 0.0,
            fitted: Vec::new(),
        };
        let mut i = 8;
        for &q in &qs {
            row.sups.push((q, num(i)?));
            i += 1;
        }
        row.barrier_margin = num(i)?;
        row.hydro.negativity_mass = num(i + 1)?;
        i += 2;
        for name in CSV_CHECKS {
            if !fields[i].is_empty() {
                row.fitted.push((name, num(i)?));
            }
            i += 1;
        }
        rows.push(row);
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// SVG charts

const W: f64 = 640.0;
const H: f64 = 420.0;
const ML: f64 = 70.0; // margins
const MR: f64 = 20.0;
const MT: f64 = 30.0;
const MB: f64 = 50.0;

struct Series<'a> {
    label: &'a str,
    points: Vec<(f64, f64)>,
}

/// A self-contained line chart; degenerate inputs (single point, flat range)
/// fall back to centered markers.
fn svg_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let (mut x0, mut x1) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
            (a.min(p.0), b.max(p.0))
        });
    let (mut y0, mut y1) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
            (a.min(p.1), b.max(p.1))
        });
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if !y0.is_finite() {
        (y0, y1) = (0.0, 1.0);
    }
    if x1 - x0 < 1e-300 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-300 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let px = |x: f64| ML + (x - x0) / (x1 - x0) * (W - ML - MR);
    let py = |y: f64| H - MB - (y - y0) / (y1 - y0) * (H - MT - MB);

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"monospace\" font-size=\"12\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n",
        W / 2.0
    );
    // axes
    let _ = write!(
        svg,
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB,
        H - MB,
        W - MR,
        H - MB
    );
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = write!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{fx:.3}</text>\n\
             <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{fy:.3}</text>\n",
            px(fx),
            H - MB + 16.0,
            ML - 6.0,
            py(fy) + 4.0
        );
    }
    let _ = write!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_label}</text>\n\
         <text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{y_label}</text>\n",
        (ML + W - MR) / 2.0,
        H - 12.0,
        H / 2.0,
        H / 2.0
    );
    for (si, s) in series.iter().enumerate() {
        let color = palette[si % palette.len()];
        if s.points.len() == 1 {
            let (x, y) = s.points[0];
            let _ = write!(
                svg,
                "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{color}\"/>\n",
                px(x),
                py(y)
            );
        } else {
            let pts: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            let _ = write!(
                svg,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                pts.join(" ")
            );
        }
        let _ = write!(
            svg,
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{}</text>\n",
            W - MR - 150.0,
            MT + 16.0 * (si as f64 + 1.0),
            s.label
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Emit the three standard charts from a diagnostics series: weighted-sup
/// decay (log-log), barrier margin, and conserved-moment drift. Returns the
/// files written.
pub fn emit_charts(dir: &Path, rows: &[DiagRow]) -> Result<Vec<std::path::PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    // decay chart: log10 sup vs log10 t, one series per tracked exponent
    let qs: Vec<f64> = rows
        .first()
        .map(|r| r.sups.iter().map(|&(q, _)| q).collect())
        .unwrap_or_default();
    let labels: Vec<String> = qs.iter().map(|q| format!("sup <v>^{q} |f|")).collect();
    let decay: Vec<Series> = qs
        .iter()
        .zip(&labels)
        .map(|(&q, label)| Series {
            label,
            points: rows
                .iter()
                .filter_map(|r| {
                    let sup = r.sups.iter().find(|(rq, _)| *rq == q)?.1;
                    (r.time > 0.0 && sup > 0.0).then(|| (r.time.log10(), sup.log10()))
                })
                .collect(),
        })
        .collect();
    let p = dir.join("decay_loglog.svg");
    fs::write(
        &p,
        svg_chart(
            "weighted sup decay",
            "log10 time t (s)",
            "log10 sup",
            &decay,
        ),
    )?;
    written.push(p);

    let margin = [Series {
        label: "U(t) g - |f|, min over grid",
        points: rows.iter().map(|r| (r.time, r.barrier_margin)).collect(),
    }];
    let p = dir.join("barrier_margin.svg");
    fs::write(
        &p,
        svg_chart("barrier margin", "time t (s)", "margin", &margin),
    )?;
    written.push(p);

    let base = rows.first();
    let drift = |get: fn(&DiagRow) -> f64, label: &'static str| Series {
        label,
        points: rows
            .iter()
            .map(|r| (r.time, get(r) - base.map_or(0.0, get)))
            .collect(),
    };
    let moments = [
        drift(|r| r.hydro.mass, "mass drift"),
        drift(|r| r.hydro.momentum[0], "momentum_x drift"),
        drift(|r| r.hydro.energy, "energy drift"),
    ];
    let p = dir.join("moment_drift.svg");
    fs::write(
        &p,
        svg_chart("conserved-moment drift", "time t (s)", "drift", &moments),
    )?;
    written.push(p);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::HydroMoments;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_field() -> (SnapshotHeader, DistributionField) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let field = DistributionField {
            values: (0..2 * 27).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            n_space: 2,
            n_velocity: 27,
            time_stamp: 0.75,
        };
        let header = SnapshotHeader {
            spatial_dims: 1,
            space_n: 2,
            velocity_radius: 5.0,
            velocity_n: 3,
            gamma: 1.0,
            s: 0.5,
            q: 8.0,
            time_stamp: 0.75,
            position: 6,
            parity: 0,
        };
        (header, field)
    }

    #[test]
    fn snapshot_roundtrip_is_bit_exact() {
        let (header, field) = random_field();
        let bytes = snapshot_bytes(&header, &field);
        let (h2, f2) = parse_snapshot(&bytes).unwrap();
        assert_eq!(h2, header);
        assert_eq!(f2.values, field.values);
        let bits: Vec<u64> = field.values.iter().map(|v| v.to_bits()).collect();
        let bits2: Vec<u64> = f2.values.iter().map(|v| v.to_bits()).collect();
        assert_eq!(bits, bits2);
        // stability of the byte stream itself
        assert_eq!(bytes, snapshot_bytes(&h2, &f2));
    }

    #[test]
    fn truncated_or_corrupted_snapshot_is_rejected() {
        let (header, field) = random_field();
        let bytes = snapshot_bytes(&header, &field);
        assert!(matches!(
            parse_snapshot(&bytes[..bytes.len() - 3]),
            Err(CoreError::Snapshot(_))
        ));
        let mut flipped = bytes.clone();
        flipped[40] ^= 1;
        assert!(matches!(
            parse_snapshot(&flipped),
            Err(CoreError::Snapshot(_))
        ));
    }

    fn sample_rows() -> Vec<DiagRow> {
        vec![
            DiagRow {
                time: 0.0,
                kind: None,
                hydro: HydroMoments {
                    mass: 1.0,
                    momentum: [0.0, 1e-17, -2e-16],
                    energy: 3.0,
                    entropy: -4.25,
                    negativity_mass: 0.0,
                },
                sups: vec![(8.0, 1e-2), (12.0, 2e-2)],
                barrier_margin: 0.5,
                fitted: vec![],
            },
            DiagRow {
                time: 0.125,
                kind: Some(SubstepKind::Collision),
                hydro: HydroMoments {
                    mass: 1.0 + 1e-15,
                    momentum: [1e-18, 0.0, 0.0],
                    energy: 3.0 - 1e-14,
                    entropy: -4.26,
                    negativity_mass: 3e-9,
                },
                sups: vec![(8.0, 8e-3), (12.0, 1.5e-2)],
                barrier_margin: 0.48,
                fitted: vec![("qs_pointwise_bound", 13.0), ("coercivity", 0.04)],
            },
        ]
    }

    #[test]
    fn csv_schema_and_roundtrip() {
        let rows = sample_rows();
        let qs = [8.0, 12.0];
        let text = csv_rows(&rows, &qs);
        let header_cols = text.lines().next().unwrap().split(',').count();
        // 8 fixed + 2 sups + margin + negativity + 4 fitted
        assert_eq!(header_cols, 16);
        for line in text.lines().skip(1) {
            assert_eq!(line.split(',').count(), header_cols);
        }
        let parsed = parse_csv(&text).unwrap();
        assert_eq!(parsed.len(), rows.len());
        for (a, b) in rows.iter().zip(&parsed) {
            assert_eq!(a.time, b.time);
            assert_eq!(a.kind, b.kind);
            assert_eq!(a.hydro, b.hydro);
            assert_eq!(a.sups, b.sups);
            assert_eq!(a.barrier_margin, b.barrier_margin);
            assert_eq!(a.fitted, b.fitted);
        }
    }

    #[test]
    fn empty_series_gives_header_only_csv() {
        let text = csv_rows(&[], &[8.0]);
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("time,substep,"));
    }

    #[test]
    fn charts_are_emitted_even_for_single_point_series() {
        let dir = std::env::temp_dir().join("bsplit_chart_test");
        let one = vec![sample_rows().remove(1)];
        let files = emit_charts(&dir, &one).unwrap();
        assert_eq!(files.len(), 3);
        for f in &files {
            let text = fs::read_to_string(f).unwrap();
            assert!(text.starts_with("<svg"));
            assert!(text.contains("time t (s)"), "axis label missing in {f:?}");
        }
        // monotone synthetic series gives monotone polyline x coordinates
        let mut rows = sample_rows();
        rows[1].time = 0.5;
        let files = emit_charts(&dir, &rows).unwrap();
        let margin_svg = fs::read_to_string(&files[1]).unwrap();
        let pts: Vec<f64> = margin_svg
            .split("points=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap()
            .split(' ')
            .map(|p| p.split(',').next().unwrap().parse().unwrap())
            .collect();
        assert!(pts.windows(2).all(|w| w[1] > w[0]));
        let _ = fs::remove_dir_all(&dir);
    }
}
