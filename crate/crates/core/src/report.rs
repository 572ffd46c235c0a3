//! Artifact emission: CSV tables, JSON summaries, versioned binary
//! trajectory snapshots, and small self-contained SVG plots (polyline
//! plots with optional log axes; no plotting dependency, no
//! timestamps, byte-reproducible output).

use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::linop::OperatorLk;
use crate::nonlinear::RunRecord;
use crate::resolvent::InequalityReport;
use crate::scan::CampaignReport;
use crate::spectral::velocity_l2;
use ndarray::Array1;
use num_complex::Complex64;
use std::io::{Read, Write};
use std::path::Path;

/// Write-once discipline: refuse to overwrite unless forced.
pub fn write_text(path: &Path, content: &str, force: bool) -> Result<()> {
    if path.exists() && !force {
        return Err(Error::invalid(format!(
            "{} exists; pass --force to overwrite",
            path.display()
        )));
    }
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, content)?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T, force: bool) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    write_text(path, &(text + "\n"), force)
}

/// Inequality sweep as CSV: one row per sample and term.
pub fn inequality_csv(report: &InequalityReport) -> String {
    let mut out = String::from("inequality_id,nu,k,lambda,term_name,ratio,flagged\n");
    for s in report.samples.iter() {
        for (name, ratio) in s.term_ratios.iter() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                report.inequality_id, s.nu, s.k, s.lambda, name, ratio, s.flagged
            ));
        }
    }
    out
}

/// Linear trajectory as CSV: `t, ||w||, ||(d_y,|k|)w||, ||u||`.
pub fn trajectory_csv(op: &OperatorLk, traj: &Trajectory) -> String {
    let mut out = String::from("t,w_l2,w_h1k,u_l2\n");
    let grid = &op.grid;
    for (t, state) in traj.times.iter().zip(traj.states.iter()) {
        let l2 = grid.norm_l2(&state.view());
        let h1k = grid.norm_h1k(op.k, &state.view());
        let w_int = op.restrict(&state.view());
        let (u1, u2) = op.velocity(&w_int.view());
        let ul2 = velocity_l2(grid, &u1.view(), &u2.view());
        out.push_str(&format!("{t},{l2},{h1k},{ul2}\n"));
    }
    out
}

/// Nonlinear run time series as CSV.
pub fn run_series_csv(record: &RunRecord) -> String {
    let k_cols = record
        .series
        .first()
        .map(|s| s.mode_l2.len())
        .unwrap_or(0);
    let mut header = String::from("t,offmode_energy,sobolev_proxy");
    for k in 0..k_cols {
        header.push_str(&format!(",w{k}_l2"));
    }
    header.push('\n');
    let mut out = header;
    for s in record.series.iter() {
        out.push_str(&format!("{},{},{}", s.time, s.offmode_energy, s.sobolev_proxy));
        for v in s.mode_l2.iter() {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

/// Per-mode energy functional parts as CSV.
pub fn energy_csv(record: &RunRecord) -> String {
    let mut out = String::from("k,amp,heat,enh,invd,total\n");
    for e in record.energy.iter() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            e.k, e.amp, e.heat, e.enh, e.invd, e.total
        ));
    }
    out
}

/// Threshold points and fit as CSV.
pub fn campaign_csv(report: &CampaignReport) -> String {
    let mut out = String::from("nu,a_star,bound,runs,inconclusive,nonmonotone\n");
    for p in report.points.iter() {
        out.push_str(&format!(
            "{},{},{:?},{},{},{}\n",
            p.nu, p.a_star, p.bound, p.runs, p.inconclusive, p.nonmonotone_warning
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Binary trajectory snapshots
// ---------------------------------------------------------------------------

const SNAPSHOT_MAGIC: &[u8; 4] = b"CSTB";
const SNAPSHOT_VERSION: u32 = 1;

/// Parsed snapshot file.
pub struct SnapshotFile {
    pub version: u32,
    pub n: usize,
    pub k: i64,
    pub nu: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<Array1<Complex64>>,
}

/// Write the strided trajectory as a versioned little-endian binary
/// snapshot: magic, version, n, k, nu, dt, state count, then
/// `t, re/im pairs` per stored state.
pub fn write_snapshot(path: &Path, traj: &Trajectory, force: bool) -> Result<()> {
    if path.exists() && !force {
        return Err(Error::invalid(format!(
            "{} exists; pass --force to overwrite",
            path.display()
        )));
    }
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut buf: Vec<u8> = Vec::with_capacity(64 + traj.states.len() * (8 + 16 * traj.n));
    buf.extend_from_slice(SNAPSHOT_MAGIC);
    buf.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(traj.n as u32).to_le_bytes());
    buf.extend_from_slice(&traj.k.to_le_bytes());
    buf.extend_from_slice(&traj.nu.to_le_bytes());
    buf.extend_from_slice(&traj.dt.to_le_bytes());
    buf.extend_from_slice(&(traj.states.len() as u32).to_le_bytes());
    for (t, state) in traj.times.iter().zip(traj.states.iter()) {
        buf.extend_from_slice(&t.to_le_bytes());
        for z in state.iter() {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<SnapshotFile> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut pos = 0usize;
    let take = |pos: &mut usize, len: usize| -> Result<&[u8]> {
        if *pos + len > bytes.len() {
            return Err(Error::invalid("snapshot truncated"));
        }
        let s = &bytes[*pos..*pos + len];
        *pos += len;
        Ok(s)
    };
    if take(&mut pos, 4)? != SNAPSHOT_MAGIC {
        return Err(Error::invalid("bad snapshot magic"));
    }
    let version = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
    if version != SNAPSHOT_VERSION {
        return Err(Error::invalid(format!("unsupported snapshot version {version}")));
    }
    let n = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
    let k = i64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
    let nu = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
    let dt = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
    let count = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
    let mut times = Vec::with_capacity(count);
    let mut states = Vec::with_capacity(count);
    for _ in 0..count {
        times.push(f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()));
        let mut st = Array1::zeros(n);
        for j in 0..n {
            let re = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
            let im = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
            st[j] = Complex64::new(re, im);
        }
        states.push(st);
    }
    Ok(SnapshotFile {
        version,
        n,
        k,
        nu,
        dt,
        times,
        states,
    })
}

// ---------------------------------------------------------------------------
// SVG plots
// ---------------------------------------------------------------------------

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Optional straight reference line in (possibly log) plot
/// coordinates: y = a * x^slope for log-log, y = a + slope x otherwise.
pub struct Reference {
    pub slope: f64,
    pub anchor: (f64, f64),
    pub label: String,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Minimal polyline plot; `logx`/`logy` switch the axes to log10.
pub fn svg_line_plot(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    logx: bool,
    logy: bool,
    series: &[Series],
    reference: Option<Reference>,
) -> String {
    let (w, h) = (800.0f64, 520.0f64);
    let (ml, mr, mt, mb) = (80.0, 30.0, 50.0, 60.0);
    let tx = |v: f64| if logx { v.log10() } else { v };
    let ty = |v: f64| if logy { v.log10() } else { v };

    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for s in series {
        for &(x, y) in &s.points {
            if (logx && x <= 0.0) || (logy && y <= 0.0) {
                continue;
            }
            xmin = xmin.min(tx(x));
            xmax = xmax.max(tx(x));
            ymin = ymin.min(ty(y));
            ymax = ymax.max(ty(y));
        }
    }
    if !xmin.is_finite() || !ymin.is_finite() {
        xmin = 0.0;
        xmax = 1.0;
        ymin = 0.0;
        ymax = 1.0;
    }
    if (xmax - xmin).abs() < 1e-300 {
        xmax = xmin + 1.0;
    }
    if (ymax - ymin).abs() < 1e-300 {
        ymax = ymin + 1.0;
    }
    let padx = 0.05 * (xmax - xmin);
    let pady = 0.08 * (ymax - ymin);
    xmin -= padx;
    xmax += padx;
    ymin -= pady;
    ymax += pady;

    let px = |x: f64| ml + (x - xmin) / (xmax - xmin) * (w - ml - mr);
    let py = |y: f64| h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\" font-family=\"monospace\" font-size=\"13\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n<text x=\"{}\" y=\"28\" \
         text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        w / 2.0,
        xml_escape(title)
    ));

    // Axes box
    svg.push_str(&format!(
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        w - ml - mr,
        h - mt - mb
    ));

    // Ticks
    let ticks = |lo: f64, hi: f64, log: bool| -> Vec<(f64, String)> {
        let mut out = Vec::new();
        if log {
            let a = lo.floor() as i64;
            let b = hi.ceil() as i64;
            for d in a..=b {
                let v = d as f64;
                if v >= lo && v <= hi {
                    out.push((v, format!("1e{d}")));
                }
            }
            if out.len() < 2 {
                out.push((lo, format!("{:.2}", 10f64.powf(lo))));
                out.push((hi, format!("{:.2}", 10f64.powf(hi))));
            }
        } else {
            let span = hi - lo;
            let step = 10f64.powf(span.log10().floor());
            let step = if span / step > 6.0 {
                step * 2.0
            } else if span / step < 3.0 {
                step / 2.0
            } else {
                step
            };
            let mut v = (lo / step).ceil() * step;
            while v <= hi {
                out.push((v, format!("{v:.3}")));
                v += step;
            }
        }
        out
    };
    for (v, label) in ticks(xmin, xmax, logx) {
        let x = px(v);
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"#cccccc\"/>\n\
             <text x=\"{x}\" y=\"{}\" text-anchor=\"middle\">{label}</text>\n",
            mt,
            h - mb,
            h - mb + 20.0
        ));
    }
    for (v, label) in ticks(ymin, ymax, logy) {
        let y = py(v);
        svg.push_str(&format!(
            "<line x1=\"{ml}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#cccccc\"/>\n\
             <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{label}</text>\n",
            w - mr,
            ml - 8.0,
            y + 4.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        w / 2.0,
        h - 15.0,
        xml_escape(xlabel)
    ));
    svg.push_str(&format!(
        "<text x=\"20\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {})\">{}</text>\n",
        h / 2.0,
        h / 2.0,
        xml_escape(ylabel)
    ));

    // Reference line
    if let Some(r) = reference {
        let (ax, ay) = (tx(r.anchor.0), ty(r.anchor.1));
        let y_at = |x: f64| ay + r.slope * (x - ax);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#888888\" stroke-dasharray=\"6,4\"/>\n\
             <text x=\"{}\" y=\"{}\" fill=\"#888888\">{}</text>\n",
            px(xmin),
            py(y_at(xmin)),
            px(xmax),
            py(y_at(xmax)),
            px(xmin) + 10.0,
            py(y_at(xmin)) - 6.0,
            xml_escape(&r.label)
        ));
    }

    // Series
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        for &(x, y) in &s.points {
            if (logx && x <= 0.0) || (logy && y <= 0.0) {
                continue;
            }
            if d.is_empty() {
                d.push('M');
            } else {
                d.push('L');
            }
            d.push_str(&format!("{:.2} {:.2}", px(tx(x)), py(ty(y))));
        }
        svg.push_str(&format!(
            "<path d=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n"
        ));
        for &(x, y) in &s.points {
            if (logx && x <= 0.0) || (logy && y <= 0.0) {
                continue;
            }
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                px(tx(x)),
                py(ty(y))
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{}</text>\n",
            w - mr - 180.0,
            mt + 20.0 + 18.0 * i as f64,
            xml_escape(&s.label)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{evolve, ForcingSlots};
    use crate::linop::{assemble, Toggles};
    use crate::spectral::{build_grid, random_smooth_profile};
    use std::sync::Arc;

    #[test]
    fn snapshot_round_trip_is_identity() {
        let g = Arc::new(build_grid(32).unwrap());
        let op = assemble(g.clone(), 1e-2, 1, Toggles::default()).unwrap();
        let w0 = random_smooth_profile(&g, 2);
        let (traj, _) = evolve(&op, &w0, &ForcingSlots::none(), 0.5, 0.01, 0.0).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("run.cstb");
        write_snapshot(&path, &traj, false).unwrap();
        let back = read_snapshot(&path).unwrap();
        assert_eq!(back.n, traj.n);
        assert_eq!(back.k, traj.k);
        assert_eq!(back.nu, traj.nu);
        assert_eq!(back.times, traj.times);
        for (a, b) in back.states.iter().zip(traj.states.iter()) {
            assert_eq!(a, b);
        }
        // write-once discipline
        assert!(write_snapshot(&path, &traj, false).is_err());
        assert!(write_snapshot(&path, &traj, true).is_ok());
    }

    #[test]
    fn corrupt_snapshot_is_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("bad.cstb");
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(read_snapshot(&path).is_err());
    }

    #[test]
    fn svg_output_is_deterministic_and_wellformed() {
        let series = vec![Series {
            label: "gap".into(),
            points: vec![(1e-2, 6.6e-2), (1e-3, 2.8e-2), (1e-4, 2.3e-2)],
        }];
        let a = svg_line_plot(
            "gap vs nu",
            "nu",
            "gap",
            true,
            true,
            &series,
            Some(Reference {
                slope: 0.5,
                anchor: (1e-3, 2.8e-2),
                label: "slope 1/2".into(),
            }),
        );
        let b = svg_line_plot(
            "gap vs nu",
            "nu",
            "gap",
            true,
            true,
            &series,
            Some(Reference {
                slope: 0.5,
                anchor: (1e-3, 2.8e-2),
                label: "slope 1/2".into(),
            }),
        );
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.trim_end().ends_with("</svg>"));
        assert!(!a.contains("timestamp"));
    }

    #[test]
    fn write_once_for_text_outputs() {
        let tmp = tempfile::tempdir().unwrap();
        let p = tmp.path().join("x.csv");
        write_text(&p, "a,b\n", false).unwrap();
        assert!(write_text(&p, "c,d\n", false).is_err());
        write_text(&p, "c,d\n", true).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "c,d\n");
    }
}
