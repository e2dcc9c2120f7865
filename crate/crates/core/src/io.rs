//! CSV, JSON and SVG artifacts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use plotters::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::Field;

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Writes a header row followed by `rows`. Every row must match the header width.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(std::io::Error::from)?;
    w.write_record(header).map_err(std::io::Error::from)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::InvalidParameter(format!(
                "csv row has {} fields, header has {}",
                row.len(),
                header.len()
            )));
        }
        w.write_record(&row).map_err(std::io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

/// Numeric table with full precision.
pub fn write_numeric_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    write_csv(path, header, rows.iter().map(|r| r.iter().map(|&v| fmt_f64(v)).collect()))
}

/// `x,value` pairs.
pub fn write_profile_csv(path: &Path, u: &Field) -> Result<()> {
    let rows = u
        .grid()
        .nodes()
        .into_iter()
        .zip(u.values())
        .map(|(x, &v)| vec![fmt_f64(x), fmt_f64(v)]);
    write_csv(path, &["x", "value"], rows)
}

/// Reads an `x,value` table written by [`write_profile_csv`].
pub fn read_profile_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_path(path).map_err(std::io::Error::from)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(std::io::Error::from)?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidParameter(format!("bad profile row {rec:?}")))
        };
        out.push((parse(0)?, parse(1)?));
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Axes {
    pub log_x: bool,
    pub log_y: bool,
}

fn plot_err(e: impl std::fmt::Display) -> Error {
    Error::Io(std::io::Error::other(format!("plot: {e}")))
}

/// Line plot of one or more series. Log axes drop non-positive samples.
pub fn line_plot(path: &Path, title: &str, series: &[Series], axes: Axes) -> Result<()> {
    const PALETTE: [RGBColor; 6] = [
        RGBColor(31, 119, 180),
        RGBColor(214, 39, 40),
        RGBColor(44, 160, 44),
        RGBColor(148, 103, 189),
        RGBColor(255, 127, 14),
        RGBColor(23, 190, 207),
    ];
    let tx = |v: f64| if axes.log_x { v.log10() } else { v };
    let ty = |v: f64| if axes.log_y { v.log10() } else { v };
    let keep = |&(x, y): &(f64, f64)| {
        x.is_finite() && y.is_finite() && (!axes.log_x || x > 0.0) && (!axes.log_y || y > 0.0)
    };
    let data: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| s.points.iter().filter(|p| keep(p)).map(|&(x, y)| (tx(x), ty(y))).collect())
        .collect();
    let all = data.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x0 < x1) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if !(y0 < y1) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad = 0.05 * (y1 - y0);
    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(64)
        .build_cartesian_2d(x0..x1, (y0 - pad)..(y1 + pad))
        .map_err(plot_err)?;
    let x_desc = if axes.log_x { "log10 x" } else { "x" };
    let y_desc = if axes.log_y { "log10 y" } else { "y" };
    chart
        .configure_mesh()
        .x_desc(x_desc)
        .y_desc(y_desc)
        .draw()
        .map_err(plot_err)?;
    for (i, (s, pts)) in series.iter().zip(data).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(pts, &color))
            .map_err(plot_err)?
            .label(s.label)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
    }
    if series.len() > 1 {
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(plot_err)?;
    }
    root.present().map_err(plot_err)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;

    #[test]
    fn profile_csv_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let g = Grid::new(10.0, 32).unwrap();
        let u = Field::from_fn(&g, |x| (-x * x / 3.0).exp() / 7.0);
        write_profile_csv(&path, &u).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x,value\n"));
        assert!(text.ends_with('\n'));
        let back = read_profile_csv(&path).unwrap();
        for ((x, v), (j, &w)) in back.iter().zip(u.values().iter().enumerate()) {
            assert_eq!(*x, g.node(j));
            assert_eq!(*v, w);
        }
    }

    #[test]
    fn header_only_table() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        write_csv(&path, &["a", "b"], Vec::<Vec<String>>::new()).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n");
        assert!(write_csv(&path, &["a", "b"], vec![vec!["1".to_string()]]).is_err());
    }

    #[test]
    fn svg_plot_written() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plot.svg");
        let pts: Vec<(f64, f64)> = (1..50).map(|i| (i as f64, 1.0 / (i * i) as f64)).collect();
        let s = [Series { label: "decay", points: pts }];
        line_plot(&path, "tail", &s, Axes { log_x: true, log_y: true }).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("<svg"));
    }
}
