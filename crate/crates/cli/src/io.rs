//! File formats: model and parameter JSON, input and trace CSV, SVG plots.

use crate::error::CliError;
use dynn::dynn::DynnParams;
use dynn::StateSpace;
use std::path::Path;

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_model(path: &Path) -> Result<StateSpace, CliError> {
    StateSpace::from_json(&read_text(path)?).map_err(|e| CliError::parse(path, e))
}

pub fn read_params(path: &Path) -> Result<DynnParams, CliError> {
    DynnParams::from_json(&read_text(path)?).map_err(|e| CliError::parse(path, e))
}

/// Samples read from a CSV file with header `t,u_1,…`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputTable {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

pub fn read_input_csv(path: &Path) -> Result<InputTable, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::parse(path, e))?;
    let width = reader.headers().map_err(|e| CliError::parse(path, e))?.len();
    if width < 2 {
        return Err(CliError::parse(path, "expected a time column followed by input columns"));
    }
    let mut table = InputTable {
        times: Vec::new(),
        values: Vec::new(),
    };
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::parse(path, e))?;
        let mut nums = Vec::with_capacity(width);
        for field in record.iter() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| CliError::parse(path, format!("row {}: '{field}' is not a number", row + 2)))?;
            nums.push(v);
        }
        table.times.push(nums[0]);
        table.values.push(nums[1..].to_vec());
    }
    if table.times.is_empty() {
        return Err(CliError::parse(path, "no samples"));
    }
    Ok(table)
}

/// Writes `t,<prefix>_1,…` rows.
pub fn write_series_csv(path: &Path, prefixes: &[(&str, usize)], times: &[f64], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::parse(path, e))?;
    let mut header = vec!["t".to_string()];
    for (prefix, count) in prefixes {
        header.extend((1..=*count).map(|i| format!("{prefix}_{i}")));
    }
    w.write_record(&header).map_err(|e| CliError::parse(path, e))?;
    for (t, row) in times.iter().zip(rows) {
        let record = std::iter::once(t).chain(row).map(f64::to_string);
        w.write_record(record).map_err(|e| CliError::parse(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// One polyline per series; `dashed` series are drawn with a dash pattern.
pub struct Series<'a> {
    pub label: String,
    pub values: &'a [f64],
    pub color: usize,
    pub dashed: bool,
}

/// Plain SVG with one polyline per series over a shared time axis.
pub fn render_svg(title: &str, times: &[f64], series: &[Series]) -> String {
    let (width, height, pad) = (800.0, 420.0, 50.0);
    let (t0, t1) = (times[0], *times.last().unwrap());
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in series.iter().flat_map(|s| s.values.iter()) {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    if !(hi > lo) {
        lo -= 1.0;
        hi += 1.0;
    }
    let tspan = if t1 > t0 { t1 - t0 } else { 1.0 };
    let x = |t: f64| pad + (t - t0) / tspan * (width - 2.0 * pad);
    let y = |v: f64| height - pad - (v - lo) / (hi - lo) * (height - 2.0 * pad);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    );
    out += &format!("<title>{}</title>\n", escape(title));
    out += &format!(
        "<rect x=\"{pad}\" y=\"{pad}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>\n",
        width - 2.0 * pad,
        height - 2.0 * pad
    );
    out += &format!(
        "<text x=\"{pad}\" y=\"{}\" font-size=\"11\">t = {t0}</text><text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">t = {t1}</text>\n",
        height - pad + 16.0,
        width - pad,
        height - pad + 16.0
    );
    out += &format!(
        "<text x=\"4\" y=\"{}\" font-size=\"11\">{hi:.4e}</text><text x=\"4\" y=\"{}\" font-size=\"11\">{lo:.4e}</text>\n",
        pad + 4.0,
        height - pad
    );
    for s in series {
        let points: Vec<String> = times
            .iter()
            .zip(s.values)
            .map(|(&t, &v)| format!("{:.2},{:.2}", x(t), y(v)))
            .collect();
        let dash = if s.dashed { " stroke-dasharray=\"6 4\"" } else { "" };
        out += &format!(
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{dash} points=\"{}\"><title>{}</title></polyline>\n",
            PALETTE[s.color % PALETTE.len()],
            points.join(" "),
            escape(&s.label)
        );
    }
    out + "</svg>\n"
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.csv");
        let times = vec![0.0, 0.1, 0.30000000000000004];
        let rows = vec![vec![1.0 / 3.0, -2e-300], vec![0.0, 1e10], vec![std::f64::consts::PI, -0.0]];
        write_series_csv(&path, &[("u", 2)], &times, &rows).unwrap();
        let back = read_input_csv(&path).unwrap();
        assert_eq!(back.times, times);
        assert_eq!(back.values, rows);
    }

    #[test]
    fn svg_has_one_polyline_per_series() {
        let v = [0.0, 1.0, 0.5];
        let s = [
            Series { label: "a".into(), values: &v, color: 0, dashed: false },
            Series { label: "b".into(), values: &v, color: 1, dashed: true },
        ];
        let svg = render_svg("x", &[0.0, 1.0, 2.0], &s);
        assert_eq!(svg.matches("<polyline").count(), 2);
    }
}
