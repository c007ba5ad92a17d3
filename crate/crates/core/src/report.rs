// SPDX-License-Identifier: MIT OR Apache-2.0

//! CSV and JSON output. Every CSV starts with a `# {json}` comment line
//! echoing the configuration that produced it.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gpsim::QuantileCurve;
use crate::montecarlo::Histogram;
use crate::series::RescaledGrid;
use crate::tvmeasure::{Argmax, TimeVariationSurface};

fn comment_line<W: Write, C: Serialize>(out: &mut W, config: &C) -> Result<()> {
    writeln!(out, "# {}", serde_json::to_string(config)?)?;
    Ok(())
}

/// Columns `u,dsup,dmax,argmax_v,argmax_f`; `argmax_v` is the rescaled
/// position of the maximising inner point and `argmax_f` the feature label.
pub fn write_surface<W: Write, C: Serialize>(
    out: W,
    surface: &TimeVariationSurface,
    config: &C,
) -> Result<()> {
    let mut out = out;
    comment_line(&mut out, config)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["u", "dsup", "dmax", "argmax_v", "argmax_f"])?;
    let t = surface.sample_len() as f64;
    for (k, u) in surface.grid.points().enumerate() {
        let a = surface.argmax[k];
        w.write_record([
            format!("{u:e}"),
            format!("{:e}", surface.dsup[k]),
            format!("{:e}", surface.dmax[k]),
            format!("{:e}", a.index as f64 / t),
            surface.labels[a.feature].clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`write_surface`]. Returns the parsed surface
/// and the raw configuration comment.
pub fn read_surface<R: Read>(source: R) -> Result<(TimeVariationSurface, String)> {
    let mut reader = BufReader::new(source);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let config = first
        .strip_prefix("# ")
        .ok_or_else(|| Error::InvalidParameter("missing configuration comment".into()))?
        .trim_end()
        .to_owned();

    let mut rows = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut rdr = csv::Reader::from_reader(reader);
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |c: usize| -> Result<f64> {
            rec.get(c)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Parse {
                    row: r + 2,
                    column: c + 1,
                    message: format!("bad field {:?}", rec.get(c)),
                })
        };
        let label = rec.get(4).unwrap_or_default().to_owned();
        let feature = match labels.iter().position(|l| *l == label) {
            Some(i) => i,
            None => {
                labels.push(label);
                labels.len() - 1
            }
        };
        rows.push((num(0)?, num(1)?, num(2)?, num(3)?, feature));
    }
    let n = rows.len();
    if n == 0 {
        return Err(Error::TooShort(0));
    }
    let t = (1.0 / rows[0].0).round() as usize;
    let indices = rows.iter().map(|r| (r.0 * t as f64).round() as usize).collect();
    Ok((
        TimeVariationSurface {
            grid: RescaledGrid::from_indices(t, indices)?,
            labels,
            dsup: rows.iter().map(|r| r.1).collect(),
            dmax: rows.iter().map(|r| r.2).collect(),
            argmax: rows
                .iter()
                .map(|r| Argmax {
                    index: (r.3 * t as f64).round() as usize,
                    feature: r.4,
                })
                .collect(),
        },
        config,
    ))
}

/// Columns `u,q`.
pub fn write_quantiles<W: Write, C: Serialize>(out: W, curve: &QuantileCurve, config: &C) -> Result<()> {
    let mut out = out;
    comment_line(&mut out, config)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["u", "q"])?;
    for (u, q) in curve.grid.points().zip(&curve.q) {
        w.write_record([format!("{u:e}"), format!("{q:e}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `bin_left,bin_right,count`.
pub fn write_histogram<W: Write, C: Serialize>(out: W, hist: &Histogram, config: &C) -> Result<()> {
    let mut out = out;
    comment_line(&mut out, config)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin_left", "bin_right", "count"])?;
    for (l, r, c) in hist.rows() {
        w.write_record([l.to_string(), r.to_string(), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write, T: Serialize>(out: W, value: &T) -> Result<()> {
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Creates `path` and hands a buffered writer to `f`.
pub fn write_file<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut std::io::BufWriter<std::fs::File>) -> Result<()>,
{
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureFamily, FeatureKind};
    use crate::series::{build_prefix_sums, SeriesSample};
    use crate::tvmeasure::{dsup_profile, SupMethod};

    #[test]
    fn surface_round_trip() {
        let x: Vec<f64> = (0..37).map(|t| ((t * t) % 11) as f64 * 0.37 - 1.0).collect();
        let s = SeriesSample::from_rows(x, 1).unwrap();
        let fam = FeatureFamily::new(FeatureKind::Variance, 1).unwrap();
        let p = build_prefix_sums(&s, &fam).unwrap();
        let surf = dsup_profile(&p, &RescaledGrid::natural(37), SupMethod::Brute).unwrap();

        let mut buf = Vec::new();
        write_surface(&mut buf, &surf, &serde_json::json!({"alpha": 0.1})).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# {\"alpha\":0.1}\nu,dsup,dmax,argmax_v,argmax_f\n"));

        let (back, cfg) = read_surface(buf.as_slice()).unwrap();
        assert_eq!(cfg, "{\"alpha\":0.1}");
        assert_eq!(back.grid, surf.grid);
        assert_eq!(back.labels, surf.labels);
        assert_eq!(back.argmax, surf.argmax);
        for k in 0..surf.len() {
            assert!((back.dsup[k] - surf.dsup[k]).abs() <= 1e-12);
            assert!((back.dmax[k] - surf.dmax[k]).abs() <= 1e-12);
        }
    }

    #[test]
    fn histogram_csv() {
        let h = Histogram::unit_interval(&[0.1, 0.6], 2);
        let mut buf = Vec::new();
        write_histogram(&mut buf, &h, &"cfg").unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "# \"cfg\"\nbin_left,bin_right,count\n0,0.5,1\n0.5,1,1\n"
        );
    }

    #[test]
    fn missing_comment_is_rejected() {
        assert!(read_surface("u,dsup\n".as_bytes()).is_err());
    }
}
