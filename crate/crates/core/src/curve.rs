//! Sampled curves (level-set spectra and rate functions) with CSV and JSON
//! round-tripping.
//!
//! CSV layout: header `<abscissa>,value,method,residual`, one row per sample,
//! floats printed with 17 significant digits. Several methods may share one
//! file; rows are grouped back by the `method` column.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub value: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    /// Column name of the abscissa: `a` for spectra, `s` for rate curves.
    pub abscissa: String,
    pub method: String,
    pub domain: (f64, f64),
    pub points: Vec<CurvePoint>,
}

pub type SpectrumCurve = Curve;
pub type RateCurve = Curve;

/// Round-trip exact float text.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

impl Curve {
    pub fn new(abscissa: &str, method: &str, domain: (f64, f64)) -> Self {
        Self {
            abscissa: abscissa.into(),
            method: method.into(),
            domain,
            points: Vec::new(),
        }
    }

    pub fn push(&mut self, x: f64, value: f64, residual: f64) {
        self.points.push(CurvePoint { x, value, residual });
    }

    pub fn max_point(&self) -> Option<CurvePoint> {
        self.points
            .iter()
            .copied()
            .max_by(|a, b| a.value.total_cmp(&b.value))
    }

    /// Largest violation of discrete concavity `f(m) ≥ interp(f(l), f(r))`.
    pub fn concavity_defect(&self) -> f64 {
        self.points
            .windows(3)
            .map(|w| {
                let t = (w[1].x - w[0].x) / (w[2].x - w[0].x);
                let chord = w[0].value + t * (w[2].value - w[0].value);
                (chord - w[1].value).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    /// Sup-norm distance on the common grid; errors if grids differ.
    pub fn sup_distance(&self, other: &Curve) -> Result<f64> {
        if self.points.len() != other.points.len()
            || self.points.iter().zip(&other.points).any(|(a, b)| a.x != b.x)
        {
            return Err(Error::InvalidInput("curves are sampled on different grids".into()));
        }
        Ok(self
            .points
            .iter()
            .zip(&other.points)
            .map(|(a, b)| (a.value - b.value).abs())
            .fold(0.0, f64::max))
    }
}

pub fn write_csv(curves: &[Curve]) -> Result<String> {
    let first = curves
        .first()
        .ok_or_else(|| Error::InvalidInput("no curves to write".into()))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidInput(e.to_string());
    w.write_record([first.abscissa.as_str(), "value", "method", "residual"])
        .map_err(io)?;
    for c in curves {
        for p in &c.points {
            w.write_record([fmt17(p.x), fmt17(p.value), c.method.clone(), fmt17(p.residual)])
                .map_err(io)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Parses a curve CSV; curves come back in order of first appearance.
pub fn read_csv(text: &str) -> Result<Vec<Curve>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let bad = |m: String| Error::InvalidInput(m);
    let headers = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.len() != 4 || &headers[1] != "value" || &headers[2] != "method" || &headers[3] != "residual" {
        return Err(bad(format!("unexpected header {headers:?}")));
    }
    let abscissa = headers[0].to_string();
    if abscissa != "a" && abscissa != "s" {
        return Err(bad(format!("abscissa column must be `a` or `s`, got `{abscissa}`")));
    }
    let mut curves: Vec<Curve> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|_| bad(format!("column {i}: `{}` is not a number", &rec[i])))
        };
        let (x, value, residual) = (num(0)?, num(1)?, num(3)?);
        let method = &rec[2];
        let pos = match curves.iter().position(|c| c.method == method) {
            Some(p) => p,
            None => {
                curves.push(Curve::new(&abscissa, method, (x, x)));
                curves.len() - 1
            }
        };
        let c = &mut curves[pos];
        c.domain = (c.domain.0.min(x), c.domain.1.max(x));
        c.push(x, value, residual);
    }
    if curves.is_empty() {
        return Err(bad("curve file has no rows".into()));
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_is_exact() {
        let mut a = Curve::new("a", "legendre", (0.0, 1.0));
        a.push(0.1, 0.1f64.ln().abs() / 3.0, 1e-17);
        a.push(0.5, std::f64::consts::LN_2, 0.0);
        let mut b = Curve::new("a", "oracle", (0.0, 1.0));
        b.push(0.1, 0.2, 0.0);
        let text = write_csv(&[a.clone(), b]).unwrap();
        assert!(text.starts_with("a,value,method,residual\n"));
        let back = read_csv(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].points, a.points);
    }

    #[test]
    fn empty_or_foreign_csv_rejected() {
        assert!(read_csv("a,value,method,residual\n").is_err());
        assert!(read_csv("x,y\n1,2\n").is_err());
    }

    #[test]
    fn concavity_defect_of_parabola() {
        let mut c = Curve::new("a", "t", (0.0, 1.0));
        for i in 0..=10 {
            let x = i as f64 / 10.0;
            c.push(x, -(x - 0.5) * (x - 0.5), 0.0);
        }
        assert_eq!(c.concavity_defect(), 0.0);
        c.points[5].value = -1.0;
        assert!(c.concavity_defect() > 0.5);
    }
}
