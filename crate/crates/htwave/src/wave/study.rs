//! L^1 / L^infinity scaling studies of the kernel pieces and log-log slope fits.
//!
//! Convolution operators on a group have `L^1 -> L^1` norm equal to the `L^1` norm of
//! their kernel, so the kernel norms are used as proxies for the operator norms.

use serde::{Deserialize, Serialize};

use super::kernel::{assemble_k0, assemble_kk_band, assemble_kkl, KernelOptions, WaveContext};
use super::{l1_norm, linf_norm, Component, KernelField};
use crate::error::{Error, Result};
use crate::fit::fit_power_law;
use crate::io::{csv_record, format_float};

/// One kernel piece of a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "piece")]
pub enum StudyPiece {
    /// `K^0_lambda`.
    Main,
    /// `K^{k,l}_lambda`.
    Band { k: u64, l: u32 },
    /// `sum_{l <= big_l} K^{k,l}_lambda`.
    BandSum { k: u64, big_l: u32 },
}

/// The pieces of a study, evaluated at every `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRequest {
    pub d1: usize,
    pub d2: usize,
    pub lambdas: Vec<f64>,
    pub pieces: Vec<StudyPiece>,
}

impl StudyRequest {
    /// `K^{k,l}` for all `(k, l)` in the product of the lists (`k = 0` means `K^0`).
    pub fn product(d1: usize, d2: usize, lambdas: &[f64], ks: &[u64], ls: &[u32]) -> Self {
        let mut pieces = Vec::new();
        for &k in ks {
            if k == 0 {
                pieces.push(StudyPiece::Main);
            } else {
                pieces.extend(ls.iter().map(|&l| StudyPiece::Band { k, l }));
            }
        }
        Self { d1, d2, lambdas: lambdas.to_vec(), pieces }
    }
}

/// Norms of one assembled piece.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub lambda: f64,
    pub k: u64,
    /// `None` for `K^0` and band sums.
    pub l: Option<u32>,
    pub component: Component,
    pub l1: f64,
    pub linf: f64,
    /// Relative L^1 change under doubled `t` density, when certified.
    pub cert: Option<f64>,
}

impl NormRow {
    pub fn from_field(field: &KernelField) -> Self {
        Self {
            lambda: field.index.lambda,
            k: field.index.k,
            l: field.index.l,
            component: field.component,
            l1: l1_norm(field),
            linf: linf_norm(field),
            cert: field.diagnostics.certificate,
        }
    }
}

/// Which variable a slope is fitted against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlopeAxis {
    /// `log L1` against `log lambda` at fixed `(component, k, l)`.
    Lambda,
    /// `log L1` against `log k` at fixed `(component, lambda, l)`.
    K,
    /// `log L1` against `log 2^l` at fixed `(component, lambda, k)`.
    L,
}

/// A fitted log-log slope with its least-squares confidence interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub axis: SlopeAxis,
    pub component: Component,
    /// The fixed coordinates of the series (`None` for the fitted one).
    pub lambda: Option<f64>,
    pub k: Option<u64>,
    pub l: Option<u32>,
    pub slope: f64,
    pub slope_stderr: f64,
    pub slope_ci95: f64,
    pub points: usize,
}

/// Rows of a study plus the slopes fitted from them.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NormTable {
    pub rows: Vec<NormRow>,
    pub slopes: Vec<SlopeFit>,
}

/// Header of the CSV form of a [`NormTable`].
pub const NORM_CSV_HEADER: [&str; 7] = ["lambda", "k", "l", "component", "l1", "linf", "cert"];

impl NormTable {
    /// RFC-4180 CSV with header `lambda,k,l,component,l1,linf,cert`; absent values are empty.
    pub fn to_csv(&self) -> String {
        let mut out = csv_record(&NORM_CSV_HEADER);
        for r in &self.rows {
            let comp = serde_json::to_value(r.component).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            out.push_str(&csv_record(&[
                format_float(r.lambda),
                r.k.to_string(),
                r.l.map(|l| l.to_string()).unwrap_or_default(),
                comp,
                format_float(r.l1),
                format_float(r.linf),
                r.cert.map(format_float).unwrap_or_default(),
            ]));
        }
        out
    }

    /// JSON summary of the fitted slopes.
    pub fn slopes_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.slopes)?)
    }

    /// The first slope of `axis` whose series matches the given fixed coordinates.
    pub fn slope(&self, axis: SlopeAxis, component: Component, lambda: Option<f64>, k: Option<u64>, l: Option<u32>) -> Option<&SlopeFit> {
        self.slopes.iter().find(|s| {
            s.axis == axis
                && s.component == component
                && (lambda.is_none() || s.lambda == lambda)
                && (k.is_none() || s.k == k)
                && (l.is_none() || s.l == l)
        })
    }
}

/// Assembles one piece.
pub fn assemble_piece(ctx: &WaveContext, piece: StudyPiece, opts: &KernelOptions) -> Result<KernelField> {
    match piece {
        StudyPiece::Main => assemble_k0(ctx, opts),
        StudyPiece::Band { k, l } => assemble_kkl(ctx, k, l, opts),
        StudyPiece::BandSum { k, big_l } => assemble_kk_band(ctx, k, big_l, opts),
    }
}

/// Assembles every requested piece at every `lambda`, records the norms and fits all
/// series with at least three points.
pub fn scaling_study(req: &StudyRequest, opts: &KernelOptions) -> Result<NormTable> {
    if req.lambdas.is_empty() || req.pieces.is_empty() {
        return Err(Error::InvalidArgument("a scaling study needs at least one lambda and one piece".into()));
    }
    let mut table = NormTable::default();
    for &lambda in &req.lambdas {
        let ctx = WaveContext::new(req.d1, req.d2, lambda, opts)?;
        for &piece in &req.pieces {
            let field = assemble_piece(&ctx, piece, opts)?;
            table.rows.push(NormRow::from_field(&field));
        }
    }
    table.slopes = fit_slopes(&table.rows);
    Ok(table)
}

/// Fits `log L1` against `log lambda`, `log k` and `log 2^l` along every series of rows
/// that differ only in that coordinate and have at least three distinct values of it.
pub fn fit_slopes(rows: &[NormRow]) -> Vec<SlopeFit> {
    let mut fits = Vec::new();
    for axis in [SlopeAxis::Lambda, SlopeAxis::K, SlopeAxis::L] {
        // Series key: the coordinates that stay fixed.
        let key = |r: &NormRow| -> (Component, Option<u64>, Option<u64>, Option<u32>) {
            match axis {
                SlopeAxis::Lambda => (r.component, None, Some(r.k), r.l),
                SlopeAxis::K => (r.component, Some(r.lambda.to_bits()), None, r.l),
                SlopeAxis::L => (r.component, Some(r.lambda.to_bits()), Some(r.k), None),
            }
        };
        let coord = |r: &NormRow| -> Option<f64> {
            match axis {
                SlopeAxis::Lambda => Some(r.lambda),
                SlopeAxis::K => (r.k >= 1).then_some(r.k as f64),
                SlopeAxis::L => r.l.map(|l| 2f64.powi(l as i32)),
            }
        };
        let mut keys: Vec<_> = Vec::new();
        for r in rows {
            if coord(r).is_some() && !keys.contains(&key(r)) {
                keys.push(key(r));
            }
        }
        for kk in keys {
            let series: Vec<&NormRow> = rows.iter().filter(|r| key(r) == kk && coord(r).is_some()).collect();
            let mut xs: Vec<f64> = series.iter().filter_map(|r| coord(r)).collect();
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            if xs.len() < 3 || xs.len() != series.len() {
                continue;
            }
            let x: Vec<f64> = series.iter().filter_map(|r| coord(r)).collect();
            let y: Vec<f64> = series.iter().map(|r| r.l1).collect();
            if let Ok(f) = fit_power_law(&x, &y) {
                let first = series[0];
                fits.push(SlopeFit {
                    axis,
                    component: first.component,
                    lambda: (axis != SlopeAxis::Lambda).then_some(first.lambda),
                    k: (axis != SlopeAxis::K).then_some(first.k),
                    l: if axis == SlopeAxis::L { None } else { first.l },
                    slope: f.slope,
                    slope_stderr: f.slope_stderr,
                    slope_ci95: f.slope_ci95,
                    points: f.points,
                });
            }
        }
    }
    fits
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(lambda: f64, k: u64, l: Option<u32>, l1: f64) -> NormRow {
        NormRow { lambda, k, l, component: Component::Full, l1, linf: 1.0, cert: None }
    }

    #[test]
    fn slopes_recover_exact_power_laws() {
        let mut rows = Vec::new();
        for lam in [32.0, 64.0, 128.0] {
            rows.push(row(lam, 2, Some(1), 3.0 * lam));
        }
        for k in [4u64, 8, 16] {
            rows.push(row(256.0, k, Some(1), (k as f64).powf(-1.5)));
        }
        for l in 2..=5u32 {
            rows.push(row(256.0, 1, Some(l), 2f64.powf(-1.5 * l as f64)));
        }
        let fits = fit_slopes(&rows);
        let t = NormTable { rows, slopes: fits };
        let s = t.slope(SlopeAxis::Lambda, Component::Full, None, Some(2), Some(1)).unwrap();
        assert!((s.slope - 1.0).abs() < 1e-12);
        let s = t.slope(SlopeAxis::K, Component::Full, Some(256.0), None, Some(1)).unwrap();
        assert!((s.slope + 1.5).abs() < 1e-12);
        let s = t.slope(SlopeAxis::L, Component::Full, Some(256.0), Some(1), None).unwrap();
        assert!((s.slope + 1.5).abs() < 1e-12);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let t = NormTable { rows: vec![row(32.0, 0, None, 1.5)], slopes: vec![] };
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "lambda,k,l,component,l1,linf,cert");
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), 7);
        assert_eq!(fields[1], "0");
        assert_eq!(fields[2], "");
        assert_eq!(fields[3], "full");
        assert_eq!(fields[4].parse::<f64>().unwrap(), 1.5);
    }
}
