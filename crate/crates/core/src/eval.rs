//! Estimator comparison: Pitman closeness, integrated mean square error,
//! quadratic error, and survival/hazard curve tables.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::fmt_g6;
use crate::model::{hazard, survival, ModelParams, Parameter};

/// Estimates from Monte-Carlo replications of one estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSet {
    estimates: Vec<ModelParams>,
    truth: ModelParams,
}

impl ReplicationSet {
    pub fn new(estimates: Vec<ModelParams>, truth: ModelParams) -> Result<Self> {
        if estimates.is_empty() {
            return Err(Error::InvalidParameter("replication set is empty".into()));
        }
        Ok(Self { estimates, truth })
    }

    pub fn estimates(&self) -> &[ModelParams] {
        &self.estimates
    }

    pub fn truth(&self) -> &ModelParams {
        &self.truth
    }

    pub fn len(&self) -> usize {
        self.estimates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }
}

/// Fraction of paired replications where `a` is strictly closer to the
/// truth than `b`. Ties count for neither.
pub fn pitman_probability(a: &ReplicationSet, b: &ReplicationSet, which: Parameter) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidParameter(format!(
            "Pitman comparison needs paired sets, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.truth != b.truth {
        return Err(Error::InvalidParameter("Pitman comparison across different truths".into()));
    }
    let theta = a.truth.get(which);
    let wins = a
        .estimates
        .iter()
        .zip(&b.estimates)
        .filter(|(x, y)| (x.get(which) - theta).abs() < (y.get(which) - theta).abs())
        .count();
    Ok(wins as f64 / a.len() as f64)
}

/// Mean of squared deviations from the truth.
pub fn imse(set: &ReplicationSet, which: Parameter) -> f64 {
    let theta = set.truth.get(which);
    set.estimates.iter().map(|e| (e.get(which) - theta).powi(2)).sum::<f64>() / set.len() as f64
}

/// Per-coordinate squared error, `(eta0, eta1, beta)` order.
pub fn quadratic_error(estimate: &ModelParams, truth: &ModelParams) -> [f64; 3] {
    Parameter::ALL.map(|w| (estimate.get(w) - truth.get(w)).powi(2))
}

/// Survival and hazard of several labeled parameter sets on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveTable {
    pub labels: Vec<String>,
    pub t: Vec<f64>,
    /// `survival[j][i]` is label `j` at `t[i]`.
    pub survival: Vec<Vec<f64>>,
    pub hazard: Vec<Vec<f64>>,
}

/// `n` equally spaced points on `[a, b]`.
pub fn time_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Default plotting grid: integer times 1..=50.
pub fn default_grid() -> Vec<f64> {
    time_grid(1.0, 50.0, 50)
}

pub fn curve_table(params: &[(String, ModelParams)], t_grid: &[f64]) -> Result<CurveTable> {
    if t_grid.is_empty() {
        return Err(Error::InvalidParameter("time grid is empty".into()));
    }
    if t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("time grid must be nondecreasing".into()));
    }
    let mut surv = Vec::with_capacity(params.len());
    let mut haz = Vec::with_capacity(params.len());
    for (_, p) in params {
        surv.push(t_grid.iter().map(|&t| survival(p, t)).collect::<Result<Vec<_>>>()?);
        haz.push(t_grid.iter().map(|&t| hazard(p, t)).collect::<Result<Vec<_>>>()?);
    }
    Ok(CurveTable {
        labels: params.iter().map(|(l, _)| l.clone()).collect(),
        t: t_grid.to_vec(),
        survival: surv,
        hazard: haz,
    })
}

impl CurveTable {
    /// Header `t,survival_<label>,hazard_<label>,...` then one row per time.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header = vec!["t".to_string()];
        for l in &self.labels {
            header.push(format!("survival_{l}"));
            header.push(format!("hazard_{l}"));
        }
        writeln!(out, "{}", header.join(","))?;
        for (i, t) in self.t.iter().enumerate() {
            let mut row = vec![fmt_g6(*t)];
            for j in 0..self.labels.len() {
                row.push(fmt_g6(self.survival[j][i]));
                row.push(fmt_g6(self.hazard[j][i]));
            }
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Two side-by-side line plots (survival, hazard) as a standalone SVG.
    pub fn to_svg(&self) -> String {
        const COLORS: [&str; 6] = ["#000000", "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"];
        let (w, h, pad) = (420.0, 300.0, 40.0);
        let t_min = self.t.first().copied().unwrap_or(0.0);
        let t_max = self.t.last().copied().unwrap_or(1.0).max(t_min + f64::EPSILON);
        let mut svg = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" font-size=\"11\">\n",
            2.0 * w,
            h + 20.0 * self.labels.len() as f64
        );
        for (panel, (title, series)) in [("survival", &self.survival), ("hazard", &self.hazard)]
            .into_iter()
            .enumerate()
        {
            let x0 = panel as f64 * w;
            let y_max = series.iter().flatten().copied().fold(0.0f64, f64::max).max(f64::EPSILON);
            let px = |t: f64| x0 + pad + (t - t_min) / (t_max - t_min) * (w - 2.0 * pad);
            let py = |v: f64| h - pad - v / y_max * (h - 2.0 * pad);
            svg.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>\n",
                x0 + pad,
                pad,
                w - 2.0 * pad,
                h - 2.0 * pad
            ));
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{title}</text>\n",
                x0 + w / 2.0,
                pad - 10.0
            ));
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\">{}</text><text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
                x0 + pad,
                h - pad + 14.0,
                fmt_g6(t_min),
                x0 + w - pad,
                h - pad + 14.0,
                fmt_g6(t_max)
            ));
            for (j, ys) in series.iter().enumerate() {
                let pts: Vec<String> = self
                    .t
                    .iter()
                    .zip(ys)
                    .map(|(&t, &v)| format!("{:.2},{:.2}", px(t), py(v)))
                    .collect();
                svg.push_str(&format!(
                    "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                    COLORS[j % COLORS.len()],
                    pts.join(" ")
                ));
            }
        }
        for (j, l) in self.labels.iter().enumerate() {
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" fill=\"{}\">{l}</text>\n",
                pad,
                h + 14.0 + 20.0 * j as f64,
                COLORS[j % COLORS.len()]
            ));
        }
        svg.push_str("</svg>\n");
        svg
    }
}
