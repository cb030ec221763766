//! Per-paper variable table, field-year normalization and descriptive artifacts.

use std::collections::BTreeMap;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantile::{ordered_mean, percentile_sorted};

mod regress;

pub use regress::{
    fit, marginal_effect, turning_point, Family, RegressionFit, RegressionSpec, Term,
};

/// Column store keyed by document. Numeric columns may hold missing values;
/// factor columns hold categorical keys (year, category, journal).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VariableTable {
    doc_ids: Vec<String>,
    columns: IndexMap<String, Vec<Option<f64>>>,
    factors: IndexMap<String, Vec<Option<String>>>,
}

impl VariableTable {
    pub fn new(doc_ids: Vec<String>) -> Self {
        Self {
            doc_ids,
            ..Self::default()
        }
    }

    pub fn n_rows(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    fn check_len(&self, name: &str, len: usize) -> Result<()> {
        if len != self.n_rows() {
            return Err(Error::invalid(format!(
                "column `{name}` has {len} rows, table has {}",
                self.n_rows()
            )));
        }
        Ok(())
    }

    pub fn add_column(&mut self, name: &str, values: Vec<Option<f64>>) -> Result<()> {
        self.check_len(name, values.len())?;
        self.columns.insert(name.to_string(), values);
        Ok(())
    }

    pub fn add_factor(&mut self, name: &str, values: Vec<Option<String>>) -> Result<()> {
        self.check_len(name, values.len())?;
        self.factors.insert(name.to_string(), values);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Result<&[Option<f64>]> {
        self.columns
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::NotFound {
                kind: "column",
                id: name.to_string(),
            })
    }

    pub fn factor(&self, name: &str) -> Result<&[Option<String>]> {
        self.factors
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::NotFound {
                kind: "factor",
                id: name.to_string(),
            })
    }

    /// Factor values, or a numeric column rendered as keys.
    pub fn keys(&self, name: &str) -> Result<Vec<Option<String>>> {
        if let Some(f) = self.factors.get(name) {
            return Ok(f.clone());
        }
        Ok(self
            .column(name)?
            .iter()
            .map(|v| v.map(|x| format!("{x}")))
            .collect())
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    pub fn factor_names(&self) -> impl Iterator<Item = &str> {
        self.factors.keys().map(String::as_str)
    }

    /// Add `fw_<name>` for each column: percentile rank within the groups
    /// formed by the given factors.
    pub fn add_field_weighted(&mut self, columns: &[&str], group_by: &[&str]) -> Result<()> {
        let mut groups: Vec<Vec<Option<String>>> = vec![Vec::new(); self.n_rows()];
        for g in group_by {
            for (row, key) in self.keys(g)?.into_iter().enumerate() {
                groups[row].push(key);
            }
        }
        for c in columns {
            let fw = percentile_rank_by_group(self.column(c)?, &groups)?;
            self.add_column(&format!("fw_{c}"), fw)?;
        }
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["doc_id".to_string()];
        header.extend(self.factors.keys().cloned());
        header.extend(self.columns.keys().cloned());
        w.write_record(&header)?;
        for row in 0..self.n_rows() {
            let mut rec = vec![self.doc_ids[row].clone()];
            rec.extend(
                self.factors
                    .values()
                    .map(|f| f[row].clone().unwrap_or_default()),
            );
            rec.extend(self.columns.values().map(|c| fmt_opt(c[row])));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Read a table written by [`write_csv`](Self::write_csv); `factor_columns`
    /// names the non-numeric columns.
    pub fn read_csv(path: &Path, factor_columns: &[&str]) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut ids = Vec::new();
        let mut cells: Vec<Vec<String>> = vec![Vec::new(); header.len()];
        for rec in r.records() {
            let rec = rec?;
            ids.push(rec[0].to_string());
            for (k, v) in rec.iter().enumerate() {
                cells[k].push(v.to_string());
            }
        }
        let mut t = Self::new(ids);
        for (k, name) in header.iter().enumerate().skip(1) {
            let col = std::mem::take(&mut cells[k]);
            if factor_columns.contains(&name.as_str()) {
                let v = col
                    .into_iter()
                    .map(|s| (!s.is_empty()).then_some(s))
                    .collect();
                t.add_factor(name, v)?;
            } else {
                let mut v = Vec::with_capacity(col.len());
                for (row, s) in col.iter().enumerate() {
                    v.push(if s.is_empty() {
                        None
                    } else {
                        Some(s.parse::<f64>().map_err(|e| Error::Parse {
                            path: path.to_path_buf(),
                            line: row + 2,
                            message: format!("column `{name}`: {e}"),
                        })?)
                    });
                }
                t.add_column(name, v)?;
            }
        }
        Ok(t)
    }
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// Percentile rank within groups: average ranks for ties, scaled to
/// `(rank - 1) / (n - 1)`; singleton groups get 0.5; missing stays missing.
pub fn percentile_rank_by_group<K: Ord>(
    values: &[Option<f64>],
    groups: &[K],
) -> Result<Vec<Option<f64>>> {
    if values.len() != groups.len() {
        return Err(Error::invalid("values and groups differ in length"));
    }
    let mut members: BTreeMap<&K, Vec<usize>> = BTreeMap::new();
    for (row, v) in values.iter().enumerate() {
        match v {
            Some(x) if x.is_nan() => return Err(Error::invalid("NaN in percentile-rank input")),
            Some(_) => members.entry(&groups[row]).or_default().push(row),
            None => {}
        }
    }
    let mut out = vec![None; values.len()];
    for rows in members.into_values() {
        let n = rows.len();
        if n == 1 {
            out[rows[0]] = Some(0.5);
            continue;
        }
        let mut sorted = rows.clone();
        sorted.sort_by(|a, b| values[*a].unwrap().total_cmp(&values[*b].unwrap()));
        let mut k = 0;
        while k < n {
            let mut e = k;
            while e + 1 < n && values[sorted[e + 1]] == values[sorted[k]] {
                e += 1;
            }
            // 0-based average rank of the tie block is (k + e) / 2
            let r = (k + e) as f64 / (2 * (n - 1)) as f64;
            for row in &sorted[k..=e] {
                out[*row] = Some(r);
            }
            k = e + 1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub column: String,
    pub n: usize,
    pub min: Option<f64>,
    pub p25: Option<f64>,
    pub median: Option<f64>,
    pub mean: Option<f64>,
    pub p75: Option<f64>,
    pub max: Option<f64>,
    pub sd: Option<f64>,
}

pub fn summarize(name: &str, values: &[Option<f64>]) -> SummaryRow {
    let mut xs: Vec<f64> = values.iter().flatten().copied().collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        return SummaryRow {
            column: name.to_string(),
            n,
            min: None,
            p25: None,
            median: None,
            mean: None,
            p75: None,
            max: None,
            sd: None,
        };
    }
    let mean = ordered_mean(&xs).unwrap();
    let sd = (n > 1).then(|| {
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
        (crate::quantile::ordered_sum(&dev) / (n - 1) as f64).sqrt()
    });
    SummaryRow {
        column: name.to_string(),
        n,
        min: Some(xs[0]),
        p25: Some(percentile_sorted(&xs, 25.0)),
        median: Some(percentile_sorted(&xs, 50.0)),
        mean: Some(mean),
        p75: Some(percentile_sorted(&xs, 75.0)),
        max: Some(xs[n - 1]),
        sd,
    }
}

pub fn summary_stats(table: &VariableTable, columns: &[&str]) -> Result<Vec<SummaryRow>> {
    columns
        .iter()
        .map(|c| Ok(summarize(c, table.column(c)?)))
        .collect()
}

/// Pearson correlation over rows where both values are present.
pub fn pearson(a: &[Option<f64>], b: &[Option<f64>]) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = a
        .iter()
        .zip(b)
        .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
        .unzip();
    if xs.len() < 2 {
        return None;
    }
    let mx = ordered_mean(&xs)?;
    let my = ordered_mean(&ys)?;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Correlogram {
    pub columns: Vec<String>,
    pub matrix: Vec<Vec<Option<f64>>>,
    /// Leaf order of the clustered columns; zero-variance columns are absent.
    pub order: Vec<String>,
}

impl Correlogram {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let pos: BTreeMap<&str, usize> = self
            .columns
            .iter()
            .enumerate()
            .map(|(k, c)| (c.as_str(), k))
            .collect();
        let mut ordered: Vec<&str> = self.order.iter().map(String::as_str).collect();
        ordered.extend(
            self.columns
                .iter()
                .map(String::as_str)
                .filter(|c| !self.order.iter().any(|o| o == c)),
        );
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["column"];
        header.extend(&ordered);
        w.write_record(&header)?;
        for a in &ordered {
            let mut rec = vec![a.to_string()];
            rec.extend(ordered.iter().map(|b| fmt_opt(self.matrix[pos[a]][pos[b]])));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn has_variance(v: &[Option<f64>]) -> bool {
    let mut it = v.iter().flatten();
    match it.next() {
        Some(first) => it.any(|x| x != first),
        None => false,
    }
}

/// Average-linkage agglomeration; returns leaf order. Ties merge the
/// lowest-indexed pair first and the cluster holding the smaller leaf index
/// goes left.
pub fn average_linkage_order(dist: &[Vec<f64>]) -> Vec<usize> {
    let n = dist.len();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let linkage = |a: &[usize], b: &[usize]| {
        let s: f64 = a
            .iter()
            .flat_map(|i| b.iter().map(move |j| dist[*i][*j]))
            .sum();
        s / (a.len() * b.len()) as f64
    };
    while clusters.len() > 1 {
        let mut best = (f64::INFINITY, 0, 1);
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let d = linkage(&clusters[a], &clusters[b]);
                if d < best.0 {
                    best = (d, a, b);
                }
            }
        }
        let (_, a, b) = best;
        let right = clusters.remove(b);
        let left = &mut clusters[a];
        if right.iter().min() < left.iter().min() {
            let l = std::mem::replace(left, right);
            left.extend(l);
        } else {
            left.extend(right);
        }
    }
    clusters.pop().unwrap_or_default()
}

pub fn correlogram(table: &VariableTable, columns: &[&str]) -> Result<Correlogram> {
    if columns.len() < 2 {
        return Err(Error::invalid("correlogram needs at least two columns"));
    }
    let data: Vec<&[Option<f64>]> = columns
        .iter()
        .map(|c| table.column(c))
        .collect::<Result<_>>()?;
    let live: Vec<bool> = data.iter().map(|d| has_variance(d)).collect();
    let k = columns.len();
    let mut matrix = vec![vec![None; k]; k];
    for a in 0..k {
        for b in 0..k {
            if live[a] && live[b] {
                matrix[a][b] = if a == b {
                    Some(1.0)
                } else {
                    pearson(data[a], data[b])
                };
            }
        }
    }
    let kept: Vec<usize> = (0..k).filter(|i| live[*i]).collect();
    let dist: Vec<Vec<f64>> = kept
        .iter()
        .map(|a| {
            kept.iter()
                .map(|b| 1.0 - matrix[*a][*b].unwrap_or(0.0))
                .collect()
        })
        .collect();
    let order = average_linkage_order(&dist)
        .into_iter()
        .map(|i| columns[kept[i]].to_string())
        .collect();
    Ok(Correlogram {
        columns: columns.iter().map(|c| c.to_string()).collect(),
        matrix,
        order,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceCell {
    pub ix: usize,
    pub iy: usize,
    pub count: usize,
    pub mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Surface {
    pub x_edges: Vec<f64>,
    pub y_edges: Vec<f64>,
    pub cells: Vec<SurfaceCell>,
}

impl Surface {
    pub fn cell(&self, ix: usize, iy: usize) -> Option<&SurfaceCell> {
        self.cells.iter().find(|c| c.ix == ix && c.iy == iy)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "ix", "iy", "x_lo", "x_hi", "y_lo", "y_hi", "count", "mean", "empty",
        ])?;
        for c in &self.cells {
            w.write_record([
                c.ix.to_string(),
                c.iy.to_string(),
                self.x_edges[c.ix].to_string(),
                self.x_edges[c.ix + 1].to_string(),
                self.y_edges[c.iy].to_string(),
                self.y_edges[c.iy + 1].to_string(),
                c.count.to_string(),
                fmt_opt(c.mean),
                (c.count == 0).to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

struct Axis {
    lo: f64,
    width: f64,
    bins: usize,
}

impl Axis {
    fn new(xs: impl Iterator<Item = f64> + Clone, bins: usize) -> Self {
        let lo = xs.clone().fold(f64::INFINITY, f64::min);
        let hi = xs.fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            Axis {
                lo,
                width: (hi - lo) / bins as f64,
                bins,
            }
        } else {
            Axis {
                lo,
                width: 0.0,
                bins: 1,
            }
        }
    }

    fn bin(&self, x: f64) -> usize {
        if self.width == 0.0 {
            return 0;
        }
        (((x - self.lo) / self.width).floor() as usize).min(self.bins - 1)
    }

    fn edges(&self) -> Vec<f64> {
        (0..=self.bins)
            .map(|k| self.lo + k as f64 * self.width)
            .collect()
    }
}

/// Mean of `z` over an equal-width grid on `x` and `y`.
pub fn binned_surface(
    table: &VariableTable,
    x: &str,
    y: &str,
    z: &str,
    bins: usize,
) -> Result<Surface> {
    if bins < 2 {
        return Err(Error::invalid("binned surface needs at least 2 bins"));
    }
    let (cx, cy, cz) = (table.column(x)?, table.column(y)?, table.column(z)?);
    let rows: Vec<(f64, f64, f64)> = (0..table.n_rows())
        .filter_map(|r| Some((cx[r]?, cy[r]?, cz[r]?)))
        .collect();
    if rows.is_empty() {
        return Err(Error::invalid("no complete rows for binned surface"));
    }
    let ax = Axis::new(rows.iter().map(|r| r.0), bins);
    let ay = Axis::new(rows.iter().map(|r| r.1), bins);
    let mut acc: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for (a, b, c) in &rows {
        acc.entry((ax.bin(*a), ay.bin(*b))).or_default().push(*c);
    }
    let mut cells = Vec::new();
    for ix in 0..ax.bins {
        for iy in 0..ay.bins {
            let zs = acc.get(&(ix, iy)).map(Vec::as_slice).unwrap_or_default();
            cells.push(SurfaceCell {
                ix,
                iy,
                count: zs.len(),
                mean: ordered_mean(zs),
            });
        }
    }
    Ok(Surface {
        x_edges: ax.edges(),
        y_edges: ay.edges(),
        cells,
    })
}
