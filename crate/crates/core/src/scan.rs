//! Parameter-plane scans: a grid of cells over the region
//! `1 < β < 2, 0 ≤ α ≤ 2 - β`, one [`ScanRecord`] per cell.
//!
//! Interior cells are approximated by a finite-type point; boundary cells
//! are classified only. Failures are recorded in the row and never abort the
//! scan. The output order is the grid order regardless of execution mode.

use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};

use crate::density::{self, ApproxConfig};
use crate::dynamics::{ExactParams, Fiber, ParamSource};
use crate::error::{Error, Result};
use crate::expr::Number;
use crate::real::Real;
use crate::subshift::{self, Classification};
use crate::words::EventuallyPeriodicWord;

/// Significant digits of every decimal in a record.
pub const DIGITS: usize = 20;

pub const COLUMNS: [&str; 12] = [
    "beta",
    "alpha",
    "status",
    "n_used",
    "period_lower",
    "period_upper",
    "b",
    "a",
    "entropy",
    "err_beta",
    "err_alpha",
    "note",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanStatus {
    FiniteType,
    Sofic,
    Undetermined,
    /// The cell could not be processed; `note` carries the error.
    Failed,
}

impl ScanStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ScanStatus::FiniteType => "finite_type",
            ScanStatus::Sofic => "sofic",
            ScanStatus::Undetermined => "undetermined",
            ScanStatus::Failed => "failed",
        }
    }
}

/// One CSV row. Decimals are kept as their printed text so that a parsed
/// file compares equal to the records that produced it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub beta: String,
    pub alpha: String,
    pub status: ScanStatus,
    pub n_used: Option<usize>,
    pub period_lower: Option<usize>,
    pub period_upper: Option<usize>,
    pub b: Option<String>,
    pub a: Option<String>,
    pub entropy: Option<String>,
    pub err_beta: Option<String>,
    pub err_alpha: Option<String>,
    pub note: Option<String>,
}

impl ScanRecord {
    fn blank(beta: &Real, alpha: &Real, status: ScanStatus) -> Self {
        ScanRecord {
            beta: decimal(beta),
            alpha: decimal(alpha),
            status,
            n_used: None,
            period_lower: None,
            period_upper: None,
            b: None,
            a: None,
            entropy: None,
            err_beta: None,
            err_alpha: None,
            note: None,
        }
    }

    /// Checks that the error columns are filled exactly for finite-type rows.
    pub fn is_consistent(&self) -> bool {
        let errs = self.err_beta.is_some() && self.err_alpha.is_some();
        let none = self.err_beta.is_none() && self.err_alpha.is_none();
        if self.status == ScanStatus::FiniteType {
            errs
        } else {
            none
        }
    }
}

fn decimal(x: &Real) -> String {
    x.to_decimal(DIGITS)
}

/// A scan cell, in grid order.
#[derive(Clone, Debug)]
pub struct Cell {
    pub index: usize,
    pub params: ExactParams,
}

/// Grid layout. `β` takes `beta_steps` values strictly between `beta_min`
/// and `beta_max`; at each `β`, `α = t (2 - β)` with `t` evenly spaced in
/// `(0, 1)`, or in `[0, 1]` when `closed` is set.
#[derive(Clone, Debug)]
pub struct Grid {
    pub beta_min: Number,
    pub beta_max: Number,
    pub beta_steps: usize,
    pub alpha_steps: usize,
    pub closed: bool,
    /// Extra points appended after the grid.
    pub extra: Vec<ExactParams>,
}

impl Grid {
    pub fn new(beta_steps: usize, alpha_steps: usize) -> Self {
        Grid {
            beta_min: Number::rational(1, 1),
            beta_max: Number::rational(2, 1),
            beta_steps,
            alpha_steps,
            closed: false,
            extra: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.beta_steps * self.alpha_steps + self.extra.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cells(&self) -> Result<Vec<Cell>> {
        let mut out = Vec::with_capacity(self.len());
        let (lo, hi) = (self.beta_min.text(), self.beta_max.text());
        for i in 0..self.beta_steps {
            let beta = format!("({lo}) + (({hi}) - ({lo})) * {}/{}", i + 1, self.beta_steps + 1);
            for j in 0..self.alpha_steps {
                let t = match (self.closed, self.alpha_steps) {
                    (true, 1) => "1/2".to_string(),
                    (true, s) => format!("{j}/{}", s - 1),
                    (false, s) => format!("{}/{}", j + 1, s + 1),
                };
                let alpha = format!("({t}) * (2 - ({beta}))");
                out.push(Cell { index: out.len(), params: ExactParams::parse(&beta, &alpha)? });
            }
        }
        for p in &self.extra {
            out.push(Cell { index: out.len(), params: p.clone() });
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Parallel,
    Sequential,
}

#[derive(Clone, Debug)]
pub struct ScanConfig {
    pub approx: ApproxConfig,
    pub eps: Number,
    pub execution: Execution,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { approx: ApproxConfig::default(), eps: Number::rational(1, 100), execution: Execution::Parallel }
    }
}

/// Runs every cell of `grid`; records come back in grid order.
pub fn run(grid: &Grid, config: &ScanConfig) -> Result<Vec<ScanRecord>> {
    let cells = grid.cells()?;
    let eps = config.eps.eval(config.approx.precision.start)?;
    if !eps.is_positive() {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let mut indexed = match config.execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            cells.par_iter().map(|c| (c.index, run_cell(c, &eps, config))).collect::<Vec<_>>()
        }
        _ => cells.iter().map(|c| (c.index, run_cell(c, &eps, config))).collect::<Vec<_>>(),
    };
    indexed.sort_by_key(|(i, _)| *i);
    Ok(indexed.into_iter().map(|(_, r)| r).collect())
}

/// Processes a single cell.
pub fn run_cell(cell: &Cell, eps: &Real, config: &ScanConfig) -> ScanRecord {
    let bits = config.approx.precision.start;
    let params = match cell.params.params(bits) {
        Ok(p) => p,
        Err(e) => {
            let nan = Real::zero(bits);
            let mut r = ScanRecord::blank(&nan, &nan, ScanStatus::Failed);
            r.beta = cell.params.beta.text().to_string();
            r.alpha = cell.params.alpha.text().to_string();
            r.note = Some(e.to_string());
            return r;
        }
    };
    let (beta, alpha) = (params.beta().clone(), params.alpha().clone());
    if params.fiber() == Fiber::Interior {
        match density::approximate_sft(&cell.params, eps, &config.approx) {
            Ok(ap) => {
                let mut r = ScanRecord::blank(&beta, &alpha, ScanStatus::FiniteType);
                r.n_used = Some(ap.n_used);
                r.period_lower = Some(ap.pair.0.period_len());
                r.period_upper = Some(ap.pair.1.period_len());
                r.b = Some(decimal(&ap.target_b));
                r.a = Some(decimal(&ap.target_a));
                r.entropy = Some(decimal(&ap.certificate.entropy));
                r.err_beta = Some(decimal(&ap.err_beta.abs()));
                r.err_alpha = Some(decimal(&ap.err_alpha.abs()));
                return r;
            }
            Err(e) => {
                let mut r = classified(&cell.params, &beta, &alpha, config);
                r.note = Some(match r.note.take() {
                    Some(n) => format!("approximation failed: {e}; {n}"),
                    None => format!("approximation failed: {e}"),
                });
                return r;
            }
        }
    }
    classified(&cell.params, &beta, &alpha, config)
}

fn classified(source: &ExactParams, beta: &Real, alpha: &Real, config: &ScanConfig) -> ScanRecord {
    let bits = config.approx.precision.start;
    let class = match subshift::classify(source, config.approx.precision, config.approx.max_len) {
        Ok(c) => c,
        Err(e) => {
            let mut r = ScanRecord::blank(beta, alpha, ScanStatus::Failed);
            r.note = Some(e.to_string());
            return r;
        }
    };
    match class {
        Classification::FiniteType { certificate } => {
            let mut r = ScanRecord::blank(beta, alpha, ScanStatus::FiniteType);
            r.n_used = Some(0);
            r.period_lower = Some(certificate.pair.0.period_len());
            r.period_upper = Some(certificate.pair.1.period_len());
            r.b = Some(decimal(beta));
            r.a = Some(decimal(alpha));
            r.entropy = Some(decimal(&certificate.entropy));
            r.err_beta = Some("0".into());
            r.err_alpha = Some("0".into());
            r
        }
        Classification::Sofic { lower, upper } => {
            let mut r = ScanRecord::blank(beta, alpha, ScanStatus::Sofic);
            r.period_lower = Some(lower.period_len());
            r.period_upper = Some(upper.period_len());
            r.entropy = sofic_entropy(&lower, &upper, bits).map(|h| decimal(&h));
            r
        }
        Classification::Undetermined { prefix_len } => {
            let mut r = ScanRecord::blank(beta, alpha, ScanStatus::Undetermined);
            r.note = Some(format!("no period within {prefix_len} digits"));
            r
        }
    }
}

fn sofic_entropy(lower: &EventuallyPeriodicWord, upper: &EventuallyPeriodicWord, bits: u32) -> Option<Real> {
    subshift::build_automaton(lower, upper).ok().map(|aut| aut.entropy(bits))
}

/// Writes the header and one line per record.
pub fn write_csv<W: io::Write>(records: &[ScanRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let io_err = |e: csv::Error| Error::Io(format!("writing CSV: {e}"));
    w.write_record(COLUMNS).map_err(io_err)?;
    for r in records {
        w.serialize(r).map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::Io(format!("writing CSV: {e}")))
}

pub fn read_csv<R: io::Read>(input: R) -> Result<Vec<ScanRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(|e| Error::Io(format!("reading CSV: {e}")))?;
    if header.iter().ne(COLUMNS) {
        return Err(Error::Io("unexpected CSV header".into()));
    }
    rd.deserialize().map(|r| r.map_err(|e| Error::Io(format!("reading CSV: {e}")))).collect()
}

/// Static scatter of the found parameters over the region outline.
pub fn render_svg(records: &[ScanRecord]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 640.0;
    const PAD: f64 = 40.0;
    let sx = |beta: f64| PAD + (beta - 1.0) * (W - 2.0 * PAD);
    let sy = |alpha: f64| H - PAD - alpha * (H - 2.0 * PAD);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="none" stroke="black" stroke-width="1"/>"#,
        sx(1.0),
        sy(0.0),
        sx(2.0),
        sy(0.0),
        sx(1.0),
        sy(1.0)
    );
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="12">beta</text>"#, W / 2.0, H - 10.0);
    let _ = writeln!(s, r#"<text x="10" y="{:.2}" font-size="12">alpha</text>"#, H / 2.0);
    for r in records {
        let (Ok(beta), Ok(alpha)) = (r.beta.parse::<f64>(), r.alpha.parse::<f64>()) else { continue };
        let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="2" fill="#bbbbbb"/>"##, sx(beta), sy(alpha));
        let colour = match r.status {
            ScanStatus::FiniteType => "#1f5fbf",
            ScanStatus::Sofic => "#2a9d4b",
            ScanStatus::Undetermined => "#e0a000",
            ScanStatus::Failed => "#c0392b",
        };
        let (x, y) = match (r.b.as_deref().map(str::parse::<f64>), r.a.as_deref().map(str::parse::<f64>)) {
            (Some(Ok(b)), Some(Ok(a))) => (b, a),
            _ => (beta, alpha),
        };
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{colour}"/>"#, sx(x), sy(y));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ScanConfig {
        ScanConfig { eps: Number::rational(1, 100), ..ScanConfig::default() }
    }

    #[test]
    fn empty_grid_writes_header_only() {
        let recs = run(&Grid::new(0, 5), &config()).unwrap();
        assert!(recs.is_empty());
        let mut buf = Vec::new();
        write_csv(&recs, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", COLUMNS.join(",")));
    }

    #[test]
    fn small_grid_round_trips() {
        let mut grid = Grid::new(2, 2);
        grid.extra.push(ExactParams::golden());
        let recs = run(&grid, &config()).unwrap();
        assert_eq!(recs.len(), 5);
        assert!(recs.iter().all(|r| r.status == ScanStatus::FiniteType && r.is_consistent()));
        let golden = &recs[4];
        assert_eq!(golden.err_beta.as_deref(), Some("0"));
        assert_eq!(golden.err_alpha.as_deref(), Some("0"));
        assert_eq!(golden.entropy.as_ref().unwrap()[..12], "0.4812118250"[..12]);
        let mut buf = Vec::new();
        write_csv(&recs, &mut buf).unwrap();
        assert_eq!(read_csv(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn closed_grid_classifies_boundary() {
        let mut grid = Grid::new(1, 3);
        grid.closed = true;
        let cells = grid.cells().unwrap();
        assert_eq!(cells.len(), 3);
        let recs = run(&grid, &config()).unwrap();
        // β = 3/2 has a non-periodic greedy expansion of 1
        assert_eq!(recs[0].status, ScanStatus::Undetermined);
        assert_eq!(recs[2].status, ScanStatus::Undetermined);
        assert_eq!(recs[0].alpha, "0");
        assert_eq!(recs[1].status, ScanStatus::FiniteType);
        assert!(recs.iter().all(ScanRecord::is_consistent));
    }

    #[test]
    fn sequential_matches_parallel() {
        let grid = Grid::new(3, 3);
        let par = run(&grid, &config()).unwrap();
        let seq = run(&grid, &ScanConfig { execution: Execution::Sequential, ..config() }).unwrap();
        assert_eq!(par, seq);
    }
}
