//! Credit-spread tables for the base-case study.
//!
//! Six tables, two per barrier shape (fixed `V_B` and discounted
//! `V_B·e^{−r(T−t)}`):
//!
//! | table | x column | value columns |
//! |-------|----------|---------------|
//! | fig1, fig4 | `p` over 0.10..=1.00 step 0.01 | `cs_T0.5`, `cs_T1`, `cs_T3` |
//! | fig2, fig5 | `T` over 0.1..=3 in 90 equal steps | `cs_p0.1`, `cs_p0.3`, `cs_p0.5`, `cs_p1` |
//! | fig3, fig6 | `T` as above | `price_p0.1`, `price_p0.3`, `price_p0.5`, `price_p1` |
//!
//! Every table has 91 rows. Values are written with 12 significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{DbondError, Result};
use crate::models::{validate_scenario, Barrier, Scenario};
use crate::pricing;

/// Maturities of the `CS − p` tables.
pub const SPREAD_MATURITIES: [f64; 3] = [0.5, 1.0, 3.0];
/// Intensities of the term-structure tables.
pub const CURVE_INTENSITIES: [f64; 4] = [0.1, 0.3, 0.5, 1.0];
pub const ROWS: usize = 91;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    /// Value columns (all but the first).
    pub fn value_columns(&self) -> impl Iterator<Item = (&str, Vec<f64>)> + '_ {
        (1..self.header.len()).map(move |j| {
            (self.header[j].as_str(), self.rows.iter().map(|r| r[j]).collect())
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| format_value(x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Fixed 12-significant-digit scientific notation.
pub fn format_value(x: f64) -> String {
    format!("{x:.11e}")
}

/// `p` grid of the `CS − p` tables.
pub fn intensity_grid() -> Vec<f64> {
    (0..ROWS).map(|i| (10 + i) as f64 / 100.0).collect()
}

/// `T` grid of the term-structure tables, measured from the valuation time.
pub fn maturity_grid(t: f64) -> Vec<f64> {
    (0..ROWS).map(|i| t + 0.1 + 2.9 * i as f64 / (ROWS - 1) as f64).collect()
}

fn label(x: f64) -> String {
    format!("{x}")
}

fn with_barrier(base: &Scenario, discounted: bool) -> Result<Scenario> {
    let level = base.barrier().level().ok_or_else(|| {
        DbondError::UnsupportedCase("the spread tables need a barrier level".into())
    })?;
    let mut s = base.clone();
    s.default_spec.barrier = if discounted {
        Barrier::Discounted { level }
    } else {
        Barrier::Constant { level }
    };
    Ok(s)
}

fn spread_vs_intensity(name: &str, s: &Scenario) -> Result<Table> {
    let mut header = vec!["p".to_string()];
    header.extend(SPREAD_MATURITIES.iter().map(|&t| format!("cs_T{}", label(t))));
    let rows = intensity_grid()
        .into_iter()
        .map(|p| {
            let mut row = vec![p];
            for &tau in &SPREAD_MATURITIES {
                let mut si = s.clone();
                si.p0 = p;
                si.window = si.window.with_maturity(si.window.t + tau);
                row.push(pricing::credit_spread(&validate_scenario(si)?)?);
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table { name: name.into(), header, rows })
}

/// Term-structure tables: spread and price against maturity, one column per `p`.
fn term_tables(spread_name: &str, price_name: &str, s: &Scenario) -> Result<(Table, Table)> {
    let maturities = maturity_grid(s.window.t);
    let mut columns = Vec::with_capacity(CURVE_INTENSITIES.len());
    for &p in &CURVE_INTENSITIES {
        let mut si = s.clone();
        si.p0 = p;
        si.window = si.window.with_maturity(maturities[0]);
        columns.push(pricing::term_structure(&validate_scenario(si)?, &maturities)?);
    }
    let header_for = |prefix: &str| {
        let mut h = vec!["T".to_string()];
        h.extend(CURVE_INTENSITIES.iter().map(|&p| format!("{prefix}_p{}", label(p))));
        h
    };
    let rows_for = |f: &dyn Fn(&pricing::TermPoint) -> f64| {
        (0..maturities.len())
            .map(|i| {
                let mut row = vec![maturities[i] - s.window.t];
                row.extend(columns.iter().map(|c| f(&c[i])));
                row
            })
            .collect::<Vec<_>>()
    };
    Ok((
        Table { name: spread_name.into(), header: header_for("cs"), rows: rows_for(&|q| q.spread) },
        Table { name: price_name.into(), header: header_for("price"), rows: rows_for(&|q| q.price) },
    ))
}

/// All six tables for `base`, whose barrier level sets `V_B`.
pub fn figure_tables(base: &Scenario) -> Result<Vec<Table>> {
    let mut out = Vec::with_capacity(6);
    for (discounted, names) in [(false, ["fig1", "fig2", "fig3"]), (true, ["fig4", "fig5", "fig6"])] {
        let s = with_barrier(base, discounted)?;
        out.push(spread_vs_intensity(names[0], &s)?);
        let (cs, price) = term_tables(names[1], names[2], &s)?;
        out.push(cs);
        out.push(price);
    }
    Ok(out)
}

/// Writes `<name>.csv` for every table into `dir`, creating it if needed.
pub fn write_tables(tables: &[Table], dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    tables
        .iter()
        .map(|t| {
            let path = dir.join(format!("{}.csv", t.name));
            fs::write(&path, t.to_csv())?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_have_ninety_one_points() {
        let p = intensity_grid();
        assert_eq!(p.len(), ROWS);
        assert_eq!(p[0], 0.1);
        assert_eq!(p[90], 1.0);
        let t = maturity_grid(0.0);
        assert_eq!(t.len(), ROWS);
        assert!((t[90] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn csv_layout() {
        let t = Table {
            name: "x".into(),
            header: vec!["a".into(), "b".into()],
            rows: vec![vec![0.1, 1.0 / 3.0]],
        };
        assert_eq!(t.to_csv(), "a,b\n1.00000000000e-1,3.33333333333e-1\n");
    }

    #[test]
    fn base_case_tables() {
        let tables = figure_tables(&Scenario::base_case()).unwrap();
        let names: Vec<_> = tables.iter().map(|t| t.name.as_str()).collect();
        assert_eq!(names, ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6"]);
        for t in &tables {
            assert_eq!(t.rows.len(), ROWS);
            assert!(t.rows.iter().all(|r| r.len() == t.header.len()));
        }
        assert_eq!(tables[1].header, ["T", "cs_p0.1", "cs_p0.3", "cs_p0.5", "cs_p1"]);
    }
}
