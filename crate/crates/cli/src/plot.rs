//! Plot data: projects an experiment table onto whitespace-separated
//! `x y [yerr]` files, one file per series.

use crate::config::ExperimentKind;
use crate::table::Table;

#[derive(Clone, Debug, PartialEq)]
pub struct PlotFile {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, thiserror::Error)]
pub enum PlotError {
    #[error("table has no column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: `{value}` in column `{column}` is not a number")]
    BadValue { row: usize, column: String, value: String },
}

enum Y {
    Col(&'static str),
    /// `log2` of the estimate, with the CI half-width mapped through the log.
    Log2Estimate,
}

struct Series {
    group: &'static [&'static str],
    x: &'static str,
    y: Y,
    suffix: &'static str,
}

fn layout(kind: ExperimentKind) -> Vec<Series> {
    use Y::*;
    match kind {
        ExperimentKind::FpCapRatio => vec![Series {
            group: &["family", "d", "beta"],
            x: "k",
            y: Col("ratio"),
            suffix: "ratio_vs_k",
        }],
        ExperimentKind::MainBand => vec![
            Series {
                group: &["family", "n"],
                x: "m",
                y: Col("ratio"),
                suffix: "ratio_vs_m",
            },
            Series {
                group: &["family", "m"],
                x: "n",
                y: Log2Estimate,
                suffix: "log2_hit_vs_n",
            },
        ],
        ExperimentKind::CapCompare => vec![
            Series {
                group: &[],
                x: "m",
                y: Col("log2_ratio"),
                suffix: "log2_ratio_vs_m",
            },
            Series {
                group: &[],
                x: "m",
                y: Col("lower_bound"),
                suffix: "lower_envelope",
            },
            Series {
                group: &[],
                x: "m",
                y: Col("upper_bound"),
                suffix: "upper_envelope",
            },
        ],
        ExperimentKind::PzDiag => vec![
            Series {
                group: &[],
                x: "id",
                y: Col("slack_uniform"),
                suffix: "slack_uniform",
            },
            Series {
                group: &[],
                x: "id",
                y: Col("slack_equilibrium"),
                suffix: "slack_equilibrium",
            },
        ],
        ExperimentKind::SrwBand => vec![Series {
            group: &["family", "radius"],
            x: "x_norm",
            y: Col("ratio"),
            suffix: "ratio_vs_x",
        }],
    }
}

fn col(t: &Table, name: &str) -> Result<usize, PlotError> {
    t.column(name).ok_or_else(|| PlotError::MissingColumn(name.into()))
}

fn num(t: &Table, row: usize, c: usize) -> Result<f64, PlotError> {
    let v = &t.rows[row][c];
    v.parse().map_err(|_| PlotError::BadValue {
        row,
        column: t.header[c].clone(),
        value: v.clone(),
    })
}

/// Series files for an experiment table. Groups appear in first-seen order;
/// an empty table gives one header-only file per series kind.
pub fn emit_plot_data(kind: ExperimentKind, table: &Table) -> Result<Vec<PlotFile>, PlotError> {
    let mut files = Vec::new();
    for s in layout(kind) {
        let gcols = s.group.iter().map(|g| col(table, g)).collect::<Result<Vec<_>, _>>()?;
        let xc = col(table, s.x)?;
        let (header, ycols) = match s.y {
            Y::Col(name) => (format!("# {} {}\n", s.x, name), vec![col(table, name)?]),
            Y::Log2Estimate => (
                format!("# {} log2_estimate log2_err\n", s.x),
                vec![col(table, "estimate")?, col(table, "ci_low")?, col(table, "ci_high")?],
            ),
        };
        let base = format!("{}_{}", kind.name(), s.suffix);
        if table.rows.is_empty() {
            files.push(PlotFile {
                name: format!("{base}.dat"),
                contents: header,
            });
            continue;
        }
        let mut groups: Vec<(String, String)> = Vec::new();
        for r in 0..table.rows.len() {
            let key: String = s
                .group
                .iter()
                .zip(&gcols)
                .map(|(g, &c)| format!("_{g}{}", table.rows[r][c]))
                .collect();
            let x = num(table, r, xc)?;
            let line = match s.y {
                Y::Col(_) => format!("{x} {}\n", num(table, r, ycols[0])?),
                Y::Log2Estimate => {
                    let (e, lo, hi) = (
                        num(table, r, ycols[0])?,
                        num(table, r, ycols[1])?,
                        num(table, r, ycols[2])?,
                    );
                    let err = (hi - lo) / 2.0 / (e * std::f64::consts::LN_2);
                    format!("{x} {} {err}\n", e.log2())
                }
            };
            match groups.iter_mut().find(|(k, _)| *k == key) {
                Some((_, body)) => body.push_str(&line),
                None => groups.push((key, header.clone() + &line)),
            }
        }
        for (key, contents) in groups {
            files.push(PlotFile {
                name: format!("{base}{key}.dat"),
                contents,
            });
        }
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_gives_header_only() {
        let t = Table::new(&["d", "beta", "p", "k", "family", "ratio"]);
        let f = emit_plot_data(ExperimentKind::FpCapRatio, &t).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].contents, "# k ratio\n");
    }

    #[test]
    fn one_series_per_family() {
        let mut t = Table::new(&["d", "beta", "k", "family", "ratio"]);
        for fam in ["singleton", "pair"] {
            for k in 4..6 {
                t.push(vec!["1".into(), "0.5".into(), k.to_string(), fam.into(), "1.5".into()]);
            }
        }
        let f = emit_plot_data(ExperimentKind::FpCapRatio, &t).unwrap();
        let names: Vec<&str> = f.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(
            names,
            [
                "fp_cap_ratio_ratio_vs_k_familysingleton_d1_beta0.5.dat",
                "fp_cap_ratio_ratio_vs_k_familypair_d1_beta0.5.dat"
            ]
        );
        assert_eq!(f[1].contents, "# k ratio\n4 1.5\n5 1.5\n");
        assert_eq!(f, emit_plot_data(ExperimentKind::FpCapRatio, &t).unwrap());
    }

    #[test]
    fn malformed_tables_are_rejected() {
        let t = Table::new(&["k"]);
        assert!(matches!(
            emit_plot_data(ExperimentKind::FpCapRatio, &t),
            Err(PlotError::MissingColumn(_))
        ));
        let mut t = Table::new(&["d", "beta", "k", "family", "ratio"]);
        t.push(vec!["1".into(), "1".into(), "x".into(), "pair".into(), "1".into()]);
        assert!(matches!(
            emit_plot_data(ExperimentKind::FpCapRatio, &t),
            Err(PlotError::BadValue { .. })
        ));
    }
}
