use serde::{Deserialize, Serialize};

use super::HarnessError;

pub const FOOTER_LABEL: &str = "Average Performance";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OptimizerCell {
    /// Median test score of the final selection across seeds.
    pub test: Option<f64>,
    /// Median budget consumed, in ledger units.
    pub time: Option<f64>,
    /// Median anytime validation readout per configured fraction.
    pub anytime: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub dataset: String,
    pub task: String,
    pub metric: String,
    /// One cell per leaderboard optimizer, in the same order.
    pub cells: Vec<OptimizerCell>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard {
    pub optimizers: Vec<String>,
    pub fractions: Vec<f64>,
    pub rows: Vec<LeaderboardRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

fn percent(f: f64) -> String {
    let p = f * 100.0;
    if (p - p.round()).abs() < 1e-9 {
        format!("{}", p.round() as i64)
    } else {
        format!("{p}")
    }
}

impl Leaderboard {
    pub fn columns(&self) -> Vec<String> {
        let mut cols = Vec::new();
        for o in &self.optimizers {
            cols.push(format!("{o} Test"));
            cols.push(format!("{o} Time"));
            for &f in &self.fractions {
                cols.push(format!("{o} Anytime@{}%", percent(f)));
            }
        }
        cols
    }

    pub fn row_values(&self, row: &LeaderboardRow) -> Vec<Option<f64>> {
        let mut out = Vec::new();
        for i in 0..self.optimizers.len() {
            let empty = OptimizerCell::default();
            let cell = row.cells.get(i).unwrap_or(&empty);
            out.push(cell.test);
            out.push(cell.time);
            out.extend((0..self.fractions.len()).map(|k| cell.anytime.get(k).copied().flatten()));
        }
        out
    }

    /// Column means over the non-blank cells; blank where a column is empty.
    pub fn footer(&self) -> Vec<Option<f64>> {
        let values: Vec<_> = self.rows.iter().map(|r| self.row_values(r)).collect();
        (0..self.columns().len())
            .map(|j| {
                let present: Vec<f64> = values.iter().filter_map(|v| v[j]).collect();
                (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
            })
            .collect()
    }
}

pub fn render_report(board: &Leaderboard, format: ReportFormat) -> Result<String, HarnessError> {
    if board.rows.is_empty() {
        return Err(HarnessError::EmptyLeaderboard);
    }
    let mut body: Vec<Vec<String>> = Vec::new();
    let fmt = |v: Option<f64>| match (v, format) {
        (None, _) => String::new(),
        (Some(x), ReportFormat::Markdown) => format!("{x:.4}"),
        (Some(x), ReportFormat::Csv) => x.to_string(),
    };
    for row in &board.rows {
        let mut line = vec![row.dataset.clone(), row.task.clone(), row.metric.clone()];
        line.extend(board.row_values(row).into_iter().map(fmt));
        line.push(row.error.clone().unwrap_or_default());
        body.push(line);
    }
    let mut footer = vec![FOOTER_LABEL.to_string(), String::new(), String::new()];
    footer.extend(board.footer().into_iter().map(fmt));
    footer.push(String::new());
    let mut header = vec!["Dataset".to_string(), "Task".into(), "Metric".into()];
    header.extend(board.columns());
    header.push("Status".into());

    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for rec in std::iter::once(&header).chain(&body).chain(std::iter::once(&footer)) {
                w.write_record(rec).expect("write to memory");
            }
            Ok(String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8"))
        }
        ReportFormat::Markdown => {
            let line = |cells: &[String]| {
                let cells: Vec<String> = cells.iter().map(|c| c.replace('|', "\\|")).collect();
                format!("| {} |\n", cells.join(" | "))
            };
            let mut out = line(&header);
            let rule: Vec<String> = header
                .iter()
                .enumerate()
                .map(|(j, _)| if (3..header.len() - 1).contains(&j) { "---:".into() } else { "---".into() })
                .collect();
            out += &format!("|{}|\n", rule.join("|"));
            for b in &body {
                out += &line(b);
            }
            out += &line(&footer);
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn board() -> Leaderboard {
        let cell = |t: f64, time: f64| OptimizerCell { test: Some(t), time: Some(time), anytime: vec![Some(t - 0.1)] };
        Leaderboard {
            optimizers: vec!["random".into(), "hyperband".into()],
            fractions: vec![0.2],
            rows: vec![
                LeaderboardRow {
                    dataset: "a".into(),
                    task: "binary".into(),
                    metric: "balanced-accuracy".into(),
                    cells: vec![cell(0.6, 100.0), cell(0.7, 99.5)],
                    error: None,
                },
                LeaderboardRow {
                    dataset: "b".into(),
                    task: "binary".into(),
                    metric: "balanced-accuracy".into(),
                    cells: vec![cell(0.8, 100.0), OptimizerCell { test: None, time: None, anytime: vec![None] }],
                    error: None,
                },
            ],
        }
    }

    #[test]
    fn footer_means_skip_blanks() {
        let f = board().footer();
        assert!((f[0].unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(f[3], Some(0.7));
        assert_eq!(f[4], Some(99.5));
    }

    #[test]
    fn markdown_structure() {
        let mut b = board();
        b.rows.truncate(1);
        let md = render_report(&b, ReportFormat::Markdown).unwrap();
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("| Average Performance |"));
        assert!(lines[0].contains("hyperband Anytime@20%"));
    }

    #[test]
    fn csv_round_trips() {
        let b = board();
        let text = render_report(&b, ReportFormat::Csv).unwrap();
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let header = rd.headers().unwrap().clone();
        assert_eq!(header.len(), 3 + b.columns().len() + 1);
        let recs: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
        assert_eq!(recs.len(), 3);
        for (rec, row) in recs.iter().zip(&b.rows) {
            let back: Vec<Option<f64>> = (3..3 + b.columns().len())
                .map(|j| (!rec[j].is_empty()).then(|| rec[j].parse().unwrap()))
                .collect();
            assert_eq!(back, b.row_values(row));
        }
        assert_eq!(&recs[2][0], FOOTER_LABEL);
    }

    #[test]
    fn empty_board_is_rejected() {
        let mut b = board();
        b.rows.clear();
        assert!(render_report(&b, ReportFormat::Csv).is_err());
    }
}
