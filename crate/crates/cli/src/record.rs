use std::io::{self, Write};

pub const CSV_HEADER: &str =
    "experiment_id,epsilon,rounds,initial_concurrence,final_concurrence,predicted_concurrence,abs_error,separable,min_branch_concurrence";

/// One CSV row. `None` fields are written empty.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRecord {
    pub experiment_id: String,
    pub epsilon: Option<f64>,
    pub rounds: usize,
    pub initial_concurrence: f64,
    pub final_concurrence: f64,
    pub predicted_concurrence: Option<f64>,
    pub abs_error: Option<f64>,
    pub separable: bool,
    pub min_branch_concurrence: Option<f64>,
}

impl ResultRecord {
    pub fn with_prediction(mut self, predicted: Option<f64>) -> Self {
        self.predicted_concurrence = predicted;
        self.abs_error = predicted.map(|p| (self.final_concurrence - p).abs());
        self
    }
}

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn escape(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

impl ResultRecord {
    pub fn csv_row(&self) -> String {
        [
            escape(&self.experiment_id),
            opt(self.epsilon),
            self.rounds.to_string(),
            num(self.initial_concurrence),
            num(self.final_concurrence),
            opt(self.predicted_concurrence),
            opt(self.abs_error),
            self.separable.to_string(),
            opt(self.min_branch_concurrence),
        ]
        .join(",")
    }
}

pub fn write_csv<W: Write>(out: &mut W, records: &[ResultRecord]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> ResultRecord {
        ResultRecord {
            experiment_id: "a,b".into(),
            epsilon: Some(0.6),
            rounds: 2,
            initial_concurrence: 1.0,
            final_concurrence: 0.64,
            predicted_concurrence: None,
            abs_error: None,
            separable: false,
            min_branch_concurrence: None,
        }
    }

    #[test]
    fn row_format() {
        let r = record().with_prediction(Some(0.64));
        assert_eq!(
            r.csv_row(),
            "\"a,b\",5.9999999999999998e-1,2,1.0000000000000000e0,6.4000000000000001e-1,6.4000000000000001e-1,0.0000000000000000e0,false,"
        );
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02e23, 5e-324, 0.64] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn header_first() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[record()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        assert_eq!(text.lines().count(), 2);
    }
}
