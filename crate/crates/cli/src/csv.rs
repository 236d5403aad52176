//! Byte-stable CSV: mandatory header, 17 significant digits.

pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    /// Keeps only `names`, in the given order.
    pub fn select(&self, names: &[String]) -> Result<Table, String> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| self.header.iter().position(|h| h == n).ok_or_else(|| format!("unknown output column `{n}`")))
            .collect::<Result<_, _>>()?;
        Ok(Table {
            header: names.to_vec(),
            rows: self.rows.iter().map(|r| idx.iter().map(|&i| r[i]).collect()).collect(),
        })
    }

    pub fn render(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|&x| format_float(x))).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII output")
    }

    pub fn parse(text: &str) -> Result<Table, String> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = r.headers().map_err(|e| e.to_string())?.iter().map(str::to_string).collect();
        let mut t = Table::new(header);
        for (i, record) in r.records().enumerate() {
            let record = record.map_err(|e| e.to_string())?;
            let row: Vec<f64> = record
                .iter()
                .map(|c| c.parse::<f64>().map_err(|_| format!("row {}: bad number `{c}`", i + 1)))
                .collect::<Result<_, _>>()?;
            t.rows.push(row);
        }
        Ok(t)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}
