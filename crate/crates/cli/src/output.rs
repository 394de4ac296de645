use serde::Serialize;

use massrenorm::asymptotics::SweepTable;

pub const SWEEP_HEADER: [&str; 16] = [
    "lambda",
    "kappa",
    "b1",
    "b2",
    "b3",
    "b4",
    "b5",
    "b6",
    "a2",
    "a2_sqrt_scaled",
    "s1",
    "s2",
    "s3",
    "s4",
    "appB_residual",
    "err_flags",
];

/// Twelve significant digits, always in exponent notation.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.11e}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".into(), num)
}

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

pub fn sweep_table(t: &SweepTable) -> Table {
    let mut out = Table::new(&SWEEP_HEADER);
    for r in &t.rows {
        let mut row = vec![num(r.lambda), num(r.kappa)];
        row.extend(r.b.iter().map(|&b| num(b)));
        row.push(num(r.a2));
        row.push(num(r.a2_sqrt_scaled));
        match r.s {
            Some(s) => row.extend(s.iter().map(|&v| num(v))),
            None => row.extend(std::iter::repeat("nan".to_string()).take(4)),
        }
        row.push(opt(r.scaled_residual));
        row.push(err_flags(r));
        out.rows.push(row);
    }
    out
}

pub fn err_flags(r: &massrenorm::asymptotics::SweepRow) -> String {
    if let Some(f) = &r.failure {
        return format!("failed: {f}");
    }
    if r.not_converged.is_empty() {
        "ok".into()
    } else {
        r.not_converged.iter().map(|n| format!("nc:{n}")).collect::<Vec<_>>().join(";")
    }
}

#[derive(Serialize)]
pub struct Report<'a, T: Serialize> {
    pub command: crate::args::Command,
    pub spec: &'a massrenorm::QuadratureSpec,
    pub converged: bool,
    pub result: T,
}

pub fn json<T: Serialize>(report: &Report<'_, T>) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_use_exponent_notation() {
        assert_eq!(num(2.0), "2.00000000000e0");
        assert_eq!(num(-1234.5), "-1.23450000000e3");
        assert_eq!(num(f64::NAN), "nan");
        assert_eq!(opt(None), "nan");
    }

    #[test]
    fn csv_quotes_fields_with_commas() {
        let mut t = Table::new(&["a", "b"]);
        t.rows.push(vec!["1".into(), "x, y".into()]);
        assert_eq!(t.to_csv(), "a,b\n1,\"x, y\"\n");
    }
}
