//! Per-step trace rows and their CSV encoding.

use std::io::{Read, Write};

use crate::controller::Mode;
use crate::error::{Error, Result};

/// Column order of the trace CSV.
pub const TRACE_HEADER: [&str; 14] = [
    "t",
    "v_h_true",
    "v_l",
    "z",
    "v_hat_post",
    "v_thr",
    "z_min",
    "d",
    "d_safe",
    "u",
    "mode",
    "s_flag",
    "attack_active",
    "collided",
];

/// One simulation step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepTrace {
    pub t: usize,
    pub v_h_true: f64,
    pub v_l: f64,
    /// Reported (possibly spoofed) speed.
    pub z: f64,
    pub v_hat_post: f64,
    pub v_thr: f64,
    pub z_min: f64,
    pub d: f64,
    /// Safe distance computed by the ACC from its estimate.
    pub d_safe: f64,
    pub u: f64,
    pub mode: Mode,
    pub s_flag: bool,
    pub attack_active: bool,
    pub collided: bool,
}

/// Formats `x` as a plain decimal with 9 significant digits.
pub fn format_sig9(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0.00000000".to_string();
    }
    // Exponent after rounding, so 9.9999999996 counts as 10.
    let sci = format!("{x:.8e}");
    let exp: i32 = sci
        .rsplit('e')
        .next()
        .and_then(|e| e.parse().ok())
        .unwrap_or(0);
    let decimals = (8 - exp).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s.remove(0);
    }
    s
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

impl StepTrace {
    fn record(&self) -> [String; 14] {
        [
            self.t.to_string(),
            format_sig9(self.v_h_true),
            format_sig9(self.v_l),
            format_sig9(self.z),
            format_sig9(self.v_hat_post),
            format_sig9(self.v_thr),
            format_sig9(self.z_min),
            format_sig9(self.d),
            format_sig9(self.d_safe),
            format_sig9(self.u),
            self.mode.to_string(),
            flag(self.s_flag).to_string(),
            flag(self.attack_active).to_string(),
            flag(self.collided).to_string(),
        ]
    }

    fn parse(rec: &csv::StringRecord, line: usize) -> Result<Self> {
        let field = |i: usize| {
            rec.get(i).ok_or_else(|| {
                Error::Trace(format!("row {line}: missing column {}", TRACE_HEADER[i]))
            })
        };
        let num = |i: usize| -> Result<f64> {
            field(i)?
                .parse::<f64>()
                .map_err(|e| Error::Trace(format!("row {line}, column {}: {e}", TRACE_HEADER[i])))
        };
        let boolean = |i: usize| -> Result<bool> {
            match field(i)? {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(Error::Trace(format!(
                    "row {line}, column {}: expected 0/1, got {other:?}",
                    TRACE_HEADER[i]
                ))),
            }
        };
        Ok(Self {
            t: field(0)?
                .parse()
                .map_err(|e| Error::Trace(format!("row {line}, column t: {e}")))?,
            v_h_true: num(1)?,
            v_l: num(2)?,
            z: num(3)?,
            v_hat_post: num(4)?,
            v_thr: num(5)?,
            z_min: num(6)?,
            d: num(7)?,
            d_safe: num(8)?,
            u: num(9)?,
            mode: field(10)?.parse()?,
            s_flag: boolean(11)?,
            attack_active: boolean(12)?,
            collided: boolean(13)?,
        })
    }
}

/// Writes a trace as CSV: header, one row per step, `\n` terminators.
pub fn write_trace<W: Write>(rows: &[StepTrace], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

/// Renders a trace to a CSV string.
pub fn trace_to_csv(rows: &[StepTrace]) -> Result<String> {
    let mut buf = Vec::new();
    write_trace(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Trace(e.to_string()))
}

/// Parses a trace CSV, requiring the exact header.
pub fn read_trace<R: Read>(input: R) -> Result<Vec<StepTrace>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(TRACE_HEADER.iter().copied()) {
        return Err(Error::Trace(format!(
            "unexpected header {:?}, expected {:?}",
            header.iter().collect::<Vec<_>>(),
            TRACE_HEADER
        )));
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| StepTrace::parse(&rec?, i + 1))
        .collect()
}

/// First step whose gap is non-positive.
pub fn detect_collision(trace: &[StepTrace]) -> Option<usize> {
    trace.iter().find(|r| r.d <= 0.0).map(|r| r.t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: usize, d: f64) -> StepTrace {
        StepTrace {
            t,
            v_h_true: 20.0,
            v_l: 20.0,
            z: 20.1,
            v_hat_post: 20.05,
            v_thr: 21.0,
            z_min: 22.0,
            d,
            d_safe: 94.8235294117647,
            u: -0.25,
            mode: Mode::Spacing,
            s_flag: false,
            attack_active: false,
            collided: d <= 0.0,
        }
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(94.8235294117647), "94.8235294");
        assert_eq!(format_sig9(20.0), "20.0000000");
        assert_eq!(format_sig9(-0.25), "-0.250000000");
        assert_eq!(format_sig9(0.0), "0.00000000");
        assert_eq!(format_sig9(9.9999999996), "10.0000000");
        assert_eq!(format_sig9(1234567890.4), "1234567890");
        assert_eq!(format_sig9(1.5e-7), "0.000000150000000");
        assert_eq!(format_sig9(-0.0), "0.00000000");
    }

    #[test]
    fn detect_collision_examples() {
        let ok: Vec<_> = (0..5).map(|t| row(t, 50.0 - t as f64)).collect();
        assert_eq!(detect_collision(&ok), None);
        let crash = vec![row(0, 3.0), row(1, 1.0), row(2, -0.5), row(3, -0.5)];
        assert_eq!(detect_collision(&crash), Some(2));
        assert_eq!(detect_collision(&[]), None);
    }

    #[test]
    fn csv_round_trip_and_header() {
        let rows: Vec<_> = (0..3).map(|t| row(t, 100.0 + t as f64)).collect();
        let text = trace_to_csv(&rows).unwrap();
        assert!(text.starts_with("t,v_h_true,v_l,z,v_hat_post,v_thr,z_min,d,d_safe,u,mode,s_flag,attack_active,collided\n"));
        assert!(text.ends_with('\n'));
        assert_eq!(text.lines().count(), 4);
        let back = read_trace(text.as_bytes()).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back[1].t, 1);
        assert_eq!(back[1].mode, Mode::Spacing);
        assert!((back[1].d_safe - 94.8235294).abs() < 1e-12);
    }

    #[test]
    fn rejects_wrong_header() {
        let err = read_trace("a,b\n1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Trace(_)));
    }
}
