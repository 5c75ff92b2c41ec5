//! Per-step trace of a scenario run and its CSV form.

use std::fmt;
use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow<T> {
    pub k: usize,
    pub t: T,
    pub theta: Vec<T>,
    pub setpoint: Vec<T>,
    pub temps: Vec<T>,
    pub v: Vec<T>,
    pub u_max: Vec<T>,
    pub u_hat: Vec<T>,
    pub active: Vec<bool>,
    pub foot_height: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceLog<T> {
    limbs: usize,
    rows: Vec<TraceRow<T>>,
}

/// Formats a float with 9 significant digits.
pub fn fmt_sig9(x: f64) -> String {
    format!("{x:.8e}")
}

/// Rounds to the value a 9-significant-digit CSV cell would hold.
pub fn round_sig9(x: f64) -> f64 {
    fmt_sig9(x).parse().expect("formatted float reparses")
}

fn header(limbs: usize) -> Vec<String> {
    let mut h = vec!["k".to_string(), "t".to_string()];
    fn numbered(prefix: &'static str, n: usize) -> impl Iterator<Item = String> {
        (1..=n).map(move |i| format!("{prefix}{i}"))
    }
    h.extend(numbered("theta", limbs));
    h.extend(numbered("setp", limbs));
    h.extend(numbered("T", 2 * limbs));
    h.extend(numbered("v", 2 * limbs));
    h.extend(numbered("umax", 2 * limbs));
    h.extend(numbered("uhat", 2 * limbs));
    h.extend(numbered("sup", 2 * limbs));
    h.push("foot_height_m".to_string());
    h
}

impl<T: Scalar> TraceLog<T> {
    pub fn new(limbs: usize, rows: Vec<TraceRow<T>>) -> Self {
        Self { limbs, rows }
    }

    pub fn limbs(&self) -> usize {
        self.limbs
    }

    pub fn rows(&self) -> &[TraceRow<T>] {
        &self.rows
    }

    pub fn header(&self) -> Vec<String> {
        header(self.limbs)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let io = |e: csv::Error| Error::Parse(e.to_string());
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        wtr.write_record(self.header()).map_err(io)?;
        let f = |x: &T| fmt_sig9(x.as_f64());
        for r in &self.rows {
            let mut rec = vec![r.k.to_string(), f(&r.t)];
            for col in [&r.theta, &r.setpoint, &r.temps, &r.v, &r.u_max, &r.u_hat] {
                rec.extend(col.iter().map(f));
            }
            rec.extend(r.active.iter().map(|&a| u8::from(a).to_string()));
            rec.push(f(&r.foot_height));
            wtr.write_record(&rec).map_err(io)?;
        }
        wtr.flush().map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Parses a trace written by [`TraceLog::write_csv`].
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let found: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Parse(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let limbs = found.iter().filter(|h| h.starts_with("theta")).count();
        if found != header(limbs) {
            return Err(Error::Parse("trace header does not match the trace layout".into()));
        }
        let m = 2 * limbs;
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Parse(format!("line {line}: {e}")))?;
            let num = |j: usize| -> Result<T> {
                rec[j]
                    .parse::<f64>()
                    .ok()
                    .and_then(T::from_f64)
                    .ok_or_else(|| Error::Parse(format!("line {line}, column {}: bad number", j + 1)))
            };
            let span = |start: usize, n: usize| (start..start + n).map(num).collect::<Result<Vec<T>>>();
            let k = rec[0]
                .parse()
                .map_err(|_| Error::Parse(format!("line {line}: bad step index")))?;
            let mut at = 2;
            let mut take = |n: usize| {
                let s = at;
                at += n;
                s
            };
            let (th, sp, te, v, um, uh, su) = (take(limbs), take(limbs), take(m), take(m), take(m), take(m), take(m));
            let active = (su..su + m)
                .map(|j| match &rec[j] {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(Error::Parse(format!("line {line}: bad flag `{other}`"))),
                })
                .collect::<Result<Vec<bool>>>()?;
            rows.push(TraceRow {
                k,
                t: num(1)?,
                theta: span(th, limbs)?,
                setpoint: span(sp, limbs)?,
                temps: span(te, m)?,
                v: span(v, m)?,
                u_max: span(um, m)?,
                u_hat: span(uh, m)?,
                active,
                foot_height: num(su + m)?,
            });
        }
        Ok(Self { limbs, rows })
    }

    pub fn summary(&self) -> Summary {
        Summary::from_trace(self)
    }
}

/// Contiguous run of steps during which the supervisor overrode one wire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActivationInterval {
    pub sma: usize,
    /// Time of the first overridden step, s.
    pub t_start: f64,
    /// Time of the last overridden step, s.
    pub t_end: f64,
}

impl ActivationInterval {
    pub fn overlaps(&self, start: f64, end: f64) -> bool {
        self.t_start <= end && start <= self.t_end
    }
}

/// Run summary; every value is rounded as in the CSV, so summaries from a
/// trace and from its CSV compare equal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub steps: usize,
    pub max_temp: Vec<f64>,
    pub activations: Vec<ActivationInterval>,
    pub final_foot_height: f64,
}

impl Summary {
    pub fn from_trace<T: Scalar>(log: &TraceLog<T>) -> Self {
        let m = 2 * log.limbs();
        let rows = log.rows();
        let max_temp = (0..m)
            .map(|i| {
                rows.iter()
                    .map(|r| round_sig9(r.temps[i].as_f64()))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let mut activations = Vec::new();
        for sma in 0..m {
            let mut open: Option<(f64, f64)> = None;
            for r in rows {
                let t = round_sig9(r.t.as_f64());
                match (r.active[sma], open) {
                    (true, None) => open = Some((t, t)),
                    (true, Some((s, _))) => open = Some((s, t)),
                    (false, Some((s, e))) => {
                        activations.push(ActivationInterval {
                            sma,
                            t_start: s,
                            t_end: e,
                        });
                        open = None;
                    }
                    (false, None) => {}
                }
            }
            if let Some((s, e)) = open {
                activations.push(ActivationInterval {
                    sma,
                    t_start: s,
                    t_end: e,
                });
            }
        }
        Self {
            steps: rows.len(),
            max_temp,
            activations,
            final_foot_height: rows
                .last()
                .map(|r| round_sig9(r.foot_height.as_f64()))
                .unwrap_or(f64::NAN),
        }
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "steps: {}", self.steps)?;
        writeln!(f, "max temperature per SMA (degC):")?;
        for (i, t) in self.max_temp.iter().enumerate() {
            writeln!(f, "  T{}: {}", i + 1, fmt_sig9(*t))?;
        }
        writeln!(f, "supervisor activation intervals:")?;
        if self.activations.is_empty() {
            writeln!(f, "  none")?;
        }
        for a in &self.activations {
            writeln!(
                f,
                "  SMA {}: {} s .. {} s",
                a.sma + 1,
                fmt_sig9(a.t_start),
                fmt_sig9(a.t_end)
            )?;
        }
        write!(f, "final foot height (m): {}", fmt_sig9(self.final_foot_height))
    }
}
