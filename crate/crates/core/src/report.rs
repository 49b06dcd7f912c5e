//! Machine-readable run reports: one `key=value` line per entry, keys in
//! lexicographic byte order.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Accepted,
    Rejected,
    Error,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Accepted => "accepted",
            Status::Rejected => "rejected",
            Status::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Text(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // Shortest round-trip form; infinities render as "inf"/"-inf".
            Value::Number(v) => write!(f, "{v}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

/// Keys `command`, `inputs`, `iterations`, `outputs` and `status` are
/// reserved; metric names must not reuse them.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub command: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub metrics: BTreeMap<String, Value>,
    pub status: Status,
    pub iterations: usize,
}

impl RunReport {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            metrics: BTreeMap::new(),
            status: Status::Accepted,
            iterations: 1,
        }
    }

    pub fn number(&mut self, key: impl Into<String>, v: f64) -> &mut Self {
        self.metrics.insert(key.into(), Value::Number(v));
        self
    }

    pub fn text(&mut self, key: impl Into<String>, v: impl Into<String>) -> &mut Self {
        self.metrics.insert(key.into(), Value::Text(v.into()));
        self
    }

    /// `None` renders as `undefined`.
    pub fn optional(&mut self, key: impl Into<String>, v: Option<f64>) -> &mut Self {
        match v {
            Some(v) => self.number(key, v),
            None => self.text(key, "undefined"),
        }
    }

    pub fn render(&self) -> String {
        let mut entries: BTreeMap<&str, String> = BTreeMap::new();
        for (k, v) in &self.metrics {
            entries.insert(k, v.to_string());
        }
        entries.insert("command", self.command.clone());
        entries.insert("inputs", self.inputs.join(","));
        entries.insert("iterations", self.iterations.to_string());
        entries.insert("outputs", self.outputs.join(","));
        entries.insert("status", self.status.as_str().to_string());
        entries
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_stable_rendering() {
        let mut r = RunReport::new("metrics img");
        r.inputs = vec!["a.pgm".into(), "b.pgm".into()];
        r.number("ssim", 1.0)
            .number("psnr", f64::INFINITY)
            .number("mse", 0.0)
            .optional("recall", None);
        assert_eq!(
            r.render(),
            "command=metrics img\ninputs=a.pgm,b.pgm\niterations=1\nmse=0\noutputs=\npsnr=inf\nrecall=undefined\nssim=1\nstatus=accepted\n"
        );
        assert_eq!(r.render(), r.clone().render());
    }
}
