//! Flat `key = value` configuration text.
//!
//! One assignment per line; `#` starts a comment that runs to the end of the
//! line; blank lines are ignored. Keys are case-sensitive and may not repeat.
//! Overrides applied with [`KeyValues::set`] replace file values.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::classify::ClassifierConfig;
use crate::error::{Error, Result};
use crate::scheme::{SchemeKind, SolverConfig};

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    /// 0 for values that did not come from a file.
    line: usize,
}

#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, Entry>,
}

/// `#` opens a comment at the start of a line or after whitespace following a
/// value, so `color = #ff0000` keeps its value.
fn strip_comment(raw: &str) -> &str {
    if raw.trim_start().starts_with('#') {
        return "";
    }
    let value_start = raw.find('=').map_or(0, |i| i + 1);
    let lead = raw[value_start..].len() - raw[value_start..].trim_start().len();
    let body = value_start + lead;
    let bytes = raw.as_bytes();
    for i in body + 1..bytes.len() {
        if bytes[i] == b'#' && bytes[i - 1].is_ascii_whitespace() {
            return &raw[..i];
        }
    }
    raw
}

impl KeyValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(format!("line {}: expected `key = value`, found `{line}`", i + 1)));
            };
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(Error::config(format!("line {}: invalid key `{key}`", i + 1)));
            }
            if let Some(prev) = kv.entries.get(key) {
                return Err(Error::config(format!(
                    "line {}: key `{key}` already set on line {}",
                    i + 1,
                    prev.line
                )));
            }
            kv.entries.insert(key.to_string(), Entry { value: value.trim().to_string(), line: i + 1 });
        }
        Ok(kv)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), Entry { value: value.into(), line: 0 });
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Removes and returns the raw value of `key`.
    pub fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|e| e.value)
    }

    /// Removes `key` and parses its value.
    pub fn take_parsed<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        let Some(entry) = self.entries.remove(key) else {
            return Ok(None);
        };
        entry.value.parse().map(Some).map_err(|_| {
            let at = if entry.line > 0 { format!("line {}: ", entry.line) } else { String::new() };
            Error::config(format!("{at}invalid value `{}` for `{key}`", entry.value))
        })
    }

    pub fn take_bool(&mut self, key: &str) -> Result<Option<bool>> {
        match self.take(key).as_deref() {
            None => Ok(None),
            Some("true" | "yes" | "1") => Ok(Some(true)),
            Some("false" | "no" | "0") => Ok(Some(false)),
            Some(other) => Err(Error::config(format!("invalid boolean `{other}` for `{key}`"))),
        }
    }

    /// Comma-separated list of floats; an empty value is an empty list.
    pub fn take_f64_list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(raw) = self.take(key) else {
            return Ok(None);
        };
        if raw.trim().is_empty() {
            return Ok(Some(Vec::new()));
        }
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::config(format!("invalid number `{}` in `{key}`", s.trim())))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    /// Fails on any key not consumed so far, suggesting the closest entry of `known`.
    pub fn finish(self, known: &[&str]) -> Result<()> {
        let Some((key, entry)) = self.entries.into_iter().next() else {
            return Ok(());
        };
        let at = if entry.line > 0 { format!("line {}: ", entry.line) } else { String::new() };
        let hint = known
            .iter()
            .map(|k| (strsim::levenshtein(k, &key), k))
            .filter(|(d, _)| *d <= 3)
            .min()
            .map(|(_, k)| format!("; did you mean `{k}`?"))
            .unwrap_or_default();
        Err(Error::config(format!("{at}unknown key `{key}`{hint}")))
    }
}

/// Formats a float so that parsing it back gives the same value.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Keys read by [`apply_solver_keys`].
pub const SOLVER_KEYS: &[&str] = &["scheme", "dr", "cfl", "newton_tol", "newton_max_iter", "t_final", "r_interest"];

/// Keys read by [`apply_classifier_keys`].
pub const CLASSIFIER_KEYS: &[&str] = &[
    "r_monitor",
    "blowup_factor",
    "disperse_factor",
    "sustain_window",
    "monitor_stride",
    "max_steps",
];

pub fn apply_solver_keys(kv: &mut KeyValues, cfg: &mut SolverConfig) -> Result<()> {
    if let Some(s) = kv.take("scheme") {
        cfg.scheme = SchemeKind::parse(&s)
            .ok_or_else(|| Error::config(format!("unknown scheme `{s}`; expected `sv` or `explicit`")))?;
    }
    if let Some(x) = kv.take_parsed("dr")? {
        cfg.dr = x;
    }
    if let Some(x) = kv.take_parsed("cfl")? {
        cfg.cfl_ratio = x;
    }
    if let Some(x) = kv.take_parsed("newton_tol")? {
        cfg.newton_tol = x;
    }
    if let Some(x) = kv.take_parsed("newton_max_iter")? {
        cfg.newton_max_iter = x;
    }
    if let Some(x) = kv.take_parsed("t_final")? {
        cfg.t_final = x;
    }
    if let Some(x) = kv.take_parsed("r_interest")? {
        cfg.r_interest = x;
    }
    cfg.validate()
}

/// `max_steps = auto` (or absent) runs to `t_final`.
pub fn apply_classifier_keys(kv: &mut KeyValues, cfg: &mut ClassifierConfig) -> Result<()> {
    if let Some(x) = kv.take_parsed("r_monitor")? {
        cfg.r_monitor = x;
    }
    if let Some(x) = kv.take_parsed("blowup_factor")? {
        cfg.blowup_factor = x;
    }
    if let Some(x) = kv.take_parsed("disperse_factor")? {
        cfg.disperse_factor = x;
    }
    if let Some(x) = kv.take_parsed("sustain_window")? {
        cfg.sustain_window = x;
    }
    if let Some(x) = kv.take_parsed("monitor_stride")? {
        cfg.monitor_stride = x;
    }
    match kv.take("max_steps").as_deref() {
        None => {}
        Some("auto") => cfg.max_steps = None,
        Some(s) => {
            let m = s
                .parse::<usize>()
                .map_err(|_| Error::config(format!("invalid value `{s}` for `max_steps`; expected a count or `auto`")))?;
            cfg.max_steps = Some(m);
        }
    }
    cfg.validate()
}

pub fn write_solver_keys(out: &mut String, cfg: &SolverConfig) {
    push(out, "scheme", cfg.scheme.as_str());
    push(out, "dr", fmt_f64(cfg.dr));
    push(out, "cfl", fmt_f64(cfg.cfl_ratio));
    push(out, "newton_tol", fmt_f64(cfg.newton_tol));
    push(out, "newton_max_iter", cfg.newton_max_iter);
    push(out, "t_final", fmt_f64(cfg.t_final));
    push(out, "r_interest", fmt_f64(cfg.r_interest));
}

pub fn write_classifier_keys(out: &mut String, cfg: &ClassifierConfig) {
    push(out, "r_monitor", fmt_f64(cfg.r_monitor));
    push(out, "blowup_factor", fmt_f64(cfg.blowup_factor));
    push(out, "disperse_factor", fmt_f64(cfg.disperse_factor));
    push(out, "sustain_window", cfg.sustain_window);
    push(out, "monitor_stride", cfg.monitor_stride);
    match cfg.max_steps {
        Some(m) => push(out, "max_steps", m),
        None => push(out, "max_steps", "auto"),
    }
}

pub fn push(out: &mut String, key: &str, value: impl std::fmt::Display) {
    use std::fmt::Write;
    let _ = writeln!(out, "{key} = {value}");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blanks() {
        let mut kv = KeyValues::parse("# header\n\na = 1.5  # trailing\ncolor = #0a0b0c # red\nname = fig1_1_left\nlist = 1, 2,3\n").unwrap();
        assert_eq!(kv.take_parsed::<f64>("a").unwrap(), Some(1.5));
        assert_eq!(kv.take("name").as_deref(), Some("fig1_1_left"));
        assert_eq!(kv.take("color").as_deref(), Some("#0a0b0c"));
        assert_eq!(kv.take_f64_list("list").unwrap(), Some(vec![1.0, 2.0, 3.0]));
        assert!(kv.is_empty());
    }

    #[test]
    fn rejects_duplicates_and_garbage() {
        assert!(KeyValues::parse("a = 1\na = 2").unwrap_err().to_string().contains("line 2"));
        assert!(KeyValues::parse("just words").is_err());
        let mut kv = KeyValues::parse("n = x").unwrap();
        assert!(kv.take_parsed::<usize>("n").is_err());
    }

    #[test]
    fn overrides_replace_file_values() {
        let mut kv = KeyValues::parse("dr = 0.01").unwrap();
        kv.set("dr", "0.02");
        assert_eq!(kv.take_parsed::<f64>("dr").unwrap(), Some(0.02));
    }

    #[test]
    fn unknown_key_suggests_neighbour() {
        let kv = KeyValues::parse("a_cuont = 3").unwrap();
        let msg = kv.finish(&["a_count", "b_count"]).unwrap_err().to_string();
        assert!(msg.contains("did you mean `a_count`"), "{msg}");
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1e-12, -3.25, 9.72, 1.0 / 3.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
