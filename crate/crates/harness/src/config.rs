//! Experiment configuration.
//!
//! The native format is flat `key = value` text with `#` comments; a JSON
//! object with the same keys is accepted too. Powers and thresholds may be
//! given in dB (`P_dB`, `Q_dB`, `gamma_th_dB`); they are converted to linear
//! scale here and nowhere else.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use relaylab::linksim::stats::Modulation;
use relaylab::linksim::{Engine, UserSelection};
use relaylab::model::{realize_parameters, BaseConstants, Exponent, ScalingExponents};
use relaylab::NetworkParams;

use crate::error::{HarnessError, Result};

/// Minimum trial count of a statistical experiment.
pub const MIN_TRIALS: usize = 1_000;

/// CSI quality given directly or through a training configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Csi {
    Quality(f64),
    Training { tau: usize, p_t: f64 },
}

/// How each grid point obtains its operating parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ParamSource {
    Exponents(ScalingExponents),
    Explicit { k: usize, p: f64, q: f64, csi: Csi },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub params: ParamSource,
    /// Ascending, nonempty.
    pub m_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Linear SINR thresholds.
    pub thresholds: Vec<f64>,
    pub modulation: Modulation,
    pub out: PathBuf,
    pub overlays: Vec<String>,
    pub engine: Engine,
    pub users: UserSelection,
}

impl ExperimentConfig {
    /// Operating point at antenna count `m`.
    pub fn realize(&self, m: usize) -> Result<NetworkParams> {
        Ok(match self.params {
            ParamSource::Exponents(e) => realize_parameters(&e, m)?,
            ParamSource::Explicit { k, p, q, csi } => match csi {
                Csi::Quality(pc) => NetworkParams::with_csi_quality(m, k, p, q, pc)?,
                Csi::Training { tau, p_t } => {
                    NetworkParams::new(m, k, p, q, relaylab::model::Training { tau, p_t })?
                }
            },
        })
    }

    pub fn validate(&self) -> Result<()> {
        let field = |f: &str, m: String| HarnessError::config(None, Some(f), m);
        if self.m_grid.is_empty() {
            return Err(field("M", "antenna grid is empty".into()));
        }
        if self.m_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(field("M", "antenna grid must be strictly ascending".into()));
        }
        if self.trials < MIN_TRIALS {
            return Err(field("trials", format!("need at least {MIN_TRIALS} trials, got {}", self.trials)));
        }
        if self.thresholds.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(field("gamma_th", "thresholds must be finite and > 0".into()));
        }
        let Modulation { a, b } = self.modulation;
        if !(a > 0.0 && a <= 1.0 && b > 0.0 && b.is_finite()) {
            return Err(field("modulation", format!("need 0 < A <= 1 and B > 0, got A={a}, B={b}")));
        }
        for &m in &self.m_grid {
            self.realize(m).map_err(|e| field("M", format!("M={m}: {e}")))?;
        }
        Ok(())
    }

    /// Flat key-value form; parsing it yields an identical config.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut v: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, val: String| v.push((k.to_owned(), val));
        put("scenario", self.scenario.clone());
        match self.params {
            ParamSource::Exponents(e) => {
                put("r_k", e.r_k().to_string());
                put("r_p", e.r_p().to_string());
                put("r_q", e.r_q().to_string());
                put("r_c", e.r_c().to_string());
                let b = e.bases();
                put("k0", fmt_f64(b.k0));
                put("p0", fmt_f64(b.p0));
                put("q0", fmt_f64(b.q0));
                put("c0", fmt_f64(b.c0));
            }
            ParamSource::Explicit { k, p, q, csi } => {
                put("K", k.to_string());
                put("P", fmt_f64(p));
                put("Q", fmt_f64(q));
                match csi {
                    Csi::Quality(pc) => put("P_c", fmt_f64(pc)),
                    Csi::Training { tau, p_t } => {
                        put("tau", tau.to_string());
                        put("P_t", fmt_f64(p_t));
                    }
                }
            }
        }
        put("M", join(self.m_grid.iter().map(|m| m.to_string())));
        put("trials", self.trials.to_string());
        put("seed", self.seed.to_string());
        put("gamma_th", join(self.thresholds.iter().map(|&t| fmt_f64(t))));
        put("A", fmt_f64(self.modulation.a));
        put("B", fmt_f64(self.modulation.b));
        put("out", self.out.display().to_string());
        put("overlays", self.overlays.join(","));
        put("engine", enum_name(&self.engine));
        put("users", enum_name(&self.users));
        v
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.to_pairs() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn to_json(&self) -> String {
        let map: serde_json::Map<String, serde_json::Value> = self
            .to_pairs()
            .into_iter()
            .map(|(k, v)| (k, serde_json::Value::String(v)))
            .collect();
        serde_json::to_string_pretty(&map).expect("string map serializes")
    }
}

fn fmt_f64(x: f64) -> String {
    // shortest representation that parses back to the same value
    format!("{x:?}")
}

fn join(it: impl Iterator<Item = String>) -> String {
    it.collect::<Vec<_>>().join(",")
}

fn enum_name<T: serde::Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => unreachable!("unit enums serialize as strings"),
    }
}

struct Entry {
    line: Option<usize>,
    value: String,
}

/// Raw values keyed by name, with their source lines.
struct Table {
    map: BTreeMap<String, Entry>,
}

impl Table {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.map.remove(key)
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(Some)
                .map_err(|err| HarnessError::config(e.line, Some(key), format!("cannot parse `{}`: {err}", e.value))),
        }
    }

    fn list<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<T>()
                        .map_err(|err| HarnessError::config(e.line, Some(key), format!("cannot parse `{s}`: {err}")))
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    /// A linear value given either as `key` or as `key_dB`.
    fn power(&mut self, key: &str) -> Result<Option<f64>> {
        let db_key = format!("{key}_dB");
        let lin = self.parse::<f64>(key)?;
        let db = self.parse::<f64>(&db_key)?;
        match (lin, db) {
            (Some(_), Some(_)) => Err(HarnessError::config(None, Some(key), format!("give `{key}` or `{db_key}`, not both"))),
            (Some(v), None) => Ok(Some(v)),
            (None, Some(d)) => Ok(Some(db_to_linear(d))),
            (None, None) => Ok(None),
        }
    }

    fn power_list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        let db_key = format!("{key}_dB");
        let lin = self.list::<f64>(key)?;
        let db = self.list::<f64>(&db_key)?;
        match (lin, db) {
            (Some(_), Some(_)) => Err(HarnessError::config(None, Some(key), format!("give `{key}` or `{db_key}`, not both"))),
            (Some(v), None) => Ok(Some(v)),
            (None, Some(d)) => Ok(Some(d.into_iter().map(db_to_linear).collect())),
            (None, None) => Ok(None),
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn parse_enum<T: serde::de::DeserializeOwned>(t: &mut Table, key: &str) -> Result<Option<T>> {
    match t.take(key) {
        None => Ok(None),
        Some(e) => serde_json::from_value(serde_json::Value::String(e.value.clone()))
            .map(Some)
            .map_err(|_| HarnessError::config(e.line, Some(key), format!("unknown value `{}`", e.value))),
    }
}

// A named scenario supplies the parameters when none are given explicitly.
fn builtin(t: &Table) -> Option<crate::scenarios::Scenario> {
    if t.map.contains_key("K") {
        return None;
    }
    t.map.get("scenario").and_then(|e| crate::scenarios::by_name(&e.value))
}

fn build(mut t: Table) -> Result<ExperimentConfig> {
    let exponent_keys = ["r_k", "r_p", "r_q", "r_c"];
    let has_exponents = exponent_keys.iter().any(|k| t.map.contains_key(*k));
    let params = if has_exponents {
        let mut r = [Exponent::from_integer(0); 4];
        for (slot, key) in r.iter_mut().zip(exponent_keys) {
            *slot = t.parse::<Exponent>(key)?.unwrap_or(Exponent::from_integer(0));
        }
        let d = BaseConstants::default();
        let bases = BaseConstants {
            k0: t.parse("k0")?.unwrap_or(d.k0),
            p0: t.parse("p0")?.unwrap_or(d.p0),
            q0: t.parse("q0")?.unwrap_or(d.q0),
            c0: t.parse("c0")?.unwrap_or(d.c0),
        };
        let e = ScalingExponents::with_bases(r[0], r[1], r[2], r[3], bases)
            .map_err(|err| HarnessError::config(None, Some("exponents"), err.to_string()))?;
        for key in ["K", "P", "P_dB", "Q", "Q_dB", "P_c", "tau", "P_t"] {
            if let Some(e) = t.take(key) {
                return Err(HarnessError::config(e.line, Some(key), "explicit parameters conflict with exponents"));
            }
        }
        ParamSource::Exponents(e)
    } else if let Some(s) = builtin(&t) {
        ParamSource::Exponents(s.exponents)
    } else {
        let k = t.parse::<usize>("K")?.ok_or_else(|| HarnessError::config(None, Some("K"), "missing"))?;
        let p = t.power("P")?.ok_or_else(|| HarnessError::config(None, Some("P"), "missing"))?;
        let q = t.power("Q")?.ok_or_else(|| HarnessError::config(None, Some("Q"), "missing"))?;
        let pc = t.parse::<f64>("P_c")?;
        let tau = t.parse::<usize>("tau")?;
        let p_t = t.power("P_t")?;
        let csi = match (pc, tau, p_t) {
            (Some(pc), None, None) => Csi::Quality(pc),
            (None, Some(tau), Some(p_t)) => Csi::Training { tau, p_t },
            (None, None, None) => return Err(HarnessError::config(None, Some("P_c"), "give `P_c` or `tau` and `P_t`")),
            _ => return Err(HarnessError::config(None, Some("P_c"), "give either `P_c` or both `tau` and `P_t`")),
        };
        ParamSource::Explicit { k, p, q, csi }
    };
    let a = t.parse::<f64>("A")?;
    let b = t.parse::<f64>("B")?;
    let modulation = match (t.list::<f64>("modulation")?, a, b) {
        (Some(v), None, None) if v.len() == 2 => Modulation { a: v[0], b: v[1] },
        (Some(_), None, None) => return Err(HarnessError::config(None, Some("modulation"), "expected `A,B`")),
        (None, a, b) => Modulation {
            a: a.unwrap_or(Modulation::BPSK.a),
            b: b.unwrap_or(Modulation::BPSK.b),
        },
        _ => return Err(HarnessError::config(None, Some("modulation"), "give `modulation` or `A`/`B`, not both")),
    };
    let cfg = ExperimentConfig {
        scenario: t.take("scenario").map(|e| e.value).unwrap_or_else(|| "custom".into()),
        params,
        m_grid: t.list("M")?.ok_or_else(|| HarnessError::config(None, Some("M"), "missing"))?,
        trials: t.parse("trials")?.unwrap_or(10_000),
        seed: t.parse("seed")?.unwrap_or(1),
        thresholds: t.power_list("gamma_th")?.unwrap_or_default(),
        modulation,
        out: t.take("out").map(|e| PathBuf::from(e.value)).unwrap_or_else(|| PathBuf::from("results")),
        overlays: t
            .list::<String>("overlays")?
            .unwrap_or_default(),
        engine: parse_enum(&mut t, "engine")?.unwrap_or_default(),
        users: parse_enum(&mut t, "users")?.unwrap_or_default(),
    };
    if let Some((key, e)) = t.map.into_iter().next() {
        return Err(HarnessError::config(e.line, Some(&key), "unknown key"));
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses `key = value` text.
pub fn parse_kv(text: &str) -> Result<ExperimentConfig> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| HarnessError::config(Some(line), None, format!("expected `key = value`, got `{body}`")))?;
        let key = k.trim().to_owned();
        if key.is_empty() {
            return Err(HarnessError::config(Some(line), None, "empty key"));
        }
        if map.contains_key(&key) {
            return Err(HarnessError::config(Some(line), Some(&key), "duplicate key"));
        }
        map.insert(
            key,
            Entry {
                line: Some(line),
                value: v.trim().to_owned(),
            },
        );
    }
    build(Table { map })
}

/// Parses a flat JSON object; arrays become comma lists.
pub fn parse_json(text: &str) -> Result<ExperimentConfig> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| HarnessError::config(Some(e.line()), None, e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| HarnessError::config(None, None, "expected a JSON object"))?;
    let scalar = |key: &str, v: &serde_json::Value| -> Result<String> {
        match v {
            serde_json::Value::String(s) => Ok(s.clone()),
            serde_json::Value::Number(n) => Ok(n.to_string()),
            _ => Err(HarnessError::config(None, Some(key), "expected a string or number")),
        }
    };
    let mut map = BTreeMap::new();
    for (k, v) in obj {
        let value = match v {
            serde_json::Value::Array(items) => items
                .iter()
                .map(|x| scalar(k, x))
                .collect::<Result<Vec<_>>>()?
                .join(","),
            other => scalar(k, other)?,
        };
        map.insert(k.clone(), Entry { line: None, value });
    }
    build(Table { map })
}

/// Picks the parser from the first non-blank character.
pub fn parse_any(text: &str) -> Result<ExperimentConfig> {
    if text.trim_start().starts_with('{') {
        parse_json(text)
    } else {
        parse_kv(text)
    }
}

pub fn load(path: &Path) -> Result<ExperimentConfig> {
    parse_any(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FIG4: &str = "
        # outage sweep
        scenario = fig4-k8
        K = 8
        P_dB = 10
        Q_dB = 10
        P_c = 0.95
        M = 128, 192, 256   # antennas
        trials = 1000000
        seed = 4
        gamma_th_dB = 8
    ";

    #[test]
    fn decibels_are_converted_at_parse_time() {
        let c = parse_kv(FIG4).unwrap();
        let ParamSource::Explicit { k, p, q, csi } = c.params else { panic!() };
        assert_eq!(k, 8);
        assert!((p - 10.0).abs() < 1e-12 && (q - 10.0).abs() < 1e-12);
        assert_eq!(csi, Csi::Quality(0.95));
        assert!((c.thresholds[0] - 6.309_573_444_801_933).abs() < 1e-12);
        assert_eq!(c.m_grid, vec![128, 192, 256]);
        assert_eq!(c.modulation, Modulation::BPSK);
    }

    #[test]
    fn round_trips_through_both_formats() {
        let c = parse_kv(FIG4).unwrap();
        assert_eq!(parse_kv(&c.to_kv()).unwrap(), c);
        assert_eq!(parse_json(&c.to_json()).unwrap(), c);
        let e = parse_kv("r_k = 1/2\nr_q = 1/2\nq0 = 1\nc0 = 1.25\np0 = 0.1\nM = 64,256\n").unwrap();
        assert_eq!(parse_kv(&e.to_kv()).unwrap(), e);
        assert_eq!(e.realize(256).unwrap().k(), 16);
    }

    #[test]
    fn json_accepts_numbers_and_arrays() {
        let c = parse_json(r#"{"K": 4, "P": 1, "Q": 2, "tau": 4, "P_t": 0.25, "M": [16, 32], "trials": 2000}"#).unwrap();
        assert_eq!(c.m_grid, vec![16, 32]);
        assert_eq!(c.realize(16).unwrap().p_c(), 0.5);
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let err = parse_kv("K = 4\nP = 1\nQ = x\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let msg = err.to_string();
        assert!(msg.contains("line 3") && msg.contains("`Q`"), "{msg}");
        let msg = parse_kv("K = 4\nP = 1\nQ = 1\nP_c = 0.5\nM = 64\nbogus = 1\n").unwrap_err().to_string();
        assert!(msg.contains("line 6") && msg.contains("unknown key"), "{msg}");
        let msg = parse_kv("K 4\n").unwrap_err().to_string();
        assert!(msg.contains("line 1"), "{msg}");
    }

    #[test]
    fn scenario_name_supplies_exponents() {
        let c = parse_kv("scenario = case3\nM = 100\n").unwrap();
        assert_eq!(c.realize(100).unwrap().k(), 10);
        assert_eq!(parse_kv(&c.to_kv()).unwrap(), c);
        assert!(parse_kv("scenario = nope\nM = 100\n").is_err());
    }

    #[test]
    fn invariants_are_enforced() {
        let base = "K = 4\nP = 1\nQ = 1\nP_c = 0.5\n";
        assert!(parse_kv(&format!("{base}M = 64, 32\n")).is_err());
        assert!(parse_kv(&format!("{base}M =\n")).is_err());
        assert!(parse_kv(&format!("{base}M = 64\ntrials = 10\n")).is_err());
        assert!(parse_kv(&format!("{base}M = 2\n")).is_err());
        assert!(parse_kv(&format!("{base}M = 64\nP_dB = 3\n")).is_err());
        assert!(parse_kv("r_k = 3/2\nM = 64\n").is_err());
        assert!(parse_kv("r_k = 1\nK = 3\nM = 64\n").is_err());
    }

    proptest! {
        #[test]
        fn arbitrary_explicit_configs_round_trip(
            k in 1usize..16,
            p in 1e-3f64..1e3,
            q in 1e-3f64..1e3,
            pc in 0.01f64..1.0,
            ms in proptest::collection::btree_set(16usize..2048, 1..6),
            trials in 1000usize..1_000_000,
            seed in any::<u64>(),
            th in proptest::collection::vec(1e-3f64..1e3, 0..4),
        ) {
            let grid: Vec<String> = ms.iter().map(|m| m.to_string()).collect();
            let th: Vec<String> = th.iter().map(|t| format!("{t:?}")).collect();
            let text = format!(
                "K = {k}\nP = {p:?}\nQ = {q:?}\nP_c = {pc:?}\nM = {}\ntrials = {trials}\nseed = {seed}\ngamma_th = {}\n",
                grid.join(","), th.join(",")
            );
            let c = parse_kv(&text).unwrap();
            prop_assert_eq!(&parse_kv(&c.to_kv()).unwrap(), &c);
            prop_assert_eq!(&parse_json(&c.to_json()).unwrap(), &c);
        }
    }
}
