//! Run options and the `key = value` config file format.
//!
//! Keys mirror the long CLI flags with `-` or `_` accepted interchangeably:
//! `scenario`, `algo`, `snr`, `sir`, `trials`, `seed`, `nu-max`, `pfd`,
//! `gamma`, `out`, `interference`, `presence-pfd`, `occupied`, `cfo-range`,
//! `sc-range`. Blank lines and `#` comments are ignored.

use super::{Algorithm, AlgorithmSettings, Scenario};
use crate::error::{Error, Result};
use crate::impairments::{wbi_notch_tones, Interference};
use crate::waveform::SubcarrierMap;
use std::path::PathBuf;

fn bad(key: &str, value: &str) -> Error {
    Error::InvalidArgument(format!("invalid value '{value}' for '{key}'"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| bad(key, value))
}

fn db(v: &str) -> Result<f64> {
    match v.trim() {
        "inf" | "+inf" | "none" => Ok(f64::INFINITY),
        t => t.parse().map_err(|_| bad("list", v)),
    }
}

/// `a:step:b` (inclusive), a comma list, or `inf`.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, step, b] => {
            let (a, step, b) = (db(a)?, db(step)?, db(b)?);
            if !(step > 0.0) || !a.is_finite() || !b.is_finite() || b < a {
                return Err(bad("range", s));
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            // rounded to 1e-9 so that 0.1-style steps print cleanly
            Ok((0..=n)
                .map(|i| ((a + i as f64 * step) * 1e9).round() / 1e9)
                .collect())
        }
        [_] => s.split(',').map(db).collect(),
        _ => Err(bad("range", s)),
    }
}

/// `a:b,c:d,e` into sorted inclusive ranges.
pub fn parse_ranges(s: &str) -> Result<Vec<(i64, i64)>> {
    s.split(',')
        .map(|part| {
            let ends: Vec<&str> = part.split(':').collect();
            match ends.as_slice() {
                [a] => {
                    let a = num("occupied", a)?;
                    Ok((a, a))
                }
                [a, b] => Ok((num("occupied", a)?, num("occupied", b)?)),
                _ => Err(bad("occupied", s)),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum InterferenceChoice {
    None,
    /// Scenario default frequency when `None`.
    Nbi(Option<f64>),
    /// Tones over the scenario notch, or half-bin tones over `(lo, hi)`.
    Wbi(Option<(i64, i64)>),
}

impl InterferenceChoice {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["none"] => Ok(Self::None),
            ["nbi"] => Ok(Self::Nbi(None)),
            ["nbi", f] => Ok(Self::Nbi(Some(num("interference", f)?))),
            ["wbi"] => Ok(Self::Wbi(None)),
            ["wbi", lo, hi] => Ok(Self::Wbi(Some((
                num("interference", lo)?,
                num("interference", hi)?,
            )))),
            _ => Err(bad("interference", s)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub scenario: String,
    pub algorithms: Vec<Algorithm>,
    pub snr: Vec<f64>,
    pub sir: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub settings: AlgorithmSettings,
    pub interference: Option<InterferenceChoice>,
    pub occupied: Option<Vec<(i64, i64)>>,
    pub cfo_range: Option<(f64, f64)>,
    pub out: PathBuf,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            scenario: "nogs".into(),
            algorithms: Algorithm::ALL.to_vec(),
            snr: vec![10.0],
            sir: vec![f64::INFINITY],
            trials: 10_000,
            seed: 0,
            settings: AlgorithmSettings::default(),
            interference: None,
            occupied: None,
            cfo_range: None,
            out: PathBuf::from("out"),
        }
    }
}

impl RunOptions {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim().replace('_', "-").as_str() {
            "scenario" => {
                Scenario::by_name(v)?;
                self.scenario = v.into();
            }
            "algo" => {
                self.algorithms = v.split(',').map(Algorithm::parse).collect::<Result<_>>()?;
            }
            "snr" => self.snr = parse_list(v)?,
            "sir" => self.sir = parse_list(v)?,
            "trials" => self.trials = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "nu-max" => {
                self.settings.nu_max = Some(match v {
                    "full" | "none" => None,
                    _ => {
                        let k: f64 = num(key, v)?;
                        if !(k >= 0.0) {
                            return Err(bad(key, v));
                        }
                        Some(k)
                    }
                })
            }
            "pfd" => self.settings.p_fd = probability(key, v)?,
            "presence-pfd" => {
                self.settings.presence_pfd = match v {
                    "off" | "none" => None,
                    _ => Some(probability(key, v)?),
                }
            }
            "gamma" => self.settings.gamma = num(key, v)?,
            "sc-range" => self.settings.sc_range = num(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "interference" => self.interference = Some(InterferenceChoice::parse(v)?),
            "occupied" => self.occupied = Some(parse_ranges(v)?),
            "cfo-range" => {
                let r = parse_list(v)?;
                match r.as_slice() {
                    [a, b] if a <= b => self.cfo_range = Some((*a, *b)),
                    _ => return Err(bad(key, v)),
                }
            }
            other => return Err(Error::InvalidArgument(format!("unknown option '{other}'"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of a config file.
    pub fn apply_config(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("config line {}: expected key = value", i + 1))
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let mut s = Scenario::by_name(&self.scenario)?;
        s.trials = self.trials;
        s.base_seed = self.seed;
        if let Some(r) = &self.occupied {
            s.map = SubcarrierMap::from_ranges(s.n_fft(), r)?;
        }
        if let Some(r) = self.cfo_range {
            s.cfo_range = r;
        }
        match &self.interference {
            None => {}
            Some(InterferenceChoice::None) => s.interference = Interference::None,
            Some(InterferenceChoice::Nbi(f)) => {
                let default = match s.interference {
                    Interference::Nbi { center_freq, .. } => center_freq,
                    _ => 24.0,
                };
                s.interference = Interference::Nbi {
                    center_freq: f.unwrap_or(default),
                    phase: None,
                };
            }
            Some(InterferenceChoice::Wbi(range)) => {
                if s.dsa.is_some() {
                    return Err(Error::InvalidArgument(
                        "the dsa scenario only supports NBI".into(),
                    ));
                }
                s.interference = match range {
                    Some((lo, hi)) => Interference::Wbi {
                        bins: wbi_notch_tones(*lo, *hi),
                    },
                    None => s.notch_wbi()?,
                };
            }
        }
        Ok(s)
    }

    /// Every (SNR, SIR) pair, SIR varying fastest.
    pub fn sweep(&self) -> Vec<(f64, f64)> {
        self.snr
            .iter()
            .flat_map(|&snr| self.sir.iter().map(move |&sir| (snr, sir)))
            .collect()
    }
}

fn probability(key: &str, v: &str) -> Result<f64> {
    let p: f64 = num(key, v)?;
    if p > 0.0 && p < 1.0 {
        Ok(p)
    } else {
        Err(bad(key, v))
    }
}
