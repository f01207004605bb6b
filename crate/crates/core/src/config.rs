//! `key=value` argument parsing shared by the CLI: model construction, the
//! frequency selector, numeric budgets, and `@file` expansion.

use crate::models::{ModelSpec, Variant};
use crate::{Error, Result};
use std::collections::BTreeMap;

/// Parsed `key=value` arguments with `@file` includes expanded.
#[derive(Debug, Clone, Default)]
pub struct Args {
    map: BTreeMap<String, String>,
}

impl Args {
    /// Tokens are `key=value` pairs or `@path` includes; an include file
    /// holds one pair per line, `#` comments allowed. Later keys override
    /// earlier ones.
    pub fn parse(tokens: &[String]) -> Result<Args> {
        let mut map = BTreeMap::new();
        for tok in tokens {
            if let Some(path) = tok.strip_prefix('@') {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::Config(format!("cannot read config file {path}: {e}"))
                })?;
                for line in text.lines() {
                    let line = line.trim();
                    if line.is_empty() || line.starts_with('#') {
                        continue;
                    }
                    insert_pair(&mut map, line)?;
                }
            } else {
                insert_pair(&mut map, tok)?;
            }
        }
        Ok(Args { map })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.map
            .get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::Config(format!("{key}={v} is not a number")))
            })
            .transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        self.map
            .get(key)
            .map(|v| {
                v.parse::<u64>()
                    .map_err(|_| Error::Config(format!("{key}={v} is not a non-negative integer")))
            })
            .transpose()
            .map(|o| o.unwrap_or(default))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.u64_or(key, default as u64)? as usize)
    }

    /// Keys as a canonical `key=value` string (sorted), for output headers.
    pub fn canonical(&self) -> String {
        self.map
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// The frequency: `alpha=golden` (default), a decimal in (0,1), or
    /// explicit partial quotients `alpha=cf:1,2,1,1`. Decimal inputs are
    /// certified irrational-looking by continued-fraction expansion.
    pub fn alpha(&self) -> Result<f64> {
        let spec = self.get("alpha").unwrap_or("golden");
        if spec == "golden" {
            return Ok(crate::golden_mean());
        }
        if let Some(list) = spec.strip_prefix("cf:") {
            let quotients: Vec<i64> = list
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<i64>()
                        .ok()
                        .filter(|&a| a >= 1)
                        .ok_or_else(|| {
                            Error::Config(format!("alpha={spec}: bad partial quotient {t}"))
                        })
                })
                .collect::<Result<Vec<i64>>>()?;
            if quotients.is_empty() {
                return Err(Error::Config("alpha=cf: needs at least one quotient".into()));
            }
            // evaluate [0; a1, a2, …] from the tail in
            let mut x = 0.0_f64;
            for &a in quotients.iter().rev() {
                x = 1.0 / (a as f64 + x);
            }
            return Ok(x);
        }
        let x: f64 = spec
            .parse()
            .map_err(|_| Error::Config(format!("alpha={spec} is not a number")))?;
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::Config(format!("alpha={x} must lie in (0,1)")));
        }
        let cf = crate::arithmetic::cf_expand(x, 20)
            .map_err(|e| Error::Config(format!("alpha={x}: {e}")))?;
        if cf.terminated {
            return Err(Error::Config(format!(
                "alpha={x} is rational ({:?}); use an irrational frequency",
                cf.partial_quotients
            )));
        }
        Ok(x)
    }

    /// Model from `model=` plus its parameter keys.
    pub fn model(&self) -> Result<ModelSpec> {
        let alpha = self.alpha()?;
        let name = self
            .get("model")
            .ok_or_else(|| Error::Config("missing model= (amo|gaa|mosaic|long_range_dual|peaky)".into()))?;
        let lambda = || -> Result<f64> {
            self.f64("lambda")?
                .ok_or_else(|| Error::Config(format!("model={name} needs lambda=")))
        };
        let variant = match name {
            "amo" => Variant::Amo { lambda: lambda()? },
            "gaa" => Variant::Gaa {
                lambda: lambda()?,
                tau: self
                    .f64("tau")?
                    .ok_or_else(|| Error::Config("model=gaa needs tau=".into()))?,
            },
            "mosaic" => Variant::Mosaic {
                lambda: lambda()?,
                kappa: self.u64_or("kappa", 2)? as u32,
            },
            "long_range_dual" | "long-range-dual" => Variant::LongRangeDual {
                lambda: lambda()?,
                p: self
                    .f64("p")?
                    .ok_or_else(|| Error::Config("model=long_range_dual needs p=".into()))?,
            },
            "peaky" => Variant::Peaky {
                lambda: lambda()?,
                k_peak: self
                    .f64("K")?
                    .or(self.f64("k_peak")?)
                    .ok_or_else(|| Error::Config("model=peaky needs K=".into()))?,
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown model '{other}' (amo|gaa|mosaic|long_range_dual|peaky)"
                )))
            }
        };
        ModelSpec::new(variant, alpha).map_err(|e| Error::Config(e.to_string()))
    }

    /// Explicit energies `energies=a,b,c` or a range `emin= emax= ecount=`.
    pub fn energy_grid(&self) -> Result<Option<Vec<f64>>> {
        if let Some(list) = self.get("energies") {
            let es: Vec<f64> = list
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad energy '{t}'")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if es.is_empty() {
                return Err(Error::Config("energies= list is empty".into()));
            }
            return Ok(Some(es));
        }
        match (self.f64("emin")?, self.f64("emax")?) {
            (Some(lo), Some(hi)) => {
                if hi <= lo {
                    return Err(Error::Config(format!("emax={hi} must exceed emin={lo}")));
                }
                let n = self.usize_or("ecount", 201)?;
                Ok(Some(crate::phase::linspace(lo, hi, n.max(2))))
            }
            (None, None) => Ok(None),
            _ => Err(Error::Config("emin= and emax= must be given together".into())),
        }
    }
}

fn insert_pair(map: &mut BTreeMap<String, String>, token: &str) -> Result<()> {
    match token.split_once('=') {
        Some((k, v)) if !k.is_empty() => {
            map.insert(k.trim().to_string(), v.trim().to_string());
            Ok(())
        }
        _ => Err(Error::Config(format!(
            "expected key=value, got '{token}'"
        ))),
    }
}
