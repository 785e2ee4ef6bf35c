//! `key = value` run configuration with `[section]` headers.
//!
//! ```text
//! [images]
//! fixture = blob2d          # or: moving = a.pgm / target = b.pgm / truth = truth.txt
//! [registration]
//! model = affine
//! cost = ssd
//! sampling = full
//! levels = 4:2, 2:1, 1:0
//! [session]
//! backend = mpc
//! transport = loopback
//! [run]
//! repeats = 10
//! out = results
//! [bench]
//! backends = clear, mpc
//! samplings = full, urs(10%), gms(10%)
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::synth::FixtureKind;
use crate::error::{Error, Result};
use crate::he::HeParams;
use crate::joint::{Backend, LevelSpec};
use crate::mpc::DEFAULT_FRAC_BITS;
use crate::optimizer::{CostKind, MiConfig, Model, OptimizerConfig, Sampling};
use crate::protocol::TransportKind;

#[derive(Debug, Clone, PartialEq)]
pub enum ImageSource {
    Files {
        moving: PathBuf,
        target: PathBuf,
        truth: Option<PathBuf>,
    },
    Fixture {
        kind: FixtureKind,
        seed: u64,
    },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub images: ImageSource,
    pub model: Model,
    pub cost: CostKind,
    pub optimizer: OptimizerConfig,
    pub transport: TransportKind,
    pub crypto_seed: u64,
    pub frac_bits: u32,
    pub ring_degree: usize,
    pub block: usize,
    pub keep_transcript: bool,
    pub repeats: usize,
    pub out: PathBuf,
    pub bench_backends: Vec<Backend>,
    pub bench_samplings: Vec<Sampling>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            images: ImageSource::Fixture {
                kind: FixtureKind::Blob2d,
                seed: 0,
            },
            model: Model::Affine,
            cost: CostKind::Ssd,
            optimizer: OptimizerConfig::default(),
            transport: TransportKind::Loopback,
            crypto_seed: 1,
            frac_bits: DEFAULT_FRAC_BITS,
            ring_degree: HeParams::default().ring_degree,
            block: 256,
            keep_transcript: false,
            repeats: 1,
            out: PathBuf::from("out"),
            bench_backends: vec![Backend::Clear, Backend::Mpc],
            bench_samplings: vec![Sampling::Full],
        }
    }
}

const KEYS: &[(&str, &[&str])] = &[
    ("images", &["fixture", "fixture_seed", "moving", "target", "truth"]),
    (
        "registration",
        &[
            "model",
            "cost",
            "bins",
            "mi_fraction",
            "sampling",
            "levels",
            "max_iters",
            "epsilon",
            "damping",
            "intensity_scale",
            "max_halvings",
            "seed",
        ],
    ),
    (
        "session",
        &[
            "backend",
            "transport",
            "crypto_seed",
            "frac_bits",
            "ring_degree",
            "block",
            "keep_transcript",
        ],
    ),
    ("run", &["repeats", "out"]),
    ("bench", &["backends", "samplings"]),
];

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::parse(key, format!("invalid value {v:?}")))
}

fn parse_list<T>(v: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    split_top_level(v).iter().map(|s| f(s)).collect()
}

/// Splits on commas outside parentheses so `urs(10%)` stays whole.
fn split_top_level(v: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in v.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

/// `m:sigma` pairs, coarse to fine.
pub fn parse_levels(v: &str) -> Result<Vec<LevelSpec>> {
    parse_list(v, |item| {
        let (m, s) = item
            .split_once(':')
            .ok_or_else(|| Error::parse("levels", format!("expected m:sigma, got {item:?}")))?;
        Ok(LevelSpec::new(
            parse_value("levels", m.trim())?,
            parse_value("levels", s.trim())?,
        ))
    })
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::parse(key, format!("expected a boolean, got {v:?}"))),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses config text; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut entries: BTreeMap<(String, String), (usize, String)> = BTreeMap::new();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !KEYS.iter().any(|(s, _)| *s == name) {
                    return Err(Error::Config(format!("line {lineno}: unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let Some(sec) = &section else {
                return Err(Error::Config(format!("line {lineno}: entry outside any section")));
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {lineno}: expected key = value")))?;
            let k = k.trim();
            let allowed = KEYS.iter().find(|(s, _)| s == sec).map(|(_, k)| *k).unwrap_or(&[]);
            if !allowed.contains(&k) {
                return Err(Error::Config(format!("line {lineno}: unknown key {k:?} in [{sec}]")));
            }
            if entries
                .insert((sec.clone(), k.to_string()), (lineno, v.trim().to_string()))
                .is_some()
            {
                return Err(Error::Config(format!("line {lineno}: duplicate key {k:?} in [{sec}]")));
            }
        }
        let get = |s: &str, k: &str| entries.get(&(s.to_string(), k.to_string())).map(|(_, v)| v.as_str());
        let resolve = |p: &str| {
            let p = Path::new(p);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };

        let mut cfg = RunConfig::default();
        cfg.images = match (
            get("images", "fixture"),
            get("images", "moving"),
            get("images", "target"),
        ) {
            (Some(kind), None, None) => ImageSource::Fixture {
                kind: kind.parse()?,
                seed: get("images", "fixture_seed")
                    .map(|v| parse_value("fixture_seed", v))
                    .transpose()?
                    .unwrap_or(0),
            },
            (None, Some(m), Some(t)) => ImageSource::Files {
                moving: resolve(m),
                target: resolve(t),
                truth: get("images", "truth").map(resolve),
            },
            (Some(_), _, _) => {
                return Err(Error::Config(
                    "[images] takes either fixture or moving/target, not both".into(),
                ))
            }
            _ => {
                return Err(Error::Config(
                    "[images] needs a fixture or both moving and target".into(),
                ))
            }
        };

        if let Some(v) = get("registration", "model") {
            cfg.model = v.parse()?;
        }
        let mut mi = MiConfig::default();
        if let Some(v) = get("registration", "bins") {
            let b: usize = parse_value("bins", v)?;
            mi.bins_r = b;
            mi.bins_t = b;
        }
        if let Some(v) = get("registration", "mi_fraction") {
            mi.sample_fraction = parse_value("mi_fraction", v)?;
            if !(mi.sample_fraction > 0.0 && mi.sample_fraction <= 1.0) {
                return Err(Error::Config(format!("mi_fraction {v} outside (0, 1]")));
            }
        }
        cfg.cost = match get("registration", "cost").unwrap_or("ssd") {
            "ssd" => CostKind::Ssd,
            "mi" => CostKind::Mi(mi),
            other => return Err(Error::parse("cost", format!("unknown cost {other:?}"))),
        };
        let o = &mut cfg.optimizer;
        if let Some(v) = get("registration", "sampling") {
            o.sampling = v.parse()?;
        }
        if let Some(v) = get("registration", "levels") {
            o.levels = parse_levels(v)?;
        }
        if let Some(v) = get("registration", "max_iters") {
            o.max_iters = parse_value("max_iters", v)?;
        }
        if let Some(v) = get("registration", "epsilon") {
            o.epsilon = parse_value("epsilon", v)?;
        }
        if let Some(v) = get("registration", "damping") {
            o.step_damping = parse_value("damping", v)?;
        }
        if let Some(v) = get("registration", "intensity_scale") {
            o.intensity_scale = parse_value("intensity_scale", v)?;
        }
        if let Some(v) = get("registration", "max_halvings") {
            o.max_halvings = parse_value("max_halvings", v)?;
        }
        if let Some(v) = get("registration", "seed") {
            o.seed = parse_value("seed", v)?;
        }
        if let Some(v) = get("session", "backend") {
            o.backend = v.parse()?;
        }
        if let Some(v) = get("session", "transport") {
            cfg.transport = v.parse()?;
        }
        if let Some(v) = get("session", "crypto_seed") {
            cfg.crypto_seed = parse_value("crypto_seed", v)?;
        }
        if let Some(v) = get("session", "frac_bits") {
            cfg.frac_bits = parse_value("frac_bits", v)?;
        }
        if let Some(v) = get("session", "ring_degree") {
            cfg.ring_degree = parse_value("ring_degree", v)?;
        }
        if let Some(v) = get("session", "block") {
            cfg.block = parse_value("block", v)?;
        }
        if let Some(v) = get("session", "keep_transcript") {
            cfg.keep_transcript = parse_bool("keep_transcript", v)?;
        }
        if let Some(v) = get("run", "repeats") {
            cfg.repeats = parse_value("repeats", v)?;
        }
        if let Some(v) = get("run", "out") {
            cfg.out = resolve(v);
        }
        if let Some(v) = get("bench", "backends") {
            cfg.bench_backends = parse_list(v, |s| s.parse())?;
        }
        if let Some(v) = get("bench", "samplings") {
            cfg.bench_samplings = parse_list(v, |s| s.parse())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if self.bench_backends.is_empty() || self.bench_samplings.is_empty() {
            return Err(Error::Config(
                "bench matrix needs at least one backend and one sampling".into(),
            ));
        }
        if !(8..=30).contains(&self.frac_bits) {
            return Err(Error::Config(format!("frac_bits {} outside 8..=30", self.frac_bits)));
        }
        HeParams::with_degree(self.ring_degree).validate()?;
        Ok(())
    }

    pub fn he_params(&self) -> HeParams {
        HeParams::with_degree(self.ring_degree)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let text = "\
[images]
moving = m.pgm
target = /abs/t.pgm
[registration]
model = bspline(5)
cost = mi
bins = 24
levels = 2:1, 1:0
sampling = urs(10%)  # comment
[session]
backend = fhe-v2
transport = tcp:127.0.0.1:0
[run]
repeats = 3
out = res
[bench]
samplings = full, gms(500)
";
        let cfg = RunConfig::parse(text, Path::new("/base")).unwrap();
        assert_eq!(
            cfg.images,
            ImageSource::Files {
                moving: PathBuf::from("/base/m.pgm"),
                target: PathBuf::from("/abs/t.pgm"),
                truth: None
            }
        );
        assert_eq!(cfg.model, Model::BSpline { spacing: 5.0 });
        assert!(matches!(
            cfg.cost,
            CostKind::Mi(MiConfig {
                bins_r: 24,
                bins_t: 24,
                ..
            })
        ));
        assert_eq!(
            cfg.optimizer.levels,
            vec![LevelSpec::new(2, 1.0), LevelSpec::new(1, 0.0)]
        );
        assert_eq!(cfg.optimizer.backend, Backend::FheV2);
        assert_eq!(cfg.transport, TransportKind::Tcp("127.0.0.1:0".into()));
        assert_eq!(cfg.repeats, 3);
        assert_eq!(cfg.out, PathBuf::from("/base/res"));
        assert_eq!(cfg.bench_samplings.len(), 2);
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        let base = Path::new(".");
        let e = RunConfig::parse("[images]\nfixture = blob2d\ncolour = red\n", base).unwrap_err();
        assert!(e.to_string().contains("colour"), "{e}");
        assert!(RunConfig::parse("[extras]\n", base).is_err());
        assert!(RunConfig::parse("fixture = blob2d\n", base).is_err());
        assert!(RunConfig::parse("[images]\nfixture = blob2d\nfixture = blob2d\n", base).is_err());
        assert!(RunConfig::parse("[images]\nfixture = blob2d\n[run]\nrepeats = 0\n", base).is_err());
        assert!(RunConfig::parse("[images]\n", base).is_err());
    }
}
