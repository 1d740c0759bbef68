use std::path::Path;

use crate::assembly::{RefractionField, DEFAULT_QUAD_ORDER};
use crate::linalg::{ArnoldiOptions, C64};
use crate::mesh::Domain;
use crate::multigrid::{MultigridConfig, DEFAULT_DENSE_LIMIT};
use crate::{Error, Result};

/// Settings of one experiment.
///
/// The text format is a list of `key=value` entries separated by
/// whitespace or newlines; `#` starts a comment. A token without `=`
/// continues the previous value, so `n=affine 8 1 -1` works unquoted.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub domain: Domain,
    pub refraction: RefractionField,
    pub coarse_divisions: usize,
    pub levels: usize,
    pub q: usize,
    pub shift: C64,
    pub quad_order: usize,
    pub tol: f64,
    pub krylov_dim: Option<usize>,
    pub max_restarts: usize,
    pub dense_limit: usize,
    pub out: String,
    /// Reference `k` values for the error tables, in tracking order.
    pub reference: Option<Vec<C64>>,
    /// When false the `seconds` column is written as zero, which makes the
    /// CSV files reproducible byte for byte.
    pub record_time: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let arnoldi = ArnoldiOptions::new(4);
        RunConfig {
            domain: Domain::UnitSquare,
            refraction: RefractionField::Constant(16.0),
            coarse_divisions: 8,
            levels: 4,
            q: 4,
            shift: C64::new(3.0, 0.0),
            quad_order: DEFAULT_QUAD_ORDER,
            tol: arnoldi.tol,
            krylov_dim: None,
            max_restarts: arnoldi.max_restarts,
            dense_limit: DEFAULT_DENSE_LIMIT,
            out: "tev-out".into(),
            reference: None,
            record_time: true,
        }
    }
}

fn bad(key: &str, value: &str) -> Error {
    Error::Config(format!("invalid value for {key}: '{value}'"))
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| bad(key, value))
}

/// Parses `3`, `-2.5e1`, `10i`, `17+10i` or `4.2-1.1i`.
pub fn parse_complex(text: &str) -> Option<C64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let Some(body) = s.strip_suffix('i') else {
        return s.parse().ok().map(|re| C64::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&p| (bytes[p] == b'+' || bytes[p] == b'-') && !matches!(bytes[p - 1], b'e' | b'E'));
    let im_of = |t: &str| match t {
        "" | "+" => Some(1.0),
        "-" => Some(-1.0),
        _ => t.parse().ok(),
    };
    match split {
        Some(p) => Some(C64::new(body[..p].parse().ok()?, im_of(&body[p..])?)),
        None => Some(C64::new(0.0, im_of(body)?)),
    }
}

fn parse_domain(value: &str) -> Option<Domain> {
    match value.trim().to_ascii_lowercase().replace('-', "_").as_str() {
        "unit_square" | "square" => Some(Domain::UnitSquare),
        "l_shape" | "lshape" => Some(Domain::LShape),
        _ => None,
    }
}

fn parse_refraction(value: &str) -> Result<RefractionField> {
    let words: Vec<&str> = value.split_whitespace().collect();
    match words.as_slice() {
        [c] => Ok(RefractionField::Constant(number("n", c)?)),
        ["affine", a, b1, b2] => Ok(RefractionField::Affine {
            a: number("n", a)?,
            b1: number("n", b1)?,
            b2: number("n", b2)?,
        }),
        _ => Err(bad("n", value)),
    }
}

impl RunConfig {
    /// Parses the text format on top of the defaults and validates.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        let mut entries: Vec<(String, String)> = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("");
            for token in line.split_whitespace() {
                match token.split_once('=') {
                    Some((k, v)) => entries.push((k.trim().to_string(), v.trim().to_string())),
                    None => match entries.last_mut() {
                        Some((_, v)) => {
                            if !v.is_empty() {
                                v.push(' ');
                            }
                            v.push_str(token);
                        }
                        None => return Err(Error::Config(format!("expected key=value, found '{token}'"))),
                    },
                }
            }
        }
        for (k, v) in &entries {
            config.set(k, v)?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Sets one entry. Keys: `domain`, `n`, `coarse_div`, `levels`, `q`,
    /// `shift`, `quad_order`, `tol`, `krylov_dim`, `max_restarts`,
    /// `dense_limit`, `out`, `reference`, `record_time`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "domain" => self.domain = parse_domain(value).ok_or_else(|| bad(key, value))?,
            "n" => self.refraction = parse_refraction(value)?,
            "coarse_div" | "coarse_divisions" => self.coarse_divisions = number(key, value)?,
            "levels" => self.levels = number(key, value)?,
            "q" => self.q = number(key, value)?,
            "shift" => self.shift = parse_complex(value).ok_or_else(|| bad(key, value))?,
            "quad_order" => self.quad_order = number(key, value)?,
            "tol" => self.tol = number(key, value)?,
            "krylov_dim" => self.krylov_dim = Some(number(key, value)?),
            "max_restarts" => self.max_restarts = number(key, value)?,
            "dense_limit" => self.dense_limit = number(key, value)?,
            "out" => self.out = value.to_string(),
            "reference" => {
                let vals: Option<Vec<C64>> = value
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|t| !t.is_empty())
                    .map(parse_complex)
                    .collect();
                self.reference = Some(vals.ok_or_else(|| bad(key, value))?);
            }
            "record_time" => self.record_time = number(key, value)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels < 1 {
            return Err(Error::Config("levels must be at least 1".into()));
        }
        if self.q < 1 {
            return Err(Error::Config("q must be at least 1".into()));
        }
        if self.coarse_divisions < 1 {
            return Err(Error::Config("coarse_div must be at least 1".into()));
        }
        if !(1..=10).contains(&self.quad_order) {
            return Err(Error::QuadratureOrder(self.quad_order));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Config(format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        if !(self.shift.re.is_finite() && self.shift.im.is_finite()) {
            return Err(Error::Config("shift must be finite".into()));
        }
        if let Some(m) = self.krylov_dim {
            if m < 2 * self.q + 8 {
                return Err(Error::Config(format!("krylov_dim must be at least 2q + 8 = {}", 2 * self.q + 8)));
            }
        }
        self.refraction.check_contrast(self.domain)
    }

    pub fn arnoldi(&self) -> ArnoldiOptions {
        ArnoldiOptions {
            krylov_dim: self.krylov_dim,
            tol: self.tol,
            max_restarts: self.max_restarts,
            ..ArnoldiOptions::new(self.q)
        }
    }

    pub fn multigrid(&self) -> MultigridConfig {
        MultigridConfig {
            domain: self.domain,
            refraction: self.refraction,
            coarse_divisions: self.coarse_divisions,
            levels: self.levels,
            q: self.q,
            shift: self.shift,
            quad_order: self.quad_order,
            arnoldi: self.arnoldi(),
            dense_limit: self.dense_limit,
        }
    }
}
