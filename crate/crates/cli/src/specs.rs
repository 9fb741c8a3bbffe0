use std::path::PathBuf;
use std::str::FromStr;

use largesieve::residue::OmegaSystem;
use largesieve::{ExactMinorantPoly, Result};

/// `--omega` values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OmegaSpec {
    Zero,
    Squares,
    Empty,
    Random(u64),
    File(PathBuf),
}

impl FromStr for OmegaSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "zero" => Ok(Self::Zero),
            "squares" => Ok(Self::Squares),
            "empty" => Ok(Self::Empty),
            _ => {
                if let Some(seed) = s.strip_prefix("random:") {
                    seed.parse().map(Self::Random).map_err(|_| format!("bad seed in {s:?}"))
                } else if let Some(path) = s.strip_prefix("file:") {
                    Ok(Self::File(path.into()))
                } else {
                    Err(format!(
                        "unknown omega {s:?}: use zero, squares, empty, random:<seed> or file:<path>"
                    ))
                }
            }
        }
    }
}

impl OmegaSpec {
    pub fn label(&self) -> String {
        match self {
            Self::Zero => "zero".into(),
            Self::Squares => "squares".into(),
            Self::Empty => "empty".into(),
            Self::Random(s) => format!("random:{s}"),
            Self::File(p) => format!("file:{}", p.display()),
        }
    }

    /// Builds the system; `q` is required for presets and, if given, must
    /// agree with a file's own bound.
    pub fn build(&self, q: Option<u64>) -> std::result::Result<OmegaSystem, String> {
        let need = || q.ok_or_else(|| format!("--Q is required for --omega {}", self.label()));
        let built: Result<OmegaSystem> = match self {
            Self::Zero => OmegaSystem::zero(need()?),
            Self::Squares => OmegaSystem::squares(need()?),
            Self::Empty => OmegaSystem::empty(need()?),
            Self::Random(seed) => OmegaSystem::random(need()?, *seed),
            Self::File(path) => OmegaSystem::from_json_file(path),
        };
        let omega = built.map_err(|e| e.to_string())?;
        match q {
            Some(q) if q != omega.bound() => Err(format!("--Q {q} disagrees with the file's Q = {}", omega.bound())),
            _ => Ok(omega),
        }
    }
}

/// `--poly` values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolySpec {
    DefaultSign,
    File(PathBuf),
}

impl FromStr for PolySpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "default-sign" => Ok(Self::DefaultSign),
            _ => s
                .strip_prefix("file:")
                .map(|p| Self::File(p.into()))
                .ok_or_else(|| format!("unknown poly {s:?}: use default-sign or file:<path>")),
        }
    }
}

impl PolySpec {
    pub fn build(&self) -> Result<ExactMinorantPoly> {
        match self {
            Self::DefaultSign => Ok(ExactMinorantPoly::default_sign()),
            Self::File(path) => ExactMinorantPoly::from_json_str(&std::fs::read_to_string(path)?),
        }
    }

    pub fn is_default(&self) -> bool {
        *self == Self::DefaultSign
    }
}
