//! JSON manifests: the only way the command line defines manifolds.
//!
//! ```json
//! {"type": "conformal", "factor": [{"freq": [0,0,0,0,0,0], "cos": 1.0},
//!                                  {"freq": [1,0,0,0,0,0], "cos": 0.2}],
//!  "base": {"type": "flat_torus", "dim": 6}}
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldExpr, TrigTerm};
use crate::manifold::{
    make_almost_kahler_torus, make_cayley_s6, make_compatible_torus, make_conformal, make_flat_torus,
    make_pullback, make_round_sphere, make_shear_diffeo, ChartedManifold,
};

pub const DEFAULT_DIM: usize = 6;
pub const DEFAULT_AMPLITUDE: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    FlatTorus,
    CompatibleTorus,
    AlmostKahlerTorus,
    CayleyS6,
    RoundSphere,
    Conformal,
    Pullback,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(rename = "type")]
    pub kind: ManifoldKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<Vec<TrigTerm>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Box<Manifest>>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Manifest(e.to_string()))
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn simple(kind: ManifoldKind) -> Self {
        Manifest {
            kind,
            dim: None,
            seed: None,
            amplitude: None,
            factor: None,
            base: None,
        }
    }

    pub fn seeded(kind: ManifoldKind, seed: u64, amplitude: f64) -> Self {
        Manifest {
            seed: Some(seed),
            amplitude: Some(amplitude),
            ..Self::simple(kind)
        }
    }

    pub fn wrapping(kind: ManifoldKind, base: Manifest) -> Self {
        Manifest {
            base: Some(Box::new(base)),
            ..Self::simple(kind)
        }
    }

    fn base(&self) -> Result<ChartedManifold> {
        self.base
            .as_ref()
            .ok_or_else(|| Error::Manifest(format!("{:?} manifest needs a \"base\"", self.kind)))?
            .build()
    }

    fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Manifest(format!("{:?} manifest needs a \"seed\"", self.kind)))
    }

    pub fn build(&self) -> Result<ChartedManifold> {
        let dim = self.dim.unwrap_or(DEFAULT_DIM);
        let amplitude = self.amplitude.unwrap_or(DEFAULT_AMPLITUDE);
        match self.kind {
            ManifoldKind::FlatTorus => make_flat_torus(dim),
            ManifoldKind::CompatibleTorus => make_compatible_torus(dim, self.seed()?, amplitude),
            ManifoldKind::AlmostKahlerTorus => make_almost_kahler_torus(dim, self.seed()?, amplitude),
            ManifoldKind::CayleyS6 => {
                if dim != 6 {
                    return Err(Error::Manifest(format!("cayley_s6 has dimension 6, not {dim}")));
                }
                Ok(make_cayley_s6())
            }
            ManifoldKind::RoundSphere => make_round_sphere(dim),
            ManifoldKind::Conformal => {
                let base = self.base()?;
                let terms = self
                    .factor
                    .clone()
                    .ok_or_else(|| Error::Manifest("conformal manifest needs a \"factor\"".into()))?;
                if let Some(t) = terms.iter().find(|t| t.freq.len() != base.dim) {
                    return Err(Error::Manifest(format!(
                        "factor frequency {:?} does not have {} entries",
                        t.freq, base.dim
                    )));
                }
                make_conformal(&base, FieldExpr::trig(terms))
            }
            ManifoldKind::Pullback => {
                let base = self.base()?;
                let stages = make_shear_diffeo(base.dim, self.seed()?, amplitude)?;
                make_pullback(&base, stages)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_conformal_parses() {
        let m = Manifest::parse(
            r#"{"type": "conformal",
                "factor": [{"freq": [0,0,0,0,0,0], "cos": 1.0}, {"freq": [1,0,0,0,0,0], "cos": 0.2}],
                "base": {"type": "flat_torus", "dim": 6}}"#,
        )
        .unwrap();
        let cm = m.build().unwrap();
        assert_eq!(cm.dim, 6);
        let back = Manifest::parse(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn malformed_manifests() {
        assert!(matches!(Manifest::parse("{\"type\": \"klein_bottle\"}"), Err(Error::Manifest(_))));
        assert!(matches!(Manifest::parse("{\"type\": \"flat_torus\", \"dims\": 6}"), Err(Error::Manifest(_))));
        let m = Manifest::parse("{\"type\": \"compatible_torus\"}").unwrap();
        assert!(matches!(m.build(), Err(Error::Manifest(_))));
    }
}
