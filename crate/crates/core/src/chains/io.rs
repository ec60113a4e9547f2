//! JSON chain files. Coordinates and coefficients are written as decimal
//! strings (shortest round-trip form) and accepted as strings or numbers.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PolyChain, RawSummand};
use crate::error::{Error, Result};
use crate::foundation::{CoefficientGroup, GroupElement, NormSpec, NormedSpace};
use crate::linalg::Vector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Text(String),
    Value(f64),
}

impl Num {
    fn text(x: f64) -> Num {
        Num::Text(format!("{x}"))
    }

    fn get(&self) -> Result<f64> {
        match self {
            Num::Value(x) => Ok(*x),
            Num::Text(s) => s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number {s:?}"))),
        }
    }

    fn raw(&self) -> String {
        match self {
            Num::Value(x) => format!("{x}"),
            Num::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormFile {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Num>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facets: Option<Vec<Vec<Num>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceFile {
    pub dim: usize,
    pub norm: NormFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupFile {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummandFile {
    pub coeff: Num,
    pub vertices: Vec<Vec<Num>>,
    pub orientation_basis: Vec<Vec<Num>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainFile {
    pub space: SpaceFile,
    pub group: GroupFile,
    pub k: usize,
    pub summands: Vec<SummandFile>,
}

fn vector_of(xs: &[Num]) -> Result<Vector> {
    let v = xs.iter().map(Num::get).collect::<Result<Vec<f64>>>()?;
    Ok(Vector::from_vec(v))
}

fn nums(v: &Vector) -> Vec<Num> {
    v.iter().map(|x| Num::text(*x)).collect()
}

impl SpaceFile {
    pub fn from_space(space: &NormedSpace) -> SpaceFile {
        let norm = match space.spec() {
            NormSpec::P(p) => NormFile {
                kind: "p".into(),
                p: Some(Num::text(*p)),
                weights: None,
                facets: None,
            },
            NormSpec::WeightedP { p, weights } => NormFile {
                kind: "weighted_p".into(),
                p: Some(Num::text(*p)),
                weights: Some(weights.iter().map(|w| Num::text(*w)).collect()),
                facets: None,
            },
            NormSpec::Polytope { facets } => NormFile {
                kind: "polytope".into(),
                p: None,
                weights: None,
                facets: Some(facets.iter().map(nums).collect()),
            },
        };
        SpaceFile { dim: space.dim(), norm }
    }

    pub fn to_space(&self) -> Result<NormedSpace> {
        let p = || -> Result<f64> { self.norm.p.as_ref().ok_or_else(|| Error::Parse("norm needs field p".into()))?.get() };
        let spec = match self.norm.kind.as_str() {
            "p" => NormSpec::P(p()?),
            "weighted_p" => NormSpec::WeightedP {
                p: p()?,
                weights: self
                    .norm
                    .weights
                    .as_ref()
                    .ok_or_else(|| Error::Parse("weighted_p norm needs weights".into()))?
                    .iter()
                    .map(Num::get)
                    .collect::<Result<_>>()?,
            },
            "polytope" => NormSpec::Polytope {
                facets: self
                    .norm
                    .facets
                    .as_ref()
                    .ok_or_else(|| Error::Parse("polytope norm needs facets".into()))?
                    .iter()
                    .map(|f| vector_of(f))
                    .collect::<Result<_>>()?,
            },
            other => return Err(Error::Parse(format!("unknown norm kind {other:?}"))),
        };
        NormedSpace::new(self.dim, spec)
    }
}

impl GroupFile {
    pub fn from_group(g: CoefficientGroup) -> GroupFile {
        match g {
            CoefficientGroup::Integers => GroupFile { kind: "Z".into(), m: None },
            CoefficientGroup::IntegersMod(m) => GroupFile {
                kind: "Zm".into(),
                m: Some(m),
            },
            CoefficientGroup::Reals => GroupFile { kind: "R".into(), m: None },
        }
    }

    pub fn to_group(&self) -> Result<CoefficientGroup> {
        match self.kind.as_str() {
            "Z" => Ok(CoefficientGroup::Integers),
            "R" => Ok(CoefficientGroup::Reals),
            "Zm" => CoefficientGroup::integers_mod(self.m.ok_or_else(|| Error::Parse("group Zm needs m".into()))?),
            other => Err(Error::Parse(format!("unknown group kind {other:?}"))),
        }
    }
}

impl ChainFile {
    pub fn from_chain(chain: &PolyChain) -> ChainFile {
        ChainFile {
            space: SpaceFile::from_space(chain.space()),
            group: GroupFile::from_group(chain.group()),
            k: chain.k(),
            summands: chain
                .summands()
                .iter()
                .map(|s| SummandFile {
                    coeff: Num::Text(s.coeff.to_string()),
                    vertices: s.poly.vertices().iter().map(nums).collect(),
                    orientation_basis: s.poly.orientation_basis().iter().map(nums).collect(),
                })
                .collect(),
        }
    }

    pub fn to_chain(&self) -> Result<PolyChain> {
        let space = self.space.to_space()?;
        let group = self.group.to_group()?;
        let mut raw: Vec<RawSummand> = Vec::with_capacity(self.summands.len());
        for (index, s) in self.summands.iter().enumerate() {
            let wrap = |e: Error| Error::InvalidSummand {
                index,
                message: e.to_string(),
            };
            let coeff: GroupElement = group.parse(&s.coeff.raw()).map_err(wrap)?;
            let vertices = s.vertices.iter().map(|v| vector_of(v)).collect::<Result<Vec<_>>>().map_err(wrap)?;
            let basis = s
                .orientation_basis
                .iter()
                .map(|v| vector_of(v))
                .collect::<Result<Vec<_>>>()
                .map_err(wrap)?;
            if vertices.is_empty() {
                return Err(wrap(Error::Parse("no vertices".into())));
            }
            raw.push((coeff, vertices, basis));
        }
        PolyChain::from_raw(space, group, self.k, raw)
    }
}

pub fn chain_from_json(text: &str) -> Result<PolyChain> {
    let file: ChainFile = serde_json::from_str(text)?;
    file.to_chain()
}

pub fn chain_to_json(chain: &PolyChain) -> String {
    serde_json::to_string_pretty(&ChainFile::from_chain(chain)).expect("serializable")
}

pub fn read_chain(path: impl AsRef<Path>) -> Result<PolyChain> {
    chain_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_chain(chain: &PolyChain, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, chain_to_json(chain) + "\n")?;
    Ok(())
}
