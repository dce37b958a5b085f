//! Text configuration for lattice geometry and CSV export of chain
//! classifications.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{syndrome, Boundary, CanonicalGeometry, ChainClass, DefectSpec, RhgLattice, Tube, ZChain};
use crate::{Error, Result};

/// One tube, given either as `rect = [x0, y0, wx, wy]` or as an explicit
/// list of cells.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TubeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rect: Option<[usize; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<[usize; 3]>>,
}

/// The `[lattice]` section: either a target `distance` (canonical
/// two-tube geometry) or explicit `dims`, `boundary` and `tubes`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<[usize; 3]>,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tubes: Vec<TubeConfig>,
}

#[derive(Deserialize)]
struct Document {
    lattice: LatticeConfig,
}

impl LatticeConfig {
    /// Parses a document whose `[lattice]` table holds the geometry.
    pub fn from_toml(text: &str) -> Result<Self> {
        let doc: Document = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(doc.lattice)
    }

    pub fn build(&self) -> Result<(RhgLattice, DefectSpec)> {
        match (self.distance, self.dims) {
            (Some(d), None) => {
                if !self.tubes.is_empty() {
                    return Err(Error::Config("`tubes` cannot be combined with `distance`".into()));
                }
                CanonicalGeometry::for_distance(d)?.build()
            }
            (None, Some(dims)) => {
                let lattice = RhgLattice::build_with(dims, self.boundary)?;
                let tubes = self
                    .tubes
                    .iter()
                    .map(|t| match (&t.rect, &t.cells) {
                        (Some([x0, y0, wx, wy]), None) => Ok(Tube { x0: *x0, y0: *y0, wx: *wx, wy: *wy }),
                        (None, Some(cells)) => Tube::from_cells(cells, dims[2]),
                        _ => Err(Error::Config("each tube needs exactly one of `rect` or `cells`".into())),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let defects = DefectSpec::place(&lattice, tubes)?;
                Ok((lattice, defects))
            }
            (Some(_), Some(_)) => Err(Error::Config("give either `distance` or `dims`, not both".into())),
            (None, None) => Err(Error::Config("lattice needs `distance` or `dims`".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationRow {
    pub chain_id: usize,
    pub weight: usize,
    pub class: ChainClass,
    pub syndrome_count: usize,
}

impl ClassificationRow {
    pub fn for_chain(chain_id: usize, lattice: &RhgLattice, chain: &ZChain, defects: &DefectSpec) -> Result<Self> {
        let reps = defects.logical_reps()?;
        Ok(ClassificationRow {
            chain_id,
            weight: chain.weight(),
            class: super::classify(lattice, chain, defects, reps)?,
            syndrome_count: syndrome(lattice, chain, defects)?.len(),
        })
    }
}

/// Writes `chain_id,weight,class,syndrome_count` rows with a header.
pub fn write_classification_csv<W: Write>(out: W, rows: &[ClassificationRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(())
}
