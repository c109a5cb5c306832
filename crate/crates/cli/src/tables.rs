//! Binary table container: u64 LE header length, JSON header, payload.

use anyhow::{bail, ensure, Context, Result};
use osig_core::{BeliefGrid, ConjugateTable, FeasibilityMask, GameSpec, Grid, ValueTable};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

pub const VERSION: &str = "osig-table-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Primal,
    Dual,
    Mask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeDesc {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub counts: Vec<usize>,
}

impl LatticeDesc {
    fn of(g: &Grid) -> Self {
        Self { lo: g.lo().to_vec(), hi: g.hi().to_vec(), counts: g.counts().to_vec() }
    }

    fn grid(&self) -> Result<Grid> {
        Ok(Grid::new(self.lo.clone(), self.hi.clone(), self.counts.clone())?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub version: String,
    pub kind: Kind,
    pub game: String,
    pub steps: usize,
    pub n_states: usize,
    pub state_lattice: Option<LatticeDesc>,
    pub belief_nodes: usize,
    pub dual_lattice: Option<LatticeDesc>,
    pub cap: f64,
    pub tau: f64,
    /// Clipped successors (primal) or clamped dual reads (dual).
    pub counter: usize,
    /// Floats (or bits, for masks) per block; blocks are value rows k = 0..=L
    /// followed by stage rows k = 0..L.
    pub block: usize,
}

impl Header {
    fn new(spec: &GameSpec, kind: Kind, block: usize, counter: usize) -> Self {
        Self {
            version: VERSION.into(),
            kind,
            game: spec.name.clone(),
            steps: spec.steps(),
            n_states: spec.n_states(),
            state_lattice: spec.grid().map(LatticeDesc::of),
            belief_nodes: spec.belief.nodes,
            dual_lattice: spec.dual_lattice.as_ref().map(LatticeDesc::of),
            cap: spec.cap,
            tau: spec.tau(),
            counter,
            block,
        }
    }

    /// Errors unless the table was produced for a spec with the same discretization.
    pub fn check(&self, spec: &GameSpec) -> Result<()> {
        let expect = Header::new(spec, self.kind, self.block, self.counter);
        ensure!(
            self.steps == expect.steps
                && self.n_states == expect.n_states
                && self.state_lattice == expect.state_lattice
                && self.belief_nodes == expect.belief_nodes
                && self.cap == expect.cap
                && self.tau == expect.tau,
            "table does not match the configuration (steps, lattice, belief nodes, K or tau differ)"
        );
        if self.kind == Kind::Dual {
            ensure!(self.dual_lattice == expect.dual_lattice, "dual table lattice differs from the configuration");
        }
        Ok(())
    }
}

fn write_container(path: &Path, header: &Header, payload: &[u8]) -> Result<()> {
    let head = serde_json::to_vec(header)?;
    let mut f = std::io::BufWriter::new(
        std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    );
    f.write_all(&(head.len() as u64).to_le_bytes())?;
    f.write_all(&head)?;
    f.write_all(payload)?;
    f.flush()?;
    Ok(())
}

fn read_container(path: &Path, kind: Kind) -> Result<(Header, Vec<u8>)> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read table {}", path.display()))?;
    ensure!(bytes.len() >= 8, "{} is too short for a table", path.display());
    let n = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
    ensure!(bytes.len() >= 8 + n, "{} has a truncated header", path.display());
    let header: Header = serde_json::from_slice(&bytes[8..8 + n]).context("table header")?;
    ensure!(header.version == VERSION, "unsupported table version {}", header.version);
    ensure!(header.kind == kind, "expected a {kind:?} table, found {:?}", header.kind);
    Ok((header, bytes[8 + n..].to_vec()))
}

fn floats_to_bytes(blocks: &[&Vec<f64>]) -> Vec<u8> {
    blocks.iter().flat_map(|b| b.iter()).flat_map(|v| v.to_le_bytes()).collect()
}

fn bytes_to_blocks(payload: &[u8], block: usize, count: usize) -> Result<Vec<Vec<f64>>> {
    ensure!(payload.len() == 8 * block * count, "table payload has the wrong size");
    let floats: Vec<f64> = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(floats.chunks(block.max(1)).take(count).map(|c| c.to_vec()).collect())
}

pub fn write_primal(path: &Path, spec: &GameSpec, t: &ValueTable) -> Result<()> {
    let header = Header::new(spec, Kind::Primal, t.n_states * t.nb(), t.clipped);
    let blocks: Vec<&Vec<f64>> = t.values.iter().chain(&t.stage).collect();
    write_container(path, &header, &floats_to_bytes(&blocks))
}

pub fn read_primal(path: &Path, masks: FeasibilityMask) -> Result<(Header, ValueTable)> {
    let (h, payload) = read_container(path, Kind::Primal)?;
    let mut blocks = bytes_to_blocks(&payload, h.block, 2 * h.steps + 1)?;
    let stage = blocks.split_off(h.steps + 1);
    ensure!(masks.steps() == h.steps, "mask file has a different horizon");
    let table = ValueTable {
        values: blocks,
        stage,
        masks,
        belief: BeliefGrid::new(h.belief_nodes)?,
        n_states: h.n_states,
        cap: h.cap,
        tau: h.tau,
        clipped: h.counter,
    };
    Ok((h, table))
}

pub fn write_dual(path: &Path, spec: &GameSpec, t: &ConjugateTable) -> Result<()> {
    let header = Header::new(spec, Kind::Dual, t.n_states * t.nd(), t.clamped_reads);
    let blocks: Vec<&Vec<f64>> = t.values.iter().chain(&t.stage).collect();
    write_container(path, &header, &floats_to_bytes(&blocks))
}

pub fn read_dual(path: &Path, masks: FeasibilityMask) -> Result<(Header, ConjugateTable)> {
    let (h, payload) = read_container(path, Kind::Dual)?;
    let Some(d) = &h.dual_lattice else { bail!("dual table without a dual lattice") };
    let grid = d.grid()?;
    let mut blocks = bytes_to_blocks(&payload, h.block, 2 * h.steps + 1)?;
    let stage = blocks.split_off(h.steps + 1);
    ensure!(masks.steps() == h.steps, "mask file has a different horizon");
    let table = ConjugateTable {
        values: blocks,
        stage,
        masks,
        grid,
        n_states: h.n_states,
        cap: h.cap,
        tau: h.tau,
        clamped_reads: h.counter,
    };
    Ok((h, table))
}

pub fn write_mask(path: &Path, spec: &GameSpec, m: &FeasibilityMask) -> Result<()> {
    let header = Header::new(spec, Kind::Mask, spec.n_states(), 0);
    let bits: Vec<bool> = m.masks.iter().flatten().copied().collect();
    let mut packed = vec![0u8; bits.len().div_ceil(8)];
    for (j, &b) in bits.iter().enumerate() {
        if b {
            packed[j / 8] |= 1 << (j % 8);
        }
    }
    write_container(path, &header, &packed)
}

pub fn read_mask(path: &Path) -> Result<(Header, FeasibilityMask)> {
    let (h, payload) = read_container(path, Kind::Mask)?;
    let total = h.block * (h.steps + 1);
    ensure!(payload.len() == total.div_ceil(8), "mask payload has the wrong size");
    let bits: Vec<bool> = (0..total).map(|j| payload[j / 8] >> (j % 8) & 1 == 1).collect();
    let masks = bits.chunks(h.block.max(1)).map(|c| c.to_vec()).collect();
    Ok((h, FeasibilityMask { masks }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use osig_core::games::{beer_quiche_spec, corridor, CorridorParams};

    #[test]
    fn primal_roundtrip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let spec = corridor(&CorridorParams::default()).unwrap();
        let t = osig_core::solve(&spec).unwrap();
        let (a, b, m) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("m"));
        write_primal(&a, &spec, &t).unwrap();
        write_mask(&m, &spec, &t.masks).unwrap();
        let (_, masks) = read_mask(&m).unwrap();
        assert_eq!(masks, t.masks);
        let (h, back) = read_primal(&a, masks).unwrap();
        h.check(&spec).unwrap();
        assert_eq!(back, t);
        write_primal(&b, &spec, &back).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn dual_roundtrip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let spec = beer_quiche_spec().unwrap();
        let t = osig_core::dual_solve(&spec).unwrap();
        let (a, b) = (dir.path().join("a"), dir.path().join("b"));
        write_dual(&a, &spec, &t).unwrap();
        let (_, back) = read_dual(&a, t.masks.clone()).unwrap();
        assert_eq!(back, t);
        write_dual(&b, &spec, &back).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn wrong_kind_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let spec = beer_quiche_spec().unwrap();
        let t = osig_core::solve(&spec).unwrap();
        let p = dir.path().join("m");
        write_mask(&p, &spec, &t.masks).unwrap();
        assert!(read_primal(&p, t.masks.clone()).is_err());
    }
}
