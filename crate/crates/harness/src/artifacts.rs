//! Output directories of `reduce` and `gadget`, read back by `search` and
//! `classify`.
//!
//! A directory holds `phi_s.cq`, `phi_b.qx` and `c.count`, optionally
//! `c_b.count` (default 1). It encodes the check `c·φ_s(D) > c_b·φ_b(D)`.

use std::path::Path;

use bagcq_core::encoder::EncoderOutput;
use bagcq_core::gadgets::GadgetPair;
use bagcq_core::polyreduce::HilbertInstance;
use bagcq_core::qalgebra::DEFAULT_FLATTEN_CAP;
use bagcq_core::{Count, Database, QueryExpr};

use crate::formats::{
    parse_count, parse_instance, parse_query, parse_query_expr, read_file, write_count, write_database, write_file,
    write_instance, write_query, write_query_expr, FormatError, Result,
};
use crate::search::ScaledCheck;

pub const PHI_S: &str = "phi_s.cq";
pub const PHI_B: &str = "phi_b.qx";
pub const C: &str = "c.count";
pub const C_B: &str = "c_b.count";
pub const ARENA: &str = "arena.db";
pub const INSTANCE: &str = "instance.poly.json-lines";
pub const WITNESS: &str = "witness.db";
pub const MULTIPLIER: &str = "multiplier.txt";

fn create(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| FormatError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

pub fn write_reduction(dir: &Path, inst: &HilbertInstance, out: &EncoderOutput) -> Result<()> {
    create(dir)?;
    write_file(&dir.join(PHI_S), &write_query(&out.phi_s.flatten(DEFAULT_FLATTEN_CAP)?))?;
    write_file(&dir.join(PHI_B), &write_query_expr(&out.phi_b))?;
    write_file(&dir.join(C), &write_count(&out.c))?;
    write_file(&dir.join(ARENA), &write_database(&out.arena_db))?;
    write_file(&dir.join(INSTANCE), &write_instance(inst))
}

/// The pair as the check `den·q_s(D) > num·q_b(D)`, which refutes the
/// declared multiplier `num/den`.
pub fn write_gadget(dir: &Path, g: &GadgetPair, witness: &Database) -> Result<()> {
    create(dir)?;
    write_file(&dir.join(PHI_S), &write_query(&g.q_s))?;
    write_file(&dir.join(PHI_B), &write_query_expr(&QueryExpr::leaf(g.q_b.clone())))?;
    write_file(&dir.join(C), &write_count(&Count::from_biguint(g.multiplier.denom().clone())))?;
    write_file(&dir.join(C_B), &write_count(&Count::from_biguint(g.multiplier.numer().clone())))?;
    write_file(&dir.join(WITNESS), &write_database(witness))?;
    write_file(&dir.join(MULTIPLIER), &format!("{}\n", g.multiplier))
}

pub fn read_check(dir: &Path) -> Result<ScaledCheck> {
    let phi_s = QueryExpr::leaf(parse_query(&read_file(&dir.join(PHI_S))?)?);
    let phi_b = parse_query_expr(&read_file(&dir.join(PHI_B))?, Some(dir))?;
    let c_s = parse_count(&read_file(&dir.join(C))?)?;
    let cb_path = dir.join(C_B);
    let c_b = if cb_path.exists() {
        parse_count(&read_file(&cb_path)?)?
    } else {
        Count::one()
    };
    Ok(ScaledCheck { c_s, phi_s, c_b, phi_b })
}

pub fn read_instance(dir: &Path) -> Result<HilbertInstance> {
    parse_instance(&read_file(&dir.join(INSTANCE))?)
}
