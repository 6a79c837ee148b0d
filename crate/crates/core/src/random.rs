//! Seeded random databases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::relcore::{Database, ElemId, Schema, MARS, VENUS};

/// A database over `schema` with elements `e0 … e{k−1}` in which every
/// possible fact is present independently with probability `density`.
///
/// With `nontrivial`, mars is `e0` and venus is `e1`; all other constants are
/// interpreted uniformly at random.
pub fn random_database(schema: &Schema, domain_size: usize, density: f64, seed: u64, nontrivial: bool) -> Result<Database> {
    random_database_stream(schema, domain_size, density, seed, 0, nontrivial)
}

/// As [`random_database`], drawing from stream `stream` of the generator
/// keyed by `seed`, so that trial `i` of a run is reproducible on its own.
pub fn random_database_stream(
    schema: &Schema,
    domain_size: usize,
    density: f64,
    seed: u64,
    stream: u64,
    nontrivial: bool,
) -> Result<Database> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::Precondition(format!("density {density} is outside [0, 1]")));
    }
    if nontrivial && domain_size < 2 {
        return Err(Error::Precondition("a non-trivial database needs at least 2 elements".into()));
    }
    if domain_size == 0 {
        return Err(Error::Precondition("constants need at least one element".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut d = Database::new(schema.clone());
    for i in 0..domain_size {
        d.add_element(&format!("e{i}"));
    }
    for (rel, arity) in schema.relations() {
        let mut tuple = vec![0 as ElemId; arity];
        'tuples: loop {
            if rng.gen_bool(density) {
                d.add_fact_ids(rel, tuple.clone())?;
            }
            let mut p = arity;
            loop {
                if p == 0 {
                    break 'tuples;
                }
                p -= 1;
                tuple[p] += 1;
                if (tuple[p] as usize) < domain_size {
                    break;
                }
                tuple[p] = 0;
            }
        }
    }
    for c in schema.constants() {
        let e = match c {
            MARS if nontrivial => 0,
            VENUS if nontrivial => 1,
            _ => rng.gen_range(0..domain_size) as ElemId,
        };
        d.set_constant(c, e)?;
    }
    Ok(d)
}
