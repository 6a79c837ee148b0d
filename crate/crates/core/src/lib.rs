//! Bag-semantics boolean conjunctive queries.
//!
//! A boolean CQ evaluated on a database returns the number of homomorphisms
//! from the query into the database. This crate provides the data model, an
//! exact counting engine, the query/structure algebra that manipulates those
//! counts (disjoint conjunction, exponentiation, blow-up, product), the
//! multiplication gadgets, and the reduction that compiles an integer
//! polynomial into a triple `(c, phi_s, phi_b)` of a constant and two queries.
//!
//! Counts that cannot be materialized (the reduction produces exponents around
//! `10^25`) are carried as factored [`Count`] values and compared exactly.

pub mod count;
pub mod encoder;
pub mod error;
pub mod gadgets;
pub mod homcount;
pub mod polyreduce;
pub mod qalgebra;
pub mod random;
pub mod relcore;

pub use count::{compare_counts, Count};
pub use error::{Error, Result};
pub use homcount::{count_homomorphisms, enumerate_homomorphisms, exists_onto_homomorphism, hom_count};
pub use qalgebra::QueryExpr;
pub use relcore::{canonical_structure, Atom, Database, Query, Schema, Term, MARS, VENUS};
