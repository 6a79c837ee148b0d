//! Schemas, queries, databases and canonical structures.
//!
//! A [`Query`] is a boolean conjunctive query: a set of relational atoms over
//! variables and constants plus a list of inequality atoms. A [`Database`] is a
//! finite relational structure with an explicit constant interpretation, which
//! may be non-injective so that databases identifying constants can be built.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};

/// The first distinguished constant (written `@mars` in query files).
pub const MARS: &str = "mars";
/// The second distinguished constant (written `@venus` in query files).
pub const VENUS: &str = "venus";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema {
    relations: BTreeMap<String, usize>,
    constants: BTreeSet<String>,
}

impl Default for Schema {
    fn default() -> Self {
        Self::new()
    }
}

impl Schema {
    /// An empty schema holding only the two distinguished constants.
    pub fn new() -> Self {
        let constants = [MARS, VENUS].iter().map(|s| s.to_string()).collect();
        Schema {
            relations: BTreeMap::new(),
            constants,
        }
    }

    pub fn with_relation(mut self, name: &str, arity: usize) -> Result<Self> {
        self.add_relation(name, arity)?;
        Ok(self)
    }

    pub fn with_constant(mut self, name: &str) -> Self {
        self.add_constant(name);
        self
    }

    pub fn add_relation(&mut self, name: &str, arity: usize) -> Result<()> {
        if arity == 0 {
            return Err(Error::ZeroArity(name.to_string()));
        }
        match self.relations.get(name) {
            Some(&a) if a != arity => Err(Error::SchemaMismatch {
                relation: name.to_string(),
                left: a,
                right: arity,
            }),
            Some(_) => Ok(()),
            None => {
                self.relations.insert(name.to_string(), arity);
                Ok(())
            }
        }
    }

    pub fn add_constant(&mut self, name: &str) {
        self.constants.insert(name.to_string());
    }

    pub fn arity(&self, relation: &str) -> Option<usize> {
        self.relations.get(relation).copied()
    }

    pub fn has_constant(&self, name: &str) -> bool {
        self.constants.contains(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, usize)> {
        self.relations.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn constants(&self) -> impl Iterator<Item = &str> {
        self.constants.iter().map(String::as_str)
    }

    /// Union of two schemas; fails if a relation is declared with two arities.
    pub fn merge(&self, other: &Schema) -> Result<Schema> {
        let mut out = self.clone();
        for (name, arity) in other.relations() {
            out.add_relation(name, arity)?;
        }
        for c in other.constants() {
            out.add_constant(c);
        }
        Ok(out)
    }

    /// Checks that no relation is declared with different arities in both.
    pub fn check_compatible(&self, other: &Schema) -> Result<()> {
        for (name, arity) in other.relations() {
            if let Some(a) = self.arity(name) {
                if a != arity {
                    return Err(Error::SchemaMismatch {
                        relation: name.to_string(),
                        left: a,
                        right: arity,
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Term {
        Term::Const(name.into())
    }

    pub fn mars() -> Term {
        Term::Const(MARS.to_string())
    }

    pub fn venus() -> Term {
        Term::Const(VENUS.to_string())
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Var(s) | Term::Const(s) => s,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "@{c}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub relation: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(relation: impl Into<String>, args: Vec<Term>) -> Atom {
        Atom {
            relation: relation.into(),
            args,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, ")")
    }
}

/// A boolean conjunctive query with optional inequality atoms.
///
/// Atoms form a set: pushing an atom that is already present is a no-op.
/// Inequalities are unordered pairs and are deduplicated the same way.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    schema: Schema,
    atoms: Vec<Atom>,
    inequalities: Vec<(Term, Term)>,
    // Variables declared without occurring in any atom or inequality.
    free: Vec<String>,
}

impl Query {
    pub fn new(schema: Schema) -> Query {
        Query {
            schema,
            atoms: Vec::new(),
            inequalities: Vec::new(),
            free: Vec::new(),
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn inequalities(&self) -> &[(Term, Term)] {
        &self.inequalities
    }

    fn check_term(&self, t: &Term) -> Result<()> {
        match t {
            Term::Const(c) if !self.schema.has_constant(c) => Err(Error::UnknownConstant(c.clone())),
            _ => Ok(()),
        }
    }

    pub fn push_atom(&mut self, atom: Atom) -> Result<()> {
        let arity = self
            .schema
            .arity(&atom.relation)
            .ok_or_else(|| Error::UnknownRelation(atom.relation.clone()))?;
        if arity != atom.args.len() {
            return Err(Error::ArityMismatch {
                relation: atom.relation.clone(),
                expected: arity,
                found: atom.args.len(),
            });
        }
        for t in &atom.args {
            self.check_term(t)?;
        }
        if !self.atoms.contains(&atom) {
            self.atoms.push(atom);
        }
        Ok(())
    }

    /// Convenience wrapper around [`Query::push_atom`].
    pub fn atom(&mut self, relation: &str, args: Vec<Term>) -> Result<()> {
        self.push_atom(Atom::new(relation, args))
    }

    pub fn push_neq(&mut self, a: Term, b: Term) -> Result<()> {
        self.check_term(&a)?;
        self.check_term(&b)?;
        let present = self
            .inequalities
            .iter()
            .any(|(x, y)| (x == &a && y == &b) || (x == &b && y == &a));
        if !present {
            self.inequalities.push((a, b));
        }
        Ok(())
    }

    /// Declares a variable, which need not occur in any atom. An atomless
    /// query with `j` declared variables counts `|V_D|^j`.
    pub fn push_var(&mut self, name: &str) {
        if !self.free.iter().any(|v| v == name) {
            self.free.push(name.to_string());
        }
    }

    /// Explicitly declared variables, including ones that also occur in atoms.
    pub fn declared_vars(&self) -> &[String] {
        &self.free
    }

    /// Replaces the schema with a compatible superset of it.
    pub fn extend_schema(&mut self, other: &Schema) -> Result<()> {
        self.schema = self.schema.merge(other)?;
        Ok(())
    }

    pub(crate) fn from_parts(
        schema: Schema,
        atoms: Vec<Atom>,
        inequalities: Vec<(Term, Term)>,
        free: Vec<String>,
    ) -> Result<Query> {
        let mut q = Query::new(schema);
        for v in free {
            q.push_var(&v);
        }
        for a in atoms {
            q.push_atom(a)?;
        }
        for (a, b) in inequalities {
            q.push_neq(a, b)?;
        }
        Ok(q)
    }

    /// Var(q), in order of first appearance: atoms, then inequalities, then
    /// declared variables.
    pub fn variables(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let terms = self
            .atoms
            .iter()
            .flat_map(|a| a.args.iter())
            .chain(self.inequalities.iter().flat_map(|(a, b)| [a, b]));
        let names = terms
            .filter_map(|t| match t {
                Term::Var(v) => Some(v),
                Term::Const(_) => None,
            })
            .chain(self.free.iter());
        for v in names {
            if seen.insert(v.clone()) {
                out.push(v.clone());
            }
        }
        out
    }

    /// Removes all inequality atoms. Variables that occurred only in
    /// inequalities stay declared, so Var(q) is unchanged.
    pub fn without_inequalities(&self) -> Query {
        let vars = self.variables();
        let mut q = self.clone();
        q.inequalities.clear();
        let kept: BTreeSet<String> = q.variables().into_iter().collect();
        for v in vars {
            if !kept.contains(&v) {
                q.push_var(&v);
            }
        }
        q
    }

    /// Constants mentioned by atoms or inequalities, in order of first appearance.
    pub fn constants_used(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let terms = self
            .atoms
            .iter()
            .flat_map(|a| a.args.iter())
            .chain(self.inequalities.iter().flat_map(|(a, b)| [a, b]));
        for t in terms {
            if let Term::Const(c) = t {
                if seen.insert(c.clone()) {
                    out.push(c.clone());
                }
            }
        }
        out
    }

    pub fn num_variables(&self) -> usize {
        self.variables().len()
    }

    /// Relations actually used by atoms, with their arities.
    pub fn relations_used(&self) -> BTreeMap<String, usize> {
        self.atoms
            .iter()
            .map(|a| (a.relation.clone(), a.args.len()))
            .collect()
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for a in &self.atoms {
            if !first {
                write!(f, " ∧ ")?;
            }
            first = false;
            write!(f, "{a}")?;
        }
        for (a, b) in &self.inequalities {
            if !first {
                write!(f, " ∧ ")?;
            }
            first = false;
            write!(f, "{a}≠{b}")?;
        }
        if first {
            write!(f, "⊤")?;
        }
        Ok(())
    }
}

/// Element identifier inside a [`Database`].
pub type ElemId = u32;

/// A finite relational structure.
///
/// Elements are named by opaque strings; facts are stored per relation as
/// sets of element-id tuples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Database {
    schema: Schema,
    elements: Vec<String>,
    index: HashMap<String, ElemId>,
    facts: BTreeMap<String, BTreeSet<Vec<ElemId>>>,
    const_interp: BTreeMap<String, ElemId>,
}

impl Database {
    pub fn new(schema: Schema) -> Database {
        Database {
            schema,
            elements: Vec::new(),
            index: HashMap::new(),
            facts: BTreeMap::new(),
            const_interp: BTreeMap::new(),
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn extend_schema(&mut self, other: &Schema) -> Result<()> {
        self.schema = self.schema.merge(other)?;
        Ok(())
    }

    /// Adds an element if absent and returns its id.
    pub fn add_element(&mut self, name: &str) -> ElemId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.elements.len() as ElemId;
        self.elements.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_id(&self, name: &str) -> Option<ElemId> {
        self.index.get(name).copied()
    }

    pub fn element_name(&self, id: ElemId) -> &str {
        &self.elements[id as usize]
    }

    pub fn add_fact_ids(&mut self, relation: &str, tuple: Vec<ElemId>) -> Result<bool> {
        let arity = self
            .schema
            .arity(relation)
            .ok_or_else(|| Error::UnknownRelation(relation.to_string()))?;
        if arity != tuple.len() {
            return Err(Error::ArityMismatch {
                relation: relation.to_string(),
                expected: arity,
                found: tuple.len(),
            });
        }
        if let Some(bad) = tuple.iter().find(|&&e| e as usize >= self.elements.len()) {
            return Err(Error::UnknownElement(format!("#{bad}")));
        }
        Ok(self.facts.entry(relation.to_string()).or_default().insert(tuple))
    }

    /// Adds a fact by element names; the elements must already exist.
    pub fn add_fact(&mut self, relation: &str, elems: &[&str]) -> Result<bool> {
        let ids = elems
            .iter()
            .map(|e| self.element_id(e).ok_or_else(|| Error::UnknownElement(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        self.add_fact_ids(relation, ids)
    }

    pub fn remove_fact(&mut self, relation: &str, tuple: &[ElemId]) -> bool {
        let removed = self.facts.get_mut(relation).is_some_and(|s| s.remove(tuple));
        if self.facts.get(relation).is_some_and(|s| s.is_empty()) {
            self.facts.remove(relation);
        }
        removed
    }

    pub fn has_fact(&self, relation: &str, tuple: &[ElemId]) -> bool {
        self.facts.get(relation).is_some_and(|s| s.contains(tuple))
    }

    /// Facts of one relation (empty if none).
    pub fn relation_facts(&self, relation: &str) -> impl Iterator<Item = &Vec<ElemId>> {
        self.facts.get(relation).into_iter().flatten()
    }

    pub fn num_facts_of(&self, relation: &str) -> usize {
        self.facts.get(relation).map_or(0, BTreeSet::len)
    }

    pub fn num_facts(&self) -> usize {
        self.facts.values().map(BTreeSet::len).sum()
    }

    /// All facts as (relation, tuple), relation-major in name order.
    pub fn facts(&self) -> impl Iterator<Item = (&str, &Vec<ElemId>)> {
        self.facts
            .iter()
            .flat_map(|(r, set)| set.iter().map(move |t| (r.as_str(), t)))
    }

    pub fn set_constant(&mut self, name: &str, elem: ElemId) -> Result<()> {
        if !self.schema.has_constant(name) {
            return Err(Error::UnknownConstant(name.to_string()));
        }
        if elem as usize >= self.elements.len() {
            return Err(Error::UnknownElement(format!("#{elem}")));
        }
        self.const_interp.insert(name.to_string(), elem);
        Ok(())
    }

    pub fn interp(&self, constant: &str) -> Option<ElemId> {
        self.const_interp.get(constant).copied()
    }

    pub fn const_interp(&self) -> &BTreeMap<String, ElemId> {
        &self.const_interp
    }

    /// True iff mars and venus are interpreted as different elements.
    pub fn is_nontrivial(&self) -> Result<bool> {
        is_nontrivial(self)
    }
}

/// True iff the database interprets mars and venus as different elements.
pub fn is_nontrivial(d: &Database) -> Result<bool> {
    let m = d
        .interp(MARS)
        .ok_or_else(|| Error::MalformedDatabase("constant @mars is not interpreted".into()))?;
    let v = d
        .interp(VENUS)
        .ok_or_else(|| Error::MalformedDatabase("constant @venus is not interpreted".into()))?;
    Ok(m != v)
}

/// The canonical structure of a query.
///
/// One element per variable and per distinct constant used; atoms become facts;
/// inequalities are dropped. A constant element is named after the constant,
/// or `@name` if a variable already uses that name.
pub fn canonical_structure(q: &Query) -> Database {
    let mut d = Database::new(q.schema().clone());
    let vars = q.variables();
    let var_set: BTreeSet<&String> = vars.iter().collect();
    let mut term_elem: HashMap<Term, ElemId> = HashMap::new();
    let terms = q
        .atoms()
        .iter()
        .flat_map(|a| a.args.iter())
        .chain(q.inequalities().iter().flat_map(|(a, b)| [a, b]));
    for t in terms {
        if term_elem.contains_key(t) {
            continue;
        }
        let id = match t {
            Term::Var(v) => d.add_element(v),
            Term::Const(c) if var_set.contains(c) => d.add_element(&format!("@{c}")),
            Term::Const(c) => d.add_element(c),
        };
        if let Term::Const(c) = t {
            d.set_constant(c, id).expect("constant declared in the query schema");
        }
        term_elem.insert(t.clone(), id);
    }
    for v in q.declared_vars() {
        d.add_element(v);
    }
    for a in q.atoms() {
        let tuple = a.args.iter().map(|t| term_elem[t]).collect();
        d.add_fact_ids(&a.relation, tuple).expect("atom validated against schema");
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Term {
        Term::var(s)
    }

    #[test]
    fn canonical_structure_of_one_atom() {
        let schema = Schema::new().with_relation("R", 2).unwrap();
        let mut q = Query::new(schema);
        q.atom("R", vec![v("x"), v("y")]).unwrap();
        let d = canonical_structure(&q);
        assert_eq!(d.elements(), &["x".to_string(), "y".to_string()]);
        assert!(d.has_fact("R", &[0, 1]));
        assert_eq!(d.num_facts(), 1);
    }

    #[test]
    fn canonical_structure_drops_inequalities() {
        let schema = Schema::new().with_relation("R", 2).unwrap();
        let mut q = Query::new(schema);
        q.atom("R", vec![v("x"), v("y")]).unwrap();
        let plain = canonical_structure(&q);
        q.push_neq(v("x"), v("y")).unwrap();
        assert_eq!(canonical_structure(&q), plain);
    }

    #[test]
    fn canonical_structure_of_cyclique_pair() {
        let schema = Schema::new().with_relation("R", 3).unwrap();
        let mut q = Query::new(schema);
        let (m, f) = (Term::mars(), Term::venus());
        q.atom("R", vec![f.clone(), f.clone(), f.clone()]).unwrap();
        q.atom("R", vec![m.clone(), f.clone(), f.clone()]).unwrap();
        q.atom("R", vec![f.clone(), f.clone(), m.clone()]).unwrap();
        q.atom("R", vec![f.clone(), m.clone(), f.clone()]).unwrap();
        let d = canonical_structure(&q);
        assert_eq!(d.num_elements(), 2);
        assert_eq!(d.num_facts(), 4);
        let (mi, vi) = (d.interp(MARS).unwrap(), d.interp(VENUS).unwrap());
        assert!(d.has_fact("R", &[vi, vi, vi]));
        assert!(d.has_fact("R", &[mi, vi, vi]));
        assert!(d.has_fact("R", &[vi, vi, mi]));
        assert!(d.has_fact("R", &[vi, mi, vi]));
        assert!(d.is_nontrivial().unwrap());
    }

    #[test]
    fn nontriviality() {
        let mut d = Database::new(Schema::new());
        let e1 = d.add_element("e1");
        let e2 = d.add_element("e2");
        d.set_constant(MARS, e1).unwrap();
        assert!(matches!(d.is_nontrivial(), Err(Error::MalformedDatabase(_))));
        d.set_constant(VENUS, e2).unwrap();
        assert!(d.is_nontrivial().unwrap());
        d.set_constant(VENUS, e1).unwrap();
        assert!(!d.is_nontrivial().unwrap());
    }

    #[test]
    fn query_validation() {
        let schema = Schema::new().with_relation("R", 2).unwrap();
        let mut q = Query::new(schema);
        assert!(matches!(
            q.atom("R", vec![v("x")]),
            Err(Error::ArityMismatch { expected: 2, found: 1, .. })
        ));
        assert!(matches!(q.atom("S", vec![v("x")]), Err(Error::UnknownRelation(_))));
        assert!(matches!(
            q.atom("R", vec![v("x"), Term::constant("zeus")]),
            Err(Error::UnknownConstant(_))
        ));
        assert!(matches!(Schema::new().with_relation("Z", 0), Err(Error::ZeroArity(_))));
    }

    #[test]
    fn atoms_form_a_set() {
        let schema = Schema::new().with_relation("R", 2).unwrap();
        let mut q = Query::new(schema);
        q.atom("R", vec![v("x"), v("y")]).unwrap();
        q.atom("R", vec![v("x"), v("y")]).unwrap();
        q.push_neq(v("x"), v("y")).unwrap();
        q.push_neq(v("y"), v("x")).unwrap();
        assert_eq!(q.atoms().len(), 1);
        assert_eq!(q.inequalities().len(), 1);
        assert_eq!(q.variables(), vec!["x", "y"]);
    }

    #[test]
    fn variable_named_like_constant() {
        let schema = Schema::new().with_relation("R", 2).unwrap();
        let mut q = Query::new(schema);
        q.atom("R", vec![v("mars"), Term::mars()]).unwrap();
        let d = canonical_structure(&q);
        assert_eq!(d.elements(), &["mars".to_string(), "@mars".to_string()]);
        assert_eq!(d.interp(MARS), Some(1));
    }

    #[test]
    fn schema_merge_detects_conflict() {
        let a = Schema::new().with_relation("R", 2).unwrap();
        let b = Schema::new().with_relation("R", 3).unwrap();
        assert!(matches!(a.merge(&b), Err(Error::SchemaMismatch { .. })));
        let c = Schema::new().with_relation("S", 1).unwrap().with_constant("a");
        let m = a.merge(&c).unwrap();
        assert_eq!(m.arity("S"), Some(1));
        assert!(m.has_constant("a"));
    }
}
