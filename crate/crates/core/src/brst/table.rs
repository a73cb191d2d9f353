//! Parser and compiler for transformation tables.
//!
//! A table is a line-oriented text file:
//!
//! ```text
//! table brst
//! dim 4
//! coupling i
//! field phi even scalar
//! field eta odd scalar idx 1
//! op Q idx
//! def s1 = dA C
//! rule Q^a eta^b = - eps_{cd} [phi^{ac}, phi^{bd}]
//! check QQ Q^a Q^b fit phi^{11}, phi^{12}, phi^{22} sector phi, eta
//! ```
//!
//! Repeated index letters inside a term are summed over 1, 2. `dA X` is
//! `coupling [A_mu, X]`, the constant-mode covariant derivative.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::grassmann::Parity;
use super::BrstError;
use crate::series::ExactComplex;

/// Toggle bit carried by gauge terms: the overall sign of the gauge variation.
pub const SIGMA_BIT: u64 = 1 << 63;
const MAX_RULES: usize = 63;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Scalar,
    Vector,
    SelfDual,
}

impl Shape {
    fn components(self, dim: usize) -> usize {
        match self {
            Shape::Scalar => 1,
            Shape::Vector => dim,
            Shape::SelfDual => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Idx {
    Var(char),
    Fixed(u8),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpRef {
    pub name: String,
    pub index: Option<Idx>,
}

#[derive(Clone, Debug)]
enum Expr {
    Sum(Vec<Term>),
}

#[derive(Clone, Debug)]
struct Term {
    coeff: ExactComplex,
    eps: Vec<(bool, Idx, Idx)>,
    obj: Obj,
}

#[derive(Clone, Debug)]
enum Obj {
    Name(String, Vec<Idx>),
    Bracket(Box<Expr>, Box<Expr>),
    Sd(Box<Expr>, Box<Expr>),
    Cross(Box<Expr>, Box<Expr>),
    Contract(Box<Expr>, Box<Expr>),
    DA(Box<Obj>),
    Paren(Box<Expr>),
    Apply(OpRef, String),
}

#[derive(Clone, Debug)]
pub struct FieldDecl {
    pub name: String,
    pub parity: Parity,
    pub shape: Shape,
    pub r_indices: u8,
    pub symmetric: bool,
}

#[derive(Clone, Debug)]
struct RuleDecl {
    line: usize,
    op: OpRef,
    field: String,
    indices: Vec<Idx>,
    expr: Expr,
}

#[derive(Clone, Debug)]
enum GaugeDecl {
    Fixed(Expr),
    Fit(Vec<Expr>),
}

#[derive(Clone, Debug)]
struct CheckDecl {
    line: usize,
    name: String,
    ops: [OpRef; 2],
    gauge: GaugeDecl,
    sector: Option<Vec<String>>,
}

// ---------------------------------------------------------------- tokens

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(i64),
    Sym(char),
}

fn tokenize(s: &str, line: usize) -> Result<Vec<Tok>, BrstError> {
    let mut out = Vec::new();
    let cs: Vec<char> = s.chars().collect();
    let mut k = 0;
    while k < cs.len() {
        let c = cs[k];
        if c.is_whitespace() {
            k += 1;
        } else if c.is_ascii_alphabetic() {
            let st = k;
            while k < cs.len() && cs[k].is_ascii_alphanumeric() {
                k += 1;
            }
            out.push(Tok::Ident(cs[st..k].iter().collect()));
        } else if c.is_ascii_digit() {
            let st = k;
            while k < cs.len() && cs[k].is_ascii_digit() {
                k += 1;
            }
            let t: String = cs[st..k].iter().collect();
            out.push(Tok::Num(t.parse().map_err(|_| perr(line, format!("number {t:?} too large")))?));
        } else if "^_{}[](),+-/=".contains(c) {
            out.push(Tok::Sym(c));
            k += 1;
        } else {
            return Err(perr(line, format!("unexpected character {c:?}")));
        }
    }
    Ok(out)
}

fn perr(line: usize, msg: impl Into<String>) -> BrstError {
    BrstError::Parse { line, msg: msg.into() }
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    line: usize,
    ops: &'a BTreeSet<String>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn err(&self, msg: impl Into<String>) -> BrstError {
        perr(self.line, msg)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), BrstError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected {c:?}, found {:?}", self.peek())))
        }
    }

    fn ident(&mut self) -> Result<String, BrstError> {
        match self.next() {
            Some(Tok::Ident(s)) => Ok(s),
            t => Err(self.err(format!("expected a name, found {t:?}"))),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(x)) if x == s)
    }

    /// `{ab}`, `{12}`, `a` or `1` after a `^` or `_`.
    fn indices(&mut self) -> Result<Vec<Idx>, BrstError> {
        let mut raw = String::new();
        if self.eat('{') {
            loop {
                match self.next() {
                    Some(Tok::Sym('}')) => break,
                    Some(Tok::Ident(s)) => raw.push_str(&s),
                    Some(Tok::Num(n)) => raw.push_str(&n.to_string()),
                    t => return Err(self.err(format!("bad index list near {t:?}"))),
                }
            }
        } else {
            match self.next() {
                Some(Tok::Ident(s)) => raw.push_str(&s),
                Some(Tok::Num(n)) => raw.push_str(&n.to_string()),
                t => return Err(self.err(format!("expected an index, found {t:?}"))),
            }
        }
        raw.chars()
            .map(|c| match c {
                '1' => Ok(Idx::Fixed(1)),
                '2' => Ok(Idx::Fixed(2)),
                c if c.is_ascii_lowercase() => Ok(Idx::Var(c)),
                c => Err(self.err(format!("index {c:?} is neither 1, 2 nor a letter"))),
            })
            .collect()
    }

    fn op_ref(&mut self) -> Result<OpRef, BrstError> {
        let name = self.ident()?;
        if !self.ops.contains(&name) {
            return Err(self.err(format!("unknown operator {name:?}")));
        }
        let index = if self.eat('^') {
            let v = self.indices()?;
            if v.len() != 1 {
                return Err(self.err("operators carry at most one index"));
            }
            Some(v[0])
        } else {
            None
        };
        Ok(OpRef { name, index })
    }

    fn expr(&mut self) -> Result<Expr, BrstError> {
        let mut terms = Vec::new();
        let mut neg = if self.eat('-') {
            true
        } else {
            self.eat('+');
            false
        };
        loop {
            if let Some(mut t) = self.term()? {
                if neg {
                    t.coeff = -t.coeff;
                }
                terms.push(t);
            }
            if self.eat('+') {
                neg = false;
            } else if self.eat('-') {
                neg = true;
            } else {
                break;
            }
        }
        Ok(Expr::Sum(terms))
    }

    /// A product of coefficients and at most one object; `None` for a literal zero.
    fn term(&mut self) -> Result<Option<Term>, BrstError> {
        let mut coeff = ExactComplex::one();
        let mut eps = Vec::new();
        loop {
            match self.peek().cloned() {
                Some(Tok::Num(n)) => {
                    self.pos += 1;
                    let mut c = ExactComplex::from_int(n);
                    if self.eat('/') {
                        match self.next() {
                            Some(Tok::Num(d)) if d != 0 => c = ExactComplex::from_ratio(n, d),
                            t => return Err(self.err(format!("bad denominator {t:?}"))),
                        }
                    }
                    coeff = &coeff * &c;
                }
                Some(Tok::Ident(s)) if s == "i" => {
                    self.pos += 1;
                    coeff = &coeff * &ExactComplex::i();
                }
                Some(Tok::Ident(s)) if s == "eps" => {
                    self.pos += 1;
                    let upper = if self.eat('^') {
                        true
                    } else if self.eat('_') {
                        false
                    } else {
                        return Err(self.err("eps needs ^{..} or _{..}"));
                    };
                    let ix = self.indices()?;
                    if ix.len() != 2 {
                        return Err(self.err("eps carries two indices"));
                    }
                    eps.push((upper, ix[0], ix[1]));
                }
                _ => break,
            }
        }
        let obj_follows = match self.peek() {
            Some(Tok::Sym('[')) | Some(Tok::Sym('(')) => true,
            Some(Tok::Ident(s)) => s != "sector",
            _ => false,
        };
        if !obj_follows {
            if coeff.is_zero() && eps.is_empty() {
                return Ok(None);
            }
            return Err(self.err("a term needs a field, definition or bracket"));
        }
        let obj = self.obj()?;
        Ok(Some(Term { coeff, eps, obj }))
    }

    fn pair(&mut self) -> Result<(Box<Expr>, Box<Expr>), BrstError> {
        self.expect('[')?;
        let a = self.expr()?;
        self.expect(',')?;
        let b = self.expr()?;
        self.expect(']')?;
        Ok((Box::new(a), Box::new(b)))
    }

    fn obj(&mut self) -> Result<Obj, BrstError> {
        if self.peek() == Some(&Tok::Sym('[')) {
            let (a, b) = self.pair()?;
            return Ok(Obj::Bracket(a, b));
        }
        if self.eat('(') {
            let e = self.expr()?;
            self.expect(')')?;
            return Ok(Obj::Paren(Box::new(e)));
        }
        let name = self.ident()?;
        match name.as_str() {
            "sd" => {
                let (a, b) = self.pair()?;
                Ok(Obj::Sd(a, b))
            }
            "cross" => {
                let (a, b) = self.pair()?;
                Ok(Obj::Cross(a, b))
            }
            "contract" => {
                let (a, b) = self.pair()?;
                Ok(Obj::Contract(a, b))
            }
            "dA" => Ok(Obj::DA(Box::new(self.obj()?))),
            _ if self.ops.contains(&name) => {
                self.pos -= 1;
                let op = self.op_ref()?;
                let def = self.ident()?;
                Ok(Obj::Apply(op, def))
            }
            _ => {
                let idx = if self.eat('^') { self.indices()? } else { Vec::new() };
                Ok(Obj::Name(name, idx))
            }
        }
    }
}

// ---------------------------------------------------------------- compiled form

/// A product of field components under nested brackets.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Field(usize),
    Bracket(Box<Node>, Box<Node>),
}

/// `coeff * node`, with `mask` recording which rule signs (and the gauge sign) it carries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinTerm {
    pub coeff: ExactComplex,
    pub mask: u64,
    pub node: Node,
}

pub type Lin = Vec<LinTerm>;

/// Merge equal (node, mask) pairs and drop zeros.
pub fn simplify(lin: Lin) -> Lin {
    let mut m: BTreeMap<(Node, u64), ExactComplex> = BTreeMap::new();
    for t in lin {
        let e = m.entry((t.node, t.mask)).or_insert_with(ExactComplex::zero);
        *e += &t.coeff;
    }
    m.into_iter().filter(|(_, c)| !c.is_zero()).map(|((node, mask), coeff)| LinTerm { coeff, mask, node }).collect()
}

pub fn scale_lin(lin: &Lin, c: &ExactComplex) -> Lin {
    lin.iter().map(|t| LinTerm { coeff: &t.coeff * c, mask: t.mask, node: t.node.clone() }).collect()
}

fn bracket_lin(a: &Lin, b: &Lin) -> Lin {
    let mut out = Vec::new();
    for x in a {
        for y in b {
            out.push(LinTerm {
                coeff: &x.coeff * &y.coeff,
                mask: x.mask ^ y.mask,
                node: Node::Bracket(Box::new(x.node.clone()), Box::new(y.node.clone())),
            });
        }
    }
    out
}

/// A component of a field multiplet.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Component {
    pub name: String,
    pub field: String,
    pub parity: Parity,
}

/// One elementary operator, e.g. `Q^1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasicOp(pub usize);

#[derive(Clone, Debug)]
pub struct RuleLine {
    pub line: usize,
    pub text: String,
}

/// An instantiated closure check: symmetrized `{op1, op2}` against a gauge variation.
#[derive(Clone, Debug)]
pub struct CheckSpec {
    pub name: String,
    pub label: String,
    pub op1: Vec<(ExactComplex, BasicOp)>,
    pub op2: Vec<(ExactComplex, BasicOp)>,
    pub gauge: GaugeSpec,
    pub fields: Vec<usize>,
}

#[derive(Clone, Debug)]
pub enum GaugeSpec {
    /// Gauge parameter fixed by the table; scalar-valued.
    Fixed { text: String, lambda: Lin },
    /// Gauge parameter fitted as a linear combination of candidates.
    Fit { names: Vec<String>, candidates: Vec<Lin> },
}

#[derive(Clone, Debug)]
pub struct CompiledTable {
    pub name: String,
    pub dim: usize,
    pub abelian: bool,
    pub coupling: ExactComplex,
    pub components: Vec<Component>,
    pub ops: Vec<String>,
    pub rules: BTreeMap<(BasicOp, usize), Lin>,
    pub rule_lines: Vec<RuleLine>,
    pub checks: Vec<CheckSpec>,
    fields: Vec<FieldDecl>,
    base: BTreeMap<(String, Vec<u8>), usize>,
    op_index: BTreeMap<(String, Option<u8>), BasicOp>,
    op_names: BTreeSet<String>,
    defs: BTreeMap<String, Val>,
}

#[derive(Clone, Debug)]
struct Val {
    shape: Option<Shape>,
    comps: Vec<Lin>,
}

impl Val {
    fn zero() -> Self {
        Val { shape: None, comps: Vec::new() }
    }
}

/// 't Hooft symbol eta^i_{mu nu} for the self-dual forms.
fn thooft(i: usize, mu: usize, nu: usize) -> i64 {
    match (mu, nu) {
        (3, 3) => 0,
        (m, 3) => (i == m) as i64,
        (3, n) => -((i == n) as i64),
        (m, n) => levi(i, m, n),
    }
}

fn levi(i: usize, j: usize, k: usize) -> i64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1,
        _ => 0,
    }
}

fn eps_value(a: u8, b: u8) -> i64 {
    match (a, b) {
        (1, 2) => 1,
        (2, 1) => -1,
        _ => 0,
    }
}

type Env = BTreeMap<char, u8>;

fn resolve(ix: Idx, env: &Env, line: usize) -> Result<u8, BrstError> {
    match ix {
        Idx::Fixed(v) => Ok(v),
        Idx::Var(c) => env.get(&c).copied().ok_or_else(|| perr(line, format!("index {c} is unbound"))),
    }
}

fn idx_vars_term(t: &Term, out: &mut BTreeSet<char>) {
    for (_, a, b) in &t.eps {
        for ix in [a, b] {
            if let Idx::Var(c) = ix {
                out.insert(*c);
            }
        }
    }
    idx_vars_obj(&t.obj, out);
}

fn idx_vars_expr(e: &Expr, out: &mut BTreeSet<char>) {
    let Expr::Sum(ts) = e;
    for t in ts {
        idx_vars_term(t, out);
    }
}

fn idx_vars_obj(o: &Obj, out: &mut BTreeSet<char>) {
    match o {
        Obj::Name(_, ix) => {
            for i in ix {
                if let Idx::Var(c) = i {
                    out.insert(*c);
                }
            }
        }
        Obj::Bracket(a, b) | Obj::Sd(a, b) | Obj::Cross(a, b) | Obj::Contract(a, b) => {
            idx_vars_expr(a, out);
            idx_vars_expr(b, out);
        }
        Obj::DA(x) => idx_vars_obj(x, out),
        Obj::Paren(e) => idx_vars_expr(e, out),
        Obj::Apply(op, _) => {
            if let Some(Idx::Var(c)) = op.index {
                out.insert(c);
            }
        }
    }
}

fn has_apply_expr(e: &Expr) -> bool {
    let Expr::Sum(ts) = e;
    ts.iter().any(|t| has_apply_obj(&t.obj))
}

fn has_apply_obj(o: &Obj) -> bool {
    match o {
        Obj::Apply(..) => true,
        Obj::Name(..) => false,
        Obj::Bracket(a, b) | Obj::Sd(a, b) | Obj::Cross(a, b) | Obj::Contract(a, b) => {
            has_apply_expr(a) || has_apply_expr(b)
        }
        Obj::DA(x) => has_apply_obj(x),
        Obj::Paren(e) => has_apply_expr(e),
    }
}

/// All assignments of 1, 2 to the given index letters.
fn assignments(vars: &[char]) -> Vec<Env> {
    let mut out = vec![Env::new()];
    for v in vars {
        out = out
            .into_iter()
            .flat_map(|e| {
                [1u8, 2].into_iter().map(move |k| {
                    let mut e = e.clone();
                    e.insert(*v, k);
                    e
                })
            })
            .collect();
    }
    out
}

fn r_index_sets(f: &FieldDecl) -> Vec<Vec<u8>> {
    match (f.r_indices, f.symmetric) {
        (0, _) => vec![vec![]],
        (1, _) => vec![vec![1], vec![2]],
        (2, true) => vec![vec![1, 1], vec![1, 2], vec![2, 2]],
        _ => vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]],
    }
}

fn canonical(f: &FieldDecl, ix: &[u8]) -> Vec<u8> {
    let mut v = ix.to_vec();
    if f.symmetric {
        v.sort();
    }
    v
}

impl CompiledTable {
    pub fn field_parity(&self, id: usize) -> Parity {
        self.components[id].parity
    }

    pub fn node_parity(&self, n: &Node) -> Parity {
        match n {
            Node::Field(id) => self.field_parity(*id),
            Node::Bracket(a, b) => self.node_parity(a).plus(self.node_parity(b)),
        }
    }

    pub fn basic_op(&self, name: &str) -> Option<BasicOp> {
        let (n, ix) = match name.split_once('^') {
            Some((n, i)) => (n, Some(i.parse::<u8>().ok()?)),
            None => (name, None),
        };
        self.op_index.get(&(n.to_string(), ix)).copied()
    }

    pub fn op_name(&self, op: BasicOp) -> &str {
        &self.ops[op.0]
    }

    /// Components belonging to the named fields.
    pub fn field_components(&self, names: &[String]) -> Result<Vec<usize>, BrstError> {
        for n in names {
            if !self.fields.iter().any(|f| &f.name == n) {
                return Err(BrstError::UnknownName(n.clone()));
            }
        }
        Ok((0..self.components.len()).filter(|&c| names.contains(&self.components[c].field)).collect())
    }

    /// Apply an elementary operator through the Leibniz rule.
    pub fn apply(&self, op: BasicOp, lin: &Lin) -> Result<Lin, BrstError> {
        let mut out = Vec::new();
        for t in lin {
            for u in self.apply_node(op, &t.node)? {
                out.push(LinTerm { coeff: &t.coeff * &u.coeff, mask: t.mask ^ u.mask, node: u.node });
            }
        }
        Ok(simplify(out))
    }

    fn apply_node(&self, op: BasicOp, n: &Node) -> Result<Lin, BrstError> {
        match n {
            Node::Field(id) => self.rules.get(&(op, *id)).cloned().ok_or_else(|| BrstError::RuleMissing {
                op: self.ops[op.0].clone(),
                field: self.components[*id].name.clone(),
            }),
            Node::Bracket(l, r) => {
                let ql = self.apply_node(op, l)?;
                let qr = self.apply_node(op, r)?;
                let lsign = if self.node_parity(l).is_odd() { -1 } else { 1 };
                let mut out =
                    bracket_lin(&ql, &vec![LinTerm { coeff: ExactComplex::one(), mask: 0, node: (**r).clone() }]);
                let left = vec![LinTerm { coeff: ExactComplex::from_int(lsign), mask: 0, node: (**l).clone() }];
                out.extend(bracket_lin(&left, &qr));
                Ok(out)
            }
        }
    }

    /// Apply a linear combination of elementary operators.
    pub fn apply_combo(&self, combo: &[(ExactComplex, BasicOp)], lin: &Lin) -> Result<Lin, BrstError> {
        let mut out = Vec::new();
        for (c, op) in combo {
            out.extend(scale_lin(&self.apply(*op, lin)?, c));
        }
        Ok(simplify(out))
    }

    fn basic(&self, op: &OpRef, env: &Env, line: usize) -> Result<BasicOp, BrstError> {
        let ix = op.index.map(|i| resolve(i, env, line)).transpose()?;
        self.op_index
            .get(&(op.name.clone(), ix))
            .copied()
            .ok_or_else(|| perr(line, format!("operator {} used with the wrong number of indices", op.name)))
    }

    fn expand_expr(&self, e: &Expr, env: &Env, line: usize) -> Result<Val, BrstError> {
        let Expr::Sum(terms) = e;
        let mut acc = Val::zero();
        for t in terms {
            let mut vars = BTreeSet::new();
            idx_vars_term(t, &mut vars);
            let dummies: Vec<char> = vars.into_iter().filter(|c| !env.contains_key(c)).collect();
            for extra in assignments(&dummies) {
                let mut env2 = env.clone();
                env2.extend(extra);
                let mut c = t.coeff.clone();
                for (_, a, b) in &t.eps {
                    c = &c * &ExactComplex::from_int(eps_value(resolve(*a, &env2, line)?, resolve(*b, &env2, line)?));
                }
                if c.is_zero() {
                    continue;
                }
                let v = self.expand_obj(&t.obj, &env2, line)?;
                acc = self.add_val(acc, v, &c, line)?;
            }
        }
        Ok(acc)
    }

    fn add_val(&self, acc: Val, v: Val, c: &ExactComplex, line: usize) -> Result<Val, BrstError> {
        let Some(shape) = v.shape else { return Ok(acc) };
        match acc.shape {
            None => Ok(Val { shape: Some(shape), comps: v.comps.iter().map(|l| scale_lin(l, c)).collect() }),
            Some(s) if s != shape => Err(perr(line, format!("adding a {s:?} to a {shape:?}"))),
            Some(s) => Ok(Val {
                shape: Some(s),
                comps: acc
                    .comps
                    .into_iter()
                    .zip(v.comps.iter())
                    .map(|(mut a, b)| {
                        a.extend(scale_lin(b, c));
                        simplify(a)
                    })
                    .collect(),
            }),
        }
    }

    fn two(&self, a: &Expr, b: &Expr, env: &Env, line: usize) -> Result<Option<(Val, Val)>, BrstError> {
        let x = self.expand_expr(a, env, line)?;
        let y = self.expand_expr(b, env, line)?;
        if x.shape.is_none() || y.shape.is_none() {
            return Ok(None);
        }
        Ok(Some((x, y)))
    }

    fn expand_obj(&self, o: &Obj, env: &Env, line: usize) -> Result<Val, BrstError> {
        match o {
            Obj::Paren(e) => self.expand_expr(e, env, line),
            Obj::Name(name, ix) => {
                if let Some(v) = self.defs.get(name) {
                    if !ix.is_empty() {
                        return Err(perr(line, format!("definition {name} takes no indices")));
                    }
                    return Ok(v.clone());
                }
                let f = self
                    .fields
                    .iter()
                    .find(|f| &f.name == name)
                    .ok_or_else(|| perr(line, format!("unknown field or definition {name:?}")))?;
                if ix.len() != f.r_indices as usize {
                    return Err(perr(line, format!("{name} carries {} indices, got {}", f.r_indices, ix.len())));
                }
                let vals = ix.iter().map(|i| resolve(*i, env, line)).collect::<Result<Vec<_>, _>>()?;
                let base = self.base[&(name.clone(), canonical(f, &vals))];
                let n = f.shape.components(self.dim);
                Ok(Val {
                    shape: Some(f.shape),
                    comps: (0..n)
                        .map(|k| vec![LinTerm { coeff: ExactComplex::one(), mask: 0, node: Node::Field(base + k) }])
                        .collect(),
                })
            }
            Obj::Bracket(a, b) => {
                let Some((x, y)) = self.two(a, b, env, line)? else { return Ok(Val::zero()) };
                let (sx, sy) = (x.shape.unwrap(), y.shape.unwrap());
                let comps = match (sx, sy) {
                    (Shape::Scalar, _) => y.comps.iter().map(|yc| bracket_lin(&x.comps[0], yc)).collect(),
                    (_, Shape::Scalar) => x.comps.iter().map(|xc| bracket_lin(xc, &y.comps[0])).collect(),
                    _ => return Err(perr(line, format!("bracket of {sx:?} with {sy:?}; use sd, cross or contract"))),
                };
                let shape = if sx == Shape::Scalar { sy } else { sx };
                Ok(Val { shape: Some(shape), comps })
            }
            Obj::DA(x) => {
                let v = self.expand_obj(x, env, line)?;
                match v.shape {
                    None => Ok(Val::zero()),
                    Some(Shape::Scalar) => {
                        let a = self.connection(line)?;
                        let comps = (0..self.dim)
                            .map(|mu| scale_lin(&bracket_lin(&a[mu], &v.comps[0]), &self.coupling))
                            .collect();
                        Ok(Val { shape: Some(Shape::Vector), comps })
                    }
                    Some(s) => Err(perr(line, format!("dA acts on scalars here, got {s:?}"))),
                }
            }
            Obj::Sd(a, b) => {
                let Some((x, y)) = self.two(a, b, env, line)? else { return Ok(Val::zero()) };
                self.need(line, &x, Shape::Vector)?;
                self.need(line, &y, Shape::Vector)?;
                self.need_dim4(line)?;
                let half = ExactComplex::from_ratio(1, 2);
                let comps = (0..3)
                    .map(|i| {
                        let mut l = Vec::new();
                        for mu in 0..4 {
                            for nu in 0..4 {
                                let e = thooft(i, mu, nu);
                                if e != 0 {
                                    l.extend(scale_lin(
                                        &bracket_lin(&x.comps[mu], &y.comps[nu]),
                                        &(&half * &ExactComplex::from_int(e)),
                                    ));
                                }
                            }
                        }
                        simplify(l)
                    })
                    .collect();
                Ok(Val { shape: Some(Shape::SelfDual), comps })
            }
            Obj::Cross(a, b) => {
                let Some((x, y)) = self.two(a, b, env, line)? else { return Ok(Val::zero()) };
                self.need(line, &x, Shape::SelfDual)?;
                self.need(line, &y, Shape::SelfDual)?;
                let comps = (0..3)
                    .map(|i| {
                        let mut l = Vec::new();
                        for j in 0..3 {
                            for k in 0..3 {
                                let e = levi(i, j, k);
                                if e != 0 {
                                    l.extend(scale_lin(
                                        &bracket_lin(&x.comps[j], &y.comps[k]),
                                        &ExactComplex::from_int(e),
                                    ));
                                }
                            }
                        }
                        simplify(l)
                    })
                    .collect();
                Ok(Val { shape: Some(Shape::SelfDual), comps })
            }
            Obj::Contract(a, b) => {
                let Some((x, y)) = self.two(a, b, env, line)? else { return Ok(Val::zero()) };
                self.need(line, &x, Shape::Vector)?;
                self.need(line, &y, Shape::SelfDual)?;
                self.need_dim4(line)?;
                let comps = (0..4)
                    .map(|mu| {
                        let mut l = Vec::new();
                        for nu in 0..4 {
                            for i in 0..3 {
                                let e = thooft(i, mu, nu);
                                if e != 0 {
                                    l.extend(scale_lin(
                                        &bracket_lin(&x.comps[nu], &y.comps[i]),
                                        &ExactComplex::from_int(e),
                                    ));
                                }
                            }
                        }
                        simplify(l)
                    })
                    .collect();
                Ok(Val { shape: Some(Shape::Vector), comps })
            }
            Obj::Apply(op, def) => {
                let v = self.defs.get(def).ok_or_else(|| perr(line, format!("{def:?} is not a definition")))?.clone();
                let bop = self.basic(op, env, line)?;
                let comps = v.comps.iter().map(|l| self.apply(bop, l)).collect::<Result<Vec<_>, _>>()?;
                Ok(Val { shape: v.shape, comps })
            }
        }
    }

    fn need(&self, line: usize, v: &Val, s: Shape) -> Result<(), BrstError> {
        if v.shape == Some(s) {
            Ok(())
        } else {
            Err(perr(line, format!("expected a {s:?}, got {:?}", v.shape)))
        }
    }

    fn need_dim4(&self, line: usize) -> Result<(), BrstError> {
        if self.dim == 4 {
            Ok(())
        } else {
            Err(perr(line, "self-dual forms need dim 4"))
        }
    }

    fn connection(&self, line: usize) -> Result<Vec<Lin>, BrstError> {
        let f = self
            .fields
            .iter()
            .find(|f| f.name == "A" && f.shape == Shape::Vector && f.r_indices == 0)
            .ok_or_else(|| perr(line, "dA needs a vector field A"))?;
        let base = self.base[&(f.name.clone(), vec![])];
        Ok((0..self.dim)
            .map(|k| vec![LinTerm { coeff: ExactComplex::one(), mask: 0, node: Node::Field(base + k) }])
            .collect())
    }

    /// Compile a scalar expression, e.g. a gauge parameter.
    pub fn scalar_expr(&self, text: &str) -> Result<Lin, BrstError> {
        let toks = tokenize(text, 0)?;
        let mut p = Parser { toks, pos: 0, line: 0, ops: &self.op_names };
        let e = p.expr()?;
        if !p.at_end() {
            return Err(perr(0, format!("trailing input in {text:?}")));
        }
        self.scalar_val(&e, &Env::new(), 0)
    }

    fn scalar_val(&self, e: &Expr, env: &Env, line: usize) -> Result<Lin, BrstError> {
        let v = self.expand_expr(e, env, line)?;
        match v.shape {
            None => Ok(Vec::new()),
            Some(Shape::Scalar) => Ok(v.comps[0].clone()),
            Some(s) => Err(perr(line, format!("gauge parameters are scalars, got {s:?}"))),
        }
    }
}

/// `c name`, written `name` and `-name` for c = 1, -1.
pub fn scaled_text(c: &ExactComplex, name: &str) -> String {
    if c.is_one() {
        name.to_string()
    } else if (-c.clone()).is_one() {
        format!("-{name}")
    } else {
        format!("{c} {name}")
    }
}

/// Parse and compile a table.
pub fn compile(src: &str) -> Result<CompiledTable, BrstError> {
    let mut name = String::from("table");
    let mut dim = 4usize;
    let mut abelian = false;
    let mut coupling = ExactComplex::one();
    let mut fields: Vec<FieldDecl> = Vec::new();
    let mut op_decls: Vec<(String, bool)> = Vec::new();
    let mut op_names = BTreeSet::new();
    let mut def_src: Vec<(usize, String, Vec<Tok>)> = Vec::new();
    let mut rule_src: Vec<(usize, String, Vec<Tok>)> = Vec::new();
    let mut check_src: Vec<(usize, Vec<Tok>)> = Vec::new();

    for (k, raw) in src.lines().enumerate() {
        let line = k + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let (kw, rest) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
        let rest = rest.trim();
        let words: Vec<&str> = rest.split_whitespace().collect();
        match kw {
            "table" => name = rest.to_string(),
            "dim" => {
                dim = match rest {
                    "3" => 3,
                    "4" => 4,
                    _ => return Err(perr(line, "dim is 3 or 4")),
                }
            }
            "mode" => {
                abelian = match rest {
                    "abelian" => true,
                    "nonabelian" => false,
                    _ => return Err(perr(line, "mode is abelian or nonabelian")),
                }
            }
            "coupling" => coupling = rest.parse().map_err(|e: String| perr(line, e))?,
            "field" => {
                if words.len() < 3 {
                    return Err(perr(line, "field <name> <even|odd> <scalar|vector|selfdual> [idx N] [sym]"));
                }
                let parity = match words[1] {
                    "even" => Parity::Even,
                    "odd" => Parity::Odd,
                    w => return Err(perr(line, format!("parity {w:?}"))),
                };
                let shape = match words[2] {
                    "scalar" => Shape::Scalar,
                    "vector" => Shape::Vector,
                    "selfdual" => Shape::SelfDual,
                    w => return Err(perr(line, format!("shape {w:?}"))),
                };
                let mut r_indices = 0;
                let mut symmetric = false;
                let mut k = 3;
                while k < words.len() {
                    match words[k] {
                        "idx" => {
                            r_indices = words
                                .get(k + 1)
                                .and_then(|w| w.parse().ok())
                                .filter(|n| *n <= 2)
                                .ok_or_else(|| perr(line, "idx takes 0, 1 or 2"))?;
                            k += 2;
                        }
                        "sym" => {
                            symmetric = true;
                            k += 1;
                        }
                        w => return Err(perr(line, format!("unexpected {w:?}"))),
                    }
                }
                if symmetric && r_indices != 2 {
                    return Err(perr(line, "sym needs two indices"));
                }
                if fields.iter().any(|f| f.name == words[0]) {
                    return Err(perr(line, format!("field {} declared twice", words[0])));
                }
                fields.push(FieldDecl { name: words[0].into(), parity, shape, r_indices, symmetric });
            }
            "op" => {
                let indexed = match words.get(1) {
                    None => false,
                    Some(&"idx") => true,
                    Some(w) => return Err(perr(line, format!("unexpected {w:?}"))),
                };
                let n = words.first().ok_or_else(|| perr(line, "op needs a name"))?.to_string();
                op_names.insert(n.clone());
                op_decls.push((n, indexed));
            }
            "def" => {
                let (n, e) = rest.split_once('=').ok_or_else(|| perr(line, "def <name> = <expr>"))?;
                def_src.push((line, n.trim().into(), tokenize(e, line)?));
            }
            "rule" => rule_src.push((line, text.into(), tokenize(rest, line)?)),
            "check" => check_src.push((line, tokenize(rest, line)?)),
            _ => return Err(perr(line, format!("unknown directive {kw:?}"))),
        }
    }

    let mut ct = CompiledTable {
        name,
        dim,
        abelian,
        coupling,
        components: Vec::new(),
        ops: Vec::new(),
        rules: BTreeMap::new(),
        rule_lines: Vec::new(),
        checks: Vec::new(),
        fields: fields.clone(),
        base: BTreeMap::new(),
        op_index: BTreeMap::new(),
        op_names: op_names.clone(),
        defs: BTreeMap::new(),
    };
    for f in &fields {
        for ix in r_index_sets(f) {
            ct.base.insert((f.name.clone(), ix.clone()), ct.components.len());
            let n = f.shape.components(dim);
            for k in 0..n {
                let mut label = f.name.clone();
                if !ix.is_empty() {
                    label += &format!("^{{{}}}", ix.iter().map(|d| d.to_string()).collect::<String>());
                }
                if f.shape != Shape::Scalar {
                    label += &format!("_{}", k + 1);
                }
                ct.components.push(Component { name: label, field: f.name.clone(), parity: f.parity });
            }
        }
    }
    for (n, indexed) in &op_decls {
        let ixs: Vec<Option<u8>> = if *indexed { vec![Some(1), Some(2)] } else { vec![None] };
        for ix in ixs {
            ct.op_index.insert((n.clone(), ix), BasicOp(ct.ops.len()));
            ct.ops.push(match ix {
                Some(i) => format!("{n}^{i}"),
                None => n.clone(),
            });
        }
    }

    // Parse rules first so definitions may refer to their operators.
    let mut rules = Vec::new();
    for (line, text, toks) in rule_src {
        let mut p = Parser { toks, pos: 0, line, ops: &op_names };
        let op = p.op_ref()?;
        let field = p.ident()?;
        let indices = if p.eat('^') { p.indices()? } else { Vec::new() };
        p.expect('=')?;
        let expr = p.expr()?;
        if !p.at_end() {
            return Err(perr(line, format!("trailing input near {:?}", p.peek())));
        }
        ct.rule_lines.push(RuleLine { line, text });
        rules.push(RuleDecl { line, op, field, indices, expr });
    }
    if rules.len() > MAX_RULES {
        return Err(BrstError::TooManyRules(rules.len()));
    }

    let mut defs = Vec::new();
    for (line, n, toks) in def_src {
        let mut p = Parser { toks, pos: 0, line, ops: &op_names };
        let e = p.expr()?;
        if !p.at_end() {
            return Err(perr(line, format!("trailing input near {:?}", p.peek())));
        }
        defs.push((line, n, e));
    }
    // Definitions that apply operators must wait for the rules they use.
    for (line, n, e) in defs.iter().filter(|d| !has_apply_expr(&d.2)) {
        let v = ct.expand_expr(e, &Env::new(), *line)?;
        ct.defs.insert(n.clone(), v);
    }

    let (plain, deferred): (Vec<_>, Vec<_>) = rules.iter().enumerate().partition(|(_, r)| !has_apply_expr(&r.expr));
    for (id, r) in plain.into_iter().chain(deferred) {
        ct.compile_rule(id, r, &fields)?;
    }
    for (line, n, e) in defs.iter().filter(|d| has_apply_expr(&d.2)) {
        let v = ct.expand_expr(e, &Env::new(), *line)?;
        ct.defs.insert(n.clone(), v);
    }

    for (line, toks) in check_src {
        let decl = parse_check(line, toks, &op_names)?;
        ct.compile_check(&decl)?;
    }
    Ok(ct)
}

fn parse_check(line: usize, toks: Vec<Tok>, ops: &BTreeSet<String>) -> Result<CheckDecl, BrstError> {
    let mut p = Parser { toks, pos: 0, line, ops };
    let name = p.ident()?;
    let op1 = p.op_ref()?;
    let op2 = p.op_ref()?;
    let gauge = match p.ident()?.as_str() {
        "fixed" => GaugeDecl::Fixed(p.expr()?),
        "fit" => {
            let mut v = vec![p.expr()?];
            while p.eat(',') {
                v.push(p.expr()?);
            }
            GaugeDecl::Fit(v)
        }
        w => return Err(perr(line, format!("expected fixed or fit, got {w:?}"))),
    };
    let sector = if p.peek_ident("sector") {
        p.pos += 1;
        let mut v = vec![p.ident()?];
        while p.eat(',') {
            v.push(p.ident()?);
        }
        Some(v)
    } else {
        None
    };
    if !p.at_end() {
        return Err(perr(line, format!("trailing input near {:?}", p.peek())));
    }
    Ok(CheckDecl { line, name, ops: [op1, op2], gauge, sector })
}

impl CompiledTable {
    fn compile_rule(&mut self, id: usize, r: &RuleDecl, fields: &[FieldDecl]) -> Result<(), BrstError> {
        let line = r.line;
        let f = fields
            .iter()
            .find(|f| f.name == r.field)
            .ok_or_else(|| perr(line, format!("unknown field {:?}", r.field)))?;
        if r.indices.len() != f.r_indices as usize {
            return Err(perr(line, format!("{} carries {} indices", f.name, f.r_indices)));
        }
        let mut free = BTreeSet::new();
        if let Some(Idx::Var(c)) = r.op.index {
            free.insert(c);
        }
        for i in &r.indices {
            if let Idx::Var(c) = i {
                free.insert(*c);
            }
        }
        let free: Vec<char> = free.into_iter().collect();
        let bit = 1u64 << id;
        let mut sym_pending = Vec::new();
        for env in assignments(&free) {
            let op = self.basic(&r.op, &env, line)?;
            let ix = r.indices.iter().map(|i| resolve(*i, &env, line)).collect::<Result<Vec<_>, _>>()?;
            let v = self.expand_expr(&r.expr, &env, line)?;
            if let Some(s) = v.shape {
                if s != f.shape {
                    return Err(perr(line, format!("{} is a {:?} but the rule gives a {s:?}", f.name, f.shape)));
                }
            }
            let n = f.shape.components(self.dim);
            let base = self.base[&(f.name.clone(), canonical(f, &ix))];
            let comps: Vec<Lin> = (0..n)
                .map(|k| {
                    let l = v.comps.get(k).cloned().unwrap_or_default();
                    l.into_iter().map(|t| LinTerm { mask: t.mask ^ bit, ..t }).collect()
                })
                .collect();
            for (k, l) in comps.iter().enumerate() {
                for t in l {
                    if self.node_parity(&t.node) == f.parity {
                        return Err(BrstError::Parity(format!(
                            "line {line}: {} of {} keeps the parity of the field",
                            self.ops[op.0],
                            self.components[base + k].name
                        )));
                    }
                }
            }
            if canonical(f, &ix) != ix {
                sym_pending.push((op, base, comps));
                continue;
            }
            for (k, l) in comps.into_iter().enumerate() {
                if self.rules.insert((op, base + k), l).is_some() {
                    return Err(perr(
                        line,
                        format!("second rule for {} on {}", self.ops[op.0], self.components[base + k].name),
                    ));
                }
            }
        }
        for (op, base, comps) in sym_pending {
            for (k, l) in comps.into_iter().enumerate() {
                if self.rules.get(&(op, base + k)) != Some(&l) {
                    return Err(perr(
                        line,
                        format!("rule is not symmetric in the indices of {}", self.components[base + k].name),
                    ));
                }
            }
        }
        Ok(())
    }

    fn compile_check(&mut self, d: &CheckDecl) -> Result<(), BrstError> {
        let line = d.line;
        let mut vars = BTreeSet::new();
        for op in &d.ops {
            if let Some(Idx::Var(c)) = op.index {
                vars.insert(c);
            }
        }
        let vars: Vec<char> = vars.into_iter().collect();
        let fields = match &d.sector {
            Some(names) => self.field_components(names)?,
            None => (0..self.components.len()).collect(),
        };
        let mut seen = BTreeSet::new();
        for env in assignments(&vars) {
            let a = self.basic(&d.ops[0], &env, line)?;
            let b = self.basic(&d.ops[1], &env, line)?;
            // symmetrized, so {a, b} and {b, a} coincide
            if !seen.insert((a.min(b), a.max(b))) {
                continue;
            }
            let gauge = match &d.gauge {
                GaugeDecl::Fixed(e) => {
                    let lambda = self.scalar_val(e, &env, line)?;
                    GaugeSpec::Fixed { text: self.lin_text(&lambda), lambda }
                }
                GaugeDecl::Fit(es) => {
                    let candidates =
                        es.iter().map(|e| self.scalar_val(e, &env, line)).collect::<Result<Vec<_>, _>>()?;
                    GaugeSpec::Fit { names: candidates.iter().map(|l| self.lin_text(l)).collect(), candidates }
                }
            };
            self.checks.push(CheckSpec {
                name: d.name.clone(),
                label: format!("{{{}, {}}}", self.ops[a.0], self.ops[b.0]),
                op1: vec![(ExactComplex::one(), a)],
                op2: vec![(ExactComplex::one(), b)],
                gauge,
                fields: fields.clone(),
            });
        }
        Ok(())
    }

    fn node_text(&self, n: &Node) -> String {
        match n {
            Node::Field(id) => self.components[*id].name.clone(),
            Node::Bracket(a, b) => format!("[{}, {}]", self.node_text(a), self.node_text(b)),
        }
    }

    /// Readable form of a compiled expression.
    pub fn lin_text(&self, l: &Lin) -> String {
        if l.is_empty() {
            return "0".into();
        }
        l.iter().map(|t| scaled_text(&t.coeff, &self.node_text(&t.node))).collect::<Vec<_>>().join(" + ")
    }

    /// Single-component expression for a field component.
    pub fn component_lin(&self, id: usize) -> Lin {
        vec![LinTerm { coeff: ExactComplex::one(), mask: 0, node: Node::Field(id) }]
    }

    pub fn component_id(&self, name: &str) -> Option<usize> {
        self.components.iter().position(|c| c.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "
table toy
dim 4
coupling i
field A even vector
field phi even scalar
field phibar even scalar
field eta odd scalar
field psi odd vector
op Q
rule Q A = psi
rule Q psi = dA phi
rule Q phi = 0
rule Q phibar = eta
rule Q eta = i [phibar, phi]
check Q2 Q Q fixed phi
";

    #[test]
    fn components_and_rules() {
        let t = compile(TOY).unwrap();
        assert_eq!(t.components.len(), 4 + 1 + 1 + 1 + 4);
        assert_eq!(t.components[0].name, "A_1");
        let q = t.basic_op("Q").unwrap();
        let eta = t.component_id("eta").unwrap();
        assert_eq!(t.lin_text(&t.rules[&(q, eta)]), "i [phibar, phi]");
        let phi = t.component_id("phi").unwrap();
        assert!(t.rules[&(q, phi)].is_empty());
        assert_eq!(t.checks.len(), 1);
    }

    #[test]
    fn leibniz_and_masks() {
        let t = compile(TOY).unwrap();
        let q = t.basic_op("Q").unwrap();
        let eta = t.component_id("eta").unwrap();
        let qq = t.apply(q, &t.rules[&(q, eta)]).unwrap();
        // Q(i [phibar, phi]) = i [eta, phi]
        assert_eq!(t.lin_text(&qq), "i [eta, phi]");
        // masks: eta rule (id 4) and phibar rule (id 3)
        assert_eq!(qq[0].mask, (1 << 4) | (1 << 3));
    }

    #[test]
    fn parse_errors_carry_lines() {
        let bad = "field phi even scalar\nop Q\nrule Q phi = [phi,\n";
        match compile(bad) {
            Err(BrstError::Parse { line, .. }) => assert_eq!(line, 3),
            r => panic!("{r:?}"),
        }
        let parity = "field phi even scalar\nop Q\nrule Q phi = phi\n";
        assert!(matches!(compile(parity), Err(BrstError::Parity(_))));
    }

    #[test]
    fn index_sums_and_symmetry() {
        let src = "
field phi even scalar idx 2 sym
field eta odd scalar idx 1
op Q idx
rule Q^a phi^{bc} = 1/2 eps^{ab} eta^c + 1/2 eps^{ac} eta^b
rule Q^a eta^b = - eps_{cd} [phi^{ac}, phi^{bd}]
";
        let t = compile(src).unwrap();
        let q1 = t.basic_op("Q^1").unwrap();
        let p22 = t.component_id("phi^{22}").unwrap();
        assert_eq!(t.lin_text(&t.rules[&(q1, p22)]), "eta^{2}");
        let e2 = t.component_id("eta^{2}").unwrap();
        // -([phi^11, phi^22] - [phi^12, phi^12])
        assert_eq!(t.lin_text(&t.rules[&(q1, e2)]), "-[phi^{11}, phi^{22}] + [phi^{12}, phi^{12}]");
        let asym = src.replace("1/2 eps^{ac} eta^b", "eps^{ac} eta^b");
        assert!(compile(&asym).is_err());
    }
}
