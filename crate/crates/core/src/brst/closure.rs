//! Closure checks {Q1, Q2} = gauge on seeded random constant field configurations.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grassmann::{GrassmannElement, Mask, Parity, Su2, MAX_GENERATORS};
use super::table::{BasicOp, CheckSpec, CompiledTable, GaugeSpec, Lin, LinTerm, Node, SIGMA_BIT};
use super::BrstError;
use crate::series::ExactComplex;

pub const DEFAULT_STATES: usize = 10;
/// Sign searches stay exhaustive up to this many toggles.
pub const EXHAUSTIVE_TOGGLES: usize = 16;
const SEARCH_STATES: usize = 3;

/// Values of every field component.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldState {
    pub values: Vec<GrassmannElement>,
}

fn small_rational(rng: &mut ChaCha8Rng) -> ExactComplex {
    let mut n = 0;
    while n == 0 {
        n = rng.gen_range(-9i64..=9);
    }
    ExactComplex::from_ratio(n, rng.gen_range(1i64..=5))
}

fn random_su2(rng: &mut ChaCha8Rng) -> Su2 {
    [small_rational(rng), small_rational(rng), small_rational(rng)]
}

/// `count` states; the k-th odd component uses generators 2k and 2k + 1.
pub fn random_states(t: &CompiledTable, seed: u64, count: usize) -> Result<Vec<FieldState>, BrstError> {
    let odd = t.components.iter().filter(|c| c.parity == Parity::Odd).count() as u32;
    if 2 * odd > MAX_GENERATORS {
        return Err(BrstError::GeneratorBudget(2 * odd));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut k = 0u32;
        let mut values = Vec::with_capacity(t.components.len());
        for c in &t.components {
            let v = match c.parity {
                Parity::Even => GrassmannElement::from_terms(Parity::Even, [(0, random_su2(&mut rng))])?,
                Parity::Odd => {
                    let gens: [Mask; 2] = [1 << (2 * k), 1 << (2 * k + 1)];
                    k += 1;
                    GrassmannElement::from_terms(Parity::Odd, gens.map(|m| (m, random_su2(&mut rng))))?
                }
            };
            values.push(v);
        }
        out.push(FieldState { values });
    }
    Ok(out)
}

struct Evaluator<'a> {
    t: &'a CompiledTable,
    state: &'a FieldState,
    memo: HashMap<Node, GrassmannElement>,
}

impl<'a> Evaluator<'a> {
    fn new(t: &'a CompiledTable, state: &'a FieldState) -> Self {
        Evaluator { t, state, memo: HashMap::new() }
    }

    fn node(&mut self, n: &Node) -> GrassmannElement {
        match n {
            Node::Field(id) => self.state.values[*id].clone(),
            Node::Bracket(a, b) => {
                if let Some(v) = self.memo.get(n) {
                    return v.clone();
                }
                let x = self.node(a);
                let y = self.node(b);
                let v = x.bracket(&y, self.t.abelian);
                self.memo.insert(n.clone(), v.clone());
                v
            }
        }
    }

    /// Sum of coefficient * value grouped by toggle mask.
    fn grouped(&mut self, l: &Lin, parity: Parity) -> BTreeMap<u64, GrassmannElement> {
        let mut out: BTreeMap<u64, GrassmannElement> = BTreeMap::new();
        for t in l {
            let v = self.node(&t.node).scale(&t.coeff);
            let e = out.entry(t.mask).or_insert_with(|| GrassmannElement::zero(parity));
            *e = e.add(&v);
        }
        out.retain(|_, v| !v.is_zero());
        out
    }

    fn lin(&mut self, l: &Lin, flips: u64, parity: Parity) -> GrassmannElement {
        signed_sum(&self.grouped(l, parity), flips, parity)
    }
}

fn signed_sum(groups: &BTreeMap<u64, GrassmannElement>, flips: u64, parity: Parity) -> GrassmannElement {
    let mut acc = GrassmannElement::zero(parity);
    for (m, v) in groups {
        acc = if (m & flips).count_ones() % 2 == 1 { acc.sub(v) } else { acc.add(v) };
    }
    acc
}

/// Images of every component under one operator, with the given rule signs flipped.
pub fn apply_q(t: &CompiledTable, state: &FieldState, op: BasicOp, flips: u64) -> Result<FieldState, BrstError> {
    let mut ev = Evaluator::new(t, state);
    let mut values = Vec::with_capacity(t.components.len());
    for id in 0..t.components.len() {
        let l = t
            .rules
            .get(&(op, id))
            .ok_or_else(|| BrstError::RuleMissing { op: t.op_name(op).into(), field: t.components[id].name.clone() })?;
        values.push(ev.lin(l, flips, t.field_parity(id).flip()));
    }
    Ok(FieldState { values })
}

/// delta X = sigma i [X, Lambda] on every component.
pub fn gauge_variation(t: &CompiledTable, state: &FieldState, lambda: &Lin, sigma: i64) -> FieldState {
    let mut ev = Evaluator::new(t, state);
    let lam = ev.lin(lambda, 0, Parity::Even);
    let c = &ExactComplex::i() * &ExactComplex::from_int(sigma);
    let values = state.values.iter().map(|x| x.bracket(&lam, t.abelian).scale(&c)).collect();
    FieldState { values }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckOptions {
    pub seed: u64,
    pub states: usize,
    /// Search rule-sign conventions when the table as written does not close.
    pub calibrate: bool,
}

impl CheckOptions {
    pub fn new(seed: u64) -> Self {
        CheckOptions { seed, states: DEFAULT_STATES, calibrate: true }
    }
}

/// Sign convention applied to the table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convention {
    /// Line numbers of rules whose right-hand side was negated.
    pub flipped_rules: Vec<usize>,
    /// Sign sigma of delta X = sigma i [X, Lambda].
    pub gauge_sign: i64,
    /// Whether a search over conventions ran, and how many were tried.
    pub searched: bool,
    pub tried: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailingComponent {
    pub component: String,
    pub max_abs: f64,
    /// Rule lines entering this component's closure: the candidates for a typo.
    pub rule_lines: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosureReport {
    pub table: String,
    pub check: String,
    pub operators: String,
    pub seed: u64,
    pub states: usize,
    pub components_checked: usize,
    pub convention: Convention,
    pub gauge_parameter: String,
    pub max_residual: f64,
    pub closed: bool,
    pub failing: Vec<FailingComponent>,
    pub missing_rules: Vec<String>,
}

/// Evaluated pieces of one check on one state, per component.
struct Prepared {
    fields: Vec<usize>,
    parities: Vec<Parity>,
    /// per state, per field: closure groups by mask
    closure: Vec<Vec<BTreeMap<u64, GrassmannElement>>>,
    /// per state, per field: fixed-gauge groups by mask
    fixed: Vec<Vec<BTreeMap<u64, GrassmannElement>>>,
    /// per state, per field, per candidate: i [X, candidate]
    fit: Vec<Vec<Vec<GrassmannElement>>>,
    masks: Vec<u64>,
}

struct Outcome {
    mu: Vec<ExactComplex>,
    failing: Vec<(usize, f64)>,
    total: f64,
}

impl Outcome {
    fn score(&self) -> (usize, f64) {
        (self.failing.len(), self.total)
    }

    fn better_than(&self, o: &Outcome) -> bool {
        let (a, b) = (self.score(), o.score());
        a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
    }
}

fn closure_lin(t: &CompiledTable, spec: &CheckSpec, id: usize) -> Result<Lin, BrstError> {
    let x = t.component_lin(id);
    let ab = t.apply_combo(&spec.op1, &t.apply_combo(&spec.op2, &x)?)?;
    if spec.op1 == spec.op2 {
        return Ok(ab);
    }
    let ba = t.apply_combo(&spec.op2, &t.apply_combo(&spec.op1, &x)?)?;
    let half = ExactComplex::from_ratio(1, 2);
    let mut out: Lin = ab.into_iter().chain(ba).collect();
    for term in out.iter_mut() {
        term.coeff = &term.coeff * &half;
    }
    Ok(super::table::simplify(out))
}

fn prepare(
    t: &CompiledTable,
    spec: &CheckSpec,
    states: &[FieldState],
    missing: &mut BTreeSet<String>,
) -> Result<(Prepared, BTreeMap<usize, u64>), BrstError> {
    let mut fields = Vec::new();
    let mut lins = Vec::new();
    let mut used: BTreeMap<usize, u64> = BTreeMap::new();
    for &id in &spec.fields {
        match closure_lin(t, spec, id) {
            Ok(l) => {
                used.insert(id, l.iter().fold(0, |m, t| m | t.mask));
                fields.push(id);
                lins.push(l);
            }
            Err(BrstError::RuleMissing { op, field }) => {
                missing.insert(format!("{op} on {field}"));
            }
            Err(e) => return Err(e),
        }
    }
    let mut masks = BTreeSet::new();
    let parities = fields.iter().map(|&id| t.field_parity(id)).collect();
    let mut p = Prepared {
        fields: fields.clone(),
        parities,
        closure: Vec::new(),
        fixed: Vec::new(),
        fit: Vec::new(),
        masks: Vec::new(),
    };
    for st in states {
        let mut ev = Evaluator::new(t, st);
        let mut cl = Vec::new();
        let mut fx = Vec::new();
        let mut ft = Vec::new();
        for (&id, l) in fields.iter().zip(&lins) {
            let parity = t.field_parity(id);
            let g = ev.grouped(l, parity);
            masks.extend(g.keys().copied());
            cl.push(g);
            let x = t.component_lin(id);
            match &spec.gauge {
                GaugeSpec::Fixed { lambda, .. } => {
                    let gl = gauge_lin(&x, lambda);
                    fx.push(ev.grouped(&gl, parity));
                    ft.push(Vec::new());
                }
                GaugeSpec::Fit { candidates, .. } => {
                    fx.push(BTreeMap::new());
                    ft.push(candidates.iter().map(|c| ev.lin(&gauge_lin(&x, c), 0, parity)).collect());
                }
            }
        }
        p.closure.push(cl);
        p.fixed.push(fx);
        p.fit.push(ft);
    }
    if matches!(spec.gauge, GaugeSpec::Fixed { .. }) && p.fixed.iter().flatten().any(|g| !g.is_empty()) {
        masks.insert(SIGMA_BIT);
    }
    p.masks = masks.into_iter().collect();
    Ok((p, used))
}

/// i [X, Lambda] carrying the gauge sign toggle.
fn gauge_lin(x: &Lin, lambda: &Lin) -> Lin {
    let mut out = Vec::new();
    for a in x {
        for b in lambda {
            out.push(LinTerm {
                coeff: &(&a.coeff * &b.coeff) * &ExactComplex::i(),
                mask: SIGMA_BIT,
                node: Node::Bracket(Box::new(a.node.clone()), Box::new(b.node.clone())),
            });
        }
    }
    out
}

/// Exact least-squares-free fit: solve the consistent part by elimination.
fn solve_mu(rows: impl Iterator<Item = (Vec<ExactComplex>, ExactComplex)>, k: usize) -> Vec<ExactComplex> {
    let mut basis: Vec<(usize, Vec<ExactComplex>, ExactComplex)> = Vec::new();
    for (mut row, mut rhs) in rows {
        if basis.len() == k {
            break;
        }
        for (p, b, r) in &basis {
            let f = row[*p].clone();
            if f.is_zero() {
                continue;
            }
            for j in 0..k {
                row[j] = &row[j] - &(&f * &b[j]);
            }
            rhs = &rhs - &(&f * r);
        }
        let Some(p) = (0..k).find(|&j| !row[j].is_zero()) else { continue };
        let inv = row[p].inv().expect("nonzero pivot");
        for v in row.iter_mut() {
            *v = &*v * &inv;
        }
        rhs = &rhs * &inv;
        for (_, b, r) in basis.iter_mut() {
            let f = b[p].clone();
            if f.is_zero() {
                continue;
            }
            for j in 0..k {
                b[j] = &b[j] - &(&f * &row[j]);
            }
            *r = &*r - &(&f * &rhs);
        }
        basis.push((p, row, rhs));
    }
    let mut mu = vec![ExactComplex::zero(); k];
    for (p, _, r) in basis {
        mu[p] = r;
    }
    mu
}

fn evaluate(p: &Prepared, spec: &CheckSpec, flips: u64, nstates: usize) -> Outcome {
    let k = match &spec.gauge {
        GaugeSpec::Fit { candidates, .. } => candidates.len(),
        GaugeSpec::Fixed { .. } => 0,
    };
    let nstates = nstates.min(p.closure.len());
    // closure values minus fixed gauge, per state and field
    let mut base: Vec<Vec<GrassmannElement>> = Vec::new();
    for s in 0..nstates {
        let mut row = Vec::new();
        for (f, &parity) in p.parities.iter().enumerate() {
            let c = signed_sum(&p.closure[s][f], flips, parity);
            let g = signed_sum(&p.fixed[s][f], flips, parity);
            row.push(c.sub(&g));
        }
        base.push(row);
    }
    let mu = if k == 0 {
        Vec::new()
    } else {
        let mut rows = Vec::new();
        for s in 0..nstates {
            for f in 0..p.fields.len() {
                let mut keys: BTreeMap<(Mask, usize), (Vec<ExactComplex>, ExactComplex)> = BTreeMap::new();
                for (key, c) in base[s][f].entries() {
                    keys.entry(key).or_insert_with(|| (vec![ExactComplex::zero(); k], ExactComplex::zero())).1 =
                        c.clone();
                }
                for (j, g) in p.fit[s][f].iter().enumerate() {
                    for (key, c) in g.entries() {
                        keys.entry(key).or_insert_with(|| (vec![ExactComplex::zero(); k], ExactComplex::zero())).0[j] =
                            c.clone();
                    }
                }
                rows.extend(keys.into_values());
            }
        }
        solve_mu(rows.into_iter(), k)
    };
    let mut worst: BTreeMap<usize, f64> = BTreeMap::new();
    let mut total = 0.0;
    for (s, row) in base.iter().enumerate() {
        for (f, v) in row.iter().enumerate() {
            let mut r = v.clone();
            for (j, m) in mu.iter().enumerate() {
                if !m.is_zero() {
                    r = r.sub(&p.fit[s][f][j].scale(m));
                }
            }
            if !r.is_zero() {
                let a = r.max_abs();
                total += a;
                let e = worst.entry(f).or_insert(0.0);
                *e = e.max(a);
            }
        }
    }
    Outcome { mu, failing: worst.into_iter().collect(), total }
}

fn bits(m: u64) -> impl Iterator<Item = u64> {
    (0..64).map(|b| 1u64 << b).filter(move |b| m & b != 0)
}

/// Search rule-sign conventions: exhaustive for few toggles, greedy single and pair flips otherwise.
fn search(p: &Prepared, spec: &CheckSpec, start: u64) -> (u64, u64) {
    let toggles: Vec<u64> = bits(p.masks.iter().fold(0, |a, m| a | m)).collect();
    let mut best = start;
    let mut best_out = evaluate(p, spec, start, SEARCH_STATES);
    let mut tried = 1u64;
    if best_out.failing.is_empty() {
        return (best, tried);
    }
    if toggles.len() <= EXHAUSTIVE_TOGGLES {
        for sub in 1u64..(1 << toggles.len()) {
            let flips = toggles.iter().enumerate().filter(|(j, _)| sub >> j & 1 == 1).fold(start, |a, (_, b)| a ^ b);
            let o = evaluate(p, spec, flips, SEARCH_STATES);
            tried += 1;
            if o.better_than(&best_out) {
                best = flips;
                best_out = o;
                if best_out.failing.is_empty() {
                    break;
                }
            }
        }
        return (best, tried);
    }
    loop {
        let mut improved = false;
        let mut moves: Vec<u64> = toggles.clone();
        for (j, a) in toggles.iter().enumerate() {
            for b in &toggles[j + 1..] {
                moves.push(a | b);
            }
        }
        for mv in moves {
            let flips = best ^ mv;
            let o = evaluate(p, spec, flips, SEARCH_STATES);
            tried += 1;
            if o.better_than(&best_out) {
                best = flips;
                best_out = o;
                improved = true;
            }
        }
        if !improved || best_out.failing.is_empty() {
            return (best, tried);
        }
    }
}

fn mu_text(spec: &CheckSpec, mu: &[ExactComplex], sigma: i64) -> String {
    match &spec.gauge {
        GaugeSpec::Fixed { text, .. } => {
            if sigma < 0 {
                format!("-({text})")
            } else {
                text.clone()
            }
        }
        GaugeSpec::Fit { names, .. } => {
            let parts: Vec<String> = mu
                .iter()
                .zip(names)
                .filter(|(m, _)| !m.is_zero())
                .map(|(m, n)| super::table::scaled_text(m, n))
                .collect();
            if parts.is_empty() {
                "0".into()
            } else {
                parts.join(" + ")
            }
        }
    }
}

/// Run one instantiated check.
pub fn run_check(t: &CompiledTable, spec: &CheckSpec, opts: &CheckOptions) -> Result<ClosureReport, BrstError> {
    let nstates = opts.states.max(1);
    let states = random_states(t, opts.seed, nstates)?;
    let mut missing = BTreeSet::new();
    let (p, used) = prepare(t, spec, &states, &mut missing)?;
    let (flips, tried, searched) = if opts.calibrate {
        let first = evaluate(&p, spec, 0, SEARCH_STATES);
        if first.failing.is_empty() {
            (0, 1, false)
        } else {
            let (f, n) = search(&p, spec, 0);
            (f, n, true)
        }
    } else {
        (0, 1, false)
    };
    let out = evaluate(&p, spec, flips, nstates);
    let sigma = if flips & SIGMA_BIT != 0 { -1 } else { 1 };
    let line_of = |m: u64| -> Vec<usize> {
        bits(m & !SIGMA_BIT).map(|b| t.rule_lines[b.trailing_zeros() as usize].line).collect()
    };
    let failing = out
        .failing
        .iter()
        .map(|&(f, a)| {
            let id = p.fields[f];
            FailingComponent { component: t.components[id].name.clone(), max_abs: a, rule_lines: line_of(used[&id]) }
        })
        .collect::<Vec<_>>();
    let max_residual = out.failing.iter().map(|x| x.1).fold(0.0, f64::max);
    Ok(ClosureReport {
        table: t.name.clone(),
        check: spec.name.clone(),
        operators: spec.label.clone(),
        seed: opts.seed,
        states: nstates,
        components_checked: p.fields.len(),
        convention: Convention { flipped_rules: line_of(flips), gauge_sign: sigma, searched, tried },
        gauge_parameter: mu_text(spec, &out.mu, sigma),
        max_residual,
        closed: failing.is_empty() && missing.is_empty(),
        failing,
        missing_rules: missing.into_iter().collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub table: String,
    pub abelian: bool,
    pub components: usize,
    pub rules: usize,
    pub checks: Vec<ClosureReport>,
}

impl TableReport {
    pub fn all_closed(&self) -> bool {
        self.checks.iter().all(|c| c.closed)
    }
}

/// Run the table's checks, optionally only those with the given name.
pub fn run_table(t: &CompiledTable, only: Option<&str>, opts: &CheckOptions) -> Result<TableReport, BrstError> {
    let specs: Vec<&CheckSpec> = t.checks.iter().filter(|c| only.map_or(true, |n| c.name == n)).collect();
    if let Some(n) = only {
        if specs.is_empty() {
            return Err(BrstError::UnknownCheck(n.into()));
        }
    }
    let checks = specs.into_iter().map(|s| run_check(t, s, opts)).collect::<Result<Vec<_>, _>>()?;
    Ok(TableReport {
        table: t.name.clone(),
        abelian: t.abelian,
        components: t.components.len(),
        rules: t.rule_lines.len(),
        checks,
    })
}

/// d = s_a Q^a + r_b Qbar^b; checks d^2 against a fitted gauge transformation.
pub fn twistor_check(
    t: &CompiledTable,
    s: [ExactComplex; 2],
    r: [ExactComplex; 2],
    candidates: &[&str],
    opts: &CheckOptions,
) -> Result<ClosureReport, BrstError> {
    let mut combo = Vec::new();
    for (name, coeffs) in [("Q", &s), ("Qbar", &r)] {
        for (k, c) in coeffs.iter().enumerate() {
            let op = t
                .basic_op(&format!("{name}^{}", k + 1))
                .ok_or_else(|| BrstError::UnknownName(format!("{name}^{}", k + 1)))?;
            if !c.is_zero() {
                combo.push((c.clone(), op));
            }
        }
    }
    let cands = candidates.iter().map(|c| t.scalar_expr(c)).collect::<Result<Vec<_>, _>>()?;
    let spec = CheckSpec {
        name: "twistor".into(),
        label: "d^2".into(),
        op1: combo.clone(),
        op2: combo,
        gauge: GaugeSpec::Fit { names: candidates.iter().map(|c| c.to_string()).collect(), candidates: cands },
        fields: (0..t.components.len()).collect(),
    };
    run_check(t, &spec, &CheckOptions { calibrate: false, ..opts.clone() })
}
