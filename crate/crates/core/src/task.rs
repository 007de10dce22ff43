//! Grounded planning tasks with propositional and numeric state.
//!
//! Tasks are read from and written to GTF, a line-oriented text format:
//!
//! ```text
//! gtf 1
//! atom at-a
//! atom at-b
//! mutex at-a at-b
//! numvar fuel 5
//! init at-a
//! goal +at-b ; fuel >= 1
//! action drive 1
//! pre +at-a
//! npre fuel >= 1
//! add at-b
//! del at-a
//! neff fuel -= 1
//! end
//! ```
//!
//! `#` starts a comment. Atoms and numeric variables must be declared before
//! they are referenced. Numeric effects of an action apply in the order they
//! are written, each seeing the result of the previous one.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::{Error, Result};

pub type AtomId = u32;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Comparison {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Comparison {
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparison::Lt => lhs < rhs,
            Comparison::Le => lhs <= rhs,
            Comparison::Eq => lhs == rhs,
            Comparison::Ge => lhs >= rhs,
            Comparison::Gt => lhs > rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Lt => "<",
            Comparison::Le => "<=",
            Comparison::Eq => "=",
            Comparison::Ge => ">=",
            Comparison::Gt => ">",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "<" => Comparison::Lt,
            "<=" => Comparison::Le,
            "=" => Comparison::Eq,
            ">=" => Comparison::Ge,
            ">" => Comparison::Gt,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Assignment {
    Assign,
    Increase,
    Decrease,
}

impl Assignment {
    pub fn apply(self, current: f64, value: f64) -> f64 {
        match self {
            Assignment::Assign => value,
            Assignment::Increase => current + value,
            Assignment::Decrease => current - value,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Assignment::Assign => ":=",
            Assignment::Increase => "+=",
            Assignment::Decrease => "-=",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            ":=" => Assignment::Assign,
            "+=" => Assignment::Increase,
            "-=" => Assignment::Decrease,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Literal {
    pub atom: AtomId,
    pub positive: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NumericCondition {
    pub var: usize,
    pub cmp: Comparison,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NumericEffect {
    pub var: usize,
    pub op: Assignment,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Action {
    pub name: String,
    pub cost: u64,
    pub pre: Vec<Literal>,
    pub add: Vec<AtomId>,
    pub del: Vec<AtomId>,
    pub num_pre: Vec<NumericCondition>,
    pub num_eff: Vec<NumericEffect>,
}

impl Action {
    pub fn new(name: impl Into<String>, cost: u64) -> Self {
        Self {
            name: name.into(),
            cost,
            pre: Vec::new(),
            add: Vec::new(),
            del: Vec::new(),
            num_pre: Vec::new(),
            num_eff: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NumericVar {
    pub name: String,
    pub init: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Goal {
    pub atoms: Vec<Literal>,
    pub numeric: Vec<NumericCondition>,
}

/// A state: the ascending set of true atoms plus one value per numeric
/// variable. Numeric values compare by bit pattern.
#[derive(Clone, Debug, Default)]
pub struct State {
    atoms: Vec<AtomId>,
    numeric: Vec<f64>,
}

impl State {
    pub fn new(mut atoms: Vec<AtomId>, numeric: Vec<f64>) -> Self {
        atoms.sort_unstable();
        atoms.dedup();
        Self { atoms, numeric }
    }

    /// Builds a state from atoms already strictly ascending.
    pub fn from_sorted(atoms: Vec<AtomId>, numeric: Vec<f64>) -> Self {
        debug_assert!(atoms.windows(2).all(|w| w[0] < w[1]));
        Self { atoms, numeric }
    }

    pub fn atoms(&self) -> &[AtomId] {
        &self.atoms
    }

    pub fn numeric(&self) -> &[f64] {
        &self.numeric
    }

    #[inline]
    pub fn holds(&self, atom: AtomId) -> bool {
        self.atoms.binary_search(&atom).is_ok()
    }
}

impl PartialEq for State {
    fn eq(&self, other: &Self) -> bool {
        self.atoms == other.atoms
            && self.numeric.len() == other.numeric.len()
            && self.numeric.iter().zip(&other.numeric).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl Eq for State {}

impl std::hash::Hash for State {
    fn hash<H: std::hash::Hasher>(&self, h: &mut H) {
        self.atoms.hash(h);
        for v in &self.numeric {
            v.to_bits().hash(h);
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GroundedTask {
    pub atoms: Vec<String>,
    /// Pairwise disjoint sets of atoms of which at most one holds.
    pub mutex_groups: Vec<Vec<AtomId>>,
    pub numeric_vars: Vec<NumericVar>,
    /// Ascending.
    pub init: Vec<AtomId>,
    pub goal: Goal,
    pub actions: Vec<Action>,
}

impl GroundedTask {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        Parser::default().run(text)
    }

    pub fn atom_id(&self, name: &str) -> Option<AtomId> {
        self.atoms.iter().position(|a| a == name).map(|i| i as AtomId)
    }

    pub fn initial_state(&self) -> State {
        State::new(self.init.clone(), self.numeric_vars.iter().map(|v| v.init).collect())
    }

    pub fn is_goal(&self, s: &State) -> bool {
        self.goal.atoms.iter().all(|l| s.holds(l.atom) == l.positive)
            && self.goal.numeric.iter().all(|c| c.cmp.holds(s.numeric[c.var], c.value))
    }

    pub fn is_applicable(&self, s: &State, action: usize) -> bool {
        let a = &self.actions[action];
        a.pre.iter().all(|l| s.holds(l.atom) == l.positive)
            && a.num_pre.iter().all(|c| c.cmp.holds(s.numeric[c.var], c.value))
    }

    /// Ids of applicable actions, in declaration order.
    pub fn applicable(&self, s: &State) -> Vec<usize> {
        (0..self.actions.len()).filter(|&a| self.is_applicable(s, a)).collect()
    }

    /// Successor of `s` under an applicable action.
    pub fn successor(&self, s: &State, action: usize) -> State {
        debug_assert!(self.is_applicable(s, action), "action {action} not applicable");
        let a = &self.actions[action];
        let mut atoms: Vec<AtomId> = s.atoms.iter().copied().filter(|x| !a.del.contains(x)).collect();
        atoms.extend_from_slice(&a.add);
        let mut numeric = s.numeric.clone();
        for e in &a.num_eff {
            numeric[e.var] = e.op.apply(numeric[e.var], e.value);
        }
        let next = State::new(atoms, numeric);
        debug_assert_eq!(self.mutex_violation(&next), None, "successor breaks a mutex group");
        next
    }

    /// First mutex group with more than one true atom.
    pub fn mutex_violation(&self, s: &State) -> Option<usize> {
        self.mutex_groups.iter().position(|g| g.iter().filter(|&&a| s.holds(a)).count() > 1)
    }

    pub fn fdr(&self) -> FdrCompilation {
        FdrCompilation::new(self)
    }

    /// Writes the task in GTF.
    pub fn to_gtf(&self) -> String {
        let mut out = String::from("gtf 1\n");
        for a in &self.atoms {
            let _ = writeln!(out, "atom {a}");
        }
        for g in &self.mutex_groups {
            out.push_str("mutex");
            for &a in g {
                let _ = write!(out, " {}", self.atoms[a as usize]);
            }
            out.push('\n');
        }
        for v in &self.numeric_vars {
            let _ = writeln!(out, "numvar {} {:?}", v.name, v.init);
        }
        out.push_str("init");
        for &a in &self.init {
            let _ = write!(out, " {}", self.atoms[a as usize]);
        }
        out.push('\n');
        out.push_str("goal");
        self.write_literals(&mut out, &self.goal.atoms);
        if !self.goal.numeric.is_empty() {
            out.push_str(" ;");
            self.write_conditions(&mut out, &self.goal.numeric);
        }
        out.push('\n');
        for a in &self.actions {
            let _ = writeln!(out, "action {} {}", a.name, a.cost);
            if !a.pre.is_empty() {
                out.push_str("pre");
                self.write_literals(&mut out, &a.pre);
                out.push('\n');
            }
            if !a.num_pre.is_empty() {
                out.push_str("npre");
                self.write_conditions(&mut out, &a.num_pre);
                out.push('\n');
            }
            for (kw, list) in [("add", &a.add), ("del", &a.del)] {
                if !list.is_empty() {
                    out.push_str(kw);
                    for &x in list {
                        let _ = write!(out, " {}", self.atoms[x as usize]);
                    }
                    out.push('\n');
                }
            }
            if !a.num_eff.is_empty() {
                out.push_str("neff");
                for e in &a.num_eff {
                    let _ = write!(out, " {} {} {:?}", self.numeric_vars[e.var].name, e.op.symbol(), e.value);
                }
                out.push('\n');
            }
            out.push_str("end\n");
        }
        out
    }

    fn write_literals(&self, out: &mut String, lits: &[Literal]) {
        for l in lits {
            let sign = if l.positive { '+' } else { '-' };
            let _ = write!(out, " {sign}{}", self.atoms[l.atom as usize]);
        }
    }

    fn write_conditions(&self, out: &mut String, conds: &[NumericCondition]) {
        for c in conds {
            let _ = write!(out, " {} {} {:?}", self.numeric_vars[c.var].name, c.cmp.symbol(), c.value);
        }
    }
}

/// Parses GTF text into a validated task.
pub fn parse_task(text: &str) -> Result<GroundedTask, ParseError> {
    GroundedTask::parse(text)
}

/// Finite-domain variables derived from mutex groups.
///
/// Every mutex group becomes one variable whose values are the group's atoms
/// followed by a final `none` value. Atoms outside every group get a
/// singleton variable `{atom, none}`. Variables are ordered by their
/// smallest atom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FdrCompilation {
    groups: Vec<Vec<AtomId>>,
    /// (variable, value) per atom.
    atom_slot: Vec<(u32, u32)>,
}

impl FdrCompilation {
    pub fn new(task: &GroundedTask) -> Self {
        let mut grouped = vec![false; task.atoms.len()];
        let mut groups: Vec<Vec<AtomId>> = Vec::new();
        for g in &task.mutex_groups {
            for &a in g {
                grouped[a as usize] = true;
            }
            groups.push(g.clone());
        }
        for (a, &g) in grouped.iter().enumerate() {
            if !g {
                groups.push(vec![a as AtomId]);
            }
        }
        groups.sort_by_key(|g| g.iter().min().copied());
        let mut atom_slot = vec![(0, 0); task.atoms.len()];
        for (v, g) in groups.iter().enumerate() {
            for (i, &a) in g.iter().enumerate() {
                atom_slot[a as usize] = (v as u32, i as u32);
            }
        }
        Self { groups, atom_slot }
    }

    pub fn var_count(&self) -> usize {
        self.groups.len()
    }

    pub fn group(&self, var: usize) -> &[AtomId] {
        &self.groups[var]
    }

    /// Domain size including `none`.
    pub fn domain_size(&self, var: usize) -> u64 {
        self.groups[var].len() as u64 + 1
    }

    pub fn domains(&self) -> Vec<u64> {
        (0..self.var_count()).map(|v| self.domain_size(v)).collect()
    }

    pub fn none_value(&self, var: usize) -> u64 {
        self.groups[var].len() as u64
    }

    pub fn var_of(&self, atom: AtomId) -> usize {
        self.atom_slot[atom as usize].0 as usize
    }

    /// Value of every variable in `s`.
    ///
    /// Fails if `s` names an unknown atom or makes two atoms of one group true.
    pub fn values(&self, s: &State) -> Result<Vec<u64>> {
        let mut values: Vec<u64> = (0..self.var_count()).map(|v| self.none_value(v)).collect();
        for &a in s.atoms() {
            let &(v, i) = self
                .atom_slot
                .get(a as usize)
                .ok_or(Error::IndexOutOfRange { index: a as u64, len: self.atom_slot.len() as u64 })?;
            let v = v as usize;
            if values[v] != self.none_value(v) {
                return Err(Error::Validation(format!(
                    "atoms {} and {a} are both true but share a mutex group",
                    self.groups[v][values[v] as usize]
                )));
            }
            values[v] = i as u64;
        }
        Ok(values)
    }

    pub fn atom_count(&self) -> usize {
        self.atom_slot.len()
    }

    /// Ascending true atoms for a value assignment.
    pub fn atoms(&self, values: &[u64]) -> Result<Vec<AtomId>> {
        if values.len() != self.var_count() {
            return Err(Error::Corrupt(format!(
                "expected {} FDR values, got {}",
                self.var_count(),
                values.len()
            )));
        }
        let mut atoms = Vec::new();
        for (v, &x) in values.iter().enumerate() {
            let g = &self.groups[v];
            match x {
                x if x < g.len() as u64 => atoms.push(g[x as usize]),
                x if x == g.len() as u64 => {}
                x => return Err(Error::Corrupt(format!("value {x} outside domain of variable {v}"))),
            }
        }
        atoms.sort_unstable();
        Ok(atoms)
    }
}

// ---------------------------------------------------------------------------
// Parser

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let line = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start = None;
    let mut column = 0;
    let mut start_col = 0;
    for (i, c) in line.char_indices() {
        column += 1;
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token { text: &line[s..i], column: start_col });
            }
        } else if start.is_none() {
            start = Some(i);
            start_col = column;
        }
    }
    if let Some(s) = start {
        out.push(Token { text: &line[s..], column: start_col });
    }
    out
}

struct OpenAction {
    action: Action,
    line: usize,
}

#[derive(Default)]
struct Parser {
    task: GroundedTask,
    atom_ids: HashMap<String, AtomId>,
    num_ids: HashMap<String, usize>,
    action_names: HashSet<String>,
    /// Group index and declaring line for each grouped atom.
    group_of: HashMap<AtomId, usize>,
    group_lines: Vec<usize>,
    init_at: Vec<(AtomId, usize, usize)>,
    open: Option<OpenAction>,
    line: usize,
    line_len: usize,
}

impl Parser {
    fn err<T>(&self, column: usize, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { line: self.line, column, message: message.into() })
    }

    fn run(mut self, text: &str) -> Result<GroundedTask, ParseError> {
        let mut header = false;
        for (i, raw) in text.lines().enumerate() {
            self.line = i + 1;
            self.line_len = raw.chars().count();
            let toks = tokenize(raw);
            if toks.is_empty() {
                continue;
            }
            if !header {
                match toks.as_slice() {
                    [g, v] if g.text == "gtf" && v.text == "1" => header = true,
                    [g, v] if g.text == "gtf" => {
                        return self.err(v.column, format!("unsupported version `{}`", v.text))
                    }
                    [t, ..] => return self.err(t.column, "expected header `gtf 1`"),
                    [] => unreachable!(),
                }
                continue;
            }
            if self.open.is_some() {
                self.action_line(&toks)?;
            } else {
                self.top_line(&toks)?;
            }
        }
        if !header {
            return self.err(1, "empty input: expected header `gtf 1`");
        }
        if let Some(open) = &self.open {
            self.line = open.line;
            return self.err(1, format!("action `{}` is missing `end`", open.action.name));
        }
        self.check_init_mutex()?;
        Ok(self.task)
    }

    fn top_line(&mut self, toks: &[Token<'_>]) -> Result<(), ParseError> {
        let (kw, args) = (&toks[0], &toks[1..]);
        match kw.text {
            "atom" => {
                let [name] = args else {
                    return self.err(kw.column, "expected `atom <name>`");
                };
                self.check_name(name)?;
                if self.atom_ids.contains_key(name.text) {
                    return self.err(name.column, format!("duplicate atom `{}`", name.text));
                }
                let id = self.task.atoms.len() as AtomId;
                self.atom_ids.insert(name.text.to_string(), id);
                self.task.atoms.push(name.text.to_string());
            }
            "mutex" => {
                if args.is_empty() {
                    return self.err(kw.column, "empty mutex group");
                }
                let gi = self.task.mutex_groups.len();
                let mut group = Vec::with_capacity(args.len());
                for t in args {
                    let a = self.atom(t)?;
                    if group.contains(&a) {
                        return self.err(t.column, format!("atom `{}` repeated in mutex group", t.text));
                    }
                    if let Some(&other) = self.group_of.get(&a) {
                        return self.err(
                            t.column,
                            format!(
                                "mutex group {} (line {}) overlaps mutex group {} (line {}) on atom `{}`",
                                gi + 1,
                                self.line,
                                other + 1,
                                self.group_lines[other],
                                t.text
                            ),
                        );
                    }
                    group.push(a);
                }
                for &a in &group {
                    self.group_of.insert(a, gi);
                }
                self.group_lines.push(self.line);
                self.task.mutex_groups.push(group);
            }
            "numvar" => {
                let [name, value] = args else {
                    return self.err(kw.column, "expected `numvar <name> <decimal>`");
                };
                self.check_name(name)?;
                if self.num_ids.contains_key(name.text) {
                    return self.err(name.column, format!("duplicate numeric variable `{}`", name.text));
                }
                let init = self.decimal(value)?;
                self.num_ids.insert(name.text.to_string(), self.task.numeric_vars.len());
                self.task.numeric_vars.push(NumericVar { name: name.text.to_string(), init });
            }
            "init" => {
                for t in args {
                    let a = self.atom(t)?;
                    if !self.init_at.iter().any(|x| x.0 == a) {
                        self.init_at.push((a, self.line, t.column));
                    }
                }
            }
            "goal" => {
                let split = args.iter().position(|t| t.text == ";").unwrap_or(args.len());
                for t in &args[..split] {
                    let l = self.literal(t)?;
                    self.task.goal.atoms.push(l);
                }
                if split < args.len() {
                    let conds = self.conditions(&args[split + 1..])?;
                    self.task.goal.numeric.extend(conds);
                }
            }
            "action" => {
                let (name, cost) = match args {
                    [name] => (name, 1),
                    [name, cost] => {
                        let Ok(c) = cost.text.parse::<u64>() else {
                            return self.err(
                                cost.column,
                                format!("cost `{}` is not a nonnegative integer", cost.text),
                            );
                        };
                        (name, c)
                    }
                    _ => return self.err(kw.column, "expected `action <name> [cost]`"),
                };
                self.check_name(name)?;
                if !self.action_names.insert(name.text.to_string()) {
                    return self.err(name.column, format!("duplicate action `{}`", name.text));
                }
                self.open = Some(OpenAction { action: Action::new(name.text, cost), line: self.line });
            }
            "end" | "pre" | "add" | "del" | "npre" | "neff" => {
                return self.err(kw.column, format!("`{}` outside of an action", kw.text));
            }
            other => return self.err(kw.column, format!("unknown directive `{other}`")),
        }
        Ok(())
    }

    fn action_line(&mut self, toks: &[Token<'_>]) -> Result<(), ParseError> {
        let (kw, args) = (&toks[0], &toks[1..]);
        match kw.text {
            "pre" => {
                let lits = args.iter().map(|t| self.literal(t)).collect::<Result<Vec<_>, _>>()?;
                self.open_action().pre.extend(lits);
            }
            "add" | "del" => {
                let adding = kw.text == "add";
                for t in args {
                    let a = self.atom(t)?;
                    let act = &self.open.as_ref().unwrap().action;
                    let other = if adding { &act.del } else { &act.add };
                    if other.contains(&a) {
                        return self.err(
                            t.column,
                            format!("action `{}` both adds and deletes `{}`", act.name, t.text),
                        );
                    }
                    let act = self.open_action();
                    if adding {
                        act.add.push(a)
                    } else {
                        act.del.push(a)
                    }
                }
            }
            "npre" => {
                let conds = self.conditions(args)?;
                self.open_action().num_pre.extend(conds);
            }
            "neff" => {
                if args.len() % 3 != 0 {
                    return self.err(self.line_len + 1, "incomplete numeric effect");
                }
                let mut effs = Vec::new();
                for triple in args.chunks(3) {
                    let var = self.numvar(&triple[0])?;
                    let Some(op) = Assignment::parse(triple[1].text) else {
                        return self.err(
                            triple[1].column,
                            format!("expected `:=`, `+=` or `-=`, found `{}`", triple[1].text),
                        );
                    };
                    let value = self.decimal(&triple[2])?;
                    effs.push(NumericEffect { var, op, value });
                }
                self.open_action().num_eff.extend(effs);
            }
            "end" => {
                if let Some(t) = args.first() {
                    return self.err(t.column, "unexpected token after `end`");
                }
                let open = self.open.take().unwrap();
                self.task.actions.push(open.action);
            }
            other => {
                return self.err(kw.column, format!("unexpected `{other}` inside action (missing `end`?)"))
            }
        }
        Ok(())
    }

    fn open_action(&mut self) -> &mut Action {
        &mut self.open.as_mut().unwrap().action
    }

    fn check_name(&self, t: &Token<'_>) -> Result<(), ParseError> {
        if t.text.starts_with(['+', '-']) || t.text.contains(';') {
            return self.err(t.column, format!("invalid name `{}`", t.text));
        }
        Ok(())
    }

    fn atom(&self, t: &Token<'_>) -> Result<AtomId, ParseError> {
        match self.atom_ids.get(t.text) {
            Some(&a) => Ok(a),
            None => self.err(t.column, format!("unknown atom `{}`", t.text)),
        }
    }

    fn numvar(&self, t: &Token<'_>) -> Result<usize, ParseError> {
        match self.num_ids.get(t.text) {
            Some(&v) => Ok(v),
            None => self.err(t.column, format!("unknown numeric variable `{}`", t.text)),
        }
    }

    fn literal(&self, t: &Token<'_>) -> Result<Literal, ParseError> {
        let (positive, name) = match t.text.as_bytes()[0] {
            b'+' => (true, &t.text[1..]),
            b'-' => (false, &t.text[1..]),
            _ => (true, t.text),
        };
        match self.atom_ids.get(name) {
            Some(&atom) => Ok(Literal { atom, positive }),
            None => self.err(t.column, format!("unknown atom `{name}`")),
        }
    }

    fn decimal(&self, t: &Token<'_>) -> Result<f64, ParseError> {
        match t.text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => self.err(t.column, format!("`{}` is not a finite decimal", t.text)),
        }
    }

    fn conditions(&self, args: &[Token<'_>]) -> Result<Vec<NumericCondition>, ParseError> {
        if !args.len().is_multiple_of(3) {
            return self.err(self.line_len + 1, "incomplete numeric condition");
        }
        args.chunks(3)
            .map(|t| {
                let var = self.numvar(&t[0])?;
                let Some(cmp) = Comparison::parse(t[1].text) else {
                    return self.err(t[1].column, format!("unknown comparison `{}`", t[1].text));
                };
                let value = self.decimal(&t[2])?;
                Ok(NumericCondition { var, cmp, value })
            })
            .collect()
    }

    fn check_init_mutex(&mut self) -> Result<(), ParseError> {
        let mut holder: HashMap<usize, AtomId> = HashMap::new();
        for &(a, line, column) in &self.init_at {
            if let Some(&g) = self.group_of.get(&a) {
                if let Some(prev) = holder.insert(g, a) {
                    return Err(ParseError {
                        line,
                        column,
                        message: format!(
                            "initial state violates mutex group {} (line {}): `{}` and `{}` both hold",
                            g + 1,
                            self.group_lines[g],
                            self.task.atoms[prev as usize],
                            self.task.atoms[a as usize]
                        ),
                    });
                }
            }
        }
        self.task.init = self.init_at.iter().map(|x| x.0).collect();
        self.task.init.sort_unstable();
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Generators

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GeneratorKind {
    /// `L` cells, a token moving forward one cell per action.
    Chain,
    /// `B`-bit binary counter counting up from zero.
    Counter,
    /// Two rooms, `N` balls, a robot with two single-ball grippers.
    Gripper,
    /// The counter plus a numeric accumulator increased by every action.
    NumericCounter,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub size: u32,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, size: u32) -> Result<Self> {
        if size == 0 {
            return Err(Error::Validation("generator size must be positive".into()));
        }
        if matches!(kind, GeneratorKind::Counter | GeneratorKind::NumericCounter) && size > 32 {
            return Err(Error::Validation(format!("counter width {size} exceeds 32 bits")));
        }
        Ok(Self { kind, size })
    }
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, size) =
            s.split_once(':').ok_or_else(|| Error::Validation(format!("expected KIND:SIZE, got `{s}`")))?;
        let kind = match kind {
            "chain" => GeneratorKind::Chain,
            "counter" => GeneratorKind::Counter,
            "gripper" => GeneratorKind::Gripper,
            "numeric-counter" => GeneratorKind::NumericCounter,
            other => return Err(Error::Validation(format!("unknown generator `{other}`"))),
        };
        let size =
            size.parse::<i64>().map_err(|_| Error::Validation(format!("bad generator size `{size}`")))?;
        if size <= 0 || size > u32::MAX as i64 {
            return Err(Error::Validation(format!("generator size must be positive, got {size}")));
        }
        Self::new(kind, size as u32)
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            GeneratorKind::Chain => "chain",
            GeneratorKind::Counter => "counter",
            GeneratorKind::Gripper => "gripper",
            GeneratorKind::NumericCounter => "numeric-counter",
        };
        write!(f, "{kind}:{}", self.size)
    }
}

/// GTF text of a generated task.
pub fn generate(spec: GeneratorSpec) -> String {
    generate_task(spec).to_gtf()
}

pub fn generate_task(spec: GeneratorSpec) -> GroundedTask {
    match spec.kind {
        GeneratorKind::Chain => chain(spec.size),
        GeneratorKind::Counter => counter(spec.size, false),
        GeneratorKind::NumericCounter => counter(spec.size, true),
        GeneratorKind::Gripper => gripper(spec.size),
    }
}

fn pos(atom: AtomId) -> Literal {
    Literal { atom, positive: true }
}

fn neg(atom: AtomId) -> Literal {
    Literal { atom, positive: false }
}

fn chain(len: u32) -> GroundedTask {
    let mut t = GroundedTask {
        atoms: (0..len).map(|i| format!("cell{i}")).collect(),
        init: vec![0],
        ..Default::default()
    };
    t.goal.atoms.push(pos(len - 1));
    for i in 0..len - 1 {
        let mut a = Action::new(format!("move{i}"), 1);
        a.pre.push(pos(i));
        a.add.push(i + 1);
        a.del.push(i);
        t.actions.push(a);
    }
    t
}

fn counter(bits: u32, numeric: bool) -> GroundedTask {
    let mut t = GroundedTask { atoms: (0..bits).map(|i| format!("bit{i}")).collect(), ..Default::default() };
    t.goal.atoms = (0..bits).map(pos).collect();
    if numeric {
        t.numeric_vars.push(NumericVar { name: "total".into(), init: 0.0 });
        let target = ((1u64 << bits) - 1) as f64;
        t.goal.numeric.push(NumericCondition { var: 0, cmp: Comparison::Ge, value: target });
    }
    for i in 0..bits {
        let mut a = Action::new(format!("inc{i}"), 1);
        a.pre.push(neg(i));
        a.pre.extend((0..i).map(pos));
        a.add.push(i);
        a.del.extend(0..i);
        if numeric {
            a.num_eff.push(NumericEffect { var: 0, op: Assignment::Increase, value: 1.0 });
        }
        t.actions.push(a);
    }
    t
}

fn gripper(balls: u32) -> GroundedTask {
    const ROOMS: [&str; 2] = ["rooma", "roomb"];
    const HANDS: [&str; 2] = ["left", "right"];
    let mut t = GroundedTask::default();
    let add_atom = |t: &mut GroundedTask, name: String| {
        t.atoms.push(name);
        (t.atoms.len() - 1) as AtomId
    };
    let robot: Vec<AtomId> = ROOMS.iter().map(|r| add_atom(&mut t, format!("at-robby-{r}"))).collect();
    let free: Vec<AtomId> = HANDS.iter().map(|h| add_atom(&mut t, format!("free-{h}"))).collect();
    let mut at = Vec::new();
    let mut carry = Vec::new();
    for b in 0..balls {
        at.push(ROOMS.iter().map(|r| add_atom(&mut t, format!("at-ball{b}-{r}"))).collect::<Vec<_>>());
        carry.push(HANDS.iter().map(|h| add_atom(&mut t, format!("carry-ball{b}-{h}"))).collect::<Vec<_>>());
    }
    t.mutex_groups.push(robot.clone());
    for b in 0..balls as usize {
        t.mutex_groups.push(at[b].iter().chain(&carry[b]).copied().collect());
    }
    t.init = std::iter::once(robot[0]).chain(free.iter().copied()).chain(at.iter().map(|a| a[0])).collect();
    t.init.sort_unstable();
    t.goal.atoms = at.iter().map(|a| pos(a[1])).collect();

    for (from, to) in [(0, 1), (1, 0)] {
        let mut a = Action::new(format!("move-{}-{}", ROOMS[from], ROOMS[to]), 1);
        a.pre.push(pos(robot[from]));
        a.add.push(robot[to]);
        a.del.push(robot[from]);
        t.actions.push(a);
    }
    for b in 0..balls as usize {
        for r in 0..2 {
            for h in 0..2 {
                let mut pick = Action::new(format!("pick-ball{b}-{}-{}", ROOMS[r], HANDS[h]), 1);
                pick.pre.extend([pos(at[b][r]), pos(robot[r]), pos(free[h])]);
                pick.add.push(carry[b][h]);
                pick.del.extend([at[b][r], free[h]]);
                t.actions.push(pick);
                let mut drop = Action::new(format!("drop-ball{b}-{}-{}", ROOMS[r], HANDS[h]), 1);
                drop.pre.extend([pos(carry[b][h]), pos(robot[r])]);
                drop.add.extend([at[b][r], free[h]]);
                drop.del.push(carry[b][h]);
                t.actions.push(drop);
            }
        }
    }
    t
}
