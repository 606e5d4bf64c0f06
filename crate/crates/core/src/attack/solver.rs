//! A conflict-driven clause-learning SAT solver.
//!
//! Two watched literals, VSIDS branching with phase saving, first-UIP
//! learning with local minimization, Luby restarts (optional, for
//! reproducibility studies) and LBD-based learnt-clause reduction. The
//! solver is incremental: clauses may be added between calls and each call
//! may carry assumptions. Branching is fully deterministic.

use std::time::Instant;

/// A literal: variable index times two, plus one if negated.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

pub type Var = u32;

impl Lit {
    pub fn new(var: Var, negated: bool) -> Self {
        Lit(var << 1 | negated as u32)
    }

    pub fn pos(var: Var) -> Self {
        Self::new(var, false)
    }

    pub fn var(self) -> Var {
        self.0 >> 1
    }

    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    fn index(self) -> usize {
        self.0 as usize
    }

    /// DIMACS integer (variables are 1-based there).
    pub fn to_dimacs(self) -> i64 {
        let v = self.var() as i64 + 1;
        if self.is_negated() {
            -v
        } else {
            v
        }
    }

    pub fn from_dimacs(x: i64) -> Self {
        assert!(x != 0, "0 is not a DIMACS literal");
        Lit::new((x.unsigned_abs() - 1) as Var, x < 0)
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl std::fmt::Debug for Lit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveResult {
    Sat,
    Unsat,
    /// Deadline or conflict budget exhausted.
    Unknown,
}

/// Anything that accepts clauses: the built-in solver, a formula buffer,
/// or an external-solver front end.
pub trait ClauseSink {
    fn new_var(&mut self) -> Var;
    fn add_clause(&mut self, lits: &[Lit]);
    fn num_vars(&self) -> u32;
}

/// Incremental SAT backend interface used by the attacks.
pub trait SatBackend: ClauseSink {
    fn solve(&mut self, assumptions: &[Lit]) -> SolveResult;
    /// Model value of `var` after a `Sat` answer.
    fn value(&self, var: Var) -> bool;
    fn set_deadline(&mut self, deadline: Option<Instant>);
    fn num_clauses(&self) -> usize;
}

const UNDEF: u8 = 2;

struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    deleted: bool,
    lbd: u32,
    activity: f64,
}

#[derive(Clone, Copy)]
struct Watcher {
    clause: u32,
    blocker: Lit,
}

/// Indexed binary max-heap over variable activities.
#[derive(Default)]
struct VarHeap {
    heap: Vec<Var>,
    pos: Vec<Option<usize>>,
}

impl VarHeap {
    fn grow(&mut self, n: usize) {
        self.pos.resize(n, None);
    }

    fn contains(&self, v: Var) -> bool {
        self.pos[v as usize].is_some()
    }

    fn better(act: &[f64], a: Var, b: Var) -> bool {
        // Ties go to the smaller index, keeping the order deterministic.
        act[a as usize] > act[b as usize] || (act[a as usize] == act[b as usize] && a < b)
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let p = (i - 1) / 2;
            if !Self::better(act, v, self.heap[p]) {
                break;
            }
            self.heap[i] = self.heap[p];
            self.pos[self.heap[i] as usize] = Some(i);
            i = p;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let c = if r < n && Self::better(act, self.heap[r], self.heap[l]) {
                r
            } else {
                l
            };
            if !Self::better(act, self.heap[c], v) {
                break;
            }
            self.heap[i] = self.heap[c];
            self.pos[self.heap[i] as usize] = Some(i);
            i = c;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }

    fn insert(&mut self, v: Var, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.heap.push(v);
        let i = self.heap.len() - 1;
        self.pos[v as usize] = Some(i);
        self.up(i, act);
    }

    fn bumped(&mut self, v: Var, act: &[f64]) {
        if let Some(i) = self.pos[v as usize] {
            self.up(i, act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<Var> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().unwrap();
        self.pos[top as usize] = None;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = Some(0);
            self.down(0, act);
        }
        Some(top)
    }
}

/// Search statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
}

/// The built-in CDCL solver.
pub struct Solver {
    clauses: Vec<Clause>,
    learnts: Vec<u32>,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<u8>,
    level: Vec<u32>,
    reason: Vec<Option<u32>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    heap: VarHeap,
    phase: Vec<bool>,
    seen: Vec<bool>,
    model: Vec<bool>,
    ok: bool,
    restarts: bool,
    deadline: Option<Instant>,
    conflict_budget: Option<u64>,
    max_learnts: f64,
    original_clauses: usize,
    stats: SolverStats,
}

impl Default for Solver {
    fn default() -> Self {
        Self::new()
    }
}

fn luby(y: f64, mut x: u64) -> f64 {
    let (mut size, mut seq) = (1u64, 0i32);
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    y.powi(seq)
}

impl Solver {
    pub fn new() -> Self {
        Self {
            clauses: Vec::new(),
            learnts: Vec::new(),
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: Vec::new(),
            var_inc: 1.0,
            cla_inc: 1.0,
            heap: VarHeap::default(),
            phase: Vec::new(),
            seen: Vec::new(),
            model: Vec::new(),
            ok: true,
            restarts: true,
            deadline: None,
            conflict_budget: None,
            max_learnts: 0.0,
            original_clauses: 0,
            stats: SolverStats::default(),
        }
    }

    /// Disables restarts (the search is deterministic either way).
    pub fn set_restarts(&mut self, enabled: bool) {
        self.restarts = enabled;
    }

    /// Limits the conflicts of each subsequent `solve` call.
    pub fn set_conflict_budget(&mut self, budget: Option<u64>) {
        self.conflict_budget = budget;
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    /// False once the clause set is unsatisfiable without assumptions.
    pub fn is_ok(&self) -> bool {
        self.ok
    }

    fn lit_value(&self, l: Lit) -> u8 {
        let a = self.assigns[l.var() as usize];
        if a == UNDEF {
            UNDEF
        } else {
            a ^ l.is_negated() as u8
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: Lit, reason: Option<u32>) {
        let v = l.var() as usize;
        self.assigns[v] = !l.is_negated() as u8;
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn attach(&mut self, cref: u32) {
        let c = &self.clauses[cref as usize];
        let (a, b) = (c.lits[0], c.lits[1]);
        self.watches[a.index()].push(Watcher {
            clause: cref,
            blocker: b,
        });
        self.watches[b.index()].push(Watcher {
            clause: cref,
            blocker: a,
        });
    }

    /// Returns the conflicting clause, if any.
    fn propagate(&mut self) -> Option<u32> {
        let mut conflict = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.index()]);
            let (mut i, mut j) = (0, 0);
            'watch: while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.lit_value(w.blocker) == 1 {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.clause as usize;
                if self.clauses[cref].deleted {
                    continue;
                }
                {
                    let lits = &mut self.clauses[cref].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                }
                let first = self.clauses[cref].lits[0];
                if first != w.blocker && self.lit_value(first) == 1 {
                    ws[j] = Watcher {
                        clause: w.clause,
                        blocker: first,
                    };
                    j += 1;
                    continue;
                }
                let len = self.clauses[cref].lits.len();
                for k in 2..len {
                    let l = self.clauses[cref].lits[k];
                    if self.lit_value(l) != 0 {
                        self.clauses[cref].lits.swap(1, k);
                        self.watches[l.index()].push(Watcher {
                            clause: w.clause,
                            blocker: first,
                        });
                        continue 'watch;
                    }
                }
                ws[j] = Watcher {
                    clause: w.clause,
                    blocker: first,
                };
                j += 1;
                if self.lit_value(first) == 0 {
                    conflict = Some(w.clause);
                    self.qhead = self.trail.len();
                    while i < ws.len() {
                        ws[j] = ws[i];
                        i += 1;
                        j += 1;
                    }
                } else {
                    self.enqueue(first, Some(w.clause));
                }
            }
            ws.truncate(j);
            // Watchers pushed onto this list during the loop must be kept.
            let added = std::mem::replace(&mut self.watches[false_lit.index()], ws);
            self.watches[false_lit.index()].extend(added);
            if conflict.is_some() {
                break;
            }
        }
        conflict
    }

    fn bump_var(&mut self, v: Var) {
        self.activity[v as usize] += self.var_inc;
        if self.activity[v as usize] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.bumped(v, &self.activity);
    }

    fn bump_clause(&mut self, cref: u32) {
        let c = &mut self.clauses[cref as usize];
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for &l in &self.learnts {
                self.clauses[l as usize].activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    /// First-UIP analysis; returns the learnt clause (asserting literal
    /// first) and the backjump level.
    fn analyze(&mut self, mut conflict: u32) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit(0)];
        let mut counter = 0;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        loop {
            if self.clauses[conflict as usize].learnt {
                self.bump_clause(conflict);
            }
            let start = if p.is_some() { 1 } else { 0 };
            let len = self.clauses[conflict as usize].lits.len();
            for k in start..len {
                let q = self.clauses[conflict as usize].lits[k];
                let v = q.var() as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump_var(q.var());
                    if self.level[v] >= self.decision_level() {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var() as usize] {
                    break;
                }
            }
            let lit = self.trail[index];
            p = Some(lit);
            self.seen[lit.var() as usize] = false;
            counter -= 1;
            if counter == 0 {
                break;
            }
            conflict = self.reason[lit.var() as usize].expect("implied literal has a reason");
        }
        learnt[0] = !p.unwrap();

        // Local minimization: drop literals implied by others in the clause.
        let keep: Vec<bool> = learnt
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                if i == 0 {
                    return true;
                }
                match self.reason[l.var() as usize] {
                    None => true,
                    Some(r) => self.clauses[r as usize].lits[1..].iter().any(|q| {
                        let v = q.var() as usize;
                        !self.seen[v] && self.level[v] > 0
                    }),
                }
            })
            .collect();
        for l in &learnt[1..] {
            self.seen[l.var() as usize] = false;
        }
        let mut learnt: Vec<Lit> = learnt
            .into_iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(l, _)| l)
            .collect();

        let bt = if learnt.len() == 1 {
            0
        } else {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var() as usize] > self.level[learnt[max_i].var() as usize] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            self.level[learnt[1].var() as usize]
        };
        (learnt, bt)
    }

    fn lbd(&mut self, lits: &[Lit]) -> u32 {
        let mut levels: Vec<u32> = lits.iter().map(|l| self.level[l.var() as usize]).collect();
        levels.sort_unstable();
        levels.dedup();
        levels.len() as u32
    }

    fn cancel_until(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level as usize];
        for i in (lim..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var() as usize;
            self.assigns[v] = UNDEF;
            self.reason[v] = None;
            self.phase[v] = !l.is_negated();
            self.heap.insert(l.var(), &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level as usize);
        self.qhead = lim;
    }

    fn locked(&self, cref: u32) -> bool {
        let c = &self.clauses[cref as usize];
        let l = c.lits[0];
        self.lit_value(l) == 1 && self.reason[l.var() as usize] == Some(cref)
    }

    fn reduce_db(&mut self) {
        let mut cands: Vec<u32> = self.learnts.clone();
        cands.sort_by(|&a, &b| {
            let (ca, cb) = (&self.clauses[a as usize], &self.clauses[b as usize]);
            cb.lbd.cmp(&ca.lbd).then(
                ca.activity
                    .partial_cmp(&cb.activity)
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
        });
        let target = cands.len() / 2;
        let mut removed = 0;
        for &cref in &cands {
            if removed >= target {
                break;
            }
            let c = &self.clauses[cref as usize];
            if c.lbd <= 2 || c.lits.len() <= 2 || self.locked(cref) {
                continue;
            }
            let c = &mut self.clauses[cref as usize];
            c.deleted = true;
            c.lits = Vec::new();
            removed += 1;
        }
        self.learnts.retain(|&c| !self.clauses[c as usize].deleted);
        let clauses = &self.clauses;
        for ws in &mut self.watches {
            ws.retain(|w| !clauses[w.clause as usize].deleted);
        }
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assigns[v as usize] == UNDEF {
                return Some(Lit::new(v, !self.phase[v as usize]));
            }
        }
        None
    }

    fn out_of_time(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn search(&mut self, assumptions: &[Lit], conflicts_allowed: u64, start_conflicts: u64) -> SolveResult {
        let mut local_conflicts = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                local_conflicts += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return SolveResult::Unsat;
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let lbd = self.lbd(&learnt);
                    let cref = self.clauses.len() as u32;
                    let asserting = learnt[0];
                    self.clauses.push(Clause {
                        lits: learnt,
                        learnt: true,
                        deleted: false,
                        lbd,
                        activity: 0.0,
                    });
                    self.attach(cref);
                    self.learnts.push(cref);
                    self.bump_clause(cref);
                    self.enqueue(asserting, Some(cref));
                }
                self.var_inc /= 0.95;
                self.cla_inc /= 0.999;
                if self.stats.conflicts.is_multiple_of(256) && self.out_of_time() {
                    return SolveResult::Unknown;
                }
                if let Some(b) = self.conflict_budget {
                    if self.stats.conflicts - start_conflicts >= b {
                        return SolveResult::Unknown;
                    }
                }
            } else {
                if self.restarts && local_conflicts >= conflicts_allowed {
                    self.cancel_until(0);
                    return SolveResult::Unknown;
                }
                if self.learnts.len() as f64 - self.trail.len() as f64 >= self.max_learnts {
                    self.reduce_db();
                }
                let mut next = None;
                while (self.decision_level() as usize) < assumptions.len() {
                    let a = assumptions[self.decision_level() as usize];
                    match self.lit_value(a) {
                        1 => self.trail_lim.push(self.trail.len()),
                        0 => return SolveResult::Unsat,
                        _ => {
                            next = Some(a);
                            break;
                        }
                    }
                }
                let decision = match next {
                    Some(a) => a,
                    None => {
                        self.stats.decisions += 1;
                        if self.stats.decisions.is_multiple_of(4096) && self.out_of_time() {
                            return SolveResult::Unknown;
                        }
                        match self.pick_branch() {
                            Some(l) => l,
                            None => {
                                self.model = (0..self.assigns.len()).map(|v| self.assigns[v] == 1).collect();
                                return SolveResult::Sat;
                            }
                        }
                    }
                };
                self.trail_lim.push(self.trail.len());
                self.enqueue(decision, None);
            }
        }
    }

    /// Solves under `assumptions`. An `Unsat` answer with assumptions does
    /// not make the solver permanently unsatisfiable.
    pub fn solve_with(&mut self, assumptions: &[Lit]) -> SolveResult {
        if !self.ok {
            return SolveResult::Unsat;
        }
        for a in assumptions {
            self.ensure_var(a.var());
        }
        self.max_learnts = (self.original_clauses as f64 / 3.0).max(2000.0);
        let start = self.stats.conflicts;
        let mut curr_restarts = 0;
        let result = loop {
            if self.out_of_time() {
                break SolveResult::Unknown;
            }
            let budget = (luby(2.0, curr_restarts) * 100.0) as u64;
            let r = self.search(assumptions, budget, start);
            match r {
                SolveResult::Unknown if self.restarts && !self.budget_exhausted(start) && !self.out_of_time() => {
                    curr_restarts += 1;
                    self.stats.restarts += 1;
                    self.max_learnts *= 1.05;
                }
                r => break r,
            }
        };
        self.cancel_until(0);
        result
    }

    fn budget_exhausted(&self, start: u64) -> bool {
        self.conflict_budget.is_some_and(|b| self.stats.conflicts - start >= b)
    }

    fn ensure_var(&mut self, v: Var) {
        while self.assigns.len() <= v as usize {
            self.new_var();
        }
    }

    pub fn model_value(&self, v: Var) -> bool {
        self.model.get(v as usize).copied().unwrap_or(false)
    }
}

impl ClauseSink for Solver {
    fn new_var(&mut self) -> Var {
        let v = self.assigns.len() as Var;
        self.assigns.push(UNDEF);
        self.level.push(0);
        self.reason.push(None);
        self.activity.push(0.0);
        self.phase.push(false);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.heap.grow(self.assigns.len());
        self.heap.insert(v, &self.activity);
        v
    }

    fn add_clause(&mut self, lits: &[Lit]) {
        if !self.ok {
            return;
        }
        debug_assert_eq!(self.decision_level(), 0);
        for l in lits {
            self.ensure_var(l.var());
        }
        let mut c: Vec<Lit> = lits.to_vec();
        c.sort_unstable();
        c.dedup();
        let mut out = Vec::with_capacity(c.len());
        for (i, &l) in c.iter().enumerate() {
            if i + 1 < c.len() && c[i + 1] == !l {
                return; // tautology
            }
            match self.lit_value(l) {
                1 => return,
                0 => {}
                _ => out.push(l),
            }
        }
        match out.len() {
            0 => self.ok = false,
            1 => {
                self.enqueue(out[0], None);
                if self.propagate().is_some() {
                    self.ok = false;
                }
            }
            _ => {
                let cref = self.clauses.len() as u32;
                self.clauses.push(Clause {
                    lits: out,
                    learnt: false,
                    deleted: false,
                    lbd: 0,
                    activity: 0.0,
                });
                self.attach(cref);
                self.original_clauses += 1;
            }
        }
    }

    fn num_vars(&self) -> u32 {
        self.assigns.len() as u32
    }
}

impl SatBackend for Solver {
    fn solve(&mut self, assumptions: &[Lit]) -> SolveResult {
        self.solve_with(assumptions)
    }

    fn value(&self, var: Var) -> bool {
        self.model_value(var)
    }

    fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.deadline = deadline;
    }

    fn num_clauses(&self) -> usize {
        self.original_clauses
    }
}
