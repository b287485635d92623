//! The selector map for MARCO: one boolean per feature, a growing clause set,
//! and a small DPLL solver that hands out unexplored seeds.

use crate::subset::FeatureSubset;

/// A literal over selector `var`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lit {
    pub var: usize,
    pub positive: bool,
}

/// Which extreme of the unexplored region seeds are pushed towards.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SeedPolicy {
    /// Every selector not forced false is set true.
    #[default]
    Maximal,
    /// Every selector not forced true is set false.
    Minimal,
}

#[derive(Clone, Debug)]
pub struct MapSolver {
    n: usize,
    clauses: Vec<Vec<Lit>>,
    policy: SeedPolicy,
    solves: u64,
}

impl MapSolver {
    pub fn new(n: usize, policy: SeedPolicy) -> Self {
        MapSolver {
            n,
            clauses: Vec::new(),
            policy,
            solves: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    /// Number of seed requests answered so far.
    pub fn solves(&self) -> u64 {
        self.solves
    }

    pub fn add_clause(&mut self, clause: Vec<Lit>) {
        debug_assert!(clause.iter().all(|l| l.var < self.n));
        self.clauses.push(clause);
    }

    /// Forbids every superset of `axp`.
    pub fn block_up(&mut self, axp: FeatureSubset) {
        self.add_clause(axp.iter().map(|var| Lit { var, positive: false }).collect());
    }

    /// Forces future seeds to pick at least one member of `cxp`, which forbids
    /// every subset of its complement.
    pub fn block_down(&mut self, cxp: FeatureSubset) {
        self.add_clause(cxp.iter().map(|var| Lit { var, positive: true }).collect());
    }

    /// An assignment satisfying every clause, pushed to the policy's extreme,
    /// or `None` once the map is exhausted.
    pub fn next_seed(&mut self) -> Option<FeatureSubset> {
        self.solves += 1;
        let mut assign = vec![None; self.n];
        let prefer = self.policy == SeedPolicy::Maximal;
        if !dpll(&self.clauses, &mut assign, prefer) {
            return None;
        }
        let mut values: Vec<bool> = assign.iter().map(|a| a.unwrap_or(prefer)).collect();
        // Flip towards the preferred polarity while no clause breaks.
        for v in 0..self.n {
            if values[v] == prefer {
                continue;
            }
            values[v] = prefer;
            if !self.clauses.iter().all(|c| satisfied(c, &values)) {
                values[v] = !prefer;
            }
        }
        Some(FeatureSubset::from_indices((0..self.n).filter(|&v| values[v])))
    }
}

fn satisfied(clause: &[Lit], values: &[bool]) -> bool {
    clause.iter().any(|l| values[l.var] == l.positive)
}

enum ClauseState {
    Satisfied,
    Conflict,
    Unit(Lit),
    Open,
}

fn clause_state(clause: &[Lit], assign: &[Option<bool>]) -> ClauseState {
    let mut unassigned = None;
    let mut open = 0;
    for l in clause {
        match assign[l.var] {
            Some(v) if v == l.positive => return ClauseState::Satisfied,
            Some(_) => {}
            None => {
                open += 1;
                unassigned = Some(*l);
            }
        }
    }
    match (open, unassigned) {
        (0, _) => ClauseState::Conflict,
        (1, Some(l)) => ClauseState::Unit(l),
        _ => ClauseState::Open,
    }
}

fn dpll(clauses: &[Vec<Lit>], assign: &mut Vec<Option<bool>>, prefer: bool) -> bool {
    // Unit propagation to a fixpoint.
    loop {
        let mut changed = false;
        for c in clauses {
            match clause_state(c, assign) {
                ClauseState::Conflict => return false,
                ClauseState::Unit(l) => {
                    assign[l.var] = Some(l.positive);
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            break;
        }
    }
    let Some(var) = clauses
        .iter()
        .filter(|c| matches!(clause_state(c, assign), ClauseState::Open))
        .flat_map(|c| c.iter())
        .find(|l| assign[l.var].is_none())
        .map(|l| l.var)
    else {
        return true;
    };
    for value in [prefer, !prefer] {
        let mut trial = assign.clone();
        trial[var] = Some(value);
        if dpll(clauses, &mut trial, prefer) {
            *assign = trial;
            return true;
        }
    }
    false
}
