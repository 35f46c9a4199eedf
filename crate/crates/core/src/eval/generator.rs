//! Synthetic plan traces from random walks over hand-written domains.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{ActionModel, Condition, Domain, Effect, LiftedKey};
use crate::error::EvalError;
use crate::pddl::parse_reference_domain;
use crate::trace::{ActionInstance, Atom, PlanTrace};

use super::replay::{apply, unsatisfied, WorldState};

const ROVER: &str = "(define (domain rover)
  (:requirements :typing :fluents)
  (:types rover waypoint - object)
  (:predicates (at ?r - rover ?w - waypoint) (scanned ?w - waypoint) (charger ?w - waypoint))
  (:functions (energy ?r - rover) (bat_usage ?r - rover) (dist ?a ?b - waypoint))
  (:action goto
    :parameters (?r - rover ?from - waypoint ?to - waypoint)
    :precondition (and (at ?r ?from) (>= (energy ?r) (* (dist ?from ?to) (bat_usage ?r))))
    :effect (and (not (at ?r ?from)) (at ?r ?to) (decrease (energy ?r) (* (dist ?from ?to) (bat_usage ?r)))))
  (:action scan
    :parameters (?r - rover ?w - waypoint)
    :precondition (and (at ?r ?w))
    :effect (and (scanned ?w)))
  (:action recharge
    :parameters (?r - rover ?w - waypoint)
    :precondition (and (at ?r ?w) (charger ?w))
    :effect (and (increase (energy ?r) 50))))";

const TRANSPORT: &str = "(define (domain transport)
  (:requirements :typing :fluents)
  (:types truck location package - object)
  (:predicates (at ?t - truck ?l - location) (pkg_at ?p - package ?l - location)
    (in ?p - package ?t - truck) (road ?a ?b - location) (station ?l - location))
  (:functions (fuel ?t - truck) (capacity ?t - truck) (fuel_cost ?a ?b - location) (carried ?t - truck))
  (:action drive
    :parameters (?t - truck ?from - location ?to - location)
    :precondition (and (at ?t ?from) (road ?from ?to) (>= (fuel ?t) (fuel_cost ?from ?to)))
    :effect (and (not (at ?t ?from)) (at ?t ?to) (decrease (fuel ?t) (fuel_cost ?from ?to))))
  (:action refuel
    :parameters (?t - truck ?l - location)
    :precondition (and (at ?t ?l) (station ?l))
    :effect (and (assign (fuel ?t) (capacity ?t))))
  (:action load
    :parameters (?p - package ?t - truck ?l - location)
    :precondition (and (pkg_at ?p ?l) (at ?t ?l))
    :effect (and (not (pkg_at ?p ?l)) (in ?p ?t) (increase (carried ?t) 1)))
  (:action unload
    :parameters (?p - package ?t - truck ?l - location)
    :precondition (and (in ?p ?t) (at ?t ?l))
    :effect (and (not (in ?p ?t)) (pkg_at ?p ?l) (decrease (carried ?t) 1))))";

const BLOCKS: &str = "(define (domain blocks)
  (:requirements :typing)
  (:types block - object)
  (:predicates (on ?x ?y - block) (ontable ?x - block) (clear ?x - block) (holding ?x - block) (handempty))
  (:action pickup
    :parameters (?x - block)
    :precondition (and (clear ?x) (ontable ?x) (handempty))
    :effect (and (not (ontable ?x)) (not (clear ?x)) (not (handempty)) (holding ?x)))
  (:action putdown
    :parameters (?x - block)
    :precondition (and (holding ?x))
    :effect (and (not (holding ?x)) (clear ?x) (handempty) (ontable ?x)))
  (:action stack
    :parameters (?x - block ?y - block)
    :precondition (and (holding ?x) (clear ?y))
    :effect (and (not (holding ?x)) (not (clear ?y)) (clear ?x) (handempty) (on ?x ?y)))
  (:action unstack
    :parameters (?x - block ?y - block)
    :precondition (and (on ?x ?y) (clear ?x) (handempty))
    :effect (and (holding ?x) (clear ?y) (not (clear ?x)) (not (handempty)) (not (on ?x ?y)))))";

/// The built-in generator domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    /// Rovers moving between waypoints at an energy cost of distance times
    /// battery usage, scanning and recharging.
    Rover,
    /// Trucks with fuel carrying packages over a road network.
    Transport,
    /// Classic four-operator blocks world, no fluents.
    Blocks,
}

impl Builtin {
    pub const ALL: [Builtin; 3] = [Builtin::Rover, Builtin::Transport, Builtin::Blocks];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Rover => "rover",
            Builtin::Transport => "transport",
            Builtin::Blocks => "blocks",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Builtin::ALL.into_iter().find(|b| b.name() == s)
    }

    pub fn pddl(self) -> &'static str {
        match self {
            Builtin::Rover => ROVER,
            Builtin::Transport => TRANSPORT,
            Builtin::Blocks => BLOCKS,
        }
    }

    pub fn domain(self) -> Domain {
        parse_reference_domain(self.pddl()).expect("built-in domain parses")
    }

    fn problem(self, rng: &mut ChaCha8Rng) -> Problem {
        let mut p = Problem::default();
        match self {
            Builtin::Rover => {
                let rovers = p.objects("rover", "rov", rng.gen_range(1..=2));
                let wps = p.objects("waypoint", "wp", rng.gen_range(3..=5));
                for r in &rovers {
                    p.truth(Atom::new("at", [r, wps.choose(rng).unwrap()]));
                    p.value(Atom::new("energy", [r]), rng.gen_range(60..=200));
                    p.value(Atom::new("bat_usage", [r]), rng.gen_range(2..=9));
                }
                let charger = wps.choose(rng).unwrap().clone();
                for w in &wps {
                    if *w == charger || rng.gen_bool(0.3) {
                        p.truth(Atom::new("charger", [w]));
                    }
                    for v in &wps {
                        if v != w {
                            p.value(Atom::new("dist", [w, v]), rng.gen_range(1..=9));
                        }
                    }
                }
            }
            Builtin::Transport => {
                let trucks = p.objects("truck", "truck", rng.gen_range(1..=2));
                let locs = p.objects("location", "loc", rng.gen_range(3..=5));
                let pkgs = p.objects("package", "pkg", rng.gen_range(1..=3));
                for (i, a) in locs.iter().enumerate() {
                    let next = &locs[(i + 1) % locs.len()];
                    for b in &locs {
                        if a != b {
                            if b == next || rng.gen_bool(0.4) {
                                p.truth(Atom::new("road", [a, b]));
                            }
                            p.value(Atom::new("fuel_cost", [a, b]), rng.gen_range(1..=9));
                        }
                    }
                }
                let station = locs.choose(rng).unwrap().clone();
                for l in &locs {
                    if *l == station || rng.gen_bool(0.3) {
                        p.truth(Atom::new("station", [l]));
                    }
                }
                for t in &trucks {
                    let capacity = rng.gen_range(20..=60);
                    p.truth(Atom::new("at", [t, locs.choose(rng).unwrap()]));
                    p.value(Atom::new("capacity", [t]), capacity);
                    p.value(Atom::new("fuel", [t]), rng.gen_range(5..=capacity));
                    p.value(Atom::new("carried", [t]), 0);
                }
                for k in &pkgs {
                    p.truth(Atom::new("pkg_at", [k, locs.choose(rng).unwrap()]));
                }
            }
            Builtin::Blocks => {
                let blocks = p.objects("block", "b", rng.gen_range(3..=5));
                let mut order = blocks.clone();
                order.shuffle(rng);
                let mut tops: Vec<String> = Vec::new();
                for b in order {
                    match tops.iter().position(|_| rng.gen_bool(0.5)) {
                        Some(i) => {
                            p.truth(Atom::new("on", [&b, &tops[i]]));
                            tops[i] = b;
                        }
                        None => {
                            p.truth(Atom::new("ontable", [&b]));
                            tops.push(b);
                        }
                    }
                }
                for b in &tops {
                    p.truth(Atom::new("clear", [b]));
                }
                p.truth(Atom::new("handempty", Vec::<String>::new()));
            }
        }
        p
    }
}

#[derive(Default)]
struct Problem {
    objects: BTreeMap<String, String>,
    state: WorldState,
}

impl Problem {
    fn objects(&mut self, ty: &str, prefix: &str, n: usize) -> Vec<String> {
        (1..=n)
            .map(|i| {
                let name = format!("{prefix}{i}");
                self.objects.insert(name.clone(), ty.to_string());
                name
            })
            .collect()
    }

    fn truth(&mut self, atom: Atom) {
        self.state.literals.insert(atom, true);
    }

    fn value(&mut self, atom: Atom, v: i64) {
        self.state.fluents.insert(atom, v as f64);
    }
}

/// Random-walk policy parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub builtin: Builtin,
    pub domain: Domain,
    pub min_length: usize,
    pub max_length: usize,
    /// Never pick an action whose effects leave the state unchanged.
    pub skip_noops: bool,
    /// Fresh initial states tried before a dead end becomes an error.
    pub attempts: usize,
}

impl GeneratorSpec {
    pub fn new(builtin: Builtin) -> Self {
        GeneratorSpec {
            builtin,
            domain: builtin.domain(),
            min_length: 5,
            max_length: 20,
            skip_noops: true,
            attempts: 50,
        }
    }

    pub fn with_length(mut self, min: usize, max: usize) -> Self {
        self.min_length = min;
        self.max_length = max.max(min);
        self
    }
}

/// Predicate name to the argument types it is used with.
fn predicate_signatures(d: &Domain) -> BTreeMap<String, Vec<String>> {
    let mut out = BTreeMap::new();
    let mut record = |m: &ActionModel, k: &LiftedKey| {
        out.entry(k.name.clone())
            .or_insert_with(|| k.params.iter().map(|&p| m.parameters[p].clone()).collect());
    };
    for m in d.actions.values() {
        for c in &m.preconditions {
            if let Condition::Literal { atom, .. } = c {
                record(m, atom);
            }
        }
        for e in &m.effects {
            if let Effect::Add(k) | Effect::Delete(k) = e {
                record(m, k);
            }
        }
    }
    out
}

fn typed<'a>(objects: &'a BTreeMap<String, String>, ty: &str) -> Vec<&'a String> {
    objects
        .iter()
        .filter(|(_, t)| ty == "object" || t.as_str() == ty)
        .map(|(o, _)| o)
        .collect()
}

/// Every tuple of pairwise distinct objects matching `types`.
fn tuples(objects: &BTreeMap<String, String>, types: &[String]) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    for ty in types {
        let pool = typed(objects, ty);
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<String>| {
                pool.iter()
                    .filter(|o| !prefix.contains(o))
                    .map(|o| {
                        let mut t = prefix.clone();
                        t.push((*o).clone());
                        t
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    out
}

/// Makes the state closed-world explicit: every groundable predicate atom
/// gets a recorded truth value.
fn close_world(
    state: &mut WorldState,
    objects: &BTreeMap<String, String>,
    sigs: &BTreeMap<String, Vec<String>>,
) {
    for (name, types) in sigs {
        let mut args = vec![Vec::new()];
        for ty in types {
            let pool = typed(objects, ty);
            args = args
                .into_iter()
                .flat_map(|p: Vec<String>| {
                    pool.iter()
                        .map(|o| {
                            let mut t = p.clone();
                            t.push((*o).clone());
                            t
                        })
                        .collect::<Vec<_>>()
                })
                .collect();
        }
        // Matches the groundings: an atom repeating an object never changes.
        for a in args
            .into_iter()
            .filter(|a| a.iter().collect::<BTreeSet<_>>().len() == a.len())
        {
            state
                .literals
                .entry(Atom {
                    name: name.clone(),
                    args: a,
                })
                .or_insert(false);
        }
    }
}

fn walk(
    spec: &GeneratorSpec,
    problem: &Problem,
    length: usize,
    rng: &mut ChaCha8Rng,
) -> Result<PlanTrace, usize> {
    let mut state = problem.state.clone();
    close_world(
        &mut state,
        &problem.objects,
        &predicate_signatures(&spec.domain),
    );
    let groundings: Vec<(&ActionModel, Vec<String>)> = spec
        .domain
        .actions
        .values()
        .flat_map(|m| {
            tuples(&problem.objects, &m.parameters)
                .into_iter()
                .map(move |args| (m, args))
        })
        .collect();
    let mut trace = PlanTrace {
        objects: problem.objects.clone(),
        actions: Vec::new(),
        states: vec![state.to_state(0)],
    };
    for step in 0..length {
        let mut options = Vec::new();
        for (m, args) in &groundings {
            let inst = ActionInstance {
                name: m.name.clone(),
                args: args.clone(),
                start: step,
                end: step + 1,
            };
            if !matches!(unsatisfied(m, &state, &inst), Ok(None)) {
                continue;
            }
            let Ok(next) = apply(m, &state, &inst) else {
                continue;
            };
            if spec.skip_noops && next == state {
                continue;
            }
            options.push((inst, next));
        }
        if options.is_empty() {
            if step >= spec.min_length {
                break;
            }
            return Err(step);
        }
        let (inst, next) = options.swap_remove(rng.gen_range(0..options.len()));
        state = next;
        trace.actions.push(inst);
        trace.states.push(state.to_state(step + 1));
    }
    Ok(trace)
}

/// Generates `n` traces, each from its own random initial state, by picking
/// uniformly among the applicable actions until the sampled walk length is
/// reached. A walk that gets stuck before `min_length` restarts from a new
/// initial state; after `attempts` failures the problem is a dead end.
pub fn generate_traces(
    spec: &GeneratorSpec,
    n: usize,
    seed: u64,
) -> Result<Vec<PlanTrace>, EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for problem_index in 0..n {
        let mut last_steps = 0;
        let mut trace = None;
        for _ in 0..spec.attempts.max(1) {
            let problem = spec.builtin.problem(&mut rng);
            let length = rng.gen_range(spec.min_length..=spec.max_length);
            match walk(spec, &problem, length, &mut rng) {
                Ok(t) => {
                    trace = Some(t);
                    break;
                }
                Err(steps) => last_steps = steps,
            }
        }
        out.push(trace.ok_or(EvalError::DeadEnd {
            problem: problem_index,
            steps: last_steps,
        })?);
    }
    Ok(out)
}

/// Distinct action names across traces.
pub fn action_names(traces: &[PlanTrace]) -> BTreeSet<String> {
    traces
        .iter()
        .flat_map(|t| t.actions.iter().map(|a| a.name.clone()))
        .collect()
}
