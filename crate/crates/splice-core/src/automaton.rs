//! API-call-sequence constraints as deterministic finite automata over
//! (function name, optional receiver type) event patterns.
//!
//! File format (`.aut`), line oriented:
//!
//! ```text
//! states: s0 s1 s2
//! start: s0
//! accept: s2
//! wildcard: on
//! trans: s0 open s1
//! trans: s1 read@File s2
//! ```

use std::collections::BTreeSet;

use thiserror::Error;

use crate::interp::ApiEvent;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct EventPattern {
    pub fname: String,
    pub receiver: Option<String>,
}

impl EventPattern {
    pub fn matches(&self, ev: &ApiEvent) -> bool {
        self.fname == ev.fname
            && match &self.receiver {
                None => true,
                Some(r) => ev.receiver_type.as_deref() == Some(r.as_str()),
            }
    }

    /// Two patterns overlap when some event matches both.
    fn overlaps(&self, other: &EventPattern) -> bool {
        self.fname == other.fname
            && match (&self.receiver, &other.receiver) {
                (Some(a), Some(b)) => a == b,
                _ => true,
            }
    }
}

#[derive(Debug, Clone)]
pub struct ApiAutomaton {
    pub states: Vec<String>,
    pub start: usize,
    pub accepting: BTreeSet<usize>,
    pub transitions: Vec<(usize, EventPattern, usize)>,
    /// When set, events matching no alphabet pattern are ignored; events that
    /// are in the alphabet but have no transition from the current state
    /// still reject.
    pub wildcard_self_loop: bool,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AutomatonError {
    #[error("automaton line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("automaton is nondeterministic: state `{state}` has overlapping patterns for `{fname}`")]
    Nondeterministic { state: String, fname: String },
    #[error("automaton is missing a `{0}` section")]
    MissingSection(&'static str),
}

impl ApiAutomaton {
    /// Patterns appearing on any transition.
    pub fn alphabet(&self) -> BTreeSet<&EventPattern> {
        self.transitions.iter().map(|(_, p, _)| p).collect()
    }

    pub fn check(&self, trace: &[ApiEvent]) -> bool {
        let mut state = self.start;
        for ev in trace {
            let next = self
                .transitions
                .iter()
                .find(|(from, pat, _)| *from == state && pat.matches(ev))
                .map(|(_, _, to)| *to);
            match next {
                Some(to) => state = to,
                None => {
                    let in_alphabet = self.transitions.iter().any(|(_, p, _)| p.matches(ev));
                    if in_alphabet || !self.wildcard_self_loop {
                        return false;
                    }
                    // unconstrained event: stay
                }
            }
        }
        self.accepting.contains(&state)
    }

    pub fn parse(text: &str) -> Result<ApiAutomaton, AutomatonError> {
        let mut states: Option<Vec<String>> = None;
        let mut start: Option<String> = None;
        let mut accept: Vec<String> = Vec::new();
        let mut wildcard = true;
        let mut raw_trans: Vec<(usize, String, String, String)> = Vec::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| AutomatonError::Parse {
                line: lineno + 1,
                message,
            };
            let (key, rest) = line
                .split_once(':')
                .ok_or_else(|| err("expected `key: value`".into()))?;
            let rest = rest.trim();
            match key.trim() {
                "states" => {
                    states = Some(rest.split_whitespace().map(str::to_string).collect());
                }
                "start" => start = Some(rest.to_string()),
                "accept" => {
                    accept.extend(rest.split_whitespace().map(str::to_string));
                }
                "wildcard" => {
                    wildcard = match rest {
                        "on" => true,
                        "off" => false,
                        other => return Err(err(format!("expected on|off, found `{other}`"))),
                    }
                }
                "trans" => {
                    let parts: Vec<&str> = rest.split_whitespace().collect();
                    if parts.len() != 3 {
                        return Err(err("expected `trans: <from> <event> <to>`".into()));
                    }
                    raw_trans.push((
                        lineno + 1,
                        parts[0].to_string(),
                        parts[1].to_string(),
                        parts[2].to_string(),
                    ));
                }
                other => return Err(err(format!("unknown section `{other}`"))),
            }
        }

        let states = states.ok_or(AutomatonError::MissingSection("states"))?;
        let start_name = start.ok_or(AutomatonError::MissingSection("start"))?;
        let state_index = |name: &str, line: usize| {
            states
                .iter()
                .position(|s| s == name)
                .ok_or(AutomatonError::Parse {
                    line,
                    message: format!("unknown state `{name}`"),
                })
        };
        let start = state_index(&start_name, 0).map_err(|_| AutomatonError::Parse {
            line: 0,
            message: format!("unknown start state `{start_name}`"),
        })?;
        let mut accepting = BTreeSet::new();
        for name in &accept {
            accepting.insert(state_index(name, 0).map_err(|_| AutomatonError::Parse {
                line: 0,
                message: format!("unknown accept state `{name}`"),
            })?);
        }
        let mut transitions = Vec::new();
        for (line, from, event, to) in raw_trans {
            let from = state_index(&from, line)?;
            let to = state_index(&to, line)?;
            let pattern = match event.split_once('@') {
                Some((f, r)) => EventPattern {
                    fname: f.to_string(),
                    receiver: Some(r.to_string()),
                },
                None => EventPattern {
                    fname: event,
                    receiver: None,
                },
            };
            transitions.push((from, pattern, to));
        }

        // determinism: no state may carry overlapping patterns
        for (i, (from_a, pat_a, _)) in transitions.iter().enumerate() {
            for (from_b, pat_b, _) in &transitions[i + 1..] {
                if from_a == from_b && pat_a.overlaps(pat_b) {
                    return Err(AutomatonError::Nondeterministic {
                        state: states[*from_a].clone(),
                        fname: pat_a.fname.clone(),
                    });
                }
            }
        }

        Ok(ApiAutomaton {
            states,
            start,
            accepting,
            transitions,
            wildcard_self_loop: wildcard,
        })
    }
}

/// Trace acceptance, free-function form.
pub fn check_automaton(trace: &[ApiEvent], a: &ApiAutomaton) -> bool {
    a.check(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(fname: &str, receiver: Option<&str>) -> ApiEvent {
        ApiEvent {
            fname: fname.into(),
            arg_types: vec![],
            receiver_type: receiver.map(str::to_string),
            seq: 0,
        }
    }

    fn face() -> ApiAutomaton {
        ApiAutomaton::parse(
            "states: s0 s1 s2 s3 s4 s5\n\
             start: s0\n\
             accept: s5\n\
             wildcard: on\n\
             trans: s0 newClassifier s1\n\
             trans: s1 imread s2\n\
             trans: s2 detectMultiScale@Classifier s3\n\
             trans: s3 rectangle s4\n\
             trans: s4 imwrite s5\n",
        )
        .unwrap()
    }

    #[test]
    fn accepts_expected_call_order() {
        let a = face();
        let trace = vec![
            ev("newClassifier", None),
            ev("imread", None),
            ev("detectMultiScale", Some("Classifier")),
            ev("rectangle", None),
            ev("imwrite", None),
        ];
        assert!(a.check(&trace));
    }

    #[test]
    fn rejects_permuted_order() {
        let a = face();
        let trace = vec![
            ev("newClassifier", None),
            ev("imread", None),
            ev("imwrite", None),
            ev("detectMultiScale", Some("Classifier")),
            ev("rectangle", None),
        ];
        assert!(!a.check(&trace));
    }

    #[test]
    fn empty_trace_rejected_when_start_not_accepting() {
        let a = face();
        assert!(!a.check(&[]));
    }

    #[test]
    fn wildcard_ignores_unconstrained_events() {
        let a = face();
        let trace = vec![
            ev("newClassifier", None),
            ev("readFile", None), // not in the alphabet: ignored
            ev("imread", None),
            ev("detectMultiScale", Some("Classifier")),
            ev("rectangle", None),
            ev("imwrite", None),
        ];
        assert!(a.check(&trace));
    }

    #[test]
    fn wildcard_off_rejects_unconstrained_events() {
        let mut a = face();
        a.wildcard_self_loop = false;
        let trace = vec![ev("newClassifier", None), ev("readFile", None)];
        assert!(!a.check(&trace));
    }

    #[test]
    fn receiver_pattern_requires_matching_receiver() {
        let a = face();
        let trace = vec![
            ev("newClassifier", None),
            ev("imread", None),
            ev("detectMultiScale", Some("Image")),
        ];
        // wrong receiver: event is alphabet-adjacent but matches no pattern
        // of fname+receiver, so the wildcard rule applies; it is not in the
        // alphabet under this receiver, hence ignored, ending mid-automaton.
        assert!(!a.check(&trace));
    }

    #[test]
    fn overlapping_patterns_rejected_at_parse() {
        let e = ApiAutomaton::parse(
            "states: a b\nstart: a\naccept: b\n\
             trans: a open b\ntrans: a open@File b\n",
        )
        .unwrap_err();
        assert!(matches!(e, AutomatonError::Nondeterministic { .. }));
    }
}
