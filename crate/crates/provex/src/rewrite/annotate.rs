//! Propagation of T/F annotations from the question to goals and rules.

use super::unify::{Annotation, Unified};
use crate::datalog::Literal;
use crate::question::Qualifier;

/// Annotates root heads from the qualifier and propagates to a fixpoint:
/// T heads give T goals, F heads give FT goals, and negated goals pass the
/// inverted annotation to the rules deriving them. A copy reached with both
/// T and F is annotated FT, so no separate T and F copies remain.
pub fn annotate_program(unified: &Unified) -> Unified {
    let mut out = unified.clone();
    let start = match unified.question.qualifier {
        Qualifier::Why => Annotation::T,
        Qualifier::WhyNot => Annotation::F,
    };
    let mut queue = Vec::new();
    for &r in &out.roots {
        if raise(&mut out.copies[r].annotation, start) {
            queue.push(r);
        }
    }
    while let Some(i) = queue.pop() {
        let head = out.copies[i].annotation.expect("queued copies are annotated");
        let goal = match head {
            Annotation::T => Annotation::T,
            _ => Annotation::FT,
        };
        let copy = &mut out.copies[i];
        for (lit, slot) in copy.rule.body.iter().zip(copy.goal_annotations.iter_mut()) {
            if !lit.is_builtin() {
                *slot = Some(goal);
            }
        }
        let body = copy.rule.body.clone();
        for (k, lit) in body.iter().enumerate() {
            let pass = match lit {
                Literal::Neg(_) => goal.invert(),
                _ => goal,
            };
            let children: Vec<usize> = out.children(i, k).collect();
            for c in children {
                if raise(&mut out.copies[c].annotation, pass) {
                    queue.push(c);
                }
            }
        }
    }
    out
}

fn raise(slot: &mut Option<Annotation>, a: Annotation) -> bool {
    let new = slot.map_or(a, |old| old.join(a));
    let changed = *slot != Some(new);
    *slot = Some(new);
    changed
}
