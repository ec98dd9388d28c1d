use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{Configuration, SystemModel};

/// Formulas of the modal logic with one-step intervention and separation.
/// Every reference is by name, so a formula can be evaluated on any model
/// sharing the vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Formula {
    True,
    False,
    Atom(String),
    BehaviourAtom {
        component: String,
        behaviour: String,
    },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Box(Box<Formula>),
    Diamond(Box<Formula>),
    /// Every configuration reachable in one or more steps.
    BoxPlus(Box<Formula>),
    /// Some configuration reachable in one or more steps.
    DiamondPlus(Box<Formula>),
    /// Apply the named intervention, then take one step in the intervened model.
    Intervene(String, Box<Formula>),
    /// Some declared intervention satisfies `Intervene(θ, φ)`.
    InterveneExists(Box<Formula>),
    Star(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(name: &str) -> Formula {
        Formula::Atom(name.to_string())
    }

    pub fn is(component: &str, behaviour: &str) -> Formula {
        Formula::BehaviourAtom {
            component: component.to_string(),
            behaviour: behaviour.to_string(),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Formula {
        Formula::Not(Box::new(self))
    }

    pub fn and(self, other: Formula) -> Formula {
        Formula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Formula) -> Formula {
        Formula::Or(Box::new(self), Box::new(other))
    }

    pub fn implies(self, other: Formula) -> Formula {
        Formula::Implies(Box::new(self), Box::new(other))
    }

    pub fn boxed(self) -> Formula {
        Formula::Box(Box::new(self))
    }

    pub fn diamond(self) -> Formula {
        Formula::Diamond(Box::new(self))
    }

    pub fn box_plus(self) -> Formula {
        Formula::BoxPlus(Box::new(self))
    }

    pub fn diamond_plus(self) -> Formula {
        Formula::DiamondPlus(Box::new(self))
    }

    pub fn intervene(theta: &str, body: Formula) -> Formula {
        Formula::Intervene(theta.to_string(), Box::new(body))
    }

    pub fn star(self, other: Formula) -> Formula {
        Formula::Star(Box::new(self), Box::new(other))
    }

    /// Conjunction of a list; `True` when empty.
    pub fn all(parts: impl IntoIterator<Item = Formula>) -> Formula {
        parts.into_iter().reduce(Formula::and).unwrap_or(Formula::True)
    }

    /// Disjunction of a list; `False` when empty.
    pub fn any(parts: impl IntoIterator<Item = Formula>) -> Formula {
        parts.into_iter().reduce(Formula::or).unwrap_or(Formula::False)
    }

    /// The characteristic formula of `f`: true exactly at `f`.
    pub fn characteristic(model: &SystemModel, f: &Configuration) -> Formula {
        Formula::all(
            f.0.iter()
                .enumerate()
                .map(|(c, &b)| Formula::is(&model.component(c).name, model.behaviour_name(c, b))),
        )
    }

    pub fn contains_star(&self) -> bool {
        match self {
            Formula::Star(..) => true,
            _ => self.children().iter().any(|c| c.contains_star()),
        }
    }

    /// Nesting depth of modal and intervention operators.
    pub fn modal_depth(&self) -> usize {
        let inner = self.children().iter().map(|c| c.modal_depth()).max().unwrap_or(0);
        match self {
            Formula::Box(_)
            | Formula::Diamond(_)
            | Formula::BoxPlus(_)
            | Formula::DiamondPlus(_)
            | Formula::Intervene(..)
            | Formula::InterveneExists(_) => inner + 1,
            _ => inner,
        }
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) | Formula::BehaviourAtom { .. } => vec![],
            Formula::Not(a)
            | Formula::Box(a)
            | Formula::Diamond(a)
            | Formula::BoxPlus(a)
            | Formula::DiamondPlus(a)
            | Formula::Intervene(_, a)
            | Formula::InterveneExists(a) => vec![a],
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Star(a, b) => vec![a, b],
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }
}

fn quote(s: &str) -> String {
    let plain = !s.is_empty()
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !matches!(s, "true" | "false" | "chi");
    if plain {
        s.to_string()
    } else {
        format!("{:?}", s)
    }
}

/// A name as it must be written in the document syntax, quoted when it is
/// not a plain identifier.
pub fn ident(s: &str) -> String {
    quote(s)
}

/// Prints in the document syntax, parenthesizing every binary operator so the
/// output parses back to the same tree.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Atom(p) => f.write_str(&quote(p)),
            Formula::BehaviourAtom { component, behaviour } => {
                write!(f, "p[{}={}]", quote(component), quote(behaviour))
            }
            Formula::Not(a) => write!(f, "!{a}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Implies(a, b) => write!(f, "({a} -> {b})"),
            Formula::Box(a) => write!(f, "[]{a}"),
            Formula::Diamond(a) => write!(f, "<>{a}"),
            Formula::BoxPlus(a) => write!(f, "[]+{a}"),
            Formula::DiamondPlus(a) => write!(f, "<>+{a}"),
            Formula::Intervene(t, a) => write!(f, "<{}>{a}", quote(t)),
            Formula::InterveneExists(a) => write!(f, "<?>{a}"),
            Formula::Star(a, b) => write!(f, "({a}) * ({b})"),
        }
    }
}
