use std::collections::BTreeMap;

use super::document::{Document, Query};
use super::lexer::{lex, Tok};
use super::{Diagnostic, Diagnostics, Span};
use crate::logic::Formula;
use crate::model::{
    AtomSpec, AtomSpecDef, ComponentSpec, InterventionSpec, ModelSpec, Pattern, RowSpec, SystemModel, TargetSpec,
    TransitionMode,
};

type PResult<T> = Result<T, Diagnostic>;

/// A reference to check once the whole model is known.
enum Pending {
    Atom(String, Span),
    Intervention(String, Span),
    Behaviour(String, String, Span),
    Component(String, Span),
}

/// A config as written: name, `component=behaviour` pairs and location.
type RawConfig = (String, Vec<(String, String)>, Span);

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    spec: ModelSpec,
    spans: BTreeMap<String, Span>,
    raw_configs: Vec<RawConfig>,
    formulas: Vec<(String, Formula)>,
    queries: Vec<(Query, Span)>,
    pending: Vec<Pending>,
    diags: Vec<Diagnostic>,
}

pub fn parse(src: &str) -> Result<Document, Diagnostics> {
    let toks = lex(src).map_err(|d| Diagnostics(vec![d]))?;
    let mut p = Parser {
        toks,
        pos: 0,
        spec: ModelSpec::default(),
        spans: BTreeMap::new(),
        raw_configs: Vec::new(),
        formulas: Vec::new(),
        queries: Vec::new(),
        pending: Vec::new(),
        diags: Vec::new(),
    };
    while p.peek() != &Tok::Eof {
        if let Err(d) = p.statement() {
            p.diags.push(d);
            p.recover();
        }
    }
    p.finish()
}

/// A parser over `src` that already knows the names declared in `doc`.
fn against(src: &str, doc: &Document) -> Result<Parser, Diagnostics> {
    let toks = lex(src).map_err(|d| Diagnostics(vec![d]))?;
    Ok(Parser {
        toks,
        pos: 0,
        spec: doc.model.to_spec(),
        spans: BTreeMap::new(),
        raw_configs: doc
            .configs
            .iter()
            .map(|(n, f)| {
                let pairs =
                    f.0.iter()
                        .enumerate()
                        .map(|(c, &b)| {
                            (
                                doc.model.component(c).name.clone(),
                                doc.model.behaviour_name(c, b).to_string(),
                            )
                        })
                        .collect();
                (n.clone(), pairs, Span::default())
            })
            .collect(),
        formulas: doc.formulas.clone(),
        queries: Vec::new(),
        pending: Vec::new(),
        diags: Vec::new(),
    })
}

/// Parse a standalone formula against a document's names.
pub fn parse_formula(src: &str, doc: &Document) -> Result<Formula, Diagnostics> {
    let mut p = against(src, doc)?;
    let phi = p.formula().map_err(|d| Diagnostics(vec![d]))?;
    if p.peek() != &Tok::Eof {
        return Err(Diagnostics(vec![p.unexpected("end of formula")]));
    }
    p.check_pending(&doc.model);
    if !p.diags.is_empty() {
        return Err(Diagnostics(p.diags));
    }
    Ok(phi)
}

/// Parse one query stanza, such as `check f |= <>p;`, against a document's
/// names. The trailing `;` is optional.
pub fn parse_query(src: &str, doc: &Document) -> Result<Query, Diagnostics> {
    let mut p = against(src, doc)?;
    let sp = p.span();
    let kw = match p.advance() {
        Tok::Ident(s) if QUERY_KEYWORDS.contains(&s.as_str()) => s,
        t => {
            return Err(Diagnostics(vec![Diagnostic::new(
                sp,
                format!("expected a query, found {}", t.describe()),
            )]))
        }
    };
    let q = p.query(&kw).map_err(|d| Diagnostics(vec![d]))?;
    if p.peek() == &Tok::Semi {
        p.advance();
    }
    if p.peek() != &Tok::Eof {
        return Err(Diagnostics(vec![p.unexpected("end of query")]));
    }
    p.check_pending(&doc.model);
    if !p.diags.is_empty() {
        return Err(Diagnostics(p.diags));
    }
    Ok(q)
}

const QUERY_KEYWORDS: [&str; 8] = [
    "check",
    "cause",
    "chain",
    "bisim",
    "decompose",
    "recover",
    "mincost",
    "utility",
];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, wanted: &str) -> Diagnostic {
        Diagnostic::new(
            self.span(),
            format!("expected {wanted}, found {}", self.peek().describe()),
        )
    }

    fn expect(&mut self, t: Tok) -> PResult<()> {
        if *self.peek() == t {
            self.advance();
            Ok(())
        } else {
            Err(self.unexpected(&t.describe()))
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.advance();
            true
        } else {
            false
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn name(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) | Tok::Str(s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.unexpected("a name")),
        }
    }

    fn number(&mut self) -> PResult<f64> {
        let sp = self.span();
        match self.advance() {
            Tok::Num(n) => Ok(n),
            Tok::Ident(s) if s.chars().all(|c| c.is_ascii_digit()) => {
                s.parse().map_err(|_| Diagnostic::new(sp, format!("bad number `{s}`")))
            }
            t => Err(Diagnostic::new(
                sp,
                format!("expected a number, found {}", t.describe()),
            )),
        }
    }

    fn name_list(&mut self, close: Tok) -> PResult<Vec<String>> {
        let mut out = Vec::new();
        if self.eat(&close) {
            return Ok(out);
        }
        loop {
            out.push(self.name()?);
            if self.eat(&close) {
                return Ok(out);
            }
            self.expect(Tok::Comma)?;
        }
    }

    /// `{a, b}`, with every name checked as a component.
    fn component_set(&mut self) -> PResult<Vec<String>> {
        let sp = self.span();
        self.expect(Tok::LBrace)?;
        let names = self.name_list(Tok::RBrace)?;
        for n in &names {
            self.pending.push(Pending::Component(n.clone(), sp));
        }
        Ok(names)
    }

    /// Skip to just past the next `;` or `}` at statement level.
    fn recover(&mut self) {
        let mut depth = 0usize;
        loop {
            match self.advance() {
                Tok::Eof => return,
                Tok::LBrace => depth += 1,
                Tok::RBrace => {
                    if depth <= 1 {
                        return;
                    }
                    depth -= 1;
                }
                Tok::Semi if depth == 0 => return,
                _ => {}
            }
        }
    }

    fn declare(&mut self, kind: &str, name: &str, sp: Span) -> PResult<()> {
        let key = format!("{kind} {name}");
        if let Some(prev) = self.spans.get(&key) {
            return Err(Diagnostic::new(
                sp,
                format!(
                    "{kind} `{name}` already declared at line {}, column {}",
                    prev.line, prev.col
                ),
            ));
        }
        self.spans.insert(key, sp);
        Ok(())
    }

    fn statement(&mut self) -> PResult<()> {
        let sp = self.span();
        let kw = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => return Err(self.unexpected("a statement")),
        };
        self.advance();
        match kw.as_str() {
            "model" => {
                self.spec.name = Some(self.name()?);
                self.expect(Tok::Semi)
            }
            "mode" => {
                let m = self.name()?;
                self.spec.settings.mode = match m.as_str() {
                    "async" => TransitionMode::Async,
                    "sync" => TransitionMode::Sync,
                    _ => return Err(Diagnostic::new(sp, format!("unknown mode `{m}`; use async or sync"))),
                };
                self.expect(Tok::Semi)
            }
            "option" => {
                let o = self.name()?;
                let s = &mut self.spec.settings;
                match o.as_str() {
                    "self_loops" => s.self_loops = true,
                    "allow_trivial_split" => s.allow_trivial_split = true,
                    "literal_interface" => s.literal_interface = true,
                    "max_states" => self.spec.settings.max_states = self.number()? as usize,
                    _ => return Err(Diagnostic::new(sp, format!("unknown option `{o}`"))),
                }
                self.expect(Tok::Semi)
            }
            "component" => self.component(sp),
            "atom" => self.atom(sp),
            "intervention" => self.intervention(sp),
            "config" => {
                let name = self.name()?;
                self.declare("configuration", &name, sp)?;
                self.expect(Tok::Eq)?;
                let pairs = self.assignment()?;
                self.expect(Tok::Semi)?;
                self.raw_configs.push((name, pairs, sp));
                Ok(())
            }
            "formula" => {
                let name = self.name()?;
                self.declare("formula", &name, sp)?;
                self.expect(Tok::Eq)?;
                let phi = self.formula()?;
                self.expect(Tok::Semi)?;
                self.formulas.push((name, phi));
                Ok(())
            }
            k if QUERY_KEYWORDS.contains(&k) => {
                let q = self.query(&kw)?;
                self.expect(Tok::Semi)?;
                self.queries.push((q, sp));
                Ok(())
            }
            _ => Err(Diagnostic::new(sp, format!("unknown statement `{kw}`"))),
        }
    }

    fn pattern(&mut self) -> PResult<Pattern<String>> {
        let n = self.name()?;
        Ok(if n == "_" { Pattern::Any } else { Pattern::Is(n) })
    }

    /// `rule own [(p, ...)] -> out;` after the `rule` keyword.
    fn row(&mut self) -> PResult<RowSpec> {
        let own = self.pattern()?;
        let mut context = Vec::new();
        if self.eat(&Tok::LParen) && !self.eat(&Tok::RParen) {
            loop {
                context.push(self.pattern()?);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma)?;
            }
        }
        self.expect(Tok::Arrow)?;
        let output = self.name()?;
        self.expect(Tok::Semi)?;
        Ok(RowSpec { own, context, output })
    }

    fn component(&mut self, sp: Span) -> PResult<()> {
        let name = self.name()?;
        self.declare("component", &name, sp)?;
        self.expect(Tok::LBrace)?;
        let mut c = ComponentSpec {
            name,
            ..Default::default()
        };
        while !self.eat(&Tok::RBrace) {
            let isp = self.span();
            if self.eat_kw("domain") {
                c.domain.extend(self.name_list(Tok::Semi)?);
            } else if self.eat_kw("context") {
                c.context.extend(self.name_list(Tok::Semi)?);
            } else if self.eat_kw("rule") {
                self.spans
                    .insert(format!("component {}, rule {}", c.name, c.rules.len()), isp);
                c.rules.push(self.row()?);
            } else {
                return Err(Diagnostic::new(
                    isp,
                    format!(
                        "expected `domain`, `context`, `rule` or `}}`, found {}",
                        self.peek().describe()
                    ),
                ));
            }
        }
        self.spec.components.push(c);
        Ok(())
    }

    /// `{c=b, ...}`
    fn assignment(&mut self) -> PResult<Vec<(String, String)>> {
        self.expect(Tok::LBrace)?;
        let mut pairs = Vec::new();
        if self.eat(&Tok::RBrace) {
            return Ok(pairs);
        }
        loop {
            let c = self.name()?;
            self.expect(Tok::Eq)?;
            let b = self.name()?;
            pairs.push((c, b));
            if self.eat(&Tok::RBrace) {
                return Ok(pairs);
            }
            self.expect(Tok::Comma)?;
        }
    }

    fn atom(&mut self, sp: Span) -> PResult<()> {
        let name = self.name()?;
        self.declare("atom", &name, sp)?;
        self.expect(Tok::Eq)?;
        let def = if self.is_kw("p") && *self.peek_at(1) == Tok::LBracket {
            self.advance();
            self.advance();
            let component = self.name()?;
            self.expect(Tok::Eq)?;
            let behaviour = self.name()?;
            self.expect(Tok::RBracket)?;
            AtomSpecDef::Behaviour { component, behaviour }
        } else {
            self.expect(Tok::LBrace)?;
            let mut sets = Vec::new();
            if !self.eat(&Tok::RBrace) {
                loop {
                    sets.push(self.assignment()?);
                    if self.eat(&Tok::RBrace) {
                        break;
                    }
                    self.expect(Tok::Comma)?;
                }
            }
            AtomSpecDef::Explicit(sets)
        };
        self.expect(Tok::Semi)?;
        self.spec.atoms.push(AtomSpec { name, def });
        Ok(())
    }

    fn intervention(&mut self, sp: Span) -> PResult<()> {
        let name = self.name()?;
        self.declare("intervention", &name, sp)?;
        let mut t = InterventionSpec {
            name,
            targets: Vec::new(),
            cost: None,
            penalty: None,
        };
        loop {
            if self.eat_kw("cost") {
                t.cost = Some(self.number()?);
            } else if self.eat_kw("penalty") {
                t.penalty = Some(self.number()?);
            } else {
                break;
            }
        }
        self.expect(Tok::LBrace)?;
        while !self.eat(&Tok::RBrace) {
            let tsp = self.span();
            let component = self.name()?;
            let tloc = format!("intervention {}, target {component}", t.name);
            self.spans.insert(tloc.clone(), tsp);
            if self.eat(&Tok::Arrow) {
                let b = self.name()?;
                self.expect(Tok::Semi)?;
                t.targets.push(TargetSpec::constant(&component, &b));
            } else {
                self.expect_kw("reads")?;
                self.expect(Tok::LParen)?;
                let reads = self.name_list(Tok::RParen)?;
                self.expect(Tok::LBrace)?;
                let mut rules = Vec::new();
                while !self.eat(&Tok::RBrace) {
                    self.spans.insert(format!("{tloc}, rule {}", rules.len()), self.span());
                    self.expect_kw("rule")?;
                    rules.push(self.row()?);
                }
                t.targets.push(TargetSpec {
                    component,
                    reads,
                    rules,
                });
            }
        }
        self.spec.interventions.push(t);
        Ok(())
    }

    fn config_ref(&mut self) -> PResult<String> {
        let sp = self.span();
        let n = self.name()?;
        if !self.raw_configs.iter().any(|(c, _, _)| *c == n) {
            return Err(Diagnostic::new(sp, format!("unknown configuration `{n}`")));
        }
        Ok(n)
    }

    fn query(&mut self, kw: &str) -> PResult<Query> {
        Ok(match kw {
            "check" => {
                let config = self.config_ref()?;
                self.expect(Tok::Turnstile)?;
                Query::Check {
                    config,
                    formula: self.formula()?,
                }
            }
            "cause" | "chain" => {
                self.expect_kw("from")?;
                let from = self.config_ref()?;
                self.expect_kw("to")?;
                let to = self.config_ref()?;
                self.expect_kw("effect")?;
                let effect = self.component_set()?;
                if kw == "chain" {
                    self.expect_kw("max")?;
                    let max = self.number()? as usize;
                    Query::Chain { from, to, effect, max }
                } else {
                    let candidate = if self.eat_kw("candidate") {
                        Some(self.component_set()?)
                    } else {
                        None
                    };
                    let strict = self.eat_kw("strict");
                    Query::Cause {
                        from,
                        to,
                        effect,
                        candidate,
                        strict,
                    }
                }
            }
            "bisim" => {
                let left = self.config_ref()?;
                self.expect(Tok::Tilde)?;
                let right = self.name()?;
                let other = if self.eat_kw("in") {
                    match self.advance() {
                        Tok::Str(s) => Some(s),
                        t => {
                            return Err(Diagnostic::new(
                                self.span(),
                                format!("expected a path string, found {}", t.describe()),
                            ))
                        }
                    }
                } else {
                    if !self.raw_configs.iter().any(|(c, _, _)| *c == right) {
                        return Err(self.unexpected_config(&right));
                    }
                    None
                };
                Query::Bisim { left, right, other }
            }
            "decompose" => {
                let left = self.component_set()?;
                let right = self.component_set()?;
                Query::Decompose { left, right }
            }
            _ => {
                let config = self.config_ref()?;
                self.expect_kw("fail")?;
                let fail = self.formula()?;
                match kw {
                    "recover" => Query::Recover { config, fail },
                    "mincost" => Query::Mincost { config, fail },
                    _ => Query::Utility { config, fail },
                }
            }
        })
    }

    fn unexpected_config(&self, name: &str) -> Diagnostic {
        Diagnostic::new(
            self.toks[self.pos.saturating_sub(1)].1,
            format!("unknown configuration `{name}`"),
        )
    }

    // formula := implies
    // implies := or ('->' implies)?
    // or := and ('|' and)*
    // and := unary ('&' unary)*
    // unary := '!' unary | modal unary | primary
    // primary := true | false | name | p[c=b] | chi(f) | '(' formula ')' ['*' '(' formula ')']
    pub(super) fn formula(&mut self) -> PResult<Formula> {
        let lhs = self.disjunction()?;
        if self.eat(&Tok::Arrow) {
            return Ok(lhs.implies(self.formula()?));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> PResult<Formula> {
        let mut lhs = self.conjunction()?;
        while self.eat(&Tok::Pipe) {
            lhs = lhs.or(self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> PResult<Formula> {
        let mut lhs = self.unary()?;
        while self.eat(&Tok::Amp) {
            lhs = lhs.and(self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Formula> {
        let sp = self.span();
        match self.peek() {
            Tok::Bang => {
                self.advance();
                Ok(self.unary()?.not())
            }
            Tok::LBracket => {
                self.advance();
                self.expect(Tok::RBracket)?;
                let plus = self.eat(&Tok::Plus);
                let body = self.unary()?;
                Ok(if plus { body.box_plus() } else { body.boxed() })
            }
            Tok::Lt => {
                self.advance();
                if self.eat(&Tok::Gt) {
                    let plus = self.eat(&Tok::Plus);
                    let body = self.unary()?;
                    return Ok(if plus { body.diamond_plus() } else { body.diamond() });
                }
                if self.eat(&Tok::Question) {
                    self.expect(Tok::Gt)?;
                    return Ok(Formula::InterveneExists(Box::new(self.unary()?)));
                }
                let theta = self.name()?;
                self.expect(Tok::Gt)?;
                self.pending.push(Pending::Intervention(theta.clone(), sp));
                Ok(Formula::intervene(&theta, self.unary()?))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> PResult<Formula> {
        let sp = self.span();
        match self.peek().clone() {
            Tok::LParen => {
                self.advance();
                let inner = self.formula()?;
                self.expect(Tok::RParen)?;
                if self.eat(&Tok::Star) {
                    if *self.peek() != Tok::LParen {
                        return Err(self.unexpected("`(`; operands of `*` must be parenthesized"));
                    }
                    self.advance();
                    let rhs = self.formula()?;
                    self.expect(Tok::RParen)?;
                    if *self.peek() == Tok::Star {
                        return Err(self.unexpected("an operator other than `*`; parenthesize nested `*`"));
                    }
                    return Ok(inner.star(rhs));
                }
                Ok(inner)
            }
            Tok::Ident(s) if s == "true" => {
                self.advance();
                Ok(Formula::True)
            }
            Tok::Ident(s) if s == "false" => {
                self.advance();
                Ok(Formula::False)
            }
            Tok::Ident(s) if s == "p" && *self.peek_at(1) == Tok::LBracket => {
                self.advance();
                self.advance();
                let c = self.name()?;
                self.expect(Tok::Eq)?;
                let b = self.name()?;
                self.expect(Tok::RBracket)?;
                self.pending.push(Pending::Behaviour(c.clone(), b.clone(), sp));
                Ok(Formula::is(&c, &b))
            }
            Tok::Ident(s) if s == "chi" && *self.peek_at(1) == Tok::LParen => {
                self.advance();
                self.advance();
                let f = self.config_ref()?;
                self.expect(Tok::RParen)?;
                let (_, pairs, _) = self.raw_configs.iter().find(|(c, _, _)| *c == f).unwrap();
                let order = |c: &str| {
                    self.spec
                        .components
                        .iter()
                        .position(|d| d.name == c)
                        .unwrap_or(usize::MAX)
                };
                let mut pairs = pairs.clone();
                pairs.sort_by_key(|(c, _)| order(c));
                Ok(Formula::all(pairs.iter().map(|(c, b)| Formula::is(c, b))))
            }
            Tok::Ident(_) | Tok::Str(_) => {
                let n = self.name()?;
                if let Some((_, phi)) = self.formulas.iter().find(|(m, _)| *m == n) {
                    return Ok(phi.clone());
                }
                self.pending.push(Pending::Atom(n.clone(), sp));
                Ok(Formula::Atom(n))
            }
            _ => Err(self.unexpected("a formula")),
        }
    }

    fn check_pending(&mut self, model: &SystemModel) {
        for p in std::mem::take(&mut self.pending) {
            let d = match p {
                Pending::Atom(n, sp) if model.atom(&n).is_none() => {
                    Some(Diagnostic::new(sp, format!("unknown atom or formula `{n}`")))
                }
                Pending::Intervention(n, sp) if model.intervention(&n).is_none() => {
                    Some(Diagnostic::new(sp, format!("unknown intervention `{n}`")))
                }
                Pending::Component(c, sp) if model.component_id(&c).is_none() => {
                    Some(Diagnostic::new(sp, format!("unknown component `{c}`")))
                }
                Pending::Behaviour(c, b, sp) => match model.component_id(&c) {
                    None => Some(Diagnostic::new(sp, format!("unknown component `{c}`"))),
                    Some(id) if model.component(id).behaviour(&b).is_none() => {
                        Some(Diagnostic::new(sp, format!("`{b}` is not a behaviour of `{c}`")))
                    }
                    _ => None,
                },
                _ => None,
            };
            self.diags.extend(d);
        }
    }

    fn finish(mut self) -> Result<Document, Diagnostics> {
        let report = crate::model::validate_model(&self.spec);
        if !report.is_empty() {
            for v in report.violations {
                // The most specific recorded location: rule, target, then declaration.
                let parts: Vec<&str> = v.location.split(", ").collect();
                let sp = (1..=parts.len())
                    .rev()
                    .find_map(|k| self.spans.get(&parts[..k].join(", ")).copied())
                    .unwrap_or_default();
                self.diags
                    .push(Diagnostic::new(sp, format!("{}: {}", v.location, v.message)));
            }
            return Err(Diagnostics(self.diags));
        }
        let model = match SystemModel::new(&self.spec) {
            Ok(m) => m,
            Err(e) => {
                self.diags.push(Diagnostic::new(Span::default(), e.to_string()));
                return Err(Diagnostics(self.diags));
            }
        };
        for (name, _) in &self.formulas {
            if model.atom(name).is_some() {
                let sp = self.spans.get(&format!("formula {name}")).copied().unwrap_or_default();
                self.diags.push(Diagnostic::new(
                    sp,
                    format!("formula `{name}` shadows an atom of the same name"),
                ));
            }
        }
        self.check_pending(&model);
        let mut configs = Vec::new();
        for (name, pairs, sp) in &self.raw_configs {
            match model.configuration(pairs) {
                Ok(f) => configs.push((name.clone(), f)),
                Err(e) => self
                    .diags
                    .push(Diagnostic::new(*sp, format!("configuration `{name}`: {e}"))),
            }
        }
        if !self.diags.is_empty() {
            return Err(Diagnostics(self.diags));
        }
        let (queries, query_spans) = self.queries.into_iter().unzip();
        Ok(Document {
            model,
            configs,
            formulas: self.formulas,
            queries,
            query_spans,
        })
    }
}
