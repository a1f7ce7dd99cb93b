use std::collections::{HashMap, HashSet};
use std::marker::PhantomData;

use crate::error::{Error, Location, Result};
use crate::iset::{
    fresh_name, AffExpr, BasicMap, BasicSet, Constraint, MapSpace, SetSpace, Tuple, UMap, USet, Var,
};
use crate::num::{self, Coeff};
use crate::script::lexer::{tokenize, Tok};
use crate::script::{Definition, Expr, Script};

/// Names visible inside one set or map piece.
struct Scope<'a> {
    params: &'a [String],
    dims: Vec<String>,
    exists: Vec<String>,
}

impl Scope<'_> {
    fn lookup(&self, name: &str) -> Option<Var> {
        if let Some(d) = self.dims.iter().position(|n| n == name) {
            return Some(Var::Dim(d));
        }
        if let Some(e) = self.exists.iter().position(|n| n == name) {
            return Some(Var::Exists(e));
        }
        self.params.iter().position(|n| n == name).map(Var::Param)
    }

    fn taken(&self) -> HashSet<String> {
        self.params
            .iter()
            .chain(&self.dims)
            .chain(&self.exists)
            .cloned()
            .collect()
    }
}

enum Piece<C> {
    Set(BasicSet<C>),
    Map(BasicMap<C>),
}

pub(crate) struct Parser<C> {
    toks: Vec<(Tok, Location)>,
    pos: usize,
    defined: HashSet<String>,
    arities: HashMap<String, usize>,
    _coeff: PhantomData<C>,
}

impl<C: Coeff> Parser<C> {
    pub(crate) fn new(src: &str) -> Result<Self> {
        Ok(Self {
            toks: tokenize(src)?,
            pos: 0,
            defined: HashSet::new(),
            arities: HashMap::new(),
            _coeff: PhantomData,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn loc(&self) -> Location {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            at: self.loc(),
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.syntax(format!("expected {}, found {}", tok.describe(), self.peek().describe()))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => self.syntax(format!("expected identifier, found {}", other.describe())),
        }
    }

    pub(crate) fn script(&mut self) -> Result<Script<C>> {
        let mut definitions = Vec::new();
        let mut target = None;
        while *self.peek() != Tok::Eof {
            if target.is_some() {
                return self.syntax("statements after the codegen directive");
            }
            if self.is_keyword("codegen") && *self.peek_at(1) == Tok::LParen {
                self.bump();
                self.expect(Tok::LParen)?;
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Semi)?;
                target = Some(e);
                continue;
            }
            let name = self.ident()?;
            self.expect(Tok::Assign)?;
            let expr = self.expr()?;
            self.expect(Tok::Semi)?;
            self.defined.insert(name.clone());
            definitions.push(Definition { name, expr });
        }
        let Some(codegen) = target else {
            return self.syntax("missing codegen directive");
        };
        Ok(Script {
            definitions,
            codegen,
        })
    }

    /// A single literal or expression followed by end of input.
    pub(crate) fn standalone(&mut self) -> Result<Expr<C>> {
        let e = self.expr()?;
        if *self.peek() == Tok::Semi {
            self.bump();
        }
        if *self.peek() != Tok::Eof {
            return self.syntax(format!("unexpected {}", self.peek().describe()));
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<Expr<C>> {
        let mut lhs = self.operand()?;
        while *self.peek() == Tok::Star {
            self.bump();
            let rhs = self.operand()?;
            lhs = Expr::Apply(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn operand(&mut self) -> Result<Expr<C>> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let at = self.loc();
                self.bump();
                if !self.defined.contains(&name) {
                    return Err(Error::UnknownIdentifier { name, at });
                }
                Ok(Expr::Ref(name))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::LBracket | Tok::LBrace => self.literal(),
            other => self.syntax(format!("expected set or map, found {}", other.describe())),
        }
    }

    fn literal(&mut self) -> Result<Expr<C>> {
        let mut params = Vec::new();
        if *self.peek() == Tok::LBracket {
            self.bump();
            if *self.peek() != Tok::RBracket {
                loop {
                    let at = self.loc();
                    let p = self.ident()?;
                    if params.contains(&p) {
                        return Err(Error::Syntax {
                            at,
                            message: format!("duplicate parameter `{p}`"),
                        });
                    }
                    params.push(p);
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RBracket)?;
            self.expect(Tok::Arrow)?;
        }
        self.expect(Tok::LBrace)?;
        let mut sets = Vec::new();
        let mut maps = Vec::new();
        while *self.peek() != Tok::RBrace {
            let at = self.loc();
            match self.piece(&params)? {
                Piece::Set(s) => sets.push(s),
                Piece::Map(m) => maps.push(m),
            }
            if !sets.is_empty() && !maps.is_empty() {
                return Err(Error::Syntax {
                    at,
                    message: "a literal cannot mix set and map pieces".into(),
                });
            }
            if *self.peek() == Tok::Semi {
                self.bump();
            } else if *self.peek() != Tok::RBrace {
                return self.syntax(format!("expected `;` or `}}`, found {}", self.peek().describe()));
            }
        }
        self.expect(Tok::RBrace)?;
        if maps.is_empty() {
            Ok(Expr::Set(USet::new(params, sets)?))
        } else {
            Ok(Expr::Map(UMap::new(params, maps)?))
        }
    }

    fn piece(&mut self, params: &[String]) -> Result<Piece<C>> {
        let mut scope = Scope {
            params,
            dims: Vec::new(),
            exists: Vec::new(),
        };
        let mut constraints = Vec::new();
        let input = self.tuple(&mut scope, &mut constraints, true)?;
        let output = if *self.peek() == Tok::Arrow {
            self.bump();
            Some(self.tuple(&mut scope, &mut constraints, false)?)
        } else {
            None
        };
        if *self.peek() == Tok::Colon {
            self.bump();
            self.formula(&mut scope, &mut constraints)?;
        }
        let exists = scope.exists;
        let params: Vec<&str> = params.iter().map(String::as_str).collect();
        Ok(match output {
            None => Piece::Set(BasicSet::new(SetSpace::new(&params, input)?, exists, constraints)?),
            Some(out) => Piece::Map(BasicMap::new(MapSpace::new(&params, input, out)?, exists, constraints)?),
        })
    }

    fn tuple(
        &mut self,
        scope: &mut Scope<'_>,
        constraints: &mut Vec<Constraint<C>>,
        track_arity: bool,
    ) -> Result<Tuple> {
        let at = self.loc();
        let name = match self.peek().clone() {
            Tok::Ident(n) => {
                self.bump();
                Some(n)
            }
            _ => None,
        };
        self.expect(Tok::LBracket)?;
        let mut dims = Vec::new();
        if *self.peek() != Tok::RBracket {
            loop {
                let fresh = match (self.peek().clone(), self.peek_at(1)) {
                    (Tok::Ident(n), Tok::Comma | Tok::RBracket) if scope.lookup(&n).is_none() => {
                        self.bump();
                        Some(n)
                    }
                    _ => None,
                };
                let dim_name = match fresh {
                    Some(n) => {
                        scope.dims.push(n.clone());
                        n
                    }
                    None => {
                        let reuse = match (self.peek(), self.peek_at(1)) {
                            (Tok::Ident(n), Tok::Comma | Tok::RBracket) => Some(n.clone()),
                            _ => None,
                        };
                        let value = self.sum(scope)?;
                        let base = reuse
                            .map(|n| format!("{n}'"))
                            .unwrap_or_else(|| format!("o{}'", scope.dims.len()));
                        let n = fresh_name(&base, &scope.taken());
                        scope.dims.push(n.clone());
                        let d = AffExpr::var(Var::Dim(scope.dims.len() - 1));
                        constraints.push(Constraint::eq(d.minus(&value)?));
                        n
                    }
                };
                dims.push(dim_name);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RBracket)?;
        if track_arity {
            if let Some(n) = &name {
                match self.arities.get(n) {
                    Some(&expected) if expected != dims.len() => {
                        return Err(Error::ArityMismatch {
                            tuple: n.clone(),
                            expected,
                            found: dims.len(),
                            at,
                        })
                    }
                    Some(_) => {}
                    None => {
                        self.arities.insert(n.clone(), dims.len());
                    }
                }
            }
        }
        Ok(Tuple { name, dims })
    }

    fn formula(&mut self, scope: &mut Scope<'_>, out: &mut Vec<Constraint<C>>) -> Result<()> {
        if self.is_keyword("exists") {
            self.bump();
            let paren = *self.peek() == Tok::LParen;
            if paren {
                self.bump();
            }
            loop {
                let at = self.loc();
                let n = self.ident()?;
                if scope.lookup(&n).is_some() {
                    return Err(Error::Syntax {
                        at,
                        message: format!("existential `{n}` shadows another name"),
                    });
                }
                scope.exists.push(n);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
            self.expect(Tok::Colon)?;
            self.conjunction(scope, out)?;
            if paren {
                self.expect(Tok::RParen)?;
            }
            return Ok(());
        }
        self.conjunction(scope, out)
    }

    fn conjunction(&mut self, scope: &Scope<'_>, out: &mut Vec<Constraint<C>>) -> Result<()> {
        loop {
            self.chain(scope, out)?;
            if self.is_keyword("and") {
                self.bump();
            } else {
                return Ok(());
            }
        }
    }

    fn chain(&mut self, scope: &Scope<'_>, out: &mut Vec<Constraint<C>>) -> Result<()> {
        let mut lhs = self.sum(scope)?;
        let mut any = false;
        loop {
            let op = self.peek().clone();
            if !matches!(op, Tok::Le | Tok::Lt | Tok::Ge | Tok::Gt | Tok::Eq) {
                break;
            }
            self.bump();
            let rhs = self.sum(scope)?;
            let one = AffExpr::constant_expr(C::one());
            out.push(match op {
                Tok::Le => Constraint::geq(rhs.minus(&lhs)?),
                Tok::Lt => Constraint::geq(rhs.minus(&lhs)?.minus(&one)?),
                Tok::Ge => Constraint::geq(lhs.minus(&rhs)?),
                Tok::Gt => Constraint::geq(lhs.minus(&rhs)?.minus(&one)?),
                _ => Constraint::eq(lhs.minus(&rhs)?),
            });
            lhs = rhs;
            any = true;
        }
        if !any {
            return self.syntax(format!("expected comparison, found {}", self.peek().describe()));
        }
        Ok(())
    }

    fn sum(&mut self, scope: &Scope<'_>) -> Result<AffExpr<C>> {
        let mut acc = self.product(scope)?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    acc = acc.plus(&self.product(scope)?)?;
                }
                Tok::Minus => {
                    self.bump();
                    acc = acc.minus(&self.product(scope)?)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn product(&mut self, scope: &Scope<'_>) -> Result<AffExpr<C>> {
        let mut acc = self.unary(scope)?;
        while *self.peek() == Tok::Star {
            let at = self.loc();
            self.bump();
            let rhs = self.unary(scope)?;
            acc = multiply(&acc, &rhs).ok_or(Error::Syntax {
                at,
                message: "product of two non-constant expressions is not affine".into(),
            })??;
        }
        Ok(acc)
    }

    fn unary(&mut self, scope: &Scope<'_>) -> Result<AffExpr<C>> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return self.unary(scope)?.negated();
        }
        self.atom(scope)
    }

    fn atom(&mut self, scope: &Scope<'_>) -> Result<AffExpr<C>> {
        let at = self.loc();
        if !matches!(self.peek(), Tok::Int(_) | Tok::Ident(_) | Tok::LParen) {
            return self.syntax(format!("expected expression, found {}", self.peek().describe()));
        }
        match self.bump() {
            Tok::Int(v) => {
                let k: C = num::cast(v)?;
                // `2i` and `2(i + 1)` juxtaposition
                if matches!(self.peek(), Tok::Ident(s) if s != "and") || *self.peek() == Tok::LParen {
                    let rhs = self.atom(scope)?;
                    return rhs.scaled(k);
                }
                Ok(AffExpr::constant_expr(k))
            }
            Tok::Ident(name) => match scope.lookup(&name) {
                Some(v) => Ok(AffExpr::var(v)),
                None => Err(Error::UnknownIdentifier { name, at }),
            },
            Tok::LParen => {
                let e = self.sum(scope)?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            _ => unreachable!("checked above"),
        }
    }
}

fn multiply<C: Coeff>(a: &AffExpr<C>, b: &AffExpr<C>) -> Option<Result<AffExpr<C>>> {
    if a.is_constant() {
        Some(b.scaled(a.constant()))
    } else if b.is_constant() {
        Some(a.scaled(b.constant()))
    } else {
        None
    }
}
