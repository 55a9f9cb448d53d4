//! Textual circuit language.
//!
//! A `.ptc` file declares named systems and boxes, then a `main` diagram:
//!
//! ```text
//! # a noisy bit, broadcast and recombined
//! system A = classical(2)
//! box f : A -> A = [[0.9, 0.2], [0.1, 0.8]]
//! main = (id(A) * disc(A)) . copy(A) . f
//! ```
//!
//! `g . f` is sequential composition with `f` acting first, `*` is parallel
//! composition and binds tighter, `trace(e, k)` loops the `k`-th atom
//! (1-based) of `e` back onto itself. Primitives: `id(T)`, `disc(T)`,
//! `cup(A)`, `cap(A)`, `copy(A)`, `swap(A, B)`, `one`. Matrices are
//! row-major with real or `a+bi` entries; quantum boxes may instead give
//! `kraus [K1, K2, ...]`. `#` starts a line comment.
//!
//! Parsing type-checks every expression against the declared systems, so
//! errors carry source positions. [`pretty_print`] emits canonical text
//! that reparses to a structurally equal file.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::PtError;
use crate::process::{self, Atom, Process, SystemType};

/// A parsed circuit file: ordered declarations.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitFile {
    pub decls: Vec<Decl>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decl {
    System(SystemDecl),
    Box(BoxDecl),
    Main(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemDecl {
    pub name: String,
    pub atom: Atom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxDecl {
    pub name: String,
    /// System names; empty means the trivial type `I`.
    pub dom: Vec<String>,
    pub cod: Vec<String>,
    pub body: BoxBody,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoxBody {
    /// Row-major transfer matrix literal.
    Matrix(Vec<Vec<Complex64>>),
    /// Kraus operator list for a quantum box.
    Kraus(Vec<Vec<Vec<Complex64>>>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Seq(Box<Expr>, Box<Expr>),
    Par(Box<Expr>, Box<Expr>),
    Prim(String),
    Id(Vec<String>),
    Disc(Vec<String>),
    Cup(String),
    Cap(String),
    Copy(String),
    Swap(String, String),
    Trace(Box<Expr>, usize),
    One,
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64, bool),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Equals,
    Colon,
    Arrow,
    Dot,
    Star,
    Plus,
    Minus,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, PtError> {
    let mut tokens = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();
    macro_rules! push {
        ($t:expr, $c:expr) => {
            tokens.push(Token {
                tok: $t,
                line,
                col: $c,
            })
        };
    }
    while let Some(&c) = chars.peek() {
        let start_col = col;
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '(' | ')' | '[' | ']' | ',' | '=' | ':' | '.' | '*' | '+' => {
                chars.next();
                col += 1;
                let t = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    ',' => Tok::Comma,
                    '=' => Tok::Equals,
                    ':' => Tok::Colon,
                    '.' => Tok::Dot,
                    '*' => Tok::Star,
                    _ => Tok::Plus,
                };
                push!(t, start_col);
            }
            '-' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'>') {
                    chars.next();
                    col += 1;
                    push!(Tok::Arrow, start_col);
                } else {
                    push!(Tok::Minus, start_col);
                }
            }
            c if c.is_ascii_digit() => {
                let mut lit = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() || c == '.' {
                        lit.push(c);
                        chars.next();
                        col += 1;
                    } else if c == 'e' || c == 'E' {
                        // Exponent only when followed by a digit or sign.
                        let mut ahead = chars.clone();
                        ahead.next();
                        match ahead.peek() {
                            Some(&d) if d.is_ascii_digit() || d == '+' || d == '-' => {
                                lit.push('e');
                                chars.next();
                                col += 1;
                                if let Some(&s) = chars.peek() {
                                    if s == '+' || s == '-' {
                                        lit.push(s);
                                        chars.next();
                                        col += 1;
                                    }
                                }
                            }
                            _ => break,
                        }
                    } else {
                        break;
                    }
                }
                let imaginary = if chars.peek() == Some(&'i') {
                    let mut ahead = chars.clone();
                    ahead.next();
                    match ahead.peek() {
                        Some(&c) if c.is_alphanumeric() || c == '_' => false,
                        _ => {
                            chars.next();
                            col += 1;
                            true
                        }
                    }
                } else {
                    false
                };
                let value: f64 = lit.parse().map_err(|_| PtError::Parse {
                    line,
                    col: start_col,
                    message: format!("malformed number literal `{lit}`"),
                })?;
                push!(Tok::Number(value, imaginary), start_col);
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut name = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_alphanumeric() || c == '_' {
                        name.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                push!(Tok::Ident(name), start_col);
            }
            other => {
                return Err(PtError::Parse {
                    line,
                    col: start_col,
                    message: format!("unexpected character `{other}`"),
                });
            }
        }
    }
    tokens.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(tokens)
}

// ---------------------------------------------------------------------------
// Parser (with inline type checking)

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    systems: HashMap<String, Atom>,
    boxes: HashMap<String, (SystemType, SystemType)>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, token: &Token, message: String) -> PtError {
        PtError::Parse {
            line: token.line,
            col: token.col,
            message,
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Token, PtError> {
        let t = self.next();
        if t.tok == tok {
            Ok(t)
        } else {
            Err(self.err(&t, format!("expected {what}")))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, Token), PtError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t.clone())),
            _ => Err(self.err(&t, format!("expected {what}"))),
        }
    }

    fn expect_usize(&mut self, what: &str) -> Result<usize, PtError> {
        let t = self.next();
        match t.tok {
            Tok::Number(v, false) if v.fract() == 0.0 && v >= 0.0 => Ok(v as usize),
            _ => Err(self.err(&t, format!("expected {what}"))),
        }
    }

    fn file(&mut self) -> Result<CircuitFile, PtError> {
        let mut decls = Vec::new();
        loop {
            let t = self.peek().clone();
            match &t.tok {
                Tok::Eof => break,
                Tok::Ident(kw) => match kw.as_str() {
                    "system" => decls.push(Decl::System(self.system_decl()?)),
                    "box" => decls.push(Decl::Box(self.box_decl()?)),
                    "main" => {
                        self.next();
                        self.expect(Tok::Equals, "`=` after `main`")?;
                        let (expr, _, _) = self.expr()?;
                        decls.push(Decl::Main(expr));
                    }
                    other => {
                        return Err(self.err(
                            &t,
                            format!("expected `system`, `box`, or `main`, found `{other}`"),
                        ))
                    }
                },
                _ => {
                    return Err(self.err(&t, "expected a declaration".into()));
                }
            }
        }
        Ok(CircuitFile { decls })
    }

    fn system_decl(&mut self) -> Result<SystemDecl, PtError> {
        self.next();
        let (name, name_tok) = self.expect_ident("system name")?;
        if self.systems.contains_key(&name) || self.boxes.contains_key(&name) {
            return Err(self.err(&name_tok, format!("duplicate name `{name}`")));
        }
        self.expect(Tok::Equals, "`=`")?;
        let (kind, kind_tok) = self.expect_ident("`classical` or `quantum`")?;
        self.expect(Tok::LParen, "`(`")?;
        let dim = self.expect_usize("a dimension")?;
        self.expect(Tok::RParen, "`)`")?;
        if dim == 0 {
            return Err(self.err(&kind_tok, "dimension must be positive".into()));
        }
        let atom = match kind.as_str() {
            "classical" => Atom::Classical(dim),
            "quantum" => Atom::Quantum(dim),
            other => {
                return Err(self.err(
                    &kind_tok,
                    format!("expected `classical` or `quantum`, found `{other}`"),
                ))
            }
        };
        self.systems.insert(name.clone(), atom);
        Ok(SystemDecl { name, atom })
    }

    fn type_names(&mut self) -> Result<(Vec<String>, Token), PtError> {
        let (first, first_tok) = self.expect_ident("a system name or `I`")?;
        if first == "I" {
            return Ok((Vec::new(), first_tok));
        }
        let mut names = vec![first];
        while self.peek().tok == Tok::Star {
            self.next();
            let (name, _) = self.expect_ident("a system name")?;
            names.push(name);
        }
        Ok((names, first_tok))
    }

    fn resolve_type(&self, names: &[String], at: &Token) -> Result<SystemType, PtError> {
        let mut atoms = Vec::with_capacity(names.len());
        for n in names {
            match self.systems.get(n) {
                Some(a) => atoms.push(*a),
                None => return Err(self.err(at, format!("unknown system `{n}`"))),
            }
        }
        Ok(SystemType::from_atoms(atoms))
    }

    fn resolve_atom(&self, name: &str, at: &Token) -> Result<Atom, PtError> {
        self.systems
            .get(name)
            .copied()
            .ok_or_else(|| self.err(at, format!("unknown system `{name}`")))
    }

    fn box_decl(&mut self) -> Result<BoxDecl, PtError> {
        self.next();
        let (name, name_tok) = self.expect_ident("box name")?;
        if self.systems.contains_key(&name) || self.boxes.contains_key(&name) {
            return Err(self.err(&name_tok, format!("duplicate name `{name}`")));
        }
        self.expect(Tok::Colon, "`:`")?;
        let (dom_names, dom_tok) = self.type_names()?;
        self.expect(Tok::Arrow, "`->`")?;
        let (cod_names, cod_tok) = self.type_names()?;
        let dom = self.resolve_type(&dom_names, &dom_tok)?;
        let cod = self.resolve_type(&cod_names, &cod_tok)?;
        self.expect(Tok::Equals, "`=`")?;
        let body_tok = self.peek().clone();
        let body = if matches!(&body_tok.tok, Tok::Ident(k) if k == "kraus") {
            self.next();
            self.expect(Tok::LBracket, "`[` opening the Kraus list")?;
            let mut ops = vec![self.matrix()?];
            while self.peek().tok == Tok::Comma {
                self.next();
                ops.push(self.matrix()?);
            }
            self.expect(Tok::RBracket, "`]` closing the Kraus list")?;
            BoxBody::Kraus(ops)
        } else {
            BoxBody::Matrix(self.matrix()?)
        };
        let decl = BoxDecl {
            name: name.clone(),
            dom: dom_names,
            cod: cod_names,
            body,
        };
        elaborate_box(&decl, &dom, &cod).map_err(|e| match e {
            PtError::Parse { .. } => e,
            other => self.err(&body_tok, other.to_string()),
        })?;
        self.boxes.insert(name, (dom, cod));
        Ok(decl)
    }

    fn matrix(&mut self) -> Result<Vec<Vec<Complex64>>, PtError> {
        let open = self.expect(Tok::LBracket, "`[` opening a matrix")?;
        let mut rows = vec![self.row()?];
        while self.peek().tok == Tok::Comma {
            self.next();
            rows.push(self.row()?);
        }
        self.expect(Tok::RBracket, "`]` closing a matrix")?;
        if rows.iter().any(|r| r.len() != rows[0].len()) {
            return Err(self.err(&open, "matrix rows have unequal lengths".into()));
        }
        Ok(rows)
    }

    fn row(&mut self) -> Result<Vec<Complex64>, PtError> {
        self.expect(Tok::LBracket, "`[` opening a row")?;
        let mut entries = vec![self.entry()?];
        while self.peek().tok == Tok::Comma {
            self.next();
            entries.push(self.entry()?);
        }
        self.expect(Tok::RBracket, "`]` closing a row")?;
        Ok(entries)
    }

    fn entry(&mut self) -> Result<Complex64, PtError> {
        let mut sign = 1.0;
        if self.peek().tok == Tok::Minus {
            self.next();
            sign = -1.0;
        }
        let t = self.next();
        let (first, first_imag) = match t.tok {
            Tok::Number(v, imag) => (sign * v, imag),
            _ => return Err(self.err(&t, "expected a numeric entry".into())),
        };
        if first_imag {
            return Ok(Complex64::new(0.0, first));
        }
        let op = match self.peek().tok {
            Tok::Plus => 1.0,
            Tok::Minus => -1.0,
            _ => return Ok(Complex64::new(first, 0.0)),
        };
        // Only consume the sign when an imaginary part follows.
        if let Tok::Number(_, true) = self.tokens[self.pos + 1].tok {
            self.next();
            let t = self.next();
            match t.tok {
                Tok::Number(v, true) => Ok(Complex64::new(first, op * v)),
                _ => unreachable!(),
            }
        } else {
            Ok(Complex64::new(first, 0.0))
        }
    }

    /// Parse an expression, returning the AST and its checked type.
    fn expr(&mut self) -> Result<(Expr, SystemType, SystemType), PtError> {
        let (mut acc, mut dom, cod) = self.par_expr()?;
        while self.peek().tok == Tok::Dot {
            let dot = self.next();
            let (rhs, rdom, rcod) = self.par_expr()?;
            // `g . f`: f acts first, so g's domain must match f's codomain.
            if dom != rcod {
                return Err(self.err(
                    &dot,
                    format!(
                        "type mismatch in `.`: left side expects {} but right side produces {}",
                        dom, rcod
                    ),
                ));
            }
            acc = Expr::Seq(Box::new(acc), Box::new(rhs));
            dom = rdom;
        }
        Ok((acc, dom, cod))
    }

    fn par_expr(&mut self) -> Result<(Expr, SystemType, SystemType), PtError> {
        let (mut acc, mut dom, mut cod) = self.atom_expr()?;
        while self.peek().tok == Tok::Star {
            self.next();
            let (rhs, rdom, rcod) = self.atom_expr()?;
            acc = Expr::Par(Box::new(acc), Box::new(rhs));
            dom = dom.tensor(&rdom);
            cod = cod.tensor(&rcod);
        }
        Ok((acc, dom, cod))
    }

    fn atom_expr(&mut self) -> Result<(Expr, SystemType, SystemType), PtError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::LParen => {
                self.next();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => match name.as_str() {
                "id" => {
                    self.next();
                    self.expect(Tok::LParen, "`(`")?;
                    let (names, at) = self.type_names()?;
                    self.expect(Tok::RParen, "`)`")?;
                    let ty = self.resolve_type(&names, &at)?;
                    Ok((Expr::Id(names), ty.clone(), ty))
                }
                "disc" => {
                    self.next();
                    self.expect(Tok::LParen, "`(`")?;
                    let (names, at) = self.type_names()?;
                    self.expect(Tok::RParen, "`)`")?;
                    let ty = self.resolve_type(&names, &at)?;
                    Ok((Expr::Disc(names), ty, SystemType::trivial()))
                }
                "cup" | "cap" | "copy" => {
                    let kw = name.clone();
                    self.next();
                    self.expect(Tok::LParen, "`(`")?;
                    let (sys, at) = self.expect_ident("a system name")?;
                    self.expect(Tok::RParen, "`)`")?;
                    let atom = self.resolve_atom(&sys, &at)?;
                    let single = SystemType::atom(atom);
                    let double = single.tensor(&single);
                    Ok(match kw.as_str() {
                        "cup" => (Expr::Cup(sys), SystemType::trivial(), double),
                        "cap" => (Expr::Cap(sys), double, SystemType::trivial()),
                        _ => (Expr::Copy(sys), single, double),
                    })
                }
                "swap" => {
                    self.next();
                    self.expect(Tok::LParen, "`(`")?;
                    let (a, at_a) = self.expect_ident("a system name")?;
                    self.expect(Tok::Comma, "`,`")?;
                    let (b, at_b) = self.expect_ident("a system name")?;
                    self.expect(Tok::RParen, "`)`")?;
                    let atom_a = self.resolve_atom(&a, &at_a)?;
                    let atom_b = self.resolve_atom(&b, &at_b)?;
                    Ok((
                        Expr::Swap(a, b),
                        SystemType::atom(atom_a).tensor(&SystemType::atom(atom_b)),
                        SystemType::atom(atom_b).tensor(&SystemType::atom(atom_a)),
                    ))
                }
                "trace" => {
                    self.next();
                    self.expect(Tok::LParen, "`(`")?;
                    let (inner, dom, cod) = self.expr()?;
                    let comma = self.expect(Tok::Comma, "`,`")?;
                    let k = self.expect_usize("a 1-based atom index")?;
                    self.expect(Tok::RParen, "`)`")?;
                    if k == 0 || k > dom.factors().len() || k > cod.factors().len() {
                        return Err(self.err(
                            &comma,
                            format!("trace index {k} out of range for {} -> {}", dom, cod),
                        ));
                    }
                    if dom.factors()[k - 1] != cod.factors()[k - 1] {
                        return Err(self.err(
                            &comma,
                            format!(
                                "trace index {k} connects unequal atoms in {} -> {}",
                                dom, cod
                            ),
                        ));
                    }
                    let mut datoms = dom.factors().to_vec();
                    let mut catoms = cod.factors().to_vec();
                    datoms.remove(k - 1);
                    catoms.remove(k - 1);
                    Ok((
                        Expr::Trace(Box::new(inner), k),
                        SystemType::from_atoms(datoms),
                        SystemType::from_atoms(catoms),
                    ))
                }
                "one" => {
                    self.next();
                    Ok((Expr::One, SystemType::trivial(), SystemType::trivial()))
                }
                other => {
                    self.next();
                    match self.boxes.get(other) {
                        Some((dom, cod)) => {
                            Ok((Expr::Prim(other.into()), dom.clone(), cod.clone()))
                        }
                        None => Err(self.err(&t, format!("unknown name `{other}`"))),
                    }
                }
            },
            _ => Err(self.err(&t, "expected an expression".into())),
        }
    }
}

/// Parse and type-check a circuit file.
pub fn parse(text: &str) -> Result<CircuitFile, PtError> {
    let tokens = lex(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        systems: HashMap::new(),
        boxes: HashMap::new(),
    };
    parser.file()
}

// ---------------------------------------------------------------------------
// Evaluator

fn elaborate_box(
    decl: &BoxDecl,
    dom: &SystemType,
    cod: &SystemType,
) -> Result<Process, PtError> {
    match &decl.body {
        BoxBody::Matrix(rows) => {
            let r = rows.len();
            let c = rows.first().map_or(0, |row| row.len());
            if r != cod.carrier_dim() || c != dom.carrier_dim() {
                return Err(PtError::ShapeMismatch {
                    context: "box matrix",
                    expected: format!("{}x{}", cod.carrier_dim(), dom.carrier_dim()),
                    found: format!("{r}x{c}"),
                });
            }
            let mut flat = Vec::with_capacity(r * c);
            for row in rows {
                flat.extend_from_slice(row);
            }
            Process::new(dom.clone(), cod.clone(), crate::mat::CMatrix::new(r, c, flat)?)
        }
        BoxBody::Kraus(ops) => {
            let mats: Vec<crate::mat::CMatrix> = ops
                .iter()
                .map(|rows| {
                    let r = rows.len();
                    let c = rows.first().map_or(0, |row| row.len());
                    let mut flat = Vec::with_capacity(r * c);
                    for row in rows {
                        flat.extend_from_slice(row);
                    }
                    crate::mat::CMatrix::new(r, c, flat)
                })
                .collect::<Result<_, _>>()?;
            process::from_kraus(dom, cod, &mats)
        }
    }
}

struct Env {
    systems: HashMap<String, Atom>,
    boxes: HashMap<String, Process>,
}

impl Env {
    fn type_of(&self, names: &[String]) -> Result<SystemType, PtError> {
        let mut atoms = Vec::with_capacity(names.len());
        for n in names {
            atoms.push(self.atom_of(n)?);
        }
        Ok(SystemType::from_atoms(atoms))
    }

    fn atom_of(&self, name: &str) -> Result<Atom, PtError> {
        self.systems
            .get(name)
            .copied()
            .ok_or_else(|| PtError::InvalidArgument(format!("unknown system `{name}`")))
    }
}

fn eval_expr(expr: &Expr, env: &Env) -> Result<Process, PtError> {
    match expr {
        Expr::Seq(g, f) => process::compose_seq(&eval_expr(g, env)?, &eval_expr(f, env)?),
        Expr::Par(a, b) => Ok(process::compose_par(
            &eval_expr(a, env)?,
            &eval_expr(b, env)?,
        )),
        Expr::Prim(name) => env
            .boxes
            .get(name)
            .cloned()
            .ok_or_else(|| PtError::InvalidArgument(format!("unknown box `{name}`"))),
        Expr::Id(names) => Ok(process::identity(&env.type_of(names)?)),
        Expr::Disc(names) => Ok(process::discard(&env.type_of(names)?)),
        Expr::Cup(name) => process::cup(&SystemType::atom(env.atom_of(name)?)),
        Expr::Cap(name) => process::cap(&SystemType::atom(env.atom_of(name)?)),
        Expr::Copy(name) => Ok(match env.atom_of(name)? {
            Atom::Classical(n) => process::broadcast(n),
            Atom::Quantum(d) => process::dephasing_copy(d),
        }),
        Expr::Swap(a, b) => Ok(process::swap(env.atom_of(a)?, env.atom_of(b)?)),
        Expr::Trace(inner, k) => process::trace_loop(&eval_expr(inner, env)?, k - 1),
        Expr::One => Ok(process::number(Complex64::new(1.0, 0.0))),
    }
}

fn build_env(file: &CircuitFile) -> Result<Env, PtError> {
    let mut env = Env {
        systems: HashMap::new(),
        boxes: HashMap::new(),
    };
    for decl in &file.decls {
        match decl {
            Decl::System(s) => {
                env.systems.insert(s.name.clone(), s.atom);
            }
            Decl::Box(b) => {
                let dom = env.type_of(&b.dom)?;
                let cod = env.type_of(&b.cod)?;
                let p = elaborate_box(b, &dom, &cod)?;
                env.boxes.insert(b.name.clone(), p);
            }
            Decl::Main(_) => {}
        }
    }
    Ok(env)
}

/// Evaluate the `main` diagram of a file to a process.
pub fn evaluate(file: &CircuitFile) -> Result<Process, PtError> {
    let env = build_env(file)?;
    let main = file
        .decls
        .iter()
        .find_map(|d| match d {
            Decl::Main(e) => Some(e),
            _ => None,
        })
        .ok_or_else(|| PtError::InvalidArgument("file has no `main` declaration".into()))?;
    eval_expr(main, &env)
}

/// Evaluate a named box of a file.
pub fn evaluate_box(file: &CircuitFile, name: &str) -> Result<Process, PtError> {
    let env = build_env(file)?;
    env.boxes
        .get(name)
        .cloned()
        .ok_or_else(|| PtError::InvalidArgument(format!("unknown box `{name}`")))
}

/// Parse and evaluate in one step.
pub fn run(text: &str) -> Result<Process, PtError> {
    evaluate(&parse(text)?)
}

// ---------------------------------------------------------------------------
// Pretty-printer

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn fmt_entry(z: Complex64) -> String {
    if z.im == 0.0 {
        fmt_f64(z.re)
    } else if z.re == 0.0 {
        format!("{}i", fmt_f64(z.im))
    } else if z.im < 0.0 {
        format!("{}-{}i", fmt_f64(z.re), fmt_f64(-z.im))
    } else {
        format!("{}+{}i", fmt_f64(z.re), fmt_f64(z.im))
    }
}

fn fmt_matrix(rows: &[Vec<Complex64>]) -> String {
    let body = rows
        .iter()
        .map(|row| {
            let entries = row.iter().map(|&z| fmt_entry(z)).collect::<Vec<_>>();
            format!("[{}]", entries.join(", "))
        })
        .collect::<Vec<_>>();
    format!("[{}]", body.join(", "))
}

fn fmt_type(names: &[String]) -> String {
    if names.is_empty() {
        "I".into()
    } else {
        names.join(" * ")
    }
}

fn fmt_expr(expr: &Expr, out: &mut String, level: u8) {
    let own = match expr {
        Expr::Seq(..) => 1,
        Expr::Par(..) => 2,
        _ => 3,
    };
    if own < level {
        out.push('(');
    }
    match expr {
        Expr::Seq(g, f) => {
            fmt_expr(g, out, 1);
            out.push_str(" . ");
            fmt_expr(f, out, 2);
        }
        Expr::Par(a, b) => {
            fmt_expr(a, out, 2);
            out.push_str(" * ");
            fmt_expr(b, out, 3);
        }
        Expr::Prim(name) => out.push_str(name),
        Expr::Id(names) => {
            let _ = write!(out, "id({})", fmt_type(names));
        }
        Expr::Disc(names) => {
            let _ = write!(out, "disc({})", fmt_type(names));
        }
        Expr::Cup(a) => {
            let _ = write!(out, "cup({a})");
        }
        Expr::Cap(a) => {
            let _ = write!(out, "cap({a})");
        }
        Expr::Copy(a) => {
            let _ = write!(out, "copy({a})");
        }
        Expr::Swap(a, b) => {
            let _ = write!(out, "swap({a}, {b})");
        }
        Expr::Trace(inner, k) => {
            out.push_str("trace(");
            fmt_expr(inner, out, 1);
            let _ = write!(out, ", {k})");
        }
        Expr::One => out.push_str("one"),
    }
    if own < level {
        out.push(')');
    }
}

/// Canonical text for a circuit file; reparses to a structurally equal AST.
pub fn pretty_print(file: &CircuitFile) -> String {
    let mut out = String::new();
    for decl in &file.decls {
        match decl {
            Decl::System(s) => {
                let kind = match s.atom {
                    Atom::Classical(n) => format!("classical({n})"),
                    Atom::Quantum(d) => format!("quantum({d})"),
                };
                let _ = writeln!(out, "system {} = {}", s.name, kind);
            }
            Decl::Box(b) => {
                let body = match &b.body {
                    BoxBody::Matrix(rows) => fmt_matrix(rows),
                    BoxBody::Kraus(ops) => {
                        let mats = ops.iter().map(|m| fmt_matrix(m)).collect::<Vec<_>>();
                        format!("kraus [{}]", mats.join(", "))
                    }
                };
                let _ = writeln!(
                    out,
                    "box {} : {} -> {} = {}",
                    b.name,
                    fmt_type(&b.dom),
                    fmt_type(&b.cod),
                    body
                );
            }
            Decl::Main(expr) => {
                out.push_str("main = ");
                fmt_expr(expr, &mut out, 1);
                out.push('\n');
            }
        }
    }
    out
}
