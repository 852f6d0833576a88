//! Instance file parsing and emission.
//!
//! Five formats, all whitespace-tokenized with a leading header keyword
//! (except minimum-ratio files, which start with a bare dimension count):
//!
//! ```text
//! m2vpi <n> <m>        followed by m lines  u v gamma cost
//! 2vpi <n> <m>         followed by m lines  a u b v c
//! dmdp <n> <m>         followed by m lines  u v gamma cost   (gamma in (0,1])
//! sfm table <n>        followed by the a-vector and 2^n set values
//! sfm cut <n> <m>      followed by the a-vector and m lines  u v w
//! <m>                  followed by c, d, and 0/1 domain vectors
//! ```
//!
//! Rationals are written `p/q` or as integers; float mode accepts decimals.
//! Emitters produce the same layout, so generated instances re-parse
//! byte-for-byte.

use std::cmp::Ordering;
use std::fmt;

use fracopt::dmdp::DmdpInstance;
use fracopt::fraccomb::ExplicitDomain;
use fracopt::gaingraph::GainGraph;
use fracopt::m2vpi::Tvpi2System;
use fracopt::numerics::{sign_eps, Sign};
use fracopt::sfm::{CutFn, SubmodularFn, TableFn};
use fracopt::{ArithMode, Scalar};

/// A syntax or validation error, located by line and column (both 1-based).
#[derive(Debug)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

/// Any instance the CLI can ingest, discriminated by the file header.
pub enum Instance {
    M2vpi(GainGraph),
    Tvpi(Tvpi2System),
    Dmdp(DmdpInstance),
    Sfm { h: Box<dyn SubmodularFn>, a: Vec<Scalar> },
    MinRatio { domain: ExplicitDomain, c: Vec<Scalar>, d: Vec<Scalar> },
}

struct Cursor<'a> {
    toks: Vec<(usize, usize, &'a str)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        let mut toks = Vec::new();
        let mut last_line = 1;
        for (idx, line) in text.lines().enumerate() {
            let ln = idx + 1;
            last_line = ln;
            let mut start = None;
            for (i, ch) in line.char_indices() {
                if ch.is_whitespace() {
                    if let Some(s) = start.take() {
                        toks.push((ln, s + 1, &line[s..i]));
                    }
                } else if start.is_none() {
                    start = Some(i);
                }
            }
            if let Some(s) = start {
                toks.push((ln, s + 1, &line[s..]));
            }
        }
        Cursor { toks, pos: 0, last_line }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&'a str> {
        self.toks.get(self.pos).map(|&(_, _, t)| t)
    }

    fn next(&mut self, what: &str) -> Result<(usize, usize, &'a str), ParseError> {
        match self.toks.get(self.pos) {
            Some(&tok) => {
                self.pos += 1;
                Ok(tok)
            }
            None => Err(ParseError {
                line: self.last_line,
                column: 1,
                message: format!("expected {what}, found end of input"),
            }),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        let (line, column, tok) = self.next(&format!("`{kw}`"))?;
        if tok == kw {
            Ok(())
        } else {
            Err(ParseError { line, column, message: format!("expected `{kw}`, found `{tok}`") })
        }
    }

    fn usize_at(&mut self, what: &str) -> Result<(usize, usize, usize), ParseError> {
        let (line, column, tok) = self.next(what)?;
        match tok.parse() {
            Ok(v) => Ok((line, column, v)),
            Err(_) => {
                Err(ParseError { line, column, message: format!("bad {what} `{tok}`") })
            }
        }
    }

    fn usize(&mut self, what: &str) -> Result<usize, ParseError> {
        self.usize_at(what).map(|(_, _, v)| v)
    }

    /// A node/variable index, bounds-checked against `n`.
    fn index(&mut self, what: &str, n: usize) -> Result<usize, ParseError> {
        let (line, column, tok) = self.next(what)?;
        let v: usize = tok.parse().map_err(|_| ParseError {
            line,
            column,
            message: format!("bad {what} `{tok}`"),
        })?;
        if v >= n {
            return Err(ParseError {
                line,
                column,
                message: format!("{what} {v} is out of range (declared count {n})"),
            });
        }
        Ok(v)
    }

    fn scalar_at(
        &mut self,
        what: &str,
        mode: ArithMode,
    ) -> Result<(usize, usize, Scalar), ParseError> {
        let (line, column, tok) = self.next(what)?;
        match Scalar::parse(tok, mode) {
            Ok(s) => Ok((line, column, s)),
            Err(msg) => Err(ParseError { line, column, message: format!("bad {what}: {msg}") }),
        }
    }

    fn scalar(&mut self, what: &str, mode: ArithMode) -> Result<Scalar, ParseError> {
        self.scalar_at(what, mode).map(|(_, _, s)| s)
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.toks.get(self.pos) {
            None => Ok(()),
            Some(&(line, column, tok)) => Err(ParseError {
                line,
                column,
                message: format!("unexpected trailing token `{tok}`"),
            }),
        }
    }
}

/// Dispatch on the header keyword (a bare number means minimum-ratio).
pub fn parse_instance(text: &str, mode: ArithMode) -> Result<Instance, ParseError> {
    let cur = Cursor::new(text);
    match cur.peek() {
        Some("m2vpi") => Ok(Instance::M2vpi(parse_m2vpi(text, mode)?)),
        Some("2vpi") => Ok(Instance::Tvpi(parse_2vpi(text, mode)?)),
        Some("dmdp") => Ok(Instance::Dmdp(parse_dmdp(text, mode)?)),
        Some("sfm") => {
            let (h, a) = parse_sfm(text, mode)?;
            Ok(Instance::Sfm { h, a })
        }
        Some(tok) if tok.parse::<usize>().is_ok() => {
            let (domain, c, d) = parse_min_ratio(text, mode)?;
            Ok(Instance::MinRatio { domain, c, d })
        }
        Some(tok) => {
            let (line, column, _) = cur.toks[0];
            Err(ParseError { line, column, message: format!("unknown instance header `{tok}`") })
        }
        None => Err(ParseError { line: 1, column: 1, message: "empty instance file".into() }),
    }
}

fn arcs_into(
    cur: &mut Cursor,
    g: &mut GainGraph,
    m: usize,
    n: usize,
    mode: ArithMode,
    unit_cap: bool,
) -> Result<(), ParseError> {
    let one = Scalar::one(mode);
    for _ in 0..m {
        let u = cur.index("tail node", n)?;
        let v = cur.index("head node", n)?;
        let (line, column, gamma) = cur.scalar_at("gain factor", mode)?;
        if unit_cap && sign_eps(&(&gamma - &one), 0.0) == Sign::Pos {
            return Err(ParseError {
                line,
                column,
                message: format!("discount factor {gamma} must lie in (0, 1]"),
            });
        }
        let cost = cur.scalar("cost", mode)?;
        g.add_arc(u, v, gamma, cost).map_err(|_| ParseError {
            line,
            column,
            message: "gain factor must be strictly positive".into(),
        })?;
    }
    Ok(())
}

pub fn parse_m2vpi(text: &str, mode: ArithMode) -> Result<GainGraph, ParseError> {
    let mut cur = Cursor::new(text);
    cur.keyword("m2vpi")?;
    let n = cur.usize("node count")?;
    let m = cur.usize("arc count")?;
    let mut g = GainGraph::new(mode, n);
    arcs_into(&mut cur, &mut g, m, n, mode, false)?;
    cur.finish()?;
    Ok(g)
}

pub fn parse_2vpi(text: &str, mode: ArithMode) -> Result<Tvpi2System, ParseError> {
    let mut cur = Cursor::new(text);
    cur.keyword("2vpi")?;
    let n = cur.usize("variable count")?;
    let m = cur.usize("row count")?;
    let mut sys = Tvpi2System::new(mode, n);
    for _ in 0..m {
        let a = cur.scalar("coefficient", mode)?;
        let u = cur.index("variable", n)?;
        let b = cur.scalar("coefficient", mode)?;
        let v = cur.index("variable", n)?;
        let c = cur.scalar("right-hand side", mode)?;
        sys.add_row(a, u, b, v, c);
    }
    cur.finish()?;
    Ok(sys)
}

pub fn parse_dmdp(text: &str, mode: ArithMode) -> Result<DmdpInstance, ParseError> {
    let mut cur = Cursor::new(text);
    cur.keyword("dmdp")?;
    let n = cur.usize("node count")?;
    let m = cur.usize("arc count")?;
    let mut g = GainGraph::new(mode, n);
    arcs_into(&mut cur, &mut g, m, n, mode, true)?;
    cur.finish()?;
    DmdpInstance::new(g).map_err(|e| ParseError { line: 1, column: 1, message: e.to_string() })
}

#[allow(clippy::type_complexity)]
pub fn parse_sfm(
    text: &str,
    mode: ArithMode,
) -> Result<(Box<dyn SubmodularFn>, Vec<Scalar>), ParseError> {
    let mut cur = Cursor::new(text);
    cur.keyword("sfm")?;
    let (line, column, variant) = cur.next("`table` or `cut`")?;
    match variant {
        "table" => {
            let (nl, nc, n) = cur.usize_at("ground-set size")?;
            if n > 20 {
                return Err(ParseError {
                    line: nl,
                    column: nc,
                    message: format!("ground set of size {n} exceeds the exhaustive-scan cap"),
                });
            }
            let a: Vec<Scalar> = (0..n)
                .map(|_| cur.scalar("direction entry", mode))
                .collect::<Result<_, _>>()?;
            let values: Vec<Scalar> = (0..1usize << n)
                .map(|_| cur.scalar("set value", mode))
                .collect::<Result<_, _>>()?;
            cur.finish()?;
            let table = TableFn::new(n, values).map_err(|e| ParseError {
                line: nl,
                column: nc,
                message: e.to_string(),
            })?;
            Ok((Box::new(table), a))
        }
        "cut" => {
            let n = cur.usize("node count")?;
            let m = cur.usize("edge count")?;
            let a: Vec<Scalar> = (0..n)
                .map(|_| cur.scalar("direction entry", mode))
                .collect::<Result<_, _>>()?;
            let zero = Scalar::zero(mode);
            let mut edges = Vec::with_capacity(m);
            for _ in 0..m {
                let u = cur.index("edge endpoint", n)?;
                let v = cur.index("edge endpoint", n)?;
                let (wl, wc, w) = cur.scalar_at("edge weight", mode)?;
                if w.total_cmp(&zero) == Ordering::Less {
                    return Err(ParseError {
                        line: wl,
                        column: wc,
                        message: "cut weights must be nonnegative".into(),
                    });
                }
                edges.push((u, v, w));
            }
            cur.finish()?;
            let cut = CutFn::new(n, edges).map_err(|e| ParseError {
                line: 1,
                column: 1,
                message: e.to_string(),
            })?;
            Ok((Box::new(cut), a))
        }
        other => Err(ParseError {
            line,
            column,
            message: format!("expected `table` or `cut`, found `{other}`"),
        }),
    }
}

#[allow(clippy::type_complexity)]
pub fn parse_min_ratio(
    text: &str,
    mode: ArithMode,
) -> Result<(ExplicitDomain, Vec<Scalar>, Vec<Scalar>), ParseError> {
    let mut cur = Cursor::new(text);
    let (ml, mc, m) = cur.usize_at("dimension count")?;
    if m == 0 || m > 20 {
        return Err(ParseError {
            line: ml,
            column: mc,
            message: format!("dimension count {m} must lie in 1..=20"),
        });
    }
    let c: Vec<Scalar> =
        (0..m).map(|_| cur.scalar("numerator entry", mode)).collect::<Result<_, _>>()?;
    let d: Vec<Scalar> =
        (0..m).map(|_| cur.scalar("denominator entry", mode)).collect::<Result<_, _>>()?;
    let mut members = Vec::new();
    while !cur.at_end() {
        let (line, column, tok) = cur.next("domain vector")?;
        if tok.len() != m || !tok.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(ParseError {
                line,
                column,
                message: format!("domain vector `{tok}` is not a 0/1 string of length {m}"),
            });
        }
        members.push(tok.bytes().map(|b| b == b'1').collect());
    }
    let domain = ExplicitDomain::new(m, members).map_err(|e| ParseError {
        line: cur.last_line,
        column: 1,
        message: e.to_string(),
    })?;
    Ok((domain, c, d))
}

// ---------------------------------------------------------------------------
// Emission (canonical layout, byte-stable under re-parsing).
// ---------------------------------------------------------------------------

fn join<T: fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn emit_arcs(header: &str, g: &GainGraph) -> String {
    let mut out = format!("{header} {} {}\n", g.node_count(), g.arc_count());
    for a in 0..g.arc_count() {
        let arc = g.arc(a);
        out.push_str(&format!("{} {} {} {}\n", arc.tail, arc.head, arc.gamma, arc.cost));
    }
    out
}

pub fn emit_m2vpi(g: &GainGraph) -> String {
    emit_arcs("m2vpi", g)
}

pub fn emit_dmdp(inst: &DmdpInstance) -> String {
    emit_arcs("dmdp", inst.graph())
}

pub fn emit_2vpi(sys: &Tvpi2System) -> String {
    let mut out = format!("2vpi {} {}\n", sys.num_vars(), sys.rows().len());
    for row in sys.rows() {
        out.push_str(&format!("{} {} {} {} {}\n", row.a, row.u, row.b, row.v, row.c));
    }
    out
}

pub fn emit_sfm_table(h: &dyn SubmodularFn, a: &[Scalar]) -> String {
    let n = h.ground_size();
    let mut out = format!("sfm table {n}\n{}\n", join(a.iter()));
    out.push_str(&join((0..1u32 << n).map(|s| h.eval(s))));
    out.push('\n');
    out
}

pub fn emit_min_ratio(domain: &ExplicitDomain, c: &[Scalar], d: &[Scalar]) -> String {
    let mut out = format!("{}\n{}\n{}\n", c.len(), join(c.iter()), join(d.iter()));
    for member in domain.members() {
        let row: String = member.iter().map(|&b| if b { '1' } else { '0' }).collect();
        out.push_str(&row);
        out.push('\n');
    }
    out
}
