//! The named expressions: Q, the ansatz Φ with symbols a₁…a₁₀₅, Ω, the
//! right-hand side of the main identity, the skew identity, and the table of
//! solved coefficients. Terms live in `data/*.terms` as transcribed text.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::bigphase::{Field, ScalarExpr};
use crate::exactnum::{AffineForm, Rational, Symbol};
use crate::sym::{parse_manifest, Arg, Factor, SymExpr, Term};

pub const Q_TERMS: &str = include_str!("../data/q.terms");
pub const PHI_TERMS: &str = include_str!("../data/phi.terms");
pub const OMEGA_TERMS: &str = include_str!("../data/omega.terms");
pub const THM_RHS_TERMS: &str = include_str!("../data/thm_rhs.terms");
pub const LEMMA_TABLE: &str = include_str!("../data/lemma.txt");

/// Number of ansatz symbols.
pub const SYMBOL_COUNT: Symbol = 105;
/// The symbol left undetermined by the relations.
pub const FREE_SYMBOL: Symbol = 2;

fn cached(cell: &'static OnceLock<SymExpr>, text: &str, name: &str) -> &'static SymExpr {
    cell.get_or_init(|| parse_manifest(text).unwrap_or_else(|e| panic!("{name} manifest: {e}")))
}

/// Q(W1, W2) as transcribed, with `W1`/`W2` placeholders.
pub fn q_manifest() -> &'static SymExpr {
    static CELL: OnceLock<SymExpr> = OnceLock::new();
    cached(&CELL, Q_TERMS, "Q")
}

/// Φ(W1, W2): the leading term followed by the 105 symbol terms.
pub fn phi_manifest() -> &'static SymExpr {
    static CELL: OnceLock<SymExpr> = OnceLock::new();
    cached(&CELL, PHI_TERMS, "Phi")
}

pub fn omega_manifest() -> &'static SymExpr {
    static CELL: OnceLock<SymExpr> = OnceLock::new();
    cached(&CELL, OMEGA_TERMS, "Omega")
}

/// The main identity's right-hand side without its a₂·(Ω + Ω) part.
pub fn thm_rhs_manifest() -> &'static SymExpr {
    static CELL: OnceLock<SymExpr> = OnceLock::new();
    cached(&CELL, THM_RHS_TERMS, "theorem right-hand side")
}

/// Solved coefficients, each affine in a₂.
pub fn lemma_coeff_table() -> &'static BTreeMap<Symbol, AffineForm> {
    static CELL: OnceLock<BTreeMap<Symbol, AffineForm>> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut out = BTreeMap::new();
        for (i, line) in LEMMA_TABLE.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (lhs, rhs) = line.split_once('=').unwrap_or_else(|| panic!("lemma line {}: missing '='", i + 1));
            let sym: Symbol = lhs.trim().trim_start_matches('a').parse().expect("lemma symbol");
            out.insert(sym, rhs.parse().unwrap_or_else(|e| panic!("lemma line {}: {e}", i + 1)));
        }
        out
    })
}

fn w(f: Field) -> Arg {
    Arg::Fixed(f)
}

fn leading(w1: &Arg, w2: &Arg, sign: i64) -> SymExpr {
    let t = |x: &Arg| Arg::T(Box::new(x.clone()));
    SymExpr {
        terms: vec![Term {
            coeff: AffineForm::constant(Rational::integer(sign)),
            factors: vec![Factor { genus: 3, args: vec![t(&t(w1)), t(w2)] }],
        }],
    }
}

pub fn q_sym(w1: Field, w2: Field) -> SymExpr {
    q_manifest().instantiate(&w(w1), &w(w2))
}

pub fn phi_sym(w1: Field, w2: Field) -> SymExpr {
    phi_manifest().instantiate(&w(w1), &w(w2))
}

pub fn omega_sym(w1: Field, w2: Field) -> SymExpr {
    omega_manifest().instantiate(&w(w1), &w(w2))
}

/// Φ with every symbol other than a₂ replaced by its solved value.
pub fn phi_solved_sym(w1: Field, w2: Field) -> SymExpr {
    let table = lemma_coeff_table();
    let mut out = phi_sym(w1, w2);
    for t in &mut out.terms {
        t.coeff = t.coeff.substitute(table);
    }
    out
}

/// Right-hand side of the main identity with a₂ fixed.
pub fn thm_rhs_sym(w1: Field, w2: Field, a2: &Rational) -> SymExpr {
    let omega = omega_sym(w1, w2).concat(&omega_sym(w2, w1)).scale(a2);
    thm_rhs_manifest().instantiate(&w(w1), &w(w2)).concat(&omega)
}

/// ⟨⟨T²(W1) T(W2)⟩⟩₃ minus the right-hand side.
pub fn main_identity_sym(w1: Field, w2: Field, a2: &Rational) -> SymExpr {
    leading(&w(w1), &w(w2), 1).concat(&thm_rhs_sym(w1, w2, a2).scale(&Rational::integer(-1)))
}

/// ⟨⟨T²W1 TW2⟩⟩₃ − ⟨⟨T²W2 TW1⟩⟩₃ − (Q(W1,W2) − Q(W2,W1))/7.
pub fn skew_sym(w1: Field, w2: Field) -> SymExpr {
    let seventh = Rational::new(1, 7);
    leading(&w(w1), &w(w2), 1)
        .concat(&leading(&w(w2), &w(w1), -1))
        .concat(&q_sym(w1, w2).scale(&-&seventh))
        .concat(&q_sym(w2, w1).scale(&seventh))
}

pub fn build_q(w1: Field, w2: Field) -> ScalarExpr {
    q_sym(w1, w2).expand()
}

pub fn build_phi(w1: Field, w2: Field) -> ScalarExpr {
    phi_sym(w1, w2).expand()
}

pub fn build_omega(w1: Field, w2: Field) -> ScalarExpr {
    omega_sym(w1, w2).expand()
}

pub fn build_thm_rhs(w1: Field, w2: Field, a2: &Rational) -> ScalarExpr {
    thm_rhs_sym(w1, w2, a2).expand()
}

pub fn build_skew(w1: Field, w2: Field) -> ScalarExpr {
    skew_sym(w1, w2).expand()
}
