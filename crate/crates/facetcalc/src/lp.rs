//! Exact feasibility and one-dimensional projection for small linear systems.
//!
//! Facet realizability, cone emptiness, and region bounds all reduce to
//! questions about systems of rational equalities and (possibly strict)
//! inequalities in ≤ 4 variables. Fourier–Motzkin elimination is exact and
//! entirely adequate at that size, and unlike a simplex phase-1 it handles
//! strict inequalities natively.

use crate::exact::{dot, kernel, qi, scale, solve, sub, zeros, Q, QVec};
use num_traits::{Signed, Zero};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Eq,
    Le,
    Lt,
}

/// A single constraint `a · x REL b`.
#[derive(Clone, Debug)]
pub struct Con {
    pub a: QVec,
    pub rel: Rel,
    pub b: Q,
}

impl Con {
    pub fn eq(a: QVec, b: Q) -> Self {
        Con { a, rel: Rel::Eq, b }
    }
    pub fn le(a: QVec, b: Q) -> Self {
        Con { a, rel: Rel::Le, b }
    }
    pub fn lt(a: QVec, b: Q) -> Self {
        Con { a, rel: Rel::Lt, b }
    }
    pub fn ge(a: QVec, b: Q) -> Self {
        Con::le(a.iter().map(|x| -x).collect(), -b)
    }
    pub fn gt(a: QVec, b: Q) -> Self {
        Con::lt(a.iter().map(|x| -x).collect(), -b)
    }
}

/// `a · t < b` (strict) or `≤ b`.
#[derive(Clone, Debug)]
struct Ineq {
    a: QVec,
    strict: bool,
    b: Q,
}

/// A one-sided bound produced by projection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bnd {
    Unbounded,
    /// Bound value and whether it is strict (not attained).
    Val(Q, bool),
}

/// Split constraints into the equality part and the inequality part.
fn split(cons: &[Con]) -> (Vec<(QVec, Q)>, Vec<Ineq>) {
    let mut eqs = Vec::new();
    let mut ineqs = Vec::new();
    for c in cons {
        match c.rel {
            Rel::Eq => eqs.push((c.a.clone(), c.b)),
            Rel::Le => ineqs.push(Ineq { a: c.a.clone(), strict: false, b: c.b }),
            Rel::Lt => ineqs.push(Ineq { a: c.a.clone(), strict: true, b: c.b }),
        }
    }
    (eqs, ineqs)
}

/// Solve the equalities, returning a particular point and a basis of the
/// solution space, then rewrite the inequalities in the basis coordinates.
fn reduce_equalities(
    n: usize,
    cons: &[Con],
) -> Option<(QVec, Vec<QVec>, Vec<Ineq>)> {
    let (eqs, ineqs) = split(cons);
    let rows: Vec<QVec> = eqs.iter().map(|(a, _)| a.clone()).collect();
    let rhs: QVec = eqs.iter().map(|(_, b)| *b).collect();
    let x0 = solve(&rows, &rhs, n)?;
    let basis = kernel(&rows, n);
    let t_ineqs = ineqs
        .iter()
        .map(|i| Ineq {
            a: basis.iter().map(|bv| dot(&i.a, bv)).collect(),
            strict: i.strict,
            b: i.b - dot(&i.a, &x0),
        })
        .collect();
    Some((x0, basis, t_ineqs))
}

/// Eliminate the last of `k` variables by Fourier–Motzkin.
/// Returns the reduced system plus the lower/upper bound expressions for the
/// eliminated variable (as affine forms in the remaining k-1 variables).
#[allow(clippy::type_complexity)]
fn fm_step(k: usize, ineqs: &[Ineq]) -> (Vec<Ineq>, Vec<(QVec, Q, bool)>, Vec<(QVec, Q, bool)>) {
    let i = k - 1;
    let mut rest = Vec::new();
    // Bound expressions: t_i ≥ b + a·t' (lowers) / t_i ≤ b + a·t' (uppers).
    let mut lowers: Vec<(QVec, Q, bool)> = Vec::new();
    let mut uppers: Vec<(QVec, Q, bool)> = Vec::new();
    for c in ineqs {
        let ci = c.a[i];
        let mut a_rest = c.a[..i].to_vec();
        if ci.is_zero() {
            rest.push(Ineq { a: a_rest, strict: c.strict, b: c.b });
        } else {
            // ci * t_i ≤ b − a'·t'  →  t_i ≤/≥ (b − a'·t')/ci
            let inv = ci.recip();
            a_rest = scale(&a_rest, -inv);
            let b = c.b * inv;
            if ci.is_positive() {
                uppers.push((a_rest, b, c.strict));
            } else {
                lowers.push((a_rest, b, c.strict));
            }
        }
    }
    for (la, lb, ls) in &lowers {
        for (ua, ub, us) in &uppers {
            // lower ≤ upper: (la − ua)·t' ≤ ub − lb
            rest.push(Ineq {
                a: sub(la, ua),
                strict: *ls || *us,
                b: ub - lb,
            });
        }
    }
    (rest, lowers, uppers)
}

/// Find a point satisfying all inequalities over `k` free variables.
fn fm_witness(k: usize, ineqs: &[Ineq]) -> Option<QVec> {
    if k == 0 {
        for c in ineqs {
            if c.b.is_negative() || (c.b.is_zero() && c.strict) {
                return None;
            }
        }
        return Some(Vec::new());
    }
    let (rest, lowers, uppers) = fm_step(k, ineqs);
    let t = fm_witness(k - 1, &rest)?;
    let lo = lowers
        .iter()
        .map(|(a, b, s)| (b + dot(a, &t), *s))
        .max_by(|x, y| x.0.cmp(&y.0).then(x.1.cmp(&y.1)));
    let hi = uppers
        .iter()
        .map(|(a, b, s)| (b + dot(a, &t), *s))
        .min_by(|x, y| x.0.cmp(&y.0).then(y.1.cmp(&x.1)));
    let v = match (lo, hi) {
        (None, None) => Q::zero(),
        (Some((l, _)), None) => l + qi(1),
        (None, Some((h, _))) => h - qi(1),
        (Some((l, ls)), Some((h, hs))) => {
            if l < h {
                (l + h) / qi(2)
            } else {
                debug_assert!(l == h && !ls && !hs, "FM produced an empty interval");
                l
            }
        }
    };
    let mut out = t;
    out.push(v);
    Some(out)
}

/// A point satisfying every constraint, if one exists.
pub fn feasible_point(n: usize, cons: &[Con]) -> Option<QVec> {
    let (x0, basis, t_ineqs) = reduce_equalities(n, cons)?;
    let t = fm_witness(basis.len(), &t_ineqs)?;
    let mut x = x0;
    for (tv, bv) in t.iter().zip(&basis) {
        x = crate::exact::add(&x, &scale(bv, *tv));
    }
    Some(x)
}

pub fn is_feasible(n: usize, cons: &[Con]) -> bool {
    feasible_point(n, cons).is_some()
}

/// Range of the linear functional `f · x` over the solution set.
/// Returns `None` when the constraint set is infeasible; otherwise the
/// (lower, upper) bounds with strictness flags.
pub fn functional_range(n: usize, cons: &[Con], f: &[Q]) -> Option<(Bnd, Bnd)> {
    // Introduce y with y = f·x, putting y FIRST so that FM (which eliminates
    // from the back) projects everything else away.
    let mut lifted: Vec<Con> = Vec::with_capacity(cons.len() + 1);
    // variables: (y, x_0..x_{n-1})
    for c in cons {
        let mut a = vec![Q::zero()];
        a.extend_from_slice(&c.a);
        lifted.push(Con { a, rel: c.rel, b: c.b });
    }
    let mut a = vec![qi(-1)];
    a.extend_from_slice(f);
    lifted.push(Con::eq(a, Q::zero()));

    let (x0, basis, mut t_ineqs) = reduce_equalities(n + 1, &lifted)?;
    // y = x0[0] + Σ basis_j[0] t_j
    let e0 = x0[0];
    let e: QVec = basis.iter().map(|b| b[0]).collect();
    if crate::exact::is_zero_vec(&e) {
        fm_witness(basis.len(), &t_ineqs)?;
        return Some((Bnd::Val(e0, false), Bnd::Val(e0, false)));
    }
    // Change variables so y itself becomes the first coordinate: pick pivot j
    // with e_j ≠ 0 and substitute t_j = (y − e0 − Σ_{m≠j} e_m t_m) / e_j.
    let j = e.iter().position(|v| !v.is_zero()).unwrap();
    let k = basis.len();
    let inv = e[j].recip();
    // New variable order: (t_m for m ≠ j ..., y); y last would be eliminated,
    // so put y first: (y, t_m for m≠j ...).
    let others: Vec<usize> = (0..k).filter(|&m| m != j).collect();
    let mut new_ineqs = Vec::with_capacity(t_ineqs.len());
    for c in t_ineqs.drain(..) {
        // a·t ≤ b with t_j substituted.
        let cj = c.a[j];
        let mut na = zeros(1 + others.len());
        // t_j = inv*y − inv*e0 − Σ_{m≠j} inv*e_m t_m
        na[0] = cj * inv;
        let nb = c.b + cj * inv * e0;
        for (idx, &m) in others.iter().enumerate() {
            na[1 + idx] = c.a[m] - cj * inv * e[m];
        }
        new_ineqs.push(Ineq { a: na, strict: c.strict, b: nb });
    }
    // Eliminate all t' variables, leaving constraints on y alone.
    let mut sys = new_ineqs;
    let mut vars = 1 + others.len();
    while vars > 1 {
        let (rest, _, _) = fm_step(vars, &sys);
        sys = rest;
        vars -= 1;
    }
    // Read off bounds on y.
    let mut lo = Bnd::Unbounded;
    let mut hi = Bnd::Unbounded;
    for c in &sys {
        let cy = c.a[0];
        if cy.is_zero() {
            if c.b.is_negative() || (c.b.is_zero() && c.strict) {
                return None;
            }
            continue;
        }
        let v = c.b / cy;
        if cy.is_positive() {
            // y ≤ v
            hi = match hi {
                Bnd::Unbounded => Bnd::Val(v, c.strict),
                Bnd::Val(h, hs) => {
                    if v < h || (v == h && c.strict) {
                        Bnd::Val(v, c.strict || (v == h && hs))
                    } else {
                        Bnd::Val(h, hs)
                    }
                }
            };
        } else {
            lo = match lo {
                Bnd::Unbounded => Bnd::Val(v, c.strict),
                Bnd::Val(l, ls) => {
                    if v > l || (v == l && c.strict) {
                        Bnd::Val(v, c.strict || (v == l && ls))
                    } else {
                        Bnd::Val(l, ls)
                    }
                }
            };
        }
    }
    if let (Bnd::Val(l, ls), Bnd::Val(h, hs)) = (lo, hi) {
        if l > h || (l == h && (ls || hs)) {
            return None;
        }
    }
    Some((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q;

    #[test]
    fn triangle_interior() {
        // x > 0, y > 0, x + y < 1
        let cons = vec![
            Con::gt(vec![qi(1), qi(0)], qi(0)),
            Con::gt(vec![qi(0), qi(1)], qi(0)),
            Con::lt(vec![qi(1), qi(1)], qi(1)),
        ];
        let p = feasible_point(2, &cons).unwrap();
        assert!(p[0] > qi(0) && p[1] > qi(0) && p[0] + p[1] < qi(1));
    }

    #[test]
    fn infeasible_strict() {
        let cons = vec![
            Con::ge(vec![qi(1)], qi(1)),
            Con::lt(vec![qi(1)], qi(1)),
        ];
        assert!(feasible_point(1, &cons).is_none());
    }

    #[test]
    fn equality_mix() {
        // x + y = 1, x ≥ 2 → y ≤ −1; with y > 0 infeasible.
        let cons = vec![
            Con::eq(vec![qi(1), qi(1)], qi(1)),
            Con::ge(vec![qi(1), qi(0)], qi(2)),
            Con::gt(vec![qi(0), qi(1)], qi(0)),
        ];
        assert!(feasible_point(2, &cons).is_none());
    }

    #[test]
    fn range_on_segment() {
        // 0 ≤ x ≤ 1, y = 2x; range of x + y is [0, 3].
        let cons = vec![
            Con::ge(vec![qi(1), qi(0)], qi(0)),
            Con::le(vec![qi(1), qi(0)], qi(1)),
            Con::eq(vec![qi(2), qi(-1)], qi(0)),
        ];
        let (lo, hi) = functional_range(2, &cons, &[qi(1), qi(1)]).unwrap();
        assert_eq!(lo, Bnd::Val(qi(0), false));
        assert_eq!(hi, Bnd::Val(qi(3), false));
    }

    #[test]
    fn range_open_interval() {
        let cons = vec![
            Con::gt(vec![qi(1)], qi(0)),
            Con::lt(vec![qi(1)], qi(1)),
        ];
        let (lo, hi) = functional_range(1, &cons, &[q(1, 2)]).unwrap();
        assert_eq!(lo, Bnd::Val(qi(0), true));
        assert_eq!(hi, Bnd::Val(q(1, 2), true));
    }

    #[test]
    fn range_unbounded() {
        let cons = vec![Con::ge(vec![qi(1)], qi(3))];
        let (lo, hi) = functional_range(1, &cons, &[qi(1)]).unwrap();
        assert_eq!(lo, Bnd::Val(qi(3), false));
        assert_eq!(hi, Bnd::Unbounded);
    }
}
