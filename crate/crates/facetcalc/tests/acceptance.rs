//! Acceptance battery: one test per top-level criterion, each printing a
//! single pass line (run with `--nocapture` to see them; a panic marks the
//! criterion failed).

use facetcalc::apartment::{
    all_parabolic_subsets, automorphism_battery, barycenter, build_br,
    check_fixed_face_bijection, check_fixed_factorization, classify_xn, closure_facets,
    contains_twisted_levi, enumerate_facets, facet_in_xn, fundamental_alcove,
    openness_direct, openness_via_quotient, project_facet, sign_identity_check, stabilizes,
    stabilizes_mfacet, ApartmentAutomorphism, FacetEntry,
};
use facetcalc::exact::{q, qi, solve, transpose, zeros, Q, QVec};
use facetcalc::finclass::{
    build_gl, build_twisted_torus, ind_parabolic, is_cuspidal, levi_class_reps, levi_group,
    proj_cusp, verify_decomposition, ClassFunction,
};
use facetcalc::rootsys::{build_root_system, levi_lattice, CartanType, RootSystem};
use facetcalc::zcancel::{partition_sum_top, run_dichotomy, run_euler, run_partition};
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rs(name: &str) -> RootSystem {
    build_root_system(&name.parse::<CartanType>().unwrap())
}

fn pass(n: u32, what: &str) {
    println!("criterion {n} ({what}): pass");
}

#[test]
fn criterion_1_decomposition_identities() {
    for (n, p) in [(2usize, 2u32), (2, 3), (2, 5), (3, 2)] {
        let g = build_gl(n, p).unwrap();
        let full = levi_group(&g, &[n]);
        let nc = full.classes.len();
        let basis: Vec<usize> = if g.order() <= 200 { (0..nc).collect() } else { vec![0, nc - 1] };
        for cls in basis {
            let rep = verify_decomposition(&g, &ClassFunction::delta(cls, nc));
            assert!(rep.all_ok(), "GL{n}(F{p}) delta#{cls}: {rep:?}");
        }
    }
    // Twisted tori: diagonal tori with a permutation twist, n up to 3.
    for p in [3u32, 5] {
        for perm in [vec![0usize], vec![1, 0], vec![1, 2, 0], vec![1, 0, 2]] {
            let ts = build_twisted_torus(perm.len(), p, &perm).unwrap();
            for cls in 0..ts.classes.len() {
                let f = ClassFunction::delta(cls, ts.classes.len());
                assert!(
                    ts.verify_decomposition(&f),
                    "twisted torus n={} q={p} perm={perm:?} delta#{cls}",
                    perm.len()
                );
            }
        }
    }
    pass(1, "decomposition identities exact on small general linear groups and twisted tori");
}

#[test]
fn criterion_2_cuspidal_projection() {
    for (n, p) in [(2usize, 2u32), (2, 3)] {
        let g = build_gl(n, p).unwrap();
        let full = levi_group(&g, &[n]);
        let nc = full.classes.len();
        for cls in 0..nc {
            let f = ClassFunction::delta(cls, nc);
            let pf = proj_cusp(&g, &full, &f);
            assert_eq!(proj_cusp(&g, &full, &pf), pf, "idempotence on GL{n}(F{p})");
            assert!(is_cuspidal(&g, &full, &pf), "image cuspidal on GL{n}(F{p})");
        }
    }
    // Frozen value: projection of the constant function 1 on GL2(F2).
    let g = build_gl(2, 2).unwrap();
    let full = levi_group(&g, &[2]);
    let one = ClassFunction::constant(qi(1), full.classes.len());
    let mut vals = proj_cusp(&g, &full, &one).values;
    vals.sort();
    assert_eq!(vals, vec![q(-1, 2), q(1, 2), qi(1)]);
    pass(2, "cuspidal projection idempotent with cuspidal image, frozen value matches");
}

#[test]
fn criterion_3_induction_independence() {
    for (n, p) in [(2usize, 2u32), (2, 3), (3, 2)] {
        let g = build_gl(n, p).unwrap();
        let full = levi_group(&g, &[n]);
        for comp in levi_class_reps(&[n], true) {
            let m = levi_group(&g, &comp);
            let mc = m.classes.len();
            for cls in 0..mc {
                let f = ClassFunction::delta(cls, mc);
                let up = ind_parabolic(&g, &full, &m, &f, false);
                let lo = ind_parabolic(&g, &full, &m, &f, true);
                assert_eq!(up, lo, "GL{n}(F{p}) levi {comp:?} delta#{cls}");
            }
        }
    }
    pass(3, "parabolic induction independent of the choice of parabolic");
}

#[test]
fn criterion_4_partition_of_unity() {
    for t in ["A1", "A2", "B2"] {
        let r = rs(t);
        for (label, ok) in run_partition(&r).unwrap() {
            assert!(ok, "{t} {label}");
        }
    }
    // Rank 3: the chamber fractions around the origin vertex sum to 1 within
    // the Monte-Carlo tolerance.
    let a3 = rs("A3");
    let origin =
        facetcalc::apartment::facet_of_point(&a3, &zeros(a3.rank));
    let id = ApartmentAutomorphism::identity(a3.rank);
    let sum = partition_sum_top(&a3, &id, &origin).unwrap();
    assert!(
        (sum.value - 1.0).abs() <= 5e-3,
        "A3 origin sum {} (half-width {})",
        sum.value,
        sum.half_width
    );
    pass(4, "chamber fractions at each facet form a partition of unity");
}

#[test]
fn criterion_5_sign_identity() {
    for t in ["A1", "A2", "A1xA1"] {
        let r = rs(t);
        let alcove = fundamental_alcove(&r);
        let facets = enumerate_facets(&r, &build_br(&r, &alcove, 10)).unwrap();
        let battery = automorphism_battery(&r);
        let mut checked = 0usize;
        for sigma in &battery {
            for f in &facets {
                if !stabilizes(&r, sigma, f) {
                    continue;
                }
                assert!(sign_identity_check(&r, sigma, f).unwrap(), "{t} facet {f:?}");
                checked += 1;
            }
        }
        assert!(checked > 0, "{t}: no stabilized pairs");
    }
    pass(5, "sign identity holds on every stabilized facet of the radius-10 region");
}

#[test]
fn criterion_6_fixed_point_combinatorics() {
    for t in ["A1", "A2", "A1xA1", "B2"] {
        let r = rs(t);
        let alcove = fundamental_alcove(&r);
        let battery = automorphism_battery(&r);
        let lattice = levi_lattice(&r);
        for sigma in &battery {
            for f in closure_facets(&r, &alcove) {
                if !stabilizes(&r, sigma, &f) {
                    continue;
                }
                assert!(
                    check_fixed_face_bijection(&r, sigma, &f).unwrap(),
                    "{t}: face bijection at {f:?}"
                );
                for m in &lattice {
                    if !contains_twisted_levi(&r, sigma, &f, m) {
                        continue;
                    }
                    assert!(
                        check_fixed_factorization(&r, sigma, &f, m).unwrap(),
                        "{t}: factorization at {f:?} with {m:?}"
                    );
                }
            }
        }
        // Equivalence of the two openness criteria for quotient facets.
        let window = enumerate_facets(&r, &build_br(&r, &alcove, 1)).unwrap();
        for m in &lattice {
            for sigma in &battery {
                if !sigma.is_g_compact(r.rank) {
                    continue;
                }
                for f0 in window.iter().take(12) {
                    let fm = project_facet(&r, f0, m);
                    if !stabilizes_mfacet(&r, sigma, m, &fm) {
                        continue;
                    }
                    for f in &window {
                        assert_eq!(
                            openness_direct(&r, sigma, m, &fm, f),
                            openness_via_quotient(&r, sigma, m, &fm, f),
                            "{t}: openness criteria disagree at {f:?}"
                        );
                    }
                }
            }
        }
    }
    pass(6, "fixed-point face bijection, Levi factorization, and openness criteria agree");
}

/// Largest sum of |simple-root coordinates| over positive roots: points of
/// the core stratum at level N satisfy |alpha(x)| <= h_max * N for all roots.
fn max_height(r: &RootSystem) -> Q {
    let simple_rows: Vec<QVec> = r.simple.iter().map(|&i| r.roots[i].clone()).collect();
    let cols = transpose(&simple_rows);
    let mut h = qi(1);
    for &i in &r.positive {
        let c = solve(&cols, &r.roots[i], r.simple.len()).unwrap();
        let s: Q = c.iter().map(|x| x.abs()).sum();
        if s > h {
            h = s;
        }
    }
    h
}

#[test]
fn criterion_7_stratification() {
    let level = 5i64;
    for t in ["A1", "A2", "A1xA1", "B2"] {
        let r = rs(t);
        let all = all_parabolic_subsets(&r);
        let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
        for _ in 0..1000 {
            let x: QVec =
                (0..r.rank).map(|_| Q::new(rng.gen_range(-2000..=2000), 100)).collect();
            assert!(classify_xn(&r, &x, level, &all).is_some(), "{t}: no minimal parabolic");
        }
        // Facet-level stratification: each facet of a bounded window lies in
        // exactly one stratum, and the core stratum is bounded.
        let alcove = fundamental_alcove(&r);
        let facets = enumerate_facets(&r, &build_br(&r, &alcove, 8)).unwrap();
        let bound = max_height(&r) * qi(level);
        for f in &facets {
            let b = barycenter(&r, f);
            let p = classify_xn(&r, &b, level, &all).expect("classifiable");
            let hits =
                all.iter().filter(|cand| facet_in_xn(&r, f, level, cand, &all)).count();
            assert_eq!(hits, 1, "{t}: facet {f:?} in {hits} strata");
            if p.positive_part.is_empty() && p.levi.is_full(&r) {
                for &i in &r.positive {
                    assert!(r.eval(i, &b).abs() <= bound, "{t}: core stratum unbounded");
                }
            }
        }
    }
    pass(7, "level stratification partitions the facets and has a bounded core");
}

#[test]
fn criterion_8_truncated_sum_dichotomy() {
    let (level, radius) = (5i64, 40i64);
    for t in ["A1", "A2"] {
        let r = rs(t);
        let cases = run_dichotomy(&r, level, radius).unwrap();
        assert!(!cases.is_empty());
        for c in &cases {
            assert!(c.ok(), "{t} {}: {:?}", c.label, c.report);
        }
        let ex = |pred: &dyn Fn(&facetcalc::zcancel::DichotomyCase) -> bool, val: Q, what: &str| {
            assert!(
                cases.iter().any(|c| pred(c) && c.report.computed.exact == Some(val)),
                "{t}: no case `{what}` with value {val}"
            );
        };
        // Levi root lists carry both signs of each root.
        let full = 2 * r.num_positive();
        // Hand-checked values: a vertex carries the full sum, an open facet
        // cancels, a maximal Levi leaves a half-space, the torus leaves one
        // chamber out of |W|.
        ex(
            &|c| c.levi_roots.len() == full
                && c.mfacet.entries.iter().all(|(_, e)| matches!(e, FacetEntry::Eq(_))),
            qi(1),
            "full Levi at a vertex",
        );
        ex(
            &|c| c.levi_roots.len() == full
                && c.mfacet.entries.iter().any(|(_, e)| matches!(e, FacetEntry::Open(_))),
            qi(0),
            "full Levi at an open facet",
        );
        if t == "A1" {
            ex(&|c| c.levi_roots.is_empty(), q(1, 2), "torus");
        } else {
            ex(&|c| c.levi_roots.is_empty(), q(1, 6), "torus");
            ex(&|c| c.levi_roots.len() == 2, q(1, 2), "maximal Levi");
        }
    }
    pass(8, "truncated sums match the predicted dichotomy on large windows");
}

#[test]
fn criterion_9_euler_characteristic() {
    let mut saw_nonempty = false;
    let mut saw_empty = false;
    for (t, level, radius) in [("A1", 2i64, 6i64), ("A2", 2, 6)] {
        let r = rs(t);
        for (label, rep) in run_euler(&r, level, radius, 200).unwrap() {
            assert!(rep.euler_ok, "{t} {label}: sum {} expected {}", rep.alternating_sum, rep.expected);
            assert!(rep.convexity_ok, "{t} {label}: convexity probe failed");
            if rep.nonempty {
                saw_nonempty = true;
            } else {
                saw_empty = true;
            }
        }
    }
    assert!(saw_nonempty && saw_empty);
    pass(9, "alternating facet counts give 1 on nonempty slabs and 0 on empty ones");
}
